//! Exact rational arithmetic with prime-factorization support.
//!
//! [`Rational`] is a canonical arbitrary-precision fraction: reduced, with a
//! positive denominator, and zero stored as `0/1`. On top of it sit the
//! p-adic valuation `v_p`, coprimality over the rationals (at least one of
//! `v_p(a)`, `v_p(b)` vanishes for every prime), and the prime-valuation
//! embedding sending `a` to its vector of valuations over the ordered prime
//! support of a set. The embedding turns products into vector sums, which is
//! what the downstream set and energy machinery relies on.
//!
//! Factorization uses trial division against a sieved prime table (default
//! bound 10^6), then a deterministic Miller-Rabin check and Pollard-Brent
//! splitting for whatever survives. Prime factors above `u64::MAX` are
//! rejected rather than approximated.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;
use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::setops::RationalSet;

/// A canonical exact fraction: `gcd(|numerator|, denominator) = 1`,
/// `denominator >= 1`, zero represented as `0/1`.
///
/// ```
/// use sumprodlab::Rational;
///
/// let q: Rational = "4/-6".parse().unwrap();
/// assert_eq!(q.to_string(), "-2/3");
/// assert!("1/0".parse::<Rational>().is_err());
/// ```
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(BigRational);

impl Rational {
    /// Canonicalize `n/d`. Rejects `d = 0`; accepts negative `d` and moves
    /// the sign to the numerator.
    pub fn new(n: impl Into<BigInt>, d: impl Into<BigInt>) -> Result<Self> {
        let n = n.into();
        let d = d.into();
        if d.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        Ok(Rational(BigRational::new(n, d)))
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Self {
        Rational(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    /// True if numerator and denominator are both 1-digit in the sense of
    /// being integers, i.e. denominator 1.
    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn sign(&self) -> Sign {
        if self.0.is_zero() {
            Sign::Zero
        } else if self.0.is_positive() {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    /// Multiplicative inverse; rejects zero.
    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::ZeroOperand("reciprocal"));
        }
        Ok(Rational(self.0.recip()))
    }

    /// Checked division; rejects a zero divisor.
    pub fn checked_div(&self, rhs: &Rational) -> Result<Self> {
        if rhs.is_zero() {
            return Err(Error::ZeroOperand("division"));
        }
        Ok(Rational(&self.0 / &rhs.0))
    }

    /// Integer power; rejects `0^e` for `e < 0`.
    pub fn pow(&self, exp: i64) -> Result<Self> {
        if self.is_zero() && exp < 0 {
            return Err(Error::ZeroOperand("negative power"));
        }
        let e32 = i32::try_from(exp)
            .map_err(|_| Error::invalid(format!("exponent {exp} out of range")))?;
        Ok(Rational(self.0.pow(e32)))
    }

    /// Lossy conversion for diagnostics; exact whenever both parts fit f64.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or_else(|| {
            // Fall back to a scaled conversion for extreme magnitudes.
            let n = big_to_f64(self.numer());
            let d = big_to_f64(self.denom());
            n / d
        })
    }
}

fn big_to_f64(n: &BigInt) -> f64 {
    n.to_f64().unwrap_or(if n.is_negative() {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    })
}

/// Canonicalize a fraction given as a numerator/denominator pair.
pub fn canonicalize(n: impl Into<BigInt>, d: impl Into<BigInt>) -> Result<Rational> {
    Rational::new(n, d)
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for Rational {
    type Err = Error;

    /// Accepts `n` or `n/d` with optional signs; canonicalizes the result.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::parse("empty rational literal"));
        }
        let (n_str, d_str) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), Some(d.trim())),
            None => (s, None),
        };
        let n =
            BigInt::from_str(n_str).map_err(|_| Error::parse(format!("bad numerator in {s:?}")))?;
        let d = match d_str {
            Some(d) => BigInt::from_str(d)
                .map_err(|_| Error::parse(format!("bad denominator in {s:?}")))?,
            None => BigInt::one(),
        };
        Rational::new(n, d)
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_integer(n)
    }
}

impl From<u64> for Rational {
    fn from(n: u64) -> Self {
        Rational::from_integer(BigInt::from(n))
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational((self.0).$method(rhs.0))
            }
        }
        impl $trait<&Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

impl Div for Rational {
    type Output = Rational;
    /// Panics on a zero divisor; use [`Rational::checked_div`] on user input.
    fn div(self, rhs: Rational) -> Rational {
        Rational(self.0 / rhs.0)
    }
}

impl Div<&Rational> for &Rational {
    type Output = Rational;
    fn div(self, rhs: &Rational) -> Rational {
        Rational(&self.0 / &rhs.0)
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(|e| D::Error::custom(format!("{e}")))
    }
}

/// Sign of a rational, carried separately by the multiplicative machinery.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
    Zero,
}

impl Sign {
    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
            Sign::Zero => 0,
        }
    }
}

// ---------------------------------------------------------------------------
// Prime table and factorization
// ---------------------------------------------------------------------------

/// Sieved table of primes up to a configurable bound, used as the trial
/// division front end of the factorizer.
pub struct PrimeTable {
    bound: u64,
    primes: Vec<u64>,
}

pub const DEFAULT_SIEVE_BOUND: u64 = 1_000_000;

impl PrimeTable {
    pub fn new(bound: u64) -> Self {
        let bound = bound.max(3);
        let mut is_comp = vec![false; (bound + 1) as usize];
        let mut primes = Vec::new();
        for p in 2..=bound {
            if !is_comp[p as usize] {
                primes.push(p);
                let mut m = p * p;
                while m <= bound {
                    is_comp[m as usize] = true;
                    m += p;
                }
            }
        }
        PrimeTable { bound, primes }
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }
}

/// Shared default table; built once on first use.
pub fn default_prime_table() -> &'static PrimeTable {
    static TABLE: OnceLock<PrimeTable> = OnceLock::new();
    TABLE.get_or_init(|| PrimeTable::new(DEFAULT_SIEVE_BOUND))
}

fn mulmod(a: u128, b: u128, m: u128) -> u128 {
    // Schoolbook double-and-add; operands stay below 2^127.
    let mut result = 0u128;
    let mut a = a % m;
    let mut b = b % m;
    while b > 0 {
        if b & 1 == 1 {
            result = (result + a) % m;
        }
        a = (a << 1) % m;
        b >>= 1;
    }
    result
}

fn powmod(mut base: u128, mut exp: u128, m: u128) -> u128 {
    let mut acc = 1u128 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod(acc, base, m);
        }
        base = mulmod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Miller-Rabin over u128. The witness set is deterministic for all inputs
/// below 3.3 * 10^24, which covers every value this crate ever feeds it.
pub fn is_prime_u128(n: u128) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u128, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n.is_multiple_of(p) {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d.is_multiple_of(2) {
        d >>= 1;
        s += 1;
    }
    'witness: for a in [2u128, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub fn is_prime_u64(n: u64) -> bool {
    is_prime_u128(n as u128)
}

/// Pollard-Brent rho: returns a nontrivial factor of composite odd `n`.
fn pollard_brent(n: u128) -> u128 {
    if n.is_multiple_of(2) {
        return 2;
    }
    let mut c = 1u128;
    loop {
        let f = |x: u128| (mulmod(x, x, n) + c) % n;
        let mut x = 2u128;
        let mut y = 2u128;
        let mut d = 1u128;
        let mut count = 0u64;
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = gcd_u128(x.abs_diff(y), n);
            count += 1;
            if count > 1 << 24 {
                break;
            }
        }
        if d != n && d != 1 {
            return d;
        }
        c += 1;
    }
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = b;
        b = a % b;
        a = t;
    }
    a
}

fn factor_u128_into(mut n: u128, table: &PrimeTable, out: &mut BTreeMap<u64, i64>) -> Result<()> {
    for &p in table.primes() {
        let p128 = p as u128;
        if p128 * p128 > n {
            break;
        }
        while n.is_multiple_of(p128) {
            *out.entry(p).or_insert(0) += 1;
            n /= p128;
        }
    }
    // Remaining cofactor has no factor below the sieve bound.
    let mut stack = vec![n];
    while let Some(m) = stack.pop() {
        if m == 1 {
            continue;
        }
        if is_prime_u128(m) {
            let p = u64::try_from(m).map_err(|_| Error::PrimeFactorTooLarge)?;
            *out.entry(p).or_insert(0) += 1;
        } else {
            let d = pollard_brent(m);
            stack.push(d);
            stack.push(m / d);
        }
    }
    Ok(())
}

/// Factor a positive big integer into `prime -> exponent`.
pub fn factor_biguint(n: &BigUint, table: &PrimeTable) -> Result<BTreeMap<u64, i64>> {
    let mut out = BTreeMap::new();
    if n.is_zero() {
        return Err(Error::ZeroOperand("factorization"));
    }
    let mut rest = n.clone();
    if let Some(small) = rest.to_u128() {
        factor_u128_into(small, table, &mut out)?;
        return Ok(out);
    }
    // Big path: strip sieve primes, then split what remains.
    for &p in table.primes() {
        let pb = BigUint::from(p);
        while (&rest % &pb).is_zero() {
            *out.entry(p).or_insert(0) += 1;
            rest /= &pb;
        }
        if let Some(small) = rest.to_u128() {
            factor_u128_into(small, table, &mut out)?;
            return Ok(out);
        }
    }
    // All sieve primes removed and the cofactor still exceeds u128: any
    // prime factor of it would already be out of range.
    let _ = rest;
    Err(Error::PrimeFactorTooLarge)
}

// ---------------------------------------------------------------------------
// Factored form, valuations, embedding
// ---------------------------------------------------------------------------

/// Sparse `prime -> exponent` form of a rational; the exponent of a prime in
/// the denominator is negative. No stored exponent is zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactoredRational {
    pub sign: Sign,
    pub exponents: BTreeMap<u64, i64>,
}

impl FactoredRational {
    /// Reconstruct the canonical rational `sign * prod p^e`.
    pub fn reconstruct(&self) -> Rational {
        if self.sign == Sign::Zero {
            return Rational::zero();
        }
        let mut numer = BigInt::one();
        let mut denom = BigInt::one();
        for (&p, &e) in &self.exponents {
            let base = BigInt::from(p);
            if e > 0 {
                numer *= base.pow(e as u32);
            } else {
                denom *= base.pow((-e) as u32);
            }
        }
        if self.sign == Sign::Minus {
            numer = -numer;
        }
        Rational::new(numer, denom).expect("denominator is a product of primes")
    }
}

/// Factor a rational into its sparse prime-exponent form.
pub fn factor(a: &Rational, table: &PrimeTable) -> Result<FactoredRational> {
    if a.is_zero() {
        return Ok(FactoredRational {
            sign: Sign::Zero,
            exponents: BTreeMap::new(),
        });
    }
    let numer_abs = a.numer().magnitude();
    let denom = a.denom().magnitude();
    let mut exponents = factor_biguint(numer_abs, table)?;
    for (p, e) in factor_biguint(denom, table)? {
        let slot = exponents.entry(p).or_insert(0);
        *slot -= e;
        if *slot == 0 {
            exponents.remove(&p);
        }
    }
    exponents.retain(|_, e| *e != 0);
    Ok(FactoredRational {
        sign: a.sign(),
        exponents,
    })
}

/// The p-adic valuation `v_p(a)`: exponent of `p` in the canonical
/// factorization, negative when `p` divides the denominator. Undefined at 0.
pub fn valuation(a: &Rational, p: u64) -> Result<i64> {
    if a.is_zero() {
        return Err(Error::ZeroOperand("valuation"));
    }
    if p < 2 || !is_prime_u64(p) {
        return Err(Error::invalid(format!("{p} is not prime")));
    }
    let pb = BigUint::from(p);
    Ok(valuation_of_uint(a.numer().magnitude(), &pb)
        - valuation_of_uint(a.denom().magnitude(), &pb))
}

fn valuation_of_uint(n: &BigUint, p: &BigUint) -> i64 {
    let mut v = 0i64;
    let mut rest = n.clone();
    loop {
        let (q, r) = rest.div_rem(p);
        if !r.is_zero() {
            return v;
        }
        v += 1;
        rest = q;
    }
}

/// Coprimality over the rationals: for every prime `p`, at least one of
/// `v_p(a)` and `v_p(b)` is zero. Rejects zero inputs.
pub fn coprime(a: &Rational, b: &Rational, table: &PrimeTable) -> Result<bool> {
    if a.is_zero() || b.is_zero() {
        return Err(Error::ZeroOperand("coprimality"));
    }
    let fa = factor(a, table)?;
    let fb = factor(b, table)?;
    let (small, large) = if fa.exponents.len() <= fb.exponents.len() {
        (&fa, &fb)
    } else {
        (&fb, &fa)
    };
    Ok(small
        .exponents
        .keys()
        .all(|p| !large.exponents.contains_key(p)))
}

/// Integer vector of valuations over an ordered prime list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValuationVector(pub Vec<i64>);

impl ValuationVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Add for &ValuationVector {
    type Output = ValuationVector;
    fn add(self, rhs: &ValuationVector) -> ValuationVector {
        assert_eq!(self.0.len(), rhs.0.len());
        ValuationVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

/// Sorted list of all primes dividing some element of the set (numerator or
/// denominator). Rejects sets containing 0.
pub fn prime_support(a: &RationalSet, table: &PrimeTable) -> Result<Vec<u64>> {
    if a.contains_zero() {
        return Err(Error::ZeroInSet("prime_support"));
    }
    let mut primes = std::collections::BTreeSet::new();
    for x in a.iter() {
        for p in factor(x, table)?.exponents.keys() {
            primes.insert(*p);
        }
    }
    Ok(primes.into_iter().collect())
}

/// The prime-valuation embedding of a set: one coordinate vector per element
/// over the ordered prime support, signs carried alongside.
#[derive(Clone, Debug)]
pub struct ValuationEmbedding {
    pub primes: Vec<u64>,
    pub vectors: Vec<ValuationVector>,
    pub signs: Vec<Sign>,
}

pub fn valuation_embedding(a: &RationalSet, table: &PrimeTable) -> Result<ValuationEmbedding> {
    let primes = prime_support(a, table)?;
    let index: BTreeMap<u64, usize> = primes.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let mut vectors = Vec::with_capacity(a.len());
    let mut signs = Vec::with_capacity(a.len());
    for x in a.iter() {
        let f = factor(x, table)?;
        let mut coords = vec![0i64; primes.len()];
        for (p, e) in &f.exponents {
            coords[index[p]] = *e;
        }
        vectors.push(ValuationVector(coords));
        signs.push(f.sign);
    }
    Ok(ValuationEmbedding {
        primes,
        vectors,
        signs,
    })
}

/// The `count` smallest primes strictly greater than `start`.
pub fn next_primes_after(start: u64, count: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(count);
    let mut candidate = start.max(1) + 1;
    while out.len() < count {
        if is_prime_u64(candidate) {
            out.push(candidate);
        }
        candidate += 1;
    }
    out
}

/// Exact comparison of a big integer against a rational threshold:
/// returns the ordering of `n` versus `q`.
pub fn cmp_int_rational(n: &BigInt, q: &Rational) -> Ordering {
    // n ? q  <=>  n * denom ? numer
    (n * q.denom()).cmp(q.numer())
}

/// Exact `ceil` of a positive rational as a u64 (errors if out of range).
pub fn ceil_to_u64(q: &Rational) -> Result<u64> {
    if q.is_negative() {
        return Err(Error::invalid("ceil of negative rational"));
    }
    let (quot, rem) = q.numer().div_rem(q.denom());
    let v = if rem.is_zero() { quot } else { quot + 1 };
    v.to_biguint()
        .and_then(|b| b.to_u64())
        .ok_or_else(|| Error::invalid("ceil out of u64 range"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn canonicalize_reduces_and_normalizes_sign() {
        let q = canonicalize(4, -6).unwrap();
        assert_eq!(q.to_string(), "-2/3");
        assert_eq!(canonicalize(0, 5).unwrap().to_string(), "0");
        assert_eq!(canonicalize(7, 1).unwrap().to_string(), "7");
        assert!(matches!(canonicalize(1, 0), Err(Error::ZeroDenominator)));
    }

    #[test]
    fn parse_accepts_non_canonical() {
        assert_eq!(r("4/-6"), r("-2/3"));
        assert_eq!(r("  -8/4"), Rational::from(-2i64));
        assert_eq!(r("+3"), Rational::from(3i64));
        assert!("1/0".parse::<Rational>().is_err());
        assert!("a/b".parse::<Rational>().is_err());
        assert!("".parse::<Rational>().is_err());
    }

    #[test]
    fn valuation_examples() {
        let q = r("12/5");
        assert_eq!(valuation(&q, 2).unwrap(), 2);
        assert_eq!(valuation(&q, 5).unwrap(), -1);
        assert_eq!(valuation(&q, 7).unwrap(), 0);
        assert!(valuation(&Rational::zero(), 2).is_err());
        assert!(valuation(&q, 4).is_err());
    }

    #[test]
    fn coprime_examples() {
        let t = default_prime_table();
        assert!(coprime(&r("4/9"), &r("5/7"), t).unwrap());
        assert!(!coprime(&r("2/3"), &r("3/5"), t).unwrap());
        assert!(coprime(&r("6"), &r("1"), t).unwrap());
        assert!(coprime(&r("1"), &r("-17"), t).unwrap());
        assert!(coprime(&Rational::zero(), &r("1"), t).is_err());
    }

    #[test]
    fn factor_round_trip() {
        let t = default_prime_table();
        for s in ["-2/3", "12/5", "1", "-1", "360/49", "1/1024", "0"] {
            let q = r(s);
            let f = factor(&q, t).unwrap();
            assert!(f.exponents.values().all(|&e| e != 0));
            assert_eq!(f.reconstruct(), q);
        }
    }

    #[test]
    fn factor_splits_beyond_sieve() {
        let t = PrimeTable::new(100);
        // 1000003 is prime and above the sieve bound of this table.
        let q = Rational::from(1_000_003i64 * 4);
        let f = factor(&q, &t).unwrap();
        assert_eq!(f.exponents.get(&2), Some(&2));
        assert_eq!(f.exponents.get(&1_000_003), Some(&1));
    }

    #[test]
    fn prime_support_examples() {
        let t = default_prime_table();
        let s = RationalSet::from_iter([r("2"), r("3"), r("6")]);
        assert_eq!(prime_support(&s, t).unwrap(), vec![2, 3]);
        let ones = RationalSet::from_iter([r("1")]);
        assert_eq!(prime_support(&ones, t).unwrap(), Vec::<u64>::new());
        let frac = RationalSet::from_iter([r("4/15")]);
        assert_eq!(prime_support(&frac, t).unwrap(), vec![2, 3, 5]);
        let with_zero = RationalSet::from_iter([Rational::zero()]);
        assert!(prime_support(&with_zero, t).is_err());
    }

    #[test]
    fn embedding_examples() {
        let t = default_prime_table();
        let s = RationalSet::from_iter([r("2"), r("3"), r("6")]);
        let emb = valuation_embedding(&s, t).unwrap();
        assert_eq!(emb.primes, vec![2, 3]);
        assert_eq!(
            emb.vectors,
            vec![
                ValuationVector(vec![1, 0]),
                ValuationVector(vec![0, 1]),
                ValuationVector(vec![1, 1])
            ]
        );

        let gp = RationalSet::from_iter([r("1"), r("2"), r("4")]);
        let emb = valuation_embedding(&gp, t).unwrap();
        assert_eq!(
            emb.vectors,
            vec![
                ValuationVector(vec![0]),
                ValuationVector(vec![1]),
                ValuationVector(vec![2])
            ]
        );

        let mixed = RationalSet::from_iter([r("1/2"), r("8")]);
        let emb = valuation_embedding(&mixed, t).unwrap();
        assert_eq!(
            emb.vectors,
            vec![ValuationVector(vec![-1]), ValuationVector(vec![3])]
        );
        assert!(emb.signs.iter().all(|s| *s == Sign::Plus));

        // Signs are carried alongside; canonical order puts -2 first.
        let signed = RationalSet::from_iter([r("-2"), r("3")]);
        let emb = valuation_embedding(&signed, t).unwrap();
        assert_eq!(emb.signs, vec![Sign::Minus, Sign::Plus]);
    }

    #[test]
    fn miller_rabin_agrees_with_sieve() {
        let table = PrimeTable::new(2000);
        let mut idx = 0;
        for n in 2..2000u64 {
            let sieve_says = table.primes().get(idx) == Some(&n);
            if sieve_says {
                idx += 1;
            }
            assert_eq!(is_prime_u64(n), sieve_says, "disagreement at {n}");
        }
    }

    #[test]
    fn next_primes_skip_start() {
        assert_eq!(next_primes_after(5, 3), vec![7, 11, 13]);
        assert_eq!(next_primes_after(1, 2), vec![2, 3]);
    }

    #[test]
    fn ceil_and_cmp_helpers() {
        assert_eq!(ceil_to_u64(&r("7/2")).unwrap(), 4);
        assert_eq!(ceil_to_u64(&r("4")).unwrap(), 4);
        assert_eq!(
            cmp_int_rational(&BigInt::from(3), &r("7/2")),
            Ordering::Less
        );
        assert_eq!(
            cmp_int_rational(&BigInt::from(4), &r("7/2")),
            Ordering::Greater
        );
        assert_eq!(cmp_int_rational(&BigInt::from(7), &r("7")), Ordering::Equal);
    }
}
