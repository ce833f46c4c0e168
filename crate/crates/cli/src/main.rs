//! `sumprodlab`: batch experiment runner and verifier orchestration.
//!
//! Non-interactive: every subcommand computes a report and writes JSON
//! (default) or flat CSV. Exit codes: 0 success, 1 a theorem-backed check
//! failed, 2 usage or input error, 3 enumeration budget exceeded.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use sumprodlab::applications as apps;
use sumprodlab::energy;
use sumprodlab::error::Error;
use sumprodlab::fibering;
use sumprodlab::generators as gens;
use sumprodlab::io;
use sumprodlab::separation;
use sumprodlab::setops;
use sumprodlab::suites;
use sumprodlab::{Budget, Rational};

#[derive(Parser)]
#[command(
    name = "sumprodlab",
    version,
    about = "Exact sum-product experiments over the rationals"
)]
struct Cli {
    /// Worker thread cap (default: available cores). Results do not depend
    /// on the thread count.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct OutputOpts {
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "json")]
    format: Format,

    /// Omit elapsed-time fields so reruns are byte-identical.
    #[arg(long)]
    no_timings: bool,
}

#[derive(Args)]
struct BudgetOpt {
    /// Enumeration budget override (elements and tuples). The
    /// SUMPRODLAB_BUDGET environment variable overrides the default too;
    /// the flag wins over both.
    #[arg(long)]
    budget: Option<u128>,
}

impl BudgetOpt {
    fn resolve(&self) -> Result<Budget, Error> {
        if let Some(b) = self.budget {
            return Ok(Budget::with_limit(b));
        }
        match std::env::var("SUMPRODLAB_BUDGET") {
            Ok(v) => {
                let parsed: u128 = v
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad SUMPRODLAB_BUDGET {v:?}")))?;
                Ok(Budget::with_limit(parsed))
            }
            Err(_) => Ok(Budget::default()),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate set, lattice, and graph files.
    Gen {
        #[command(subcommand)]
        family: GenFamily,
    },
    /// Sizes of iterated plain and shifted product sets.
    Growth {
        #[arg(long)]
        set: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        u: Rational,
        /// Largest fold to compute.
        #[arg(long, default_value_t = 3)]
        k: u32,
        #[command(flatten)]
        budget: BudgetOpt,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Exact mixed energy of a set.
    Energy {
        #[arg(long)]
        set: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        u: Rational,
        #[arg(long, default_value_t = 2)]
        k: u32,
        #[command(flatten)]
        budget: BudgetOpt,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Lambda estimates: uniform witness, ascent, and the grid oracle when
    /// the set has at most four elements.
    Lambda {
        #[arg(long)]
        set: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        u: Rational,
        #[arg(long, default_value_t = 2)]
        k: u32,
        #[arg(long, default_value_t = 200)]
        iters: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Grid step for the oracle (only used when |A| <= 4).
        #[arg(long, default_value_t = 0.02)]
        step: f64,
        #[command(flatten)]
        budget: BudgetOpt,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Separation ratios: probe a base set with random coprime
    /// decompositions, or evaluate a decomposition file under uniform
    /// weights.
    Separate {
        /// Base set X (rational set file). Mutually exclusive with --decomp.
        #[arg(long, conflicts_with = "decomp")]
        set: Option<PathBuf>,
        /// Decomposition JSON file.
        #[arg(long)]
        decomp: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        u: Rational,
        #[arg(long, default_value_t = 2)]
        k: u32,
        #[arg(long, default_value_t = 50)]
        probes: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        budget: BudgetOpt,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Degree-prune and regularize a lattice bipartite graph; emits the
    /// certificate.
    Fiber {
        /// Lattice CSV for A.
        #[arg(long)]
        set: PathBuf,
        /// Lattice CSV for B.
        #[arg(long)]
        set_b: PathBuf,
        /// Graph file (`n |A| |B|` header, then `i j` rows).
        #[arg(long)]
        graph: PathBuf,
        /// Split position; chosen by the fiber-size rule when omitted.
        #[arg(long)]
        t: Option<usize>,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Count solutions to c1 x + c2 y = 1 over A x A.
    SolveCount {
        #[arg(long)]
        set: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        c1: Rational,
        #[arg(long, allow_hyphen_values = true)]
        c2: Rational,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Count incidences between A x A and a file of rational lines.
    Incidence {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        lines: PathBuf,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Additive basis count S = |{(b, b') : b + b' in A}|.
    Basis {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        set_b: PathBuf,
        #[arg(long)]
        set_b2: PathBuf,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Run the theorem-backed verification suites (the acceptance entry
    /// point). Exit code 1 if any check fails.
    Verify {
        /// Run a single suite by name (default: all).
        #[arg(long)]
        suite: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Cap on random set sizes where a suite scales.
        #[arg(long, default_value_t = 30)]
        n_max: u32,
        #[command(flatten)]
        budget: BudgetOpt,
        #[command(flatten)]
        output: OutputOpts,
    },
}

#[derive(Subcommand)]
enum GenFamily {
    /// Geometric progression {r^i : 0 <= i < n}.
    Gp {
        #[arg(long, allow_hyphen_values = true)]
        ratio: Rational,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Multiplicative box over the given primes and dimensions.
    Multidim {
        /// Comma-separated primes, e.g. 2,3.
        #[arg(long, value_delimiter = ',')]
        primes: Vec<u64>,
        /// Comma-separated dimensions, e.g. 4,4.
        #[arg(long, value_delimiter = ',')]
        dims: Vec<u32>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Prime powers {p^h : h in exps}.
    PrimePower {
        #[arg(long)]
        p: u64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        exps: Vec<i64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Seeded random distinct nonzero rationals.
    RandomSet {
        #[arg(long)]
        count: u32,
        #[arg(long, default_value_t = 50)]
        num_bound: i64,
        #[arg(long, default_value_t = 8)]
        den_bound: i64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// The lattice box [0, side-1]^dim as CSV.
    Box {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        side: i64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Seeded random subset of a lattice box as CSV.
    RandomLattice {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        side: i64,
        #[arg(long)]
        count: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Seeded random bipartite graph over two lattice CSV files.
    Graph {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        set_b: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        // Ignore failure if a pool already exists (tests call run twice).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    match run(cli.command) {
        Ok(violation) => {
            if violation {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::BudgetExceeded { .. } => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

/// Returns whether a theorem-backed check reported a violation.
fn run(command: Command) -> Result<bool, Error> {
    match command {
        Command::Gen { family } => {
            run_gen(family)?;
            Ok(false)
        }
        Command::Growth {
            set,
            u,
            k,
            budget,
            output,
        } => {
            let a = read_set_at(&set)?;
            let budget = budget.resolve()?;
            let started = Instant::now();
            let rep = apps::growth_experiment(&a, &u, k, &budget)?;
            let mut doc = json!({
                "schema": 1,
                "command": "growth",
                "u": u,
                "report": rep,
            });
            attach_elapsed(&mut doc, started, &output);
            let csv = growth_csv(&rep);
            emit(&output, &doc, csv)?;
            Ok(false)
        }
        Command::Energy {
            set,
            u,
            k,
            budget,
            output,
        } => {
            let a = read_set_at(&set)?;
            let budget = budget.resolve()?;
            let started = Instant::now();
            let table = energy::rep_table(&a, &u, k, &budget)?;
            let e = table.second_moment();
            let elapsed = started.elapsed().as_millis() as u64;
            let mut doc = json!({
                "schema": 1,
                "command": "energy",
                "k": k,
                "u": u,
                "mode": "exact",
                "energy": e.to_string(),
                "table_keys": table.key_count(),
                "total_mass": table.total_mass().to_string(),
            });
            if !output.no_timings {
                doc["elapsed_ms"] = json!(elapsed);
            }
            let csv = format!(
                "k,u,mode,energy,table_keys,total_mass\n{},{},exact,{},{},{}\n",
                k,
                u,
                e,
                table.key_count(),
                table.total_mass()
            );
            emit(&output, &doc, csv)?;
            Ok(false)
        }
        Command::Lambda {
            set,
            u,
            k,
            iters,
            seed,
            step,
            budget,
            output,
        } => {
            let a = read_set_at(&set)?;
            let budget = budget.resolve()?;
            let started = Instant::now();
            let uniform = separation::lambda_uniform(&a, &u, k, &budget)?;
            let ascent = separation::lambda_ascent(&a, &u, k, iters, seed)?;
            let grid = if a.len() <= 4 {
                Some(separation::lambda_grid_oracle(&a, &u, k, step)?)
            } else {
                None
            };
            let mut doc = json!({
                "schema": 1,
                "command": "lambda",
                "k": k,
                "u": u,
                "uniform": uniform,
                "ascent": ascent,
                "grid": grid,
            });
            attach_elapsed(&mut doc, started, &output);
            let mut csv = String::from("method,value\n");
            csv.push_str(&format!("uniform,{}\n", uniform.value));
            csv.push_str(&format!("ascent,{}\n", ascent.value));
            if let Some(g) = &grid {
                csv.push_str(&format!("grid,{}\n", g.value));
            }
            emit(&output, &doc, csv)?;
            Ok(false)
        }
        Command::Separate {
            set,
            decomp,
            u,
            k,
            probes,
            seed,
            budget,
            output,
        } => {
            let budget = budget.resolve()?;
            let started = Instant::now();
            if let Some(path) = decomp {
                let d = with_path(&path, io::read_decomposition(&path))?;
                let z = d.z_set();
                let w = vec![1.0 / (z.len() as f64).sqrt(); z.len()];
                let rep = separation::separation_ratio(&d, &u, k, &w, &budget)?;
                let violation = rep
                    .ratio
                    .map(|r| r > d.x_set().len() as f64 + 1e-9)
                    .unwrap_or(false);
                let mut doc = json!({
                    "schema": 1,
                    "command": "separate",
                    "mode": "decomposition",
                    "report": rep,
                });
                attach_elapsed(&mut doc, started, &output);
                let csv = format!(
                    "k,u,lhs_root,rhs_sum_roots,ratio\n{},{},{},{},{}\n",
                    k,
                    u,
                    rep.lhs_root,
                    rep.rhs_sum_roots,
                    rep.ratio.map(|r| r.to_string()).unwrap_or_default()
                );
                emit(&output, &doc, csv)?;
                Ok(violation)
            } else {
                let path =
                    set.ok_or_else(|| Error::invalid("separate requires --set or --decomp"))?;
                let x = read_set_at(&path)?;
                let rep = separation::probe_separating_constant(&x, &u, k, probes, seed, &budget)?;
                let violation = rep.max_ratio > rep.trivial_bound + 1e-9
                    || rep
                        .prime_power_bound
                        .map(|b| rep.max_ratio > b + 1e-9)
                        .unwrap_or(false);
                let mut doc = json!({
                    "schema": 1,
                    "command": "separate",
                    "mode": "probe",
                    "report": rep,
                });
                attach_elapsed(&mut doc, started, &output);
                let mut csv = String::from("probe,ratio\n");
                for (i, r) in rep.ratios.iter().enumerate() {
                    csv.push_str(&format!("{i},{r}\n"));
                }
                emit(&output, &doc, csv)?;
                Ok(violation)
            }
        }
        Command::Fiber {
            set,
            set_b,
            graph,
            t,
            output,
        } => {
            let a = read_lattice_at(&set)?;
            let b = read_lattice_at(&set_b)?;
            let text = std::fs::read_to_string(&graph)
                .map_err(|e| Error::invalid(format!("{}: {e}", graph.display())))?;
            let g = with_path(&graph, io::parse_graph(&text, a, b))?;
            let started = Instant::now();
            let t = match t {
                Some(t) => t,
                None => fibering::choose_split_coordinate(&g.a, &g.b)?,
            };
            let cert = fibering::regularize(&g, t, &fibering::RegularizeParams::default())?;
            let verified = cert.verify();
            let mut doc = json!({
                "schema": 1,
                "command": "fiber",
                "t": t,
                "certificate": cert,
                "verified": verified.is_ok(),
            });
            attach_elapsed(&mut doc, started, &output);
            let csv = format!(
                "t,swapped,m_a,m_b,base_count_a,base_count_b,delta1,delta2,k1,k2,uniformity\n{},{},{},{},{},{},{},{},{},{},{}\n",
                t,
                cert.swapped,
                cert.m_a,
                cert.m_b,
                cert.base_count_a,
                cert.base_count_b,
                cert.delta1.to_f64(),
                cert.delta2.to_f64(),
                cert.k1,
                cert.k2,
                cert.uniformity_factor
            );
            emit(&output, &doc, csv)?;
            Ok(verified.is_err())
        }
        Command::SolveCount {
            set,
            c1,
            c2,
            output,
        } => {
            let a = read_set_at(&set)?;
            let started = Instant::now();
            let rep = apps::count_line_solutions(&a, &c1, &c2)?;
            let mut doc = json!({
                "schema": 1,
                "command": "solve-count",
                "c1": c1,
                "c2": c2,
                "report": rep,
            });
            attach_elapsed(&mut doc, started, &output);
            let csv = format!(
                "c1,c2,count,zero_coordinate_solutions\n{},{},{},{}\n",
                c1, c2, rep.count, rep.zero_coordinate_solutions
            );
            emit(&output, &doc, csv)?;
            Ok(false)
        }
        Command::Incidence { set, lines, output } => {
            let a = read_set_at(&set)?;
            let lines = with_path(&lines, io::read_lines_file(&lines))?;
            let started = Instant::now();
            let rep = apps::count_incidences(&a, &lines)?;
            let mut doc = json!({
                "schema": 1,
                "command": "incidence",
                "report": rep,
            });
            attach_elapsed(&mut doc, started, &output);
            let csv = format!(
                "total,horizontal,vertical,through_origin,generic,irrational_slope,points,lines\n{},{},{},{},{},{},{},{}\n",
                rep.total,
                rep.horizontal,
                rep.vertical,
                rep.through_origin,
                rep.generic,
                rep.irrational_slope,
                rep.point_count,
                rep.line_count
            );
            emit(&output, &doc, csv)?;
            Ok(false)
        }
        Command::Basis {
            set,
            set_b,
            set_b2,
            output,
        } => {
            let a = read_set_at(&set)?;
            let b = read_set_at(&set_b)?;
            let b2 = read_set_at(&set_b2)?;
            let started = Instant::now();
            let rep = apps::additive_basis_count(&a, &b, &b2);
            let mut doc = json!({
                "schema": 1,
                "command": "basis",
                "report": rep,
            });
            attach_elapsed(&mut doc, started, &output);
            let csv = format!(
                "s,max_pairwise_intersection\n{},{}\n",
                rep.s, rep.max_pairwise_intersection
            );
            emit(&output, &doc, csv)?;
            Ok(false)
        }
        Command::Verify {
            suite,
            seed,
            n_max,
            budget,
            output,
        } => {
            let opts = suites::SuiteOptions {
                seed,
                n_max,
                budget: budget.resolve()?,
                timings: !output.no_timings,
            };
            let report = suites::run_all(suite.as_deref(), &opts)?;
            for s in &report.suites {
                let status = if s.ok() { "PASS" } else { "FAIL" };
                match s.elapsed_ms {
                    Some(ms) => println!("{status} {} ({} checks, {} ms)", s.name, s.checks, ms),
                    None => println!("{status} {} ({} checks)", s.name, s.checks),
                }
                for f in s.failures.iter().take(5) {
                    println!("  {}: {}", f.case, f.detail);
                }
            }
            let doc = serde_json::to_value(&report)?;
            let mut csv = String::from("suite,checks,violations\n");
            for s in &report.suites {
                csv.push_str(&format!("{},{},{}\n", s.name, s.checks, s.violations));
            }
            if let Some(out) = &output.out {
                // Achieved regularization constants land in a sibling CSV.
                let mut ratios_path = out.as_os_str().to_owned();
                ratios_path.push(".ratios.csv");
                std::fs::write(Path::new(&ratios_path), ratios_csv(&report))?;
            }
            emit(&output, &doc, csv)?;
            Ok(!report.ok)
        }
    }
}

/// Wrap file-loading errors with the offending path.
fn with_path<T>(path: &Path, r: Result<T, Error>) -> Result<T, Error> {
    r.map_err(|e| match e {
        Error::BudgetExceeded { .. } => e,
        other => Error::invalid(format!("{}: {other}", path.display())),
    })
}

fn read_set_at(path: &Path) -> Result<sumprodlab::RationalSet, Error> {
    with_path(path, io::read_set(path))
}

fn read_lattice_at(path: &Path) -> Result<sumprodlab::fibering::LatticeSet, Error> {
    with_path(path, io::read_lattice_set(path))
}

fn run_gen(family: GenFamily) -> Result<(), Error> {
    match family {
        GenFamily::Gp { ratio, n, out } => {
            let set = gens::geometric_progression(&ratio, n)?;
            io::write_set(&out, &set)
        }
        GenFamily::Multidim { primes, dims, out } => {
            let set = gens::multidim_gp(&primes, &dims)?;
            io::write_set(&out, &set)
        }
        GenFamily::PrimePower { p, exps, out } => {
            let set = gens::prime_power_set(p, &exps)?;
            io::write_set(&out, &set)
        }
        GenFamily::RandomSet {
            count,
            num_bound,
            den_bound,
            seed,
            out,
        } => {
            let set = gens::random_rational_set(count, num_bound, den_bound, seed)?;
            io::write_set(&out, &set)
        }
        GenFamily::Box { dim, side, out } => {
            let set = gens::lattice_box(dim, side)?;
            io::write_lattice_set(&out, &set)
        }
        GenFamily::RandomLattice {
            dim,
            side,
            count,
            seed,
            out,
        } => {
            let set = gens::random_lattice_set(dim, side, count, seed)?;
            io::write_lattice_set(&out, &set)
        }
        GenFamily::Graph {
            set,
            set_b,
            density,
            seed,
            out,
        } => {
            let a = read_lattice_at(&set)?;
            let b = read_lattice_at(&set_b)?;
            let g = gens::random_lattice_graph(&a, &b, density, seed)?;
            Ok(std::fs::write(&out, io::format_graph(&g))?)
        }
    }
}

fn attach_elapsed(doc: &mut serde_json::Value, started: Instant, output: &OutputOpts) {
    if !output.no_timings {
        doc["elapsed_ms"] = json!(started.elapsed().as_millis() as u64);
    }
}

fn growth_csv(rep: &setops::GrowthReport) -> String {
    let mut csv = String::from("j,size_product,size_shifted,exponent\n");
    for (i, (p, s)) in rep.sizes_product.iter().zip(&rep.sizes_shifted).enumerate() {
        let e = rep.exponents[i].map(|e| e.to_string()).unwrap_or_default();
        csv.push_str(&format!("{},{},{},{}\n", i + 1, p, s, e));
    }
    csv
}

fn ratios_csv(report: &suites::VerifyReport) -> String {
    let mut csv = String::from(
        "instance,dim,t,delta,doubling_k,c_set_sizes_a,c_set_sizes_b,c_delta_sizes,c_doubling,m_a,m_b,delta1,delta2,k1,k2,uniformity_factor\n",
    );
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in &report.regularize_ratios {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.instance,
            r.dim,
            r.t,
            r.delta,
            r.doubling_k,
            opt(r.c_set_sizes_a),
            opt(r.c_set_sizes_b),
            opt(r.c_delta_sizes),
            opt(r.c_doubling),
            r.m_a,
            r.m_b,
            r.delta1,
            r.delta2,
            r.k1,
            r.k2,
            r.uniformity_factor
        ));
    }
    csv
}

fn emit(output: &OutputOpts, doc: &serde_json::Value, csv: String) -> Result<(), Error> {
    let content = match output.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(doc)?;
            s.push('\n');
            s
        }
        Format::Csv => csv,
    };
    match &output.out {
        Some(path) => std::fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}
