//! `boxpoly` command-line tool. Every subcommand prints JSON on stdout and
//! logs on stderr. Exit status: 0 success, 1 input or system error, 2 when the
//! structural assumptions fail (analyze, or solve without `--force`).

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use boxpoly::block_solver::{solve_poly_box_numeric_with, solve_quadratic_box_capped, NumericOptions};
use boxpoly::bpo::{solve_treedp, BpoInstance};
use boxpoly::generate::{generate, GenKind, GenSpec};
use boxpoly::pipeline::{analysis_json, analyze, certify, solve, value_json, Bounds, SolveOptions};
use boxpoly::poly::format_rational;
use boxpoly::structure::intersection_graph;
use boxpoly::treewidth::heuristic_decomposition;
use boxpoly::{Error, Polynomial, Value};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value as Json};

/// Largest instance the exact quadratic oracle accepts.
const ORACLE_EXACT_MAX: usize = 12;
/// Largest instance the grid oracle accepts.
const ORACLE_GRID_MAX: usize = 9;

#[derive(Parser)]
#[command(name = "boxpoly", version, about = "Minimize sparse polynomials over the unit hypercube")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Partition, components, width certificates and assumption verdict.
    Analyze {
        path: PathBuf,
        #[command(flatten)]
        bounds: BoundArgs,
    },
    /// Solve an instance end to end.
    Solve {
        path: PathBuf,
        #[command(flatten)]
        bounds: BoundArgs,
        /// Accuracy of the numeric block solver (degree 3 and up).
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        /// Solve even if the assumption check fails.
        #[arg(long)]
        force: bool,
        /// Include per-stage wall times (makes output run-dependent).
        #[arg(long)]
        timings: bool,
        /// Write the solution here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Whole-instance reference minimum, without any decomposition.
    Oracle {
        path: PathBuf,
        /// Grid divisions per axis for degree 3 and up.
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
    },
    /// Generate a seeded instance.
    Gen {
        #[arg(long, value_parser = parse_kind)]
        kind: GenKind,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 2)]
        block_size: usize,
        #[arg(long, default_value_t = 2)]
        nbr_size: usize,
        #[arg(long, default_value_t = 2)]
        degree: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        coef_range: i64,
        /// Write the instance here; stdout otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scaling runs over generated families, as CSV.
    Bench {
        #[arg(long, default_value = "smoke", value_parser = ["smoke", "full"])]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV destination; with it a JSON summary goes to stdout, without it
        /// the CSV does.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a binary polynomial instance with the tree decomposition DP.
    Bpo { path: PathBuf },
}

#[derive(Args, Clone, Copy)]
struct BoundArgs {
    /// Width bound, applied to the interaction graph for quadratics and to
    /// the incidence graph otherwise.
    #[arg(long)]
    tw_max: Option<usize>,
    #[arg(long)]
    nbr_max: Option<usize>,
    #[arg(long)]
    block_max: Option<usize>,
}

impl BoundArgs {
    fn resolve(&self, p: &Polynomial) -> Bounds {
        let mut b = Bounds::defaults(p.nvars(), p.degree());
        if let Some(w) = self.tw_max {
            b.tw_max = w;
            b.itw_max = w;
        }
        if let Some(k) = self.nbr_max {
            b.nbr_max = k;
        }
        if let Some(s) = self.block_max {
            b.block_max = s;
        }
        b
    }
}

fn parse_kind(s: &str) -> Result<GenKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Failure of a subcommand, carrying its exit status and JSON body.
struct Failure {
    code: u8,
    body: Json,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::AssumptionViolated(check) => Failure {
                code: 2,
                body: json!({"error": "structural assumptions violated", "assumptions": *check}),
            },
            other => Failure {
                code: 1,
                body: json!({"error": other.to_string()}),
            },
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: 1,
        body: json!({"error": format!("{}: {e}", path.display())}),
    }
}

fn read_instance(path: &Path) -> Result<Polynomial, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    Ok(Polynomial::from_json(&text)?)
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| io_failure(path, e))
}

/// Successful output: JSON for stdout plus the exit status.
type Outcome = Result<(Json, u8), Failure>;

fn cmd_analyze(path: &Path, bounds: &BoundArgs) -> Outcome {
    let p = read_instance(path)?;
    let a = analyze(&p, &bounds.resolve(&p))?;
    let code = if a.check.pass { 0 } else { 2 };
    Ok((analysis_json(&a), code))
}

fn cmd_solve(path: &Path, bounds: &BoundArgs, tol: f64, force: bool, timings: bool, out: Option<&Path>) -> Outcome {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument("tol must be positive".into()).into());
    }
    let p = read_instance(path)?;
    let opts = SolveOptions {
        bounds: Some(bounds.resolve(&p)),
        tol,
        force,
    };
    let sol = solve(&p, &opts)?;
    let mut doc = sol.to_json(timings);
    doc["certificate"] = serde_json::to_value(certify(&sol, &p)?).expect("serializable");
    if let Some(out) = out {
        write_file(out, &pretty(&doc))?;
        let summary = json!({"value": doc["value"], "out": out.display().to_string()});
        return Ok((summary, 0));
    }
    Ok((doc, 0))
}

fn cmd_oracle(path: &Path, grid: Option<usize>, tol: f64) -> Outcome {
    let p = read_instance(path)?;
    let n = p.nvars();
    if p.degree() <= 2 {
        let s = solve_quadratic_box_capped(&p, ORACLE_EXACT_MAX)?;
        let point: Vec<String> = s.argmin.iter().map(format_rational).collect();
        return Ok((
            json!({
                "value": format_rational(&s.value),
                "point": point,
                "mode": "exact",
                "gap_bound": 0.0,
            }),
            0,
        ));
    }
    if n > ORACLE_GRID_MAX {
        return Err(Error::CapExceeded {
            what: "grid oracle variables",
            actual: n,
            cap: ORACLE_GRID_MAX,
        }
        .into());
    }
    let opts = NumericOptions {
        grid_divisions: grid,
        cap: ORACLE_GRID_MAX,
        ..NumericOptions::with_tol(tol)
    };
    let s = solve_poly_box_numeric_with(&p, &opts)?;
    Ok((
        json!({
            "value": s.value,
            "point": s.argmin,
            "mode": "numeric",
            "gap_bound": s.gap_bound,
            "grid_step": s.grid_step,
        }),
        0,
    ))
}

fn cmd_gen(spec: &GenSpec, out: Option<&Path>) -> Outcome {
    let p = generate(spec)?;
    let text = p.to_json();
    match out {
        Some(out) => {
            write_file(out, &text)?;
            Ok((
                json!({
                    "out": out.display().to_string(),
                    "n": p.nvars(),
                    "num_terms": p.num_terms(),
                    "spec": spec,
                    "bounds": spec.bounds(),
                }),
                0,
            ))
        }
        None => {
            let doc: Json = serde_json::from_str(&text).expect("instance JSON");
            Ok((doc, 0))
        }
    }
}

/// `(family name, specs in increasing size)`
fn bench_suite(name: &str, seed: u64) -> Vec<(&'static str, Vec<GenSpec>)> {
    let spec = |kind, m, block_size, nbr_size, degree| GenSpec {
        kind,
        m,
        block_size,
        nbr_size,
        degree,
        seed,
        coef_range: 5,
    };
    let (paths, trees, cubics, sparse): (&[usize], &[usize], &[usize], &[usize]) = match name {
        "full" => (&[10, 100, 1001, 5000], &[10, 50, 150, 300], &[5, 20, 60, 120], &[10, 50, 150, 300]),
        _ => (&[5, 20, 100], &[4, 10, 30], &[3, 6, 12], &[4, 10, 30]),
    };
    vec![
        ("path-blocks-d2", paths.iter().map(|&m| spec(GenKind::PathBlocks, m, 1, 2, 2)).collect()),
        ("tree-backbone-d2", trees.iter().map(|&m| spec(GenKind::TreeBackbone, m, 3, 3, 2)).collect()),
        ("tree-backbone-d3", cubics.iter().map(|&m| spec(GenKind::TreeBackbone, m, 2, 2, 3)).collect()),
        ("random-sparse-d2", sparse.iter().map(|&m| spec(GenKind::RandomSparse, m, 3, 3, 2)).collect()),
    ]
}

const BENCH_COLUMNS: &str =
    "family,kind,degree,m,n,num_terms,block_size_max,nbr_size_max,input_width,reduced_width,table_entries,reduced_nodes,value,gap_bound,time_ms";

fn cmd_bench(suite: &str, seed: u64, out: Option<&Path>) -> Outcome {
    let mut csv = String::from(BENCH_COLUMNS);
    csv.push('\n');
    let mut rows = 0;
    for (family, specs) in bench_suite(suite, seed) {
        for spec in specs {
            let p = generate(&spec)?;
            let opts = SolveOptions {
                bounds: Some(spec.bounds()),
                ..SolveOptions::default()
            };
            let t = Instant::now();
            let sol = solve(&p, &opts)?;
            let time_ms = t.elapsed().as_secs_f64() * 1e3;
            let d = &sol.diagnostics;
            let value = match &sol.value {
                Value::Exact(r) => format_rational(r),
                Value::Float(x) => x.to_string(),
            };
            let input_width = d.input_width.map(|w| w.to_string()).unwrap_or_default();
            csv.push_str(&format!(
                "{family},{},{},{},{},{},{},{},{input_width},{},{},{},{value},{},{time_ms:.3}\n",
                spec.kind,
                spec.degree,
                spec.m,
                d.n,
                d.num_terms,
                d.block_size_max,
                d.nbr_size_max,
                d.reduced_width,
                d.table_entries,
                d.reduced_nodes,
                d.gap_bound,
            ));
            rows += 1;
            eprintln!("bench: {family} m={} n={} {time_ms:.1} ms", spec.m, d.n);
        }
    }
    match out {
        Some(out) => {
            write_file(out, &csv)?;
            Ok((json!({"suite": suite, "seed": seed, "rows": rows, "out": out.display().to_string()}), 0))
        }
        None => {
            print!("{csv}");
            Ok((Json::Null, 0))
        }
    }
}

fn cmd_bpo(path: &Path) -> Outcome {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    let inst = BpoInstance::from_json(&text)?;
    let td = heuristic_decomposition(&intersection_graph(&inst.hypergraph));
    let sol = solve_treedp(&inst, &td)?;
    let assignment: serde_json::Map<String, Json> = sol
        .assignment
        .bits
        .iter()
        .map(|(v, b)| (v.to_string(), json!(u8::from(*b))))
        .collect();
    Ok((
        json!({
            "value": value_json(&Value::Exact(sol.value)),
            "assignment": assignment,
            "width": td.width(),
        }),
        0,
    ))
}

fn pretty(doc: &Json) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("serializable");
    s.push('\n');
    s
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("BOXPOLY_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| Failure {
        code: 1,
        body: json!({"error": format!("BOXPOLY_THREADS must be a positive integer, got {v:?}")}),
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure {
            code: 1,
            body: json!({"error": e.to_string()}),
        })
}

fn run(cli: Cli) -> Outcome {
    configure_threads()?;
    match cli.cmd {
        Cmd::Analyze { path, bounds } => cmd_analyze(&path, &bounds),
        Cmd::Solve {
            path,
            bounds,
            tol,
            force,
            timings,
            out,
        } => cmd_solve(&path, &bounds, tol, force, timings, out.as_deref()),
        Cmd::Oracle { path, grid, tol } => cmd_oracle(&path, grid, tol),
        Cmd::Gen {
            kind,
            m,
            block_size,
            nbr_size,
            degree,
            seed,
            coef_range,
            out,
        } => {
            let spec = GenSpec {
                kind,
                m,
                block_size,
                nbr_size,
                degree,
                seed,
                coef_range,
            };
            cmd_gen(&spec, out.as_deref())
        }
        Cmd::Bench { suite, seed, out } => cmd_bench(&suite, seed, out.as_deref()),
        Cmd::Bpo { path } => cmd_bpo(&path),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            println!("{}", json!({"error": e.kind().to_string()}));
            return ExitCode::from(1);
        }
    };
    let (doc, code) = match run(cli) {
        Ok(ok) => ok,
        Err(f) => {
            if let Some(msg) = f.body.get("error").and_then(Json::as_str) {
                eprintln!("boxpoly: {msg}");
            }
            (f.body, f.code)
        }
    };
    if !doc.is_null() {
        let mut stdout = std::io::stdout().lock();
        if stdout.write_all(pretty(&doc).as_bytes()).is_err() {
            return ExitCode::from(1);
        }
    }
    ExitCode::from(code)
}
