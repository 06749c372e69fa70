use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value as Json;
use tempfile::TempDir;

fn boxpoly(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_boxpoly"))
        .args(args)
        .env_remove("BOXPOLY_THREADS")
        .output()
        .expect("run boxpoly")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json_out(o: &Output) -> Json {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&o.stdout),
            String::from_utf8_lossy(&o.stderr)
        )
    })
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &TempDir, name: &str, args: &[&str]) -> PathBuf {
    let out = dir.path().join(name);
    let mut full = vec!["gen"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", s(&out)]);
    let o = boxpoly(&full);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out
}

/// `Σ x_i^2 - Σ_{i<j} x_i x_j` on five variables: a single positive-diagonal
/// block whose interaction graph is K5.
fn k5_instance() -> String {
    let mut terms = Vec::new();
    for i in 0..5 {
        terms.push(format!(r#"{{"coef":"1","exps":[[{i},2]]}}"#));
        for j in i + 1..5 {
            terms.push(format!(r#"{{"coef":"-1/4","exps":[[{i},1],[{j},1]]}}"#));
        }
    }
    format!(r#"{{"n":5,"terms":[{}]}}"#, terms.join(","))
}

#[test]
fn path_blocks_generation_and_analysis() {
    let dir = TempDir::new().unwrap();
    let inst = gen(&dir, "pb.json", &["--kind", "path-blocks", "--m", "3", "--seed", "7"]);
    let doc: Json = serde_json::from_str(&std::fs::read_to_string(&inst).unwrap()).unwrap();
    assert_eq!(doc["n"], 5);

    let o = boxpoly(&["analyze", s(&inst)]);
    assert_eq!(code(&o), 0);
    let a = json_out(&o);
    assert_eq!(a["assumptions"]["pass"], true);
    assert_eq!(a["assumptions"]["tw_verdict"]["width"], 1);
    // the interaction graph is the path 0 - 1 - 2 - 3 - 4
    let bags = a["assumptions"]["tw_verdict"]["decomposition"]["bags"].as_array().unwrap();
    assert!(bags.iter().all(|b| b.as_array().unwrap().len() <= 2));
    for i in 0..4u64 {
        assert!(bags.iter().any(|b| b.as_array().unwrap() == &vec![Json::from(i), Json::from(i + 1)]));
    }
}

#[test]
fn clique_block_fails_analysis() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "k5.json", &k5_instance());
    let o = boxpoly(&["analyze", s(&inst), "--block-max", "4"]);
    assert_eq!(code(&o), 2);
    let a = json_out(&o);
    assert_eq!(a["assumptions"]["pass"], false);
    assert_eq!(a["assumptions"]["block_size_max"], 5);
    let failures = a["assumptions"]["failures"].as_array().unwrap();
    assert!(failures.iter().any(|f| f.as_str().unwrap().contains("size 5")));

    // solve refuses without --force and succeeds with it
    let o = boxpoly(&["solve", s(&inst), "--block-max", "4"]);
    assert_eq!(code(&o), 2);
    assert!(json_out(&o)["error"].is_string());
    let o = boxpoly(&["solve", s(&inst), "--block-max", "4", "--force"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json_out(&o)["value"], "0");
}

#[test]
fn malformed_input_is_an_error() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", "{\"n\": 2, \"terms\": [");
    for cmd in ["analyze", "solve", "oracle"] {
        let o = boxpoly(&[cmd, s(&bad)]);
        assert_eq!(code(&o), 1);
        assert!(json_out(&o)["error"].as_str().unwrap().contains("malformed"));
    }
    let bad_coef = write(&dir, "coef.json", r#"{"n":1,"terms":[{"coef":"1/0","exps":[]}]}"#);
    assert_eq!(code(&boxpoly(&["solve", s(&bad_coef)])), 1);
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&boxpoly(&["analyze", s(&missing)])), 1);
    // usage errors follow the same contract
    let o = boxpoly(&["solve"]);
    assert_eq!(code(&o), 1);
    assert!(json_out(&o)["error"].is_string());
}

#[test]
fn oracle_one_variable() {
    let dir = TempDir::new().unwrap();
    let inst = write(
        &dir,
        "q.json",
        r#"{"n":1,"terms":[{"coef":"1","exps":[[0,2]]},{"coef":"-1","exps":[[0,1]]}]}"#,
    );
    let o = json_out(&boxpoly(&["oracle", s(&inst)]));
    assert_eq!(o["value"], "-1/4");
    assert_eq!(o["point"][0], "1/2");
}

#[test]
fn solve_agrees_with_oracle_on_quadratics() {
    let dir = TempDir::new().unwrap();
    for seed in 0..4 {
        let inst = gen(
            &dir,
            &format!("t{seed}.json"),
            &["--kind", "tree-backbone", "--m", "2", "--block-size", "2", "--nbr-size", "2", "--seed", &seed.to_string()],
        );
        let sol = json_out(&boxpoly(&["solve", s(&inst)]));
        let ora = json_out(&boxpoly(&["oracle", s(&inst)]));
        assert_eq!(sol["value"], ora["value"], "seed {seed}");
        assert_eq!(sol["certificate"]["ok"], true);
    }
}

#[test]
fn cubic_solve_within_oracle_gap() {
    let dir = TempDir::new().unwrap();
    let inst = gen(
        &dir,
        "c.json",
        &["--kind", "tree-backbone", "--m", "2", "--block-size", "2", "--nbr-size", "2", "--degree", "3", "--seed", "3"],
    );
    let sol = json_out(&boxpoly(&["solve", s(&inst)]));
    let ora = json_out(&boxpoly(&["oracle", s(&inst), "--tol", "1e-6"]));
    let v = sol["value"].as_f64().unwrap();
    let w = ora["value"].as_f64().unwrap();
    let slack = 1e-6 + ora["gap_bound"].as_f64().unwrap() + sol["diagnostics"]["gap_bound"].as_f64().unwrap();
    assert!((v - w).abs() <= slack, "{v} vs {w}");
}

#[test]
fn output_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let args = ["--kind", "random-sparse", "--m", "4", "--block-size", "2", "--nbr-size", "2", "--seed", "11"];
    let a = gen(&dir, "a.json", &args);
    let b = gen(&dir, "b.json", &args);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let c = gen(&dir, "c.json", &["--kind", "random-sparse", "--m", "4", "--block-size", "2", "--nbr-size", "2", "--seed", "12"]);
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());

    let first = boxpoly(&["solve", s(&a)]).stdout;
    let second = boxpoly(&["solve", s(&a)]).stdout;
    assert_eq!(first, second);

    let cubic = gen(&dir, "d.json", &["--kind", "path-blocks", "--m", "3", "--degree", "3", "--seed", "5"]);
    assert_eq!(boxpoly(&["solve", s(&cubic)]).stdout, boxpoly(&["solve", s(&cubic)]).stdout);
}

#[test]
fn separable_tree_backbone() {
    let dir = TempDir::new().unwrap();
    let inst = gen(
        &dir,
        "sep.json",
        &["--kind", "tree-backbone", "--m", "4", "--block-size", "2", "--nbr-size", "0", "--seed", "1"],
    );
    let a = json_out(&boxpoly(&["analyze", s(&inst)]));
    assert_eq!(a["dmax"], 0);
    assert!(a["neighborhoods"].as_array().unwrap().iter().all(|n| n.as_array().unwrap().is_empty()));
}

#[test]
fn generated_instances_pass_their_own_bounds() {
    let dir = TempDir::new().unwrap();
    let cases: &[&[&str]] = &[
        &["--kind", "path-blocks", "--m", "6"],
        &["--kind", "tree-backbone", "--m", "5", "--block-size", "3", "--nbr-size", "3"],
        &["--kind", "random-sparse", "--m", "5", "--block-size", "2", "--nbr-size", "3"],
        &["--kind", "tree-backbone", "--m", "3", "--block-size", "2", "--nbr-size", "2", "--degree", "3"],
    ];
    for (k, case) in cases.iter().enumerate() {
        for seed in 0..3 {
            let name = format!("g{k}_{seed}.json");
            let out = dir.path().join(&name);
            let mut args = vec!["gen"];
            args.extend_from_slice(case);
            let seed = seed.to_string();
            args.extend_from_slice(&["--seed", &seed, "--out", s(&out)]);
            let meta = json_out(&boxpoly(&args));
            let b = &meta["bounds"];
            let tw = b["tw_max"].to_string();
            let nbr = b["nbr_max"].to_string();
            let blk = b["block_max"].to_string();
            let o = boxpoly(&["analyze", s(&out), "--tw-max", &tw, "--nbr-max", &nbr, "--block-max", &blk]);
            assert_eq!(code(&o), 0, "{case:?} seed {seed}: {}", String::from_utf8_lossy(&o.stdout));
        }
    }
}

#[test]
fn invalid_generator_spec() {
    let o = boxpoly(&["gen", "--kind", "path-blocks", "--m", "0"]);
    assert_eq!(code(&o), 1);
    let o = boxpoly(&["gen", "--kind", "lattice", "--m", "2"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn bench_smoke() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("bench.csv");
    let o = boxpoly(&["bench", "--out", s(&out)]);
    assert_eq!(code(&o), 0);
    let summary = json_out(&o);
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header[0], "family");
    let n_col = header.iter().position(|c| *c == "n").unwrap();
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(summary["rows"], rows.len());
    for pair in rows.windows(2) {
        assert_eq!(pair[0].len(), header.len());
        if pair[0][0] == pair[1][0] {
            let a: usize = pair[0][n_col].parse().unwrap();
            let b: usize = pair[1][n_col].parse().unwrap();
            assert!(a < b);
        }
    }
}

#[test]
fn bpo_subcommand() {
    let dir = TempDir::new().unwrap();
    // 1 - z0 - z1 + 3 z0 z1 - z2 + z1 z2: minimum -1 at (1,0,1)
    let inst = write(
        &dir,
        "bpo.json",
        r#"{"nodes":[0,1,2],
            "edges":[{"vars":[0,1],"cost":"3"},{"vars":[1,2],"cost":"1"}],
            "node_costs":[{"var":0,"cost":"-1"},{"var":1,"cost":"-1"},{"var":2,"cost":"-1"}],
            "constant":"1"}"#,
    );
    let o = json_out(&boxpoly(&["bpo", s(&inst)]));
    assert_eq!(o["value"], "-1");
    assert_eq!(o["assignment"]["0"], 1);
    assert_eq!(o["assignment"]["1"], 0);
    assert_eq!(o["assignment"]["2"], 1);
}

#[test]
fn thread_count_from_environment() {
    let dir = TempDir::new().unwrap();
    let inst = gen(&dir, "pb.json", &["--kind", "path-blocks", "--m", "4"]);
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_boxpoly"))
            .args(["solve", s(&inst)])
            .env("BOXPOLY_THREADS", threads)
            .output()
            .unwrap()
    };
    let one = run("1");
    let two = run("2");
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, two.stdout);
    assert_eq!(code(&run("zero")), 1);
}

#[test]
fn solve_writes_file_and_timings() {
    let dir = TempDir::new().unwrap();
    let inst = gen(&dir, "pb.json", &["--kind", "path-blocks", "--m", "3"]);
    let out = dir.path().join("sol.json");
    let o = boxpoly(&["solve", s(&inst), "--timings", "--out", s(&out)]);
    assert_eq!(code(&o), 0);
    let sol: Json = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(sol["diagnostics"]["timings"]["total_ms"].is_number());
    assert_eq!(json_out(&o)["value"], sol["value"]);
    let plain = json_out(&boxpoly(&["solve", s(&inst)]));
    assert!(plain["diagnostics"].get("timings").is_none());
}
