use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use redist_core::ensemble::{load_ensemble, payload};
use redist_core::graph::{write_graph, DualGraph, Precinct, VoteCount};
use serde_json::Value;
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn redist(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_redist"))
        .env_remove("REDIST_OUT_DIR")
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("spawn redist")
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn ingest_writes_bundle_and_reports() {
    let dir = TempDir::new().unwrap();
    let out = redist(
        dir.path(),
        &[
            "ingest",
            "--graph",
            s(&fixture("defective.json")),
            "--components",
            s(&fixture("defective_components.csv")),
        ],
    );
    ok(&out);
    let report = json(&dir.path().join("ingest_report.json"));
    assert_eq!(report["merge"]["nodes_before"], 11);
    assert_eq!(report["merge"]["nodes_after"], 9);
    assert_eq!(report["validation"]["connected"], true);
    assert!(dir.path().join("graph.json").exists());
}

#[test]
fn ingest_carries_a_plan() {
    let dir = TempDir::new().unwrap();
    let g = fixture("grid4x4.json");
    let p = fixture("grid4x4_quadrants.csv");
    ok(&redist(dir.path(), &["ingest", "--graph", s(&g), "--plan", s(&p)]));
    let report = json(&dir.path().join("ingest_report.json"));
    assert_eq!(report["plan"]["districts"], 4);
    assert_eq!(report["plan"]["contiguous"], true);
    assert_eq!(std::fs::read_to_string(dir.path().join("plan.csv")).unwrap().lines().count(), 16);
}

#[test]
fn bad_edge_is_a_data_error_naming_the_id() {
    let dir = TempDir::new().unwrap();
    let out = redist(dir.path(), &["ingest", "--graph", s(&fixture("bad_edge.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("p9999"));
}

#[test]
fn usage_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    assert_eq!(redist(dir.path(), &["ingest"]).status.code(), Some(1));
    assert_eq!(redist(dir.path(), &["frobnicate"]).status.code(), Some(1));
}

#[test]
fn out_dir_defaults_from_environment() {
    let dir = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_redist"))
        .env("REDIST_OUT_DIR", dir.path())
        .args(["ingest", "--graph", s(&fixture("grid4x4.json"))])
        .output()
        .unwrap();
    ok(&out);
    assert!(dir.path().join("ingest_report.json").exists());
}

#[test]
fn run_writes_one_record_per_step() {
    let dir = TempDir::new().unwrap();
    let out = redist(
        dir.path(),
        &["run", "--graph", s(&fixture("grid4x4.json")), "--config", s(&fixture("run.cfg")), "--chains", "3"],
    );
    ok(&out);
    for i in 0..3 {
        let t = load_ensemble(dir.path().join(format!("chain_{i}.csv"))).unwrap();
        assert_eq!(t.len(), 100);
        assert_eq!(t.manifest_value("chain_index"), Some(i.to_string().as_str()));
        assert_eq!(t.manifest_value("seed"), Some("12345"));
    }
}

#[test]
fn runs_are_deterministic_and_chains_differ() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let (g, cfg) = (fixture("grid4x4.json"), fixture("run.cfg"));
    let args = ["run", "--graph", s(&g), "--config", s(&cfg), "--chains", "2"];
    ok(&redist(a.path(), &args));
    ok(&redist(b.path(), &args));
    let read = |d: &TempDir, i: usize| std::fs::read_to_string(d.path().join(format!("chain_{i}.csv"))).unwrap();
    assert_eq!(payload(&read(&a, 0)), payload(&read(&b, 0)));
    assert_eq!(payload(&read(&a, 1)), payload(&read(&b, 1)));
    assert_ne!(payload(&read(&a, 0)), payload(&read(&a, 1)));

    let c = TempDir::new().unwrap();
    let mut other = args.to_vec();
    other.extend(["--seed", "7"]);
    ok(&redist(c.path(), &other));
    assert_ne!(payload(&read(&a, 0)), payload(&read(&c, 0)));
}

#[test]
fn constraint_violating_start_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("tight.cfg");
    std::fs::write(&cfg, "proposal = recom\nsteps = 10\nseed = 1\npop_tolerance = 0.01\n").unwrap();
    // Three precincts against thirteen.
    let plan = dir.path().join("lopsided.csv");
    let body: String = (0..16).map(|i| format!("p{i:04},{}\n", u32::from(i >= 3))).collect();
    std::fs::write(&plan, body).unwrap();
    let out = redist(
        dir.path(),
        &["run", "--graph", s(&fixture("grid4x4.json")), "--config", s(&cfg), "--plan", s(&plan)],
    );
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(out.status.code(), Some(2), "{stderr}");
    assert!(stderr.contains("constraint"), "{stderr}");
}

#[test]
fn single_record_ensemble_puts_enacted_at_fiftieth_percentile() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("one.cfg");
    // Any flip leaves a 7/9 split, far outside 1%, so the one step rejects.
    std::fs::write(&cfg, "proposal = uniform-flip\nsteps = 1\nseed = 3\npop_tolerance = 0.01\n").unwrap();
    let g = fixture("grid4x4.json");
    let enacted = fixture("grid4x4_columns.csv");
    ok(&redist(dir.path(), &["run", "--graph", s(&g), "--config", s(&cfg), "--plan", s(&enacted)]));
    let chain = dir.path().join("chain_0.csv");
    ok(&redist(dir.path(), &["analyze", s(&chain), "--graph", s(&g), "--plan", s(&enacted)]));
    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["records"], 1);
    for election in ["SEN", "GOV"] {
        let metrics = report["elections"][election]["metrics"].as_object().unwrap();
        assert!(metrics.len() >= 10);
        for (name, m) in metrics {
            assert_eq!(m["percentile"], 50.0, "{election}.{name}");
        }
        assert_eq!(report["elections"][election]["metrics"]["rmd"]["enacted"], 0.0);
    }
    assert_eq!(report["cut_edges"]["percentile"], 50.0);
    assert_eq!(report["duplicate_rate"], 0.0);
}

fn kind(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().next().unwrap().strip_prefix("# kind=").unwrap().to_string()
}

#[test]
fn analyze_emits_plot_data_and_agrees_across_starts() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("long.cfg");
    std::fs::write(&cfg, "proposal = recom\nsteps = 20000\nseed = 11\npop_tolerance = 0.01\n").unwrap();
    let g = fixture("grid4x4.json");
    let (cols, rows) = (fixture("grid4x4_columns.csv"), fixture("grid4x4_rows.csv"));
    let starts = [&cols, &rows, &cols, &rows];
    let mut args = vec!["run", "--graph", s(&g), "--config", s(&cfg)];
    for p in starts {
        args.extend(["--plan", s(p)]);
    }
    ok(&redist(dir.path(), &args));

    let chains: Vec<PathBuf> = (0..4).map(|i| dir.path().join(format!("chain_{i}.csv"))).collect();
    let mut args: Vec<&str> = vec!["analyze"];
    args.extend(chains.iter().map(|p| s(p)));
    args.extend(["--graph", s(&g), "--plan", s(&cols), "--election", "SEN", "--plot-samples", "500"]);
    ok(&redist(dir.path(), &args));

    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["records"], 80_000);
    assert!(report["elections"].get("GOV").is_none());
    let sen = &report["elections"]["SEN"];
    let tv = sen["density_tv"].as_f64().unwrap();
    assert!(tv < 0.05, "density check {tv}");
    assert!(sen["psrf"]["lrvs"]["value"].as_f64().unwrap() < 1.01);
    assert!(sen["psrf"]["efficiency_gap"]["value"].as_f64().unwrap() < 1.01);
    let rate = report["duplicate_rate"].as_f64().unwrap();
    assert!((0.0..=100.0).contains(&rate));

    let d = dir.path();
    assert_eq!(kind(&d.join("density_SEN.csv")), "density-overlay");
    assert_eq!(kind(&d.join("violins_SEN.csv")), "violins");
    assert_eq!(kind(&d.join("scatter_SEN.csv")), "scatter-marginals");
    assert_eq!(kind(&d.join("cut_edges.csv")), "histogram");

    let density = std::fs::read_to_string(d.join("density_SEN.csv")).unwrap();
    let header = density.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "bin_lo,bin_hi,chain_0,chain_1,chain_2,chain_3");
    let violins = std::fs::read_to_string(d.join("violins_SEN.csv")).unwrap();
    assert_eq!(violins.lines().filter(|l| l.starts_with("enacted,")).count(), 2);
    assert_eq!(violins.lines().filter(|l| l.starts_with("ensemble,")).count(), 1000);
    let hist = std::fs::read_to_string(d.join("cut_edges.csv")).unwrap();
    let total: u64 = hist.lines().skip(4).map(|l| l.split(',').nth(1).unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(total, 80_000);
}

#[test]
fn analyze_rejects_mismatched_columns() {
    let dir = TempDir::new().unwrap();
    let g = fixture("grid4x4.json");
    let cfg = fixture("run.cfg");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&redist(&a, &["run", "--graph", s(&g), "--config", s(&cfg)]));
    ok(&redist(&b, &["run", "--graph", s(&g), "--config", s(&cfg), "--election", "GOV"]));
    let out = redist(
        dir.path(),
        &[
            "analyze",
            s(&a.join("chain_0.csv")),
            s(&b.join("chain_0.csv")),
            "--graph",
            s(&g),
            "--plan",
            s(&fixture("grid4x4_columns.csv")),
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

fn swap_fixture(dir: &Path) -> PathBuf {
    // Seeding pairs a small all-Democratic precinct with a heavy 40% one;
    // trading that for a light 33% precinct is the only improving swap.
    let rows = [(10, 0, 3), (10, 60, 40), (10, 2, 1), (10, 90, 10)];
    let nodes = rows
        .iter()
        .enumerate()
        .map(|(i, &(population, rep, dem))| Precinct {
            id: format!("n{i:02}"),
            population,
            votes: vec![VoteCount::new(rep, dem)],
            centroid: Some((i as f64, 0.0)),
            area: 1.0,
        })
        .collect();
    let edges = (0..3).map(|i| (format!("n{i:02}"), format!("n{:02}", i + 1), 1)).collect();
    let g = DualGraph::new(vec!["E".into()], nodes, edges).unwrap();
    let path = dir.join("swap.json");
    write_graph(&g, &path).unwrap();
    path
}

#[test]
fn superdistrict_reports_the_single_swap() {
    let dir = TempDir::new().unwrap();
    let g = swap_fixture(dir.path());
    ok(&redist(dir.path(), &["superdistrict", "--graph", s(&g), "--election", "E"]));
    let report = json(&dir.path().join("superdistrict_report.json"));
    let swaps = report["swaps"].as_array().unwrap();
    assert_eq!(swaps.len(), 1);
    assert_eq!((swaps[0]["out"].as_str(), swaps[0]["incoming"].as_str()), (Some("n01"), Some("n02")));
    assert!(report["seed_share"].as_f64().unwrap() < 0.5);
    assert!(report["final_share"].as_f64().unwrap() > 0.5);
    let plan = std::fs::read_to_string(dir.path().join("superdistrict_plan.csv")).unwrap();
    assert_eq!(plan.lines().filter(|l| !l.starts_with('#')).count(), 4);
}

#[test]
fn superdistrict_without_improving_swaps() {
    let dir = TempDir::new().unwrap();
    ok(&redist(dir.path(), &["superdistrict", "--graph", s(&fixture("grid4x4.json")), "--election", "SEN"]));
    let report = json(&dir.path().join("superdistrict_report.json"));
    assert!(report["seed_share"].as_f64().unwrap() > 0.5);
    assert_eq!(report["swaps"].as_array().unwrap().len(), 0);
    assert_eq!(report["split_feasible"], true);
}

#[test]
fn superdistrict_unknown_election_is_a_data_error() {
    let dir = TempDir::new().unwrap();
    let out = redist(dir.path(), &["superdistrict", "--graph", s(&fixture("grid4x4.json")), "--election", "NOPE"]);
    assert_eq!(out.status.code(), Some(2));
}
