use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;
use std::process::Command;

use clap::CommandFactory;
use regretlab_cli::args::Cli;
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_regretlab"));
    c.env_remove("REGRETLAB_SEED");
    c
}

struct Fixtures {
    dir: PathBuf,
}

impl Fixtures {
    fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("regretlab-cli-{tag}-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let files = [
            ("p.json", r#"{"probs": [0.5, 0.25, 0.25]}"#),
            ("q.json", r#"[0.2, 0.3, 0.5]"#),
            ("p2.json", r#"[0.9, 0.1]"#),
            ("q2.json", r#"[0.95, 0.05]"#),
            ("half.json", r#"[0.5, 0.5]"#),
            ("zero.json", r#"[1.0, 0.0]"#),
            ("third.json", r#"[0.3333333333333333, 0.6666666666666666]"#),
            ("b1.json", r#"[1.0, 0.0]"#),
            ("b2.json", r#"[0.0, 1.0]"#),
            ("actions.json", r#"{"actions": [{"values": [1.0, -1.0]}, {"values": [-1.0, 1.0]}]}"#),
            ("ends.json", r#"{"states": [[1.0, 0.0], [0.0, 1.0]]}"#),
            ("fields.json", r#"[0.5, -1.2, 2.0]"#),
            ("lengths.json", r#"{"lengths": [1.2, 1.7, 2.5]}"#),
            ("ints.json", r#"[1, 2, 2]"#),
            ("market.json", r#"{"matrix": [[2.0, 0.5], [0.5, 2.0]]}"#),
            ("obs.json", r#"{"values": [1.0, 2.0, 3.0]}"#),
            (
                "qubit.json",
                r#"{"shape": [2], "blocks": [[[0.5, 0.0], [0.5, 0.0], [0.5, 0.0], [0.5, 0.0]]]}"#,
            ),
            ("bad.json", r#"{"probs": [0.7, 0.7]}"#),
            ("e0.json", r#"[1.0, 0.0, 0.0]"#),
            ("e1.json", r#"[0.0, 1.0, 0.0]"#),
        ];
        for (name, body) in files {
            fs::write(dir.join(name), body).unwrap();
        }
        Self { dir }
    }

    fn path(&self, name: &str) -> String {
        self.dir.join(name).display().to_string()
    }

    /// Replaces `@name` tokens with fixture paths.
    fn args(&self, line: &str) -> Vec<String> {
        line.split_whitespace()
            .map(|t| match t.strip_prefix('@') {
                Some(name) => self.path(name),
                None => t.to_string(),
            })
            .collect()
    }
}

impl Drop for Fixtures {
    fn drop(&mut self) {
        let _ = fs::remove_dir_all(&self.dir);
    }
}

/// One invocation per leaf command, with the expected exit code.
const TABLE: &[(&str, i32)] = &[
    ("regret eval --actions @actions.json --state @half.json", 0),
    ("regret state --actions @actions.json --s1 @zero.json --s0 @third.json", 0),
    ("regret bregman-residual --actions @actions.json --states @ends.json --weights 0.3333333333333333,0.6666666666666667 --s @half.json", 0),
    ("regret reconstruct --generator neg-entropy --s0 @q.json --samples 20 --div kl", 0),
    ("regret example1", 0),
    ("div compute --name kl --a @p.json --b @q.json", 0),
    ("div separable --phi x-ln-x --a @p.json --b @q.json", 0),
    ("div translate --lambda 1 --mu 2 --t 0.5", 0),
    ("check monotone --div kl --dim 4 --samples 1000 --seed 7", 0),
    ("check sufficient --div kl --dim 3 --samples 50", 0),
    ("check local --div sqeuclid --dim 3 --samples 100", 3),
    ("check fit --div log-score --dim 3 --samples 100", 0),
    ("code huffman --probs @p.json --beta 2", 0),
    ("code shannon --probs @p.json", 0),
    ("code bounds --probs @q.json --beta 3", 0),
    ("code blockcode --lengths @lengths.json --n 3", 0),
    ("code kraft --lengths @ints.json", 0),
    ("score eval --rule log --q @q.json --p @p.json", 0),
    ("score regret --rule brier --p @p.json --q @q.json", 0),
    ("score proper --rule linear --dim 3 --samples 200", 3),
    ("score local --g ln --dim 3 --samples 100", 0),
    ("thermo exergy --mu 1 --fields @fields.json --beta 1.5 --beta0 0.4", 0),
    ("thermo gibbs --mu 1 --fields @fields.json --beta 1 --config +-+ --full", 0),
    ("folio optimal --example 5 --p @p2.json", 0),
    ("folio regret --example 5 --p @p2.json --q @q2.json", 0),
    ("folio curve --example 5 --steps 101", 0),
    ("folio rate --matrix @market.json --b @b1.json --p @half.json", 0),
    ("folio dominates --example 5 --b1 @b1.json --b2 @b2.json", 0),
    ("folio thresholds --example 5 --bisect", 0),
    ("folio gambling --matrix @market.json", 0),
    ("folio monotone --example 5 --samples 300", 3),
    ("state validate --state @bad.json", 3),
    ("state spectrum --state @qubit.json", 0),
    ("state entropy --state @p.json", 0),
    ("state inner --observable @obs.json --state @p.json", 0),
    ("state mix --states @ends.json --weights 0.25,0.75", 0),
    ("state orthogonal --s1 @e0.json --s2 @e1.json", 0),
    ("reproduce", 0),
];

fn leaves(cmd: &clap::Command, prefix: &str, out: &mut BTreeSet<String>) {
    let subs: Vec<_> = cmd.get_subcommands().filter(|c| c.get_name() != "help").collect();
    if subs.is_empty() {
        out.insert(prefix.trim().to_string());
    }
    for s in subs {
        leaves(s, &format!("{prefix} {}", s.get_name()), out);
    }
}

fn table_path(line: &str) -> String {
    line.split_whitespace()
        .take_while(|t| !t.starts_with('-'))
        .collect::<Vec<_>>()
        .join(" ")
}

#[test]
fn every_command_is_exercised() {
    let mut all = BTreeSet::new();
    leaves(&Cli::command(), "", &mut all);
    let covered: BTreeSet<String> = TABLE.iter().map(|(l, _)| table_path(l)).collect();
    let missing: Vec<_> = all.difference(&covered).collect();
    assert!(missing.is_empty(), "commands without a test invocation: {missing:?}");
}

#[test]
fn command_table_exit_codes() {
    let fx = Fixtures::new("table");
    for (line, code) in TABLE {
        let out = bin().args(fx.args(line)).output().unwrap();
        assert_eq!(
            out.status.code(),
            Some(*code),
            "{line}\nstdout: {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(!out.stdout.is_empty(), "{line} printed nothing");
    }
}

fn json(fx: &Fixtures, line: &str) -> Value {
    let out = bin().args(fx.args(line)).output().unwrap();
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{line}: {e}"))
}

#[test]
fn example1_values() {
    let fx = Fixtures::new("ex1");
    let v = json(&fx, "regret example1");
    assert_eq!(v["weighted_regret_at_half"], 0.0);
    assert!((v["weighted_regret_at_mean"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
    assert!((v["bregman_identity_residual"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn curve_csv_starts_at_ln2() {
    let out = bin().args(["folio", "curve", "--example", "5", "--steps", "101"]).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,G");
    assert_eq!(lines.len(), 102);
    let g0: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((g0 - std::f64::consts::LN_2).abs() < 1e-12);
    let g20: f64 = lines[21].split(',').nth(1).unwrap().parse().unwrap();
    assert!((g20 - 0.6 * std::f64::consts::LN_2).abs() < 1e-9);
}

#[test]
fn divergence_reports_infinity() {
    let fx = Fixtures::new("inf");
    let v = json(&fx, "div compute --name kl --a @half.json --b @zero.json");
    assert_eq!(v["infinite"], true);
    assert!(v["value"].is_null());
}

#[test]
fn violations_carry_certificates() {
    let fx = Fixtures::new("cert");
    let v = json(&fx, "check monotone --div sqeuclid --dim 3 --samples 300 --seed 1");
    assert_eq!(v["passed"], false);
    let first = &v["violations"][0];
    assert!(first["inputs"]["s1"].is_array() || first["inputs"]["s1"].is_object());
    assert!(first["gap"].as_f64().unwrap() > 0.0);
}

#[test]
fn seeded_output_is_byte_identical() {
    let fx = Fixtures::new("det");
    for line in [
        "check monotone --div sqeuclid --dim 3 --samples 200 --seed 11",
        "check local --div brier --dim 4 --samples 50 --seed 3",
        "code blockcode --probs @p.json --n 12 --samples 40 --seed 5",
        "regret reconstruct --generator sqnorm --s0 @q.json --samples 10 --seed 9",
    ] {
        let a = bin().args(fx.args(line)).output().unwrap();
        let b = bin().args(fx.args(line)).output().unwrap();
        assert_eq!(a.stdout, b.stdout, "{line}");
    }
}

#[test]
fn seed_comes_from_environment() {
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut c = bin();
        c.args(["check", "monotone", "--div", "sqeuclid", "--dim", "3", "--samples", "100"]);
        if let Some(s) = env {
            c.env("REGRETLAB_SEED", s);
        }
        if let Some(s) = flag {
            c.args(["--seed", s]);
        }
        c.output().unwrap().stdout
    };
    assert_eq!(run(Some("42"), None), run(None, Some("42")));
    assert_ne!(run(Some("42"), None), run(Some("43"), None));
}

#[test]
fn usage_errors_exit_with_two() {
    let fx = Fixtures::new("usage");
    for line in [
        "frobnicate",
        "div compute --name nope --a @p.json --b @q.json",
        "div compute --name kl --a @missing.json --b @q.json",
        "code huffman --probs @bad.json",
        "folio curve --example 4",
        "check local --div kl --dim 3 --samples 10 --tol",
    ] {
        let out = bin().args(fx.args(line)).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{line}");
    }
}

#[test]
fn reproduce_csv_lists_every_example() {
    let out = bin().args(["reproduce", "--format", "csv"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() > 20);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",true")));
}
