use std::io::Write;

use cuspgroup::cli::{run, EXIT_OK, EXIT_USAGE, EXIT_VERIFY};
use cuspgroup::output::OutputRecord;
use num_bigint::BigUint;

const GOLDEN: &str = include_str!("../data/table1_golden.txt");

fn product_of(factorization: &str) -> BigUint {
    factorization
        .split(" * ")
        .fold(BigUint::from(1u32), |acc, term| {
            let (base, exp) = term.split_once('^').unwrap_or((term, "1"));
            acc * base
                .parse::<BigUint>()
                .unwrap()
                .pow(exp.parse::<u32>().unwrap())
        })
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["cuspgroup"];
    argv.extend_from_slice(args);
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

#[test]
fn order_plain_and_factored() {
    assert_eq!(
        cli(&["order", "-p", "13"]),
        (EXIT_OK, "1183\n".into(), String::new())
    );
    let (code, out, _) = cli(&["order", "-p", "17", "--factor"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.trim(), "235824 = 2^4 * 3 * 17^3");
    let (_, out, _) = cli(&["order", "-p", "5", "--factor"]);
    assert_eq!(out.trim(), "1 = 1");
}

#[test]
fn order_structure() {
    let (code, out, _) = cli(&["order", "-p", "13", "--structure"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out, "1183\ninvariant factors: [13, 91]\n");
}

#[test]
fn order_json_round_trip() {
    let (code, out, _) = cli(&["order", "-p", "29", "--factor", "--structure", "--json"]);
    assert_eq!(code, EXIT_OK);
    let rec = OutputRecord::from_json(out.trim()).unwrap();
    assert_eq!(rec.result.p, 29);
    let f = rec.result.factorization.as_ref().unwrap();
    assert_eq!(f.to_string(), "2^6 * 5 * 7^2 * 29^6 * 43^2");
    assert_eq!(f.value(), rec.result.order);
    let product = rec
        .result
        .invariant_factors
        .as_ref()
        .unwrap()
        .iter()
        .product::<BigUint>();
    assert_eq!(product, rec.result.order);
    assert_eq!(OutputRecord::from_json(&rec.to_json()).unwrap(), rec);
}

#[test]
fn table_matches_golden_rows() {
    let (code, out, _) = cli(&["table", "--pmax", "101", "--parallel"]);
    assert_eq!(code, EXIT_OK);
    let got: Vec<(String, String)> = out
        .lines()
        .map(|l| {
            let cols: Vec<&str> = l.split('\t').collect();
            assert_eq!(cols.len(), 3, "{l}");
            if !cols[2].contains("composite") {
                assert_eq!(
                    cols[1].parse::<BigUint>().unwrap(),
                    product_of(cols[2]),
                    "{l}"
                );
            }
            (cols[0].to_string(), cols[2].to_string())
        })
        .collect();
    for line in GOLDEN.lines() {
        let (p, fact) = line.split_once('\t').unwrap();
        assert!(
            got.contains(&(p.to_string(), fact.to_string())),
            "missing row {line}"
        );
    }
    let ps: Vec<u64> = got.iter().map(|(p, _)| p.parse().unwrap()).collect();
    assert_eq!(ps.len(), 24);
    assert!(ps.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn table_json_lines() {
    let (code, out, _) = cli(&["table", "--pmax", "19", "--json"]);
    assert_eq!(code, EXIT_OK);
    let orders: Vec<String> = out
        .lines()
        .map(|l| OutputRecord::from_json(l).unwrap().result.order.to_string())
        .collect();
    assert_eq!(orders, ["1", "1", "11", "1183", "235824", "10020999"]);
}

#[test]
fn genus_output() {
    assert_eq!(cli(&["genus", "-p", "11"]).1, "genus 1, cusps 5\n");
    assert_eq!(cli(&["genus", "-p", "13"]).1, "genus 3, cusps 6\n");
}

#[test]
fn verify_all_passes_for_small_primes() {
    for p in ["5", "7"] {
        let (code, out, _) = cli(&["verify", "-p", p, "--all"]);
        assert_eq!(code, EXIT_OK, "{out}");
        assert!(out.lines().all(|l| l.starts_with("PASS")), "{out}");
        assert!(out.contains("T+_h sign character"));
    }
}

#[test]
fn verify_eps_list() {
    let (code, out, _) = cli(&["verify", "-p", "13", "--eps-independence", "--eps", "7,11"]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.contains("θ independent of eps"));
}

#[test]
fn crosscheck_bundled_and_file() {
    let (code, out, _) = cli(&["crosscheck", "-p", "31"]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.contains("gcd/order = 4"));

    let mut f = tempfile_path("bad.csv");
    writeln!(f.1, "p,q,label,value\n13,53,J,1183\n13,79,J,1182").unwrap();
    let (code, _, _) = cli(&["crosscheck", f.0.to_str().unwrap(), "-p", "13"]);
    assert_eq!(code, EXIT_VERIFY);
    std::fs::remove_file(&f.0).unwrap();
}

fn tempfile_path(name: &str) -> (std::path::PathBuf, std::fs::File) {
    let path = std::env::temp_dir().join(format!("cuspgroup-{}-{name}", std::process::id()));
    let file = std::fs::File::create(&path).unwrap();
    (path, file)
}

#[test]
fn usage_errors() {
    for args in [
        &["order", "-p", "4"][..],
        &["order", "-p", "3"],
        &["order", "-p", "10007"],
        &["order", "-p", "5", "-k", "6"],
        &["table", "--pmax", "200"],
        &["crosscheck", "/nonexistent/file.csv"],
        &["frobnicate"],
    ] {
        let (code, _, err) = cli(args);
        assert_eq!(code, EXIT_USAGE, "{args:?}");
        assert!(!err.is_empty(), "{args:?}");
    }
    let (_, _, err) = cli(&["order", "-p", "4"]);
    assert!(err.contains("p must be a prime >= 5"));
}

#[test]
fn force_overrides_size_guard() {
    let (code, out, _) = cli(&[
        "table",
        "--pmax",
        "103",
        "--parallel",
        "--force",
        "--rho-budget",
        "1000",
    ]);
    assert_eq!(code, EXIT_OK);
    let last = out.lines().last().unwrap();
    assert!(last.starts_with("103\t"));
    assert!(last.contains("[composite "));
}
