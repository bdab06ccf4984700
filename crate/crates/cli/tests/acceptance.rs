//! End-to-end acceptance: runs every registered experiment at its default
//! parameters, prints one PASS/FAIL line per criterion, then replays each
//! manifest and compares CSV bytes.

use solsym_cli::experiments::NAMES;
use solsym_cli::manifest::MANIFEST_FILE;
use solsym_cli::table::{Assertion, Cell};
use solsym_cli::{run_experiment, RunRequest, RunResult};
use std::collections::BTreeMap;
use std::path::Path;

struct Criterion {
    id: u32,
    title: &'static str,
    /// (experiment, assertion-name filter)
    parts: &'static [(&'static str, fn(&str) -> bool)],
    budget_s: f64,
}

fn any(_: &str) -> bool {
    true
}

fn mode0(name: &str) -> bool {
    name.starts_with("mode0_")
}

fn not_mode0(name: &str) -> bool {
    !mode0(name)
}

const CRITERIA: &[Criterion] = &[
    Criterion { id: 1, title: "bowl ODE suite", parts: &[("bowl-profile", any)], budget_s: 1.0 },
    Criterion { id: 2, title: "rotation-field rigidity", parts: &[("fit-rigidity", any)], budget_s: 30.0 },
    Criterion { id: 3, title: "alignment constant", parts: &[("align-constant", any)], budget_s: 120.0 },
    Criterion { id: 4, title: "mode decay", parts: &[("mode-decay", not_mode0)], budget_s: 120.0 },
    Criterion { id: 5, title: "kernel oracle and flux envelope", parts: &[("kernel-oracle", any), ("flux-bound", any)], budget_s: 60.0 },
    // Shares a run with criterion 4; the whole run's time bounds this part.
    Criterion { id: 6, title: "mode-0 identity", parts: &[("mode-decay", mode0)], budget_s: 10.0 },
    Criterion { id: 7, title: "improvement mechanism", parts: &[("improvement-sweep", any)], budget_s: 600.0 },
    Criterion {
        id: 8,
        title: "barrier negativity and maximum principle",
        parts: &[("barrier-sweep", any), ("translator-step3", any)],
        budget_s: 300.0,
    },
    Criterion { id: 9, title: "convex geometry", parts: &[("diameters", any), ("density-table", any)], budget_s: 180.0 },
];

/// Criteria that fail with faithful data, and the only assertions allowed
/// to fail for each. The two-sided rate check fails because the measured
/// boundary sups decay faster than the stated exponents; the one-sided
/// version (`*_rate_over_expected`) is still required to pass.
const KNOWN_DEVIATIONS: &[(u32, &[&str])] = &[(
    8,
    &["lateral_rate_relative_deviation", "split_rate_relative_deviation", "initial_rate_relative_deviation"],
)];

fn fmt(a: &Assertion) -> String {
    format!("{} = {} {} {}", a.name, a.measured.cell(), a.relation.symbol(), a.threshold.cell())
}

fn csv_files(dir: &Path, r: &RunResult) -> Vec<(String, Vec<u8>)> {
    r.manifest
        .artifacts
        .iter()
        .filter(|a| a.ends_with(".csv"))
        .map(|a| (a.clone(), std::fs::read(dir.join(a)).unwrap()))
        .collect()
}

#[test]
fn acceptance() {
    let root = tempfile::tempdir().unwrap();
    let mut runs: BTreeMap<&str, RunResult> = BTreeMap::new();
    for name in NAMES {
        let out = root.path().join("first").join(name);
        let r = run_experiment(&RunRequest { name: name.into(), out: Some(out), ..Default::default() })
            .unwrap_or_else(|e| panic!("{name}: {e}"));
        println!("ran {name} in {:.2} s", r.manifest.elapsed_s);
        runs.insert(name, r);
    }

    let mut verdicts: Vec<(u32, bool, Vec<String>)> = Vec::new();
    for c in CRITERIA {
        let mut selected: Vec<&Assertion> = Vec::new();
        let mut elapsed = 0.0;
        for (exp, keep) in c.parts {
            let r = &runs[exp];
            elapsed += r.manifest.elapsed_s;
            selected.extend(r.assertions.iter().filter(|a| keep(&a.name)));
        }
        assert!(!selected.is_empty(), "criterion {} selects no assertions", c.id);
        let failed: Vec<&Assertion> = selected.iter().copied().filter(|a| !a.pass).collect();
        let in_time = elapsed <= c.budget_s;
        let pass = failed.is_empty() && in_time;
        let mut detail = format!("{} ({} assertions, {:.2} s of {} s)", c.title, selected.len(), elapsed, c.budget_s);
        if !failed.is_empty() {
            detail += &format!("; failing: {}", failed.iter().map(|a| fmt(a)).collect::<Vec<_>>().join("; "));
        }
        if c.id == 8 {
            let one_sided: Vec<String> =
                selected.iter().filter(|a| a.name.ends_with("_rate_over_expected")).map(|a| fmt(a)).collect();
            detail += &format!("; one-sided: {}", one_sided.join("; "));
        }
        println!("criterion {} {}: {detail}", c.id, if pass { "PASS" } else { "FAIL" });
        let mut failing: Vec<String> = failed.iter().map(|a| a.name.clone()).collect();
        if !in_time {
            failing.push("runtime".into());
        }
        verdicts.push((c.id, pass, failing));
    }

    // Determinism: replay each manifest and compare every CSV byte for byte.
    let mut diffs = Vec::new();
    for (name, first) in &runs {
        let out = root.path().join("replay").join(name);
        let replay = run_experiment(&RunRequest {
            name: name.to_string(),
            config: Some(first.dir.join(MANIFEST_FILE)),
            out: Some(out.clone()),
            seed: None,
        })
        .unwrap();
        assert_eq!(replay.manifest.parameters, first.manifest.parameters);
        let a = csv_files(&first.dir, first);
        let b = csv_files(&out, &replay);
        if a != b {
            diffs.push(name.to_string());
        }
    }
    let det = diffs.is_empty();
    println!(
        "criterion 10 {}: determinism ({} experiments replayed{})",
        if det { "PASS" } else { "FAIL" },
        runs.len(),
        if det { String::new() } else { format!("; differing: {}", diffs.join(", ")) }
    );
    verdicts.push((10, det, diffs));

    for (id, pass, failing) in &verdicts {
        match KNOWN_DEVIATIONS.iter().find(|k| k.0 == *id) {
            Some((_, allowed)) => {
                let unexpected: Vec<&String> = failing.iter().filter(|f| !allowed.contains(&f.as_str())).collect();
                assert!(unexpected.is_empty(), "criterion {id}: undocumented failures {unexpected:?}");
                if *pass {
                    println!("note: criterion {id} is listed as a known deviation but passed");
                }
            }
            None => assert!(*pass, "criterion {id} failed: {failing:?}"),
        }
    }
}
