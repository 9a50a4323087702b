//! End-to-end acceptance: one PASS/FAIL line per criterion.

use std::collections::HashMap;
use std::thread;

use paraspec::report::DecayReport;
use paraspec::suites::{run_suite, SuiteConfig, SUITES};

fn note_f64(r: &DecayReport, key: &str) -> Option<f64> {
    r.environment.notes.get(key).and_then(|v| v.as_f64())
}

/// Propagator audits recorded by a semiclassical report.
fn audits_ok(r: &DecayReport) -> (bool, String) {
    let drift = note_f64(r, "max_l2_drift").unwrap_or(f64::INFINITY);
    let exact = r.environment.notes.get("richardson").and_then(|v| v.as_str()) == Some("exact");
    let (lo, hi) = (note_f64(r, "richardson_min"), note_f64(r, "richardson_max"));
    let ratio_ok = exact || matches!((lo, hi), (Some(a), Some(b)) if a >= 3.4 && b <= 4.6);
    let ratio = if exact { "exact".to_string() } else { format!("[{:.3}, {:.3}]", lo.unwrap_or(f64::NAN), hi.unwrap_or(f64::NAN)) };
    (drift <= 1e-8 && ratio_ok, format!("{}: drift {drift:.1e}, ratio {ratio}", r.suite_id))
}

fn summary(reports: &[DecayReport]) -> String {
    reports
        .iter()
        .map(|r| format!("{} slope {:.3} max {:.2e}", r.suite_id, r.fitted_slope, r.points.iter().map(|p| p.norm).fold(0.0, f64::max)))
        .collect::<Vec<_>>()
        .join("; ")
}

fn main() {
    let cfg = SuiteConfig::default();
    let results: HashMap<&str, Vec<DecayReport>> = thread::scope(|s| {
        let handles: Vec<_> = SUITES
            .iter()
            .map(|&name| {
                let cfg = cfg.clone();
                (name, s.spawn(move || run_suite(name, &cfg)))
            })
            .collect();
        handles
            .into_iter()
            .map(|(name, h)| {
                let reports = match h.join().expect("suite thread panicked") {
                    Ok(o) => o.reports,
                    Err(e) => {
                        println!("{name}: error {e}");
                        Vec::new()
                    }
                };
                (name, reports)
            })
            .collect()
    });

    let mut lines = Vec::new();
    for (k, &name) in SUITES.iter().enumerate().take(10) {
        let reports = &results[name];
        let pass = !reports.is_empty() && reports.iter().all(|r| r.pass);
        lines.push((k + 1, name.to_string(), pass, summary(reports)));
    }

    let audited: Vec<&DecayReport> = ["dispersion", "strichartz"].iter().flat_map(|n| results[n].iter()).collect();
    let checks: Vec<(bool, String)> = audited.iter().map(|r| audits_ok(r)).collect();
    let pass11 = !checks.is_empty() && checks.iter().all(|c| c.0);
    lines.push((11, "propagator-audits".into(), pass11, checks.into_iter().map(|c| c.1).collect::<Vec<_>>().join("; ")));

    let wkb = &results["wkb-defect"];
    lines.push((12, "wkb-defect".into(), !wkb.is_empty() && wkb.iter().all(|r| r.pass), summary(wkb)));

    for (k, name, pass, detail) in &lines {
        println!("[{}] {k:>2} {name}: {detail}", if *pass { "PASS" } else { "FAIL" });
    }
    let failed: Vec<_> = lines.iter().filter(|l| !l.2).map(|l| l.1.clone()).collect();
    if !failed.is_empty() {
        eprintln!("failing criteria: {failed:?}");
        std::process::exit(1);
    }
}
