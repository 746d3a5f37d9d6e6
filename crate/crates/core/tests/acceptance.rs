//! Prints one line per acceptance criterion and fails if any verdict or
//! set of failing checks differs from the recorded one.

use std::process::ExitCode;

use wavelaws::acceptance::run_all;

/// Items known not to meet their tolerance. See the README for the analysis.
fn expected_failures(id: &str) -> &'static [&'static str] {
    match id {
        "A3" => &[
            "omega=0.5/vT2_conserved",
            "omega=0.5/vT3_conserved",
            "omega=0/vT3_conserved",
        ],
        "A4" => &[
            "omega=0.5/vort_weak_B_n2",
            "omega=0.5/vort_weak_B_n2_ratio",
            "omega=0.5/vort_weak_B_n3",
            "omega=0.5/vort_weak_B_n3_ratio",
        ],
        "A6" => &[
            "omega=0/bulk_I4_conserved",
            "omega=0/bulk_I5_conserved",
            "omega=0/bulk_I8_conserved",
            "omega=0.5/bulk_I4_conserved",
            "omega=0.5/bulk_I5_conserved",
            "omega=0.5/bulk_I6_conserved",
            "omega=0.5/bulk_I8_conserved",
        ],
        _ => &[],
    }
}

fn main() -> ExitCode {
    let outcome = run_all();
    let mut surprises = Vec::new();
    for c in &outcome.criteria {
        println!("{}", c.line());
        for d in &c.details {
            println!("    {d}");
        }
        let want = expected_failures(c.id);
        if c.failures != want {
            surprises.push(format!("{}: failing {:?}, recorded {:?}", c.id, c.failures, want));
        }
    }
    let ids: Vec<&str> = outcome.criteria.iter().map(|c| c.id).collect();
    if ids != ["A1", "A2", "A3", "A4", "A5", "A6", "A7", "A8"] {
        surprises.push(format!("criteria {ids:?}"));
    }
    if surprises.is_empty() {
        println!("acceptance verdicts match the recorded ones");
        ExitCode::SUCCESS
    } else {
        for s in &surprises {
            eprintln!("unexpected: {s}");
        }
        ExitCode::FAILURE
    }
}
