//! Acceptance criteria 1-10. Pass criterion numbers as arguments to run a subset.

use std::process::ExitCode;

use meshlessbif::reproduce::run_criterion;

fn main() -> ExitCode {
    let selected: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let ids: Vec<u8> = if selected.is_empty() { (1..=10).collect() } else { selected };
    let mut failed = 0;
    for id in ids {
        let out = run_criterion(id).expect("criterion ids are 1..=10");
        println!(
            "{} criterion {:>2} ({}): {} [{:.1} s]",
            if out.pass { "PASS" } else { "FAIL" },
            out.id,
            out.title,
            out.detail,
            out.seconds
        );
        failed += usize::from(!out.pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
