//! Acceptance battery: one PASS/FAIL line per criterion.
//!
//! Criteria 1–11 come from the `suite` task; criterion 12 reruns the suite
//! on a different thread count and compares the reports byte for byte.

use std::process::ExitCode;
use std::time::Duration;

use conley_cli::suite::{self, SuiteOutcome};
use conley_cli::{Format, ScenarioConfig, Task};

/// Wall-clock budgets, by criterion id.
const BUDGETS: [(usize, Duration); 2] = [(1, Duration::from_secs(10)), (3, Duration::from_secs(30))];

fn run_on(threads: usize, config: &ScenarioConfig) -> SuiteOutcome {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool");
    pool.install(|| suite::run(config)).expect("suite runs")
}

fn main() -> ExitCode {
    let config = ScenarioConfig::for_task(Task::Suite);
    let first = run_on(1, &config);
    let mut failed = 0;
    for c in &first.criteria {
        let budget = BUDGETS.iter().find(|(id, _)| *id == c.id).map(|&(_, b)| b);
        let in_budget = budget.map_or(true, |b| c.elapsed < b);
        let passed = c.passed && in_budget;
        failed += usize::from(!passed);
        let timing = match budget {
            Some(b) => format!("{:.2}s of {:.0}s", c.elapsed.as_secs_f64(), b.as_secs_f64()),
            None => format!("{:.2}s", c.elapsed.as_secs_f64()),
        };
        println!(
            "[{}] criterion {:>2} {:<26} ({timing}) {}",
            if passed { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            c.detail
        );
    }

    let second = run_on(4, &config);
    let (a, b) = (first.report.render(Format::Text), second.report.render(Format::Text));
    let identical = a.as_bytes() == b.as_bytes();
    failed += usize::from(!identical);
    println!(
        "[{}] criterion 12 {:<26} (1 vs 4 threads) {} bytes, identical: {identical}",
        if identical { "PASS" } else { "FAIL" },
        "determinism",
        a.len()
    );

    println!("acceptance: {} of 12 criteria passed", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
