//! Runs the default synthetic budget sweep and prints the per-budget report.

use std::time::Instant;

use annoprio::pipeline::PipelineConfig;
use annoprio::sim::{
    default_budgets, report_table, run_budget_sweep, summary_text, SweepStrategy, SyntheticSpec,
};

fn main() -> annoprio::Result<()> {
    let n_seeds = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(20);
    let start = Instant::now();
    let result = run_budget_sweep(
        &SyntheticSpec::default(),
        &default_budgets(),
        &SweepStrategy::ALL,
        n_seeds,
        &PipelineConfig::default(),
    )?;
    print!("{}", report_table(&result)?);
    print!("{}", summary_text(&result)?);
    eprintln!("elapsed: {:.2?}", start.elapsed());
    Ok(())
}
