//! Experiment orchestration: test-cost evaluation, full-information gaps,
//! exhaustive oracles, the five-customer demo, batch runs and reporting.

mod demo;
mod eval;
mod experiment;
mod oracle;
mod report;

pub use demo::{
    demo_instance, run_illustrative_example, search_illustrative_example, DemoEntry, DemoReport, DEMO_METHODS,
    DEMO_SAMPLES, DEMO_TEST_DRAWS, DEMO_X,
};
pub use eval::{evaluate_test_cost, full_info_gap, TestCost};
pub use experiment::{
    load_instance, run_cell, run_experiment, CellResult, ExperimentConfig, ExperimentOutcome, PrescriptionSummary,
    ResultRow,
};
pub use oracle::{brute_force_by, brute_force_optimum, MAX_ORACLE_CUSTOMERS};
pub use report::{aggregate, read_rows, write_rows, write_table, TableRow};

#[cfg(test)]
mod tests;
