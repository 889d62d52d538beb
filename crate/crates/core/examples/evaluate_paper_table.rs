//! Recompute the error rates of a published map-matching evaluation table
//! from its (length, d+, d-) columns, and write it in the report format.
//!
//!     cargo run --example evaluate_paper_table

use cycletrail::evaluation::{write_report, EvaluationReport};

const ROWS: [(f64, f64, f64); 15] = [
    (11440.20, 82.50, 42.83),
    (5743.00, 3.80, 0.00),
    (626.10, 0.00, 0.00),
    (265.60, 0.00, 0.00),
    (9217.30, 0.00, 0.00),
    (904.80, 0.00, 0.00),
    (11516.60, 310.60, 367.43),
    (10977.40, 42.60, 161.22),
    (18506.00, 1271.50, 2619.59),
    (1278.80, 0.00, 0.00),
    (699.10, 53.20, 29.90),
    (13952.30, 294.00, 500.43),
    (7385.20, 217.80, 496.98),
    (8760.60, 16.90, 9.79),
    (14352.10, 2.30, 0.00),
];

fn main() -> cycletrail::Result<()> {
    let reports = ROWS
        .iter()
        .enumerate()
        .map(|(i, &(d0, dp, dm))| EvaluationReport::from_lengths((i + 1).to_string(), d0, dp, dm))
        .collect::<cycletrail::Result<Vec<_>>>()?;
    write_report(&reports, std::io::stdout())
}
