//! Monte Carlo experiments, scaling fits, verification suites and I/O.

mod experiment;
mod output;
mod sweep;
mod verify;

pub use experiment::{
    aggregate, reference_value, run_mc, simulate_values, thread_pool, word_on_path, CompareTo, Experiment,
    MomentReport, Outputs, WordStats, MAX_BLOWUP_FRACTION,
};
pub use output::{read_csv, read_json, report_rows, write_csv, write_csv_file, write_json, write_json_file, ReportRow};
pub use sweep::{fit_line, fit_loglog, scaling_sweep, SlopeFit, SweepResult, WordSweep};
pub use verify::{
    closed_form_suite, laplacian_suite, magic_suite, random_trace_polynomial, rel_err, rho_nu_suite, routes_suite,
    star_patterns, timed_words, verify, CheckOutcome, VerifyLevel, VerifyReport,
};
