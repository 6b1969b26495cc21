#![no_main]

use libfuzzer_sys::fuzz_target;
use mgrit_cli::csvio::{parse_fig1_csv, parse_fig3_csv, parse_run_csv, parse_sweep_csv};

fuzz_target!(|data: &str| {
    let _ = parse_run_csv(data);
    let _ = parse_fig1_csv(data);
    let _ = parse_fig3_csv(data);
    let _ = parse_sweep_csv(data);
});
