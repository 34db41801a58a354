#![no_main]

use libfuzzer_sys::fuzz_target;
use radial_shooter::config::parse_run_config;

fuzz_target!(|data: &str| {
    let _ = parse_run_config(data);
});
