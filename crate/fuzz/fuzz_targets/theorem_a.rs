#![no_main]

use libfuzzer_sys::fuzz_target;
use radial_shooter::config::parse_theorem_a;

fuzz_target!(|data: &str| {
    let _ = parse_theorem_a(data);
});
