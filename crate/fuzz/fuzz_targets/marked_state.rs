#![no_main]

use ionpair_grover::engine::Scheme;
use ionpair_grover::gates::TargetIndex;
use ionpair_grover::harness::{Format, Mode};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(t) = data.parse::<TargetIndex>() {
        assert_eq!(t.bitstring(), data.trim());
        assert_eq!(TargetIndex::from_ordinal(t.q(), t.ordinal()).unwrap(), t);
    }
    let _ = data.parse::<Scheme>();
    let _ = data.parse::<Format>();
    let _ = data.parse::<Mode>();
});
