#![no_main]

use ionpair_grover::harness::TrajectoryFile;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(file) = TrajectoryFile::parse_csv(data) {
        let again = TrajectoryFile::parse_csv(&file.to_csv()).expect("written file parses");
        assert_eq!(again, file);
        let _ = file.to_trajectory().expect("validated file converts");
    }
});
