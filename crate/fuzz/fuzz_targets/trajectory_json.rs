#![no_main]

use ionpair_grover::harness::TrajectoryFile;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(file) = TrajectoryFile::parse_json(text) {
        let again = TrajectoryFile::parse_json(&file.to_json()).expect("written file parses");
        assert_eq!(again, file);
    }
});
