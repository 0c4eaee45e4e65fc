#![no_main]

use libfuzzer_sys::fuzz_target;
use uav_immune::harness::{read_results_csv, summarize, write_results_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(rows) = read_results_csv(data) else { return };
    let _ = summarize(&rows);
    let mut out = Vec::new();
    write_results_csv(&mut out, &rows).expect("in-memory write");
    let back = read_results_csv(out.as_slice()).expect("own output parses");
    assert_eq!(back.len(), rows.len());
});
