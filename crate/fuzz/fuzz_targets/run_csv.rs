#![no_main]

use libfuzzer_sys::fuzz_target;
use smartchoices_bench::harness::metrics::TABLE_PERCENTILES;
use smartchoices_bench::harness::records::read_rows;
use smartchoices_bench::report::{build_report, write_report};

fuzz_target!(|data: &[u8]| {
    let Ok(rows) = read_rows(data) else {
        return;
    };
    let groups = build_report(&rows, &[1, 10, 1000], &TABLE_PERCENTILES);
    let runs: usize = groups.iter().map(|g| g.runs).sum();
    assert!(rows.is_empty() || runs >= 1);
    let mut out = Vec::new();
    write_report(&mut out, &groups, &TABLE_PERCENTILES).expect("in-memory write");
});
