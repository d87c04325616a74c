#![no_main]

use libfuzzer_sys::fuzz_target;
use smartchoices_bench::harness::config::{parse_entries, ExperimentConfig, Problem};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(entries) = parse_entries(text) else {
        return;
    };
    // every entry has a unique, non-empty key
    for (i, e) in entries.iter().enumerate() {
        assert!(!e.key.is_empty());
        assert!(entries[..i].iter().all(|o| o.key != e.key));
    }
    for (problem, variant) in [(Problem::BinarySearch, "mix"), (Problem::QuickSort, "learned"), (Problem::Cache, "continuous-freq")] {
        if let Ok(config) = ExperimentConfig::from_text(problem, variant, text) {
            assert!(config.validate().is_ok());
        }
    }
});
