//! Benchmark environments and the experiment harness for `smartchoices`:
//! binary search, QuickSort pivot sampling and cache replacement, each run
//! side by side with hand-written baselines on identical instances.

pub mod envs;
pub mod harness;
pub mod report;
