pub mod bsearch;
pub mod cache;
pub mod qsort;
