#![allow(dead_code)]

pub mod bandits;
pub mod gradcheck;
