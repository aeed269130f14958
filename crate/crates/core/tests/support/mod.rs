#![allow(dead_code)]

pub mod grad_cases;
pub mod oracles;
