#![allow(dead_code)]

pub mod graphs;
pub mod eval;
pub mod mini;
pub mod synth;
pub mod poincare;
