//! Oracles and checks shared by the integration suites and the acceptance run.
#![allow(dead_code)]

pub mod algebra;
pub mod fixtures;
pub mod grads;
pub mod kge_checks;
pub mod oracles;

/// One acceptance check: whether it held plus a short measurement summary.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}
