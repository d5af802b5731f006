pub mod binio;
pub mod complex;
pub mod config;
pub mod error;
pub mod experiment;
pub mod infer;
pub mod kg;
pub mod kge;
pub mod model;
pub mod nn;
pub mod paths;
pub mod ppr;
pub mod predictor;
pub mod qa;
pub mod reasoner;
pub mod text;
pub mod toy;
pub mod train;

pub use error::{Error, Result};
