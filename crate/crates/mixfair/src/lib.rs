//! Standard-library companion of `mixfair-core`: JSON file formats, Graphviz
//! dumps, seeded instance generators and the `mixfair` command-line driver.

pub mod cli;
pub mod dot;
pub mod gen;
pub mod json;
