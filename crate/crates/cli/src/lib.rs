//! Table rendering for the `treebias` command-line tool.

pub mod render;
