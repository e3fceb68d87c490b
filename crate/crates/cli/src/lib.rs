//! Report-writing front end for the `twochoice` engine.

pub mod args;
pub mod commands;
pub mod report;
