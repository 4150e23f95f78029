//! Command line front end for `mcmu`: instance files, solver runs,
//! simulation traces and benchmark tables.

pub mod app;
pub mod bench;
pub mod io;
pub mod solvers;
