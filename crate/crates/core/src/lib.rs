pub mod classify;
pub mod config;
pub mod experiments;
pub mod functionals;
pub mod hypotheses;
pub mod interp;
pub mod io;
pub mod nonlinearity;
pub mod roots;
pub mod shooting;
pub mod suites;
