//! Supporting integration suites that share the acceptance binary.

mod appendix;
mod cli;
mod cone;
mod heat;
mod transport;
