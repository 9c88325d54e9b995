//! Chebyshev collocation on overlapping subdomains.
//!
//! Mapped Chebyshev–Gauss–Lobatto grids ([`chebcore`]) are fused into one
//! global derivative operator ([`overlap`]), which drives Newton solvers for
//! boundary-value problems ([`bvp`]) and a linear stability eigensolver for
//! miscible core-annular pipe flow ([`stability`]).

pub mod bvp;
pub mod chebcore;
pub mod cli;
pub mod config;
pub mod error;
pub mod linalg;
pub mod overlap;
pub mod stability;
