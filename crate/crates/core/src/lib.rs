#![no_std]

extern crate alloc;

pub mod einstein;
pub mod error;
pub mod expr;
pub mod jets;
pub mod operators;
pub mod riemann;
pub mod scenes;
pub mod tractor;

pub use error::{Error, Result};
pub use expr::{eval_expr_jet, parse_expression, Expr, ParseError};
pub use jets::{JetScalar, JetSpace, Rational};
