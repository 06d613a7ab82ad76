//! Canonical heights, Green's functions and generalized Mandelbrot sets for
//! one-parameter families of polynomials over ℚ.

pub mod boettcher;
pub mod error;
pub mod family;
pub mod heights;
pub mod mandelbrot;
pub mod padic;
pub mod parse;
pub mod places;
pub mod poly;
pub mod prep;
pub mod roots;

pub use error::{Error, Result};
pub use family::ParamFamily;
pub use poly::{CPoly, LamPoly, RatPoly, Rational};
