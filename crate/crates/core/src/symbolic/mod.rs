//! Exact operator calculus over `u`, `ū`, `∂`, `∂̄` and their inverses.
//!
//! Expressions are sums of monomials with rational coefficients, kept in a
//! normal form so that equality is structural. The large-`k` coefficients of
//! the eigenfunction families follow from a two-term recurrence, and the
//! `k⁻⁴` coefficient of their products yields the mNV nonlinearity.
//!
//! ```
//! use mnv_core::symbolic::{parse, CoeffSeries, Family};
//!
//! let s = CoeffSeries::through(1);
//! let nu21 = s.get(Family::Nu2, 1).unwrap();
//! assert_eq!(*nu21, parse("1/8*ub*dbi(u*ub) - 1/2*d(ub)").unwrap());
//! ```

mod eval;
mod expr;
mod parse;
mod series;

use once_cell::sync::Lazy;

pub use eval::{numeric_eval, numeric_gap, random_gaussian_mixture};
pub use expr::{Atom, Coeff, Op, SymExpr, SymNode};
pub use parse::parse;
pub use series::{
    bracket3, derive_mnv, expand_grouped, group_total_derivatives, CoeffSeries, Family, GroupedTerm, MnvDerivation,
};

use crate::error::{Error, Result};

const GOLDEN_SRC: &str = include_str!("golden.txt");

static GOLDEN: Lazy<Vec<(String, SymExpr)>> = Lazy::new(|| parse_golden(GOLDEN_SRC).expect("golden table parses"));

/// Parses `name = expression` lines; `#` starts a comment.
pub fn parse_golden(src: &str) -> Result<Vec<(String, SymExpr)>> {
    let mut out = Vec::new();
    for (i, line) in src.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (name, body) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse { pos: 0, msg: format!("line {}: missing '='", i + 1) })?;
        out.push((name.trim().to_string(), parse(body)?));
    }
    Ok(out)
}

/// The published expressions, by name.
pub fn golden(name: &str) -> Option<&'static SymExpr> {
    GOLDEN.iter().find(|(n, _)| n == name).map(|(_, e)| e)
}

/// All published expressions in file order.
pub fn golden_table() -> &'static [(String, SymExpr)] {
    &GOLDEN
}
