use std::collections::HashMap;

use num_complex::Complex64;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::expr::{Atom, Op, SymExpr, SymNode};
use crate::field::ComplexField;
use crate::grid::Grid;
use crate::operators::{d_inv, d_z, dbar_inv, dbar_z};

/// Interprets `e` on a field: atoms become `u` and `ū`, operators the
/// spectral derivatives and Cauchy transforms.
pub fn numeric_eval(e: &SymExpr, u: &ComplexField) -> ComplexField {
    let mut cache = HashMap::new();
    let mut acc = ComplexField::zeros(*u.grid());
    for (node, c) in e.terms() {
        let v = eval_node(node, u, &mut cache);
        acc = &acc + &v.scale_re(c.to_f64().expect("finite rational"));
    }
    acc
}

fn eval_node(n: &SymNode, u: &ComplexField, cache: &mut HashMap<SymNode, ComplexField>) -> ComplexField {
    if let Some(v) = cache.get(n) {
        return v.clone();
    }
    let v = match n {
        SymNode::Atom(Atom::U) => u.clone(),
        SymNode::Atom(Atom::Ubar) => u.conj(),
        SymNode::Apply(op, c) => {
            let inner = eval_node(c, u, cache);
            match op {
                Op::D => d_z(&inner),
                Op::Dbar => dbar_z(&inner),
                Op::Dinv => d_inv(&inner),
                Op::Dbarinv => dbar_inv(&inner),
            }
        }
        SymNode::Product(fs) => fs.iter().fold(ComplexField::constant(*u.grid(), Complex64::new(1.0, 0.0)), |acc, f| {
            &acc * &eval_node(f, u, cache)
        }),
    };
    cache.insert(n.clone(), v.clone());
    v
}

/// A random sum of three complex Gaussians of width about one, centred within
/// distance one of the origin.
pub fn random_gaussian_mixture(grid: Grid, rng: &mut impl Rng) -> ComplexField {
    let bumps: Vec<(Complex64, Complex64, f64)> = (0..3)
        .map(|_| {
            let amp = Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
            let centre = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            (amp, centre, rng.gen_range(0.6..1.2))
        })
        .collect();
    ComplexField::from_fn(grid, |z| {
        bumps.iter().map(|(a, c, w)| a * (-(z - c).norm_sqr() / w).exp()).sum()
    })
}

/// Largest relative L² gap between `a` and `b` over `trials` random mixtures.
pub fn numeric_gap(a: &SymExpr, b: &SymExpr, grid: Grid, trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let diff = a.sub(b);
    (0..trials)
        .map(|_| {
            let u = random_gaussian_mixture(grid, &mut rng);
            let scale = numeric_eval(a, &u).l2_norm().max(numeric_eval(b, &u).l2_norm());
            let gap = numeric_eval(&diff, &u).l2_norm();
            if scale == 0.0 {
                gap
            } else {
                gap / scale
            }
        })
        .fold(0.0, f64::max)
}
