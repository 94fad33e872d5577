use std::collections::BTreeMap;

use num_traits::Zero;

use super::expr::{Coeff, Op, SymExpr, SymNode};
use super::parse::parse;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Nu1,
    Nu2,
    SharpNu1,
    SharpNu2,
}

/// Large-`k` coefficients of the four families, level by level.
#[derive(Debug, Clone)]
pub struct CoeffSeries {
    nu1: Vec<SymExpr>,
    nu2: Vec<SymExpr>,
    sharp1: Vec<SymExpr>,
    sharp2: Vec<SymExpr>,
}

fn half() -> Coeff {
    Coeff::new(1, 2)
}

impl Default for CoeffSeries {
    fn default() -> Self {
        Self::new()
    }
}

impl CoeffSeries {
    /// The series holding level 0 only.
    pub fn new() -> Self {
        let u = SymExpr::u();
        let ub = SymExpr::ubar();
        let nu1 = u.mul(&ub).apply(Op::Dbarinv).scale(Coeff::new(1, 4));
        let nu2 = ub.scale(half());
        CoeffSeries { sharp1: vec![nu1.sharp()], sharp2: vec![nu2.sharp()], nu1: vec![nu1], nu2: vec![nu2] }
    }

    /// The series through `level`.
    pub fn through(level: usize) -> Self {
        let mut s = Self::new();
        for l in 1..=level {
            s.recurrence_step(l).expect("levels are filled in order");
        }
        s
    }

    /// Number of levels computed.
    pub fn levels(&self) -> usize {
        self.nu1.len()
    }

    /// Fills level `l` from level `l − 1`.
    pub fn recurrence_step(&mut self, l: usize) -> Result<()> {
        if l == 0 || l > self.levels() {
            return Err(Error::MissingLevel(l, l.saturating_sub(1)));
        }
        if l < self.levels() {
            return Ok(());
        }
        let ub = SymExpr::ubar();
        let nu2 = ub.mul(&self.nu1[l - 1]).scale(half()).sub(&self.nu2[l - 1].apply(Op::D));
        let nu1 = SymExpr::u().mul(&nu2).apply(Op::Dbarinv).scale(half());
        self.sharp1.push(nu1.sharp());
        self.sharp2.push(nu2.sharp());
        self.nu1.push(nu1);
        self.nu2.push(nu2);
        Ok(())
    }

    pub fn family(&self, f: Family) -> &[SymExpr] {
        match f {
            Family::Nu1 => &self.nu1,
            Family::Nu2 => &self.nu2,
            Family::SharpNu1 => &self.sharp1,
            Family::SharpNu2 => &self.sharp2,
        }
    }

    pub fn get(&self, f: Family, l: usize) -> Result<&SymExpr> {
        let fam = self.family(f);
        fam.get(l).ok_or(Error::MissingLevel(l, fam.len().saturating_sub(1)))
    }
}

/// Coefficient of `k⁻⁴` in `(1 + Σ aₗ/k^{ℓ+1})(Σ bₗ/k^{ℓ+1})`:
/// `b₃ + b₂a₀ + b₁a₁ + b₀a₂`.
pub fn bracket3(a: &[SymExpr], b: &[SymExpr]) -> Result<SymExpr> {
    if a.len() < 3 {
        return Err(Error::MissingLevel(2, a.len().saturating_sub(1)));
    }
    if b.len() < 4 {
        return Err(Error::MissingLevel(3, b.len().saturating_sub(1)));
    }
    Ok((0..3).fold(b[3].clone(), |acc, i| acc.add(&b[2 - i].mul(&a[i]))))
}

/// One display term of a grouped expression; `node` may hold a derivative
/// of a product, so it is not canonical.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedTerm {
    pub coeff: Coeff,
    pub node: SymNode,
}

/// Rewrites pairs `X·Dbarinv(a) + X·Dbarinv(b)` with `a + b = D(w)` as
/// `X·Dbarinv(D(w))`, and likewise `Dinv` with `Dbar`. The canonical form of
/// the result equals the input.
pub fn group_total_derivatives(e: &SymExpr) -> Vec<GroupedTerm> {
    // (outer factors, inverse, coefficient) -> inverse arguments
    let mut groups: BTreeMap<(Vec<SymNode>, Op, Coeff), Vec<SymNode>> = BTreeMap::new();
    let mut out = Vec::new();
    for (node, c) in e.terms() {
        let factors = match node {
            SymNode::Product(fs) => fs.clone(),
            other => vec![other.clone()],
        };
        let inv = factors.iter().position(|f| matches!(f, SymNode::Apply(op, _) if op.is_inverse()));
        match inv {
            Some(i) => {
                let mut outer = factors.clone();
                let SymNode::Apply(op, child) = outer.remove(i) else { unreachable!() };
                groups.entry((outer, op, *c)).or_default().push(*child);
            }
            None => out.push(GroupedTerm { coeff: *c, node: node.clone() }),
        }
    }
    for ((outer, inv, c), mut children) in groups {
        let deriv = if inv == Op::Dbarinv { Op::D } else { Op::Dbar };
        let mut args: Vec<SymNode> = Vec::new();
        while let Some(first) = children.first().cloned() {
            match integrate_once(&first, deriv, &children) {
                Some((w, used)) => {
                    children.retain(|ch| !used.contains(ch));
                    args.push(SymNode::apply(deriv, w));
                }
                None => {
                    children.remove(0);
                    args.push(first);
                }
            }
        }
        for arg in args {
            let mut fs = outer.clone();
            fs.push(SymNode::apply(inv, arg));
            let node = if fs.len() == 1 { fs.pop().unwrap() } else { SymNode::Product(fs) };
            out.push(GroupedTerm { coeff: c, node });
        }
    }
    out
}

/// Finds `w` with `deriv(w)` a unit-coefficient sum of members of `pool`
/// that includes `m`, by stripping one derivative from a factor of `m`.
fn integrate_once(m: &SymNode, deriv: Op, pool: &[SymNode]) -> Option<(SymNode, Vec<SymNode>)> {
    let factors = match m {
        SymNode::Product(fs) => fs.clone(),
        other => vec![other.clone()],
    };
    for i in 0..factors.len() {
        let SymNode::Apply(op, inner) = &factors[i] else { continue };
        if *op != deriv {
            continue;
        }
        let mut fs = factors.clone();
        fs[i] = (**inner).clone();
        let w = fs.iter().fold(SymExpr::one(), |acc, f| acc.mul(&SymExpr::from_term(Coeff::from_integer(1), f.clone())));
        let [(wn, wc)] = w.terms().collect::<Vec<_>>()[..] else { continue };
        if *wc != Coeff::from_integer(1) {
            continue;
        }
        let dw = w.apply(deriv);
        if dw.len() > 1 && dw.terms().all(|(n, c)| *c == Coeff::from_integer(1) && pool.contains(n)) {
            return Some((wn.clone(), dw.terms().map(|(n, _)| n.clone()).collect()));
        }
    }
    None
}

/// Canonical expansion of grouped display terms.
pub fn expand_grouped(terms: &[GroupedTerm]) -> SymExpr {
    SymExpr::from_terms(terms.iter().map(|t| (t.coeff, t.node.clone()))).canonicalize()
}

/// The equation of motion assembled from the coefficient series.
#[derive(Debug, Clone)]
pub struct MnvDerivation {
    /// `[ν₁ ν₂♯]₃`.
    pub bracket_plain: SymExpr,
    /// `[ν₂ ν₁♯]₃`.
    pub bracket_sharp: SymExpr,
    /// `u_t = 2(I₁ + conj I₂)` with `I₁ = −[ν₁ ν₂♯]₃`, `I₂ = [ν₂ ν₁♯]₃`.
    pub velocity: SymExpr,
    /// The order-one part of `velocity`, `−(∂³ + ∂̄³)u`.
    pub linear: SymExpr,
    /// `u_t + ∂³u + ∂̄³u`, the cubic right-hand side.
    pub rhs: SymExpr,
    /// `rhs` with like terms combined into total derivatives.
    pub grouped: Vec<GroupedTerm>,
}

fn mismatch(what: &str, got: &SymExpr, want: &SymExpr) -> Error {
    let diff = got.sub(want);
    let first = diff.terms().next().map(|(n, c)| format!("{c}*{n}")).unwrap_or_default();
    Error::Derivation(format!("{what}: first differing term {first}"))
}

fn expect_zero(what: &str, e: &SymExpr) -> Result<()> {
    if e.is_zero() {
        Ok(())
    } else {
        Err(mismatch(what, e, &SymExpr::zero()))
    }
}

/// Derives the cubic mNV nonlinearity from the recurrences and checks every
/// intermediate claim: cancellation of orders 5 and 7, the dispersive part,
/// and the four ¾-weighted grouped terms.
pub fn derive_mnv() -> Result<MnvDerivation> {
    let s = CoeffSeries::through(3);
    let bracket_plain = bracket3(s.family(Family::Nu1), s.family(Family::SharpNu2))?;
    let bracket_sharp = bracket3(s.family(Family::SharpNu1), s.family(Family::Nu2))?;
    for (name, b) in [("[nu1 nu2#]", &bracket_plain), ("[nu2 nu1#]", &bracket_sharp)] {
        for order in [5, 7] {
            expect_zero(&format!("{name} order {order}"), &b.order_part(order))?;
        }
    }
    let velocity = bracket_sharp.conjugate().sub(&bracket_plain).scale(Coeff::from_integer(2));
    let linear = velocity.order_part(1);
    let dispersive = parse("d(d(d(u))) + db(db(db(u)))")?;
    if linear != dispersive.neg() {
        return Err(mismatch("linear part", &linear, &dispersive.neg()));
    }
    let rhs = velocity.add(&dispersive);
    if rhs.orders() != [3] {
        return Err(mismatch("non-cubic remainder", &rhs.sub(&rhs.order_part(3)), &SymExpr::zero()));
    }
    let grouped = group_total_derivatives(&rhs);
    if expand_grouped(&grouped) != rhs {
        return Err(Error::Derivation("grouping changed the expression".into()));
    }
    let three_quarters = Coeff::new(3, 4);
    if grouped.len() != 4 || grouped.iter().any(|t| t.coeff != three_quarters) {
        let shown: Vec<String> = grouped.iter().map(|t| format!("{}*{}", t.coeff, t.node)).collect();
        return Err(Error::Derivation(format!("expected four terms of weight 3/4, got {}", shown.join(" + "))));
    }
    Ok(MnvDerivation { bracket_plain, bracket_sharp, velocity, linear, rhs, grouped })
}

impl MnvDerivation {
    /// `(4/3)·rhs`.
    pub fn unit_bracket(&self) -> SymExpr {
        self.rhs.scale(Coeff::new(4, 3))
    }

    /// Human-readable form of the grouped right-hand side.
    pub fn grouped_string(&self) -> String {
        let mut s = String::new();
        for (i, t) in self.grouped.iter().enumerate() {
            if i > 0 {
                s.push_str(if t.coeff < Coeff::zero() { " - " } else { " + " });
            }
            let c = if i > 0 { num_traits::Signed::abs(&t.coeff) } else { t.coeff };
            s.push_str(&format!("{c}*{}", t.node));
        }
        s
    }
}
