use std::collections::BTreeMap;
use std::fmt;

use num_rational::Rational64;
use num_traits::{One, Signed, Zero};

pub type Coeff = Rational64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    U,
    Ubar,
}

impl Atom {
    fn swapped(self) -> Atom {
        match self {
            Atom::U => Atom::Ubar,
            Atom::Ubar => Atom::U,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Op {
    D,
    Dbar,
    Dinv,
    Dbarinv,
}

impl Op {
    pub fn is_inverse(self) -> bool {
        matches!(self, Op::Dinv | Op::Dbarinv)
    }

    /// Image under complex conjugation.
    pub fn conjugate(self) -> Op {
        match self {
            Op::D => Op::Dbar,
            Op::Dbar => Op::D,
            Op::Dinv => Op::Dbarinv,
            Op::Dbarinv => Op::Dinv,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Op::D => "d",
            Op::Dbar => "db",
            Op::Dinv => "di",
            Op::Dbarinv => "dbi",
        }
    }
}

/// A monomial over `u`, `ū` and the four operators.
///
/// In canonical form derivatives sit directly on atoms (all `D` outside all
/// `Dbar`), the argument of an inverse is a single monomial with unit
/// coefficient, and a product is flat, sorted, has at least two factors and
/// holds at most one `Dbarinv` and one `Dinv` factor. The empty product is
/// the constant `1`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SymNode {
    Atom(Atom),
    Apply(Op, Box<SymNode>),
    Product(Vec<SymNode>),
}

impl SymNode {
    pub fn one() -> Self {
        SymNode::Product(Vec::new())
    }

    pub fn apply(op: Op, child: SymNode) -> Self {
        SymNode::Apply(op, Box::new(child))
    }

    /// Number of atoms.
    pub fn order(&self) -> usize {
        match self {
            SymNode::Atom(_) => 1,
            SymNode::Apply(_, c) => c.order(),
            SymNode::Product(fs) => fs.iter().map(SymNode::order).sum(),
        }
    }

    fn factors(&self) -> Vec<SymNode> {
        match self {
            SymNode::Product(fs) => fs.clone(),
            other => vec![other.clone()],
        }
    }

    /// `(atom, #D, #Dbar)` when the node is a derivative chain on an atom.
    fn as_chain(&self) -> Option<(Atom, u32, u32)> {
        match self {
            SymNode::Atom(a) => Some((*a, 0, 0)),
            SymNode::Apply(Op::D, c) => c.as_chain().map(|(a, p, q)| (a, p + 1, q)),
            SymNode::Apply(Op::Dbar, c) => c.as_chain().map(|(a, p, q)| (a, p, q + 1)),
            _ => None,
        }
    }

    fn chain(atom: Atom, p: u32, q: u32) -> SymNode {
        let mut node = SymNode::Atom(atom);
        for _ in 0..q {
            node = SymNode::apply(Op::Dbar, node);
        }
        for _ in 0..p {
            node = SymNode::apply(Op::D, node);
        }
        node
    }

    /// Rebuilds the node through the canonical algebra, with every atom and
    /// operator passed through `atom` and `op` (and the per-operator sign).
    fn rebuild(&self, atom: &impl Fn(Atom) -> Atom, op: &impl Fn(Op) -> (Op, i64)) -> SymExpr {
        match self {
            SymNode::Atom(a) => SymExpr::atom(atom(*a)),
            SymNode::Apply(o, c) => {
                let (o2, sign) = op(*o);
                c.rebuild(atom, op).apply(o2).scale(Coeff::from_integer(sign))
            }
            SymNode::Product(fs) => {
                fs.iter().fold(SymExpr::one(), |acc, f| acc.mul(&f.rebuild(atom, op)))
            }
        }
    }
}

/// A finite sum of monomials with exact rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SymExpr {
    terms: BTreeMap<SymNode, Coeff>,
}

impl SymExpr {
    pub fn zero() -> Self {
        SymExpr::default()
    }

    pub fn one() -> Self {
        SymExpr::from_term(Coeff::one(), SymNode::one())
    }

    pub fn atom(a: Atom) -> Self {
        SymExpr::from_term(Coeff::one(), SymNode::Atom(a))
    }

    pub fn u() -> Self {
        SymExpr::atom(Atom::U)
    }

    pub fn ubar() -> Self {
        SymExpr::atom(Atom::Ubar)
    }

    /// A single term, stored as given; see [`SymExpr::canonicalize`].
    pub fn from_term(c: Coeff, node: SymNode) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(node, c);
        }
        SymExpr { terms }
    }

    /// Sum of arbitrary (possibly non-canonical) terms.
    pub fn from_terms(terms: impl IntoIterator<Item = (Coeff, SymNode)>) -> Self {
        let mut out = SymExpr::zero();
        for (c, n) in terms {
            out.push(c, n);
        }
        out
    }

    fn push(&mut self, c: Coeff, node: SymNode) {
        let entry = self.terms.entry(node).or_insert_with(Coeff::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&SymNode, &Coeff)> {
        self.terms.iter()
    }

    pub fn add(&self, other: &SymExpr) -> SymExpr {
        let mut out = self.clone();
        for (n, c) in &other.terms {
            out.push(*c, n.clone());
        }
        out
    }

    pub fn sub(&self, other: &SymExpr) -> SymExpr {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> SymExpr {
        self.scale(-Coeff::one())
    }

    pub fn scale(&self, s: Coeff) -> SymExpr {
        if s.is_zero() {
            return SymExpr::zero();
        }
        SymExpr { terms: self.terms.iter().map(|(n, c)| (n.clone(), c * s)).collect() }
    }

    /// Product of two canonical expressions.
    pub fn mul(&self, other: &SymExpr) -> SymExpr {
        let mut out = SymExpr::zero();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let mut fs = a.factors();
                fs.extend(b.factors());
                out = out.add(&monomial(fs).scale(ca * cb));
            }
        }
        out
    }

    /// `op` applied to a canonical expression.
    pub fn apply(&self, op: Op) -> SymExpr {
        let mut out = SymExpr::zero();
        for (n, c) in &self.terms {
            out = out.add(&apply_node(op, n).scale(*c));
        }
        out
    }

    /// The terms with exactly `order` atoms.
    pub fn order_part(&self, order: usize) -> SymExpr {
        SymExpr {
            terms: self.terms.iter().filter(|(n, _)| n.order() == order).map(|(n, c)| (n.clone(), *c)).collect(),
        }
    }

    /// Distinct term orders present, ascending.
    pub fn orders(&self) -> Vec<usize> {
        let mut o: Vec<usize> = self.terms.keys().map(SymNode::order).collect();
        o.sort_unstable();
        o.dedup();
        o
    }

    /// Normal form: linearity, Leibniz expansion, inverse collapse, the
    /// pairwise product rule for inverses, then flatten/sort/merge.
    pub fn canonicalize(&self) -> SymExpr {
        let mut out = SymExpr::zero();
        for (n, c) in &self.terms {
            out = out.add(&n.rebuild(&|a| a, &|o| (o, 1)).scale(*c));
        }
        out
    }

    /// `u ↔ ū` with every operator application contributing a factor `−1`.
    pub fn sharp(&self) -> SymExpr {
        let mut out = SymExpr::zero();
        for (n, c) in &self.terms {
            out = out.add(&n.rebuild(&Atom::swapped, &|o| (o, -1)).scale(*c));
        }
        out
    }

    /// Formal complex conjugation: `u ↔ ū`, `D ↔ Dbar`, `Dinv ↔ Dbarinv`.
    pub fn conjugate(&self) -> SymExpr {
        let mut out = SymExpr::zero();
        for (n, c) in &self.terms {
            out = out.add(&n.rebuild(&Atom::swapped, &|o| (o.conjugate(), 1)).scale(*c));
        }
        out
    }
}

/// Canonical product of canonical factors.
fn monomial(mut factors: Vec<SymNode>) -> SymExpr {
    factors.sort();
    for inv in [Op::Dbarinv, Op::Dinv] {
        let idx: Vec<usize> = factors
            .iter()
            .enumerate()
            .filter(|(_, f)| matches!(f, SymNode::Apply(o, _) if *o == inv))
            .map(|(i, _)| i)
            .take(2)
            .collect();
        if let [i, j] = idx[..] {
            // Dbarinv(f) Dbarinv(g) = Dbarinv(f Dbarinv(g) + g Dbarinv(f))
            let fj = factors.remove(j);
            let fi = factors.remove(i);
            let (SymNode::Apply(_, f), SymNode::Apply(_, g)) = (&fi, &fj) else { unreachable!() };
            let f = node_expr(f);
            let g = node_expr(g);
            let inner = f.mul(&node_expr(&fj)).add(&g.mul(&node_expr(&fi)));
            return monomial(factors).mul(&inner.apply(inv));
        }
    }
    let node = match factors.len() {
        1 => factors.pop().unwrap(),
        _ => SymNode::Product(factors),
    };
    SymExpr::from_term(Coeff::one(), node)
}

/// A canonical node as a one-term expression.
fn node_expr(n: &SymNode) -> SymExpr {
    SymExpr::from_term(Coeff::one(), n.clone())
}

fn apply_node(op: Op, node: &SymNode) -> SymExpr {
    if op.is_inverse() {
        return SymExpr::from_term(Coeff::one(), SymNode::apply(op, node.clone()));
    }
    match node {
        SymNode::Product(fs) => {
            // Leibniz
            let mut out = SymExpr::zero();
            for i in 0..fs.len() {
                let rest: Vec<SymNode> = fs.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, f)| f.clone()).collect();
                out = out.add(&monomial(rest).mul(&apply_factor(op, &fs[i])));
            }
            out
        }
        single => apply_factor(op, single),
    }
}

fn apply_factor(op: Op, factor: &SymNode) -> SymExpr {
    if let Some((a, p, q)) = factor.as_chain() {
        let node = match op {
            Op::D => SymNode::chain(a, p + 1, q),
            _ => SymNode::chain(a, p, q + 1),
        };
        return SymExpr::from_term(Coeff::one(), node);
    }
    match (op, factor) {
        // inverse collapse
        (Op::D, SymNode::Apply(Op::Dinv, c)) | (Op::Dbar, SymNode::Apply(Op::Dbarinv, c)) => node_expr(c),
        // derivatives commute with the other inverse
        (Op::D, SymNode::Apply(inv @ Op::Dbarinv, c)) | (Op::Dbar, SymNode::Apply(inv @ Op::Dinv, c)) => {
            apply_node(op, c).apply(*inv)
        }
        _ => unreachable!("non-canonical factor {factor:?}"),
    }
}

fn write_node(f: &mut fmt::Formatter<'_>, n: &SymNode) -> fmt::Result {
    match n {
        SymNode::Atom(Atom::U) => write!(f, "u"),
        SymNode::Atom(Atom::Ubar) => write!(f, "ub"),
        SymNode::Apply(op, c) => {
            write!(f, "{}(", op.name())?;
            write_node(f, c)?;
            write!(f, ")")
        }
        SymNode::Product(fs) if fs.is_empty() => write!(f, "1"),
        SymNode::Product(fs) => {
            for (i, x) in fs.iter().enumerate() {
                if i > 0 {
                    write!(f, "*")?;
                }
                write_node(f, x)?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for SymNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, self)
    }
}

impl fmt::Display for SymExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (n, c)) in self.terms.iter().enumerate() {
            let mag = c.abs();
            match (i, c.is_negative()) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let constant = matches!(n, SymNode::Product(fs) if fs.is_empty());
            if constant {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write_node(f, n)?;
            } else {
                write!(f, "{mag}*")?;
                write_node(f, n)?;
            }
        }
        Ok(())
    }
}
