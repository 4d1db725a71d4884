//! Boolean functions in algebraic normal form over register-qualified bits.
//!
//! An [`AnfExpr`] is an XOR of [`ProductTerm`]s plus a constant bit. Terms are
//! kept in a `BTreeSet`, so XOR-ing a term that is already present removes it
//! and every value is canonical by construction.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::AnfError;

/// Short register name such as `b` or `s`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegId(String);

impl RegId {
    pub fn new(name: impl Into<String>) -> Self {
        RegId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for RegId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for RegId {
    fn from(s: &str) -> Self {
        RegId(s.to_owned())
    }
}

impl PartialEq<str> for RegId {
    fn eq(&self, other: &str) -> bool {
        self.0 == other
    }
}

impl PartialEq<&str> for RegId {
    fn eq(&self, other: &&str) -> bool {
        self.0 == *other
    }
}

/// A variable of a feedback or combining function.
///
/// Bits are ordered by index first and register name second, which is the
/// order used when terms are printed. References to named combining outputs
/// (`H` inside `Z`) sort after all bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Var {
    Bit { reg: RegId, index: usize },
    Output(String),
}

impl Var {
    pub fn bit(reg: impl Into<RegId>, index: usize) -> Self {
        Var::Bit {
            reg: reg.into(),
            index,
        }
    }

    pub fn output(name: impl Into<String>) -> Self {
        Var::Output(name.into())
    }

    /// Register and index when this is a register bit.
    pub fn as_bit(&self) -> Option<(&RegId, usize)> {
        match self {
            Var::Bit { reg, index } => Some((reg, *index)),
            Var::Output(_) => None,
        }
    }

    pub fn is_bit_of(&self, register: &RegId) -> bool {
        matches!(self, Var::Bit { reg, .. } if reg == register)
    }
}

impl Ord for Var {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Var::Bit { reg: r1, index: i1 }, Var::Bit { reg: r2, index: i2 }) => {
                i1.cmp(i2).then_with(|| r1.cmp(r2))
            }
            (Var::Bit { .. }, Var::Output(_)) => Ordering::Less,
            (Var::Output(_), Var::Bit { .. }) => Ordering::Greater,
            (Var::Output(a), Var::Output(b)) => a.cmp(b),
        }
    }
}

impl PartialOrd for Var {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::Bit { reg, index } => write!(f, "{reg}[{index}]"),
            Var::Output(name) => f.write_str(name),
        }
    }
}

/// AND of a non-empty set of variables.
///
/// Variables are stored deduplicated in descending order. Terms compare by
/// degree first, then lexicographically on that descending listing.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProductTerm {
    vars: Vec<Var>,
}

impl ProductTerm {
    /// Builds a term; duplicates collapse (x·x = x). Returns `None` for an
    /// empty variable list.
    pub fn new(vars: impl IntoIterator<Item = Var>) -> Option<Self> {
        let set: BTreeSet<Var> = vars.into_iter().collect();
        if set.is_empty() {
            return None;
        }
        Some(ProductTerm {
            vars: set.into_iter().rev().collect(),
        })
    }

    /// Term over bits of a single register.
    pub fn of(reg: &str, indices: &[usize]) -> Self {
        ProductTerm::new(indices.iter().map(|&i| Var::bit(reg, i)))
            .expect("product term needs at least one variable")
    }

    pub fn single(var: Var) -> Self {
        ProductTerm { vars: vec![var] }
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn degree(&self) -> usize {
        self.vars.len()
    }

    pub fn contains(&self, var: &Var) -> bool {
        self.vars.contains(var)
    }

    /// Indices of the named register's bits in this term, descending.
    pub fn indices_of<'a>(&'a self, reg: &'a RegId) -> impl Iterator<Item = usize> + 'a {
        self.vars.iter().filter_map(move |v| match v {
            Var::Bit { reg: r, index } if r == reg => Some(*index),
            _ => None,
        })
    }

    /// Minimum and maximum index among `reg`'s variables, if any.
    pub fn index_span(&self, reg: &RegId) -> Option<(usize, usize)> {
        let mut it = self.indices_of(reg);
        let max = it.next()?;
        let min = it.last().unwrap_or(max);
        Some((min, max))
    }

    /// True when some variable is not a bit of `reg`.
    pub fn has_foreign(&self, reg: &RegId) -> bool {
        self.vars.iter().any(|v| !v.is_bit_of(reg))
    }

    pub fn evaluate<F>(&self, mut lookup: F) -> Result<bool, AnfError>
    where
        F: FnMut(&Var) -> Option<bool>,
    {
        let mut all = true;
        for v in &self.vars {
            match lookup(v) {
                Some(bit) => all &= bit,
                None => return Err(AnfError::Unassigned(v.clone())),
            }
        }
        Ok(all)
    }
}

impl Ord for ProductTerm {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.vars.cmp(&other.vars))
    }
}

impl PartialOrd for ProductTerm {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ProductTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.vars.iter().enumerate() {
            if i > 0 {
                f.write_str("*")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// XOR of product terms plus a constant.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct AnfExpr {
    terms: BTreeSet<ProductTerm>,
    constant: bool,
}

impl AnfExpr {
    pub fn zero() -> Self {
        AnfExpr::default()
    }

    pub fn constant(bit: bool) -> Self {
        AnfExpr {
            terms: BTreeSet::new(),
            constant: bit,
        }
    }

    pub fn var(var: Var) -> Self {
        AnfExpr::from_terms([ProductTerm::single(var)])
    }

    /// XOR of the given terms; repeated terms cancel pairwise.
    pub fn from_terms(terms: impl IntoIterator<Item = ProductTerm>) -> Self {
        let mut e = AnfExpr::zero();
        for t in terms {
            e.toggle(t);
        }
        e
    }

    pub fn terms(&self) -> &BTreeSet<ProductTerm> {
        &self.terms
    }

    pub fn constant_bit(&self) -> bool {
        self.constant
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && !self.constant
    }

    pub fn contains(&self, term: &ProductTerm) -> bool {
        self.terms.contains(term)
    }

    pub fn toggle(&mut self, term: ProductTerm) {
        if !self.terms.remove(&term) {
            self.terms.insert(term);
        }
    }

    pub fn set_constant(&mut self, bit: bool) {
        self.constant = bit;
    }

    /// Symmetric difference with `terms`; the constant is untouched.
    pub fn xor_merge<'a>(&self, terms: impl IntoIterator<Item = &'a ProductTerm>) -> AnfExpr {
        let mut out = self.clone();
        for t in terms {
            out.toggle(t.clone());
        }
        out
    }

    /// Full XOR of two expressions, constants included.
    pub fn xor(&self, other: &AnfExpr) -> AnfExpr {
        let mut out = self.xor_merge(other.terms.iter());
        out.constant ^= other.constant;
        out
    }

    pub fn evaluate_with<F>(&self, mut lookup: F) -> Result<bool, AnfError>
    where
        F: FnMut(&Var) -> Option<bool>,
    {
        let mut acc = self.constant;
        for t in &self.terms {
            acc ^= t.evaluate(&mut lookup)?;
        }
        Ok(acc)
    }

    pub fn evaluate(&self, assignment: &BTreeMap<Var, bool>) -> Result<bool, AnfError> {
        self.evaluate_with(|v| assignment.get(v).copied())
    }

    /// Every variable appearing in some term.
    pub fn support(&self) -> BTreeSet<Var> {
        self.terms
            .iter()
            .flat_map(|t| t.vars.iter().cloned())
            .collect()
    }

    /// Output names referenced by this expression.
    pub fn output_refs(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().flat_map(|t| {
            t.vars.iter().filter_map(|v| match v {
                Var::Output(n) => Some(n.as_str()),
                _ => None,
            })
        })
    }

    pub fn max_degree(&self) -> usize {
        self.terms.iter().map(ProductTerm::degree).max().unwrap_or(0)
    }

    pub fn analyze(&self) -> AnfSummary {
        let mut ranges: BTreeMap<RegId, (usize, usize)> = BTreeMap::new();
        for v in self.support() {
            if let Var::Bit { reg, index } = v {
                ranges
                    .entry(reg)
                    .and_modify(|r| {
                        r.0 = r.0.min(index);
                        r.1 = r.1.max(index);
                    })
                    .or_insert((index, index));
            }
        }
        AnfSummary {
            term_count: self.terms.len(),
            max_degree: self.max_degree(),
            index_ranges: ranges,
            support: self.support(),
        }
    }
}

impl fmt::Display for AnfExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str(if self.constant { "1" } else { "0" });
        }
        if self.constant {
            f.write_str("1")?;
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 || self.constant {
                f.write_str(" + ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

/// Shape statistics of an expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnfSummary {
    pub term_count: usize,
    pub max_degree: usize,
    /// Min and max index per register.
    pub index_ranges: BTreeMap<RegId, (usize, usize)>,
    pub support: BTreeSet<Var>,
}

/// Moves every index of `reg` by `delta` modulo `modulus`.
///
/// Terms that mention anything other than bits of `reg` are rejected.
pub fn remap_indices<'a>(
    terms: impl IntoIterator<Item = &'a ProductTerm>,
    reg: &RegId,
    delta: i64,
    modulus: usize,
) -> Result<Vec<ProductTerm>, AnfError> {
    let n = modulus as i64;
    terms
        .into_iter()
        .map(|t| {
            if t.has_foreign(reg) {
                return Err(AnfError::ForeignVariable {
                    register: reg.clone(),
                    term: t.to_string(),
                });
            }
            let vars = t.vars.iter().map(|v| {
                let (_, k) = v.as_bit().expect("checked above");
                Var::bit(reg.clone(), (k as i64 + delta).rem_euclid(n) as usize)
            });
            Ok(ProductTerm::new(vars).expect("non-empty"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn b(i: usize) -> Var {
        Var::bit("b", i)
    }

    #[test]
    fn evaluate_constant_zero_is_zero() {
        assert!(!AnfExpr::zero().evaluate(&BTreeMap::new()).unwrap());
    }

    #[test]
    fn evaluate_small_case() {
        let e = AnfExpr::from_terms([ProductTerm::of("b", &[0]), ProductTerm::of("b", &[1, 2])]);
        let a: BTreeMap<Var, bool> = [(b(0), true), (b(1), true), (b(2), false)].into();
        assert!(e.evaluate(&a).unwrap());
    }

    #[test]
    fn evaluate_reports_missing_variable() {
        let e = AnfExpr::from_terms([ProductTerm::of("b", &[0, 5])]);
        let a: BTreeMap<Var, bool> = [(b(0), true)].into();
        match e.evaluate(&a) {
            Err(AnfError::Unassigned(v)) => assert_eq!(v, b(5)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn xor_merge_cancels_and_adds() {
        let b0 = ProductTerm::of("b", &[0]);
        let b1 = ProductTerm::of("b", &[1]);
        let e = AnfExpr::from_terms([b0.clone(), b1.clone()]);
        assert_eq!(e.xor_merge([&b1]), AnfExpr::from_terms([b0.clone()]));
        let e = AnfExpr::from_terms([b0.clone()]);
        assert_eq!(e.xor_merge([&b1]), AnfExpr::from_terms([b0, b1]));
    }

    #[test]
    fn xor_merge_with_own_terms_leaves_constant() {
        let mut e = AnfExpr::from_terms([ProductTerm::of("b", &[3, 4]), ProductTerm::of("b", &[7])]);
        e.set_constant(true);
        let own: Vec<_> = e.terms().iter().cloned().collect();
        assert_eq!(e.xor_merge(&own), AnfExpr::constant(true));
    }

    #[test]
    fn term_listing_is_descending_and_deduplicated() {
        let t = ProductTerm::new([b(9), b(33), b(9), b(15)]).unwrap();
        assert_eq!(t.to_string(), "b[33]*b[15]*b[9]");
        assert_eq!(t.degree(), 3);
        assert_eq!(t, ProductTerm::of("b", &[15, 33, 9]));
    }

    #[test]
    fn display_orders_by_degree_then_indices() {
        let e = AnfExpr::from_terms([
            ProductTerm::of("b", &[3, 67]),
            ProductTerm::of("b", &[0]),
            ProductTerm::single(Var::bit("s", 0)),
            ProductTerm::of("b", &[26]),
        ]);
        assert_eq!(e.to_string(), "b[0] + s[0] + b[26] + b[67]*b[3]");
    }

    #[test]
    fn remap_examples() {
        let reg = RegId::from("b");
        let t = ProductTerm::of("b", &[33, 28, 21, 15, 9]);
        let out = remap_indices([&t], &reg, 70 - 79, 80).unwrap();
        assert_eq!(out, vec![ProductTerm::of("b", &[24, 19, 12, 6, 0])]);

        let t = ProductTerm::of("b", &[47, 44, 36, 29, 21]);
        let out = remap_indices([&t], &reg, 16, 80).unwrap();
        assert_eq!(out, vec![ProductTerm::of("b", &[63, 60, 52, 45, 37])]);

        assert_eq!(remap_indices([&t], &reg, 0, 80).unwrap(), vec![t.clone()]);
    }

    #[test]
    fn remap_rejects_foreign_variables() {
        let t = ProductTerm::new([Var::bit("s", 0), b(4)]).unwrap();
        assert!(matches!(
            remap_indices([&t], &RegId::from("b"), 1, 80),
            Err(AnfError::ForeignVariable { .. })
        ));
    }

    #[test]
    fn remap_wraps_modulo_length() {
        let t = ProductTerm::of("b", &[2]);
        let out = remap_indices([&t], &RegId::from("b"), -5, 8).unwrap();
        assert_eq!(out, vec![ProductTerm::of("b", &[5])]);
    }

    #[test]
    fn analyze_constant_zero() {
        let s = AnfExpr::zero().analyze();
        assert_eq!((s.term_count, s.max_degree), (0, 0));
        assert!(s.support.is_empty());
    }

    fn arb_term() -> impl Strategy<Value = ProductTerm> {
        prop::collection::btree_set(0usize..12, 1..4)
            .prop_map(|s| ProductTerm::new(s.into_iter().map(b)).unwrap())
    }

    proptest! {
        #[test]
        fn xor_merge_matches_set_symmetric_difference(
            batches in prop::collection::vec(prop::collection::vec(arb_term(), 0..6), 0..6)
        ) {
            let mut e = AnfExpr::zero();
            let mut oracle: BTreeSet<ProductTerm> = BTreeSet::new();
            for batch in &batches {
                // a batch is a set, so dedupe before merging
                let batch: BTreeSet<_> = batch.iter().cloned().collect();
                e = e.xor_merge(batch.iter());
                oracle = oracle.symmetric_difference(&batch).cloned().collect();
            }
            prop_assert_eq!(e.terms(), &oracle);
        }

        #[test]
        fn remap_inverse_is_identity(
            terms in prop::collection::vec(arb_term(), 0..8),
            delta in -40i64..40,
        ) {
            let reg = RegId::from("b");
            let fwd = remap_indices(&terms, &reg, delta, 12).unwrap();
            let back = remap_indices(&fwd, &reg, -delta, 12).unwrap();
            prop_assert_eq!(back, terms);
        }

        #[test]
        fn evaluate_is_linear_over_xor_merge(
            base in prop::collection::btree_set(arb_term(), 0..6),
            extra in prop::collection::btree_set(arb_term(), 0..6),
            bits in prop::collection::vec(any::<bool>(), 12),
        ) {
            let e = AnfExpr::from_terms(base);
            let lookup = |v: &Var| v.as_bit().map(|(_, i)| bits[i]);
            let merged = e.xor_merge(extra.iter()).evaluate_with(lookup).unwrap();
            let only = AnfExpr::from_terms(extra.iter().cloned()).evaluate_with(lookup).unwrap();
            prop_assert_eq!(merged, e.evaluate_with(lookup).unwrap() ^ only);
        }
    }
}
