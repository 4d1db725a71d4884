//! Fibonacci to Galois transformation of NLFSRs.
//!
//! Product terms move between feedback functions of one register with their
//! indices shifted by the distance between the two bits. A register is
//! *uniform* when every feedback is `x_{i+1} ⊕ g_i` with `g_i` independent
//! of `x_{i+1}`, and every `g_i` at or above the terminal bit reads only bits
//! at or below it. Shifting between uniform registers preserves the set of
//! output sequences; [`collapse_to_fibonacci`] undoes any such shifting and
//! [`map_initial_state`] gives the exact state correspondence.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::anf::{remap_indices, AnfExpr, ProductTerm, RegId, Var};
use crate::error::TransformError;
use crate::fsr::{RegisterSpec, SystemSpec, SystemState};
use crate::timing::{self, CostModel};

/// Move `terms` (source coordinates) from `f_source` to `f_destination`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftMove {
    pub register: RegId,
    pub source: usize,
    pub destination: usize,
    pub terms: BTreeSet<ProductTerm>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ShiftScript {
    pub moves: Vec<ShiftMove>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViolationKind {
    /// `f_i` lacks the linear successor term `x_{(i+1) mod n}`.
    NonSingular,
    /// `g_i` still reads `x_{(i+1) mod n}` inside a product.
    DependsOnSuccessor,
    /// `g_i` (at or above the terminal bit) reads a bit above the terminal bit.
    IndexAboveTerminal,
    /// Bit below the chosen terminal bit is not a pure shift.
    FeedbackBelowTerminal,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub bit: usize,
    pub kind: ViolationKind,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniformityReport {
    pub uniform: bool,
    pub terminal_bit: usize,
    pub violations: Vec<Violation>,
}

/// Largest `t` such that every bit below `t` is a pure shift.
pub fn terminal_bit(reg: &RegisterSpec) -> usize {
    reg.explicit()
        .keys()
        .next()
        .copied()
        .unwrap_or(reg.len() - 1)
        .min(reg.len() - 1)
}

/// Largest index spread `max - min` over the product terms of a Fibonacci
/// feedback function. Variables of other registers are ignored.
pub fn min_terminal_bit(feedback: &AnfExpr, reg: &RegId) -> usize {
    feedback
        .terms()
        .iter()
        .filter_map(|t| t.index_span(reg))
        .map(|(lo, hi)| hi - lo)
        .max()
        .unwrap_or(0)
}

/// Lowest terminal bit a Galois form of `reg` may use inside `system`:
/// the spread bound of its top feedback, raised to the highest bit of `reg`
/// read by any combining output.
pub fn required_terminal_bit(system: &SystemSpec, reg: &str) -> Result<usize, TransformError> {
    let r = system
        .register(reg)
        .ok_or_else(|| crate::error::SpecError::UnknownRegister(RegId::new(reg)))?;
    let spread = min_terminal_bit(&r.feedback(r.len() - 1), r.id());
    let tapped = system
        .outputs()
        .iter()
        .flat_map(|(_, e)| e.support())
        .filter_map(|v| match v {
            Var::Bit { reg: id, index } if &id == r.id() => Some(index),
            _ => None,
        })
        .max()
        .unwrap_or(0);
    Ok(spread.max(tapped))
}

/// Applies one move: the terms are removed from the source function,
/// re-indexed by `destination - source` and XOR-merged into the destination.
pub fn apply_shift(reg: &RegisterSpec, mv: &ShiftMove) -> Result<RegisterSpec, TransformError> {
    if mv.register != *reg.id() {
        return Err(crate::error::SpecError::UnknownRegister(mv.register.clone()).into());
    }
    for &b in &[mv.source, mv.destination] {
        if b >= reg.len() {
            return Err(crate::error::SpecError::IndexOutOfRange {
                register: reg.id().clone(),
                index: b,
                length: reg.len(),
            }
            .into());
        }
    }
    let src = reg.feedback(mv.source);
    for t in &mv.terms {
        if !src.contains(t) {
            return Err(TransformError::MissingTerm {
                register: reg.id().clone(),
                bit: mv.source,
                term: t.to_string(),
            });
        }
    }
    let delta = mv.destination as i64 - mv.source as i64;
    let moved = remap_indices(&mv.terms, reg.id(), delta, reg.len())?;
    let mut out = reg.clone();
    out.set_feedback(mv.source, src.xor_merge(&mv.terms))?;
    let dst = out.feedback(mv.destination);
    out.set_feedback(mv.destination, dst.xor_merge(&moved))?;
    Ok(out)
}

/// Checks the two uniformity conditions at the register's own terminal bit.
/// Variables of other registers are exempt from the terminal-bit bound.
pub fn check_uniform(reg: &RegisterSpec) -> UniformityReport {
    check_uniform_at(reg, terminal_bit(reg))
}

/// Uniformity with respect to a chosen terminal bit `t`: bits below `t`
/// must be pure shifts, and every `g_i` with `i >= t` reads only bits up to
/// `t`. A register uniform at `t` is also uniform at its own terminal bit.
pub fn check_uniform_at(reg: &RegisterSpec, t: usize) -> UniformityReport {
    let mut violations = Vec::new();
    for (&bit, _) in reg.explicit().range(..t) {
        violations.push(Violation {
            bit,
            kind: ViolationKind::FeedbackBelowTerminal,
            detail: format!("f_{bit} is not a shift but lies below terminal bit {t}"),
        });
    }
    for (&bit, f) in reg.explicit() {
        let succ = reg.successor(bit);
        let single = ProductTerm::single(succ.clone());
        if !f.contains(&single) {
            violations.push(Violation {
                bit,
                kind: ViolationKind::NonSingular,
                detail: format!("f_{bit} has no linear {succ}"),
            });
        }
        let g = reg.nonlinear_part(bit);
        if let Some(term) = g.terms().iter().find(|p| p.contains(&succ)) {
            violations.push(Violation {
                bit,
                kind: ViolationKind::DependsOnSuccessor,
                detail: format!("g_{bit} term {term} reads {succ}"),
            });
        }
        if bit >= t {
            let above = g
                .terms()
                .iter()
                .flat_map(|p| p.indices_of(reg.id()))
                .filter(|&k| k > t)
                .max();
            if let Some(k) = above {
                violations.push(Violation {
                    bit,
                    kind: ViolationKind::IndexAboveTerminal,
                    detail: format!("g_{bit} reads {}[{k}] above terminal bit {t}", reg.id()),
                });
            }
        }
    }
    UniformityReport {
        uniform: violations.is_empty(),
        terminal_bit: t,
        violations,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptOutcome {
    pub register: RegisterSpec,
    /// Moves landing below the register's required terminal bit in the
    /// supplied system context.
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptFailure {
    pub move_index: usize,
    pub reason: String,
}

/// Applies a script move by move, re-checking uniformity after each move.
///
/// With a `context` system, moves whose destination lies below the
/// register's [`required_terminal_bit`] are reported as warnings.
pub fn check_script(
    fib: &RegisterSpec,
    script: &ShiftScript,
    context: Option<&SystemSpec>,
) -> Result<ScriptOutcome, ScriptFailure> {
    let fail = |i: usize, reason: String| ScriptFailure {
        move_index: i,
        reason,
    };
    let required = match context {
        Some(sys) => Some(required_terminal_bit(sys, fib.id().as_str()).map_err(|e| fail(0, e.to_string()))?),
        None => None,
    };
    let mut cur = fib.clone();
    let mut warnings = Vec::new();
    for (i, mv) in script.moves.iter().enumerate() {
        if mv.destination >= mv.source {
            return Err(fail(
                i,
                format!("destination {} is not below source {}", mv.destination, mv.source),
            ));
        }
        cur = apply_shift(&cur, mv).map_err(|e| fail(i, e.to_string()))?;
        let rep = check_uniform(&cur);
        if let Some(v) = rep.violations.first() {
            return Err(fail(i, format!("not uniform after move: {}", v.detail)));
        }
        if let Some(req) = required {
            if mv.destination < req {
                warnings.push(format!(
                    "move {i}: destination {} is below required terminal bit {req}",
                    mv.destination
                ));
            }
        }
    }
    Ok(ScriptOutcome {
        register: cur,
        warnings,
    })
}

/// Bits that may carry feedback in a `k`-bit-per-cycle implementation with
/// terminal bit `terminal`: `n-1-i*k` for `i < (n-1-terminal)/k`, never
/// fewer than the top bit itself.
pub fn allowed_feedback_positions(n: usize, terminal: usize, k: usize) -> Vec<usize> {
    assert!(k >= 1 && terminal < n, "need k >= 1 and terminal <= n-1");
    let count = ((n - 1 - terminal) / k).max(1);
    (0..count).map(|i| n - 1 - i * k).collect()
}

/// Largest unrolling degree `k` such that every bit read by a feedback or
/// output function sits at least `k-1` positions below its register's top.
///
/// The successor term `x_{i+1}` of an explicit feedback belongs to the shift
/// chain and is not counted as a read.
pub fn max_hw_parallel_degree(system: &SystemSpec) -> usize {
    let mut best = system.registers().iter().map(RegisterSpec::len).min().unwrap_or(1);
    let mut visit = |e: &AnfExpr| {
        for v in e.support() {
            if let Var::Bit { reg, index } = v {
                if let Some(r) = system.register(reg.as_str()) {
                    best = best.min(r.len() - index);
                }
            }
        }
    };
    for r in system.registers() {
        for &bit in r.explicit().keys() {
            visit(&r.nonlinear_part(bit));
        }
    }
    for (_, e) in system.outputs() {
        visit(e);
    }
    best.max(1)
}

/// Term cost used for balancing: one XOR-tree leaf plus its AND depth.
fn term_cost(t: &ProductTerm) -> u32 {
    1 + timing::ceil_log2(t.degree())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Distribution {
    pub register: RegisterSpec,
    pub script: ShiftScript,
    /// Terms that could not be placed anywhere and stay at the top bit.
    pub unshiftable: Vec<ProductTerm>,
    /// Terms that are never candidates: the singular `x_0` and terms reading
    /// other registers.
    pub pinned: Vec<ProductTerm>,
}

/// Greedy spreading of the top feedback over the allowed positions.
///
/// Terms are taken in descending cost and each goes to the allowed position
/// with the lowest accumulated cost whose result stays uniform, preferring
/// higher bits on ties.
pub fn auto_distribute(
    fib: &RegisterSpec,
    terminal: usize,
    k: usize,
    cost: &CostModel,
) -> Result<Distribution, TransformError> {
    let n = fib.len();
    let top = n - 1;
    if terminal >= n {
        return Err(crate::error::SpecError::IndexOutOfRange {
            register: fib.id().clone(),
            index: terminal,
            length: n,
        }
        .into());
    }
    let rep = check_uniform(fib);
    if !rep.uniform {
        return Err(TransformError::NonUniform(rep.violations[0].detail.clone()));
    }
    let positions = allowed_feedback_positions(n, terminal, k);
    let singular = ProductTerm::single(fib.successor(top));
    let top_f = fib.feedback(top);
    let (pinned, mut movable): (Vec<ProductTerm>, Vec<ProductTerm>) = top_f
        .terms()
        .iter()
        .cloned()
        .partition(|t| *t == singular || t.has_foreign(fib.id()));
    movable.sort_by(|a, b| {
        term_cost(b)
            .cmp(&term_cost(a))
            .then_with(|| b.cmp(a))
    });

    let weight = |t: &ProductTerm| term_cost(t) as f64 * cost.xor2_weight
        + t.degree().saturating_sub(1) as f64 * cost.and2_weight;
    // every position starts with its own successor leaf (the top with x_0)
    let mut load: BTreeMap<usize, f64> = positions.iter().map(|&p| (p, cost.xor2_weight)).collect();
    for t in &pinned {
        if *t != singular {
            *load.get_mut(&top).expect("top is always allowed") += weight(t);
        }
    }

    let mut cur = fib.clone();
    let mut per_dest: BTreeMap<usize, BTreeSet<ProductTerm>> = BTreeMap::new();
    let mut unshiftable = Vec::new();
    for t in movable {
        let mut order: Vec<usize> = positions.clone();
        order.sort_by(|a, b| load[a].partial_cmp(&load[b]).unwrap().then(b.cmp(a)));
        let mut placed = false;
        for dst in order {
            if dst == top {
                placed = true;
                *load.get_mut(&top).unwrap() += weight(&t);
                break;
            }
            let distance = top - dst;
            match t.index_span(fib.id()) {
                Some((lo, hi)) if lo >= distance && hi - distance <= terminal => {}
                _ => continue,
            }
            let mv = ShiftMove {
                register: fib.id().clone(),
                source: top,
                destination: dst,
                terms: [t.clone()].into(),
            };
            let Ok(next) = apply_shift(&cur, &mv) else {
                continue;
            };
            // the moved copy must not cancel against an existing term
            if next.feedback(dst).terms().len() != cur.feedback(dst).terms().len() + 1 {
                continue;
            }
            let r = check_uniform(&next);
            if r.uniform && r.terminal_bit >= terminal {
                cur = next;
                *load.get_mut(&dst).unwrap() += weight(&t);
                per_dest.entry(dst).or_default().insert(t.clone());
                placed = true;
                break;
            }
        }
        if !placed {
            *load.get_mut(&top).unwrap() += weight(&t);
            unshiftable.push(t);
        }
    }
    let script = ShiftScript {
        moves: per_dest
            .into_iter()
            .rev()
            .map(|(dst, terms)| ShiftMove {
                register: fib.id().clone(),
                source: top,
                destination: dst,
                terms,
            })
            .collect(),
    };
    Ok(Distribution {
        register: cur,
        script,
        unshiftable,
        pinned,
    })
}

/// Moves every `g_i` below the top back into the top feedback, shifted up by
/// `(n-1) - i`. Duplicates cancel under XOR.
pub fn collapse_to_fibonacci(reg: &RegisterSpec) -> Result<RegisterSpec, TransformError> {
    let n = reg.len();
    let top = n - 1;
    let mut f_top = reg.feedback(top);
    for (&bit, _) in reg.explicit().range(..top) {
        let g = reg.nonlinear_part(bit);
        let moved = remap_indices(g.terms(), reg.id(), (top - bit) as i64, n)?;
        f_top = f_top.xor_merge(&moved);
        if g.constant_bit() {
            f_top.set_constant(!f_top.constant_bit());
        }
    }
    Ok(RegisterSpec::new(reg.id().clone(), n).with_feedback(top, f_top)?)
}

/// Term-level difference between two feedback functions, for diagnostics.
pub fn term_difference(a: &AnfExpr, b: &AnfExpr) -> (Vec<ProductTerm>, Vec<ProductTerm>) {
    let only_a = a.terms().difference(b.terms()).cloned().collect();
    let only_b = b.terms().difference(a.terms()).cloned().collect();
    (only_a, only_b)
}

/// Terms of `g_i` (below the top) whose shifted copy coincides with a term
/// already present at the top or at another bit, which makes them cancel on
/// collapse. Returned as `(bit, term, collapsed image)`.
pub fn duplicate_images(reg: &RegisterSpec) -> Vec<(usize, ProductTerm, ProductTerm)> {
    let n = reg.len();
    let top = n - 1;
    let mut seen: HashMap<ProductTerm, usize> = HashMap::new();
    for t in reg.feedback(top).terms() {
        seen.insert(t.clone(), top);
    }
    let mut dups = Vec::new();
    for (&bit, _) in reg.explicit().range(..top).rev() {
        let g = reg.nonlinear_part(bit);
        for t in g.terms() {
            if t.has_foreign(reg.id()) {
                continue;
            }
            let img = remap_indices([t], reg.id(), (top - bit) as i64, n)
                .expect("local term")
                .remove(0);
            if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(img.clone()) {
                e.insert(bit);
            } else {
                dups.push((bit, t.clone(), img));
            }
        }
    }
    dups
}

fn check_mappable(galois: &RegisterSpec) -> Result<usize, TransformError> {
    let rep = check_uniform(galois);
    if let Some(v) = rep.violations.first() {
        return Err(TransformError::NonUniform(v.detail.clone()));
    }
    let t = rep.terminal_bit;
    for (&bit, _) in galois.explicit().range(t..galois.len() - 1) {
        if let Some(term) = galois
            .nonlinear_part(bit)
            .terms()
            .iter()
            .find(|p| p.has_foreign(galois.id()))
        {
            return Err(TransformError::ForeignBelowTop {
                bit,
                term: term.to_string(),
            });
        }
    }
    Ok(t)
}

/// Galois state whose bit-0 sequence equals the Fibonacci sequence started
/// from `fib_state`.
///
/// Bits up to the terminal bit are copied. A higher bit `i` drains into the
/// terminal bit after `i - t` clocks, picking up `g_j` for `j = t..i-1` on
/// the way; its initial content is the Fibonacci bit corrected by those
/// contributions, which only read already-known Fibonacci bits.
pub fn map_initial_state(
    fib: &RegisterSpec,
    galois: &RegisterSpec,
    fib_state: &[bool],
) -> Result<Vec<bool>, TransformError> {
    if fib.len() != galois.len() {
        return Err(TransformError::LengthMismatch(fib.len(), galois.len()));
    }
    if fib_state.len() != fib.len() {
        return Err(TransformError::StateLength {
            expected: fib.len(),
            got: fib_state.len(),
        });
    }
    let t = check_mappable(galois)?;
    let collapsed = collapse_to_fibonacci(galois)?;
    if collapsed != *fib {
        let (extra, missing) = term_difference(
            &collapsed.feedback(fib.len() - 1),
            &fib.feedback(fib.len() - 1),
        );
        return Err(TransformError::CollapseMismatch(format!(
            "collapsed has extra {extra:?}, lacks {missing:?}"
        )));
    }
    Ok(map_state_unchecked(galois, t, fib_state))
}

fn map_state_unchecked(galois: &RegisterSpec, t: usize, a: &[bool]) -> Vec<bool> {
    let n = galois.len();
    let id = galois.id();
    let gs: Vec<(usize, AnfExpr)> = galois
        .explicit()
        .range(t..n - 1)
        .map(|(&j, _)| (j, galois.nonlinear_part(j)))
        .collect();
    let mut c = a.to_vec();
    for i in t + 1..n {
        let mut v = a[i];
        for (j, g) in gs.iter().filter(|(j, _)| *j < i) {
            let shift = i - 1 - j;
            v ^= g
                .evaluate_with(|var| match var {
                    Var::Bit { reg, index } if reg == id => Some(a[index + shift]),
                    _ => None,
                })
                .expect("uniform g_j reads only local bits up to the terminal");
        }
        c[i] = v;
    }
    c
}

/// Inverse of [`map_initial_state`].
pub fn unmap_state(galois: &RegisterSpec, galois_state: &[bool]) -> Result<Vec<bool>, TransformError> {
    let t = check_mappable(galois)?;
    let n = galois.len();
    if galois_state.len() != n {
        return Err(TransformError::StateLength {
            expected: n,
            got: galois_state.len(),
        });
    }
    // a_i depends on c_i and a_k for k < i, so solve upwards
    let id = galois.id();
    let gs: Vec<(usize, AnfExpr)> = galois
        .explicit()
        .range(t..n - 1)
        .map(|(&j, _)| (j, galois.nonlinear_part(j)))
        .collect();
    let mut a = galois_state.to_vec();
    for i in t + 1..n {
        let mut v = galois_state[i];
        for (j, g) in gs.iter().filter(|(j, _)| *j < i) {
            let shift = i - 1 - j;
            v ^= g
                .evaluate_with(|var| match var {
                    Var::Bit { reg, index } if reg == id => Some(a[index + shift]),
                    _ => None,
                })
                .expect("uniform g_j reads only local bits up to the terminal");
        }
        a[i] = v;
    }
    Ok(a)
}

/// Result of comparing two registers' output behaviour.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Equal,
    Unequal(Counterexample),
}

impl Verdict {
    pub fn is_equal(&self) -> bool {
        matches!(self, Verdict::Equal)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    /// `"a"` or `"b"` for exhaustive checks, the trial number for mapped ones.
    pub origin: String,
    /// Initial state (bit `i` of the register in bit `i` of the integer for
    /// exhaustive checks).
    pub state: Vec<bool>,
    /// First cycle at which the behaviour differs.
    pub cycle: usize,
    /// Output prefix of the witness, up to and including `cycle`.
    pub prefix: Vec<bool>,
    pub detail: String,
}

/// Largest register length accepted by [`check_equivalence_exhaustive`].
pub const EXHAUSTIVE_LIMIT: usize = 20;

struct Tables {
    next: Vec<u32>,
    out: Vec<bool>,
}

fn compile_tables(reg: &RegisterSpec) -> Result<Tables, TransformError> {
    if reg.has_foreign_inputs() {
        return Err(TransformError::NotAutonomous(reg.id().clone()));
    }
    let n = reg.len();
    // per bit: constant and list of AND masks
    let mut fb: Vec<(bool, Vec<u32>)> = Vec::with_capacity(n);
    for i in 0..n {
        let f = reg.feedback(i);
        let masks = f
            .terms()
            .iter()
            .map(|t| {
                t.vars().iter().fold(0u32, |m, v| {
                    let (_, k) = v.as_bit().expect("autonomous register");
                    m | (1 << k)
                })
            })
            .collect();
        fb.push((f.constant_bit(), masks));
    }
    let size = 1usize << n;
    let next = (0..size as u32)
        .into_par_iter()
        .map(|s| {
            let mut x = 0u32;
            for (i, (c, masks)) in fb.iter().enumerate() {
                let mut v = *c;
                for &m in masks {
                    v ^= s & m == m;
                }
                x |= (v as u32) << i;
            }
            x
        })
        .collect();
    let out = (0..size as u32).map(|s| s & 1 == 1).collect();
    Ok(Tables { next, out })
}

/// Decides equality of the multisets of length-`horizon` bit-0 output
/// prefixes over all initial states (default horizon `2^n`).
///
/// States of both registers are refined jointly: two states share a class at
/// level `L` iff their length-`L` prefixes agree. The multisets differ at
/// level `L` iff some class has different member counts on the two sides,
/// which is monotone in `L`; the first such level is the reported cycle.
pub fn check_equivalence_exhaustive(
    a: &RegisterSpec,
    b: &RegisterSpec,
    horizon: Option<usize>,
) -> Result<Verdict, TransformError> {
    let n = a.len();
    if n != b.len() {
        return Err(TransformError::LengthMismatch(n, b.len()));
    }
    if n > EXHAUSTIVE_LIMIT {
        return Err(TransformError::RegisterTooLarge {
            length: n,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let horizon = horizon.unwrap_or(1 << n);
    let ta = compile_tables(a)?;
    let tb = compile_tables(b)?;
    let size = 1usize << n;

    // joint state space: [0, size) from a, [size, 2*size) from b
    let next = |s: usize| -> usize {
        if s < size {
            ta.next[s] as usize
        } else {
            size + tb.next[s - size] as usize
        }
    };
    let out = |s: usize| -> bool {
        if s < size {
            ta.out[s]
        } else {
            tb.out[s - size]
        }
    };

    let mut class: Vec<u32> = Vec::new();
    let mut classes = 1usize;
    let total = 2 * size;
    for level in 1..=horizon {
        // level L: class of the length-L prefix
        let new: Vec<u32> = if level == 1 {
            (0..total).map(|s| out(s) as u32).collect()
        } else {
            let mut ids: HashMap<(bool, u32), u32> = HashMap::new();
            (0..total)
                .map(|s| {
                    let key = (out(s), class[next(s)]);
                    let fresh = ids.len() as u32;
                    *ids.entry(key).or_insert(fresh)
                })
                .collect()
        };
        let count = new.iter().copied().max().map_or(0, |m| m as usize + 1);

        let mut diff = vec![0i64; count];
        for (s, &c) in new.iter().enumerate() {
            diff[c as usize] += if s < size { 1 } else { -1 };
        }
        if let Some(bad) = (0..total).find(|&s| diff[new[s] as usize] != 0) {
            let (origin, local) = if bad < size { ("a", bad) } else { ("b", bad - size) };
            let mut prefix = Vec::with_capacity(level);
            let mut s = bad;
            for _ in 0..level {
                prefix.push(out(s));
                s = next(s);
            }
            let c = new[bad] as usize;
            return Ok(Verdict::Unequal(Counterexample {
                origin: origin.to_owned(),
                state: (0..n).map(|i| local >> i & 1 == 1).collect(),
                cycle: level - 1,
                prefix,
                detail: format!(
                    "prefix occurs {} more time(s) in {}",
                    diff[c].unsigned_abs(),
                    if diff[c] > 0 { "a" } else { "b" }
                ),
            }));
        }
        let stable = level > 1 && count == classes;
        class = new;
        classes = count;
        if stable {
            // partition is a fixed point; longer prefixes refine nothing
            break;
        }
    }
    Ok(Verdict::Equal)
}

/// Full-system simulation check of a Fibonacci register against a Galois
/// one inside otherwise identical systems.
///
/// Each trial draws a random state for the whole Fibonacci system, maps the
/// transformed register with [`map_initial_state`], runs both systems with
/// `modes` active and compares bit 0 and the columns `0..=t` of the
/// transformed register on every cycle. The lowest failing trial is
/// reported, independent of how trials are scheduled.
#[allow(clippy::too_many_arguments)]
pub fn check_equivalence_mapped(
    fib_sys: &SystemSpec,
    galois_sys: &SystemSpec,
    register: &str,
    trials: usize,
    cycles: usize,
    seed: u64,
    modes: &[&str],
) -> Result<Verdict, TransformError> {
    let ri = fib_sys
        .register_index(register)
        .ok_or_else(|| crate::error::SpecError::UnknownRegister(RegId::new(register)))?;
    let fib = &fib_sys.registers()[ri];
    let gal = galois_sys
        .register(register)
        .ok_or_else(|| crate::error::SpecError::UnknownRegister(RegId::new(register)))?;
    if fib_sys.with_register(gal.clone())? != galois_sys.with_name(fib_sys.name()) {
        return Err(TransformError::SystemMismatch(RegId::new(register)));
    }
    // validates uniformity and the collapse relation once
    map_initial_state(fib, gal, &vec![false; fib.len()])?;
    let t = terminal_bit(gal);

    let failures: Vec<Counterexample> = (0..trials)
        .into_par_iter()
        .filter_map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64);
            let regs: Vec<Vec<bool>> = fib_sys
                .registers()
                .iter()
                .map(|r| (0..r.len()).map(|_| rng.gen()).collect())
                .collect();
            let start = regs[ri].clone();
            let fs = SystemState::from_registers(fib_sys, regs.clone()).expect("shape");
            let mut gregs = regs;
            gregs[ri] = map_state_unchecked(gal, t, &gregs[ri]);
            let gs = SystemState::from_registers(galois_sys, gregs).expect("shape");
            compare_runs(fib_sys, galois_sys, ri, t, fs, gs, cycles, modes).map(
                |(cycle, prefix, detail)| Counterexample {
                    origin: trial.to_string(),
                    state: start,
                    cycle,
                    prefix,
                    detail,
                },
            )
        })
        .collect();
    Ok(
        match failures
            .into_iter()
            .min_by_key(|c| c.origin.parse::<usize>().expect("trial number"))
        {
            Some(c) => Verdict::Unequal(c),
            None => Verdict::Equal,
        },
    )
}

#[allow(clippy::too_many_arguments)]
fn compare_runs(
    fib_sys: &SystemSpec,
    galois_sys: &SystemSpec,
    ri: usize,
    t: usize,
    mut fs: SystemState,
    mut gs: SystemState,
    cycles: usize,
    modes: &[&str],
) -> Option<(usize, Vec<bool>, String)> {
    let mut prefix = Vec::with_capacity(cycles);
    for c in 0..cycles {
        let fr = fs.register(ri);
        let gr = gs.register(ri);
        prefix.push(fr[0]);
        if let Some(col) = (0..=t).find(|&i| fr[i] != gr[i]) {
            let detail = if col == 0 {
                "bit 0 differs".to_owned()
            } else {
                format!("column {col} differs")
            };
            return Some((c, prefix, detail));
        }
        fs = fib_sys.step(&fs, modes);
        gs = galois_sys.step(&gs, modes);
    }
    None
}
