//! Random uniform Fibonacci/Galois pairs for brute-force checks.

#![allow(dead_code)]

use grain_galois::anf::{AnfExpr, ProductTerm};
use grain_galois::fsr::RegisterSpec;
use rand::seq::SliceRandom;
use rand::Rng;

pub struct Pair {
    pub fib: RegisterSpec,
    pub galois: RegisterSpec,
    /// Lowest bit carrying feedback in `galois`.
    pub terminal: usize,
    /// `(bit, term)` for every non-shift term of `galois`, in Galois
    /// coordinates.
    pub placed: Vec<(usize, ProductTerm)>,
}

fn random_term(rng: &mut impl Rng, lo: usize, hi: usize) -> ProductTerm {
    let pool: Vec<usize> = (lo..=hi).collect();
    let degree = rng.gen_range(1..=pool.len().min(3));
    let idx: Vec<usize> = pool.choose_multiple(rng, degree).copied().collect();
    ProductTerm::of("x", &idx)
}

/// A Galois register built by hand: each term is chosen directly at its
/// destination bit `j >= tau` with variables in `[0, tau]`, and the
/// Fibonacci register receives the same term moved up by `n-1-j`.
pub fn random_pair(rng: &mut impl Rng, n: usize) -> Pair {
    let top = n - 1;
    let tau = rng.gen_range(n / 2..top);
    let mut fib_top = AnfExpr::var(grain_galois::Var::bit("x", 0));
    let mut gal: Vec<AnfExpr> = (0..n)
        .map(|j| AnfExpr::var(grain_galois::Var::bit("x", (j + 1) % n)))
        .collect();
    let mut placed = Vec::new();
    let mut images = std::collections::BTreeSet::new();
    let count = rng.gen_range(2..=6);
    for i in 0..count {
        // the first term always moves, so no pair is trivially Fibonacci
        let j = if i == 0 { rng.gen_range(tau..top) } else { rng.gen_range(tau..=top) };
        let d = top - j;
        // the top bit's g may not read x[0]
        let lo = usize::from(d == 0);
        let t = random_term(rng, lo, tau);
        let lifted = ProductTerm::of(
            "x",
            &t.vars().iter().map(|v| v.as_bit().unwrap().1 + d).collect::<Vec<_>>(),
        );
        // two placements with the same image would cancel in the Fibonacci form
        if !images.insert(lifted.clone()) {
            continue;
        }
        gal[j].toggle(t.clone());
        fib_top.toggle(lifted);
        placed.push((j, t));
    }
    let mut fib = RegisterSpec::new("x", n);
    fib.set_feedback(top, fib_top).unwrap();
    let mut galois = RegisterSpec::new("x", n);
    for (j, f) in gal.into_iter().enumerate() {
        galois.set_feedback(j, f).unwrap();
    }
    let terminal = galois.explicit().keys().next().copied().unwrap_or(top);
    Pair { fib, galois, terminal, placed }
}

/// `reg` with `term` toggled in the feedback of `bit`.
pub fn toggled(reg: &RegisterSpec, bit: usize, term: ProductTerm) -> RegisterSpec {
    let mut f = reg.feedback(bit);
    f.toggle(term);
    let mut out = reg.clone();
    out.set_feedback(bit, f).unwrap();
    out
}
