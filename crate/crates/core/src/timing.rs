//! Gate-depth proxy for the combinational paths of a system.
//!
//! Every expression is costed as a balanced tree of 2-input gates: each
//! product term is an AND tree of height `ceil(log2(degree))`, and the XOR
//! tree over all terms adds `ceil(log2(terms))` levels. These are relative
//! numbers only; they say nothing about absolute frequency or area.

use std::collections::BTreeMap;

use crate::anf::{AnfExpr, Var};
use crate::fsr::SystemSpec;

/// Area of the divide-by-four clock block, carried on reports as metadata.
pub const DIVIDER_BY_FOUR_AREA_GE: f64 = 25.67;

/// Per-gate weights for [`area_proxy`]. Both default to 1, which is an
/// arbitrary unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    pub xor2_weight: f64,
    pub and2_weight: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            xor2_weight: 1.0,
            and2_weight: 1.0,
        }
    }
}

pub fn ceil_log2(x: usize) -> u32 {
    if x <= 1 {
        0
    } else {
        usize::BITS - (x - 1).leading_zeros()
    }
}

/// Depth in gate levels. `outputs` supplies the depth of any output the
/// expression references; unknown outputs count as depth 0.
pub fn expr_depth(expr: &AnfExpr, outputs: &BTreeMap<String, u32>) -> u32 {
    let leaves = expr.terms().len();
    let deepest = expr
        .terms()
        .iter()
        .map(|t| {
            let inner = t
                .vars()
                .iter()
                .map(|v| match v {
                    Var::Output(n) => outputs.get(n).copied().unwrap_or(0),
                    Var::Bit { .. } => 0,
                })
                .max()
                .unwrap_or(0);
            ceil_log2(t.degree()) + inner
        })
        .max()
        .unwrap_or(0);
    ceil_log2(leaves.max(1)) + deepest
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    /// Depth of every explicit feedback (`b[79]`) and output (`Z`).
    pub expr_depths: BTreeMap<String, u32>,
    /// Maximum feedback depth per register.
    pub register_depths: BTreeMap<String, u32>,
    pub keygen_depth: u32,
    pub init_depth: u32,
    pub divider: u32,
    pub warnings: Vec<String>,
    /// Divider block area, present when division by four is selected.
    pub divider_area_ge: Option<f64>,
}

impl TimingReport {
    pub fn max_register_depth(&self) -> u32 {
        self.register_depths.values().copied().max().unwrap_or(0)
    }
}

/// Output depths in dependency order.
fn output_depths(system: &SystemSpec) -> BTreeMap<String, u32> {
    let mut depths = BTreeMap::new();
    // the system guarantees acyclic references; iterate until all resolved
    let mut pending: Vec<&(String, AnfExpr)> = system.outputs().iter().collect();
    while !pending.is_empty() {
        let before = pending.len();
        pending.retain(|(name, e)| {
            if e.output_refs().all(|r| depths.contains_key(r)) {
                depths.insert(name.clone(), expr_depth(e, &depths));
                false
            } else {
                true
            }
        });
        assert!(pending.len() < before, "output references must be acyclic");
    }
    depths
}

pub fn critical_depths(system: &SystemSpec) -> TimingReport {
    let outs = output_depths(system);
    let mut expr_depths: BTreeMap<String, u32> = outs.clone();
    let mut register_depths = BTreeMap::new();
    for r in system.registers() {
        let mut worst = 0;
        for (bit, f) in r.explicit() {
            let d = expr_depth(f, &outs);
            expr_depths.insert(format!("{}[{}]", r.id(), bit), d);
            worst = worst.max(d);
        }
        register_depths.insert(r.id().to_string(), worst);
    }
    let reg_max = register_depths.values().copied().max().unwrap_or(0);
    let out_max = outs.values().copied().max().unwrap_or(0);
    let keygen_depth = reg_max.max(out_max);

    let init_depth = system
        .injections()
        .iter()
        .map(|inj| {
            let fb = system
                .register(inj.register.as_str())
                .and_then(|r| r.explicit().get(&inj.bit))
                .map(|f| expr_depth(f, &outs))
                .unwrap_or(0);
            outs[&inj.output].max(fb) + 1
        })
        .max()
        .unwrap_or(0);

    let (divider, warning) = divider_factor(init_depth, keygen_depth);
    TimingReport {
        expr_depths,
        register_depths,
        keygen_depth,
        init_depth,
        divider,
        warnings: warning.into_iter().collect(),
        divider_area_ge: (divider == 4).then_some(DIVIDER_BY_FOUR_AREA_GE),
    }
}

/// Clock division for the initialization phase: 1 when the init path is no
/// longer than the keystream path, otherwise the smaller of 2 and 4 covering
/// the ratio. Ratios above 4 clamp to 4 and produce a warning.
pub fn divider_factor(init_depth: u32, keygen_depth: u32) -> (u32, Option<String>) {
    if init_depth <= keygen_depth {
        return (1, None);
    }
    if init_depth <= 2 * keygen_depth {
        (2, None)
    } else if init_depth <= 4 * keygen_depth {
        (4, None)
    } else {
        (
            4,
            Some(format!(
                "init/keygen depth ratio {init_depth}/{keygen_depth} exceeds 4; divider clamped to 4"
            )),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaProxy {
    pub xor_gates: usize,
    pub and_gates: usize,
    pub weighted: f64,
}

fn expr_gates(e: &AnfExpr) -> (usize, usize) {
    let xor = e.terms().len().saturating_sub(1);
    let and = e.terms().iter().map(|t| t.degree() - 1).sum();
    (xor, and)
}

/// 2-input gate count over every explicit feedback and every output.
pub fn area_proxy(system: &SystemSpec, cost: &CostModel) -> AreaProxy {
    let exprs = system
        .registers()
        .iter()
        .flat_map(|r| r.explicit().values())
        .chain(system.outputs().iter().map(|(_, e)| e));
    let (xor_gates, and_gates) = exprs
        .map(expr_gates)
        .fold((0, 0), |(x, a), (dx, da)| (x + dx, a + da));
    AreaProxy {
        xor_gates,
        and_gates,
        weighted: xor_gates as f64 * cost.xor2_weight + and_gates as f64 * cost.and2_weight,
    }
}

/// Gate count of the feedback logic of one register only.
pub fn register_area(system: &SystemSpec, reg: &str) -> Option<(usize, usize)> {
    let r = system.register(reg)?;
    Some(
        r.explicit()
            .values()
            .map(expr_gates)
            .fold((0, 0), |(x, a), (dx, da)| (x + dx, a + da)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fsr::RegisterSpec;
    use crate::text::parse_expr;
    use proptest::prelude::*;

    #[test]
    fn ceil_log2_values() {
        let got: Vec<u32> = [0, 1, 2, 3, 4, 5, 8, 9, 23].iter().map(|&x| ceil_log2(x)).collect();
        assert_eq!(got, vec![0, 0, 1, 2, 2, 3, 3, 4, 5]);
    }

    #[test]
    fn depth_of_single_variable_and_constant() {
        let none = BTreeMap::new();
        assert_eq!(expr_depth(&parse_expr("b[4]").unwrap(), &none), 0);
        assert_eq!(expr_depth(&parse_expr("1").unwrap(), &none), 0);
        assert_eq!(expr_depth(&parse_expr("b[0] + b[1]*b[2]").unwrap(), &none), 2);
    }

    #[test]
    fn output_reference_is_a_leaf_of_its_depth() {
        let env: BTreeMap<String, u32> = [("H".to_string(), 6)].into();
        let z = parse_expr("b[1] + b[2] + H").unwrap();
        assert_eq!(expr_depth(&z, &env), 2 + 6);
    }

    #[test]
    fn divider_examples() {
        assert_eq!(divider_factor(5, 5).0, 1);
        assert_eq!(divider_factor(8, 2).0, 4);
        assert_eq!(divider_factor(3, 2).0, 2);
        assert_eq!(divider_factor(4, 1).0, 4);
        let (d, w) = divider_factor(9, 2);
        assert_eq!(d, 4);
        assert!(w.is_some());
        assert_eq!(divider_factor(1, 0), (4, divider_factor(1, 0).1));
    }

    #[test]
    fn pure_shift_register_has_no_depth() {
        let sys = SystemSpec::single(RegisterSpec::new("x", 8)).unwrap();
        let rep = critical_depths(&sys);
        assert_eq!((rep.keygen_depth, rep.init_depth, rep.divider), (0, 0, 1));
    }

    #[test]
    fn area_counts() {
        let r = RegisterSpec::new("b", 4)
            .with_feedback(3, parse_expr("b[0] + b[1]*b[2]").unwrap())
            .unwrap();
        let sys = SystemSpec::single(r).unwrap();
        let a = area_proxy(&sys, &CostModel::default());
        assert_eq!((a.xor_gates, a.and_gates), (1, 1));
        let r = RegisterSpec::new("b", 4)
            .with_feedback(3, parse_expr("b[2]").unwrap())
            .unwrap();
        let a = area_proxy(&SystemSpec::single(r).unwrap(), &CostModel::default());
        assert_eq!((a.xor_gates, a.and_gates), (0, 0));
    }

    proptest! {
        #[test]
        fn divider_is_monotone(init in 0u32..40, keygen in 0u32..40, bump in 0u32..10) {
            let (d, _) = divider_factor(init, keygen);
            prop_assert!([1, 2, 4].contains(&d));
            prop_assert!(divider_factor(init + bump, keygen).0 >= d);
            prop_assert!(divider_factor(init, keygen + bump).0 <= d);
        }
    }
}
