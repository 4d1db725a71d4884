mod support;

use std::collections::BTreeSet;

use grain_galois::anf::{ProductTerm, RegId};
use grain_galois::fsr::{SystemSpec, SystemState};
use grain_galois::galois::*;
use grain_galois::TransformError;
use grain_galois::grain::{variant, variant_names, GrainVariant, Transcription};
use grain_galois::text::{format_script, parse_script};
use grain_galois::timing::CostModel;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn official(name: &str) -> GrainVariant {
    variant(name, Transcription::Official).unwrap()
}

/// The script that turns the Fibonacci NLFSR into `v`'s, read off the
/// printed Galois functions.
fn script_for(v: &GrainVariant) -> ShiftScript {
    let reg = v.nlfsr();
    let top = reg.len() - 1;
    let moves = reg
        .explicit()
        .keys()
        .rev()
        .filter(|&&bit| bit < top)
        .map(|&bit| {
            let d = (top - bit) as i64;
            let g = reg.nonlinear_part(bit);
            let terms = grain_galois::anf::remap_indices(g.terms(), reg.id(), d, reg.len()).unwrap();
            ShiftMove {
                register: reg.id().clone(),
                source: top,
                destination: bit,
                terms: terms.into_iter().collect(),
            }
        })
        .collect();
    ShiftScript { moves }
}

#[test]
fn printed_lists_are_reachable_by_scripts() {
    for name in variant_names().filter(|n| !n.ends_with("fib")) {
        let v = official(name);
        let fib = grain_galois::grain::fibonacci_sibling(&v);
        let script = script_for(&v);
        let out = check_script(fib.nlfsr(), &script, Some(&fib.system)).unwrap();
        assert_eq!(&out.register, v.nlfsr(), "{name}");
        assert!(out.warnings.is_empty(), "{name}: {:?}", out.warnings);
        if name == "grain80-galois-1" {
            assert_eq!(script.moves.len(), 16);
        }
        // and the text form survives a round trip
        assert_eq!(parse_script(&format_script(&script)).unwrap(), script);
    }
}

#[test]
fn single_move_example() {
    let fib = official("grain80-fib");
    let mv = ShiftMove {
        register: "b".into(),
        source: 79,
        destination: 70,
        terms: [ProductTerm::of("b", &[33, 28, 21, 15, 9])].into(),
    };
    let out = apply_shift(fib.nlfsr(), &mv).unwrap();
    assert!(out.explicit()[&70].contains(&ProductTerm::of("b", &[24, 19, 12, 6, 0])));
    assert!(!out.explicit()[&79].contains(&ProductTerm::of("b", &[33, 28, 21, 15, 9])));
}

#[test]
fn script_failure_names_the_move() {
    let fib = official("grain80-fib");
    let script = parse_script(
        "shift b 79 -> 70 : b[33]*b[28]*b[21]*b[15]*b[9]\nshift b 79 -> 75 : b[1]*b[2]\n",
    )
    .unwrap();
    let err = check_script(fib.nlfsr(), &script, None).unwrap_err();
    assert_eq!(err.move_index, 1);
}

#[test]
fn script_below_required_terminal_warns() {
    // uniform after the move, but the output reads x[6] above the new terminal 5
    let sys = grain_galois::text::parse_spec(
        "system w\nregister x 8\nfeedback x[7] = x[0] + x[4]*x[3]\noutput O = x[6]\n",
    )
    .unwrap()
    .spec;
    let script = parse_script("shift x 7 -> 5 : x[4]*x[3]\n").unwrap();
    let out = check_script(&sys.registers()[0], &script, Some(&sys)).unwrap();
    assert_eq!(terminal_bit(&out.register), 5);
    assert_eq!(out.warnings.len(), 1);
}

#[test]
fn terminal_bounds() {
    let g80 = official("grain80-fib");
    let g128 = official("grain128-fib");
    let b = RegId::from("b");
    assert_eq!(min_terminal_bit(&g80.nlfsr().explicit()[&79], &b), 54);
    assert_eq!(min_terminal_bit(&g128.nlfsr().explicit()[&127], &b), 64);
    assert_eq!(required_terminal_bit(&g80.system, "b").unwrap(), 63);
    assert_eq!(required_terminal_bit(&g128.system, "b").unwrap(), 95);
    assert_eq!(required_terminal_bit(&g80.system, "s").unwrap(), 64);
}

#[test]
fn grain80_mapped_equivalence() {
    let fib = official("grain80-fib");
    let gal = official("grain80-galois-1");
    let v = check_equivalence_mapped(&fib.system, &gal.system, "b", 100, 1000, 1, &[]).unwrap();
    assert!(v.is_equal(), "{v:?}");
    let v = check_equivalence_mapped(&fib.system, &gal.system, "b", 20, 300, 2, &["init"]).unwrap();
    assert!(v.is_equal(), "{v:?}");
}

#[test]
fn mapped_check_reports_printed_erratum() {
    let fib = official("grain128-fib");
    let gal = variant("grain128-galois-1", Transcription::AsPrinted).unwrap();
    let fib_printed = variant("grain128-fib", Transcription::AsPrinted).unwrap();
    assert_eq!(fib.system, fib_printed.system);
    let err = check_equivalence_mapped(&fib.system, &gal.system, "b", 4, 100, 0, &[]).unwrap_err();
    assert!(matches!(err, TransformError::CollapseMismatch(_)));
    let dups = duplicate_images(gal.nlfsr());
    assert!(dups.iter().any(|(_, _, img)| *img == ProductTerm::of("b", &[3, 67])));
}

#[test]
fn mapped_check_finds_a_broken_variant() {
    let fib = official("grain80-fib");
    let gal = official("grain80-galois-4");
    // drop one term from the Galois copy so it no longer collapses
    let mut broken = gal.nlfsr().clone();
    let mut f = broken.feedback(75);
    f.toggle(ProductTerm::of("b", &[59, 56]));
    broken.set_feedback(75, f).unwrap();
    let sys = gal.system.with_register(broken.clone()).unwrap();
    assert!(check_equivalence_mapped(&fib.system, &sys, "b", 2, 50, 0, &[]).is_err());
    // a galois copy that collapses correctly but is compared against a
    // different fibonacci register is a mismatch too
    let other = official("grain80-galois-8");
    assert!(check_equivalence_mapped(&gal.system, &other.system, "b", 2, 50, 0, &[]).is_err());
}

#[test]
fn tap_columns_are_delayed_copies_up_to_terminal() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for name in ["grain80-galois-1", "grain128-galois-16"] {
        let v = official(name);
        let t = terminal_bit(v.nlfsr());
        let regs: Vec<Vec<bool>> = v
            .system
            .registers()
            .iter()
            .map(|r| (0..r.len()).map(|_| rng.gen()).collect())
            .collect();
        let st = SystemState::from_registers(&v.system, regs).unwrap();
        let (rows, _) = v.system.tap_trace(&st, 400, &["init"], "b").unwrap();
        for c in 0..rows.len() - t {
            for i in 0..=t {
                assert_eq!(rows[c][i], rows[c + i][0], "{name} cycle {c} bit {i}");
            }
        }
        // the bit above the terminal is not a plain copy
        let above = (0..rows.len() - t - 1).any(|c| rows[c][t + 1] != rows[c + t + 1][0]);
        assert!(above, "{name}");
    }
}

#[test]
fn auto_distribute_nlfsr_and_lfsr() {
    let v = official("grain80-fib");
    let d = auto_distribute(v.nlfsr(), 63, 1, &CostModel::default()).unwrap();
    let rep = check_uniform(&d.register);
    assert!(rep.uniform && rep.terminal_bit >= 63);
    assert_eq!(collapse_to_fibonacci(&d.register).unwrap(), *v.nlfsr());
    assert!(d.register.explicit().keys().all(|&b| b >= 63));

    let d = auto_distribute(v.lfsr(), 64, 1, &CostModel::default()).unwrap();
    assert!(d.unshiftable.is_empty());
    assert!(d.register.explicit().values().all(|f| f.terms().len() <= 2));
    // five movable taps, one per bit
    assert_eq!(d.register.explicit().len(), 5);
    for &bit in d.register.explicit().keys() {
        assert_eq!(d.register.nonlinear_part(bit).terms().len(), 1);
    }
    assert_eq!(collapse_to_fibonacci(&d.register).unwrap(), *v.lfsr());
}

#[test]
fn auto_distribute_respects_declared_degree() {
    for (name, t, k) in [("grain80-fib", 63, 4), ("grain80-fib", 63, 8), ("grain128-fib", 95, 4), ("grain128-fib", 95, 16)] {
        let v = official(name);
        let d = auto_distribute(v.nlfsr(), t, k, &CostModel::default()).unwrap();
        let allowed: BTreeSet<usize> = allowed_feedback_positions(v.key_bits, t, k).into_iter().collect();
        assert!(d.register.explicit().keys().all(|b| allowed.contains(b)), "{name} k={k}");
        assert_eq!(collapse_to_fibonacci(&d.register).unwrap(), *v.nlfsr());
        let sys = v.system.with_register(d.register.clone()).unwrap();
        assert!(check_equivalence_mapped(&v.system, &sys, "b", 8, 200, 5, &["init"]).unwrap().is_equal());
    }
}

#[test]
fn unrolled_steps_match_unit_steps() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for name in variant_names() {
        let v = official(name);
        let ks = [v.parallel_degree, if v.is_fibonacci() { max_hw_parallel_degree(&v.system) } else { 1 }];
        for k in ks {
            for modes in [&[][..], &["init"][..]] {
                let regs: Vec<Vec<bool>> = v
                    .system
                    .registers()
                    .iter()
                    .map(|r| (0..r.len()).map(|_| rng.gen()).collect())
                    .collect();
                let st = SystemState::from_registers(&v.system, regs).unwrap();
                let (fast, outs) = v.system.unrolled_step(&st, k, modes).unwrap();
                let mut slow = st.clone();
                for out in &outs {
                    assert_eq!(out, &v.system.evaluate_outputs(&slow), "{name} k={k}");
                    slow = v.system.step(&slow, modes);
                }
                assert_eq!(fast, slow, "{name} k={k}");
            }
        }
    }
}

#[test]
fn unrolling_beyond_the_limit_is_refused() {
    for name in ["grain80-fib", "grain128-fib"] {
        let v = official(name);
        let k = max_hw_parallel_degree(&v.system);
        let st = SystemState::zeros(&v.system);
        assert!(v.system.unrolled_step(&st, k, &[]).is_ok());
        assert!(v.system.unrolled_step(&st, k + 1, &[]).is_err());
    }
}

#[test]
fn random_pairs_are_equivalent() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..40 {
        let n = rng.gen_range(5..=10);
        let p = support::random_pair(&mut rng, n);
        assert!(check_uniform(&p.galois).uniform);
        assert_eq!(collapse_to_fibonacci(&p.galois).unwrap(), p.fib);
        assert!(check_equivalence_exhaustive(&p.fib, &p.galois, None).unwrap().is_equal());
        for (j, t) in &p.placed {
            let broken = support::toggled(&p.galois, *j, t.clone());
            assert!(!check_equivalence_exhaustive(&p.fib, &broken, None).unwrap().is_equal());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mapped_state_reproduces_bit_zero(seed in any::<u64>(), n in 5usize..=12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = support::random_pair(&mut rng, n);
        let a: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        let c = map_initial_state(&p.fib, &p.galois, &a).unwrap();
        prop_assert_eq!(unmap_state(&p.galois, &c).unwrap(), a.clone());
        let fs = SystemSpec::single(p.fib.clone()).unwrap();
        let gs = SystemSpec::single(p.galois.clone()).unwrap();
        let (fr, _) = fs.tap_trace(&SystemState::from_registers(&fs, vec![a]).unwrap(), 4 * n, &[], "x").unwrap();
        let (gr, _) = gs.tap_trace(&SystemState::from_registers(&gs, vec![c]).unwrap(), 4 * n, &[], "x").unwrap();
        for (f, g) in fr.iter().zip(&gr) {
            prop_assert_eq!(&f[..=p.terminal], &g[..=p.terminal]);
        }
    }

    #[test]
    fn shift_then_collapse_is_identity(seed in any::<u64>(), n in 5usize..=16) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = support::random_pair(&mut rng, n);
        // rebuild the Galois register through apply_shift from the placements
        let top = n - 1;
        let mut cur = p.fib.clone();
        for (j, t) in p.placed.iter().filter(|(j, _)| *j < top) {
            let lifted = grain_galois::anf::remap_indices([t], &RegId::from("x"), (top - j) as i64, n).unwrap();
            let mv = ShiftMove {
                register: "x".into(),
                source: top,
                destination: *j,
                terms: lifted.into_iter().collect(),
            };
            cur = apply_shift(&cur, &mv).unwrap();
        }
        prop_assert_eq!(&cur, &p.galois);
        prop_assert_eq!(collapse_to_fibonacci(&cur).unwrap(), p.fib);
    }
}
