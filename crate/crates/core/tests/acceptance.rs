//! Acceptance gate for the library: eleven contract items, one test each,
//! so `cargo test --test acceptance` prints exactly one pass/fail line per
//! item. Every expected value here is independent of the code that computes
//! it: frozen constants, hand-built comparison objects, or a second
//! computation along a different route.

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

use qtype_core::classify::{
    decide_dinfty, l4_dinfty, l5_dinfty, scob_bounds, structure_set_size, validate, CompareMode,
    Decision, FormDescriptor, Manifest, W2Type,
};
use qtype_core::forms::b_map;
use qtype_core::gamma::{coinvariants, gamma, theta_psi_check};
use qtype_core::groupring::{Character, GroupSpec};
use qtype_core::lattices::{
    aug_ideal, cyclic_dual_aug_check, fingerprint2, free_module, twisted_integers, BasedLattice,
};
use qtype_core::manifolds::{
    builtin, connected_sum_k, hyperbolic_k, k_invariant, k_invariant_lifts, pi2, solve_s,
    stable_pi2, standard_form_coefficient, Decomposition, KInvariant, PD3Symbol,
};
use qtype_core::resolutions::homology_twisted;
use qtype_core::zmat::{torsion_order_by_minors, AbGroup, IntMatrix};
use qtype_core::Error;

fn c2() -> Arc<GroupSpec> {
    GroupSpec::cyclic(2).unwrap()
}

#[test]
fn c01_builtin_models_are_complexes_with_the_expected_integral_homology() {
    let expected = vec![
        AbGroup::free(1),
        AbGroup::cyclic(2),
        AbGroup::cyclic(2),
        AbGroup::trivial(),
        AbGroup::free(1),
    ];
    for name in ["E", "F"] {
        let c = builtin(name).unwrap();
        for k in 2..=4 {
            let square = c.diff(k - 1).unwrap().compose(c.diff(k).unwrap()).unwrap();
            assert!(square.is_zero(), "d{} ∘ d{} of {}", k - 1, k, name);
        }
        assert_eq!(c.reduced_homology().unwrap(), expected, "H_* of {}", name);
    }
}

#[test]
fn c02_pi2_of_both_models_is_two_sign_twisted_lines() {
    let g = c2();
    let sign = Character::new(&g, vec![-1]).unwrap();
    let line = twisted_integers(&g, &sign);
    let two_lines = fingerprint2(&line.direct_sum(&line).unwrap()).unwrap();
    assert_eq!(two_lines.to_string(), "(0, 2, 0)");
    for name in ["E", "F"] {
        assert_eq!(pi2(&builtin(name).unwrap()).unwrap(), two_lines, "pi2 of {}", name);
    }
}

#[test]
fn c03_k_invariants_and_residues_match_with_agreeing_lifts() {
    let e = builtin("E").unwrap();
    let f = builtin("F").unwrap();
    assert_eq!(standard_form_coefficient(e.form().unwrap()).unwrap(), -2);
    assert_eq!(standard_form_coefficient(f.form().unwrap()).unwrap(), -4);
    assert_eq!(hyperbolic_k(&e).unwrap(), (2, KInvariant::single(1, 1)));
    assert_eq!(hyperbolic_k(&f).unwrap(), (0, KInvariant::single(1, 0)));
    for c in [&e, &f] {
        let (first, second) = k_invariant_lifts(c).unwrap();
        assert_eq!(first, second, "independent chain-map lifts disagree");
        assert_eq!(first, k_invariant(c).unwrap());
    }
}

#[test]
fn c04_twisted_homology_table() {
    let zx = GroupSpec::parse("ZxC2").unwrap();
    let z2 = AbGroup::cyclic(2);
    assert_eq!(homology_twisted(&zx, &Character::trivial(&zx), 4).unwrap(), z2);
    let w = Character::parse(&zx, "t=-1,T=+1").unwrap();
    assert_eq!(homology_twisted(&zx, &w, 4).unwrap(), z2);
    let v_prime = Character::parse(&zx, "t=+1,T=-1").unwrap();
    assert_eq!(homology_twisted(&zx, &v_prime, 2).unwrap(), z2);
    for n in 2..=6 {
        let g = GroupSpec::cyclic(n).unwrap();
        let h2 = homology_twisted(&g, &Character::trivial(&g), 2).unwrap();
        assert!(h2.is_trivial(), "H2 of the order-{} cyclic group is {}", n, h2);
    }
}

#[test]
fn c05_gamma_coinvariants_and_the_comparison_isomorphism() {
    let g = c2();
    let triv = Character::trivial(&g);
    let sign = Character::new(&g, vec![-1]).unwrap();
    let module = twisted_integers(&g, &sign)
        .direct_sum(&twisted_integers(&g, &triv))
        .unwrap();
    let co = coinvariants(&gamma(&module).unwrap().lattice, &triv).unwrap();
    assert_eq!(co, AbGroup::new(2, [BigInt::from(2)]));

    for (n, with_sign) in [(2u32, true), (3, false), (4, true)] {
        let g = GroupSpec::cyclic(n).unwrap();
        theta_psi_check(&g, &Character::trivial(&g), 1).unwrap();
        if with_sign {
            let v = Character::new(&g, vec![-1]).unwrap();
            theta_psi_check(&g, &v, 1).unwrap();
        }
    }
    let dinf = GroupSpec::parse("C2*C2").unwrap();
    theta_psi_check(&dinf, &Character::trivial(&dinf), 3).unwrap();
}

fn random_sum(parts: &[(BasedLattice, usize)]) -> BasedLattice {
    let mut acc: Option<BasedLattice> = None;
    for (part, times) in parts {
        for _ in 0..*times {
            acc = Some(match &acc {
                None => part.clone(),
                Some(prev) => prev.direct_sum(part).unwrap(),
            });
        }
    }
    acc.expect("nonzero rank")
}

fn shear(lat: &BasedLattice, rng: &mut ChaCha8Rng) -> BasedLattice {
    let n = lat.rank();
    let u = IntMatrix::from_fn(n, n, |i, j| {
        if i == j {
            BigInt::from(1)
        } else if i > j {
            BigInt::from(rng.gen_range(-2i64..=2))
        } else {
            BigInt::from(0)
        }
    });
    lat.change_basis(&u).unwrap()
}

fn check_bmap_kernel(lat: &BasedLattice, w: &Character) {
    let res = b_map(lat, w).unwrap();
    let torsion = res.domain.torsion_subgroup();
    assert_eq!(res.kernel, torsion, "kernel vs coinvariant torsion");
    assert_eq!(
        torsion_order_by_minors(&res.relations),
        torsion.order().unwrap(),
        "minor-gcd torsion order disagrees with the normal form"
    );
}

#[test]
fn c06_bmap_kernel_is_the_torsion_of_the_gamma_coinvariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6b65726e);

    let g2 = c2();
    let triv2 = Character::trivial(&g2);
    let sign2 = Character::new(&g2, vec![-1]).unwrap();
    let z = twisted_integers(&g2, &triv2);
    let z_minus = twisted_integers(&g2, &sign2);
    let reg = free_module(&g2, 1, 1);
    for _ in 0..50 {
        let (t, s, f) = loop {
            let t = rng.gen_range(0usize..=4);
            let s = rng.gen_range(0usize..=4);
            let f = rng.gen_range(0usize..=2);
            let rank = t + s + 2 * f;
            if (1..=4).contains(&rank) {
                break (t, s, f);
            }
        };
        let lat = shear(
            &random_sum(&[(z.clone(), t), (z_minus.clone(), s), (reg.clone(), f)]),
            &mut rng,
        );
        let w = if rng.gen_bool(0.5) { triv2.clone() } else { sign2.clone() };
        check_bmap_kernel(&lat, &w);
    }

    let g3 = GroupSpec::cyclic(3).unwrap();
    let triv3 = Character::trivial(&g3);
    let z3 = twisted_integers(&g3, &triv3);
    let ideal3 = aug_ideal(&g3, &triv3, 1);
    for _ in 0..50 {
        let (t, i) = loop {
            let t = rng.gen_range(0usize..=4);
            let i = rng.gen_range(0usize..=2);
            let rank = t + 2 * i;
            if (1..=4).contains(&rank) {
                break (t, i);
            }
        };
        let lat = shear(&random_sum(&[(z3.clone(), t), (ideal3.clone(), i)]), &mut rng);
        check_bmap_kernel(&lat, &triv3);
    }
}

#[test]
fn c07_cyclic_augmentation_ideals_are_self_dual() {
    for n in 2..=6 {
        cyclic_dual_aug_check(n).unwrap();
    }
}

#[test]
fn c08_stable_pi2_classifier_is_exact() {
    let zx = GroupSpec::parse("ZxC2").unwrap();
    let d = Decomposition::new(&zx, Vec::new());
    let w = Character::trivial(&zx);
    let free = stable_pi2(&d, &w, &[true]).unwrap();
    assert!(free.is_stably_free());
    assert_eq!(free.to_string(), "stably free");
    let twisted = stable_pi2(&d, &w, &[false]).unwrap();
    assert!(!twisted.is_stably_free());
    assert_eq!(twisted.to_string(), "I(ZxC2[+-]) ⊕ I(ZxC2[++])");

    let dinf = GroupSpec::parse("C2*C2").unwrap();
    let dd = Decomposition::new(&dinf, Vec::new());
    let pair = stable_pi2(&dd, &Character::trivial(&dinf), &[]).unwrap();
    assert_eq!(pair.to_string(), "I(C2 * C2) ⊕ I(C2 * C2)");

    let g = c2();
    let neg = Character::new(&g, vec![-1]).unwrap();
    let rejected = stable_pi2(&Decomposition::new(&g, Vec::new()), &neg, &[]);
    assert!(matches!(rejected, Err(Error::Inadmissible(_))));
}

fn family_manifest(name: &str, ks: u8, s: (u8, u8)) -> Manifest {
    Manifest {
        name: name.into(),
        sigma: 0,
        ks,
        w2type: W2Type::X2y2,
        s: Some(s),
        form: FormDescriptor::Restricted { tag: "hyperbolic".into(), rank: 2 },
        kinv: Some(KInvariant::new(vec![(1, 1), (1, 1)])),
    }
}

#[test]
fn c09_classifier_regressions() {
    let ee = family_manifest("EE", 0, (0, 0));
    let star_both = family_manifest("sEsE", 0, (1, 1));
    let star_left = family_manifest("sEE", 1, (1, 0));
    let star_right = family_manifest("EsE", 1, (0, 1));

    let not = |a: &Manifest, b: &Manifest| {
        matches!(
            decide_dinfty(a, b, CompareMode::Based).unwrap(),
            Decision::NotHomeomorphic(_)
        )
    };
    assert!(not(&ee, &star_both));
    assert!(not(&star_left, &star_right));

    let family = [ee, star_both, star_left, star_right];
    for m in &family {
        assert!(validate(m).is_empty(), "{} should validate", m.name);
        assert_eq!(
            decide_dinfty(m, m, CompareMode::Based).unwrap(),
            Decision::Homeomorphic
        );
    }
    for i in 0..family.len() {
        for j in (i + 1)..family.len() {
            assert!(not(&family[i], &family[j]), "{} vs {}", family[i].name, family[j].name);
        }
    }

    let e = builtin("E").unwrap();
    let f = builtin("F").unwrap();
    let plane_sum = |name: &str, parts: &[&qtype_core::manifolds::ZPiComplex]| Manifest {
        name: name.into(),
        sigma: 1,
        ks: 0,
        w2type: W2Type::Inf,
        s: None,
        form: FormDescriptor::Restricted { tag: "odd".into(), rank: 3 },
        kinv: Some(connected_sum_k(parts).unwrap()),
    };
    let efp = plane_sum("EFP", &[&e, &f]);
    let ffp = plane_sum("FFP", &[&f, &f]);
    assert_ne!(efp.kinv, ffp.kinv);
    assert_eq!(
        decide_dinfty(&efp, &ffp, CompareMode::Based).unwrap(),
        Decision::Homeomorphic
    );

    let counterfeit = Manifest {
        name: "fake".into(),
        sigma: 8,
        ks: 0,
        w2type: W2Type::X2y2,
        s: Some((0, 0)),
        form: FormDescriptor::Restricted { tag: "hyperbolic".into(), rank: 2 },
        kinv: None,
    };
    assert!(!validate(&counterfeit).is_empty());
    assert!(matches!(
        decide_dinfty(&counterfeit, &counterfeit, CompareMode::Based),
        Err(Error::InvalidManifest(_))
    ));
}

#[test]
fn c10_bounds_and_constants() {
    let trivial = GroupSpec::trivial();
    let solvable = Decomposition::new(&trivial, vec![PD3Symbol::aspherical("sol", 1)]);
    assert_eq!(scob_bounds(&solvable, false, true).unwrap(), BigInt::from(2));

    assert_eq!(l4_dinfty(), AbGroup::free(3));
    assert!(l5_dinfty().is_trivial());

    let ss = structure_set_size(&builtin("E").unwrap()).unwrap();
    assert_eq!(ss.h2, AbGroup::elementary_2(2));
}

#[test]
fn c11_euler_characteristic_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xe47e5);
    for _ in 0..1000 {
        let factors = rng.gen_range(1usize..=3);
        let g = GroupSpec::parse(&vec!["Z"; factors].join("*")).unwrap();
        let signs: Vec<i8> = (0..g.gen_count())
            .map(|_| if rng.gen_bool(0.5) { 1 } else { -1 })
            .collect();
        let w = Character::new(&g, signs).unwrap();
        let pd3: Vec<PD3Symbol> = (0..rng.gen_range(0usize..=2))
            .map(|k| PD3Symbol::aspherical(&format!("a{}", k), rng.gen_range(0usize..=3)))
            .collect();
        let decomp = Decomposition::new(&g, pd3);
        let s = rng.gen_range(-10i64..=10);
        let chi = qtype_core::manifolds::euler_char(s, &decomp, &w).unwrap();
        assert_eq!(solve_s(chi, &decomp, &w).unwrap(), s);
    }

    let z = GroupSpec::parse("Z").unwrap();
    let circle_sphere = Decomposition::new(&z, Vec::new());
    assert_eq!(solve_s(0, &circle_sphere, &Character::trivial(&z)).unwrap(), -1);
}
