//! Sesquilinear and Hermitian forms over a group ring, the hyperbolic form
//! on the augmentation ideal, the map 𝓑 from twisted Γ-coinvariants into
//! Hermitian forms on the dual module, and the chain-level evaluation
//! pairing from degree-two cohomology into the dual of second homology.
//!
//! The central computation is [`b_map`]: for a based lattice `A` over a
//! finite group the dual module `A†` is coordinatized by the Frobenius dual
//! basis, the map `a ⊗ b ↦ ((f, g) ↦ f(a)‾ · g(b))` becomes an integer
//! matrix, and its kernel on the coinvariants is extracted exactly. For
//! finite groups that kernel is precisely the torsion of the coinvariants;
//! over infinite groups everything is truncated at the word ball and only
//! safe-radius assertions are meaningful.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::gamma::gamma;
use crate::groupring::{Character, FactorKind, GenRole, GroupSpec, RingElt, RingMatrix, Word};
use crate::lattices::{cochain_flatten, enumerate_ball, enumerate_elements, BasedLattice};
use crate::manifolds::{flatten, h2_lattice, ZPiComplex};
use crate::zmat::{cokernel, kernel_basis, solve, AbGroup, IntMatrix};
use crate::{Error, Result};

/// Ball radius used to truncate dual-basis sums when the lattice itself
/// carries no truncation but the group is infinite.
const FALLBACK_RADIUS: usize = 2;

/// A sesquilinear form: a square matrix of pairing values `λ(b_i, b_j)` over
/// the group ring, together with the character twisting the involution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SesqForm {
    pub matrix: RingMatrix,
    pub w: Character,
    pub labels: Vec<String>,
}

impl SesqForm {
    pub fn rank(&self) -> usize {
        self.matrix.rows()
    }
}

/// A form is Hermitian when it equals its conjugate transpose under the
/// w-twisted involution.
pub fn hermitian_check(f: &SesqForm) -> bool {
    f.matrix.dagger(&f.w) == f.matrix
}

/// The hyperbolic form on `Iπ ⊕ Iπ†`, pairing `((x,φ),(y,ψ)) ↦ φ(y)‾ + ψ(x)`.
///
/// The ideal basis is `e_g = g − 1` over the nontrivial ball words, and the
/// dual copy carries the Frobenius dual basis `f_h`, so the only nonzero
/// block has entries `f_h(e_g) = gh⁻¹ − h⁻¹`. For infinite groups the basis
/// is the `l`-ball and products falling outside it are dropped.
pub fn hyperbolic(group: &Arc<GroupSpec>, w: &Character, l: usize) -> Result<SesqForm> {
    let ball = if group.is_finite() {
        enumerate_elements(group)?
    } else {
        enumerate_ball(group, l)
    };
    let in_ball: BTreeSet<&Word> = ball.iter().collect();
    let basis: Vec<&Word> = ball.iter().filter(|u| !u.is_identity()).collect();
    let r = basis.len();

    let mut pairing = RingMatrix::zero(group, r, r);
    for (gi, g) in basis.iter().enumerate() {
        for (hi, h) in basis.iter().enumerate() {
            let hinv = group.inv(h);
            let ghinv = group.mul(g, &hinv);
            let mut val = RingElt::monomial(group, hinv, -BigInt::one());
            if in_ball.contains(&ghinv) {
                val = val.add(&RingElt::monomial(group, ghinv, BigInt::one()))?;
            }
            pairing.set(gi, hi, val)?;
        }
    }
    let dual = pairing.dagger(w);

    let mut matrix = RingMatrix::zero(group, 2 * r, 2 * r);
    for i in 0..r {
        for j in 0..r {
            matrix.set(i, r + j, pairing.get(i, j).clone())?;
            matrix.set(r + i, j, dual.get(i, j).clone())?;
        }
    }
    let labels = basis
        .iter()
        .map(|u| format!("e[{}]", group.word_to_string(u)))
        .chain(basis.iter().map(|u| format!("f[{}]", group.word_to_string(u))))
        .collect();
    Ok(SesqForm { matrix, w: w.clone(), labels })
}

/// The map 𝓑 out of the w-twisted coinvariants of Γ(A), in explicit bases.
#[derive(Debug, Clone)]
pub struct BMapResult {
    /// Matrix of 𝓑 from the Γ-basis into pairing coordinates; row `k` holds
    /// the coefficient of `rows[k]`.
    pub matrix: IntMatrix,
    /// Row coordinates: (dual index i, dual index j, group word x) reads off
    /// the coefficient of `x` in the value of the form at `(f_i, f_j)`.
    pub rows: Vec<(usize, usize, Word)>,
    /// Stacked coinvariant relations `w(g)·Γ(g) − id` over the generators.
    pub relations: IntMatrix,
    /// The coinvariants ℤ^w ⊗ Γ(A), the domain of the induced map.
    pub domain: AbGroup,
    /// Kernel of the induced map on the coinvariants (exact lattices), or of
    /// the matrix restricted to safe-radius columns (truncated lattices).
    pub kernel: AbGroup,
    /// Set when the injectivity criteria are void because some element of
    /// order two carries sign −1.
    pub warning: Option<String>,
}

/// Matrix of `𝓑: ℤ^w ⊗ Γ(A) → Her^w(A†)` and its kernel.
///
/// For a finite group the dual basis sums run over the whole group and the
/// kernel is computed on the coinvariants; free-as-abelian input then yields
/// kernel = torsion of the domain. Truncated lattices get ball-truncated
/// dual sums instead, and the kernel field reports only the strict kernel on
/// safe-radius columns.
pub fn b_map(a: &BasedLattice, w: &Character) -> Result<BMapResult> {
    if a.group() != w.group() {
        return Err(Error::GroupMismatch(a.group().describe(), w.group().describe()));
    }
    let group = a.group();
    let warning = order_two_obstruction(w);
    let (support, exact) = dual_support(a)?;
    let r = a.rank();

    // Frobenius values f_i(b_j) = Σ_x act(x⁻¹)[i][j] · x and their conjugates.
    let mut values = vec![vec![RingElt::zero(group); r]; r];
    for x in &support {
        let m = a.word_action(&group.inv(x))?;
        for i in 0..r {
            for j in 0..r {
                let c = m.get(i, j);
                if !c.is_zero() {
                    values[i][j] =
                        values[i][j].add(&RingElt::monomial(group, x.clone(), c.clone()))?;
                }
            }
        }
    }
    let conj: Vec<Vec<RingElt>> = values
        .iter()
        .map(|row| row.iter().map(|e| e.involute(w)).collect())
        .collect();

    let gm = gamma(a)?;
    let n = gm.rank();
    let mut columns: Vec<BTreeMap<(usize, usize, Word), BigInt>> = Vec::with_capacity(n);
    for k in 0..r {
        let mut col = BTreeMap::new();
        for i in 0..r {
            for j in 0..r {
                accumulate(&mut col, i, j, &conj[i][k].mul(&values[j][k])?);
            }
        }
        columns.push(col);
    }
    for k in 0..r {
        for l in (k + 1)..r {
            let mut col = BTreeMap::new();
            for i in 0..r {
                for j in 0..r {
                    accumulate(&mut col, i, j, &conj[i][k].mul(&values[j][l])?);
                    accumulate(&mut col, i, j, &conj[i][l].mul(&values[j][k])?);
                }
            }
            columns.push(col);
        }
    }

    let rows: Vec<(usize, usize, Word)> = columns
        .iter()
        .flat_map(|c| c.keys().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let row_index: BTreeMap<&(usize, usize, Word), usize> =
        rows.iter().enumerate().map(|(i, k)| (k, i)).collect();
    let mut matrix = IntMatrix::zero(rows.len(), n);
    for (j, col) in columns.iter().enumerate() {
        for (key, c) in col {
            matrix.set(row_index[key], j, c.clone());
        }
    }

    let relations = coinvariant_relations(&gm.lattice, w)?;
    let domain = cokernel(&relations);

    let kernel = if exact {
        let product = matrix.mul(&relations)?;
        if !product.is_zero() {
            return Err(Error::Internal(
                "form map does not descend to the coinvariants".into(),
            ));
        }
        let ker = kernel_basis(&matrix);
        let coords = solve(&ker, &relations).ok_or_else(|| {
            Error::Internal("coinvariant relations escape the kernel lattice".into())
        })?;
        cokernel(&coords)
    } else {
        let safe = match gm.lattice.safe_radius() {
            Some(radius) => gm.lattice.indices_within(radius),
            None => (0..n).collect(),
        };
        let restricted =
            IntMatrix::from_fn(matrix.rows(), safe.len(), |i, j| matrix.get(i, safe[j]).clone());
        AbGroup::free(kernel_basis(&restricted).cols())
    };

    Ok(BMapResult { matrix, rows, relations, domain, kernel, warning })
}

/// Words indexing the dual-basis sums, and whether they exhaust the group.
fn dual_support(a: &BasedLattice) -> Result<(Vec<Word>, bool)> {
    if a.group().is_finite() && !a.is_truncated() {
        return Ok((enumerate_elements(a.group())?, true));
    }
    let l = a.truncation().unwrap_or(FALLBACK_RADIUS);
    Ok((enumerate_ball(a.group(), l), false))
}

fn accumulate(
    col: &mut BTreeMap<(usize, usize, Word), BigInt>,
    i: usize,
    j: usize,
    value: &RingElt,
) {
    for (word, c) in value.terms() {
        let entry = col.entry((i, j, word.clone())).or_insert_with(BigInt::zero);
        *entry += c;
        if entry.is_zero() {
            col.remove(&(i, j, word.clone()));
        }
    }
}

/// Stacked blocks `w(g)·A_g − I` over the group generators; zero columns of
/// relations when the group is trivial.
fn coinvariant_relations(a: &BasedLattice, w: &Character) -> Result<IntMatrix> {
    let n = a.rank();
    if a.group().gen_count() == 0 {
        return Ok(IntMatrix::zero(n, 0));
    }
    let id = IntMatrix::identity(n);
    let mut blocks = Vec::new();
    for g in 0..a.group().gen_count() {
        let sign = BigInt::from(w.sign_of_gen(g) as i64);
        blocks.push(a.action(g).scale(&sign).sub(&id)?);
    }
    let refs: Vec<&IntMatrix> = blocks.iter().collect();
    IntMatrix::hstack(&refs)
}

/// The evaluation pairing of a finite-group chain complex: degree-two
/// cohomology mapping into the dual of second homology.
#[derive(Debug, Clone)]
pub struct EvPairing {
    /// Pairing in cocycle coordinates: column `j` holds the Frobenius
    /// coordinates of the `j`-th basis cocycle against the homology basis.
    pub matrix: IntMatrix,
    /// Degree-two cohomology of the complex with group-ring coefficients,
    /// the domain of the induced map.
    pub domain: AbGroup,
    /// Rank of the codomain `Hom(H₂, ℤπ) ≅ ℤ^{rank H₂}`.
    pub codomain_rank: usize,
    /// Kernel of the induced map on cohomology classes.
    pub kernel: AbGroup,
    /// Cokernel on the codomain lattice.
    pub cokernel: AbGroup,
}

impl EvPairing {
    pub fn is_isomorphism(&self) -> bool {
        self.kernel.is_trivial() && self.cokernel.is_trivial()
    }
}

/// Chain-level evaluation `ev: H²(C) → Hom(H₂(C), ℤπ)`, `α ↦ (x ↦ α(x))`.
///
/// Cochains with group-ring coefficients flatten over the element basis; the
/// codomain is coordinatized as `ℤ^{rank H₂}` through the Frobenius
/// isomorphism `Hom_{ℤπ}(M, ℤπ) ≅ Hom_ℤ(M, ℤ)`, which reads off the identity
/// coefficient of each value. Kernel and cokernel of the induced map are
/// exact; coboundaries pair to zero against cycles on the nose, which is
/// checked rather than assumed.
pub fn ev_pairing(c: &ZPiComplex) -> Result<EvPairing> {
    let group = c.group();
    if !group.is_finite() {
        return Err(Error::Unsupported(format!(
            "the evaluation pairing sums over the group and needs it finite, not {}",
            group.describe()
        )));
    }
    let flat = flatten(c)?;
    let h2 = h2_lattice(c, &flat)?;
    let n = flat.elements.len();
    let index: BTreeMap<&Word, usize> =
        flat.elements.iter().enumerate().map(|(i, w)| (w, i)).collect();

    let delta2 = cochain_flatten(c.diff(2)?, &flat.elements)?;
    let delta3 = cochain_flatten(c.diff(3)?, &flat.elements)?;
    let cocycles = kernel_basis(&delta3);
    let cobounds = solve(&cocycles, &delta2)
        .ok_or_else(|| Error::Internal("degree-two coboundaries are not cocycles".into()))?;
    let domain = cokernel(&cobounds);

    // Identity coefficient of α(b) = Σ_i b_i·α_i: every b-coordinate at the
    // flat slot (i, h) picks up the α-coordinate at (i, h⁻¹).
    let flat_cycles = h2.cycles.mul(&h2.basis)?;
    let r = h2.rank();
    let mut raw = IntMatrix::zero(r, flat_cycles.rows());
    for k in 0..r {
        for fi in 0..flat_cycles.rows() {
            let coeff = flat_cycles.get(fi, k);
            if coeff.is_zero() {
                continue;
            }
            let hinv = group.inv(&flat.elements[fi % n]);
            let col = (fi / n) * n + index[&hinv];
            let entry = raw.get(k, col).clone() + coeff;
            raw.set(k, col, entry);
        }
    }
    let matrix = raw.mul(&cocycles)?;
    if !matrix.mul(&cobounds)?.is_zero() {
        return Err(Error::Internal("the pairing does not vanish on coboundaries".into()));
    }

    let flat_kernel = kernel_basis(&matrix);
    let in_kernel = solve(&flat_kernel, &cobounds)
        .ok_or_else(|| Error::Internal("coboundaries escape the pairing kernel".into()))?;
    Ok(EvPairing {
        cokernel: cokernel(&matrix),
        kernel: cokernel(&in_kernel),
        matrix,
        domain,
        codomain_rank: r,
    })
}

/// Scans the factors for an element of order two with sign −1 under `w`:
/// the mid-turn of an even cyclic factor, or the order-two generator of a
/// `ZxC2` factor. Conjugation preserves signs, so factors suffice.
fn order_two_obstruction(w: &Character) -> Option<String> {
    let group = w.group();
    for (gi, (fi, name, role)) in group.gens().iter().enumerate() {
        let bad = match (group.factors()[*fi].kind, role) {
            (FactorKind::Cyclic(n), GenRole::Cyclic) if n % 2 == 0 => {
                let half = group
                    .pow(&group.gen_word(gi), &BigInt::from(n / 2))
                    .expect("small exponent");
                w.eval(&half) == -1
            }
            (FactorKind::ZxC2, GenRole::MixedC2) => w.sign_of_gen(gi) == -1,
            _ => false,
        };
        if bad {
            return Some(format!(
                "an order-two element in the factor of generator {} has sign -1, so the \
                 injectivity criteria for the form map do not apply",
                name
            ));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupring::parse_ring_elt;
    use crate::lattices::{aug_ideal, fingerprint2, free_module, twisted_integers};
    use crate::zmat::torsion_order_by_minors;
    use proptest::prelude::*;

    fn c2() -> Arc<GroupSpec> {
        GroupSpec::cyclic(2).unwrap()
    }

    fn dinf() -> Arc<GroupSpec> {
        GroupSpec::parse("C2*C2").unwrap()
    }

    #[test]
    fn hermitian_check_examples() {
        let d = dinf();
        let w = Character::trivial(&d);
        let identity = SesqForm {
            matrix: RingMatrix::identity(&d, 2),
            w: w.clone(),
            labels: vec!["x".into(), "y".into()],
        };
        assert!(hermitian_check(&identity));

        let self_inverse = SesqForm {
            matrix: RingMatrix::from_rows(&d, vec![vec![parse_ring_elt("a", &d).unwrap()]])
                .unwrap(),
            w: w.clone(),
            labels: vec!["x".into()],
        };
        assert!(hermitian_check(&self_inverse));

        let lopsided = SesqForm {
            matrix: RingMatrix::from_rows(
                &d,
                vec![
                    vec![RingElt::zero(&d), RingElt::one(&d)],
                    vec![RingElt::zero(&d), RingElt::zero(&d)],
                ],
            )
            .unwrap(),
            w,
            labels: vec!["x".into(), "y".into()],
        };
        assert!(!hermitian_check(&lopsided));
    }

    #[test]
    fn hyperbolic_over_order_two_group() {
        let g = c2();
        for signs in [vec![1], vec![-1]] {
            let w = Character::new(&g, signs).unwrap();
            let h = hyperbolic(&g, &w, 1).unwrap();
            assert_eq!(h.rank(), 2);
            assert!(hermitian_check(&h));
            let one_minus_a = parse_ring_elt("1 - a", &g).unwrap();
            assert_eq!(h.matrix.get(0, 1), &one_minus_a);
            assert_eq!(h.matrix.get(1, 0), &one_minus_a.involute(&w));
        }
    }

    #[test]
    fn hyperbolic_blocks_are_lagrangian() {
        let cases: Vec<(Arc<GroupSpec>, usize)> = vec![
            (c2(), 1),
            (GroupSpec::cyclic(3).unwrap(), 1),
            (dinf(), 2),
            (GroupSpec::parse("Z").unwrap(), 2),
        ];
        for (g, l) in cases {
            let w = Character::trivial(&g);
            let h = hyperbolic(&g, &w, l).unwrap();
            assert!(hermitian_check(&h), "not hermitian over {}", g.describe());
            let r = h.rank() / 2;
            for i in 0..r {
                for j in 0..r {
                    assert!(h.matrix.get(i, j).is_zero());
                    assert!(h.matrix.get(r + i, r + j).is_zero());
                }
            }
        }
    }

    #[test]
    fn hyperbolic_over_cyclic_three_pairs_duals() {
        let g = GroupSpec::cyclic(3).unwrap();
        let w = Character::trivial(&g);
        let h = hyperbolic(&g, &w, 1).unwrap();
        assert_eq!(h.rank(), 4);
        // f_h(e_g) = g·h⁻¹ − h⁻¹ on the basis {e_a, e_{a²}}.
        let expect = |text: &str| parse_ring_elt(text, &g).unwrap();
        assert_eq!(h.matrix.get(0, 2), &expect("1 - a^2"));
        assert_eq!(h.matrix.get(0, 3), &expect("a^2 - a"));
        assert_eq!(h.matrix.get(1, 2), &expect("a - a^2"));
        assert_eq!(h.matrix.get(1, 3), &expect("1 - a"));
    }

    #[test]
    fn b_map_on_regular_representation_is_injective() {
        let g = c2();
        let w = Character::trivial(&g);
        let res = b_map(&free_module(&g, 1, 1), &w).unwrap();
        assert_eq!(res.domain, AbGroup::free(2));
        assert!(res.kernel.is_trivial());
        assert!(res.warning.is_none());
    }

    #[test]
    fn b_map_kernel_is_torsion_for_sign_plus_trivial() {
        let g = c2();
        let w = Character::trivial(&g);
        let sign = Character::new(&g, vec![-1]).unwrap();
        let a = twisted_integers(&g, &sign).direct_sum(&twisted_integers(&g, &w)).unwrap();
        let res = b_map(&a, &w).unwrap();
        assert_eq!(res.domain, AbGroup::new(2, [BigInt::from(2)]));
        assert_eq!(res.kernel, AbGroup::cyclic(2));
        assert_eq!(res.kernel, res.domain.torsion_subgroup());
    }

    #[test]
    fn b_map_over_trivial_group_is_the_gram_embedding() {
        let g = GroupSpec::trivial();
        let w = Character::trivial(&g);
        let res = b_map(&free_module(&g, 3, 0), &w).unwrap();
        assert_eq!(res.domain, AbGroup::free(6));
        assert!(res.kernel.is_trivial());
        assert_eq!(res.relations.cols(), 0);
    }

    #[test]
    fn b_map_flags_negative_order_two_elements() {
        let c2 = c2();
        let res = b_map(
            &free_module(&c2, 1, 1),
            &Character::new(&c2, vec![-1]).unwrap(),
        )
        .unwrap();
        assert!(res.warning.is_some());

        let c4 = GroupSpec::cyclic(4).unwrap();
        let res = b_map(
            &free_module(&c4, 1, 1),
            &Character::new(&c4, vec![-1]).unwrap(),
        )
        .unwrap();
        assert!(res.warning.is_none(), "the square of the generator has sign +1");

        let c6 = GroupSpec::cyclic(6).unwrap();
        let res = b_map(
            &free_module(&c6, 1, 1),
            &Character::new(&c6, vec![-1]).unwrap(),
        )
        .unwrap();
        assert!(res.warning.is_some());

        let zx = GroupSpec::parse("ZxC2").unwrap();
        let res = b_map(
            &twisted_integers(&zx, &Character::trivial(&zx)),
            &Character::new(&zx, vec![1, -1]).unwrap(),
        )
        .unwrap();
        assert!(res.warning.is_some());
    }

    #[test]
    fn b_map_is_injective_on_augmentation_ideals_of_small_cyclic_groups() {
        for (n, signs) in [
            (2u32, vec![vec![1]]),
            (3, vec![vec![1]]),
            (4, vec![vec![1], vec![-1]]),
        ] {
            let g = GroupSpec::cyclic(n).unwrap();
            for w_signs in &signs {
                let w = Character::new(&g, w_signs.clone()).unwrap();
                for v_signs in &signs {
                    let v = Character::new(&g, v_signs.clone()).unwrap();
                    let res = b_map(&aug_ideal(&g, &v, 1), &w).unwrap();
                    assert!(res.warning.is_none());
                    assert!(
                        res.kernel.is_trivial(),
                        "kernel {} for n = {}",
                        res.kernel,
                        n
                    );
                }
            }
        }
    }

    #[test]
    fn b_map_truncated_dihedral_ideal_has_no_safe_kernel() {
        let g = dinf();
        let w = Character::trivial(&g);
        for l in [2usize, 3] {
            for v_signs in [vec![1, 1], vec![-1, -1]] {
                let v = Character::new(&g, v_signs).unwrap();
                let res = b_map(&aug_ideal(&g, &v, l), &w).unwrap();
                assert!(res.warning.is_none());
                assert!(res.kernel.is_trivial(), "safe kernel at radius {}", l);
            }
        }
    }

    #[test]
    fn b_map_kernel_is_stable_under_adding_a_free_summand() {
        let g = c2();
        let w = Character::trivial(&g);
        let sign = Character::new(&g, vec![-1]).unwrap();
        let free = free_module(&g, 1, 1);

        let a = twisted_integers(&g, &sign).direct_sum(&twisted_integers(&g, &w)).unwrap();
        let base = b_map(&a, &w).unwrap();
        let stabilized = b_map(&a.direct_sum(&free).unwrap(), &w).unwrap();
        assert_eq!(base.kernel, AbGroup::cyclic(2));
        assert_eq!(stabilized.kernel, base.kernel);

        let c4 = GroupSpec::cyclic(4).unwrap();
        let w4 = Character::trivial(&c4);
        let ideal = aug_ideal(&c4, &Character::new(&c4, vec![-1]).unwrap(), 1);
        let base = b_map(&ideal, &w4).unwrap();
        let stabilized =
            b_map(&ideal.direct_sum(&free_module(&c4, 1, 1)).unwrap(), &w4).unwrap();
        assert!(base.kernel.is_trivial());
        assert_eq!(stabilized.kernel, base.kernel);
    }

    #[test]
    fn b_map_splits_along_direct_sums() {
        let g = c2();
        let w = Character::trivial(&g);
        let sign = Character::new(&g, vec![-1]).unwrap();
        let a = twisted_integers(&g, &sign);
        let b = free_module(&g, 1, 1);
        let sum = a.direct_sum(&b).unwrap();

        let res_a = b_map(&a, &w).unwrap();
        let res_sum = b_map(&sum, &w).unwrap();
        let split = crate::gamma::baues_split(&a, &b).unwrap();
        let arranged = res_sum.matrix.mul(&split).unwrap();

        let ra = a.rank();
        let ga = crate::gamma::gamma_rank(ra);
        let gb = crate::gamma::gamma_rank(b.rank());
        let lookup: BTreeMap<&(usize, usize, Word), usize> =
            res_a.rows.iter().enumerate().map(|(i, k)| (k, i)).collect();

        for (ri, key) in res_sum.rows.iter().enumerate() {
            let (i, j, word) = key;
            for col in 0..arranged.cols() {
                let entry = arranged.get(ri, col);
                let expected_zero = if col < ga {
                    *i >= ra || *j >= ra
                } else if col < ga + gb {
                    *i < ra || *j < ra
                } else {
                    (*i < ra) == (*j < ra)
                };
                if expected_zero {
                    assert!(entry.is_zero(), "off-block entry at {:?}", key);
                } else if col < ga {
                    let expected = lookup
                        .get(&(*i, *j, word.clone()))
                        .map(|&ai| res_a.matrix.get(ai, col).clone())
                        .unwrap_or_else(BigInt::zero);
                    assert_eq!(entry, &expected, "first block mismatch at {:?}", key);
                }
            }
        }
    }

    fn c2_mixtures() -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for t in 0..=4usize {
            for s in 0..=4usize {
                for f in 0..=2usize {
                    let rank = t + s + 2 * f;
                    if rank >= 1 && rank <= 4 {
                        out.push((t, s, f));
                    }
                }
            }
        }
        out
    }

    fn random_c2_lattice(
        mix: (usize, usize, usize),
        entries: &[i64],
    ) -> BasedLattice {
        let g = c2();
        let trivial = twisted_integers(&g, &Character::trivial(&g));
        let sign = twisted_integers(&g, &Character::new(&g, vec![-1]).unwrap());
        let free = free_module(&g, 1, 1);
        let mut acc: Option<BasedLattice> = None;
        let mut push = |part: &BasedLattice, times: usize| {
            for _ in 0..times {
                acc = Some(match &acc {
                    None => part.clone(),
                    Some(prev) => prev.direct_sum(part).unwrap(),
                });
            }
        };
        push(&trivial, mix.0);
        push(&sign, mix.1);
        push(&free, mix.2);
        let lat = acc.expect("nonzero rank");
        let n = lat.rank();
        let u = IntMatrix::from_fn(n, n, |i, j| {
            if i == j {
                BigInt::one()
            } else if i > j {
                BigInt::from(entries[(i * n + j) % entries.len()])
            } else {
                BigInt::zero()
            }
        });
        lat.change_basis(&u).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn prop_kernel_equals_domain_torsion_over_order_two(
            mix in proptest::sample::select(c2_mixtures()),
            entries in proptest::collection::vec(-2i64..=2, 16),
            negative in proptest::bool::ANY,
        ) {
            let g = c2();
            let lat = random_c2_lattice(mix, &entries);
            let w = if negative {
                Character::new(&g, vec![-1]).unwrap()
            } else {
                Character::trivial(&g)
            };
            let res = b_map(&lat, &w).unwrap();
            prop_assert_eq!(&res.kernel, &res.domain.torsion_subgroup());
            prop_assert_eq!(
                torsion_order_by_minors(&res.relations),
                res.domain.torsion_subgroup().order().unwrap()
            );
        }

        #[test]
        fn prop_kernel_equals_domain_torsion_over_order_three(
            t in 0usize..=2,
            ideals in 0usize..=2,
            entries in proptest::collection::vec(-2i64..=2, 16),
        ) {
            let g = GroupSpec::cyclic(3).unwrap();
            let w = Character::trivial(&g);
            prop_assume!(t + 2 * ideals >= 1 && t + 2 * ideals <= 4);
            let trivial = twisted_integers(&g, &w);
            let ideal = aug_ideal(&g, &w, 1);
            let mut acc: Option<BasedLattice> = None;
            let mut push = |part: &BasedLattice, times: usize| {
                for _ in 0..times {
                    acc = Some(match &acc {
                        None => part.clone(),
                        Some(prev) => prev.direct_sum(part).unwrap(),
                    });
                }
            };
            push(&trivial, t);
            push(&ideal, ideals);
            let lat = acc.unwrap();
            let n = lat.rank();
            let u = IntMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    BigInt::one()
                } else if i > j {
                    BigInt::from(entries[(i * n + j) % entries.len()])
                } else {
                    BigInt::zero()
                }
            });
            let lat = lat.change_basis(&u).unwrap();
            let res = b_map(&lat, &w).unwrap();
            prop_assert_eq!(&res.kernel, &res.domain.torsion_subgroup());
            prop_assert_eq!(
                torsion_order_by_minors(&res.relations),
                res.domain.torsion_subgroup().order().unwrap()
            );
        }
    }

    #[test]
    fn ev_pairing_is_an_isomorphism_for_the_builtin_models() {
        for name in ["E", "F"] {
            let c = crate::manifolds::builtin(name).unwrap();
            let ev = ev_pairing(&c).unwrap();
            assert_eq!(ev.domain, AbGroup::free(2), "H² of {}", name);
            assert_eq!(ev.codomain_rank, 2);
            assert!(ev.kernel.is_trivial(), "kernel {} for {}", ev.kernel, name);
            assert!(ev.cokernel.is_trivial(), "cokernel {} for {}", ev.cokernel, name);
            assert!(ev.is_isomorphism());
        }
    }

    #[test]
    fn ev_pairing_with_no_second_homology_is_between_trivial_groups() {
        let g = GroupSpec::trivial();
        let c = ZPiComplex::new(
            &g,
            [1, 0, 0, 0, 1],
            vec![
                RingMatrix::zero(&g, 1, 0),
                RingMatrix::zero(&g, 0, 0),
                RingMatrix::zero(&g, 0, 0),
                RingMatrix::zero(&g, 0, 1),
            ],
            None,
            None,
        )
        .unwrap();
        let ev = ev_pairing(&c).unwrap();
        assert!(ev.domain.is_trivial());
        assert_eq!(ev.codomain_rank, 0);
        assert!(ev.is_isomorphism());
    }

    #[test]
    fn ev_pairing_rejects_infinite_groups() {
        let g = GroupSpec::parse("Z").unwrap();
        let tm1 = RingElt::generator(&g, 0).sub(&RingElt::one(&g)).unwrap();
        let edge = RingMatrix::from_rows(&g, vec![vec![tm1]]).unwrap();
        let c = ZPiComplex::new(
            &g,
            [1, 1, 0, 1, 1],
            vec![
                edge.clone(),
                RingMatrix::zero(&g, 1, 0),
                RingMatrix::zero(&g, 0, 1),
                edge,
            ],
            None,
            None,
        )
        .unwrap();
        assert!(matches!(ev_pairing(&c), Err(Error::Unsupported(_))));
    }

    #[test]
    fn b_map_sees_the_fingerprint_torsion() {
        // Mixtures with both a trivial and a sign summand have 2-torsion in
        // the coinvariants, and the kernel tracks it exactly.
        let g = c2();
        let w = Character::trivial(&g);
        let sign = Character::new(&g, vec![-1]).unwrap();
        let lat = twisted_integers(&g, &w)
            .direct_sum(&twisted_integers(&g, &sign))
            .unwrap()
            .direct_sum(&twisted_integers(&g, &sign))
            .unwrap();
        assert_eq!(fingerprint2(&lat).unwrap().sign, 2);
        let res = b_map(&lat, &w).unwrap();
        assert_eq!(res.kernel, res.domain.torsion_subgroup());
        assert!(!res.kernel.is_trivial());
    }
}
