//! Free resolutions of ℤ over group rings of free products, assembled
//! degree by degree from standard periodic resolutions of the factors,
//! together with Fox calculus for presentations and twisted homology.
//!
//! Differentials follow the presentation convention: `d₁` is the row of
//! `g − 1` over the generators, so the degree-two block of the Fox complex
//! of a canonical presentation coincides with the resolution on the nose.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::groupring::{Character, FactorKind, FreeWord, GroupSpec, RingElt, RingMatrix};
use crate::zmat::{AbGroup, IntComplex};
use crate::{Error, Result};

/// A free resolution `C_depth → ... → C_1 → C_0` of ℤ over ℤπ; `ranks[k]`
/// is the rank of `C_k` and `diffs[k-1]` the matrix of `d_k`.
#[derive(Debug, Clone)]
pub struct Resolution {
    group: Arc<GroupSpec>,
    ranks: Vec<usize>,
    diffs: Vec<RingMatrix>,
}

impl Resolution {
    pub fn group(&self) -> &Arc<GroupSpec> {
        &self.group
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn rank(&self, k: usize) -> usize {
        self.ranks.get(k).copied().unwrap_or(0)
    }

    pub fn depth(&self) -> usize {
        self.ranks.len() - 1
    }

    /// The differential `d_k : C_k → C_{k-1}` for `1 ≤ k ≤ depth`.
    pub fn diff(&self, k: usize) -> Result<&RingMatrix> {
        if k == 0 || k > self.diffs.len() {
            return Err(Error::DegreeOutOfRange(k));
        }
        Ok(&self.diffs[k - 1])
    }

    /// Checks `d ∘ d = 0` symbolically and that `d₁` lands in the
    /// augmentation ideal.
    pub fn validate(&self) -> Result<()> {
        for k in 2..=self.depth() {
            let dd = self.diffs[k - 2].compose(&self.diffs[k - 1])?;
            if !dd.is_zero() {
                return Err(Error::Internal(format!("d_{} ∘ d_{} is nonzero", k - 1, k)));
            }
        }
        if self.depth() >= 1 {
            let triv = Character::trivial(&self.group);
            let d1 = &self.diffs[0];
            for j in 0..d1.cols() {
                if !d1.get(0, j).augment(&triv).is_zero() {
                    return Err(Error::Internal("d₁ does not land in the augmentation ideal".into()));
                }
            }
        }
        Ok(())
    }

    /// Tensors the resolution with ℤ^v over ℤπ, giving an integer complex
    /// with the same ranks and the entrywise v-augmented differentials.
    pub fn twisted_complex(&self, v: &Character) -> Result<IntComplex> {
        let diffs = self.diffs.iter().map(|d| d.augment_entrywise(v)).collect();
        IntComplex::new(self.ranks.clone(), diffs)
    }

    /// Applies a generator substitution to every differential, e.g. for
    /// passing to a finite quotient of the group.
    pub fn substitute(
        &self,
        target: &Arc<GroupSpec>,
        images: &[crate::groupring::Word],
    ) -> Result<Resolution> {
        let mut diffs = Vec::with_capacity(self.diffs.len());
        for d in &self.diffs {
            diffs.push(d.substitute(target, images)?);
        }
        Ok(Resolution { group: Arc::clone(target), ranks: self.ranks.clone(), diffs })
    }
}

/// Ranks and differential of one factor of the free product in one degree.
fn factor_block(group: &Arc<GroupSpec>, factor: usize, k: usize) -> Result<RingMatrix> {
    let base = group
        .gens()
        .iter()
        .position(|(fi, _, _)| *fi == factor)
        .ok_or_else(|| Error::Internal("factor without generators".into()))?;
    let kind = group.factors()[factor].kind;
    match kind {
        FactorKind::Cyclic(n) => {
            let a = RingElt::generator(group, base);
            let one = RingElt::one(group);
            let entry = if k % 2 == 1 {
                a.sub(&one)?
            } else {
                let mut norm = RingElt::zero(group);
                let mut p = RingElt::one(group);
                for _ in 0..n {
                    norm = norm.add(&p)?;
                    p = p.mul(&a)?;
                }
                norm
            };
            RingMatrix::from_rows(group, vec![vec![entry]])
        }
        FactorKind::Infinite => {
            let t = RingElt::generator(group, base);
            match k {
                1 => RingMatrix::from_rows(group, vec![vec![t.sub(&RingElt::one(group))?]]),
                2 => Ok(RingMatrix::zero(group, 1, 0)),
                _ => Ok(RingMatrix::zero(group, 0, 0)),
            }
        }
        FactorKind::ZxC2 => {
            let t = RingElt::generator(group, base);
            let cap_t = RingElt::generator(group, base + 1);
            let one = RingElt::one(group);
            let tm1 = t.sub(&one)?;
            let cap_m1 = cap_t.sub(&one)?;
            let cap_p1 = cap_t.add(&one)?;
            if k == 1 {
                return RingMatrix::from_rows(group, vec![vec![tm1, cap_m1]]);
            }
            let zero = RingElt::zero(group);
            if k % 2 == 0 {
                RingMatrix::from_rows(
                    group,
                    vec![vec![one.sub(&cap_t)?, zero], vec![tm1, cap_p1]],
                )
            } else {
                RingMatrix::from_rows(
                    group,
                    vec![vec![cap_p1.neg(), zero], vec![tm1, cap_m1]],
                )
            }
        }
    }
}

/// The standard free resolution of ℤ over ℤπ for a free product of cyclic,
/// ℤ, and ℤ×ℤ/2 factors, to the requested depth.
pub fn std_resolution(group: &Arc<GroupSpec>, depth: usize) -> Result<Resolution> {
    if depth < 1 {
        return Err(Error::DegreeOutOfRange(depth));
    }
    let nf = group.factors().len();
    let mut ranks = vec![1usize];
    let mut diffs = Vec::with_capacity(depth);
    for k in 1..=depth {
        let blocks: Vec<RingMatrix> = (0..nf)
            .map(|fi| factor_block(group, fi, k))
            .collect::<Result<_>>()?;
        let refs: Vec<&RingMatrix> = blocks.iter().collect();
        let d = if k == 1 {
            if refs.is_empty() {
                RingMatrix::zero(group, 1, 0)
            } else {
                RingMatrix::hstack(&refs)?
            }
        } else {
            RingMatrix::block_diag(group, &refs)?
        };
        ranks.push(d.cols());
        diffs.push(d);
    }
    let res = Resolution { group: Arc::clone(group), ranks, diffs };
    res.validate()?;
    Ok(res)
}

/// The homology `H_k(π; ℤ^v)`, computed from the standard resolution one
/// degree deeper than `k`.
pub fn homology_twisted(group: &Arc<GroupSpec>, v: &Character, k: usize) -> Result<AbGroup> {
    let res = std_resolution(group, k + 1)?;
    Ok(res.twisted_complex(v)?.homology_at(k))
}

/// The mod-2 Betti number `dim H_k(π; 𝔽₂)`.
pub fn betti_f2(group: &Arc<GroupSpec>, k: usize) -> Result<usize> {
    let res = std_resolution(group, k + 1)?;
    Ok(res.twisted_complex(&Character::trivial(group))?.betti_f2(k))
}

/// Restriction of a character along the inclusion of a sub-free-product.
pub fn restrict_character(
    v: &Character,
    group: &Arc<GroupSpec>,
    factor_indices: &[usize],
) -> Result<Character> {
    let sub = group.sub_product(factor_indices)?;
    let signs: Vec<i8> = group
        .gens()
        .iter()
        .enumerate()
        .filter(|(_, (fi, _, _))| factor_indices.contains(fi))
        .map(|(g, _)| v.sign_of_gen(g))
        .collect();
    Character::new(&sub, signs)
}

/// `Tor₁` of the restricted augmentation ideal against ℤ, over the
/// sub-free-product picked out by `factor_indices`, with coefficients
/// twisted by the restriction of `v`. By dimension shifting along
/// `0 → Iπ' → ℤπ' → ℤ → 0` this is `H₂` of the subgroup.
pub fn tor1_aug_ideal(
    group: &Arc<GroupSpec>,
    v: &Character,
    factor_indices: &[usize],
) -> Result<AbGroup> {
    let sub = group.sub_product(factor_indices)?;
    let v_sub = restrict_character(v, group, factor_indices)?;
    homology_twisted(&sub, &v_sub, 2)
}

// ---------------------------------------------------------------------------
// Fox calculus.
// ---------------------------------------------------------------------------

/// The Fox derivative `∂w/∂g` of a word in the free group on the group's
/// generators, with values in ℤπ.
pub fn fox_derivative(group: &Arc<GroupSpec>, w: &FreeWord, gen: usize) -> Result<RingElt> {
    if gen >= group.gen_count() {
        return Err(Error::DegreeOutOfRange(gen));
    }
    let mut prefix = RingElt::one(group);
    let mut out = RingElt::zero(group);
    for (g, k) in &w.0 {
        if *g >= group.gen_count() {
            return Err(Error::DegreeOutOfRange(*g));
        }
        if k.is_zero() {
            continue;
        }
        if *g == gen {
            let steps = k
                .abs()
                .to_i64()
                .ok_or_else(|| Error::Unsupported("exponent too large for Fox derivative".into()))?;
            let gw = group.gen_word(*g);
            let mut dterm = RingElt::zero(group);
            for i in 0..steps {
                let e = if k.is_negative() { BigInt::from(-(i + 1)) } else { BigInt::from(i) };
                let mono = RingElt::monomial(group, group.pow(&gw, &e)?, BigInt::from(1));
                dterm = if k.is_negative() { dterm.sub(&mono)? } else { dterm.add(&mono)? };
            }
            out = out.add(&prefix.mul(&dterm)?)?;
        }
        let step = RingElt::monomial(group, group.pow(&group.gen_word(*g), k)?, BigInt::from(1));
        prefix = prefix.mul(&step)?;
    }
    Ok(out)
}

/// The two-step chain complex of a presentation: `d₁` is the row of
/// `g − 1` over the generators, `d₂` the Fox Jacobian of the relators.
#[derive(Debug, Clone)]
pub struct FoxComplex {
    pub d1: RingMatrix,
    pub d2: RingMatrix,
}

pub fn fox_complex(group: &Arc<GroupSpec>, relators: &[FreeWord]) -> Result<FoxComplex> {
    let one = RingElt::one(group);
    let d1_row: Vec<RingElt> = (0..group.gen_count())
        .map(|g| RingElt::generator(group, g).sub(&one))
        .collect::<Result<_>>()?;
    let d1 = RingMatrix::from_rows(group, vec![d1_row])?;
    for r in relators {
        if !r.eval(group).is_identity() {
            return Err(Error::Inadmissible(
                "presentation relator is not trivial in the group".into(),
            ));
        }
    }
    let mut rows = Vec::with_capacity(group.gen_count());
    for g in 0..group.gen_count() {
        let mut row = Vec::with_capacity(relators.len());
        for r in relators {
            row.push(fox_derivative(group, r, g)?);
        }
        rows.push(row);
    }
    let d2 = RingMatrix::from_rows(group, rows)?;
    let dd = d1.compose(&d2)?;
    if !dd.is_zero() {
        return Err(Error::Internal("fundamental Fox identity fails".into()));
    }
    Ok(FoxComplex { d1, d2 })
}

/// The canonical relators of a free product: `a^n` per cyclic factor and
/// `tTt⁻¹T⁻¹`, `T²` per ℤ×ℤ/2 factor (in that order).
pub fn canonical_relators(group: &Arc<GroupSpec>) -> Vec<FreeWord> {
    let mut out = Vec::new();
    for (fi, factor) in group.factors().iter().enumerate() {
        let base = group
            .gens()
            .iter()
            .position(|(f, _, _)| *f == fi)
            .expect("factor has generators");
        match factor.kind {
            FactorKind::Cyclic(n) => {
                out.push(FreeWord(vec![(base, BigInt::from(n))]));
            }
            FactorKind::Infinite => {}
            FactorKind::ZxC2 => {
                out.push(FreeWord(vec![
                    (base, BigInt::from(1)),
                    (base + 1, BigInt::from(1)),
                    (base, BigInt::from(-1)),
                    (base + 1, BigInt::from(-1)),
                ]));
                out.push(FreeWord(vec![(base + 1, BigInt::from(2))]));
            }
        }
    }
    out
}
