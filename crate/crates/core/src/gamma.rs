//! Whitehead's quadratic functor Γ on based lattices, its coinvariants,
//! the splitting Γ(A ⊕ B) ≅ Γ(A) ⊕ Γ(B) ⊕ (A ⊗ B), and the explicit
//! comparison maps θ, ψ between the symmetric-pair quotient of Γ(ℤπ) and
//! Γ of the augmentation ideal.
//!
//! The basis of Γ(A) for a rank-r lattice A is `γ_1, ..., γ_r` (squares of
//! the basis vectors) followed by the symmetrized products `s_{ij}` for
//! `i < j` in lexicographic order, so the rank is `r(r+1)/2`.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::groupring::{Character, GroupSpec, Word};
use crate::lattices::{aug_ideal, enumerate_ball, enumerate_elements, word_radius, BasedLattice};
use crate::zmat::{cokernel, AbGroup, IntMatrix};
use crate::{Error, Result};

/// Γ of a based lattice, remembering the rank of the underlying module so
/// basis positions can be decoded.
#[derive(Debug, Clone)]
pub struct GammaLattice {
    pub lattice: BasedLattice,
    base_rank: usize,
}

impl GammaLattice {
    pub fn base_rank(&self) -> usize {
        self.base_rank
    }

    pub fn rank(&self) -> usize {
        self.lattice.rank()
    }

    /// Index of γ_i.
    pub fn gamma_index(&self, i: usize) -> usize {
        i
    }

    /// Index of s_{ij} for i < j.
    pub fn s_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.base_rank);
        let r = self.base_rank;
        r + i * (2 * r - i - 1) / 2 + (j - i - 1)
    }
}

/// Rank of Γ of a rank-r module.
pub fn gamma_rank(r: usize) -> usize {
    r * (r + 1) / 2
}

fn s_index_raw(r: usize, i: usize, j: usize) -> usize {
    r + i * (2 * r - i - 1) / 2 + (j - i - 1)
}

/// The functor Γ on matrices: the image of a linear map `M : A → B` under
/// the quadratic functor, in the γ/s bases.
pub fn gamma_matrix(m: &IntMatrix) -> IntMatrix {
    let rs = m.cols();
    let rt = m.rows();
    let mut out = IntMatrix::zero(gamma_rank(rt), gamma_rank(rs));
    // γ_j ↦ γ(M b_j) = Σ_k M_kj² γ_k + Σ_{k<l} M_kj M_lj s_kl.
    for j in 0..rs {
        for k in 0..rt {
            let c = m.get(k, j);
            if !c.is_zero() {
                out.set(k, j, c * c);
            }
        }
        for k in 0..rt {
            for l in (k + 1)..rt {
                let c = m.get(k, j) * m.get(l, j);
                if !c.is_zero() {
                    out.set(s_index_raw(rt, k, l), j, c);
                }
            }
        }
    }
    // s_ij ↦ s(M b_i, M b_j) = Σ_k 2 M_ki M_kj γ_k
    //        + Σ_{k<l} (M_ki M_lj + M_kj M_li) s_kl.
    for i in 0..rs {
        for j in (i + 1)..rs {
            let col = s_index_raw(rs, i, j);
            for k in 0..rt {
                let c = m.get(k, i) * m.get(k, j) * BigInt::from(2);
                if !c.is_zero() {
                    out.set(k, col, c);
                }
            }
            for k in 0..rt {
                for l in (k + 1)..rt {
                    let c = m.get(k, i) * m.get(l, j) + m.get(k, j) * m.get(l, i);
                    if !c.is_zero() {
                        out.set(s_index_raw(rt, k, l), col, c);
                    }
                }
            }
        }
    }
    out
}

/// Γ of a based lattice, with the group acting through the functor.
pub fn gamma(a: &BasedLattice) -> Result<GammaLattice> {
    let r = a.rank();
    let mut labels = Vec::with_capacity(gamma_rank(r));
    for i in 0..r {
        labels.push(format!("γ({})", a.labels()[i]));
    }
    for i in 0..r {
        for j in (i + 1)..r {
            labels.push(format!("s({},{})", a.labels()[i], a.labels()[j]));
        }
    }
    let actions: Vec<IntMatrix> =
        (0..a.group().gen_count()).map(|g| gamma_matrix(a.action(g))).collect();
    let inv_actions: Vec<IntMatrix> =
        (0..a.group().gen_count()).map(|g| gamma_matrix(a.inv_action(g))).collect();
    let lattice = BasedLattice::from_parts(
        a.group(),
        labels,
        None,
        gamma_radii(a, r),
        actions,
        inv_actions,
        a.truncation(),
    );
    Ok(GammaLattice { lattice, base_rank: r })
}

fn gamma_radii(a: &BasedLattice, r: usize) -> Vec<usize> {
    let base: Vec<usize> = (0..r).map(|i| a.radius_of(i)).collect();
    let mut out = base.clone();
    for i in 0..r {
        for j in (i + 1)..r {
            out.push(base[i].max(base[j]));
        }
    }
    out
}

/// Coinvariants ℤ ⊗_{ℤπ} L of an exact lattice, with the tensor twisted by
/// the character w: the cokernel of the stacked blocks `w(g)·A_g − I` over
/// the group generators.
pub fn coinvariants(a: &BasedLattice, w: &Character) -> Result<AbGroup> {
    if a.is_truncated() {
        return Err(Error::Unsupported("coinvariants of a truncated lattice".into()));
    }
    let r = a.rank();
    if a.group().gen_count() == 0 {
        return Ok(AbGroup::free(r));
    }
    let id = IntMatrix::identity(r);
    let mut blocks = Vec::new();
    for g in 0..a.group().gen_count() {
        let sign = BigInt::from(w.sign_of_gen(g) as i64);
        let scaled = a.action(g).scale(&sign);
        blocks.push(scaled.sub(&id)?);
    }
    let refs: Vec<&IntMatrix> = blocks.iter().collect();
    Ok(cokernel(&IntMatrix::hstack(&refs)?))
}

/// The natural isomorphism Γ(A) ⊕ Γ(B) ⊕ (A ⊗ B) → Γ(A ⊕ B): a basis
/// bijection sending a_i ⊗ b_j to the cross term s_{i, r+j}. Returns the
/// permutation matrix after verifying it intertwines the actions.
pub fn baues_split(a: &BasedLattice, b: &BasedLattice) -> Result<IntMatrix> {
    if a.group() != b.group() {
        return Err(Error::GroupMismatch(a.group().describe(), b.group().describe()));
    }
    let ra = a.rank();
    let rb = b.rank();
    let sum = a.direct_sum(b)?;
    let big = gamma(&sum)?;
    let ga = gamma(a)?;
    let gb = gamma(b)?;
    let rows = gamma_rank(ra + rb);
    let cols = gamma_rank(ra) + gamma_rank(rb) + ra * rb;
    if rows != cols {
        return Err(Error::Internal("splitting rank mismatch".into()));
    }
    let mut p = IntMatrix::zero(rows, cols);
    let mut col = 0;
    // Γ(A): γ_i and s_{ij} land on the first block of indices.
    for i in 0..ra {
        p.set(big.gamma_index(i), col, BigInt::one());
        col += 1;
    }
    for i in 0..ra {
        for j in (i + 1)..ra {
            p.set(big.s_index(i, j), col, BigInt::one());
            col += 1;
        }
    }
    // Γ(B): shifted by ra.
    for i in 0..rb {
        p.set(big.gamma_index(ra + i), col, BigInt::one());
        col += 1;
    }
    for i in 0..rb {
        for j in (i + 1)..rb {
            p.set(big.s_index(ra + i, ra + j), col, BigInt::one());
            col += 1;
        }
    }
    // A ⊗ B: a_i ⊗ b_j ↦ s_{i, ra+j}.
    for i in 0..ra {
        for j in 0..rb {
            p.set(big.s_index(i, ra + j), col, BigInt::one());
            col += 1;
        }
    }
    // Permutation check: one 1 per row and column.
    for j in 0..cols {
        let ones: usize = (0..rows).filter(|&i| !p.get(i, j).is_zero()).count();
        if ones != 1 {
            return Err(Error::Internal("splitting is not a basis bijection".into()));
        }
    }
    // Equivariance against the block action Γ(A) ⊕ Γ(B) ⊕ A⊗B.
    let tensor = a.tensor_z(b)?;
    for g in 0..a.group().gen_count() {
        let block = IntMatrix::block_diag(&[
            ga.lattice.action(g),
            gb.lattice.action(g),
            tensor.action(g),
        ]);
        let lhs = big.lattice.action(g).mul(&p)?;
        let rhs = p.mul(&block)?;
        if lhs != rhs {
            return Err(Error::Internal("splitting is not equivariant".into()));
        }
    }
    Ok(p)
}

/// The comparison maps of the symmetric-square quotient of the group ring
/// with Γ of the augmentation ideal, on a common ball basis.
#[derive(Debug, Clone)]
pub struct ThetaPsi {
    /// Pairs (g, h) with g < h over the ball, indexing the source.
    pub pairs: Vec<(Word, Word)>,
    /// Matrix of θ : source → Γ(Iπ^v).
    pub theta: IntMatrix,
    /// Matrix of ψ : Γ(Iπ^v) → source, with ψ ∘ θ = id.
    pub psi: IntMatrix,
    pub gamma_ideal: GammaLattice,
    ball: Vec<Word>,
}

impl ThetaPsi {
    pub fn ball(&self) -> &[Word] {
        &self.ball
    }
}

/// Builds θ and ψ for the group with character v on the L-ball:
/// θ(s_{g,h}) = −v(gh)(γ_{e_g} + γ_{e_h} − s_{e_g,e_h}) with e_1 terms
/// dropped, and ψ(γ_{e_g}) = −v(g)s_{1,g},
/// ψ(s_{e_g,e_h}) = v(gh)s_{g,h} − v(g)s_{1,g} − v(h)s_{1,h}.
pub fn theta_psi(group: &Arc<GroupSpec>, v: &Character, l: usize) -> Result<ThetaPsi> {
    let ball = if group.is_finite() {
        enumerate_elements(group)?
    } else {
        enumerate_ball(group, l)
    };
    let ideal = aug_ideal(group, v, l);
    let gi = gamma(&ideal)?;
    let basis_words = ideal.basis_words().expect("augmentation ideal is word labeled");
    let word_pos: BTreeMap<&Word, usize> =
        basis_words.iter().enumerate().map(|(i, w)| (w, i)).collect();

    let mut pairs = Vec::new();
    let mut pair_pos: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for i in 0..ball.len() {
        for j in (i + 1)..ball.len() {
            pair_pos.insert((i, j), pairs.len());
            pairs.push((ball[i].clone(), ball[j].clone()));
        }
    }

    let sgn = |w: &Word| BigInt::from(v.eval(w) as i64);
    let mut theta = IntMatrix::zero(gi.rank(), pairs.len());
    for (col, (g, h)) in pairs.iter().enumerate() {
        let s = -(sgn(g) * sgn(h));
        let pg = if g.is_identity() { None } else { Some(word_pos[g]) };
        let ph = if h.is_identity() { None } else { Some(word_pos[h]) };
        if let Some(p) = pg {
            let cur = theta.get(gi.gamma_index(p), col) + &s;
            theta.set(gi.gamma_index(p), col, cur);
        }
        if let Some(p) = ph {
            let cur = theta.get(gi.gamma_index(p), col) + &s;
            theta.set(gi.gamma_index(p), col, cur);
        }
        if let (Some(pg), Some(ph)) = (pg, ph) {
            let (lo, hi) = if pg < ph { (pg, ph) } else { (ph, pg) };
            let cur = theta.get(gi.s_index(lo, hi), col) - &s;
            theta.set(gi.s_index(lo, hi), col, cur);
        }
    }

    let ball_pos: BTreeMap<&Word, usize> = ball.iter().enumerate().map(|(i, w)| (w, i)).collect();
    let pair_of = |g: &Word, h: &Word| -> usize {
        let (a, b) = (ball_pos[g], ball_pos[h]);
        let key = if a < b { (a, b) } else { (b, a) };
        pair_pos[&key]
    };
    let identity = Word::identity();
    let mut psi = IntMatrix::zero(pairs.len(), gi.rank());
    for (p, g) in basis_words.iter().enumerate() {
        let row = pair_of(&identity, g);
        let cur = psi.get(row, gi.gamma_index(p)) - sgn(g);
        psi.set(row, gi.gamma_index(p), cur);
    }
    for (pg, g) in basis_words.iter().enumerate() {
        for (ph, h) in basis_words.iter().enumerate().skip(pg + 1) {
            let col = gi.s_index(pg, ph);
            let add = |m: &mut IntMatrix, row: usize, val: BigInt| {
                let cur = m.get(row, col) + val;
                m.set(row, col, cur);
            };
            add(&mut psi, pair_of(g, h), sgn(g) * sgn(h));
            add(&mut psi, pair_of(&identity, g), -sgn(g));
            add(&mut psi, pair_of(&identity, h), -sgn(h));
        }
    }

    Ok(ThetaPsi { pairs, theta, psi, gamma_ideal: gi, ball })
}

/// Verifies the comparison maps: ψ ∘ θ is the identity; for finite groups
/// θ is square and unimodular and intertwines the left-translation action
/// on pairs with the Γ action; for truncated balls the equivariance is
/// checked on the columns whose pair lies in the safe sub-ball.
pub fn theta_psi_check(group: &Arc<GroupSpec>, v: &Character, l: usize) -> Result<()> {
    let tp = theta_psi(group, v, l)?;
    let n = tp.pairs.len();
    if tp.psi.mul(&tp.theta)? != IntMatrix::identity(n) {
        return Err(Error::Internal("ψ ∘ θ is not the identity".into()));
    }
    let finite = group.is_finite();
    if finite {
        if tp.theta.rows() != tp.theta.cols() {
            return Err(Error::Internal("θ is not square for a finite group".into()));
        }
        if tp.theta.det()?.abs() != BigInt::one() {
            return Err(Error::Internal("θ is not unimodular".into()));
        }
        if tp.theta.mul(&tp.psi)? != IntMatrix::identity(tp.theta.rows()) {
            return Err(Error::Internal("θ ∘ ψ is not the identity".into()));
        }
    }

    // Left-translation action on pairs, chopped at the ball.
    let ball_pos: BTreeMap<&Word, usize> =
        tp.ball.iter().enumerate().map(|(i, w)| (w, i)).collect();
    let mut pair_pos: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (idx, (g, h)) in tp.pairs.iter().enumerate() {
        pair_pos.insert((ball_pos[g], ball_pos[h]), idx);
    }
    let safe = l.saturating_sub(1);
    for gen in 0..group.gen_count() {
        let x = group.gen_word(gen);
        let mut source = IntMatrix::zero(n, n);
        let mut safe_cols = Vec::new();
        for (col, (g, h)) in tp.pairs.iter().enumerate() {
            if !finite && (word_radius(g) > safe || word_radius(h) > safe) {
                continue;
            }
            safe_cols.push(col);
            let (xg, xh) = (group.mul(&x, g), group.mul(&x, h));
            let (a, b) = match (ball_pos.get(&xg), ball_pos.get(&xh)) {
                (Some(&a), Some(&b)) => (a, b),
                _ => continue,
            };
            let key = if a < b { (a, b) } else { (b, a) };
            source.set(pair_pos[&key], col, BigInt::one());
        }
        let lhs = tp.gamma_ideal.lattice.action(gen).mul(&tp.theta)?;
        let rhs = tp.theta.mul(&source)?;
        for &col in &safe_cols {
            for row in 0..tp.theta.rows() {
                if lhs.get(row, col) != rhs.get(row, col) {
                    return Err(Error::Internal(format!(
                        "θ is not equivariant for generator {}",
                        group.gens()[gen].1
                    )));
                }
            }
        }
    }
    Ok(())
}
