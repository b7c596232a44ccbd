//! Chain-complex models of closed 4-manifolds over twisted group rings.
//!
//! The centrepiece is [`ZPiComplex`], a five-term complex of free modules
//! over ℤπ with an optional declared intersection form. Two built-in models
//! over the order-two group, the sphere bundles [`builtin`]`("E")` and
//! `builtin("F")`, drive everything downstream: [`pi2`] extracts the second
//! homology as a ℤ[ℤ/2]-lattice fingerprint, [`k_invariant`] computes the
//! first nontrivial Postnikov invariant by lifting a chain map from the
//! standard resolution, and [`hyperbolic_change`] rewrites it in a
//! hyperbolic basis of the intersection form, where the two models finally
//! part ways.
//!
//! The second half of the module is symbolic: [`stable_pi2`] evaluates the
//! stable isomorphism class of π₂ for an admissible pair (π, w) from the
//! factor decomposition alone, and [`euler_char`] / [`solve_s`] convert
//! between the Euler characteristic and the free rank of that class.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::groupring::{Character, FactorKind, GroupSpec, RingElt, RingMatrix, Word};
use crate::lattices::{
    enumerate_elements, fingerprint2_of_involution, lmul_matrix, rmul_flatten, Fingerprint2,
};
use crate::resolutions::{std_resolution, Resolution};
use crate::zmat::{cokernel, kernel_basis, smith, solve, AbGroup, IntComplex, IntMatrix};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Chain-complex models.
// ---------------------------------------------------------------------------

/// A based free chain complex `C₄ → C₃ → C₂ → C₁ → C₀` over ℤπ modelling a
/// closed 4-manifold, with an optional declared intersection form on a
/// declared basis of second homology.
#[derive(Debug, Clone)]
pub struct ZPiComplex {
    group: Arc<GroupSpec>,
    ranks: [usize; 5],
    diffs: Vec<RingMatrix>,
    form: Option<RingMatrix>,
    h2_basis: Option<Vec<Vec<RingElt>>>,
}

impl ZPiComplex {
    /// Assembles and validates a complex; `diffs` lists `d₁..d₄`.
    pub fn new(
        group: &Arc<GroupSpec>,
        ranks: [usize; 5],
        diffs: Vec<RingMatrix>,
        form: Option<RingMatrix>,
        h2_basis: Option<Vec<Vec<RingElt>>>,
    ) -> Result<ZPiComplex> {
        let c = ZPiComplex { group: Arc::clone(group), ranks, diffs, form, h2_basis };
        c.validate()?;
        Ok(c)
    }

    pub fn group(&self) -> &Arc<GroupSpec> {
        &self.group
    }

    pub fn ranks(&self) -> &[usize; 5] {
        &self.ranks
    }

    /// The differential `d_k : C_k → C_{k-1}` for `1 ≤ k ≤ 4`.
    pub fn diff(&self, k: usize) -> Result<&RingMatrix> {
        if k == 0 || k > self.diffs.len() {
            return Err(Error::DegreeOutOfRange(k));
        }
        Ok(&self.diffs[k - 1])
    }

    pub fn form(&self) -> Option<&RingMatrix> {
        self.form.as_ref()
    }

    pub fn h2_basis(&self) -> Option<&[Vec<RingElt>]> {
        self.h2_basis.as_deref()
    }

    /// Checks shapes, `d ∘ d = 0`, and that the complex reduced along the
    /// trivial character has `H₀ ≅ ℤ`.
    pub fn validate(&self) -> Result<()> {
        if self.diffs.len() != 4 {
            return Err(Error::Internal("a 4-manifold model needs the four differentials".into()));
        }
        for k in 1..=4 {
            let d = &self.diffs[k - 1];
            if d.rows() != self.ranks[k - 1] || d.cols() != self.ranks[k] {
                return Err(Error::Internal(format!(
                    "d_{} is {}x{}, expected {}x{}",
                    k,
                    d.rows(),
                    d.cols(),
                    self.ranks[k - 1],
                    self.ranks[k]
                )));
            }
        }
        for k in 2..=4 {
            if !self.diffs[k - 2].compose(&self.diffs[k - 1])?.is_zero() {
                return Err(Error::Internal(format!("d_{} ∘ d_{} is nonzero", k - 1, k)));
            }
        }
        let triv = Character::trivial(&self.group);
        let reduced: Vec<IntMatrix> =
            self.diffs.iter().map(|d| d.augment_entrywise(&triv)).collect();
        let h0 = IntComplex::new(self.ranks.to_vec(), reduced)?.homology_at(0);
        if h0 != AbGroup::free(1) {
            return Err(Error::Internal(format!("reduced H₀ is {}, not ℤ", h0)));
        }
        if let Some(form) = &self.form {
            if form.rows() != form.cols() {
                return Err(Error::Internal("intersection form matrix is not square".into()));
            }
        }
        if let Some(basis) = &self.h2_basis {
            for col in basis {
                if col.len() != self.ranks[2] {
                    return Err(Error::Internal(
                        "declared basis vectors must live in degree two".into(),
                    ));
                }
            }
            if let Some(form) = &self.form {
                if form.rows() != basis.len() {
                    return Err(Error::Internal(
                        "intersection form does not match the declared basis".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// The Euler characteristic of the underlying cell structure.
    pub fn euler(&self) -> i64 {
        self.ranks
            .iter()
            .enumerate()
            .map(|(k, &r)| if k % 2 == 0 { r as i64 } else { -(r as i64) })
            .sum()
    }

    /// Integral homology of the reduction along the trivial character,
    /// degrees 0 through 4.
    pub fn reduced_homology(&self) -> Result<Vec<AbGroup>> {
        let triv = Character::trivial(&self.group);
        let reduced: Vec<IntMatrix> =
            self.diffs.iter().map(|d| d.augment_entrywise(&triv)).collect();
        let cx = IntComplex::new(self.ranks.to_vec(), reduced)?;
        Ok((0..=4).map(|k| cx.homology_at(k)).collect())
    }
}

/// The two sphere-bundle models over the order-two group. Both share the
/// chain complex
///
/// ```text
/// ℤπ --(T-1)--> ℤπ --(0,T+1)--> ℤπ² --(T+1,0)--> ℤπ --(T-1)--> ℤπ
/// ```
///
/// and carry the intersection form `[[n(1-T), 1-T], [1-T, 0]]` on the cycle
/// basis `{(1-T, 0), (0, 1)}` of second homology, with `n = -2` for `E` and
/// `n = -4` for `F`.
pub fn builtin(name: &str) -> Result<ZPiComplex> {
    let n: i64 = match name {
        "E" => -2,
        "F" => -4,
        other => {
            return Err(Error::Unsupported(format!(
                "unknown built-in model {:?} (expected \"E\" or \"F\")",
                other
            )))
        }
    };
    let group = GroupSpec::cyclic(2)?;
    let t = RingElt::generator(&group, 0);
    let one = RingElt::one(&group);
    let zero = RingElt::zero(&group);
    let tm1 = t.sub(&one)?;
    let tp1 = t.add(&one)?;
    let one_minus_t = one.sub(&t)?;

    let d1 = RingMatrix::from_rows(&group, vec![vec![tm1.clone()]])?;
    let d2 = RingMatrix::from_rows(&group, vec![vec![tp1.clone(), zero.clone()]])?;
    let d3 = RingMatrix::from_rows(&group, vec![vec![zero.clone()], vec![tp1]])?;
    let d4 = RingMatrix::from_rows(&group, vec![vec![tm1]])?;

    let form = RingMatrix::from_rows(
        &group,
        vec![
            vec![one_minus_t.scale(&BigInt::from(n)), one_minus_t.clone()],
            vec![one_minus_t.clone(), zero.clone()],
        ],
    )?;
    let basis = vec![vec![one_minus_t, zero.clone()], vec![zero, one]];
    ZPiComplex::new(&group, [1, 1, 2, 1, 1], vec![d1, d2, d3, d4], Some(form), Some(basis))
}

// ---------------------------------------------------------------------------
// Flattening over the group-element basis.
// ---------------------------------------------------------------------------

/// The complex with every module rewritten over its ℤ-basis of
/// (cell, group element) pairs; only available for finite groups.
pub(crate) struct FlatComplex {
    pub elements: Vec<Word>,
    pub d: Vec<IntMatrix>,
}

pub(crate) fn flatten(c: &ZPiComplex) -> Result<FlatComplex> {
    if !c.group.is_finite() {
        return Err(Error::Unsupported(format!(
            "flattening over the infinite group {}",
            c.group.describe()
        )));
    }
    let elements = enumerate_elements(&c.group)?;
    let d = c
        .diffs
        .iter()
        .map(|m| rmul_flatten(m, &elements))
        .collect::<Result<Vec<_>>>()?;
    Ok(FlatComplex { elements, d })
}

/// Second homology of the flattened complex as a based lattice: a cycle
/// basis, the boundaries in cycle coordinates, and a chosen homology basis
/// (the declared one when present, a Smith-derived one otherwise).
pub(crate) struct H2Lattice {
    pub cycles: IntMatrix,
    pub boundaries: IntMatrix,
    pub basis: IntMatrix,
}

impl H2Lattice {
    pub fn rank(&self) -> usize {
        self.basis.cols()
    }

    /// Coordinates of a homology class in the chosen basis, given a flat
    /// cycle representative.
    pub fn class_of(&self, flat_cycle: &IntMatrix) -> Result<Vec<BigInt>> {
        let in_cycles = solve(&self.cycles, flat_cycle)
            .ok_or_else(|| Error::Internal("vector is not a cycle".into()))?;
        let s = IntMatrix::hstack(&[&self.boundaries, &self.basis])?;
        let sol = solve(&s, &in_cycles)
            .ok_or_else(|| Error::Internal("cycle does not reduce to the homology basis".into()))?;
        Ok((0..self.basis.cols())
            .map(|i| sol.get(self.boundaries.cols() + i, 0).clone())
            .collect())
    }
}

fn flat_basis_column(
    col: &[RingElt],
    elements: &[Word],
) -> IntMatrix {
    let n = elements.len();
    IntMatrix::from_fn(col.len() * n, 1, |i, _| col[i / n].coeff(&elements[i % n]))
}

pub(crate) fn h2_lattice(c: &ZPiComplex, f: &FlatComplex) -> Result<H2Lattice> {
    let cycles = kernel_basis(&f.d[1]);
    let boundaries = solve(&cycles, &f.d[2])
        .ok_or_else(|| Error::Internal("boundaries are not cycles".into()))?;
    let quotient = cokernel(&boundaries);
    if !quotient.torsion().is_empty() {
        return Err(Error::Unsupported(format!(
            "H₂ is {} and has ℤ-torsion, so it is not a lattice",
            quotient
        )));
    }
    let basis = match &c.h2_basis {
        Some(declared) => {
            let flat_cols: Vec<IntMatrix> =
                declared.iter().map(|col| flat_basis_column(col, &f.elements)).collect();
            let refs: Vec<&IntMatrix> = flat_cols.iter().collect();
            let stacked = IntMatrix::hstack(&refs)?;
            let in_cycles = solve(&cycles, &stacked).ok_or_else(|| {
                Error::Unsupported("a declared basis vector is not a cycle".into())
            })?;
            if quotient.rank() != in_cycles.cols()
                || !cokernel(&IntMatrix::hstack(&[&boundaries, &in_cycles])?).is_trivial()
            {
                return Err(Error::Unsupported(
                    "the declared vectors are not a basis of second homology".into(),
                ));
            }
            in_cycles
        }
        None => {
            // Classes of the free coordinates from the Smith form of the
            // boundary inclusion.
            let sf = smith(&boundaries);
            let u_inv = solve(&sf.u, &IntMatrix::identity(sf.u.rows()))
                .ok_or_else(|| Error::Internal("Smith transform failed to invert".into()))?;
            u_inv.columns(sf.rank..u_inv.cols())
        }
    };
    Ok(H2Lattice { cycles, boundaries, basis })
}

/// The action induced on the homology basis by left multiplication by `g`.
fn induced_h2_action(
    c: &ZPiComplex,
    f: &FlatComplex,
    h2: &H2Lattice,
    g: &Word,
) -> Result<IntMatrix> {
    let l = lmul_matrix(&c.group, g, &f.elements)?;
    let blocks: Vec<&IntMatrix> = std::iter::repeat(&l).take(c.ranks[2]).collect();
    let l2 = IntMatrix::block_diag(&blocks);
    let on_cycles = solve(&h2.cycles, &l2.mul(&h2.cycles)?)
        .ok_or_else(|| Error::Internal("the deck action does not preserve cycles".into()))?;
    let images = on_cycles.mul(&h2.basis)?;
    let s = IntMatrix::hstack(&[&h2.boundaries, &h2.basis])?;
    let sol = solve(&s, &images)
        .ok_or_else(|| Error::Internal("the deck action does not descend to homology".into()))?;
    Ok(IntMatrix::from_fn(h2.rank(), h2.rank(), |i, j| {
        sol.get(h2.boundaries.cols() + i, j).clone()
    }))
}

fn order_at_most_two(c: &ZPiComplex) -> Result<u32> {
    match c.group.order() {
        Some(n) if n <= 2 => Ok(n),
        _ => Err(Error::Unsupported(format!(
            "π₂ extraction over {} (need the trivial or order-two group)",
            c.group.describe()
        ))),
    }
}

/// Second homology of the complex over ℤπ as a ℤ[ℤ/2]-lattice fingerprint.
/// Fails if the homology has ℤ-torsion, since it is then not a lattice.
pub fn pi2(c: &ZPiComplex) -> Result<Fingerprint2> {
    let order = order_at_most_two(c)?;
    let f = flatten(c)?;
    let h2 = h2_lattice(c, &f)?;
    let tau = if order == 2 {
        induced_h2_action(c, &f, &h2, &c.group.gen_word(0))?
    } else {
        IntMatrix::identity(h2.rank())
    };
    fingerprint2_of_involution(&tau)
}

// ---------------------------------------------------------------------------
// k-invariants by chain-map lifting.
// ---------------------------------------------------------------------------

/// A k-invariant: one coordinate pair in (ℤ/2)² per order-two free factor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KInvariant {
    pairs: Vec<(u8, u8)>,
}

impl KInvariant {
    pub fn new(pairs: Vec<(u8, u8)>) -> KInvariant {
        KInvariant { pairs: pairs.into_iter().map(|(a, b)| (a % 2, b % 2)).collect() }
    }

    pub fn empty() -> KInvariant {
        KInvariant { pairs: Vec::new() }
    }

    pub fn single(a: u8, b: u8) -> KInvariant {
        KInvariant::new(vec![(a, b)])
    }

    pub fn pairs(&self) -> &[(u8, u8)] {
        &self.pairs
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

impl fmt::Display for KInvariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pairs.is_empty() {
            return write!(f, "()");
        }
        if self.pairs.len() == 1 {
            return write!(f, "({},{})", self.pairs[0].0, self.pairs[0].1);
        }
        write!(f, "(")?;
        for (i, (a, b)) in self.pairs.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "({},{})", a, b)?;
        }
        write!(f, ")")
    }
}

/// Reassembles a ring-matrix column from flat coordinates.
fn ring_column(
    group: &Arc<GroupSpec>,
    elements: &[Word],
    flat: &IntMatrix,
    rows: usize,
) -> Result<RingMatrix> {
    let n = elements.len();
    let mut out = Vec::with_capacity(rows);
    for i in 0..rows {
        let mut e = RingElt::zero(group);
        for (t, w) in elements.iter().enumerate() {
            let coeff = flat.get(i * n + t, 0).clone();
            if !coeff.is_zero() {
                e = e.add(&RingElt::monomial(group, w.clone(), coeff))?;
            }
        }
        out.push(vec![e]);
    }
    RingMatrix::from_rows(group, out)
}

/// Flat coordinates of the single column of a ring matrix.
fn flat_column(m: &RingMatrix, elements: &[Word]) -> IntMatrix {
    let n = elements.len();
    IntMatrix::from_fn(m.rows() * n, 1, |i, _| m.get(i / n, 0).coeff(&elements[i % n]))
}

/// A solution of `a x = b` nudged by the kernel of `a`, giving a second,
/// genuinely different lift whenever the solution is not unique.
fn solve_varied(a: &IntMatrix, b: &IntMatrix) -> Option<IntMatrix> {
    let x = solve(a, b)?;
    let k = kernel_basis(a);
    if k.cols() == 0 {
        return Some(x);
    }
    let ones = IntMatrix::from_fn(k.cols(), b.cols(), |_, _| BigInt::one());
    x.add(&k.mul(&ones).ok()?).ok()
}

/// One chain-map lift of the identity of ℤ through degree two, returning
/// the homology coordinates of the composite with the next resolution
/// differential.
fn kappa_coordinates(
    c: &ZPiComplex,
    f: &FlatComplex,
    h2: &H2Lattice,
    res: &Resolution,
    vary: bool,
) -> Result<Vec<BigInt>> {
    let pick = |a: &IntMatrix, b: &IntMatrix| -> Result<IntMatrix> {
        let sol = if vary { solve_varied(a, b) } else { solve(a, b) };
        sol.ok_or_else(|| Error::Unsupported("no chain-map lift exists".into()))
    };

    // Degree zero: send the resolution generator to a generator of H₀.
    let h0 = cokernel(&f.d[0]);
    if h0 != AbGroup::free(1) {
        return Err(Error::Unsupported(format!("H₀ of the covering complex is {}, not ℤ", h0)));
    }
    let sf = smith(&f.d[0]);
    let u_inv = solve(&sf.u, &IntMatrix::identity(sf.u.rows()))
        .ok_or_else(|| Error::Internal("Smith transform failed to invert".into()))?;
    let f0 = ring_column(&c.group, &f.elements, &u_inv.column(sf.rank), c.ranks[0])?;

    // Degrees one and two: solve d_k ∘ f_k = f_{k-1} ∘ ρ_k.
    let rhs1 = flat_column(&f0.compose(res.diff(1)?)?, &f.elements);
    let f1 = ring_column(&c.group, &f.elements, &pick(&f.d[0], &rhs1)?, c.ranks[1])?;
    let rhs2 = flat_column(&f1.compose(res.diff(2)?)?, &f.elements);
    let f2 = ring_column(&c.group, &f.elements, &pick(&f.d[1], &rhs2)?, c.ranks[2])?;

    // The defect: f₂ composed with the next resolution differential is a
    // cycle valued cochain; read it in the homology basis.
    let kappa = flat_column(&f2.compose(res.diff(3)?)?, &f.elements);
    h2.class_of(&kappa)
}

/// Computes the k-invariant twice, from two independent chain-map lifts.
/// Both classes are reduced modulo coboundaries; callers should insist they
/// agree.
pub fn k_invariant_lifts(c: &ZPiComplex) -> Result<(KInvariant, KInvariant)> {
    let order = order_at_most_two(c)?;
    let f = flatten(c)?;
    let h2 = h2_lattice(c, &f)?;
    if h2.rank() == 0 || order == 1 {
        // Nothing to carry a class: the coefficient module is zero, or the
        // group has no cohomology above degree zero.
        return Ok((KInvariant::empty(), KInvariant::empty()));
    }
    if h2.rank() != 2 {
        return Err(Error::Unsupported(format!(
            "k-invariant coordinates need a rank-two second homotopy lattice, got rank {}",
            h2.rank()
        )));
    }
    let res = std_resolution(&c.group, 3)?;

    // Coboundaries act on degree-three cochains through the resolution
    // differential; its matrix on homology must be twice a unimodular
    // matrix for the mod-2 coordinates to be the full reduction.
    let rho3 = res.diff(3)?.get(0, 0);
    let mut cob = IntMatrix::zero(h2.rank(), h2.rank());
    for (w, coeff) in rho3.terms() {
        let act = induced_h2_action(c, &f, &h2, w)?;
        cob = cob.add(&act.scale(coeff))?;
    }
    if !cob.mod2().is_zero() || cob.det()?.abs() != BigInt::one() << h2.rank() {
        return Err(Error::Unsupported(
            "coboundaries do not fill twice the homology lattice; mod-2 coordinates undefined"
                .into(),
        ));
    }

    let reduce = |z: Vec<BigInt>| -> KInvariant {
        let m = |x: &BigInt| x.mod_floor(&BigInt::from(2)).to_u8().unwrap_or(0);
        KInvariant::single(m(&z[0]), m(&z[1]))
    };
    let first = reduce(kappa_coordinates(c, &f, &h2, &res, false)?);
    let second = reduce(kappa_coordinates(c, &f, &h2, &res, true)?);
    Ok((first, second))
}

/// The k-invariant of the complex in its declared (or Smith-derived)
/// homology basis, self-checked against a second independent lift.
pub fn k_invariant(c: &ZPiComplex) -> Result<KInvariant> {
    let (first, second) = k_invariant_lifts(c)?;
    if first != second {
        return Err(Error::Internal(format!(
            "two chain-map lifts disagree: {} vs {}",
            first, second
        )));
    }
    Ok(first)
}

// ---------------------------------------------------------------------------
// The hyperbolic basis change.
// ---------------------------------------------------------------------------

/// Extracts `n` from an intersection form in the standard shape
/// `[[n(1-T), 1-T], [1-T, 0]]` over the order-two group.
pub fn standard_form_coefficient(form: &RingMatrix) -> Result<i64> {
    let group = form.group();
    if group.order() != Some(2) || form.rows() != 2 || form.cols() != 2 {
        return Err(Error::Unsupported(
            "expected a 2x2 intersection form over the order-two group".into(),
        ));
    }
    let one_minus_t = RingElt::one(group).sub(&RingElt::generator(group, 0))?;
    let n = form
        .get(0, 0)
        .coeff(&Word::identity())
        .to_i64()
        .ok_or_else(|| Error::Unsupported("form coefficient out of range".into()))?;
    let expected = one_minus_t.scale(&BigInt::from(n));
    if form.get(0, 0) != &expected
        || form.get(0, 1) != &one_minus_t
        || form.get(1, 0) != &one_minus_t
        || !form.get(1, 1).is_zero()
    {
        return Err(Error::Unsupported(
            "intersection form is not in the shape [[n(1-T),1-T],[1-T,0]]".into(),
        ));
    }
    Ok(n)
}

/// Rewrites a single-factor k-invariant in a hyperbolic basis of the form
/// `[[n(1-T),1-T],[1-T,0]]` via the substitution `e₁ ↦ e₁ - (n/2) e₂`, and
/// reports the residue of `n` mod 4. The second coordinate picks up the
/// first exactly when the residue is 2.
pub fn hyperbolic_change(form: &RingMatrix, k: &KInvariant) -> Result<(i64, KInvariant)> {
    let n = standard_form_coefficient(form)?;
    if n.is_odd() {
        return Err(Error::Unsupported(
            "universal cover not S²×S²-like: odd self-intersection coefficient".into(),
        ));
    }
    if k.pairs().len() != 1 {
        return Err(Error::Unsupported(
            "the hyperbolic basis change applies to a single-factor k-invariant".into(),
        ));
    }
    let (a, b) = k.pairs()[0];
    let residue = n.rem_euclid(4);
    let b_new = (i64::from(b) + i64::from(a) * (n / 2)).rem_euclid(2) as u8;
    Ok((residue, KInvariant::single(a, b_new)))
}

/// The k-invariant of a model in a hyperbolic basis of its declared
/// intersection form, together with the mod-4 residue that drove the
/// change.
pub fn hyperbolic_k(c: &ZPiComplex) -> Result<(i64, KInvariant)> {
    let raw = k_invariant(c)?;
    let form = c
        .form()
        .ok_or_else(|| Error::Unsupported("the model declares no intersection form".into()))?;
    hyperbolic_change(form, &raw)
}

/// The k-invariant of a connected sum of order-two models: one hyperbolic
/// coordinate pair per summand, concatenated in order.
pub fn connected_sum_k(parts: &[&ZPiComplex]) -> Result<KInvariant> {
    let mut pairs = Vec::with_capacity(parts.len());
    for c in parts {
        let (_, k) = hyperbolic_k(c)?;
        pairs.extend_from_slice(k.pairs());
    }
    Ok(KInvariant::new(pairs))
}

/// Whether two k-invariant tuples agree up to the isometry that swaps the
/// two coordinates within a single factor's pair.
pub fn swap_equivalent(a: &KInvariant, b: &KInvariant) -> bool {
    a.pairs().len() == b.pairs().len()
        && a.pairs()
            .iter()
            .zip(b.pairs())
            .all(|(p, q)| p == q || (p.0, p.1) == (q.1, q.0))
}

// ---------------------------------------------------------------------------
// Symbolic stable π₂ classes.
// ---------------------------------------------------------------------------

/// An opaque aspherical 3-manifold factor. The classifier never looks
/// inside: it needs the orientation character of the aspherical model, the
/// restriction of the ambient character w, and 𝔽₂ Betti numbers.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct PD3Symbol {
    pub name: String,
    /// Whether the orientation character u of the aspherical model is
    /// trivial.
    pub oriented: bool,
    /// Whether the ambient character w restricts trivially to this factor.
    pub w_trivial: bool,
    /// 𝔽₂ Betti numbers b₀..b₃.
    pub betti: [usize; 4],
}

impl PD3Symbol {
    /// An orientable aspherical factor with trivial w-restriction; Poincaré
    /// duality over 𝔽₂ fills in `b₂ = b₁` and `b₀ = b₃ = 1`.
    pub fn aspherical(name: &str, beta1: usize) -> PD3Symbol {
        PD3Symbol { name: name.into(), oriented: true, w_trivial: true, betti: [1, beta1, beta1, 1] }
    }
}

/// A free-product decomposition: the elementary factors live in a
/// [`GroupSpec`] and aspherical factors ride along as opaque symbols.
#[derive(Debug, Clone)]
pub struct Decomposition {
    group: Arc<GroupSpec>,
    pd3: Vec<PD3Symbol>,
}

impl Decomposition {
    pub fn new(group: &Arc<GroupSpec>, pd3: Vec<PD3Symbol>) -> Decomposition {
        Decomposition { group: Arc::clone(group), pd3 }
    }

    pub fn group(&self) -> &Arc<GroupSpec> {
        &self.group
    }

    pub fn pd3(&self) -> &[PD3Symbol] {
        &self.pd3
    }

    fn infinite_factor_count(&self) -> usize {
        self.group.factors().iter().filter(|f| f.kind == FactorKind::Infinite).count()
    }

    fn zxc2_factor_count(&self) -> usize {
        self.group.factors().iter().filter(|f| f.kind == FactorKind::ZxC2).count()
    }
}

/// One augmentation-ideal summand in a stable π₂ class, tagged with the
/// character it is twisted by.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum SummandFactor {
    /// A finite cyclic factor; its ideal summands are always untwisted.
    Cyclic(u32),
    /// A ℤ×ℤ/2 factor with the signs of the twisting character on the
    /// infinite and the order-two generator.
    ZxC2 { v_t: i8, v_c2: i8 },
    /// An aspherical factor, twisted by w times its orientation character,
    /// recorded symbolically.
    PD3 { name: String, oriented: bool, w_trivial: bool },
}

impl fmt::Display for SummandFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = |s: i8| if s >= 0 { '+' } else { '-' };
        match self {
            SummandFactor::Cyclic(n) => write!(f, "C{}", n),
            SummandFactor::ZxC2 { v_t, v_c2 } => {
                write!(f, "ZxC2[{}{}]", sign(*v_t), sign(*v_c2))
            }
            SummandFactor::PD3 { name, oriented, w_trivial } => {
                write!(f, "{}[u{}w{}]", name, sign(if *oriented { 1 } else { -1 }), sign(if *w_trivial { 1 } else { -1 }))
            }
        }
    }
}

/// The stable isomorphism class of π₂ as a symbolic expression: a free rank
/// (negative values meaning the class is only reached after adding that
/// many free summands) plus two induced twisted-ideal terms. Factor lists
/// are kept sorted, so equality is permutation invariance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StablePi2Class {
    pub free_rank: i64,
    pub gamma: Vec<SummandFactor>,
    pub gamma_prime: Vec<SummandFactor>,
}

impl StablePi2Class {
    /// Checks the structural containment: every factor of the second term
    /// also appears (with some twist) in the first, and aspherical factors
    /// appear only in the first.
    pub fn validate(&self) -> Result<()> {
        let base = |s: &SummandFactor| match s {
            SummandFactor::Cyclic(n) => Ok(format!("C{}", n)),
            SummandFactor::ZxC2 { .. } => Ok("ZxC2".to_string()),
            SummandFactor::PD3 { name, .. } => Err(Error::Internal(format!(
                "aspherical factor {} in the untwisted term",
                name
            ))),
        };
        let mut pool: Vec<String> =
            self.gamma.iter().map(|s| base(s).unwrap_or_else(|_| "PD3".into())).collect();
        for s in &self.gamma_prime {
            let key = base(s)?;
            match pool.iter().position(|p| *p == key) {
                Some(i) => {
                    pool.remove(i);
                }
                None => {
                    return Err(Error::Internal(format!(
                        "factor {} of the untwisted term is missing from the twisted term",
                        s
                    )))
                }
            }
        }
        Ok(())
    }

    pub fn is_stably_free(&self) -> bool {
        self.gamma.is_empty() && self.gamma_prime.is_empty()
    }

    pub fn with_free_rank(mut self, s: i64) -> StablePi2Class {
        self.free_rank = s;
        self
    }
}

impl fmt::Display for StablePi2Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_stably_free() {
            if self.free_rank == 0 {
                return write!(f, "stably free");
            }
            return write!(f, "ZPi^{} (stably)", self.free_rank);
        }
        let join = |list: &[SummandFactor]| {
            list.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" * ")
        };
        let mut parts = Vec::new();
        if self.free_rank != 0 {
            parts.push(format!("ZPi^{}", self.free_rank));
        }
        if !self.gamma.is_empty() {
            parts.push(format!("I({})", join(&self.gamma)));
        }
        if !self.gamma_prime.is_empty() {
            parts.push(format!("I({})", join(&self.gamma_prime)));
        }
        write!(f, "{}", parts.join(" ⊕ "))
    }
}

const ADMISSIBILITY_CLAUSE: &str = "w vanishes on every element of π of finite order";

/// Checks the admissibility requirement on (π, w): the character must be
/// trivial on every finite-order generator (cyclic generators and the
/// order-two generators of ℤ×ℤ/2 factors).
pub fn check_admissible(group: &Arc<GroupSpec>, w: &Character) -> Result<()> {
    for (g, (fi, name, _)) in group.gens().iter().enumerate() {
        let finite_order = match group.factors()[*fi].kind {
            FactorKind::Cyclic(_) => true,
            FactorKind::Infinite => false,
            FactorKind::ZxC2 => {
                matches!(group.gens()[g].2, crate::groupring::GenRole::MixedC2)
            }
        };
        if finite_order && w.sign_of_gen(g) < 0 {
            return Err(Error::Inadmissible(format!(
                "the pair (π, w) must satisfy: {}; generator {} has finite order and w = -1",
                ADMISSIBILITY_CLAUSE, name
            )));
        }
    }
    Ok(())
}

/// The stable isomorphism class of π₂ for an admissible pair, from the
/// decomposition alone. `fclass` supplies, per ℤ×ℤ/2 factor, whether the
/// fundamental class maps nontrivially into that factor's summand of
/// `H₄(π; ℤ^w)`; factors with a nontrivial image contribute only stably
/// free summands and drop out.
pub fn stable_pi2(
    decomp: &Decomposition,
    w: &Character,
    fclass: &[bool],
) -> Result<StablePi2Class> {
    let group = &decomp.group;
    if w.group().describe() != group.describe() {
        return Err(Error::GroupMismatch(w.group().describe(), group.describe()));
    }
    if fclass.len() != decomp.zxc2_factor_count() {
        return Err(Error::Unsupported(format!(
            "need one fundamental-class bit per ℤ×ℤ/2 factor: got {}, expected {}",
            fclass.len(),
            decomp.zxc2_factor_count()
        )));
    }
    check_admissible(group, w)?;

    let mut gamma = Vec::new();
    let mut gamma_prime = Vec::new();
    let mut zxc2_seen = 0usize;
    for (fi, factor) in group.factors().iter().enumerate() {
        match factor.kind {
            FactorKind::Cyclic(n) => {
                // Both terms pick up one untwisted ideal summand: w is
                // trivial here by admissibility and the auxiliary twist is
                // trivial on finite cyclic factors.
                gamma.push(SummandFactor::Cyclic(n));
                gamma_prime.push(SummandFactor::Cyclic(n));
            }
            FactorKind::Infinite => {}
            FactorKind::ZxC2 => {
                let nontrivial_image = fclass[zxc2_seen];
                zxc2_seen += 1;
                if nontrivial_image {
                    continue;
                }
                let base = group
                    .gens()
                    .iter()
                    .position(|(i, _, _)| *i == fi)
                    .ok_or_else(|| Error::Internal("factor without generators".into()))?;
                // v = w·v' where v' projects onto the order-two part, so v
                // is -1 on the order-two generator (w is +1 there by
                // admissibility) and agrees with w on the infinite one.
                gamma.push(SummandFactor::ZxC2 { v_t: w.sign_of_gen(base), v_c2: -1 });
                gamma_prime.push(SummandFactor::ZxC2 { v_t: 1, v_c2: 1 });
            }
        }
    }
    for sym in &decomp.pd3 {
        gamma.push(SummandFactor::PD3 {
            name: sym.name.clone(),
            oriented: sym.oriented,
            w_trivial: sym.w_trivial,
        });
    }
    gamma.sort();
    gamma_prime.sort();
    let class = StablePi2Class { free_rank: 0, gamma, gamma_prime };
    class.validate()?;
    Ok(class)
}

// ---------------------------------------------------------------------------
// Euler characteristic bookkeeping.
// ---------------------------------------------------------------------------

fn torsion_free_decomposition(decomp: &Decomposition) -> Result<()> {
    let has_torsion = decomp
        .group
        .factors()
        .iter()
        .any(|f| matches!(f.kind, FactorKind::Cyclic(_) | FactorKind::ZxC2));
    if has_torsion {
        return Err(Error::Unsupported(
            "Euler characteristic bookkeeping needs a torsion-free decomposition".into(),
        ));
    }
    Ok(())
}

fn beta1(decomp: &Decomposition) -> i64 {
    let from_symbols: usize = decomp.pd3.iter().map(|s| s.betti[1]).sum();
    (decomp.infinite_factor_count() + from_symbols) as i64
}

/// The Euler characteristic of a closed 4-manifold whose π₂ is strictly
/// stably `ℤπ^s ⊕ Iπ^v`: the 𝔽₂ dimension of the coinvariants of π₂ is
/// `s + β₁`, and the first Betti number cancels against it.
pub fn euler_char(s: i64, decomp: &Decomposition, w: &Character) -> Result<i64> {
    torsion_free_decomposition(decomp)?;
    if w.group().describe() != decomp.group.describe() {
        return Err(Error::GroupMismatch(w.group().describe(), decomp.group.describe()));
    }
    let m = decomp.pd3.len() as i64;
    let r = decomp.infinite_factor_count() as i64;
    let b1 = beta1(decomp);
    let dim_coinvariants = s + b1;
    Ok(2 + dim_coinvariants - b1 - m - r)
}

/// Inverts [`euler_char`]: the free rank `s = χ + m + r - 2`. Negative
/// values are meaningful; the class is reached after adding `|s|` free
/// summands.
pub fn solve_s(chi: i64, decomp: &Decomposition, w: &Character) -> Result<i64> {
    torsion_free_decomposition(decomp)?;
    if w.group().describe() != decomp.group.describe() {
        return Err(Error::GroupMismatch(w.group().describe(), decomp.group.describe()));
    }
    let m = decomp.pd3.len() as i64;
    let r = decomp.infinite_factor_count() as i64;
    Ok(chi + m + r - 2)
}
