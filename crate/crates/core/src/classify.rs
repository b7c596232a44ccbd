//! The homeomorphism decision procedure for declared manifests over the
//! infinite dihedral group, plus the adjacent bookkeeping: manifest
//! consistency validation, imported L-theory constants, stable-class counts,
//! the structure-set rule, and s-cobordism counting bounds.
//!
//! A [`Manifest`] records the input data of one closed oriented 4-manifold:
//! signature, Kirby-Siebenmann invariant, w₂-type, the (ℤ/2)² invariant `s`,
//! a form descriptor, and optionally a k-invariant tuple. [`decide_dinfty`]
//! runs the three-condition decision tree on a pair of manifests and returns
//! `HOMEOMORPHIC` only when every condition is positively established;
//! comparisons that hinge on opaque user-supplied tags degrade to
//! `UNDETERMINED` rather than guessing.

use std::fmt;

use num_bigint::BigInt;
use num_traits::One;

use crate::groupring::{Character, FactorKind, GroupSpec};
use crate::manifolds::{Decomposition, KInvariant, ZPiComplex};
use crate::resolutions::betti_f2;
use crate::zmat::{AbGroup, IntComplex};
use crate::{Error, Result};
use std::sync::Arc;

// ---------------------------------------------------------------------------
// Manifest data and validation.
// ---------------------------------------------------------------------------

/// The w₂-type of a closed oriented 4-manifold over the infinite dihedral
/// group: `Inf` when the universal cover is not spin, otherwise the class of
/// w₂ pulled back from the group, with `X2` standing for either of the two
/// single-generator classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum W2Type {
    Inf,
    Zero,
    X2,
    X2y2,
}

impl W2Type {
    pub fn from_keyword(s: &str) -> Option<W2Type> {
        match s {
            "inf" => Some(W2Type::Inf),
            "zero" => Some(W2Type::Zero),
            "x2" => Some(W2Type::X2),
            "x2y2" => Some(W2Type::X2y2),
            _ => None,
        }
    }
}

impl fmt::Display for W2Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            W2Type::Inf => "inf",
            W2Type::Zero => "zero",
            W2Type::X2 => "x2",
            W2Type::X2y2 => "x2y2",
        };
        write!(f, "{}", s)
    }
}

/// What is known about the equivariant intersection form.
///
/// `Restricted` asserts the form is the hyperbolic form on the augmentation
/// ideal plus a nonsingular form `λ` on a stably free module of the given
/// rank; the tag labels the isometry class of `λ` and is compared verbatim.
/// `General` carries only an opaque label for the whole quadratic 2-type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FormDescriptor {
    Restricted { tag: String, rank: usize },
    General { tag: String },
}

impl fmt::Display for FormDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormDescriptor::Restricted { tag, rank } => write!(f, "restricted({}, {})", tag, rank),
            FormDescriptor::General { tag } => write!(f, "general({})", tag),
        }
    }
}

/// Declared invariants of one closed oriented 4-manifold with infinite
/// dihedral fundamental group. The fields are input data; only their mutual
/// consistency is checked here.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub name: String,
    pub sigma: i64,
    pub ks: u8,
    pub w2type: W2Type,
    /// `None` encodes "not applicable": a non-spin universal cover forces
    /// the invariant to the base point, stored as (0, 0).
    pub s: Option<(u8, u8)>,
    pub form: FormDescriptor,
    pub kinv: Option<KInvariant>,
}

impl Manifest {
    /// The value of `s`, with the forced base point substituted when the
    /// invariant is not applicable.
    pub fn s_value(&self) -> (u8, u8) {
        self.s.unwrap_or((0, 0))
    }

    pub fn is_valid(&self) -> bool {
        validate(self).is_empty()
    }
}

/// Indices of the k-invariant pairs equal to (1, 1). Within the restricted
/// form family a pair is (1, 1) exactly when w₂ restricts nontrivially to
/// that free factor, so the charged positions read off the w₂-class.
fn charged_factors(k: &KInvariant) -> Vec<usize> {
    k.pairs()
        .iter()
        .enumerate()
        .filter(|(_, p)| **p == (1, 1))
        .map(|(i, _)| i)
        .collect()
}

/// Checks the consistency relations of a manifest and returns every
/// violation as a sentence. An empty list means the data is coherent;
/// violations are data, not errors.
pub fn validate(m: &Manifest) -> Vec<String> {
    let mut out = Vec::new();
    if m.ks > 1 {
        out.push(format!("ks must be 0 or 1 (got {})", m.ks));
    }
    if let Some((s1, s2)) = m.s {
        if s1 > 1 || s2 > 1 {
            out.push(format!("s components must be 0 or 1 (got ({}, {}))", s1, s2));
        }
    }
    match (m.w2type, m.s.is_some()) {
        (W2Type::Inf, true) => out.push(
            "s must be n/a when the w2-type is inf: a non-spin universal cover forces s to the base point".into(),
        ),
        (W2Type::Inf, false) => {}
        (other, false) => out.push(format!(
            "s is required when the w2-type is {}: the universal cover is spin and s carries information",
            other
        )),
        (_, true) => {}
    }
    if m.w2type == W2Type::X2y2 {
        if m.sigma % 8 != 0 {
            out.push(format!(
                "w2-type x2y2 requires a signature divisible by 8 (sigma = {})",
                m.sigma
            ));
        } else {
            let (s1, s2) = m.s_value();
            let expected = (i64::from(s1) + i64::from(s2) + m.sigma / 8).rem_euclid(2);
            if i64::from(m.ks % 2) != expected {
                out.push(format!(
                    "ks relation violated: ks = {} but s1 + s2 + sigma/8 = {} (mod 2)",
                    m.ks, expected
                ));
            }
        }
    }
    if let Some(k) = &m.kinv {
        if k.pairs().len() != 2 {
            out.push(format!(
                "the k-invariant needs one pair per free factor (expected 2 pairs, got {})",
                k.pairs().len()
            ));
        } else if matches!(m.form, FormDescriptor::Restricted { .. }) {
            if k.pairs().iter().any(|p| *p == (0, 0)) {
                out.push(
                    "a k-invariant pair is (0, 0): a form splitting off the full hyperbolic \
                     summand forces a nontrivial restriction to each factor"
                        .into(),
                );
            } else {
                let charged = charged_factors(k).len();
                let required = match m.w2type {
                    W2Type::Inf => None,
                    W2Type::Zero => Some(0),
                    W2Type::X2 => Some(1),
                    W2Type::X2y2 => Some(2),
                };
                if let Some(req) = required {
                    if charged != req {
                        out.push(format!(
                            "the k-invariant has {} pair(s) equal to (1, 1) but w2-type {} requires {}",
                            charged, m.w2type, req
                        ));
                    }
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// The decision tree.
// ---------------------------------------------------------------------------

/// Whether the comparison fixes the identification of the fundamental group
/// or allows composing with its outer automorphism (the factor swap).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareMode {
    Based,
    Unbased,
}

/// Outcome of the decision procedure. The payload strings are stable and
/// human-readable; they name the failed condition or the missing knowledge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decision {
    Homeomorphic,
    NotHomeomorphic(String),
    Undetermined(String),
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decision::Homeomorphic => write!(f, "HOMEOMORPHIC"),
            Decision::NotHomeomorphic(c) => write!(f, "NOT_HOMEOMORPHIC ({})", c),
            Decision::Undetermined(r) => write!(f, "UNDETERMINED ({})", r),
        }
    }
}

enum Status {
    Established,
    Failed(String),
    Unknown(String),
}

/// Decides whether two validated manifests describe orientation-preservingly
/// homeomorphic manifolds over the infinite dihedral group.
///
/// Three conditions are examined: isomorphism of quadratic 2-types, equality
/// of Kirby-Siebenmann invariants, and equality of `s`. The answer is
/// `NOT_HOMEOMORPHIC` as soon as one condition provably fails,
/// `HOMEOMORPHIC` only when all three are positively established, and
/// `UNDETERMINED` otherwise, with the blocking gap named. Invalid manifests
/// are an error, with every violation listed.
pub fn decide_dinfty(a: &Manifest, b: &Manifest, mode: CompareMode) -> Result<Decision> {
    for m in [a, b] {
        let violations = validate(m);
        if !violations.is_empty() {
            return Err(Error::InvalidManifest(format!(
                "{}: {}",
                m.name,
                violations.join("; ")
            )));
        }
    }
    let c1 = quadratic_type_status(a, b, mode);
    let c2 = if a.ks == b.ks {
        Status::Established
    } else {
        Status::Failed("condition 2: ks differs".into())
    };
    let c3 = s_status(a, b, mode);
    for c in [&c1, &c2, &c3] {
        if let Status::Failed(text) = c {
            return Ok(Decision::NotHomeomorphic(text.clone()));
        }
    }
    for c in [c1, c2, c3] {
        if let Status::Unknown(text) = c {
            return Ok(Decision::Undetermined(text));
        }
    }
    Ok(Decision::Homeomorphic)
}

/// Condition 1: isomorphism of quadratic 2-types. Complete invariants
/// (signature, w₂-type, stably free rank) decide negatively; positive
/// answers need either matching opaque tags or membership in the restricted
/// family, where the w₂-class settles everything except the `x2` ambiguity.
fn quadratic_type_status(a: &Manifest, b: &Manifest, mode: CompareMode) -> Status {
    if a.sigma != b.sigma {
        return Status::Failed("condition 1: signature differs".into());
    }
    if a.w2type != b.w2type {
        return Status::Failed("condition 1: w2-type differs".into());
    }
    match (&a.form, &b.form) {
        (FormDescriptor::General { tag: ta }, FormDescriptor::General { tag: tb }) => {
            if ta == tb {
                Status::Established
            } else {
                Status::Unknown("opaque quadratic-type tags differ".into())
            }
        }
        (
            FormDescriptor::Restricted { tag: ta, rank: ra },
            FormDescriptor::Restricted { tag: tb, rank: rb },
        ) => {
            if ra != rb {
                return Status::Failed("condition 1: stably free rank differs".into());
            }
            if ta != tb {
                return Status::Unknown("opaque form tags differ".into());
            }
            match a.w2type {
                // Non-spin covers admit enough isometries to align any two
                // per-factor-nontrivial k-invariants; spin covers with a
                // swap-invariant w2-class pin the 2-type outright.
                W2Type::Inf | W2Type::Zero | W2Type::X2y2 => Status::Established,
                W2Type::X2 => x2_status(a, b, mode),
            }
        }
        _ => Status::Unknown("form descriptors are not comparable".into()),
    }
}

/// The `x2` refinement: the coarse type covers two w₂-classes, one per free
/// factor, and the k-invariant pattern tells them apart. Without k-data the
/// question stays open; in unbased mode the factor swap aligns the classes.
fn x2_status(a: &Manifest, b: &Manifest, mode: CompareMode) -> Status {
    match (&a.kinv, &b.kinv) {
        (Some(ka), Some(kb)) => {
            if charged_factors(ka) == charged_factors(kb) || mode == CompareMode::Unbased {
                Status::Established
            } else {
                Status::Failed("condition 1: w2-class over D-infinity differs".into())
            }
        }
        _ => Status::Unknown(
            "w2-type x2 leaves two possible w2-classes over D-infinity; \
             k-invariants are needed to separate them"
                .into(),
        ),
    }
}

/// Condition 3: the `s` invariant. Outside w₂-type `x2y2` it is determined
/// by the signature and ks, which conditions 1 and 2 already compare, so it
/// holds automatically there. Swapped values in unbased mode are an open
/// question, not a refutation.
fn s_status(a: &Manifest, b: &Manifest, mode: CompareMode) -> Status {
    if a.w2type != W2Type::X2y2 || b.w2type != W2Type::X2y2 {
        return Status::Established;
    }
    let sa = a.s_value();
    let sb = b.s_value();
    if sa == sb {
        Status::Established
    } else if mode == CompareMode::Unbased && sa == (sb.1, sb.0) {
        Status::Unknown(
            "s values differ by the factor swap; unbased identification is an open problem".into(),
        )
    } else {
        Status::Failed("condition 3: s differs".into())
    }
}

// ---------------------------------------------------------------------------
// Constants and counting rules.
// ---------------------------------------------------------------------------

/// The degree-4 L-group of the infinite dihedral group ring, imported as a
/// constant: free abelian of rank three.
pub fn l4_dinfty() -> AbGroup {
    AbGroup::free(3)
}

/// The degree-5 L-group of the infinite dihedral group ring: trivial.
pub fn l5_dinfty() -> AbGroup {
    AbGroup::trivial()
}

/// Number of stable homeomorphism classes over the infinite dihedral group
/// with the given w₂-type and a fixed admissible signature: spin manifolds
/// are stably determined by the signature alone, types `inf` and `x2` split
/// along ks, and `x2y2` splits along the four values of `s`.
pub fn stable_class_count(t: W2Type) -> u32 {
    match t {
        W2Type::X2y2 => 4,
        W2Type::X2 | W2Type::Inf => 2,
        W2Type::Zero => 1,
    }
}

/// The structure-set computation attached to a chain-complex model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureSet {
    /// Second homology of the mod-2 reduction, as an elementary abelian
    /// group.
    pub h2: AbGroup,
    /// Whether the structure-set interpretation is actually asserted: the
    /// identification with H₂ is a theorem only over the infinite dihedral
    /// group. For other groups the homology is still reported, but it is
    /// an undetermined stand-in rather than the structure set.
    pub asserted: bool,
}

fn is_dinfty(group: &Arc<GroupSpec>) -> bool {
    let factors = group.factors();
    factors.len() == 2 && factors.iter().all(|f| f.kind == FactorKind::Cyclic(2))
}

/// Size of the structure set of a model complex: H₂ of the reduction along
/// the trivial character, taken with mod-2 coefficients.
pub fn structure_set_size(c: &ZPiComplex) -> Result<StructureSet> {
    let triv = Character::trivial(c.group());
    let mut reduced = Vec::with_capacity(4);
    for k in 1..=4 {
        reduced.push(c.diff(k)?.augment_entrywise(&triv));
    }
    let cx = IntComplex::new(c.ranks().to_vec(), reduced)?;
    Ok(StructureSet {
        h2: AbGroup::elementary_2(cx.betti_f2(2)),
        asserted: is_dinfty(c.group()),
    })
}

/// Upper bound on the number of s-cobordism classes of 4-manifolds homotopy
/// equivalent to one with the given torsion-free fundamental-group
/// decomposition: `2^{β₃}` topological classes per Kirby-Siebenmann value,
/// `2^{β₃+β₁}` smooth classes in the orientable case, and one factor of two
/// more without orientability. The β's are mod-2 Betti numbers of the group,
/// assembled from the elementary factors and the declared aspherical
/// symbols.
pub fn scob_bounds(decomp: &Decomposition, smooth: bool, orientable: bool) -> Result<BigInt> {
    if decomp.group().factors().iter().any(|f| f.kind != FactorKind::Infinite) {
        return Err(Error::Unsupported(format!(
            "the s-cobordism bounds assume a torsion-free group, but {} has torsion",
            decomp.group().describe()
        )));
    }
    let b1 = betti_f2(decomp.group(), 1)?
        + decomp.pd3().iter().map(|p| p.betti[1]).sum::<usize>();
    let b3 = betti_f2(decomp.group(), 3)?
        + decomp.pd3().iter().map(|p| p.betti[3]).sum::<usize>();
    let exponent = if !smooth {
        b3
    } else if orientable {
        b3 + b1
    } else {
        b3 + b1 + 1
    };
    Ok(BigInt::one() << exponent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::PD3Symbol;
    use proptest::prelude::*;

    fn restricted(tag: &str, rank: usize) -> FormDescriptor {
        FormDescriptor::Restricted { tag: tag.into(), rank }
    }

    fn family_manifest(name: &str, ks: u8, s: (u8, u8), kinv: KInvariant) -> Manifest {
        Manifest {
            name: name.into(),
            sigma: 0,
            ks,
            w2type: W2Type::X2y2,
            s: Some(s),
            form: restricted("hyperbolic", 0),
            kinv: Some(kinv),
        }
    }

    /// The four w2-type x2y2 manifests at signature zero, one per value of s.
    fn four_family() -> Vec<Manifest> {
        let both = KInvariant::new(vec![(1, 1), (1, 1)]);
        vec![
            family_manifest("EE", 0, (0, 0), both.clone()),
            family_manifest("sEsE", 0, (1, 1), both.clone()),
            family_manifest("EsE", 1, (0, 1), both.clone()),
            family_manifest("sEE", 1, (1, 0), both),
        ]
    }

    #[test]
    fn validate_accepts_the_four_family_and_rejects_the_counterfeit() {
        for m in four_family() {
            assert!(validate(&m).is_empty(), "{}: {:?}", m.name, validate(&m));
        }
        let counterfeit = Manifest {
            name: "fake".into(),
            sigma: 8,
            ks: 0,
            w2type: W2Type::X2y2,
            s: Some((0, 0)),
            form: restricted("hyperbolic", 0),
            kinv: None,
        };
        let violations = validate(&counterfeit);
        assert_eq!(violations.len(), 1);
        assert!(violations[0].contains("ks relation violated"));
    }

    #[test]
    fn validate_checks_the_s_presence_rule() {
        let mut m = four_family().remove(0);
        m.w2type = W2Type::Inf;
        m.kinv = None;
        let violations = validate(&m);
        assert!(violations.iter().any(|v| v.contains("s must be n/a")));

        m.s = None;
        assert!(validate(&m).is_empty());

        m.w2type = W2Type::Zero;
        let violations = validate(&m);
        assert!(violations.iter().any(|v| v.contains("s is required")));
    }

    #[test]
    fn validate_checks_kinv_patterns_in_the_restricted_family() {
        let mut m = four_family().remove(0);
        m.kinv = Some(KInvariant::new(vec![(1, 1), (0, 0)]));
        assert!(validate(&m).iter().any(|v| v.contains("(0, 0)")));

        m.kinv = Some(KInvariant::new(vec![(1, 1), (1, 0)]));
        assert!(validate(&m).iter().any(|v| v.contains("requires 2")));

        m.kinv = Some(KInvariant::new(vec![(1, 1)]));
        assert!(validate(&m).iter().any(|v| v.contains("expected 2 pairs")));
    }

    #[test]
    fn the_four_family_has_exactly_four_classes() {
        let family = four_family();
        for (i, a) in family.iter().enumerate() {
            for (j, b) in family.iter().enumerate() {
                let based = decide_dinfty(a, b, CompareMode::Based).unwrap();
                if i == j {
                    assert_eq!(based, Decision::Homeomorphic, "{} vs {}", a.name, b.name);
                } else {
                    assert!(
                        matches!(based, Decision::NotHomeomorphic(_)),
                        "{} vs {} gave {}",
                        a.name,
                        b.name,
                        based
                    );
                }
            }
        }
    }

    #[test]
    fn decision_text_matches_the_frozen_strings() {
        let family = four_family();
        let d = decide_dinfty(&family[0], &family[1], CompareMode::Based).unwrap();
        assert_eq!(d.to_string(), "NOT_HOMEOMORPHIC (condition 3: s differs)");
        let d = decide_dinfty(&family[0], &family[2], CompareMode::Based).unwrap();
        assert_eq!(d.to_string(), "NOT_HOMEOMORPHIC (condition 2: ks differs)");
    }

    #[test]
    fn unbased_mode_surfaces_the_swapped_s_question() {
        let family = four_family();
        let swapped = decide_dinfty(&family[2], &family[3], CompareMode::Unbased).unwrap();
        assert!(
            matches!(&swapped, Decision::Undetermined(r) if r.contains("factor swap")),
            "got {}",
            swapped
        );
        // s = (0,0) vs (1,1) is swap-invariant, so the refutation stands.
        let fixed = decide_dinfty(&family[0], &family[1], CompareMode::Unbased).unwrap();
        assert_eq!(fixed.to_string(), "NOT_HOMEOMORPHIC (condition 3: s differs)");
    }

    /// Appends a one-dimensional positive summand to the form, as taking the
    /// connected sum with the complex projective plane would.
    fn append_cp2(m: &Manifest) -> Manifest {
        let rank = match &m.form {
            FormDescriptor::Restricted { rank, .. } => rank + 1,
            FormDescriptor::General { .. } => panic!("restricted manifests only"),
        };
        Manifest {
            name: format!("{}+cp2", m.name),
            sigma: m.sigma + 1,
            ks: m.ks,
            w2type: W2Type::Inf,
            s: None,
            form: restricted("one", rank),
            kinv: m.kinv.clone(),
        }
    }

    #[test]
    fn projective_plane_sums_collapse_the_restricted_family() {
        let ef = Manifest {
            name: "EF".into(),
            sigma: 0,
            ks: 0,
            w2type: W2Type::X2,
            s: Some((0, 0)),
            form: restricted("hyperbolic", 0),
            kinv: Some(KInvariant::new(vec![(1, 1), (1, 0)])),
        };
        let ff = Manifest {
            name: "FF".into(),
            sigma: 0,
            ks: 0,
            w2type: W2Type::Zero,
            s: Some((0, 0)),
            form: restricted("hyperbolic", 0),
            kinv: Some(KInvariant::new(vec![(1, 0), (1, 0)])),
        };
        let d = decide_dinfty(&append_cp2(&ef), &append_cp2(&ff), CompareMode::Based).unwrap();
        assert_eq!(d, Decision::Homeomorphic);

        for pair in four_family().windows(2) {
            let a = append_cp2(&pair[0]);
            let b = append_cp2(&pair[1]);
            let d = decide_dinfty(&a, &b, CompareMode::Based).unwrap();
            if pair[0].ks == pair[1].ks {
                assert_eq!(d, Decision::Homeomorphic, "{} vs {}", a.name, b.name);
            } else {
                assert_eq!(d.to_string(), "NOT_HOMEOMORPHIC (condition 2: ks differs)");
            }
        }
    }

    #[test]
    fn x2_pairs_need_k_invariants_to_separate_the_two_classes() {
        let mut ef = Manifest {
            name: "EF".into(),
            sigma: 0,
            ks: 0,
            w2type: W2Type::X2,
            s: Some((0, 0)),
            form: restricted("hyperbolic", 0),
            kinv: Some(KInvariant::new(vec![(1, 1), (1, 0)])),
        };
        let mut fe = ef.clone();
        fe.name = "FE".into();
        fe.kinv = Some(KInvariant::new(vec![(1, 0), (1, 1)]));

        let based = decide_dinfty(&ef, &fe, CompareMode::Based).unwrap();
        assert_eq!(
            based.to_string(),
            "NOT_HOMEOMORPHIC (condition 1: w2-class over D-infinity differs)"
        );
        let unbased = decide_dinfty(&ef, &fe, CompareMode::Unbased).unwrap();
        assert_eq!(unbased, Decision::Homeomorphic);

        ef.kinv = None;
        fe.kinv = None;
        let blind = decide_dinfty(&ef, &fe, CompareMode::Based).unwrap();
        assert!(
            matches!(&blind, Decision::Undetermined(r) if r.contains("k-invariants")),
            "got {}",
            blind
        );
    }

    #[test]
    fn opaque_tags_degrade_to_undetermined_but_complete_invariants_refute() {
        let base = four_family().remove(0);
        let mut other_tag = base.clone();
        other_tag.form = restricted("different", 0);
        let d = decide_dinfty(&base, &other_tag, CompareMode::Based).unwrap();
        assert_eq!(d.to_string(), "UNDETERMINED (opaque form tags differ)");

        let mut other_rank = base.clone();
        other_rank.form = restricted("hyperbolic", 2);
        let d = decide_dinfty(&base, &other_rank, CompareMode::Based).unwrap();
        assert_eq!(
            d.to_string(),
            "NOT_HOMEOMORPHIC (condition 1: stably free rank differs)"
        );

        let mut other_sigma = base.clone();
        other_sigma.sigma = 8;
        other_sigma.ks = 1;
        let d = decide_dinfty(&base, &other_sigma, CompareMode::Based).unwrap();
        assert_eq!(d.to_string(), "NOT_HOMEOMORPHIC (condition 1: signature differs)");

        let general_a = Manifest {
            name: "qa".into(),
            sigma: 0,
            ks: 0,
            w2type: W2Type::Zero,
            s: Some((0, 0)),
            form: FormDescriptor::General { tag: "alpha".into() },
            kinv: None,
        };
        let mut general_b = general_a.clone();
        general_b.form = FormDescriptor::General { tag: "beta".into() };
        let d = decide_dinfty(&general_a, &general_b, CompareMode::Based).unwrap();
        assert_eq!(d.to_string(), "UNDETERMINED (opaque quadratic-type tags differ)");

        let mut mixed = general_a.clone();
        mixed.form = restricted("alpha", 0);
        let d = decide_dinfty(&general_a, &mixed, CompareMode::Based).unwrap();
        assert_eq!(d.to_string(), "UNDETERMINED (form descriptors are not comparable)");
    }

    #[test]
    fn invalid_manifests_are_rejected_with_the_violation_text() {
        let counterfeit = Manifest {
            name: "fake".into(),
            sigma: 8,
            ks: 0,
            w2type: W2Type::X2y2,
            s: Some((0, 0)),
            form: restricted("hyperbolic", 0),
            kinv: None,
        };
        let ok = four_family().remove(0);
        let err = decide_dinfty(&ok, &counterfeit, CompareMode::Based).unwrap_err();
        match err {
            Error::InvalidManifest(msg) => {
                assert!(msg.contains("fake"));
                assert!(msg.contains("ks relation violated"));
            }
            other => panic!("unexpected error {:?}", other),
        }
    }

    #[test]
    fn imported_constants() {
        assert_eq!(l4_dinfty(), AbGroup::free(3));
        assert!(l5_dinfty().is_trivial());
        assert_eq!(stable_class_count(W2Type::X2y2), 4);
        assert_eq!(stable_class_count(W2Type::X2), 2);
        assert_eq!(stable_class_count(W2Type::Inf), 2);
        assert_eq!(stable_class_count(W2Type::Zero), 1);
    }

    #[test]
    fn structure_set_of_the_nonspin_bundle_model() {
        let c = crate::manifolds::builtin("E").unwrap();
        let set = structure_set_size(&c).unwrap();
        assert_eq!(set.h2, AbGroup::elementary_2(2));
        assert!(!set.asserted, "the model lives over the order-two group");
    }

    #[test]
    fn structure_set_over_the_dihedral_group_is_asserted() {
        use crate::groupring::{RingElt, RingMatrix};
        let g = GroupSpec::parse("C2*C2").unwrap();
        let a = RingElt::generator(&g, 0);
        let b = RingElt::generator(&g, 1);
        let one = RingElt::one(&g);
        let d1 = RingMatrix::from_rows(
            &g,
            vec![vec![a.sub(&one).unwrap(), b.sub(&one).unwrap()]],
        )
        .unwrap();
        let c = ZPiComplex::new(
            &g,
            [1, 2, 0, 0, 0],
            vec![
                d1,
                RingMatrix::zero(&g, 2, 0),
                RingMatrix::zero(&g, 0, 0),
                RingMatrix::zero(&g, 0, 0),
            ],
            None,
            None,
        )
        .unwrap();
        let set = structure_set_size(&c).unwrap();
        assert!(set.asserted);
        assert!(set.h2.is_trivial());
    }

    #[test]
    fn cobordism_bounds_match_the_three_regimes() {
        let trivial = GroupSpec::trivial();
        let single = Decomposition::new(&trivial, vec![PD3Symbol::aspherical("sol", 1)]);
        assert_eq!(scob_bounds(&single, false, true).unwrap(), BigInt::from(2));

        let z = GroupSpec::parse("Z").unwrap();
        let circle = Decomposition::new(&z, Vec::new());
        assert_eq!(scob_bounds(&circle, false, true).unwrap(), BigInt::from(1));
        assert_eq!(scob_bounds(&circle, true, true).unwrap(), BigInt::from(2));
        assert_eq!(scob_bounds(&circle, true, false).unwrap(), BigInt::from(4));

        let rich = Decomposition::new(&trivial, vec![PD3Symbol::aspherical("m", 3)]);
        assert_eq!(scob_bounds(&rich, true, true).unwrap(), BigInt::from(16));

        let torsion = Decomposition::new(&GroupSpec::cyclic(2).unwrap(), Vec::new());
        assert!(matches!(
            scob_bounds(&torsion, false, true),
            Err(Error::Unsupported(_))
        ));
    }

    fn manifest_strategy() -> impl Strategy<Value = Manifest> {
        let w2 = proptest::sample::select(vec![W2Type::Inf, W2Type::Zero, W2Type::X2, W2Type::X2y2]);
        (
            w2,
            -1i64..=1,
            0u8..=1,
            (0u8..=1, 0u8..=1),
            proptest::sample::select(vec!["h", "g"]),
            0usize..=1,
            proptest::bool::ANY,
            proptest::bool::ANY,
        )
            .prop_map(|(w2type, z, ks_free, s_pair, tag, rank, general, with_kinv)| {
                let sigma = if w2type == W2Type::X2y2 { 8 * z } else { z };
                let s = if w2type == W2Type::Inf { None } else { Some(s_pair) };
                let ks = if w2type == W2Type::X2y2 {
                    ((i64::from(s_pair.0) + i64::from(s_pair.1) + sigma / 8).rem_euclid(2)) as u8
                } else {
                    ks_free
                };
                let form = if general {
                    FormDescriptor::General { tag: tag.into() }
                } else {
                    FormDescriptor::Restricted { tag: tag.into(), rank }
                };
                let kinv = if general || !with_kinv {
                    None
                } else {
                    let pair = |on: bool| if on { (1, 1) } else { (1, 0) };
                    let pattern = match w2type {
                        W2Type::Zero => vec![pair(false), pair(false)],
                        W2Type::X2 => vec![pair(true), pair(false)],
                        W2Type::X2y2 => vec![pair(true), pair(true)],
                        W2Type::Inf => vec![pair(rank == 1), pair(true)],
                    };
                    Some(KInvariant::new(pattern))
                };
                Manifest { name: "m".into(), sigma, ks, w2type, s, form, kinv }
            })
    }

    fn x2y2_strategy() -> impl Strategy<Value = Manifest> {
        (-1i64..=1, (0u8..=1, 0u8..=1), 0usize..=1, proptest::bool::ANY).prop_map(
            |(z, s_pair, rank, with_kinv)| {
                let ks = ((i64::from(s_pair.0) + i64::from(s_pair.1) + z).rem_euclid(2)) as u8;
                Manifest {
                    name: "m".into(),
                    sigma: 8 * z,
                    ks,
                    w2type: W2Type::X2y2,
                    s: Some(s_pair),
                    form: restricted("h", rank),
                    kinv: with_kinv.then(|| KInvariant::new(vec![(1, 1), (1, 1)])),
                }
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn prop_decide_is_symmetric(
            a in manifest_strategy(),
            b in manifest_strategy(),
            unbased in proptest::bool::ANY,
        ) {
            let mode = if unbased { CompareMode::Unbased } else { CompareMode::Based };
            prop_assert!(validate(&a).is_empty());
            prop_assert!(validate(&b).is_empty());
            let ab = decide_dinfty(&a, &b, mode).unwrap();
            let ba = decide_dinfty(&b, &a, mode).unwrap();
            prop_assert_eq!(ab, ba);
        }

        #[test]
        fn prop_decide_is_reflexive_on_pinned_data(a in manifest_strategy()) {
            let d = decide_dinfty(&a, &a, CompareMode::Based).unwrap();
            let pinned = a.w2type != W2Type::X2
                || a.kinv.is_some()
                || matches!(a.form, FormDescriptor::General { .. });
            if pinned {
                prop_assert_eq!(d, Decision::Homeomorphic);
            } else {
                // The data admits two mirror-image manifolds, so a sound
                // answer on data alone cannot be positive.
                prop_assert!(matches!(d, Decision::Undetermined(_)));
            }
        }

        #[test]
        fn prop_never_homeomorphic_when_s_differs(
            a in x2y2_strategy(),
            b in x2y2_strategy(),
        ) {
            prop_assume!(a.s != b.s);
            let d = decide_dinfty(&a, &b, CompareMode::Based).unwrap();
            prop_assert!(!matches!(d, Decision::Homeomorphic));
        }
    }
}
