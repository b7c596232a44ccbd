//! Free products of elementary factors and exact group-ring arithmetic.
//!
//! A group is a free product of factors drawn from `C(n)` (cyclic of order
//! `n >= 2`), `Z`, and `Z x Z/2`. Elements are stored as reduced alternating
//! syllable sequences, ring elements as finitely supported integer
//! combinations of words in short-lex order, so equality, hashing, and
//! serialization are deterministic.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::{Error, Result};

/// The kind of an elementary free-product factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FactorKind {
    /// Cyclic of order `n >= 2`.
    Cyclic(u32),
    /// Infinite cyclic.
    Infinite,
    /// `Z x Z/2`, generated by an infinite-order `t` and an order-two `T`.
    ZxC2,
}

/// One factor together with its generator names (one name, or two for `ZxC2`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Factor {
    pub kind: FactorKind,
    pub names: Vec<String>,
}

/// The role a generator plays inside its factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GenRole {
    Cyclic,
    Infinite,
    /// The infinite-order generator of a `ZxC2` factor.
    MixedT,
    /// The order-two generator of a `ZxC2` factor.
    MixedC2,
}

/// A free product of elementary factors with named generators.
#[derive(Debug, PartialEq, Eq, Hash)]
pub struct GroupSpec {
    factors: Vec<Factor>,
    /// Flattened generator table: (factor index, name, role).
    gens: Vec<(usize, String, GenRole)>,
}

impl GroupSpec {
    /// Builds a spec, validating generator names and cyclic orders.
    pub fn new(factors: Vec<Factor>) -> Result<Arc<GroupSpec>> {
        let mut gens = Vec::new();
        for (fi, f) in factors.iter().enumerate() {
            let expected = match f.kind {
                FactorKind::ZxC2 => 2,
                _ => 1,
            };
            if f.names.len() != expected {
                return Err(Error::UnsupportedFactor(format!(
                    "factor {} needs {} generator name(s), got {}",
                    fi,
                    expected,
                    f.names.len()
                )));
            }
            if let FactorKind::Cyclic(n) = f.kind {
                if n < 2 {
                    return Err(Error::UnsupportedFactor(format!(
                        "cyclic factor {} has order {} < 2",
                        fi, n
                    )));
                }
            }
            match f.kind {
                FactorKind::Cyclic(_) => gens.push((fi, f.names[0].clone(), GenRole::Cyclic)),
                FactorKind::Infinite => gens.push((fi, f.names[0].clone(), GenRole::Infinite)),
                FactorKind::ZxC2 => {
                    gens.push((fi, f.names[0].clone(), GenRole::MixedT));
                    gens.push((fi, f.names[1].clone(), GenRole::MixedC2));
                }
            }
        }
        for (i, (_, a, _)) in gens.iter().enumerate() {
            if !is_identifier(a) {
                return Err(Error::UnsupportedFactor(format!(
                    "generator name {:?} is not an identifier",
                    a
                )));
            }
            for (_, b, _) in gens.iter().skip(i + 1) {
                if a == b {
                    return Err(Error::UnsupportedFactor(format!(
                        "duplicate generator name {:?}",
                        a
                    )));
                }
            }
        }
        Ok(Arc::new(GroupSpec { factors, gens }))
    }

    /// The trivial group (empty free product).
    pub fn trivial() -> Arc<GroupSpec> {
        GroupSpec::new(Vec::new()).expect("trivial group is valid")
    }

    /// Single cyclic factor of order `n` with a default generator name `a`.
    pub fn cyclic(n: u32) -> Result<Arc<GroupSpec>> {
        GroupSpec::new(vec![Factor { kind: FactorKind::Cyclic(n), names: vec!["a".into()] }])
    }

    /// Parses the factor grammar: `*`-joined atoms `Cn`, `Z`, `ZxC2`, with
    /// `Dinf` as an alias for `C2*C2` and `1` for the trivial group.
    ///
    /// Generator names are drawn from fixed pools: cyclic factors use
    /// `a, b, c, ...`; `Z` and `ZxC2` factors share `t, u, v, ...`, with the
    /// order-two generator of a `ZxC2` factor named by the uppercase letter.
    pub fn parse(text: &str) -> Result<Arc<GroupSpec>> {
        let text = text.trim();
        if text == "1" {
            return Ok(GroupSpec::trivial());
        }
        let cyc_pool = "abcdefgh";
        let inf_pool = "tuvwxyz";
        let mut kinds = Vec::new();
        for atom in text.split('*') {
            let atom = atom.trim();
            if atom == "Dinf" {
                kinds.push(FactorKind::Cyclic(2));
                kinds.push(FactorKind::Cyclic(2));
            } else if atom == "Z" {
                kinds.push(FactorKind::Infinite);
            } else if atom == "ZxC2" {
                kinds.push(FactorKind::ZxC2);
            } else if let Some(num) = atom.strip_prefix('C') {
                let n: u32 = num.parse().map_err(|_| Error::Parse {
                    line: 1,
                    col: 1,
                    msg: format!("bad cyclic order in factor {:?}", atom),
                })?;
                kinds.push(FactorKind::Cyclic(n));
            } else {
                return Err(Error::Parse {
                    line: 1,
                    col: 1,
                    msg: format!("unknown factor {:?} (expected Cn, Z, ZxC2, Dinf, or 1)", atom),
                });
            }
        }
        let mut cyc_next = 0usize;
        let mut inf_next = 0usize;
        let mut factors = Vec::new();
        for kind in kinds {
            let names = match kind {
                FactorKind::Cyclic(_) => {
                    let c = cyc_pool.chars().nth(cyc_next).ok_or_else(|| {
                        Error::UnsupportedFactor("too many cyclic factors for the name pool".into())
                    })?;
                    cyc_next += 1;
                    vec![c.to_string()]
                }
                FactorKind::Infinite => {
                    let c = inf_pool.chars().nth(inf_next).ok_or_else(|| {
                        Error::UnsupportedFactor("too many Z-type factors for the name pool".into())
                    })?;
                    inf_next += 1;
                    vec![c.to_string()]
                }
                FactorKind::ZxC2 => {
                    let c = inf_pool.chars().nth(inf_next).ok_or_else(|| {
                        Error::UnsupportedFactor("too many Z-type factors for the name pool".into())
                    })?;
                    inf_next += 1;
                    vec![c.to_string(), c.to_uppercase().to_string()]
                }
            };
            factors.push(Factor { kind, names });
        }
        GroupSpec::new(factors)
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    /// Flattened generator table in declaration order.
    pub fn gens(&self) -> &[(usize, String, GenRole)] {
        &self.gens
    }

    pub fn gen_count(&self) -> usize {
        self.gens.len()
    }

    pub fn gen_index(&self, name: &str) -> Option<usize> {
        self.gens.iter().position(|(_, n, _)| n == name)
    }

    /// True when the group is finite, i.e. trivial or a single cyclic factor.
    pub fn is_finite(&self) -> bool {
        match self.factors.len() {
            0 => true,
            1 => matches!(self.factors[0].kind, FactorKind::Cyclic(_)),
            _ => false,
        }
    }

    /// Order of the group when finite.
    pub fn order(&self) -> Option<u32> {
        match self.factors.len() {
            0 => Some(1),
            1 => match self.factors[0].kind {
                FactorKind::Cyclic(n) => Some(n),
                _ => None,
            },
            _ => None,
        }
    }

    /// A compact display such as `C2*C2` or `ZxC2`.
    pub fn describe(&self) -> String {
        if self.factors.is_empty() {
            return "1".into();
        }
        self.factors
            .iter()
            .map(|f| match f.kind {
                FactorKind::Cyclic(n) => format!("C{}", n),
                FactorKind::Infinite => "Z".into(),
                FactorKind::ZxC2 => "ZxC2".into(),
            })
            .collect::<Vec<_>>()
            .join("*")
    }

    /// The sub-free-product spanned by the given factor indices, keeping
    /// generator names. Indices must be strictly increasing.
    pub fn sub_product(&self, factor_indices: &[usize]) -> Result<Arc<GroupSpec>> {
        let mut factors = Vec::new();
        let mut prev: Option<usize> = None;
        for &i in factor_indices {
            if i >= self.factors.len() || prev.is_some_and(|p| p >= i) {
                return Err(Error::UnsupportedFactor(format!(
                    "bad factor subset {:?}",
                    factor_indices
                )));
            }
            prev = Some(i);
            factors.push(self.factors[i].clone());
        }
        GroupSpec::new(factors)
    }

    /// The generator as a group word.
    pub fn gen_word(&self, gen: usize) -> Word {
        let (fi, _, role) = &self.gens[gen];
        let letter = match role {
            GenRole::Cyclic => Letter::Cyc(1),
            GenRole::Infinite => Letter::Inf(BigInt::one()),
            GenRole::MixedT => Letter::Mixed { k: BigInt::one(), c2: false },
            GenRole::MixedC2 => Letter::Mixed { k: BigInt::zero(), c2: true },
        };
        Word(vec![Syllable { factor: *fi, letter }])
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A nontrivial element of a single factor.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Letter {
    /// Exponent in `1..n-1` of the cyclic generator.
    Cyc(u32),
    /// Nonzero exponent of the infinite-cyclic generator.
    Inf(BigInt),
    /// `t^k T^c2` with `(k, c2) != (0, 0)`.
    Mixed { k: BigInt, c2: bool },
}

impl Letter {
    fn key_cmp(&self, other: &Letter) -> Ordering {
        match (self, other) {
            (Letter::Cyc(a), Letter::Cyc(b)) => a.cmp(b),
            (Letter::Inf(a), Letter::Inf(b)) => (a.abs(), a).cmp(&(b.abs(), b)),
            (Letter::Mixed { k: a, c2: ca }, Letter::Mixed { k: b, c2: cb }) => {
                ((a.abs(), a), ca).cmp(&((b.abs(), b), cb))
            }
            // Distinct kinds only arise when comparing words of different
            // groups; fall back to a fixed discriminant order.
            (Letter::Cyc(_), _) => Ordering::Less,
            (_, Letter::Cyc(_)) => Ordering::Greater,
            (Letter::Inf(_), _) => Ordering::Less,
            (_, Letter::Inf(_)) => Ordering::Greater,
        }
    }
}

/// One maximal run of a word inside a single factor.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Syllable {
    pub factor: usize,
    pub letter: Letter,
}

/// A reduced word: alternating nontrivial syllables; empty means identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word(Vec<Syllable>);

impl Word {
    pub fn identity() -> Word {
        Word(Vec::new())
    }

    /// The word consisting of one syllable, which must be nontrivial.
    pub fn from_syllable(syl: Syllable) -> Word {
        Word(vec![syl])
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    pub fn syllables(&self) -> &[Syllable] {
        &self.0
    }

    pub fn syllable_len(&self) -> usize {
        self.0.len()
    }

    /// Short-lex comparison: length first, then syllable keys left to right.
    fn shortlex_cmp(&self, other: &Word) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| {
                for (a, b) in self.0.iter().zip(other.0.iter()) {
                    let c = a.factor.cmp(&b.factor).then_with(|| a.letter.key_cmp(&b.letter));
                    if c != Ordering::Equal {
                        return c;
                    }
                }
                Ordering::Equal
            })
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Word) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Word) -> Ordering {
        self.shortlex_cmp(other)
    }
}

fn merge_letters(kind: FactorKind, a: &Letter, b: &Letter) -> Option<Letter> {
    match (kind, a, b) {
        (FactorKind::Cyclic(n), Letter::Cyc(x), Letter::Cyc(y)) => {
            let e = (x + y) % n;
            (e != 0).then_some(Letter::Cyc(e))
        }
        (FactorKind::Infinite, Letter::Inf(x), Letter::Inf(y)) => {
            let k = x + y;
            (!k.is_zero()).then_some(Letter::Inf(k))
        }
        (FactorKind::ZxC2, Letter::Mixed { k: x, c2: cx }, Letter::Mixed { k: y, c2: cy }) => {
            let k = x + y;
            let c2 = cx ^ cy;
            (!k.is_zero() || c2).then_some(Letter::Mixed { k, c2 })
        }
        _ => unreachable!("letter kind mismatch within a factor"),
    }
}

fn invert_letter(kind: FactorKind, l: &Letter) -> Letter {
    match (kind, l) {
        (FactorKind::Cyclic(n), Letter::Cyc(x)) => Letter::Cyc(n - x),
        (FactorKind::Infinite, Letter::Inf(k)) => Letter::Inf(-k),
        (FactorKind::ZxC2, Letter::Mixed { k, c2 }) => Letter::Mixed { k: -k, c2: *c2 },
        _ => unreachable!("letter kind mismatch within a factor"),
    }
}

impl GroupSpec {
    /// Product of two reduced words, reduced.
    pub fn mul(&self, u: &Word, v: &Word) -> Word {
        let mut out: Vec<Syllable> = u.0.clone();
        for syl in &v.0 {
            match out.last() {
                Some(top) if top.factor == syl.factor => {
                    let kind = self.factors[syl.factor].kind;
                    let top = out.pop().expect("nonempty");
                    if let Some(letter) = merge_letters(kind, &top.letter, &syl.letter) {
                        out.push(Syllable { factor: syl.factor, letter });
                    }
                }
                _ => out.push(syl.clone()),
            }
        }
        Word(out)
    }

    /// Inverse of a reduced word.
    pub fn inv(&self, u: &Word) -> Word {
        let mut out = Vec::with_capacity(u.0.len());
        for syl in u.0.iter().rev() {
            let kind = self.factors[syl.factor].kind;
            out.push(Syllable { factor: syl.factor, letter: invert_letter(kind, &syl.letter) });
        }
        Word(out)
    }

    /// Renders a word in the ring grammar (`1` for the identity).
    pub fn word_to_string(&self, w: &Word) -> String {
        if w.is_identity() {
            return "1".into();
        }
        let mut parts = Vec::new();
        for syl in &w.0 {
            let f = &self.factors[syl.factor];
            match (&f.kind, &syl.letter) {
                (FactorKind::Cyclic(_), Letter::Cyc(e)) => {
                    if *e == 1 {
                        parts.push(f.names[0].clone());
                    } else {
                        parts.push(format!("{}^{}", f.names[0], e));
                    }
                }
                (FactorKind::Infinite, Letter::Inf(k)) => {
                    if k.is_one() {
                        parts.push(f.names[0].clone());
                    } else {
                        parts.push(format!("{}^{}", f.names[0], k));
                    }
                }
                (FactorKind::ZxC2, Letter::Mixed { k, c2 }) => {
                    if !k.is_zero() {
                        if k.is_one() {
                            parts.push(f.names[0].clone());
                        } else {
                            parts.push(format!("{}^{}", f.names[0], k));
                        }
                    }
                    if *c2 {
                        parts.push(f.names[1].clone());
                    }
                }
                _ => unreachable!("letter kind mismatch"),
            }
        }
        parts.join("*")
    }
}

/// An orientation character: a sign for each generator, multiplicative on
/// words. On a cyclic factor of odd order the sign is forced to `+1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Character {
    group: Arc<GroupSpec>,
    signs: Vec<i8>,
}

impl Character {
    pub fn new(group: &Arc<GroupSpec>, signs: Vec<i8>) -> Result<Character> {
        if signs.len() != group.gen_count() {
            return Err(Error::Inadmissible(format!(
                "character needs {} signs, got {}",
                group.gen_count(),
                signs.len()
            )));
        }
        for (s, (fi, name, role)) in signs.iter().zip(group.gens()) {
            if *s != 1 && *s != -1 {
                return Err(Error::Inadmissible(format!("sign for {} must be +1 or -1", name)));
            }
            if *s == -1 {
                if let (GenRole::Cyclic, FactorKind::Cyclic(n)) =
                    (role, group.factors()[*fi].kind)
                {
                    if n % 2 == 1 {
                        return Err(Error::Inadmissible(format!(
                            "generator {} has odd order {}; a homomorphism to {{+1,-1}} forces +1",
                            name, n
                        )));
                    }
                }
            }
        }
        Ok(Character { group: Arc::clone(group), signs })
    }

    pub fn trivial(group: &Arc<GroupSpec>) -> Character {
        Character { group: Arc::clone(group), signs: vec![1; group.gen_count()] }
    }

    /// Parses `name=+1,name=-1,...`; omitted generators default to `+1`.
    pub fn parse(group: &Arc<GroupSpec>, text: &str) -> Result<Character> {
        let mut signs = vec![1i8; group.gen_count()];
        let text = text.trim();
        if text.is_empty() {
            return Character::new(group, signs);
        }
        for (i, item) in text.split(',').enumerate() {
            let item = item.trim();
            let (name, val) = item.split_once('=').ok_or(Error::Parse {
                line: 1,
                col: i + 1,
                msg: format!("expected name=sign in {:?}", item),
            })?;
            let gi = group.gen_index(name.trim()).ok_or(Error::Parse {
                line: 1,
                col: i + 1,
                msg: format!("unknown generator {:?}", name.trim()),
            })?;
            signs[gi] = match val.trim() {
                "+1" | "1" | "+" => 1,
                "-1" | "-" => -1,
                other => {
                    return Err(Error::Parse {
                        line: 1,
                        col: i + 1,
                        msg: format!("bad sign {:?} (expected +1 or -1)", other),
                    })
                }
            };
        }
        Character::new(group, signs)
    }

    pub fn group(&self) -> &Arc<GroupSpec> {
        &self.group
    }

    pub fn sign_of_gen(&self, gen: usize) -> i8 {
        self.signs[gen]
    }

    pub fn is_trivial(&self) -> bool {
        self.signs.iter().all(|&s| s == 1)
    }

    /// Value on a word; multiplicative by construction.
    pub fn eval(&self, w: &Word) -> i8 {
        let mut sign = 1i8;
        for syl in w.syllables() {
            let base = self
                .group
                .gens()
                .iter()
                .position(|(fi, _, role)| {
                    *fi == syl.factor
                        && matches!(role, GenRole::Cyclic | GenRole::Infinite | GenRole::MixedT)
                })
                .expect("factor has a primary generator");
            match &syl.letter {
                Letter::Cyc(e) => {
                    if self.signs[base] == -1 && e % 2 == 1 {
                        sign = -sign;
                    }
                }
                Letter::Inf(k) => {
                    if self.signs[base] == -1 && k.abs() % 2u8 == BigInt::one() {
                        sign = -sign;
                    }
                }
                Letter::Mixed { k, c2 } => {
                    if self.signs[base] == -1 && k.abs() % 2u8 == BigInt::one() {
                        sign = -sign;
                    }
                    if *c2 && self.signs[base + 1] == -1 {
                        sign = -sign;
                    }
                }
            }
        }
        sign
    }

    /// Renders as `a=+1,b=-1` over all generators.
    pub fn describe(&self) -> String {
        self.group
            .gens()
            .iter()
            .zip(&self.signs)
            .map(|((_, n, _), s)| format!("{}={}", n, if *s == 1 { "+1" } else { "-1" }))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// An element of the integral group ring: a finite map from words to nonzero
/// arbitrary-precision coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingElt {
    group: Arc<GroupSpec>,
    terms: BTreeMap<Word, BigInt>,
}

impl RingElt {
    pub fn zero(group: &Arc<GroupSpec>) -> RingElt {
        RingElt { group: Arc::clone(group), terms: BTreeMap::new() }
    }

    pub fn one(group: &Arc<GroupSpec>) -> RingElt {
        RingElt::monomial(group, Word::identity(), BigInt::one())
    }

    pub fn int(group: &Arc<GroupSpec>, n: i64) -> RingElt {
        RingElt::monomial(group, Word::identity(), BigInt::from(n))
    }

    pub fn monomial(group: &Arc<GroupSpec>, w: Word, c: BigInt) -> RingElt {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(w, c);
        }
        RingElt { group: Arc::clone(group), terms }
    }

    /// The generator with the given index, as a ring element.
    pub fn generator(group: &Arc<GroupSpec>, gen: usize) -> RingElt {
        RingElt::monomial(group, group.gen_word(gen), BigInt::one())
    }

    pub fn group(&self) -> &Arc<GroupSpec> {
        &self.group
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &BigInt)> {
        self.terms.iter()
    }

    pub fn support_len(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, w: &Word) -> BigInt {
        self.terms.get(w).cloned().unwrap_or_else(BigInt::zero)
    }

    fn add_term(&mut self, w: Word, c: BigInt) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(w);
        match entry {
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get() + c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    fn same_group(&self, other: &RingElt) -> Result<()> {
        if self.group == other.group {
            Ok(())
        } else {
            Err(Error::GroupMismatch(self.group.describe(), other.group.describe()))
        }
    }

    pub fn add(&self, other: &RingElt) -> Result<RingElt> {
        self.same_group(other)?;
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &RingElt) -> Result<RingElt> {
        self.same_group(other)?;
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn neg(&self) -> RingElt {
        let mut out = RingElt::zero(&self.group);
        for (w, c) in &self.terms {
            out.terms.insert(w.clone(), -c.clone());
        }
        out
    }

    pub fn scale(&self, c: &BigInt) -> RingElt {
        let mut out = RingElt::zero(&self.group);
        if c.is_zero() {
            return out;
        }
        for (w, k) in &self.terms {
            out.terms.insert(w.clone(), k * c);
        }
        out
    }

    /// Group-ring product: the bilinear extension of word multiplication.
    pub fn mul(&self, other: &RingElt) -> Result<RingElt> {
        self.same_group(other)?;
        let mut out = RingElt::zero(&self.group);
        for (u, cu) in &self.terms {
            for (v, cv) in &other.terms {
                out.add_term(self.group.mul(u, v), cu * cv);
            }
        }
        Ok(out)
    }

    /// The twisted involution sending each group element `g` to `w(g) g^-1`,
    /// extended additively. An anti-automorphism of order two.
    pub fn involute(&self, w: &Character) -> RingElt {
        let mut out = RingElt::zero(&self.group);
        for (u, c) in &self.terms {
            let sign = w.eval(u);
            let coeff = if sign == 1 { c.clone() } else { -c.clone() };
            out.add_term(self.group.inv(u), coeff);
        }
        out
    }

    /// The twisted augmentation sending each group element `g` to `v(g)`.
    pub fn augment(&self, v: &Character) -> BigInt {
        let mut total = BigInt::zero();
        for (u, c) in &self.terms {
            if v.eval(u) == 1 {
                total += c;
            } else {
                total -= c;
            }
        }
        total
    }

    /// Reweighting by a character: each term `n_g g` becomes `w(g) n_g g`.
    /// An involution of the underlying abelian group with
    /// `augment(omega(x, w), trivial) = augment(x, w)`.
    pub fn omega(&self, w: &Character) -> RingElt {
        let mut out = RingElt::zero(&self.group);
        for (u, c) in &self.terms {
            let coeff = if w.eval(u) == 1 { c.clone() } else { -c.clone() };
            out.terms.insert(u.clone(), coeff);
        }
        out
    }

    /// Left-multiplies by a single group word.
    pub fn word_mul_left(&self, g: &Word) -> RingElt {
        let mut out = RingElt::zero(&self.group);
        for (u, c) in &self.terms {
            out.add_term(self.group.mul(g, u), c.clone());
        }
        out
    }
}

/// Checked group-ring multiplication; errors on mismatched groups.
pub fn ring_mul(x: &RingElt, y: &RingElt) -> Result<RingElt> {
    x.mul(y)
}

impl GroupSpec {
    /// Integer power of a word, with a safety cap on the exponent magnitude.
    pub fn pow(&self, w: &Word, k: &BigInt) -> Result<Word> {
        let cap = BigInt::from(10_000);
        if k.abs() > cap {
            return Err(Error::Unsupported(format!("word power with exponent {}", k)));
        }
        let (base, count) = if k.is_negative() { (self.inv(w), -k) } else { (w.clone(), k.clone()) };
        let mut acc = Word::identity();
        let mut i = BigInt::zero();
        while i < count {
            acc = self.mul(&acc, &base);
            i += 1;
        }
        Ok(acc)
    }
}

impl RingElt {
    /// Pushes the element along the group homomorphism determined by the
    /// given generator images (one target word per source generator),
    /// extending linearly. Used for finite-quotient verification channels
    /// such as specializing a Laurent direction to a cyclic group.
    pub fn substitute(&self, target: &Arc<GroupSpec>, images: &[Word]) -> Result<RingElt> {
        if images.len() != self.group.gen_count() {
            return Err(Error::Internal(format!(
                "substitute needs {} generator images, got {}",
                self.group.gen_count(),
                images.len()
            )));
        }
        let mut out = RingElt::zero(target);
        for (u, c) in &self.terms {
            let mut img = Word::identity();
            for syl in u.syllables() {
                let base = self
                    .group
                    .gens()
                    .iter()
                    .position(|(fi, _, role)| {
                        *fi == syl.factor
                            && matches!(role, GenRole::Cyclic | GenRole::Infinite | GenRole::MixedT)
                    })
                    .expect("factor has a primary generator");
                match &syl.letter {
                    Letter::Cyc(e) => {
                        let p = target.pow(&images[base], &BigInt::from(*e))?;
                        img = target.mul(&img, &p);
                    }
                    Letter::Inf(k) => {
                        let p = target.pow(&images[base], k)?;
                        img = target.mul(&img, &p);
                    }
                    Letter::Mixed { k, c2 } => {
                        let p = target.pow(&images[base], k)?;
                        img = target.mul(&img, &p);
                        if *c2 {
                            img = target.mul(&img, &images[base + 1]);
                        }
                    }
                }
            }
            out.add_term(img, c.clone());
        }
        Ok(out)
    }
}

/// A matrix over the group ring. A `rows x cols` matrix represents a map of
/// free left modules `(ZPi)^cols -> (ZPi)^rows`: column `j` lists the
/// coefficients of the image of the j-th source basis vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingMatrix {
    group: Arc<GroupSpec>,
    rows: usize,
    cols: usize,
    data: Vec<RingElt>,
}

impl RingMatrix {
    pub fn zero(group: &Arc<GroupSpec>, rows: usize, cols: usize) -> RingMatrix {
        RingMatrix {
            group: Arc::clone(group),
            rows,
            cols,
            data: vec![RingElt::zero(group); rows * cols],
        }
    }

    pub fn identity(group: &Arc<GroupSpec>, n: usize) -> RingMatrix {
        let mut m = RingMatrix::zero(group, n, n);
        for i in 0..n {
            m.set(i, i, RingElt::one(group)).expect("same group");
        }
        m
    }

    pub fn from_rows(group: &Arc<GroupSpec>, rows: Vec<Vec<RingElt>>) -> Result<RingMatrix> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if rows.iter().any(|x| x.len() != c) {
            return Err(Error::Internal("ragged ring matrix rows".into()));
        }
        let mut m = RingMatrix::zero(group, r, c);
        for (i, row) in rows.into_iter().enumerate() {
            for (j, e) in row.into_iter().enumerate() {
                m.set(i, j, e)?;
            }
        }
        Ok(m)
    }

    pub fn group(&self) -> &Arc<GroupSpec> {
        &self.group
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &RingElt {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, e: RingElt) -> Result<()> {
        if e.group() != &self.group {
            return Err(Error::GroupMismatch(self.group.describe(), e.group().describe()));
        }
        self.data[i * self.cols + j] = e;
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|e| e.is_zero())
    }

    pub fn add(&self, other: &RingMatrix) -> Result<RingMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Internal("ring matrix add shape mismatch".into()));
        }
        let mut out = RingMatrix::zero(&self.group, self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, self.get(i, j).add(other.get(i, j))?)?;
            }
        }
        Ok(out)
    }

    pub fn neg(&self) -> RingMatrix {
        let mut out = RingMatrix::zero(&self.group, self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, self.get(i, j).neg()).expect("same group");
            }
        }
        out
    }

    pub fn sub(&self, other: &RingMatrix) -> Result<RingMatrix> {
        self.add(&other.neg())
    }

    /// Composition `self ∘ f` of left-module maps. Because scalars act on
    /// the left, the inner products multiply the coefficients of `f` on the
    /// left of those of `self`:
    /// `(self ∘ f)[i][j] = Σ_l f[l][j] * self[i][l]`.
    pub fn compose(&self, f: &RingMatrix) -> Result<RingMatrix> {
        if self.group != f.group {
            return Err(Error::GroupMismatch(self.group.describe(), f.group.describe()));
        }
        if self.cols != f.rows {
            return Err(Error::Internal(format!(
                "ring matrix compose shape mismatch {}x{} ∘ {}x{}",
                self.rows, self.cols, f.rows, f.cols
            )));
        }
        let mut out = RingMatrix::zero(&self.group, self.rows, f.cols);
        for i in 0..self.rows {
            for j in 0..f.cols {
                let mut acc = RingElt::zero(&self.group);
                for l in 0..self.cols {
                    acc = acc.add(&f.get(l, j).mul(self.get(i, l))?)?;
                }
                out.set(i, j, acc)?;
            }
        }
        Ok(out)
    }

    /// Conjugate transpose under the w-twisted involution: the matrix of the
    /// dual map between the dual free modules.
    pub fn dagger(&self, w: &Character) -> RingMatrix {
        let mut out = RingMatrix::zero(&self.group, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).involute(w)).expect("same group");
            }
        }
        out
    }

    pub fn hstack(blocks: &[&RingMatrix]) -> Result<RingMatrix> {
        let Some(first) = blocks.first() else {
            return Err(Error::Internal("hstack of no blocks".into()));
        };
        let group = Arc::clone(&first.group);
        let rows = first.rows;
        if blocks.iter().any(|b| b.rows != rows || b.group != group) {
            return Err(Error::Internal("hstack block mismatch".into()));
        }
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = RingMatrix::zero(&group, rows, cols);
        let mut off = 0;
        for b in blocks {
            for i in 0..rows {
                for j in 0..b.cols {
                    out.set(i, off + j, b.get(i, j).clone())?;
                }
            }
            off += b.cols;
        }
        Ok(out)
    }

    pub fn block_diag(group: &Arc<GroupSpec>, blocks: &[&RingMatrix]) -> Result<RingMatrix> {
        if blocks.iter().any(|b| &b.group != group) {
            return Err(Error::Internal("block_diag group mismatch".into()));
        }
        let rows = blocks.iter().map(|b| b.rows).sum();
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = RingMatrix::zero(group, rows, cols);
        let (mut ro, mut co) = (0, 0);
        for b in blocks {
            for i in 0..b.rows {
                for j in 0..b.cols {
                    out.set(ro + i, co + j, b.get(i, j).clone())?;
                }
            }
            ro += b.rows;
            co += b.cols;
        }
        Ok(out)
    }

    /// Entrywise twisted augmentation, yielding the integer matrix of the
    /// map after tensoring with the twisted integers over the group ring.
    pub fn augment_entrywise(&self, v: &Character) -> crate::zmat::IntMatrix {
        crate::zmat::IntMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).augment(v))
    }

    /// Entrywise homomorphism pushforward; see [`RingElt::substitute`].
    pub fn substitute(&self, target: &Arc<GroupSpec>, images: &[Word]) -> Result<RingMatrix> {
        let mut out = RingMatrix::zero(target, self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, self.get(i, j).substitute(target, images)?)?;
            }
        }
        Ok(out)
    }
}

impl fmt::Display for RingElt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (w, c) in &self.terms {
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
                first = false;
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if w.is_identity() {
                write!(f, "{}", mag)?;
            } else if mag.is_one() {
                write!(f, "{}", self.group.word_to_string(w))?;
            } else {
                write!(f, "{}*{}", mag, self.group.word_to_string(w))?;
            }
        }
        Ok(())
    }
}

/// A word in the free group on the generators, before any relations: a
/// sequence of (generator, exponent) letters. Used by Fox calculus, where
/// derivatives are taken before reducing into the group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreeWord(pub Vec<(usize, BigInt)>);

impl FreeWord {
    /// Evaluates the free word into the group's normal form.
    pub fn eval(&self, group: &Arc<GroupSpec>) -> Word {
        let mut acc = Word::identity();
        for (gen, exp) in &self.0 {
            let g = group.gen_word(*gen);
            let (base, count) = if exp.is_negative() {
                (group.inv(&g), (-exp).clone())
            } else {
                (g, exp.clone())
            };
            let mut k = BigInt::zero();
            while k < count {
                acc = group.mul(&acc, &base);
                k += 1;
            }
        }
        acc
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

struct Lexer<'a> {
    src: &'a str,
    chars: Vec<(usize, char)>,
    pos: usize,
    line: usize,
    line_start_pos: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Star,
    Caret,
    Plus,
    Minus,
    Eof,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Lexer<'a> {
        Lexer { src, chars: src.char_indices().collect(), pos: 0, line: 1, line_start_pos: 0 }
    }

    fn col(&self) -> usize {
        self.pos - self.line_start_pos + 1
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { line: self.line, col: self.col(), msg: msg.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() {
            let (_, c) = self.chars[self.pos];
            if c == '\n' {
                self.line += 1;
                self.pos += 1;
                self.line_start_pos = self.pos;
            } else if c.is_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn next_tok(&mut self) -> Result<(Tok, usize, usize)> {
        self.skip_ws();
        let line = self.line;
        let col = self.col();
        if self.pos >= self.chars.len() {
            return Ok((Tok::Eof, line, col));
        }
        let (byte, c) = self.chars[self.pos];
        let tok = match c {
            '*' => {
                self.pos += 1;
                Tok::Star
            }
            '^' => {
                self.pos += 1;
                Tok::Caret
            }
            '+' => {
                self.pos += 1;
                Tok::Plus
            }
            '-' => {
                self.pos += 1;
                Tok::Minus
            }
            c if c.is_ascii_digit() => {
                let mut end = self.pos;
                while end < self.chars.len() && self.chars[end].1.is_ascii_digit() {
                    end += 1;
                }
                let text = &self.src[byte..self.byte_at(end)];
                self.pos = end;
                Tok::Int(text.parse().expect("digits parse"))
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut end = self.pos;
                while end < self.chars.len()
                    && (self.chars[end].1.is_ascii_alphanumeric() || self.chars[end].1 == '_')
                {
                    end += 1;
                }
                let text = &self.src[byte..self.byte_at(end)];
                self.pos = end;
                Tok::Ident(text.into())
            }
            other => return Err(self.err(format!("unexpected character {:?}", other))),
        };
        Ok((tok, line, col))
    }

    fn byte_at(&self, idx: usize) -> usize {
        if idx < self.chars.len() {
            self.chars[idx].0
        } else {
            self.src.len()
        }
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    tok_line: usize,
    tok_col: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Parser<'a>> {
        let mut lexer = Lexer::new(src);
        let (tok, tok_line, tok_col) = lexer.next_tok()?;
        Ok(Parser { lexer, tok, tok_line, tok_col })
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { line: self.tok_line, col: self.tok_col, msg: msg.into() }
    }

    fn advance(&mut self) -> Result<()> {
        let (tok, line, col) = self.lexer.next_tok()?;
        self.tok = tok;
        self.tok_line = line;
        self.tok_col = col;
        Ok(())
    }

    /// Parses an optionally signed integer after a caret.
    fn exponent(&mut self) -> Result<BigInt> {
        let mut sign = BigInt::one();
        if self.tok == Tok::Minus {
            sign = -sign;
            self.advance()?;
        } else if self.tok == Tok::Plus {
            self.advance()?;
        }
        match &self.tok {
            Tok::Int(n) => {
                let v = sign * n;
                self.advance()?;
                Ok(v)
            }
            _ => Err(self.err("expected integer exponent after '^'")),
        }
    }

    /// atom := integer | generator ['^' exponent]
    /// Returns (coefficient factor, word factor).
    fn atom(&mut self, group: &Arc<GroupSpec>) -> Result<(BigInt, Word)> {
        match self.tok.clone() {
            Tok::Int(n) => {
                self.advance()?;
                Ok((n, Word::identity()))
            }
            Tok::Ident(name) => {
                let gi = self
                    .gen_index(group, &name)
                    .ok_or_else(|| self.err(format!("unknown generator {:?}", name)))?;
                self.advance()?;
                let exp = if self.tok == Tok::Caret {
                    self.advance()?;
                    self.exponent()?
                } else {
                    BigInt::one()
                };
                Ok((BigInt::one(), gen_power(group, gi, &exp)))
            }
            _ => Err(self.err("expected integer or generator")),
        }
    }

    fn gen_index(&self, group: &Arc<GroupSpec>, name: &str) -> Option<usize> {
        group.gen_index(name)
    }

    /// term := atom ('*' atom)*
    fn term(&mut self, group: &Arc<GroupSpec>) -> Result<(BigInt, Word)> {
        let (mut coeff, mut word) = self.atom(group)?;
        while self.tok == Tok::Star {
            self.advance()?;
            let (c, w) = self.atom(group)?;
            coeff *= c;
            word = group.mul(&word, &w);
        }
        Ok((coeff, word))
    }
}

/// Raises a generator to an integer power, in normal form.
fn gen_power(group: &Arc<GroupSpec>, gen: usize, exp: &BigInt) -> Word {
    if exp.is_zero() {
        return Word::identity();
    }
    let (fi, _, role) = &group.gens()[gen];
    let letter = match (role, group.factors()[*fi].kind) {
        (GenRole::Cyclic, FactorKind::Cyclic(n)) => {
            let e = exp.mod_floor_u32(n);
            if e == 0 {
                return Word::identity();
            }
            Letter::Cyc(e)
        }
        (GenRole::Infinite, _) => Letter::Inf(exp.clone()),
        (GenRole::MixedT, _) => Letter::Mixed { k: exp.clone(), c2: false },
        (GenRole::MixedC2, _) => {
            if exp.mod_floor_u32(2) == 0 {
                return Word::identity();
            }
            Letter::Mixed { k: BigInt::zero(), c2: true }
        }
        _ => unreachable!("role/kind mismatch"),
    };
    Word(vec![Syllable { factor: *fi, letter }])
}

trait ModFloorU32 {
    fn mod_floor_u32(&self, n: u32) -> u32;
}

impl ModFloorU32 for BigInt {
    fn mod_floor_u32(&self, n: u32) -> u32 {
        use num_integer::Integer;
        let m = self.mod_floor(&BigInt::from(n));
        let (_, digits) = m.to_u32_digits();
        *digits.first().unwrap_or(&0)
    }
}

/// Parses a ring element: a signed sum of terms, each a `*`-joined product of
/// integers and generator powers. Round-trips with [`RingElt`]'s `Display`.
pub fn parse_ring_elt(text: &str, group: &Arc<GroupSpec>) -> Result<RingElt> {
    let mut p = Parser::new(text)?;
    let mut out = RingElt::zero(group);
    let mut sign = BigInt::one();
    let mut leading = true;
    loop {
        match p.tok {
            Tok::Minus => {
                sign = -sign;
                p.advance()?;
                continue;
            }
            Tok::Plus => {
                if leading {
                    // Tolerate a leading plus.
                } else {
                    // Signs between terms are consumed below; a bare plus here
                    // after another sign is accepted as repetition.
                }
                p.advance()?;
                continue;
            }
            Tok::Eof => {
                if leading {
                    return Err(p.err("empty expression"));
                }
                break;
            }
            _ => {}
        }
        let (coeff, word) = p.term(group)?;
        out.add_term(word, sign * coeff);
        sign = BigInt::one();
        leading = false;
        match p.tok {
            Tok::Plus => {
                p.advance()?;
            }
            Tok::Minus => {
                sign = -BigInt::one();
                p.advance()?;
            }
            Tok::Eof => break,
            _ => return Err(p.err("expected '+', '-', or end of expression")),
        }
    }
    Ok(out)
}

/// Parses a free (unreduced) word over the group's generators, such as a
/// presentation relator: a `*`-joined product of generator powers.
pub fn parse_free_word(text: &str, group: &Arc<GroupSpec>) -> Result<FreeWord> {
    let mut p = Parser::new(text)?;
    let mut letters = Vec::new();
    if p.tok == Tok::Int(BigInt::one()) {
        p.advance()?;
        if p.tok != Tok::Eof {
            return Err(p.err("a free word is '1' or a product of generator powers"));
        }
        return Ok(FreeWord(letters));
    }
    loop {
        match p.tok.clone() {
            Tok::Ident(name) => {
                let gi = group
                    .gen_index(&name)
                    .ok_or_else(|| p.err(format!("unknown generator {:?}", name)))?;
                p.advance()?;
                let exp = if p.tok == Tok::Caret {
                    p.advance()?;
                    p.exponent()?
                } else {
                    BigInt::one()
                };
                if !exp.is_zero() {
                    letters.push((gi, exp));
                }
            }
            _ => return Err(p.err("expected generator")),
        }
        match p.tok {
            Tok::Star => p.advance()?,
            Tok::Eof => break,
            _ => return Err(p.err("expected '*' or end of word")),
        }
    }
    Ok(FreeWord(letters))
}
