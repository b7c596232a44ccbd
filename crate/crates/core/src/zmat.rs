//! Exact integer linear algebra: Smith normal form, kernels, cokernels, and
//! homology of finite complexes of free abelian groups.
//!
//! Everything is over `BigInt`, so no overflow and no floating point. The
//! Smith form drives kernels (always saturated), divisibility-checked solving,
//! and the [`AbGroup`] canonical form for quotients.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::{Error, Result};

/// A dense integer matrix with explicit row and column counts (either may be
/// zero; empty edges show up constantly at the ends of chain complexes).
#[derive(Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zero(rows: usize, cols: usize) -> IntMatrix {
        IntMatrix { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> IntMatrix {
        let mut m = IntMatrix::zero(n, n);
        for i in 0..n {
            m.set(i, i, BigInt::one());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> BigInt) -> IntMatrix {
        let mut m = IntMatrix::zero(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Convenience constructor from machine integers (tests, constants).
    pub fn from_i64(rows: &[&[i64]]) -> IntMatrix {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        IntMatrix::from_fn(r, c, |i, j| BigInt::from(rows[i][j]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.cols + j] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn transpose(&self) -> IntMatrix {
        IntMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn neg(&self) -> IntMatrix {
        IntMatrix::from_fn(self.rows, self.cols, |i, j| -self.get(i, j))
    }

    pub fn add(&self, other: &IntMatrix) -> Result<IntMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Internal(format!(
                "matrix add shape mismatch {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(IntMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j) + other.get(i, j)))
    }

    pub fn sub(&self, other: &IntMatrix) -> Result<IntMatrix> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &IntMatrix) -> Result<IntMatrix> {
        if self.cols != other.rows {
            return Err(Error::Internal(format!(
                "matrix mul shape mismatch {}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = IntMatrix::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let add = a * other.get(k, j);
                    if !add.is_zero() {
                        let cur = out.get(i, j) + add;
                        out.set(i, j, cur);
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &BigInt) -> IntMatrix {
        IntMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j) * c)
    }

    /// Horizontal concatenation; all blocks must share a row count.
    pub fn hstack(blocks: &[&IntMatrix]) -> Result<IntMatrix> {
        let rows = blocks.first().map_or(0, |b| b.rows);
        if blocks.iter().any(|b| b.rows != rows) {
            return Err(Error::Internal("hstack row mismatch".into()));
        }
        let cols: usize = blocks.iter().map(|b| b.cols).sum();
        let mut out = IntMatrix::zero(rows, cols);
        let mut off = 0;
        for b in blocks {
            for i in 0..rows {
                for j in 0..b.cols {
                    out.set(i, off + j, b.get(i, j).clone());
                }
            }
            off += b.cols;
        }
        Ok(out)
    }

    /// Vertical concatenation; all blocks must share a column count.
    pub fn vstack(blocks: &[&IntMatrix]) -> Result<IntMatrix> {
        let cols = blocks.first().map_or(0, |b| b.cols);
        if blocks.iter().any(|b| b.cols != cols) {
            return Err(Error::Internal("vstack column mismatch".into()));
        }
        let rows: usize = blocks.iter().map(|b| b.rows).sum();
        let mut out = IntMatrix::zero(rows, cols);
        let mut off = 0;
        for b in blocks {
            for i in 0..b.rows {
                for j in 0..cols {
                    out.set(off + i, j, b.get(i, j).clone());
                }
            }
            off += b.rows;
        }
        Ok(out)
    }

    pub fn block_diag(blocks: &[&IntMatrix]) -> IntMatrix {
        let rows: usize = blocks.iter().map(|b| b.rows).sum();
        let cols: usize = blocks.iter().map(|b| b.cols).sum();
        let mut out = IntMatrix::zero(rows, cols);
        let (mut ro, mut co) = (0, 0);
        for b in blocks {
            for i in 0..b.rows {
                for j in 0..b.cols {
                    out.set(ro + i, co + j, b.get(i, j).clone());
                }
            }
            ro += b.rows;
            co += b.cols;
        }
        out
    }

    /// The submatrix of the given column range.
    pub fn columns(&self, range: std::ops::Range<usize>) -> IntMatrix {
        IntMatrix::from_fn(self.rows, range.len(), |i, j| self.get(i, range.start + j).clone())
    }

    pub fn column(&self, j: usize) -> IntMatrix {
        self.columns(j..j + 1)
    }

    /// Fraction-free determinant (Bareiss). Errors on non-square input.
    pub fn det(&self) -> Result<BigInt> {
        if self.rows != self.cols {
            return Err(Error::Internal("determinant of non-square matrix".into()));
        }
        let n = self.rows;
        if n == 0 {
            return Ok(BigInt::one());
        }
        let mut m: Vec<Vec<BigInt>> =
            (0..n).map(|i| (0..n).map(|j| self.get(i, j).clone()).collect()).collect();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if m[k][k].is_zero() {
                match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                    Some(i) => {
                        m.swap(k, i);
                        sign = -sign;
                    }
                    None => return Ok(BigInt::zero()),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                    m[i][j] = &num / &prev;
                }
            }
            prev = m[k][k].clone();
        }
        Ok(sign * m[n - 1][n - 1].clone())
    }

    /// Rank over the rationals by fraction-free elimination. Independent of
    /// the Smith form machinery, so the two can cross-check each other.
    pub fn rank_rational(&self) -> usize {
        let mut m: Vec<Vec<BigInt>> = (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j).clone()).collect())
            .collect();
        let mut rank = 0;
        let mut row = 0;
        for col in 0..self.cols {
            let pivot = (row..self.rows).find(|&i| !m[i][col].is_zero());
            let Some(p) = pivot else { continue };
            m.swap(row, p);
            for i in row + 1..self.rows {
                if m[i][col].is_zero() {
                    continue;
                }
                let (a, b) = (m[row][col].clone(), m[i][col].clone());
                for j in col..self.cols {
                    m[i][j] = &m[i][j] * &a - &m[row][j] * &b;
                }
            }
            row += 1;
            rank += 1;
            if row == self.rows {
                break;
            }
        }
        rank
    }

    /// Rank of the mod-2 reduction.
    pub fn rank_f2(&self) -> usize {
        let mut m: Vec<Vec<bool>> = (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j).is_odd()).collect())
            .collect();
        let mut rank = 0;
        let mut row = 0;
        for col in 0..self.cols {
            let Some(p) = (row..self.rows).find(|&i| m[i][col]) else { continue };
            m.swap(row, p);
            for i in 0..self.rows {
                if i != row && m[i][col] {
                    for j in 0..self.cols {
                        m[i][j] ^= m[row][j];
                    }
                }
            }
            row += 1;
            rank += 1;
            if row == self.rows {
                break;
            }
        }
        rank
    }

    /// Entrywise reduction mod 2 to a 0/1 matrix.
    pub fn mod2(&self) -> IntMatrix {
        IntMatrix::from_fn(self.rows, self.cols, |i, j| {
            if self.get(i, j).is_odd() {
                BigInt::one()
            } else {
                BigInt::zero()
            }
        })
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IntMatrix {}x{} {}", self.rows, self.cols, self)
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

/// Smith normal form `U * A * V = D` with `U`, `V` unimodular and the
/// diagonal of `D` a divisibility chain `d_1 | d_2 | ...` of nonnegative
/// entries, zeros last.
pub struct SmithForm {
    pub u: IntMatrix,
    pub d: IntMatrix,
    pub v: IntMatrix,
    pub rank: usize,
}

/// Computes the Smith normal form by elementary row/column operations with
/// a minimal-magnitude pivot strategy.
pub fn smith(a: &IntMatrix) -> SmithForm {
    let (rows, cols) = (a.rows(), a.cols());
    let mut d = a.clone();
    let mut u = IntMatrix::identity(rows);
    let mut v = IntMatrix::identity(cols);

    let row_swap = |m: &mut IntMatrix, a: usize, b: usize| {
        for j in 0..m.cols {
            m.data.swap(a * m.cols + j, b * m.cols + j);
        }
    };
    let col_swap = |m: &mut IntMatrix, a: usize, b: usize| {
        for i in 0..m.rows {
            m.data.swap(i * m.cols + a, i * m.cols + b);
        }
    };
    // row_addmul: row a += q * row b; col_addmul: col a += q * col b.
    let row_addmul = |m: &mut IntMatrix, a: usize, b: usize, q: &BigInt| {
        for j in 0..m.cols {
            let add = q * m.get(b, j);
            let cur = m.get(a, j) + add;
            m.set(a, j, cur);
        }
    };
    let col_addmul = |m: &mut IntMatrix, a: usize, b: usize, q: &BigInt| {
        for i in 0..m.rows {
            let add = q * m.get(i, b);
            let cur = m.get(i, a) + add;
            m.set(i, a, cur);
        }
    };

    let mut t = 0;
    while t < rows && t < cols {
        // Find a minimal-magnitude nonzero pivot in the trailing block.
        let mut pivot: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if !d.get(i, j).is_zero()
                    && pivot.map_or(true, |(pi, pj)| d.get(i, j).abs() < d.get(pi, pj).abs())
                {
                    pivot = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = pivot else { break };
        if pi != t {
            row_swap(&mut d, pi, t);
            row_swap(&mut u, pi, t);
        }
        if pj != t {
            col_swap(&mut d, pj, t);
            col_swap(&mut v, pj, t);
        }

        // Clear column t and row t; restart whenever a remainder survives,
        // which strictly shrinks the pivot magnitude, so this terminates.
        let mut clean = true;
        for i in t + 1..rows {
            if !d.get(i, t).is_zero() {
                let q = -(d.get(i, t) / d.get(t, t));
                row_addmul(&mut d, i, t, &q);
                row_addmul(&mut u, i, t, &q);
                if !d.get(i, t).is_zero() {
                    clean = false;
                }
            }
        }
        for j in t + 1..cols {
            if !d.get(t, j).is_zero() {
                let q = -(d.get(t, j) / d.get(t, t));
                col_addmul(&mut d, j, t, &q);
                col_addmul(&mut v, j, t, &q);
                if !d.get(t, j).is_zero() {
                    clean = false;
                }
            }
        }
        if !clean {
            continue;
        }

        // Enforce the divisibility chain: if some trailing entry is not a
        // multiple of the pivot, fold its row in and redo this pivot.
        let mut divisible = true;
        'scan: for i in t + 1..rows {
            for j in t + 1..cols {
                if !(d.get(i, j) % d.get(t, t)).is_zero() {
                    let one = BigInt::one();
                    row_addmul(&mut d, t, i, &one);
                    row_addmul(&mut u, t, i, &one);
                    divisible = false;
                    break 'scan;
                }
            }
        }
        if !divisible {
            continue;
        }

        if d.get(t, t).is_negative() {
            let m1 = -BigInt::one();
            for j in 0..cols {
                let val = d.get(t, j) * &m1;
                d.set(t, j, val);
            }
            for j in 0..u.cols {
                let val = u.get(t, j) * &m1;
                u.set(t, j, val);
            }
        }
        t += 1;
    }

    SmithForm { u, d, v, rank: t }
}

/// A basis for the integer kernel of `a`, as the columns of the returned
/// matrix. The basis is saturated: the kernel lattice is a direct summand.
pub fn kernel_basis(a: &IntMatrix) -> IntMatrix {
    let s = smith(a);
    s.v.columns(s.rank..a.cols())
}

/// Saturation of the column space: a basis (as columns) of the smallest
/// direct summand of the ambient lattice containing the columns of `a`.
pub fn saturation(a: &IntMatrix) -> IntMatrix {
    kernel_basis(&kernel_basis(&a.transpose()).transpose())
}

/// The order of the torsion subgroup of `cokernel(a)`, computed as the gcd
/// of all rank-sized minors of `a` (the top determinantal divisor, which
/// equals the product of the invariant factors). Shares no code with the
/// elimination-based Smith form, so it serves as an independent cross-check.
pub fn torsion_order_by_minors(a: &IntMatrix) -> BigInt {
    fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
        fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for i in start..n {
                cur.push(i);
                rec(i + 1, n, k, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(0, n, k, &mut Vec::new(), &mut out);
        out
    }
    let r = a.rank_rational();
    if r == 0 {
        return BigInt::one();
    }
    let mut g = BigInt::zero();
    for ri in combinations(a.rows(), r) {
        for ci in combinations(a.cols(), r) {
            let sub = IntMatrix::from_fn(r, r, |i, j| a.get(ri[i], ci[j]).clone());
            g = g.gcd(&sub.det().expect("submatrix is square"));
            if g.is_one() {
                return g;
            }
        }
    }
    g
}

/// Solves `a * x = b` over the integers for each column of `b`; `None` when
/// some column has no integral solution.
pub fn solve(a: &IntMatrix, b: &IntMatrix) -> Option<IntMatrix> {
    assert_eq!(a.rows(), b.rows(), "solve shape mismatch");
    let s = smith(a);
    let ub = s.u.mul(b).expect("shapes agree");
    let mut y = IntMatrix::zero(a.cols(), b.cols());
    for col in 0..b.cols() {
        for i in 0..a.rows() {
            let rhs = ub.get(i, col);
            if i < s.rank {
                let di = s.d.get(i, i);
                let (q, r) = rhs.div_rem(di);
                if !r.is_zero() {
                    return None;
                }
                if i < a.cols() {
                    y.set(i, col, q);
                }
            } else if !rhs.is_zero() {
                return None;
            }
        }
    }
    Some(s.v.mul(&y).expect("shapes agree"))
}

/// A finitely generated abelian group in canonical form: free rank plus a
/// divisibility chain of torsion coefficients, each at least 2.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct AbGroup {
    rank: usize,
    torsion: Vec<BigInt>,
}

impl AbGroup {
    /// Canonicalizes at construction: absolute values, units dropped, and
    /// the multiset reshaped into a divisibility chain by gcd/lcm passes.
    pub fn new(rank: usize, torsion: impl IntoIterator<Item = BigInt>) -> AbGroup {
        let mut tors: Vec<BigInt> = torsion
            .into_iter()
            .map(|d| d.abs())
            .filter(|d| !d.is_zero() && !d.is_one())
            .collect();
        loop {
            let mut changed = false;
            for i in 0..tors.len() {
                for j in i + 1..tors.len() {
                    if (&tors[j] % &tors[i]).is_zero() {
                        continue;
                    }
                    let g = tors[i].gcd(&tors[j]);
                    let l = &tors[i] * &tors[j] / &g;
                    tors[i] = g;
                    tors[j] = l;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        tors.retain(|d| !d.is_one());
        tors.sort();
        AbGroup { rank, torsion: tors }
    }

    pub fn trivial() -> AbGroup {
        AbGroup { rank: 0, torsion: Vec::new() }
    }

    pub fn free(rank: usize) -> AbGroup {
        AbGroup { rank, torsion: Vec::new() }
    }

    pub fn cyclic(n: u64) -> AbGroup {
        AbGroup::new(0, [BigInt::from(n)])
    }

    /// `(Z/2)^k`.
    pub fn elementary_2(k: usize) -> AbGroup {
        AbGroup { rank: 0, torsion: vec![BigInt::from(2); k] }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn torsion(&self) -> &[BigInt] {
        &self.torsion
    }

    pub fn is_trivial(&self) -> bool {
        self.rank == 0 && self.torsion.is_empty()
    }

    pub fn is_torsion_free(&self) -> bool {
        self.torsion.is_empty()
    }

    pub fn torsion_subgroup(&self) -> AbGroup {
        AbGroup { rank: 0, torsion: self.torsion.clone() }
    }

    pub fn direct_sum(&self, other: &AbGroup) -> AbGroup {
        AbGroup::new(
            self.rank + other.rank,
            self.torsion.iter().chain(&other.torsion).cloned().collect::<Vec<_>>(),
        )
    }

    /// Order when finite.
    pub fn order(&self) -> Option<BigInt> {
        if self.rank > 0 {
            return None;
        }
        Some(self.torsion.iter().product())
    }

    /// Parses the `Display` rendering: `0`, `Z`, `Z^3`, `Z/4`, joined by `+`.
    pub fn parse(text: &str) -> Result<AbGroup> {
        let text = text.trim();
        if text == "0" {
            return Ok(AbGroup::trivial());
        }
        let mut rank = 0usize;
        let mut torsion = Vec::new();
        for (i, part) in text.split('+').enumerate() {
            let part = part.trim();
            let bad = || Error::Parse {
                line: 1,
                col: i + 1,
                msg: format!("bad abelian-group component {:?}", part),
            };
            if part == "Z" {
                rank += 1;
            } else if let Some(r) = part.strip_prefix("Z^") {
                rank += r.parse::<usize>().map_err(|_| bad())?;
            } else if let Some(d) = part.strip_prefix("Z/") {
                let n: BigInt = d.parse().map_err(|_| bad())?;
                if n < BigInt::from(2) {
                    return Err(bad());
                }
                torsion.push(n);
            } else {
                return Err(bad());
            }
        }
        Ok(AbGroup::new(rank, torsion))
    }
}

impl fmt::Display for AbGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_trivial() {
            return write!(f, "0");
        }
        let mut parts = Vec::new();
        match self.rank {
            0 => {}
            1 => parts.push("Z".to_string()),
            r => parts.push(format!("Z^{}", r)),
        }
        for d in &self.torsion {
            parts.push(format!("Z/{}", d));
        }
        write!(f, "{}", parts.join(" + "))
    }
}

impl fmt::Debug for AbGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Cokernel of `a` viewed as a map into `Z^rows`.
pub fn cokernel(a: &IntMatrix) -> AbGroup {
    let s = smith(a);
    let torsion: Vec<BigInt> = (0..s.rank).map(|i| s.d.get(i, i).clone()).collect();
    AbGroup::new(a.rows() - s.rank, torsion)
}

/// A bounded chain complex of free abelian groups with the differential
/// `d_k : C_k -> C_{k-1}` stored as a `dims[k-1] x dims[k]` matrix
/// (columns index the source basis).
#[derive(Debug, Clone)]
pub struct IntComplex {
    dims: Vec<usize>,
    diffs: Vec<IntMatrix>,
}

impl IntComplex {
    /// Validates shapes and `d∘d = 0`. `diffs[k]` is `d_{k+1}`.
    pub fn new(dims: Vec<usize>, diffs: Vec<IntMatrix>) -> Result<IntComplex> {
        if dims.is_empty() || diffs.len() + 1 != dims.len() {
            return Err(Error::Internal(format!(
                "complex with {} dims needs {} differentials, got {}",
                dims.len(),
                dims.len().saturating_sub(1),
                diffs.len()
            )));
        }
        for (k, d) in diffs.iter().enumerate() {
            if d.rows() != dims[k] || d.cols() != dims[k + 1] {
                return Err(Error::Internal(format!(
                    "d_{} has shape {}x{}, expected {}x{}",
                    k + 1,
                    d.rows(),
                    d.cols(),
                    dims[k],
                    dims[k + 1]
                )));
            }
        }
        for k in 0..diffs.len().saturating_sub(1) {
            let prod = diffs[k].mul(&diffs[k + 1]).expect("validated shapes");
            if !prod.is_zero() {
                return Err(Error::Internal(format!("d_{} ∘ d_{} != 0", k + 1, k + 2)));
            }
        }
        Ok(IntComplex { dims, diffs })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn top_degree(&self) -> usize {
        self.dims.len() - 1
    }

    /// `d_k` for `1 <= k <= top_degree`.
    pub fn diff(&self, k: usize) -> &IntMatrix {
        &self.diffs[k - 1]
    }

    /// `ker d_k / im d_{k+1}` in canonical form; degrees above the top are
    /// trivial.
    pub fn homology_at(&self, k: usize) -> AbGroup {
        if k >= self.dims.len() {
            return AbGroup::trivial();
        }
        let kernel = if k == 0 {
            IntMatrix::identity(self.dims[0])
        } else {
            kernel_basis(&self.diffs[k - 1])
        };
        let image_in_kernel = if k == self.top_degree() {
            IntMatrix::zero(kernel.cols(), 0)
        } else {
            solve(&kernel, &self.diffs[k])
                .expect("d∘d = 0 and the kernel basis is saturated, so boundaries lift")
        };
        cokernel(&image_in_kernel)
    }

    /// Mod-2 Betti number: `dim_F2 ker(d_k ⊗ F2) − rank_F2(d_{k+1})`.
    pub fn betti_f2(&self, k: usize) -> usize {
        if k >= self.dims.len() {
            return 0;
        }
        let rank_dk = if k == 0 { 0 } else { self.diffs[k - 1].rank_f2() };
        let rank_next = if k == self.top_degree() { 0 } else { self.diffs[k].rank_f2() };
        self.dims[k] - rank_dk - rank_next
    }
}
