//! Arbitrary-precision integer and rational matrices.

use std::fmt;
use std::ops::Deref;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::perm::Symbol;

/// Dense row-major matrix of big integers.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = BigInt::one();
        }
        m
    }

    pub fn from_rows<T: Into<BigInt> + Clone>(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let data = rows.iter().flat_map(|row| row.iter().cloned().map(Into::into)).collect();
        Self { rows: r, cols: c, data }
    }

    pub fn from_columns<T: Into<BigInt> + Clone>(cols: &[Vec<T>]) -> Self {
        Self::from_rows(cols).transpose()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> Vec<BigInt> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn column(&self, j: usize) -> Vec<BigInt> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j).clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        out.data[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| (0..self.cols).map(|j| self.get(i, j) * &v[j]).sum()).collect()
    }

    pub fn mul_rat_vec(&self, v: &[BigRational]) -> Vec<BigRational> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let mut acc = BigRational::zero();
                for (j, x) in v.iter().enumerate() {
                    let a = self.get(i, j);
                    if !a.is_zero() {
                        acc += x * BigRational::from_integer(a.clone());
                    }
                }
                acc
            })
            .collect()
    }

    /// Adds column `src` into column `dst`.
    pub fn add_column(&mut self, src: usize, dst: usize) {
        for i in 0..self.rows {
            let v = self.get(i, src).clone();
            self.data[i * self.cols + dst] += v;
        }
    }

    /// Adds `k` times column `src` into column `dst`.
    pub fn add_column_times(&mut self, src: usize, dst: usize, k: &BigInt) {
        for i in 0..self.rows {
            let v = self.get(i, src) * k;
            self.data[i * self.cols + dst] += v;
        }
    }

    /// Sum of the entries of column `j`, written `|C_j|`.
    pub fn column_sum(&self, j: usize) -> BigInt {
        (0..self.rows).map(|i| self.get(i, j)).sum()
    }

    pub fn column_sums(&self) -> Vec<BigInt> {
        (0..self.cols).map(|j| self.column_sum(j)).collect()
    }

    /// Largest column sum.
    pub fn norm(&self) -> BigInt {
        self.column_sums().into_iter().max().unwrap_or_default()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|x| !x.is_negative())
    }

    pub fn is_positive(&self) -> bool {
        self.data.iter().all(|x| x.is_positive())
    }

    pub fn is_skew_symmetric(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..self.cols).all(|j| *self.get(i, j) == -self.get(j, i)))
    }

    pub fn to_rational(&self) -> RatMatrix {
        RatMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| BigRational::from_integer(x.clone())).collect(),
        }
    }

    pub fn det(&self) -> BigInt {
        let d = self.to_rational().det();
        assert!(d.is_integer());
        d.to_integer()
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| big_to_f64(self.get(i, j)))
    }

    /// Columns scaled to unit sum, in floating point.
    pub fn normalized_columns_f64(&self) -> Vec<Vec<f64>> {
        (0..self.cols)
            .map(|j| {
                let s = self.column_sum(j);
                (0..self.rows).map(|i| big_ratio_f64(self.get(i, j), &s)).collect()
            })
            .collect()
    }

    /// Entries as decimal strings, row by row.
    pub fn to_strings(&self) -> Vec<Vec<String>> {
        (0..self.rows).map(|i| self.row(i).iter().map(|x| x.to_string()).collect()).collect()
    }

    pub fn from_strings(rows: &[Vec<String>]) -> Result<Self, String> {
        let parsed: Result<Vec<Vec<BigInt>>, String> = rows
            .iter()
            .map(|r| r.iter().map(|s| s.parse::<BigInt>().map_err(|e| format!("{s:?}: {e}"))).collect())
            .collect();
        let parsed = parsed?;
        let c = parsed.first().map_or(0, |r| r.len());
        if parsed.iter().any(|r| r.len() != c) {
            return Err("ragged matrix rows".into());
        }
        Ok(Self::from_rows(&parsed))
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.to_strings()).finish()
    }
}

impl Serialize for IntMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_strings().serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntMatrix {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<String>>::deserialize(de)?;
        IntMatrix::from_strings(&rows).map_err(serde::de::Error::custom)
    }
}

/// A product of elementary Rauzy matrices: non-negative, determinant one.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VisitationMatrix(IntMatrix);

impl VisitationMatrix {
    pub fn identity(d: usize) -> Self {
        Self(IntMatrix::identity(d))
    }

    /// The matrix `E` with `E e_loser = e_winner + e_loser`, other columns fixed.
    pub fn elementary(d: usize, winner: Symbol, loser: Symbol) -> Self {
        let mut m = Self::identity(d);
        m.push_step(winner, loser);
        m
    }

    /// Right multiplication by the elementary matrix of one step.
    pub fn push_step(&mut self, winner: Symbol, loser: Symbol) {
        assert_ne!(winner, loser);
        self.0.add_column(winner as usize - 1, loser as usize - 1);
    }

    /// `count` repetitions of the same step. Only a self-loop of the Rauzy
    /// diagram repeats a step, and then the winner's column is unchanged.
    pub fn push_repeated(&mut self, winner: Symbol, loser: Symbol, count: &BigInt) {
        assert_ne!(winner, loser);
        self.0.add_column_times(winner as usize - 1, loser as usize - 1, count);
    }

    pub fn then(&self, other: &VisitationMatrix) -> VisitationMatrix {
        VisitationMatrix(self.0.mul(&other.0))
    }

    pub fn d(&self) -> usize {
        self.0.rows
    }

    pub fn as_matrix(&self) -> &IntMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> IntMatrix {
        self.0
    }

    /// The inverse, which has integer entries because the determinant is one.
    pub fn inverse(&self) -> IntMatrix {
        let inv = self.0.to_rational().inverse().expect("unimodular");
        IntMatrix {
            rows: inv.rows,
            cols: inv.cols,
            data: inv.data.into_iter().map(|q| {
                assert!(q.is_integer());
                q.to_integer()
            }).collect(),
        }
    }

    /// Reinterprets a matrix read back from disk, checking non-negativity and
    /// unit determinant.
    pub fn try_from_matrix(m: IntMatrix) -> Result<Self, String> {
        if !m.is_square() || !m.is_nonnegative() || !m.det().is_one() {
            return Err("not a non-negative unimodular square matrix".into());
        }
        Ok(Self(m))
    }
}

impl Deref for VisitationMatrix {
    type Target = IntMatrix;
    fn deref(&self) -> &IntMatrix {
        &self.0
    }
}

impl fmt::Debug for VisitationMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Dense row-major matrix of big rationals.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigRational>,
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![BigRational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = BigRational::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<BigRational>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn from_columns(cols: Vec<Vec<BigRational>>) -> Self {
        Self::from_rows(cols).transpose()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigRational) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> Vec<BigRational> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn column(&self, j: usize) -> Vec<BigRational> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j).clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        out.data[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[BigRational]) -> Vec<BigRational> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let mut acc = BigRational::zero();
                for (j, x) in v.iter().enumerate() {
                    let a = self.get(i, j);
                    if !a.is_zero() && !x.is_zero() {
                        acc += a * x;
                    }
                }
                acc
            })
            .collect()
    }

    /// Reduced row echelon form and pivot columns.
    pub fn rref(&self) -> (RatMatrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m.get(i, c).is_zero()) else {
                continue;
            };
            if p != r {
                for j in 0..m.cols {
                    m.data.swap(p * m.cols + j, r * m.cols + j);
                }
            }
            let inv = m.get(r, c).recip();
            for j in 0..m.cols {
                let v = m.get(r, j) * &inv;
                m.set(r, j, v);
            }
            for i in 0..m.rows {
                if i == r || m.get(i, c).is_zero() {
                    continue;
                }
                let f = m.get(i, c).clone();
                for j in 0..m.cols {
                    let v = m.get(i, j) - &f * m.get(r, j);
                    m.set(i, j, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of `{v : M v = 0}`, one vector per free column.
    pub fn nullspace(&self) -> Vec<Vec<BigRational>> {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![BigRational::zero(); self.cols];
                v[f] = BigRational::one();
                for (row, &p) in pivots.iter().enumerate() {
                    v[p] = -r.get(row, f).clone();
                }
                v
            })
            .collect()
    }

    pub fn det(&self) -> BigRational {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        let mut m = self.clone();
        let mut det = BigRational::one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&i| !m.get(i, c).is_zero()) else {
                return BigRational::zero();
            };
            if p != c {
                for j in 0..n {
                    m.data.swap(p * n + j, c * n + j);
                }
                det = -det;
            }
            let pivot = m.get(c, c).clone();
            det *= &pivot;
            for i in c + 1..n {
                if m.get(i, c).is_zero() {
                    continue;
                }
                let f = m.get(i, c) / &pivot;
                for j in c..n {
                    let v = m.get(i, j) - &f * m.get(c, j);
                    m.set(i, j, v);
                }
            }
        }
        det
    }

    pub fn inverse(&self) -> Option<RatMatrix> {
        assert_eq!(self.rows, self.cols, "inverse of a non-square matrix");
        let n = self.rows;
        let mut aug = Self::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.get(i, j).clone());
            }
            aug.set(i, n + i, BigRational::one());
        }
        let (r, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return None;
        }
        let mut inv = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                inv.set(i, j, r.get(i, n + j).clone());
            }
        }
        Some(inv)
    }

    /// Solves `M x = b` for square non-singular `M`.
    pub fn solve(&self, b: &[BigRational]) -> Option<Vec<BigRational>> {
        assert_eq!(self.rows, self.cols);
        assert_eq!(b.len(), self.rows);
        let n = self.rows;
        let mut aug = Self::zeros(n, n + 1);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.get(i, j).clone());
            }
            aug.set(i, n, b[i].clone());
        }
        let (r, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return None;
        }
        Some((0..n).map(|i| r.get(i, n).clone()).collect())
    }

    /// Moore-Penrose pseudo-inverse through a full-rank factorization.
    pub fn pseudo_inverse(&self) -> RatMatrix {
        let (r, pivots) = self.rref();
        let k = pivots.len();
        if k == 0 {
            return Self::zeros(self.cols, self.rows);
        }
        // self = F G with F the pivot columns and G the non-zero rows of the rref
        let f = Self::from_columns(pivots.iter().map(|&c| self.column(c)).collect());
        let g = Self::from_rows((0..k).map(|i| r.row(i)).collect());
        let gt = g.transpose();
        let ft = f.transpose();
        let ggt_inv = g.mul(&gt).inverse().expect("full row rank");
        let ftf_inv = ft.mul(&f).inverse().expect("full column rank");
        gt.mul(&ggt_inv).mul(&ftf_inv).mul(&ft)
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| rat_to_f64(self.get(i, j)))
    }
}

pub fn dot(a: &[BigRational], b: &[BigRational]) -> BigRational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn big_to_f64(x: &BigInt) -> f64 {
    x.to_f64().unwrap_or(if x.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY })
}

/// `log10 |x|` for integers of any size; `-inf` for zero.
pub fn big_log10(x: &BigInt) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits < 1000 {
        return big_to_f64(&x.abs()).log10();
    }
    let shift = bits - 64;
    let top: BigInt = x.abs() >> shift;
    big_to_f64(&top).log10() + shift as f64 * std::f64::consts::LOG10_2
}

/// `a / b` in floating point without overflowing on huge operands.
pub fn big_ratio_f64(a: &BigInt, b: &BigInt) -> f64 {
    if a.is_zero() {
        return 0.0;
    }
    let sign = if a.is_negative() != b.is_negative() { -1.0 } else { 1.0 };
    sign * 10f64.powf(big_log10(a) - big_log10(b))
}

pub fn rat_to_f64(q: &BigRational) -> f64 {
    if let Some(v) = q.to_f64() {
        if v.is_finite() && (v != 0.0 || q.is_zero()) {
            return v;
        }
    }
    big_ratio_f64(q.numer(), q.denom())
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(n.into())
}

/// Closest rational with denominator `2^bits` (exact dyadic rounding).
pub fn rat_from_f64(x: f64, bits: u32) -> BigRational {
    BigRational::from_float(x).map_or_else(BigRational::zero, |q| {
        let scale = BigInt::one() << bits;
        let scaled = (q * BigRational::from_integer(scale.clone())).round();
        scaled / BigRational::from_integer(scale)
    })
}

/// `"p/q"` or `"p"`.
pub fn format_rational(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn parse_rational(s: &str) -> Result<BigRational, String> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
            let d: BigInt = d.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
            if d.is_zero() {
                return Err(format!("{s:?}: zero denominator"));
            }
            Ok(BigRational::new(n, d))
        }
        None => {
            if let Ok(n) = s.parse::<BigInt>() {
                return Ok(BigRational::from_integer(n));
            }
            // decimal notation such as 0.25
            let (int, frac) = s.split_once('.').ok_or_else(|| format!("{s:?}: not a rational"))?;
            let digits = format!("{int}{frac}");
            let n: BigInt = digits.parse().map_err(|e| format!("{s:?}: {e}"))?;
            let d = num_traits::pow(BigInt::from(10), frac.len());
            Ok(BigRational::new(n, d))
        }
    }
}

/// Serde adapter writing big integers as decimal strings.
pub mod decimal {
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `Option<BigInt>` as an optional decimal string.
pub mod decimal_option {
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Option<BigInt>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => s.serialize_some(&v.to_string()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BigInt>, D::Error> {
        Option::<String>::deserialize(d)?.map(|s| s.parse().map_err(serde::de::Error::custom)).transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        rat(n, d)
    }

    #[test]
    fn elementary_column_rule() {
        let e = VisitationMatrix::elementary(3, 1, 3);
        assert_eq!(*e.as_matrix(), IntMatrix::from_rows(&[vec![1, 0, 1], vec![0, 1, 0], vec![0, 0, 1]]));
        assert_eq!(e.det(), BigInt::one());
    }

    #[test]
    fn push_step_is_right_multiplication() {
        let mut m = VisitationMatrix::elementary(4, 2, 1);
        m.push_step(4, 2);
        m.push_step(1, 3);
        let direct = VisitationMatrix::elementary(4, 2, 1)
            .then(&VisitationMatrix::elementary(4, 4, 2))
            .then(&VisitationMatrix::elementary(4, 1, 3));
        assert_eq!(m, direct);
    }

    #[test]
    fn inverse_is_integral() {
        let m = VisitationMatrix::elementary(3, 1, 2).then(&VisitationMatrix::elementary(3, 3, 1));
        let inv = m.inverse();
        assert_eq!(m.as_matrix().mul(&inv), IntMatrix::identity(3));
    }

    #[test]
    fn determinant_and_rank() {
        let m = RatMatrix::from_rows(vec![
            vec![q(2, 1), q(1, 1), q(0, 1)],
            vec![q(1, 1), q(3, 1), q(1, 1)],
            vec![q(0, 1), q(1, 1), q(4, 1)],
        ]);
        assert_eq!(m.det(), q(18, 1));
        assert_eq!(m.rank(), 3);
        let s = RatMatrix::from_rows(vec![vec![q(1, 1), q(2, 1)], vec![q(2, 1), q(4, 1)]]);
        assert_eq!(s.det(), q(0, 1));
        assert_eq!(s.rank(), 1);
        assert!(s.inverse().is_none());
    }

    #[test]
    fn nullspace_vectors_are_annihilated() {
        let m = RatMatrix::from_rows(vec![
            vec![q(1, 1), q(-1, 1), q(0, 1), q(2, 1)],
            vec![q(2, 1), q(-2, 1), q(1, 1), q(1, 1)],
        ]);
        let ns = m.nullspace();
        assert_eq!(ns.len(), 2);
        for v in &ns {
            assert!(m.mul_vec(v).iter().all(Zero::is_zero));
        }
    }

    #[test]
    fn pseudo_inverse_penrose_identities() {
        let m = RatMatrix::from_rows(vec![
            vec![q(0, 1), q(1, 1), q(1, 1)],
            vec![q(-1, 1), q(0, 1), q(1, 1)],
            vec![q(-1, 1), q(-1, 1), q(0, 1)],
        ]);
        let p = m.pseudo_inverse();
        assert_eq!(m.mul(&p).mul(&m), m);
        assert_eq!(p.mul(&m).mul(&p), p);
        let mp = m.mul(&p);
        assert_eq!(mp.transpose(), mp);
        let pm = p.mul(&m);
        assert_eq!(pm.transpose(), pm);
    }

    #[test]
    fn solve_matches_inverse() {
        let m = RatMatrix::from_rows(vec![vec![q(1, 1), q(1, 1)], vec![q(0, 1), q(1, 1)]]);
        let x = m.solve(&[q(2, 3), q(1, 3)]).unwrap();
        assert_eq!(x, vec![q(1, 3), q(1, 3)]);
    }

    #[test]
    fn rational_text_round_trip() {
        for s in ["3/7", "-2/5", "4", "0"] {
            assert_eq!(format_rational(&parse_rational(s).unwrap()), s);
        }
        assert_eq!(parse_rational("0.25").unwrap(), q(1, 4));
        assert!(parse_rational("1/0").is_err());
    }

    #[test]
    fn huge_log10() {
        let x = num_traits::pow(BigInt::from(10), 400);
        assert!((big_log10(&x) - 400.0).abs() < 1e-9);
        let y = &x * BigInt::from(3);
        assert!((big_ratio_f64(&y, &x) - 3.0).abs() < 1e-9);
    }

    #[test]
    fn serde_uses_decimal_strings() {
        let m = IntMatrix::from_rows(&[vec![1, 2], vec![3, 4]]);
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(json, r#"[["1","2"],["3","4"]]"#);
        let back: IntMatrix = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
    }
}
