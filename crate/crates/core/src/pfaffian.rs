//! Pfaffians, determinants and inverse columns of dense real matrices.
//!
//! The Pfaffian uses Parlett–Reid elimination with partial pivoting on the
//! upper triangle. Each step removes a 2×2 block `{k, k+1}` and replaces the
//! trailing block by its Schur complement, so the elimination can be stopped
//! early to obtain the Schur complement of a leading block.

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{Error, Result};

/// Floating point types supported by the linear algebra kernels.
pub trait Real: Float + std::fmt::Debug + std::iter::Sum + Send + Sync + 'static {}

impl<T: Float + std::fmt::Debug + std::iter::Sum + Send + Sync + 'static> Real for T {}

fn cast<T: Real>(x: f64) -> T {
    T::from(x).expect("representable constant")
}

/// Dense real antisymmetric matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct AntisymMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> AntisymMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        AntisymMatrix {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    /// Builds the matrix from its strict upper triangle.
    pub fn from_upper<F: FnMut(usize, usize) -> T>(n: usize, mut f: F) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Accepts row-major data only if it is exactly antisymmetric.
    pub fn from_dense(n: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "expected {} entries, got {}",
                n * n,
                data.len()
            )));
        }
        for i in 0..n {
            if data[i * n + i] != T::zero() {
                return Err(Error::InvalidArgument(format!("nonzero diagonal at {i}")));
            }
            for j in i + 1..n {
                if data[i * n + j] != -data[j * n + i] {
                    return Err(Error::InvalidArgument(format!("not antisymmetric at ({i},{j})")));
                }
            }
        }
        Ok(AntisymMatrix { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    /// Sets `A[i][j] = v` and `A[j][i] = -v`.
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        assert!(i != j, "diagonal of an antisymmetric matrix is zero");
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = -v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let cur = self.get(i, j);
        self.set(i, j, cur + v);
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn scaled(&self, c: T) -> Self {
        AntisymMatrix {
            n: self.n,
            data: self.data.iter().map(|&x| x * c).collect(),
        }
    }

    /// `B[i][j] = A[p[i]][p[j]]`.
    pub fn permuted(&self, p: &[usize]) -> Self {
        let n = self.n;
        let mut data = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = self.data[p[i] * n + p[j]];
            }
        }
        AntisymMatrix { n, data }
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    /// Infinity norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> T {
        (0..self.n)
            .map(|i| self.row(i).iter().fold(T::zero(), |s, &x| s + x.abs()))
            .fold(T::zero(), T::max)
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(x).fold(T::zero(), |s, (&a, &b)| s + a * b))
            .collect()
    }
}

/// A Pfaffian stored as sign and logarithm of the magnitude.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pfaffian<T> {
    /// +1, -1, or 0 for an exactly singular small matrix.
    pub sign: T,
    pub log_abs: T,
    /// Ratio of the largest to the smallest pivot magnitude.
    pub pivot_ratio: T,
}

impl<T: Real> Pfaffian<T> {
    pub fn value(&self) -> T {
        if self.sign == T::zero() {
            T::zero()
        } else {
            self.sign * self.log_abs.exp()
        }
    }

    /// `self / other` evaluated in log space.
    pub fn ratio(&self, other: &Pfaffian<T>) -> T {
        self.sign * other.sign * (self.log_abs - other.log_abs).exp()
    }

    pub fn times(&self, other: &Pfaffian<T>) -> Pfaffian<T> {
        Pfaffian {
            sign: self.sign * other.sign,
            log_abs: self.log_abs + other.log_abs,
            pivot_ratio: self.pivot_ratio.max(other.pivot_ratio),
        }
    }

    pub fn ill_conditioned(&self) -> bool {
        self.pivot_ratio > cast(1e12)
    }
}

fn permutation_sign(p: &[usize]) -> i32 {
    let mut seen = vec![false; p.len()];
    let mut sign = 1;
    for i in 0..p.len() {
        if seen[i] {
            continue;
        }
        let mut len = 0;
        let mut j = i;
        while !seen[j] {
            seen[j] = true;
            j = p[j];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

/// Working state of the upper-triangular elimination.
struct Elimination<T> {
    n: usize,
    a: Vec<T>,
    sign: T,
    log_abs: T,
    min_piv: T,
    max_piv: T,
}

enum Step {
    Done,
    Singular(usize, f64),
}

impl<T: Real> Elimination<T> {
    fn new(m: &AntisymMatrix<T>) -> Self {
        Elimination {
            n: m.n,
            a: m.data.clone(),
            sign: T::one(),
            log_abs: T::zero(),
            min_piv: T::infinity(),
            max_piv: T::zero(),
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> T {
        self.a[i * self.n + j]
    }

    /// Symmetric swap of indices `p < q`, both `> k`, keeping only rows and
    /// columns `>= k` consistent in the upper triangle.
    fn swap(&mut self, k: usize, p: usize, q: usize) {
        let n = self.n;
        self.a.swap(k * n + p, k * n + q);
        for i in p + 1..q {
            let x = self.at(p, i);
            let y = self.at(i, q);
            self.a[p * n + i] = -y;
            self.a[i * n + q] = -x;
        }
        self.a[p * n + q] = -self.at(p, q);
        for j in q + 1..n {
            self.a.swap(p * n + j, q * n + j);
        }
    }

    /// Eliminates 2×2 blocks until `stop` leading indices are gone, with pivot
    /// candidates restricted to indices below `stop`.
    fn run(&mut self, stop: usize, threshold: T) -> Step {
        let n = self.n;
        let mut tau = vec![T::zero(); n];
        let mut col = vec![T::zero(); n];
        let mut k = 0;
        while k + 1 < stop {
            let mut kp = k + 1;
            let mut best = self.at(k, k + 1).abs();
            for j in k + 2..stop {
                let v = self.at(k, j).abs();
                if v > best {
                    best = v;
                    kp = j;
                }
            }
            if kp != k + 1 {
                self.swap(k, k + 1, kp);
                self.sign = -self.sign;
            }
            let piv = self.at(k, k + 1);
            if !(piv.abs() > threshold) {
                return Step::Singular(k, piv.to_f64().unwrap_or(0.0));
            }
            if piv < T::zero() {
                self.sign = -self.sign;
            }
            self.log_abs = self.log_abs + piv.abs().ln();
            self.min_piv = self.min_piv.min(piv.abs());
            self.max_piv = self.max_piv.max(piv.abs());

            let lo = k + 2;
            if lo < n {
                for j in lo..n {
                    tau[j] = self.at(k, j) / piv;
                    col[j] = -self.at(k + 1, j);
                }
                for i in lo..n {
                    let (ti, ci) = (tau[i], col[i]);
                    let row = &mut self.a[i * n + i + 1..(i + 1) * n];
                    for ((r, &cj), &tj) in row.iter_mut().zip(&col[i + 1..n]).zip(&tau[i + 1..n]) {
                        *r = *r + ti * cj - ci * tj;
                    }
                }
            }
            k += 2;
        }
        Step::Done
    }

    fn pfaffian(&self) -> Pfaffian<T> {
        let ratio = if self.min_piv.is_finite() && self.min_piv > T::zero() {
            self.max_piv / self.min_piv
        } else {
            T::one()
        };
        Pfaffian {
            sign: self.sign,
            log_abs: self.log_abs,
            pivot_ratio: ratio,
        }
    }
}

fn singular_threshold<T: Real>(m: &AntisymMatrix<T>) -> T {
    let tiny = cast::<T>(1e-300).max(T::min_positive_value());
    m.max_abs() * tiny
}

/// Pfaffian with sign. Fails if a pivot underflows below `1e-300 * max|A|`.
pub fn pfaffian<T: Real>(m: &AntisymMatrix<T>) -> Result<Pfaffian<T>> {
    if m.n % 2 == 1 {
        return Err(Error::InvalidArgument("odd dimension".into()));
    }
    let mut el = Elimination::new(m);
    match el.run(m.n, singular_threshold(m)) {
        Step::Done => {
            let pf = el.pfaffian();
            if pf.ill_conditioned() {
                log::warn!("pfaffian pivot ratio {:?} exceeds 1e12", pf.pivot_ratio);
            }
            Ok(pf)
        }
        Step::Singular(step, pivot) => Err(Error::SingularMatrix { step, pivot }),
    }
}

/// Pfaffian of a small matrix such as a block of an inverse; a singular
/// input gives 0.
pub fn pfaffian_of_submatrix<T: Real>(m: &AntisymMatrix<T>) -> T {
    if m.n % 2 == 1 {
        return T::zero();
    }
    let mut el = Elimination::new(m);
    match el.run(m.n, T::zero()) {
        Step::Done => el.pfaffian().value(),
        Step::Singular(..) => T::zero(),
    }
}

/// Pfaffian by cofactor expansion along the first row, for any commutative
/// ring; intended for matrices of order at most 10.
pub fn pfaffian_expand<T>(m: &[Vec<T>]) -> T
where
    T: Copy + num_traits::Zero + num_traits::One + std::ops::Neg<Output = T> + std::ops::Mul<Output = T>,
{
    fn rec<T>(m: &[Vec<T>], idx: &[usize]) -> T
    where
        T: Copy + num_traits::Zero + num_traits::One + std::ops::Neg<Output = T> + std::ops::Mul<Output = T>,
    {
        if idx.is_empty() {
            return T::one();
        }
        if idx.len() % 2 == 1 {
            return T::zero();
        }
        let first = idx[0];
        let mut total = T::zero();
        for pos in 1..idx.len() {
            let rest: Vec<usize> = idx[1..].iter().copied().filter(|&x| x != idx[pos]).collect();
            let term = m[first][idx[pos]] * rec(m, &rest);
            total = if pos % 2 == 1 { total + term } else { total + -term };
        }
        total
    }
    let idx: Vec<usize> = (0..m.len()).collect();
    rec(m, &idx)
}

/// Parlett–Reid elimination of all indices except `tail`, keeping the Schur
/// complement on `tail`. Additive changes supported on `tail × tail` can then
/// be priced at the cost of a small Pfaffian.
#[derive(Clone, Debug)]
pub struct PartialPfaffian<T> {
    tail: Vec<usize>,
    head: Pfaffian<T>,
    schur: AntisymMatrix<T>,
}

impl<T: Real> PartialPfaffian<T> {
    pub fn new(m: &AntisymMatrix<T>, tail: &[usize]) -> Result<Self> {
        let n = m.n;
        if n % 2 == 1 || tail.len() % 2 == 1 {
            return Err(Error::InvalidArgument("odd dimension".into()));
        }
        let mut in_tail = vec![false; n];
        for &t in tail {
            if t >= n || in_tail[t] {
                return Err(Error::InvalidArgument("bad tail index".into()));
            }
            in_tail[t] = true;
        }
        let mut order: Vec<usize> = (0..n).filter(|&i| !in_tail[i]).collect();
        order.extend_from_slice(tail);
        let perm_sign: T = cast(permutation_sign(&order) as f64);
        let b = m.permuted(&order);
        let stop = n - tail.len();
        let mut el = Elimination::new(&b);
        if let Step::Singular(step, pivot) = el.run(stop, singular_threshold(m)) {
            return Err(Error::SingularMatrix { step, pivot });
        }
        let r = tail.len();
        let schur = AntisymMatrix::from_upper(r, |i, j| el.at(stop + i, stop + j));
        let mut head = el.pfaffian();
        head.sign = head.sign * perm_sign;
        Ok(PartialPfaffian {
            tail: tail.to_vec(),
            head,
            schur,
        })
    }

    pub fn tail(&self) -> &[usize] {
        &self.tail
    }

    /// Schur complement on the tail indices, in the order given to `new`.
    pub fn schur(&self) -> &AntisymMatrix<T> {
        &self.schur
    }

    /// Pfaffian of the original matrix plus the antisymmetric change that
    /// adds `v` at `(i, j)` (and `-v` at `(j, i)`) for each listed triple;
    /// indices refer to the original matrix and must lie in the tail.
    pub fn with_update(&self, delta: &[(usize, usize, T)]) -> Result<Pfaffian<T>> {
        let mut s = self.schur.clone();
        for &(i, j, v) in delta {
            let pi = self.tail.iter().position(|&t| t == i);
            let pj = self.tail.iter().position(|&t| t == j);
            match (pi, pj) {
                (Some(a), Some(b)) if a != b => s.add(a, b, v),
                _ => return Err(Error::InvalidArgument(format!("update ({i},{j}) outside the tail"))),
            }
        }
        let tail_pf = if s.n() == 0 {
            Pfaffian {
                sign: T::one(),
                log_abs: T::zero(),
                pivot_ratio: T::one(),
            }
        } else {
            let mut el = Elimination::new(&s);
            match el.run(s.n(), T::zero()) {
                Step::Done => el.pfaffian(),
                Step::Singular(..) => Pfaffian {
                    sign: T::zero(),
                    log_abs: T::neg_infinity(),
                    pivot_ratio: T::infinity(),
                },
            }
        };
        Ok(self.head.times(&tail_pf))
    }

    pub fn pfaffian(&self) -> Result<Pfaffian<T>> {
        self.with_update(&[])
    }
}

/// LU factorization with partial pivoting of a dense square matrix.
#[derive(Clone, Debug)]
pub struct Lu<T> {
    n: usize,
    lu: Vec<T>,
    piv: Vec<usize>,
    swaps: usize,
}

impl<T: Real> Lu<T> {
    pub fn new(n: usize, mut a: Vec<T>) -> Result<Self> {
        assert_eq!(a.len(), n * n);
        let scale = a.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
        let tiny = scale * cast::<T>(1e-300).max(T::min_positive_value());
        let mut piv: Vec<usize> = (0..n).collect();
        let mut swaps = 0;
        for k in 0..n {
            let mut p = k;
            let mut best = a[k * n + k].abs();
            for i in k + 1..n {
                let v = a[i * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > tiny) {
                return Err(Error::SingularMatrix {
                    step: k,
                    pivot: best.to_f64().unwrap_or(0.0),
                });
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                piv.swap(k, p);
                swaps += 1;
            }
            let d = a[k * n + k];
            let (top, bottom) = a.split_at_mut((k + 1) * n);
            let pivot_row = &top[k * n + k + 1..k * n + n];
            for i in 0..n - k - 1 {
                let row = &mut bottom[i * n..(i + 1) * n];
                let l = row[k] / d;
                row[k] = l;
                if l != T::zero() {
                    for (r, &u) in row[k + 1..].iter_mut().zip(pivot_row) {
                        *r = *r - l * u;
                    }
                }
            }
        }
        Ok(Lu { n, lu: a, piv, swaps })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut x: Vec<T> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s = row.iter().zip(&x[..i]).fold(T::zero(), |s, (&l, &y)| s + l * y);
            x[i] = x[i] - s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            let s = row.iter().zip(&x[i + 1..]).fold(T::zero(), |s, (&u, &y)| s + u * y);
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        x
    }

    /// Sign and log-magnitude of the determinant.
    pub fn log_det(&self) -> (T, T) {
        let mut sign = if self.swaps % 2 == 0 { T::one() } else { -T::one() };
        let mut log = T::zero();
        for i in 0..self.n {
            let d = self.lu[i * self.n + i];
            if d < T::zero() {
                sign = -sign;
            }
            log = log + d.abs().ln();
        }
        (sign, log)
    }
}

/// Selected columns of `A^{-1}`, each with residual at most `1e-9 * ‖A‖∞`.
pub fn inverse_columns<T: Real>(m: &AntisymMatrix<T>, cols: &[usize]) -> Result<Vec<(usize, Vec<T>)>> {
    let n = m.n;
    let lu = Lu::new(n, m.data.clone())?;
    let norm = m.norm_inf();
    let tol = cast::<T>(1e-9) * norm;
    let mut out = Vec::with_capacity(cols.len());
    for &j in cols {
        if j >= n {
            return Err(Error::InvalidArgument(format!("column {j} out of range")));
        }
        let mut e = vec![T::zero(); n];
        e[j] = T::one();
        let x = lu.solve(&e);
        let r = m.mul_vec(&x);
        let res = r
            .iter()
            .zip(&e)
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()));
        if res > tol {
            return Err(Error::SingularMatrix {
                step: j,
                pivot: res.to_f64().unwrap_or(f64::NAN),
            });
        }
        out.push((j, x));
    }
    Ok(out)
}

/// Sign and log-magnitude of `det(A)` for a real antisymmetric matrix.
pub fn log_det<T: Real>(m: &AntisymMatrix<T>) -> Result<(T, T)> {
    Ok(Lu::new(m.n, m.data.clone())?.log_det())
}

/// Phase and log-magnitude of the determinant of a dense complex matrix.
pub fn complex_log_det(n: usize, mut a: Vec<Complex64>) -> Result<(Complex64, f64)> {
    assert_eq!(a.len(), n * n);
    let mut phase = Complex64::new(1.0, 0.0);
    let mut log = 0.0;
    for k in 0..n {
        let mut p = k;
        let mut best = a[k * n + k].norm();
        for i in k + 1..n {
            let v = a[i * n + k].norm();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best == 0.0 {
            return Err(Error::SingularMatrix { step: k, pivot: 0.0 });
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            phase = -phase;
        }
        let d = a[k * n + k];
        phase *= d / d.norm();
        log += d.norm().ln();
        let (top, bottom) = a.split_at_mut((k + 1) * n);
        let pivot_row = &top[k * n + k + 1..k * n + n];
        for i in 0..n - k - 1 {
            let row = &mut bottom[i * n..(i + 1) * n];
            let l = row[k] / d;
            if l != Complex64::new(0.0, 0.0) {
                for (r, &u) in row[k + 1..].iter_mut().zip(pivot_row) {
                    *r -= l * u;
                }
            }
        }
    }
    Ok((phase, log))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        let m = AntisymMatrix::from_upper(2, |_, _| 3.5f64);
        assert_eq!(pfaffian(&m).unwrap().value(), 3.5);
    }

    #[test]
    fn permutation_signs() {
        assert_eq!(permutation_sign(&[0, 1, 2]), 1);
        assert_eq!(permutation_sign(&[1, 0, 2]), -1);
        assert_eq!(permutation_sign(&[1, 2, 0]), 1);
    }

    #[test]
    fn singular_is_reported() {
        let m = AntisymMatrix::<f64>::zeros(4);
        assert!(matches!(pfaffian(&m), Err(Error::SingularMatrix { .. })));
        assert_eq!(pfaffian_of_submatrix(&m), 0.0);
    }
}
