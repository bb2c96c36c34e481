//! Dense linear-algebra kernels sized for chains of a few hundred sites:
//! a row-major matrix, an implicit-shift QL eigensolver for symmetric
//! tridiagonal matrices, LU factorisation with partial pivoting, and real
//! root isolation for low-degree polynomials.

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Self {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows, cols);
        for (c, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), rows);
            for (r, &v) in col.iter().enumerate() {
                m.set(r, c, v);
            }
        }
        m
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = v;
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.at(r, c)).collect()
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Largest absolute deviation of `self^T self` from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let n = self.cols;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let dot: f64 = (0..self.rows).map(|r| self.at(r, i) * self.at(r, j)).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - expect).abs());
            }
        }
        worst
    }
}

/// Eigenvalues and eigenvectors of a symmetric tridiagonal matrix by the
/// implicit-shift QL method (tql2 lineage). `diag` has length `n`, `offdiag`
/// length `n - 1`. Returns unsorted eigenvalues `d` and a matrix whose
/// column `j` is the eigenvector for `d[j]`.
pub fn tridiagonal_eigen_ql(diag: &[f64], offdiag: &[f64]) -> Result<(Vec<f64>, Matrix), String> {
    let n = diag.len();
    assert_eq!(offdiag.len() + 1, n.max(1));
    let mut d = diag.to_vec();
    let mut e = offdiag.to_vec();
    e.push(0.0);
    let mut z = Matrix::identity(n);
    if n <= 1 {
        return Ok((d, z));
    }

    for l in 0..n {
        let mut iter = 0;
        loop {
            // Find a negligible subdiagonal element to split the problem.
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 64 {
                return Err(format!("QL iteration failed to converge at index {l}"));
            }

            // Implicit Wilkinson shift.
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    f = z.at(k, i + 1);
                    z.set(k, i + 1, s * z.at(k, i) + c * f);
                    z.set(k, i, c * z.at(k, i) - s * f);
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok((d, z))
}

/// LU factorisation with partial pivoting, reused across right-hand sides.
pub struct LuFactor {
    lu: Matrix,
    perm: Vec<usize>,
}

impl LuFactor {
    pub fn new(a: &Matrix) -> Result<Self, String> {
        let n = a.nrows();
        assert_eq!(n, a.ncols());
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut pivot = k;
            let mut best = lu.at(k, k).abs();
            for r in k + 1..n {
                let v = lu.at(r, k).abs();
                if v > best {
                    best = v;
                    pivot = r;
                }
            }
            if best == 0.0 {
                return Err(format!("singular matrix at column {k}"));
            }
            if pivot != k {
                for c in 0..n {
                    let tmp = lu.at(k, c);
                    lu.set(k, c, lu.at(pivot, c));
                    lu.set(pivot, c, tmp);
                }
                perm.swap(k, pivot);
            }
            let inv = 1.0 / lu.at(k, k);
            for r in k + 1..n {
                let factor = lu.at(r, k) * inv;
                lu.set(r, k, factor);
                for c in k + 1..n {
                    lu.set(r, c, lu.at(r, c) - factor * lu.at(k, c));
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.nrows();
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 1..n {
            let mut acc = x[r];
            for c in 0..r {
                acc -= self.lu.at(r, c) * x[c];
            }
            x[r] = acc;
        }
        for r in (0..n).rev() {
            let mut acc = x[r];
            for c in r + 1..n {
                acc -= self.lu.at(r, c) * x[c];
            }
            x[r] = acc / self.lu.at(r, r);
        }
        x
    }
}

/// Solve a single dense system.
pub fn solve_dense(a: &Matrix, b: &[f64]) -> Result<Vec<f64>, String> {
    Ok(LuFactor::new(a)?.solve(b))
}

/// LU factorisation with partial pivoting of a tridiagonal matrix, stored
/// in three bands plus the fill-in band the row swaps create. Zero pivots
/// are replaced by a tiny multiple of the matrix scale so the factorisation
/// can back inverse iteration on a nearly singular shift.
pub struct TridiagLu {
    n: usize,
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagLu {
    pub fn new(sub: &[f64], diag: &[f64], sup: &[f64]) -> Self {
        let n = diag.len();
        assert!(n >= 1);
        assert_eq!(sub.len() + 1, n.max(1));
        assert_eq!(sup.len() + 1, n.max(1));
        let mut dl = sub.to_vec();
        let mut d = diag.to_vec();
        let mut du = sup.to_vec();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        let scale = diag
            .iter()
            .chain(sub)
            .chain(sup)
            .fold(0.0f64, |m, x| m.max(x.abs()))
            .max(f64::MIN_POSITIVE);
        let tiny = f64::EPSILON * f64::EPSILON * scale;

        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
                if i + 2 < n {
                    du2[i] = 0.0;
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        if d[n - 1] == 0.0 {
            d[n - 1] = tiny;
        }
        Self { n, dl, d, du, du2, swapped }
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(rhs.len(), n);
        let mut b = rhs.to_vec();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                b.swap(i, i + 1);
            }
            let t = self.dl[i] * b[i];
            b[i + 1] -= t;
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
        b
    }
}

fn eval_poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| k as f64 * c)
        .collect()
}

/// Bisection on a bracketing interval, run down to machine resolution.
pub fn bisect<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    if f(hi) == 0.0 {
        return hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// All real roots of a polynomial with coefficients in ascending order
/// (`coeffs[k]` multiplies `x^k`). Roots of the derivative split the axis
/// into monotone intervals, each holding at most one root; tangent roots at
/// critical points are kept when the value there is negligible.
pub fn polynomial_real_roots(coeffs: &[f64]) -> Vec<f64> {
    // Trim the leading zeros introduced by cancellation.
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if scale == 0.0 {
        return Vec::new();
    }
    let mut c: Vec<f64> = coeffs.to_vec();
    while c.len() > 1 && c.last().unwrap().abs() <= 1e-14 * scale {
        c.pop();
    }
    let degree = c.len() - 1;
    match degree {
        0 => Vec::new(),
        1 => vec![-c[0] / c[1]],
        2 => {
            let (a, b, cc) = (c[2], c[1], c[0]);
            let disc = b * b - 4.0 * a * cc;
            if disc < 0.0 {
                return Vec::new();
            }
            let q = -0.5 * (b + disc.sqrt().copysign(b));
            let mut roots = vec![q / a];
            if q != 0.0 {
                roots.push(cc / q);
            } else {
                roots.push(0.0);
            }
            roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
            roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * (1.0 + a.abs()));
            roots
        }
        _ => {
            let lead = *c.last().unwrap();
            // Cauchy bound on root magnitude.
            let bound = 1.0 + c[..degree].iter().map(|x| (x / lead).abs()).fold(0.0, f64::max);
            let mut breaks = polynomial_real_roots(&derivative(&c));
            breaks.retain(|x| x.abs() <= bound);
            breaks.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let mut points = vec![-bound];
            points.extend(breaks.iter().copied());
            points.push(bound);

            let f = |x: f64| eval_poly(&c, x);
            let mut roots = Vec::new();
            let value_tol = 1e-10 * scale * bound.powi(degree as i32).max(1.0);
            for w in points.windows(2) {
                let (lo, hi) = (w[0], w[1]);
                let (flo, fhi) = (f(lo), f(hi));
                if flo == 0.0 {
                    roots.push(lo);
                    continue;
                }
                if flo * fhi < 0.0 {
                    roots.push(bisect(&f, lo, hi));
                } else if fhi.abs() <= value_tol && hi < bound {
                    // Tangent root at a critical point.
                    roots.push(hi);
                }
            }
            if f(bound) == 0.0 {
                roots.push(bound);
            }
            roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
            roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-11 * (1.0 + a.abs()));
            roots
        }
    }
}

/// Multiply polynomial `p` (ascending coefficients) by `(1 + q x)` in place.
pub fn poly_mul_linear(p: &[f64], q: f64) -> Vec<f64> {
    let mut out = vec![0.0; p.len() + 1];
    for (k, &c) in p.iter().enumerate() {
        out[k] += c;
        out[k + 1] += c * q;
    }
    out
}
