//! Complex direct solvers: dense LU, banded LU, a bordered band/dense
//! solver for the assembled TDG systems, Householder least squares, and a
//! sparse triplet matrix for residual checks.
//!
//! The assembled matrix is banded over the bulk elements (sector-major
//! ordering of the structured mesh) with a dense border holding the
//! boundary-ring elements, which the modal operators couple globally. The
//! bordered solver eliminates the band first and factors the resulting
//! dense Schur complement.

use crate::{C64, Error, Result};

const PIVOT_TINY: f64 = 1e-300;

/// Sparse matrix in coordinate form, used for matrix-vector products,
/// residuals, and iterative refinement alongside the factored forms.
#[derive(Debug, Clone)]
pub struct Coo {
    pub n: usize,
    pub entries: Vec<(u32, u32, C64)>,
}

impl Coo {
    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.n);
        y.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        for &(i, j, v) in &self.entries {
            y[i as usize] += v * x[j as usize];
        }
    }

    /// 1-norm (max column sum of absolute values).
    pub fn norm1(&self) -> f64 {
        let mut col = vec![0.0f64; self.n];
        for &(_, j, v) in &self.entries {
            col[j as usize] += v.norm();
        }
        col.into_iter().fold(0.0, f64::max)
    }
}

fn vec_norm2(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Dense LU with partial pivoting, row-major storage.
#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    lu: Vec<C64>,
    piv: Vec<usize>,
    min_pivot: f64,
}

impl DenseLu {
    pub fn factor(n: usize, mut a: Vec<C64>) -> Result<Self> {
        assert_eq!(a.len(), n * n);
        let mut piv = vec![0usize; n];
        let mut min_pivot = f64::MAX;
        for j in 0..n {
            let mut p = j;
            let mut best = a[j * n + j].norm();
            for i in (j + 1)..n {
                let m = a[i * n + j].norm();
                if m > best {
                    best = m;
                    p = i;
                }
            }
            piv[j] = p;
            if p != j {
                for c in 0..n {
                    a.swap(j * n + c, p * n + c);
                }
            }
            if best < PIVOT_TINY {
                return Err(Error::Singular {
                    index: j,
                    pivot: best,
                });
            }
            min_pivot = min_pivot.min(best);
            let inv = C64::new(1.0, 0.0) / a[j * n + j];
            for i in (j + 1)..n {
                let l = a[i * n + j] * inv;
                a[i * n + j] = l;
                let (head, tail) = a.split_at_mut(i * n);
                let row_j = &head[j * n + j + 1..j * n + n];
                let row_i = &mut tail[j + 1..n];
                for (ri, rj) in row_i.iter_mut().zip(row_j) {
                    *ri -= l * *rj;
                }
            }
        }
        Ok(DenseLu {
            n,
            lu: a,
            piv,
            min_pivot,
        })
    }

    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    pub fn solve_in_place(&self, b: &mut [C64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        // The factorization swaps whole rows (multipliers included), so all
        // permutations apply before the triangular solves.
        for j in 0..n {
            b.swap(j, self.piv[j]);
        }
        for j in 0..n {
            let bj = b[j];
            for i in (j + 1)..n {
                b[i] -= self.lu[i * n + j] * bj;
            }
        }
        for j in (0..n).rev() {
            b[j] /= self.lu[j * n + j];
            let bj = b[j];
            for i in 0..j {
                b[i] -= self.lu[i * n + j] * bj;
            }
        }
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Least-squares solution of an overdetermined complex system by
/// Householder QR (used for the per-element best-approximation operator).
pub fn least_squares(m: usize, n: usize, mut a: Vec<C64>, mut b: Vec<C64>) -> Result<Vec<C64>> {
    assert!(m >= n && a.len() == m * n && b.len() == m);
    for j in 0..n {
        // Householder vector for column j, rows j..m.
        let norm_x: f64 = (j..m).map(|i| a[i * n + j].norm_sqr()).sum::<f64>().sqrt();
        if norm_x < PIVOT_TINY {
            return Err(Error::Singular {
                index: j,
                pivot: norm_x,
            });
        }
        let x1 = a[j * n + j];
        let alpha = if x1.norm() == 0.0 {
            C64::new(-norm_x, 0.0)
        } else {
            -(x1 / x1.norm()) * norm_x
        };
        // v = x - alpha e1, stored over the column; v^H v = 2 v^H x (real).
        a[j * n + j] = x1 - alpha;
        let vhv: f64 = (j..m).map(|i| a[i * n + j].norm_sqr()).sum();
        let tau = 2.0 / vhv;
        for c in (j + 1)..n {
            let mut vhx = C64::new(0.0, 0.0);
            for i in j..m {
                vhx += a[i * n + j].conj() * a[i * n + c];
            }
            let s = vhx * tau;
            for i in j..m {
                let vij = a[i * n + j];
                a[i * n + c] -= s * vij;
            }
        }
        let mut vhb = C64::new(0.0, 0.0);
        for i in j..m {
            vhb += a[i * n + j].conj() * b[i];
        }
        let s = vhb * tau;
        for i in j..m {
            let vij = a[i * n + j];
            b[i] -= s * vij;
        }
        a[j * n + j] = alpha;
    }
    // Back-substitute R x = (Q^H b)[0..n].
    let mut x = vec![C64::new(0.0, 0.0); n];
    for j in (0..n).rev() {
        let mut s = b[j];
        for c in (j + 1)..n {
            s -= a[j * n + c] * x[c];
        }
        x[j] = s / a[j * n + j];
    }
    Ok(x)
}

/// Banded LU with partial pivoting (LAPACK-style band storage with `kl`
/// extra superdiagonals for pivoting fill).
#[derive(Debug)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    /// Column-major: entry (i, j) at `ab[j*ldab + kl + ku + i - j]`.
    ab: Vec<C64>,
    piv: Vec<usize>,
    factored: bool,
    min_pivot: f64,
}

impl BandLu {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        BandLu {
            n,
            kl,
            ku,
            ldab,
            ab: vec![C64::new(0.0, 0.0); n * ldab],
            piv: vec![0; n],
            factored: false,
            min_pivot: f64::MAX,
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.ldab + self.kl + self.ku + i - j
    }

    pub fn add(&mut self, i: usize, j: usize, v: C64) {
        debug_assert!(!self.factored);
        debug_assert!(j <= i + self.ku && i <= j + self.kl);
        let at = self.idx(i, j);
        self.ab[at] += v;
    }

    pub fn factor(&mut self) -> Result<()> {
        assert!(!self.factored);
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        for j in 0..n {
            let i_end = (j + kl).min(n - 1);
            let mut p = j;
            let mut best = self.ab[self.idx(j, j)].norm();
            for i in (j + 1)..=i_end {
                let m = self.ab[self.idx(i, j)].norm();
                if m > best {
                    best = m;
                    p = i;
                }
            }
            self.piv[j] = p;
            if best < PIVOT_TINY {
                return Err(Error::Singular {
                    index: j,
                    pivot: best,
                });
            }
            self.min_pivot = self.min_pivot.min(best);
            let j_end = (j + kl + ku).min(n - 1);
            if p != j {
                for c in j..=j_end {
                    let (x, y) = (self.idx(j, c), self.idx(p, c));
                    self.ab.swap(x, y);
                }
            }
            let inv = C64::new(1.0, 0.0) / self.ab[self.idx(j, j)];
            for i in (j + 1)..=i_end {
                let at = self.idx(i, j);
                let l = self.ab[at] * inv;
                self.ab[at] = l;
                for c in (j + 1)..=j_end {
                    let pivot_val = self.ab[self.idx(j, c)];
                    let at2 = self.idx(i, c);
                    self.ab[at2] -= l * pivot_val;
                }
            }
        }
        self.factored = true;
        Ok(())
    }

    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    /// Solve for `m` right-hand sides stored row-major (`b[i*m + c]`), so the
    /// inner updates are unit-stride over the columns.
    pub fn solve_multi(&self, b: &mut [C64], m: usize) {
        assert!(self.factored);
        let n = self.n;
        assert_eq!(b.len(), n * m);
        if n == 0 {
            return;
        }
        let (kl, ku) = (self.kl, self.ku);
        for j in 0..n {
            let p = self.piv[j];
            if p != j {
                for c in 0..m {
                    b.swap(j * m + c, p * m + c);
                }
            }
            let i_end = (j + kl).min(n - 1);
            for i in (j + 1)..=i_end {
                let l = self.ab[self.idx(i, j)];
                if l.norm_sqr() == 0.0 {
                    continue;
                }
                let (head, tail) = b.split_at_mut(i * m);
                let row_j = &head[j * m..j * m + m];
                let row_i = &mut tail[..m];
                for (ri, rj) in row_i.iter_mut().zip(row_j) {
                    *ri -= l * *rj;
                }
            }
        }
        for j in (0..n).rev() {
            let inv = C64::new(1.0, 0.0) / self.ab[self.idx(j, j)];
            for c in 0..m {
                b[j * m + c] *= inv;
            }
            let i_start = j.saturating_sub(kl + ku);
            for i in i_start..j {
                let u = self.ab[self.idx(i, j)];
                if u.norm_sqr() == 0.0 {
                    continue;
                }
                let (head, tail) = b.split_at_mut(j * m);
                let row_j = &tail[..m];
                let row_i = &mut head[i * m..i * m + m];
                for (ri, rj) in row_i.iter_mut().zip(row_j) {
                    *ri -= u * *rj;
                }
            }
        }
    }

    pub fn solve_in_place(&self, b: &mut [C64]) {
        self.solve_multi(b, 1);
    }
}

/// Bordered solver: unknowns `[x1; x2]` with a banded block `S` over the
/// first `nb` indices, dense coupling `E` (band rows, border columns),
/// sparse `G` (border rows, band columns), and dense `B22`.
///
/// Factorization: `S = P L U`, `X1 = S⁻¹E`, Schur complement
/// `C = B22 − G X1` factored densely.
pub struct BorderedSolver {
    nb: usize,
    m: usize,
    band: Option<BandLu>,
    x1: Vec<C64>, // nb × m row-major; S⁻¹E after construction
    g: Vec<(u32, u32, C64)>,
    c_lu: DenseLu,
}

impl BorderedSolver {
    /// `nb` is the number of leading (band) unknowns; every entry with both
    /// indices below `nb` must be banded in the given ordering.
    pub fn factor(coo: &Coo, nb: usize) -> Result<Self> {
        let n = coo.n;
        assert!(nb <= n);
        let m = n - nb;
        let (mut kl, mut ku) = (0usize, 0usize);
        for &(i, j, _) in &coo.entries {
            let (i, j) = (i as usize, j as usize);
            if i < nb && j < nb {
                if i > j {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        let mut band = if nb > 0 {
            Some(BandLu::new(nb, kl, ku))
        } else {
            None
        };
        let mut x1 = vec![C64::new(0.0, 0.0); nb * m];
        let mut g = Vec::new();
        let mut b22 = vec![C64::new(0.0, 0.0); m * m];
        for &(i, j, v) in &coo.entries {
            let (i, j) = (i as usize, j as usize);
            match (i < nb, j < nb) {
                (true, true) => band.as_mut().unwrap().add(i, j, v),
                (true, false) => x1[i * m + (j - nb)] += v,
                (false, true) => g.push((i as u32 - nb as u32, j as u32, v)),
                (false, false) => b22[(i - nb) * m + (j - nb)] += v,
            }
        }
        if let Some(b) = band.as_mut() {
            b.factor()?;
            if m > 0 {
                b.solve_multi(&mut x1, m);
            }
        }
        // Schur complement C = B22 - G X1.
        for &(bi, bj, v) in &g {
            let (bi, bj) = (bi as usize, bj as usize);
            let (head, row_x) = (&mut b22[bi * m..(bi + 1) * m], &x1[bj * m..(bj + 1) * m]);
            for (c, xv) in head.iter_mut().zip(row_x) {
                *c -= v * *xv;
            }
        }
        let c_lu = DenseLu::factor(m, b22)?;
        Ok(BorderedSolver {
            nb,
            m,
            band,
            x1,
            g,
            c_lu,
        })
    }

    pub fn min_pivot(&self) -> f64 {
        let bp = self.band.as_ref().map_or(f64::MAX, |b| b.min_pivot());
        bp.min(self.c_lu.min_pivot())
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let (nb, m) = (self.nb, self.m);
        assert_eq!(b.len(), nb + m);
        let mut x1b = b[..nb].to_vec();
        if let Some(band) = self.band.as_ref() {
            band.solve_in_place(&mut x1b);
        }
        let mut t = b[nb..].to_vec();
        for &(bi, bj, v) in &self.g {
            t[bi as usize] -= v * x1b[bj as usize];
        }
        self.c_lu.solve_in_place(&mut t);
        let mut x = vec![C64::new(0.0, 0.0); nb + m];
        for i in 0..nb {
            let mut s = x1b[i];
            let row = &self.x1[i * m..(i + 1) * m];
            for (xv, yv) in row.iter().zip(&t) {
                s -= *xv * *yv;
            }
            x[i] = s;
        }
        x[nb..].copy_from_slice(&t);
        x
    }
}

/// Solve `A x = b` through a bordered factorization with iterative
/// refinement until the relative residual meets `tol` (or a few passes).
pub fn solve_refined(
    coo: &Coo,
    solver: &BorderedSolver,
    b: &[C64],
    tol: f64,
) -> Result<(Vec<C64>, f64)> {
    let bnorm = vec_norm2(b);
    if bnorm == 0.0 {
        return Ok((vec![C64::new(0.0, 0.0); coo.n], 0.0));
    }
    let mut x = solver.solve(b);
    let mut y = vec![C64::new(0.0, 0.0); coo.n];
    let mut res = f64::MAX;
    for _ in 0..4 {
        coo.matvec(&x, &mut y);
        let mut r: Vec<C64> = b.iter().zip(&y).map(|(bi, yi)| bi - yi).collect();
        res = vec_norm2(&r) / bnorm;
        if res <= tol {
            return Ok((x, res));
        }
        r = solver.solve(&r);
        for (xi, ri) in x.iter_mut().zip(&r) {
            *xi += ri;
        }
    }
    coo.matvec(&x, &mut y);
    let r: Vec<C64> = b.iter().zip(&y).map(|(bi, yi)| bi - yi).collect();
    res = res.min(vec_norm2(&r) / bnorm);
    if res > tol {
        return Err(Error::ResidualTooLarge {
            residual: res,
            tolerance: tol,
        });
    }
    Ok((x, res))
}

/// Rough 1-norm condition estimate: ‖A‖₁ exactly from the triplets, and a
/// lower bound on ‖A⁻¹‖₁ from a few solves with random ±1 vectors.
pub fn condition_estimate(coo: &Coo, solver: &BorderedSolver, seed: u64) -> f64 {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let norm_a = coo.norm1();
    let mut inv_est = 0.0f64;
    for _ in 0..4 {
        let z: Vec<C64> = (0..coo.n)
            .map(|_| C64::new(if rng.gen::<bool>() { 1.0 } else { -1.0 }, 0.0))
            .collect();
        let y = solver.solve(&z);
        let num: f64 = y.iter().map(|v| v.norm()).sum();
        let den: f64 = z.iter().map(|v| v.norm()).sum();
        inv_est = inv_est.max(num / den);
    }
    norm_a * inv_est
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn rand_c(rng: &mut impl Rng) -> C64 {
        C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    }

    #[test]
    fn dense_lu_roundtrip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 40;
        let a: Vec<C64> = (0..n * n).map(|_| rand_c(&mut rng)).collect();
        let xs: Vec<C64> = (0..n).map(|_| rand_c(&mut rng)).collect();
        let mut b = vec![C64::new(0.0, 0.0); n];
        for i in 0..n {
            for j in 0..n {
                b[i] += a[i * n + j] * xs[j];
            }
        }
        let lu = DenseLu::factor(n, a).unwrap();
        let x = lu.solve(&b);
        let err: f64 = x
            .iter()
            .zip(&xs)
            .map(|(u, v)| (u - v).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "err {err}");
    }

    #[test]
    fn dense_lu_singular() {
        let n = 3;
        let mut a = vec![C64::new(0.0, 0.0); 9];
        a[0] = C64::new(1.0, 0.0);
        a[4] = C64::new(1.0, 0.0);
        // row 2 is zero
        match DenseLu::factor(n, a) {
            Err(Error::Singular { .. }) => {}
            other => panic!("expected singular, got {other:?}"),
        }
    }

    #[test]
    fn band_lu_matches_dense() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let n = 60;
        let (kl, ku) = (4usize, 3usize);
        let mut dense = vec![C64::new(0.0, 0.0); n * n];
        let mut band = BandLu::new(n, kl, ku);
        for i in 0..n {
            for j in 0..n {
                if j <= i + ku && i <= j + kl {
                    let v = rand_c(&mut rng) + if i == j { C64::new(3.0, 0.0) } else { C64::new(0.0, 0.0) };
                    dense[i * n + j] = v;
                    band.add(i, j, v);
                }
            }
        }
        band.factor().unwrap();
        let b: Vec<C64> = (0..n).map(|_| rand_c(&mut rng)).collect();
        let mut xb = b.clone();
        band.solve_in_place(&mut xb);
        let lu = DenseLu::factor(n, dense).unwrap();
        let xd = lu.solve(&b);
        let err: f64 = xb
            .iter()
            .zip(&xd)
            .map(|(u, v)| (u - v).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-11, "err {err}");
    }

    #[test]
    fn band_lu_multi_rhs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        let n = 30;
        let (kl, ku) = (3usize, 5usize);
        let mut band = BandLu::new(n, kl, ku);
        let mut dense = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                if j <= i + ku && i <= j + kl {
                    let v = rand_c(&mut rng) + if i == j { C64::new(2.0, 1.0) } else { C64::new(0.0, 0.0) };
                    dense[i * n + j] = v;
                    band.add(i, j, v);
                }
            }
        }
        band.factor().unwrap();
        let m = 4;
        let b: Vec<C64> = (0..n * m).map(|_| rand_c(&mut rng)).collect();
        let mut x = b.clone();
        band.solve_multi(&mut x, m);
        let lu = DenseLu::factor(n, dense).unwrap();
        for c in 0..m {
            let col: Vec<C64> = (0..n).map(|i| b[i * m + c]).collect();
            let xd = lu.solve(&col);
            for i in 0..n {
                assert!((x[i * m + c] - xd[i]).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn bordered_solver_matches_dense() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(14);
        let n = 50;
        let nb = 35;
        let (kl, ku) = (5usize, 5usize);
        let mut entries = Vec::new();
        let mut dense = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                let in_band = i < nb && j < nb;
                let keep = if in_band {
                    j <= i + ku && i <= j + kl
                } else {
                    rng.gen::<f64>() < 0.4
                };
                if keep {
                    let v = rand_c(&mut rng) + if i == j { C64::new(4.0, 0.0) } else { C64::new(0.0, 0.0) };
                    entries.push((i as u32, j as u32, v));
                    dense[i * n + j] += v;
                }
            }
        }
        let coo = Coo { n, entries };
        let solver = BorderedSolver::factor(&coo, nb).unwrap();
        let b: Vec<C64> = (0..n).map(|_| rand_c(&mut rng)).collect();
        let x = solver.solve(&b);
        let lu = DenseLu::factor(n, dense).unwrap();
        let xd = lu.solve(&b);
        let err: f64 = x
            .iter()
            .zip(&xd)
            .map(|(u, v)| (u - v).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "err {err}");

        let (xr, res) = solve_refined(&coo, &solver, &b, 1e-12).unwrap();
        assert!(res <= 1e-12);
        let err: f64 = xr
            .iter()
            .zip(&xd)
            .map(|(u, v)| (u - v).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-10);
    }

    #[test]
    fn bordered_solver_all_border() {
        // nb = 0 degenerates to a plain dense solve.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(15);
        let n = 12;
        let mut entries = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v = rand_c(&mut rng) + if i == j { C64::new(3.0, 0.0) } else { C64::new(0.0, 0.0) };
                entries.push((i as u32, j as u32, v));
            }
        }
        let coo = Coo { n, entries };
        let solver = BorderedSolver::factor(&coo, 0).unwrap();
        let b: Vec<C64> = (0..n).map(|_| rand_c(&mut rng)).collect();
        let x = solver.solve(&b);
        let mut y = vec![C64::new(0.0, 0.0); n];
        coo.matvec(&x, &mut y);
        for (bi, yi) in b.iter().zip(&y) {
            assert!((bi - yi).norm() < 1e-11);
        }
    }

    #[test]
    fn least_squares_recovers_exact_solution() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(16);
        let (m, n) = (20, 5);
        let a: Vec<C64> = (0..m * n).map(|_| rand_c(&mut rng)).collect();
        let xs: Vec<C64> = (0..n).map(|_| rand_c(&mut rng)).collect();
        let mut b = vec![C64::new(0.0, 0.0); m];
        for i in 0..m {
            for j in 0..n {
                b[i] += a[i * n + j] * xs[j];
            }
        }
        let x = least_squares(m, n, a, b).unwrap();
        for (u, v) in x.iter().zip(&xs) {
            assert!((u - v).norm() < 1e-11);
        }
    }

    #[test]
    fn least_squares_minimizes_residual() {
        // Inconsistent system: check the normal equations A^H(Ax - b) = 0.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let (m, n) = (15, 4);
        let a: Vec<C64> = (0..m * n).map(|_| rand_c(&mut rng)).collect();
        let b: Vec<C64> = (0..m).map(|_| rand_c(&mut rng)).collect();
        let x = least_squares(m, n, a.clone(), b.clone()).unwrap();
        let mut r = b.clone();
        for i in 0..m {
            for j in 0..n {
                r[i] -= a[i * n + j] * x[j];
            }
        }
        for j in 0..n {
            let mut g = C64::new(0.0, 0.0);
            for i in 0..m {
                g += a[i * n + j].conj() * r[i];
            }
            assert!(g.norm() < 1e-12, "gradient {g}");
        }
    }
}
