//! Shared test helpers: random states/channels and an eigensolver that does
//! not go through the library's linear algebra.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use qprobe::linalg::{ComplexMatrix, DensityMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_c(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Ginibre-distributed mixed state of rank `rank` (1 gives a pure state).
pub fn random_state_rank(rng: &mut ChaCha8Rng, dim: usize, rank: usize) -> DensityMatrix {
    let g = DMatrix::from_fn(dim, rank, |_, _| gaussian_c(rng));
    let m = ComplexMatrix::from_nalgebra(&g * g.adjoint()).unwrap();
    let tr = m.trace().re;
    DensityMatrix::new(m.scale(1.0 / tr).hermitian_part()).unwrap()
}

/// Full-rank or lower-rank state with a random rank.
pub fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> DensityMatrix {
    let rank = rng.random_range(1..=dim);
    random_state_rank(rng, dim, rank)
}

/// Haar-ish random unitary from the QR decomposition of a Ginibre matrix.
pub fn random_unitary(rng: &mut ChaCha8Rng, dim: usize) -> ComplexMatrix {
    let g = DMatrix::from_fn(dim, dim, |_, _| gaussian_c(rng));
    let q = g.qr().q();
    ComplexMatrix::from_nalgebra(q).unwrap()
}

/// Kraus operators of a random CPTP map with `rank` operators, cut from a
/// random isometry.
pub fn random_kraus(rng: &mut ChaCha8Rng, dim: usize, rank: usize) -> Vec<ComplexMatrix> {
    let g = DMatrix::from_fn(dim * rank, dim, |_, _| gaussian_c(rng));
    let iso = g.qr().q(); // (dim*rank) x dim, orthonormal columns
    (0..rank)
        .map(|k| ComplexMatrix::from_nalgebra(iso.rows(k * dim, dim).into_owned()).unwrap())
        .collect()
}

pub fn apply_kraus(kraus: &[ComplexMatrix], rho: &DensityMatrix) -> DensityMatrix {
    let dim = rho.dim();
    let mut acc = ComplexMatrix::zeros(dim);
    for k in kraus {
        acc = &acc + &rho.matrix().conjugate_by(k);
    }
    DensityMatrix::new(acc.hermitian_part()).unwrap()
}

// ---- independent eigensolver: real embedding + cyclic Jacobi ----

/// Eigen-decomposition of a real symmetric matrix (row-major `Vec<Vec<f64>>`)
/// by cyclic Jacobi rotations. Returns (eigenvalues, eigenvector columns).
#[allow(clippy::needless_range_loop)]
pub fn jacobi_symmetric(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

/// `f(M)` for Hermitian `M` via the real symmetric embedding
/// `[[Re, -Im], [Im, Re]]`, which has the same spectrum (doubled).
pub fn oracle_spectral_map(m: &[Vec<Complex64>], f: impl Fn(f64) -> f64) -> Vec<Vec<Complex64>> {
    let n = m.len();
    let mut big = vec![vec![0.0; 2 * n]; 2 * n];
    for r in 0..n {
        for c in 0..n {
            big[r][c] = m[r][c].re;
            big[r + n][c + n] = m[r][c].re;
            big[r][c + n] = -m[r][c].im;
            big[r + n][c] = m[r][c].im;
        }
    }
    let (vals, vecs) = jacobi_symmetric(big);
    let mut out = vec![vec![0.0; 2 * n]; 2 * n];
    for k in 0..2 * n {
        let fk = f(vals[k]);
        for r in 0..2 * n {
            for c in 0..2 * n {
                out[r][c] += vecs[r][k] * fk * vecs[c][k];
            }
        }
    }
    (0..n)
        .map(|r| (0..n).map(|c| Complex64::new(out[r][c], out[r + n][c])).collect())
        .collect()
}

pub fn oracle_eigenvalues(m: &[Vec<Complex64>]) -> Vec<f64> {
    let n = m.len();
    let mut big = vec![vec![0.0; 2 * n]; 2 * n];
    for r in 0..n {
        for c in 0..n {
            big[r][c] = m[r][c].re;
            big[r + n][c + n] = m[r][c].re;
            big[r][c + n] = -m[r][c].im;
            big[r + n][c] = m[r][c].im;
        }
    }
    let (mut vals, _) = jacobi_symmetric(big);
    vals.sort_by(f64::total_cmp);
    vals.into_iter().step_by(2).collect()
}

pub fn to_rows(m: &ComplexMatrix) -> Vec<Vec<Complex64>> {
    (0..m.dim()).map(|r| (0..m.dim()).map(|c| m.get(r, c)).collect()).collect()
}

fn naive_mul(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let n = a.len();
    (0..n)
        .map(|r| (0..n).map(|c| (0..n).map(|k| a[r][k] * b[k][c]).sum()).collect())
        .collect()
}

/// `F_a(r1, r2)` computed with the Jacobi oracle and naive products only.
pub fn oracle_alpha_fidelity(r1: &DensityMatrix, r2: &DensityMatrix, alpha: f64) -> f64 {
    let p = (1.0 - alpha) / (2.0 * alpha);
    let s = oracle_spectral_map(&to_rows(r2.matrix()), |l| if l < 1e-12 { 0.0 } else { l.powf(p) });
    let sandwich = naive_mul(&naive_mul(&s, &to_rows(r1.matrix())), &s);
    let herm: Vec<Vec<Complex64>> = (0..sandwich.len())
        .map(|r| {
            (0..sandwich.len())
                .map(|c| (sandwich[r][c] + sandwich[c][r].conj()) * 0.5)
                .collect()
        })
        .collect();
    oracle_eigenvalues(&herm)
        .iter()
        .filter(|&&l| l >= 1e-12)
        .map(|l| l.powf(alpha))
        .sum()
}

pub fn qubit(p00: f64, re: f64, im: f64) -> DensityMatrix {
    DensityMatrix::new(
        ComplexMatrix::from_row_slice(
            2,
            &[
                Complex64::new(p00, 0.0),
                Complex64::new(re, -im),
                Complex64::new(re, im),
                Complex64::new(1.0 - p00, 0.0),
            ],
        )
        .unwrap(),
    )
    .unwrap()
}

pub fn plus() -> DensityMatrix {
    let h = Complex64::new(1.0, 0.0);
    DensityMatrix::pure(&[h, h]).unwrap()
}
