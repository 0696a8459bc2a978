//! Dense singular value routines.
//!
//! Small matrices go through the full nalgebra SVD. For large matrices where
//! only a handful of leading singular triplets are needed, a seeded block
//! subspace iteration with Rayleigh-Ritz extraction is used; it stops once
//! every requested triplet satisfies `‖A v − s u‖, ‖Aᵀu − s v‖ ≤ 1e−13 s₁`.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand::Rng;

/// Leading singular triplets, sorted non-increasing. Columns of `u` and `v`
/// are the left and right singular vectors.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v: DMatrix<f64>,
    /// Whether every singular value of the matrix was computed.
    pub complete: bool,
}

const FULL_SVD_LIMIT: usize = 400;
const SEED: u64 = 0x5eed_4e5d;

pub fn full_svd(a: &DMatrix<f64>) -> Svd {
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("requested");
    let vt = svd.v_t.expect("requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let s = order.iter().map(|&i| svd.singular_values[i]).collect();
    let u = DMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
    let v = DMatrix::from_fn(vt.ncols(), order.len(), |r, c| vt[(order[c], r)]);
    Svd {
        u,
        s,
        v,
        complete: true,
    }
}

/// The `count` largest singular triplets of `a`.
pub fn svd_top(a: &DMatrix<f64>, count: usize) -> Svd {
    let n = a.nrows().min(a.ncols());
    let count = count.min(n);
    let block = (count + count.max(10)).min(n);
    if n <= FULL_SVD_LIMIT || 3 * block > n {
        let mut full = full_svd(a);
        truncate_svd(&mut full, count);
        return full;
    }
    subspace_svd(a, count, block)
}

fn truncate_svd(svd: &mut Svd, count: usize) {
    svd.complete &= count >= svd.s.len();
    svd.s.truncate(count);
    svd.u = svd.u.columns(0, count).into_owned();
    svd.v = svd.v.columns(0, count).into_owned();
}

fn orthonormalize(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}

fn subspace_svd(a: &DMatrix<f64>, count: usize, block: usize) -> Svd {
    let cols = a.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let start = DMatrix::from_fn(cols, block, |_, _| rng.random::<f64>() - 0.5);
    let mut v = orthonormalize(start);
    let at = a.transpose();

    let mut result = None;
    for it in 0..2000 {
        let y = a * &v;
        if it % 4 == 3 || it == 1999 {
            let small = y.clone().svd(true, true);
            let (uu, vt) = (small.u.expect("requested"), small.v_t.expect("requested"));
            let mut order: Vec<usize> = (0..small.singular_values.len()).collect();
            order.sort_by(|&i, &j| small.singular_values[j].total_cmp(&small.singular_values[i]));
            let order = &order[..count];
            let s: Vec<f64> = order.iter().map(|&i| small.singular_values[i]).collect();
            let right = &v * DMatrix::from_fn(block, count, |r, c| vt[(order[c], r)]);
            let left = DMatrix::from_fn(uu.nrows(), count, |r, c| uu[(r, order[c])]);
            let scale = s.first().copied().unwrap_or(0.0);
            let converged = scale == 0.0 || {
                let back = &at * &left;
                (0..count).all(|k| {
                    let r = (back.column(k) - right.column(k) * s[k]).norm();
                    r <= 1e-13 * scale
                })
            };
            if converged || it == 1999 {
                if converged {
                    log::debug!("subspace SVD with {cols} columns: {count} values after {} iterations", it + 1);
                } else {
                    log::warn!("subspace SVD with {cols} columns: residual test not met after {} iterations", it + 1);
                }
                result = Some(Svd {
                    u: left,
                    s,
                    v: right,
                    complete: false,
                });
                break;
            }
        }
        v = orthonormalize(&at * y);
    }
    result.expect("loop always produces a result")
}

/// Largest singular value.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    svd_top(a, 1).s.first().copied().unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_matrix(n: usize) -> DMatrix<f64> {
        // Upper-triangular Volterra-like matrix with decaying singular values.
        let h = 1.0 / n as f64;
        DMatrix::from_fn(n, n, |i, j| if j >= i { (-((j - i) as f64) * h).exp() * h } else { 0.0 })
    }

    #[test]
    fn subspace_matches_full() {
        let a = test_matrix(500);
        let full = full_svd(&a);
        let top = subspace_svd(&a, 5, 15);
        for k in 0..5 {
            assert!((full.s[k] - top.s[k]).abs() <= 1e-12 * full.s[0], "k={k}");
            let dot = full.v.column(k).dot(&top.v.column(k)).abs();
            assert!((dot - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn full_is_sorted() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 2.0]);
        let svd = full_svd(&a);
        assert_eq!(svd.s, vec![3.0, 2.0, 1.0]);
        assert!((spectral_norm(&a) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_matrix() {
        let a = DMatrix::<f64>::zeros(600, 600);
        let top = svd_top(&a, 3);
        assert_eq!(top.s, vec![0.0; 3]);
    }
}
