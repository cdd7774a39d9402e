use super::matrix::{pow2, split_pow2, SquareMatrix};

const MAX_SWEEPS: usize = 64;

/// Largest singular value of `a`, i.e. `max_{|x|=1} |Ax|`.
///
/// Computed as the square root of the largest eigenvalue of `AᵀA`, found by
/// cyclic Jacobi rotations after a power-of-two prescaling of `A`. Diagonal
/// inputs need no rotations, so dyadic diagonal matrices give exact norms.
pub fn spectral_norm(a: &SquareMatrix) -> f64 {
    spectral_norm_raw(a.as_slice(), a.dim())
}

pub(crate) fn spectral_norm_raw(a: &[f64], d: usize) -> f64 {
    let m = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if m == 0.0 {
        return 0.0;
    }
    if d == 1 {
        return a[0].abs();
    }
    let (e, _) = split_pow2(m);
    let s = pow2(-e);
    let scaled: Vec<f64> = a.iter().map(|x| x * s).collect();

    // B = AᵀA, symmetric positive semidefinite
    let mut b = vec![0.0; d * d];
    for i in 0..d {
        for j in i..d {
            let mut acc = 0.0;
            for k in 0..d {
                acc += scaled[k * d + i] * scaled[k * d + j];
            }
            b[i * d + j] = acc;
            b[j * d + i] = acc;
        }
    }
    let top = jacobi_max_eigenvalue(&mut b, d).max(0.0);
    top.sqrt() * pow2(e)
}

/// Largest eigenvalue of the symmetric matrix `b` (destroyed in the process).
fn jacobi_max_eigenvalue(b: &mut [f64], d: usize) -> f64 {
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        let mut diag = 0.0;
        for i in 0..d {
            diag += b[i * d + i] * b[i * d + i];
            for j in (i + 1)..d {
                off += b[i * d + j] * b[i * d + j];
            }
        }
        if off == 0.0 || off <= 1e-34 * diag {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let bpq = b[p * d + q];
                if bpq == 0.0 {
                    continue;
                }
                let bpp = b[p * d + p];
                let bqq = b[q * d + q];
                let theta = (bqq - bpp) / (2.0 * bpq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let bkp = b[k * d + p];
                    let bkq = b[k * d + q];
                    b[k * d + p] = c * bkp - s * bkq;
                    b[k * d + q] = s * bkp + c * bkq;
                }
                for k in 0..d {
                    let bpk = b[p * d + k];
                    let bqk = b[q * d + k];
                    b[p * d + k] = c * bpk - s * bqk;
                    b[q * d + k] = s * bpk + c * bqk;
                }
                b[p * d + q] = 0.0;
                b[q * d + p] = 0.0;
            }
        }
    }
    (0..d).map(|i| b[i * d + i]).fold(f64::NEG_INFINITY, f64::max)
}
