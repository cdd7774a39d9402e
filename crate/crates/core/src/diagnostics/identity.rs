use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::law::{SharedLaw, VectorLaw};
use crate::linalg::Vector;
use crate::report::ext_real;
use crate::rng::RngStream;

/// Pairwise distances at or below this fraction of the sample scale are
/// treated as zero, so samples that agree up to rounding compare equal.
const SNAP: f64 = 1e-12;

/// Two-sample energy-distance test of `X_t` against
/// `Σ_{i≤t} M_1⋯M_{i-1} Z_i + M_1⋯M_t Z_0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityTest {
    #[serde(serialize_with = "ext_real")]
    pub statistic: f64,
    pub p_value: f64,
    pub t: usize,
    pub n_samples: usize,
    pub permutations: usize,
}

fn pooled_distances(a: &[Vector], b: &[Vector]) -> Vec<f64> {
    let pooled: Vec<&Vector> = a.iter().chain(b).collect();
    let n = pooled.len();
    let scale = pooled.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let x = pooled[i].as_slice().iter().zip(pooled[j].as_slice()).map(|(p, q)| (p - q) * (p - q)).sum::<f64>();
            let x = x.sqrt();
            let x = if x <= SNAP * scale { 0.0 } else { x };
            d[i * n + j] = x;
            d[j * n + i] = x;
        }
    }
    d
}

/// `2 E|X−Y| − E|X−X'| − E|Y−Y'|` with group labels `in_a`.
fn energy_from(d: &[f64], in_a: &[bool]) -> f64 {
    let n = in_a.len();
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let x = d[i * n + j];
            match (in_a[i], in_a[j]) {
                (true, true) => aa += x,
                (false, false) => bb += x,
                (true, false) => ab += x,
                (false, true) => {}
            }
        }
    }
    let na = in_a.iter().filter(|a| **a).count() as f64;
    let nb = n as f64 - na;
    2.0 * ab / (na * nb) - aa / (na * na) - bb / (nb * nb)
}

/// V-statistic energy distance between two samples.
pub fn energy_distance(a: &[Vector], b: &[Vector]) -> f64 {
    let d = pooled_distances(a, b);
    let labels: Vec<bool> = (0..a.len() + b.len()).map(|i| i < a.len()).collect();
    energy_from(&d, &labels).max(0.0)
}

/// Statistic and permutation p-value `(1 + #{perm ≥ obs}) / (1 + perms)`.
pub(crate) fn energy_test_samples(a: &[Vector], b: &[Vector], permutations: usize, seed: u64) -> (f64, f64) {
    let d = pooled_distances(a, b);
    let n = a.len() + b.len();
    let mut labels: Vec<bool> = (0..n).map(|i| i < a.len()).collect();
    let obs = energy_from(&d, &labels).max(0.0);
    let mut rng = RngStream::new(seed, u64::MAX);
    let mut at_least = 0usize;
    for _ in 0..permutations {
        for i in (1..n).rev() {
            let j = rng.index(i + 1);
            labels.swap(i, j);
        }
        if energy_from(&d, &labels).max(0.0) >= obs {
            at_least += 1;
        }
    }
    (obs, (1 + at_least) as f64 / (1 + permutations) as f64)
}

fn forward(law: &SharedLaw, z0: &VectorLaw, t: usize, rng: &mut RngStream) -> Vec<f64> {
    let mut x = z0.sample(rng).into_vec();
    for _ in 0..t {
        let (m, z) = law.sample(rng);
        let mx = m.mul_vec(&Vector::from_raw_unchecked(x)).map(Vector::into_vec).unwrap_or_default();
        x = mx.iter().zip(z.as_slice()).map(|(a, b)| a + b).collect();
    }
    x
}

fn perpetuity_side(law: &SharedLaw, z0: &VectorLaw, t: usize, rng: &mut RngStream) -> Vec<f64> {
    let d = law.dim();
    let z0 = z0.sample(rng);
    let mut prefix = vec![0.0; d * d];
    for i in 0..d {
        prefix[i * d + i] = 1.0;
    }
    let mut acc = vec![0.0; d];
    for _ in 0..t {
        let (m, z) = law.sample(rng);
        for (r, a) in acc.iter_mut().enumerate() {
            *a += (0..d).map(|c| prefix[r * d + c] * z.as_slice()[c]).sum::<f64>();
        }
        let mut next = vec![0.0; d * d];
        for r in 0..d {
            for c in 0..d {
                next[r * d + c] = (0..d).map(|k| prefix[r * d + k] * m.as_slice()[k * d + c]).sum();
            }
        }
        prefix = next;
    }
    for (r, a) in acc.iter_mut().enumerate() {
        *a += (0..d).map(|c| prefix[r * d + c] * z0.as_slice()[c]).sum::<f64>();
    }
    acc
}

/// Draws `n_samples` of each side independently and runs the permutation test.
///
/// Sample `i` of the recursion uses stream `2i`, sample `i` of the sum uses
/// stream `2i + 1`; the permutations use stream `u64::MAX`.
pub fn test_distributional_identity(
    law: &SharedLaw,
    z0: &VectorLaw,
    t: usize,
    n_samples: usize,
    seed: u64,
    permutations: usize,
) -> Result<IdentityTest> {
    if t == 0 {
        return Err(Error::InvalidInput("t must be at least 1".into()));
    }
    if n_samples < 2 {
        return Err(Error::InvalidInput("need at least two samples per side".into()));
    }
    check_dim(law.dim(), z0.dim())?;
    let draws: Vec<(Vec<f64>, Vec<f64>)> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let left = forward(law, z0, t, &mut RngStream::new(seed, 2 * i));
            let right = perpetuity_side(law, z0, t, &mut RngStream::new(seed, 2 * i + 1));
            (left, right)
        })
        .collect();
    let mut a = Vec::with_capacity(n_samples);
    let mut b = Vec::with_capacity(n_samples);
    for (l, r) in draws {
        if l.iter().chain(&r).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!("samples overflowed at t = {t}; use a shorter horizon")));
        }
        a.push(Vector::from_raw_unchecked(l));
        b.push(Vector::from_raw_unchecked(r));
    }
    let (statistic, p_value) = energy_test_samples(&a, &b, permutations, seed);
    Ok(IdentityTest { statistic, p_value, t, n_samples, permutations })
}
