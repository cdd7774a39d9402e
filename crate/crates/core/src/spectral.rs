//! The constant-coefficient case `M_t ≡ M`.
//!
//! Powers are represented as `Mᵗ = Σ_k Σ_{j<m_k} t(t−1)⋯(t−j+1) λ_k^{t−j} Z_{k,j}`
//! where `λ_k` are the distinct eigenvalues, `m_k` their multiplicities as
//! roots of the minimal polynomial, and `Z_{k,j}` the components of `M`.
//! Everything is computed in complex arithmetic on `M/ρ` (ρ the spectral
//! radius) and rescaled, which keeps the interpolation system well scaled.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::diagnostics::{Condition, ConditionReport, Method, Verdict};
use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, SquareMatrix};

/// Eigenvalues closer than this (relative to `max(1, |λ|)`) are one eigenvalue.
pub const CLUSTER_TOL: f64 = 1e-8;
/// Relative residual below which a Krylov vector counts as dependent.
pub const KRYLOV_TOL: f64 = 1e-9;
/// Relative residual `‖p(M)‖` accepted for an annihilating polynomial.
pub const ANNIHILATION_TOL: f64 = 1e-8;
/// Largest condition number accepted for the interpolation system.
pub const MAX_CONDITION: f64 = 1e12;
/// Half-width of the band around `|λ₁| = 1` that triggers a boundary warning.
pub const BOUNDARY_TOL: f64 = 1e-12;
pub const MAX_DIM: usize = 32;

type CMat = DMatrix<Complex64>;

fn to_complex(m: &SquareMatrix, scale: f64) -> CMat {
    let d = m.dim();
    CMat::from_fn(d, d, |i, j| Complex64::new(m.get(i, j) / scale, 0.0))
}

fn fro(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigenvalues over ℂ, sorted by nonincreasing modulus (ties: by real, then
/// imaginary part, descending).
pub fn eigenvalues(m: &SquareMatrix) -> Vec<Complex64> {
    let d = m.dim();
    let a = DMatrix::from_row_slice(d, d, m.as_slice());
    let mut ev: Vec<Complex64> = a.complex_eigenvalues().iter().copied().collect();
    sort_by_modulus(&mut ev);
    ev
}

fn sort_by_modulus(ev: &mut [Complex64]) {
    ev.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(b.re.total_cmp(&a.re)).then(b.im.total_cmp(&a.im)));
}

pub fn spectral_radius(m: &SquareMatrix) -> f64 {
    eigenvalues(m).first().map_or(0.0, |z| z.norm())
}

/// Distinct eigenvalues (cluster means) with their algebraic multiplicities.
fn cluster(ev: &[Complex64]) -> Vec<(Complex64, usize)> {
    let mut groups: Vec<Vec<Complex64>> = Vec::new();
    for z in ev {
        match groups.iter_mut().find(|g| (g[0] - z).norm() <= CLUSTER_TOL * z.norm().max(1.0)) {
            Some(g) => g.push(*z),
            None => groups.push(vec![*z]),
        }
    }
    let mut out: Vec<(Complex64, usize)> = groups
        .into_iter()
        .map(|g| {
            let n = g.len();
            let mean = g.iter().sum::<Complex64>() / n as f64;
            (mean, n)
        })
        .collect();
    out.sort_by(|a, b| {
        b.0.norm().total_cmp(&a.0.norm()).then(b.0.re.total_cmp(&a.0.re)).then(b.0.im.total_cmp(&a.0.im))
    });
    out
}

/// Least `k` with `A^k` in the span of `I, A, …, A^{k−1}` (normalised vec's,
/// twice-applied Gram–Schmidt, relative tolerance [`KRYLOV_TOL`]).
fn krylov_degree(a: &CMat) -> usize {
    let d = a.nrows();
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    let mut power = CMat::identity(d, d);
    for k in 0..=d {
        let n = fro(&power);
        if n == 0.0 {
            return k;
        }
        let mut v: Vec<Complex64> = power.iter().map(|z| z / n).collect();
        for _ in 0..2 {
            for b in &basis {
                let c: Complex64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= c * bi;
                }
            }
        }
        let r = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if r < KRYLOV_TOL {
            return k;
        }
        basis.push(v.into_iter().map(|z| z / r).collect());
        power = &power * a;
    }
    d
}

/// `Π_k (A − μ_k I)^{m_k}`
fn annihilator(a: &CMat, roots: &[(Complex64, usize)]) -> CMat {
    let d = a.nrows();
    let mut p = CMat::identity(d, d);
    for (mu, m) in roots {
        let shifted = a - CMat::identity(d, d) * *mu;
        for _ in 0..*m {
            p = &p * &shifted;
        }
    }
    p
}

fn tuples(bounds: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for b in bounds {
        out = out.into_iter().flat_map(|t| (1..=*b).map(move |m| [t.clone(), vec![m]].concat())).collect();
    }
    out
}

/// Monic minimal polynomial `Π (x − λ_k)^{m_k}`.
#[derive(Clone, Debug, Serialize)]
pub struct MinimalPolynomial {
    /// Distinct roots, by nonincreasing modulus.
    #[serde(serialize_with = "ser_complex_vec")]
    pub roots: Vec<Complex64>,
    pub multiplicities: Vec<usize>,
    /// Coefficients `c_0, …, c_deg` of `Σ c_i x^i`, with `c_deg = 1`.
    #[serde(serialize_with = "ser_complex_vec")]
    pub coefficients: Vec<Complex64>,
    /// `‖p(M/ρ)‖_F / max(1, ‖M/ρ‖)^deg`
    pub residual: f64,
    /// Least degree found by the Krylov search.
    pub krylov_degree: usize,
}

impl MinimalPolynomial {
    pub fn degree(&self) -> usize {
        self.multiplicities.iter().sum()
    }
}

fn ser_complex_vec<S: serde::Serializer>(v: &[Complex64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for z in v {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

fn check_size(m: &SquareMatrix) -> Result<()> {
    if m.dim() > MAX_DIM {
        return Err(Error::InvalidInput(format!("dimension {} exceeds the supported {MAX_DIM}", m.dim())));
    }
    Ok(())
}

/// Scale `ρ` used for the normalised computation (1 when `ρ = 0`).
fn working_scale(m: &SquareMatrix) -> (f64, Vec<Complex64>) {
    let ev = eigenvalues(m);
    let rho = ev.first().map_or(0.0, |z| z.norm());
    (if rho > 0.0 { rho } else { 1.0 }, ev)
}

pub fn minimal_polynomial(m: &SquareMatrix) -> Result<MinimalPolynomial> {
    check_size(m)?;
    let (scale, ev) = working_scale(m);
    let a = to_complex(m, scale);
    let clusters: Vec<(Complex64, usize)> = cluster(&ev).into_iter().map(|(z, n)| (z / scale, n)).collect();
    let k_deg = krylov_degree(&a);
    let norm_a = spectral_norm(m) / scale;

    let bounds: Vec<usize> = clusters.iter().map(|c| c.1).collect();
    let mut passing: Vec<(usize, Vec<usize>, f64)> = tuples(&bounds)
        .into_iter()
        .map(|mult| {
            let roots: Vec<(Complex64, usize)> = clusters.iter().zip(&mult).map(|(c, m)| (c.0, *m)).collect();
            let deg: usize = mult.iter().sum();
            let res = fro(&annihilator(&a, &roots)) / norm_a.max(1.0).powi(deg as i32);
            (deg, mult, res)
        })
        .filter(|(_, _, res)| *res < ANNIHILATION_TOL)
        .collect();
    passing.sort_by_key(|(deg, _, _)| *deg);
    let Some(best) = passing.first().map(|p| p.0) else {
        return Err(Error::Degeneracy {
            candidates: vec![k_deg],
            detail: "no multiplicity assignment annihilates the matrix".into(),
        });
    };
    let minimal: Vec<&(usize, Vec<usize>, f64)> = passing.iter().filter(|p| p.0 == best).collect();
    if minimal.len() > 1 || best != k_deg {
        let mut candidates: Vec<usize> = vec![best, k_deg];
        candidates.dedup();
        return Err(Error::Degeneracy {
            candidates,
            detail: format!(
                "multiplicity assignments {:?} pass the annihilation test; Krylov degree {k_deg}",
                minimal.iter().map(|p| p.1.clone()).collect::<Vec<_>>()
            ),
        });
    }
    let (_, mult, residual) = minimal[0].clone();
    let roots: Vec<Complex64> = clusters.iter().map(|c| c.0 * scale).collect();

    let mut coefficients = vec![Complex64::new(1.0, 0.0)];
    for (r, m) in roots.iter().zip(&mult) {
        for _ in 0..*m {
            let mut next = vec![Complex64::new(0.0, 0.0); coefficients.len() + 1];
            for (i, c) in coefficients.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= c * r;
            }
            coefficients = next;
        }
    }
    Ok(MinimalPolynomial { roots, multiplicities: mult, coefficients, residual, krylov_degree: k_deg })
}

/// Eigenstructure and components `Z_{k,j}` of a constant matrix.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub dim: usize,
    pub eigenvalues: Vec<Complex64>,
    pub multiplicities: Vec<usize>,
    /// `components[k][j] = Z_{k,j}`
    pub components: Vec<Vec<CMat>>,
    pub polynomial: MinimalPolynomial,
    /// Condition number of the interpolation system (on `M/ρ`).
    pub condition_number: f64,
    /// Condition number of the Gram matrix of the vectorised components.
    pub gram_condition: f64,
    /// `‖Σ_k Z_{k,0} − I‖_F`
    pub identity_residual: f64,
    /// `‖M¹ from the components − M‖_F / max(1, ‖M‖_F)`
    pub first_power_residual: f64,
}

fn falling(t: u64, j: usize) -> f64 {
    (0..j as u64).map(|i| t as f64 - i as f64).product()
}

/// `t(t−1)⋯(t−j+1) λ^{t−j}`, zero when `j > t`, with `0⁰ = 1`.
fn derivative_factor(lambda: Complex64, t: u64, j: usize) -> Complex64 {
    if j as u64 > t {
        return Complex64::new(0.0, 0.0);
    }
    let e = t - j as u64;
    let p = if e == 0 { Complex64::new(1.0, 0.0) } else { pow_complex(lambda, e) };
    p * falling(t, j)
}

fn pow_complex(z: Complex64, e: u64) -> Complex64 {
    let mut result = Complex64::new(1.0, 0.0);
    let mut base = z;
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            result *= base;
        }
        base *= base;
        e >>= 1;
    }
    result
}

fn condition(m: &CMat) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn spectral_components(m: &SquareMatrix) -> Result<SpectralDecomposition> {
    let poly = minimal_polynomial(m)?;
    let d = m.dim();
    let (scale, _) = working_scale(m);
    let a = to_complex(m, scale);
    let mus: Vec<Complex64> = poly.roots.iter().map(|z| z / scale).collect();
    let deg = poly.degree();

    // V[t][(k, j)] = d^j/dx^j x^t at μ_k, for t = 0..deg
    let index: Vec<(usize, usize)> =
        poly.multiplicities.iter().enumerate().flat_map(|(k, m)| (0..*m).map(move |j| (k, j))).collect();
    let v = CMat::from_fn(deg, deg, |t, col| {
        let (k, j) = index[col];
        derivative_factor(mus[k], t as u64, j)
    });
    let cond = condition(&v);
    if cond.is_nan() || cond > MAX_CONDITION {
        return Err(Error::Conditioning(cond));
    }
    let mut rhs = CMat::zeros(deg, d * d);
    let mut power = CMat::identity(d, d);
    for t in 0..deg {
        for (c, z) in power.transpose().iter().enumerate() {
            rhs[(t, c)] = *z;
        }
        power = &power * &a;
    }
    let sol = v.lu().solve(&rhs).ok_or(Error::Conditioning(f64::INFINITY))?;

    let mut components: Vec<Vec<CMat>> = poly.multiplicities.iter().map(|m| Vec::with_capacity(*m)).collect();
    for (row, (k, j)) in index.iter().enumerate() {
        let rescale = scale.powi(*j as i32);
        let z = CMat::from_fn(d, d, |r, c| sol[(row, r * d + c)] * rescale);
        components[*k].push(z);
    }

    let gram = CMat::from_fn(deg, deg, |p, q| {
        let (kp, jp) = index[p];
        let (kq, jq) = index[q];
        components[kp][jp].iter().zip(components[kq][jq].iter()).map(|(x, y)| x.conj() * y).sum()
    });
    let gram_condition = condition(&gram);

    let mut dec = SpectralDecomposition {
        dim: d,
        eigenvalues: poly.roots.clone(),
        multiplicities: poly.multiplicities.clone(),
        components,
        polynomial: poly,
        condition_number: cond,
        gram_condition,
        identity_residual: 0.0,
        first_power_residual: 0.0,
    };
    let z0: CMat = dec.components.iter().map(|c| c[0].clone()).fold(CMat::zeros(d, d), |acc, z| acc + z);
    dec.identity_residual = fro(&(z0 - CMat::identity(d, d)));
    let m1 = dec.power_complex(1);
    let mc = to_complex(m, 1.0);
    dec.first_power_residual = fro(&(m1 - &mc)) / fro(&mc).max(1.0);
    Ok(dec)
}

impl SpectralDecomposition {
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.first().map_or(0.0, |z| z.norm())
    }

    fn power_complex(&self, t: u64) -> CMat {
        let d = self.dim;
        let mut out = CMat::zeros(d, d);
        for (lambda, comps) in self.eigenvalues.iter().zip(&self.components) {
            for (j, z) in comps.iter().enumerate() {
                let f = derivative_factor(*lambda, t, j);
                if f != Complex64::new(0.0, 0.0) {
                    out += z * f;
                }
            }
        }
        out
    }

    /// `Mᵗ` from the representation: the real part, and `‖Im‖_F`.
    pub fn power(&self, t: u64) -> Result<(SquareMatrix, f64)> {
        let c = self.power_complex(t);
        let d = self.dim;
        let re: Vec<f64> = (0..d * d).map(|i| c[(i / d, i % d)].re).collect();
        let im = c.iter().map(|z| z.im * z.im).sum::<f64>().sqrt();
        Ok((SquareMatrix::new(d, re)?, im))
    }
}

/// `Mᵗ` via the spectral representation (real part).
pub fn power_via_spectral(dec: &SpectralDecomposition, t: u64) -> Result<SquareMatrix> {
    Ok(dec.power(t)?.0)
}

/// Exact C0 decision for a constant matrix: C0 ⇔ `|λ₁| < 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct C0Exact {
    pub holds: bool,
    pub spectral_radius: f64,
    /// `|λ₁|` lies within [`BOUNDARY_TOL`] of 1; the decision is then "fails".
    pub boundary_warning: bool,
}

pub fn c0_exact(m: &SquareMatrix) -> C0Exact {
    let rho = spectral_radius(m);
    let boundary = (rho - 1.0).abs() <= BOUNDARY_TOL;
    C0Exact { holds: rho < 1.0 - BOUNDARY_TOL, spectral_radius: rho, boundary_warning: boundary }
}

impl C0Exact {
    pub fn report(&self) -> ConditionReport {
        let verdict = if self.holds { Verdict::Holds } else { Verdict::Fails };
        let r = ConditionReport::new(Condition::C0, verdict, Method::Exact).stat("spectral_radius", self.spectral_radius);
        if self.boundary_warning {
            r.caveat("spectral radius within 1e-12 of 1; treated as not below 1")
        } else {
            r
        }
    }
}

/// Machine-readable summary of a constant matrix.
#[derive(Clone, Debug, Serialize)]
pub struct ConstantReport {
    pub matrix: SquareMatrix,
    /// `(re, im)` pairs with algebraic multiplicity, by nonincreasing modulus.
    pub eigenvalues: Vec<[f64; 2]>,
    pub spectral_radius: f64,
    pub c0: C0Exact,
    pub c0_report: ConditionReport,
    pub minimal_polynomial: Option<MinimalPolynomial>,
    pub components: Option<ComponentSummary>,
    pub errors: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComponentSummary {
    pub multiplicities: Vec<usize>,
    pub condition_number: f64,
    pub gram_condition: f64,
    pub identity_residual: f64,
    pub first_power_residual: f64,
}

pub fn analyze(m: &SquareMatrix) -> Result<ConstantReport> {
    check_size(m)?;
    let ev = eigenvalues(m);
    let c0 = c0_exact(m);
    let mut errors = Vec::new();
    let minimal_polynomial = match minimal_polynomial(m) {
        Ok(p) => Some(p),
        Err(e) => {
            errors.push(e.to_string());
            None
        }
    };
    let components = if minimal_polynomial.is_some() {
        match spectral_components(m) {
            Ok(dec) => Some(ComponentSummary {
                multiplicities: dec.multiplicities.clone(),
                condition_number: dec.condition_number,
                gram_condition: dec.gram_condition,
                identity_residual: dec.identity_residual,
                first_power_residual: dec.first_power_residual,
            }),
            Err(e) => {
                errors.push(e.to_string());
                None
            }
        }
    } else {
        None
    };
    Ok(ConstantReport {
        matrix: m.clone(),
        eigenvalues: ev.iter().map(|z| [z.re, z.im]).collect(),
        spectral_radius: c0.spectral_radius,
        c0_report: c0.report(),
        c0,
        minimal_polynomial,
        components,
        errors,
    })
}
