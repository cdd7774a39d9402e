//! Oracles and fixtures shared by the core integration tests and the
//! acceptance target.
#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use perpetua::law::{
    law_constant, law_frame_diagonal, law_gaussian_entries, FiniteMixture, FrameDiagonal, ScalarLaw, SharedLaw,
    VectorLaw,
};
use perpetua::simulate::RunRecord;
use perpetua::{RngStream, SquareMatrix, Vector};

pub fn random_matrix(rng: &mut RngStream, d: usize) -> SquareMatrix {
    SquareMatrix::new(d, (0..d * d).map(|_| rng.uniform_in(-1.0, 1.0)).collect()).unwrap()
}

pub fn rel_err(a: &SquareMatrix, b: &SquareMatrix) -> f64 {
    let num: f64 = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    num / b.frobenius_norm().max(f64::MIN_POSITIVE)
}

/// `log‖Mᵗ‖_F` by repeated squaring with renormalisation.
pub fn log_norm_power(m: &SquareMatrix, mut t: u64) -> f64 {
    let d = m.dim();
    let mut base = m.clone();
    let mut base_log = 0.0;
    let mut acc = SquareMatrix::identity(d).unwrap();
    let mut acc_log = 0.0;
    let renorm = |x: SquareMatrix, log: f64| {
        let n = x.frobenius_norm();
        if n == 0.0 {
            (x, f64::NEG_INFINITY)
        } else {
            (x.scaled(1.0 / n).unwrap(), log + n.ln())
        }
    };
    while t > 0 {
        if t & 1 == 1 {
            (acc, acc_log) = renorm(acc.mul(&base).unwrap(), acc_log + base_log);
        }
        (base, base_log) = renorm(base.mul(&base).unwrap(), 2.0 * base_log);
        t >>= 1;
    }
    acc_log + acc.frobenius_norm().ln()
}

pub fn fixtures() -> Vec<SquareMatrix> {
    let (c, s) = (std::f64::consts::FRAC_PI_4.cos(), std::f64::consts::FRAC_PI_4.sin());
    let rows = |r: &[&[f64]]| SquareMatrix::from_rows(&r.iter().map(|x| x.to_vec()).collect::<Vec<_>>()).unwrap();
    vec![
        SquareMatrix::diag(&[0.5, 0.25]).unwrap(),
        SquareMatrix::diag(&[2.0, 3.0]).unwrap(),
        SquareMatrix::diag(&[0.5, 1.0]).unwrap(),
        SquareMatrix::diag(&[0.5, 2.0]).unwrap(),
        rows(&[&[1.0, 1.0], &[0.0, 1.0]]),
        rows(&[&[0.9, 1.0], &[0.0, 0.9]]),
        rows(&[&[0.5, 1.0, 0.0], &[0.0, 0.5, 1.0], &[0.0, 0.0, 0.5]]),
        rows(&[&[0.9 * c, -0.9 * s], &[0.9 * s, 0.9 * c]]),
        rows(&[&[1.1 * c, -1.1 * s], &[1.1 * s, 1.1 * c]]),
    ]
}

pub struct Brute {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub w_log: f64,
    pub prod_log: f64,
    pub y_log: f64,
    pub u_log: f64,
}

pub fn mat(m: &SquareMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.dim(), m.dim(), m.as_slice())
}

pub fn op_norm(m: &DMatrix<f64>) -> f64 {
    m.singular_values().max()
}

pub fn brute_force(z0: &Vector, draws: &[(SquareMatrix, Vector)]) -> Vec<Brute> {
    let d = z0.dim();
    let ms: Vec<DMatrix<f64>> = draws.iter().map(|(m, _)| mat(m)).collect();
    let zs: Vec<DVector<f64>> = draws.iter().map(|(_, z)| DVector::from_column_slice(z.as_slice())).collect();
    let prod = |from: usize, to: usize| -> DMatrix<f64> {
        // M_from ⋯ M_to (1-based, inclusive); identity when empty
        (from..=to).fold(DMatrix::identity(d, d), |acc, j| acc * &ms[j - 1])
    };
    let mut x = DVector::from_column_slice(z0.as_slice());
    (1..=draws.len())
        .map(|t| {
            x = &ms[t - 1] * &x + &zs[t - 1];
            let v: DVector<f64> = (1..=t).map(|i| prod(1, i - 1) * &zs[i - 1]).fold(DVector::zeros(d), |a, b| a + b);
            let w = prod(1, t - 1) * &zs[t - 1];
            let y = (1..t).map(|k| (prod(k, t - 1) * &zs[t - 1]).norm()).fold(f64::INFINITY, f64::min);
            let u = (1..t).map(|k| op_norm(&prod(k, t - 1))).fold(f64::INFINITY, f64::min);
            Brute {
                x: x.iter().copied().collect(),
                v: v.iter().copied().collect(),
                w_log: w.norm().ln(),
                prod_log: op_norm(&prod(1, t)).ln(),
                y_log: y.ln(),
                u_log: u.ln(),
            }
        })
        .collect()
}

pub fn random_law(rng: &mut RngStream, case: usize) -> (SharedLaw, VectorLaw) {
    let d = 1 + rng.index(4);
    let z0 = VectorLaw::gaussian(Vector::zeros(d).unwrap(), rng.uniform_in(0.0, 2.0)).unwrap();
    let law: SharedLaw = match case % 4 {
        0 => law_gaussian_entries(d, rng.uniform_in(0.2, 1.5), rng.uniform_in(0.1, 2.0)).unwrap(),
        1 => {
            let tuples = (0..3).map(|_| (0..d).map(|_| rng.uniform_in(-2.0, 2.0)).collect()).collect();
            let z = VectorLaw::gaussian(Vector::zeros(d).unwrap(), 1.0).unwrap();
            law_frame_diagonal(
                FrameDiagonal::standard_frame(d).unwrap(),
                ScalarLaw::Coupled { tuples, weights: vec![0.25, 0.25, 0.5] },
                z,
            )
            .unwrap()
        }
        2 => {
            let comp = |rng: &mut RngStream| {
                let m = SquareMatrix::new(d, (0..d * d).map(|_| rng.uniform_in(-1.5, 1.5)).collect()).unwrap();
                let z = Vector::new((0..d).map(|_| rng.uniform_in(-1.0, 1.0)).collect()).unwrap();
                law_constant(m, z).unwrap()
            };
            let components = vec![comp(rng), comp(rng)];
            Arc::new(FiniteMixture::new(vec![0.3, 0.7], components).unwrap())
        }
        _ => {
            // a singular direction makes some suffix products vanish
            let mut a = vec![0.0; d];
            a[0] = 1.0;
            let tuples = vec![a, (0..d).map(|_| rng.uniform_in(0.5, 1.5)).collect()];
            law_frame_diagonal(
                FrameDiagonal::standard_frame(d).unwrap(),
                ScalarLaw::Coupled { tuples, weights: vec![0.5, 0.5] },
                VectorLaw::gaussian(Vector::zeros(d).unwrap(), 1.0).unwrap(),
            )
            .unwrap()
        }
    };
    (law, z0)
}

pub fn close_log(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-9 * b.abs().max(1.0)
}

pub fn close_vec(a: &[f64], b: &[f64]) -> bool {
    let scale = b.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9 * scale)
}

pub fn check(records: &[RunRecord], brute: &[Brute]) -> Result<(), String> {
    for (r, b) in records.iter().zip(brute) {
        let t = r.t;
        let pairs = [
            ("w", r.w_term_log, b.w_log),
            ("prod", r.prod_norm_log, b.prod_log),
            ("y", r.y_log, b.y_log),
            ("u", r.u_log, b.u_log),
        ];
        for (name, got, want) in pairs {
            if !close_log(got, want) {
                return Err(format!("t={t} {name}: {got} vs {want}"));
            }
        }
        if !close_vec(&r.x, &b.x) || !close_vec(&r.v_partial, &b.v) {
            return Err(format!("t={t} x/v: {:?} {:?} vs {:?} {:?}", r.x, r.v_partial, b.x, b.v));
        }
    }
    Ok(())
}

pub fn calibration_laws() -> Vec<(&'static str, SharedLaw, VectorLaw)> {
    let gauss = law_gaussian_entries(2, 0.5, 1.0).unwrap();
    let frame = law_frame_diagonal(
        FrameDiagonal::standard_frame(2).unwrap(),
        ScalarLaw::Coupled { tuples: vec![vec![1.2, 0.3], vec![0.4, 0.9]], weights: vec![0.5, 0.5] },
        VectorLaw::gaussian(Vector::zeros(2).unwrap(), 1.0).unwrap(),
    )
    .unwrap();
    let kesten: SharedLaw = Arc::new(
        FiniteMixture::new(
            vec![0.5, 0.5],
            vec![
                law_constant(SquareMatrix::diag(&[1.5]).unwrap(), Vector::new(vec![1.0]).unwrap()).unwrap(),
                law_constant(SquareMatrix::diag(&[0.3]).unwrap(), Vector::new(vec![-0.5]).unwrap()).unwrap(),
            ],
        )
        .unwrap(),
    );
    vec![
        ("gaussian-entries", gauss, VectorLaw::gaussian(Vector::zeros(2).unwrap(), 0.5).unwrap()),
        ("frame-diagonal", frame, VectorLaw::constant(Vector::new(vec![1.0, -1.0]).unwrap())),
        ("scalar-mixture", kesten, VectorLaw::constant(Vector::new(vec![0.5]).unwrap())),
    ]
}
