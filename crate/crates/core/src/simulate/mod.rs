//! Streaming simulation of `X_t = M_t X_{t-1} + Z_t` together with the
//! perpetuity partial sums `V_t`, the terms `W_t = M_1⋯M_{t-1} Z_t` and the
//! suffix-minimum statistics.

mod ensemble;
mod trace;

use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::law::{SharedLaw, VectorLaw};
use crate::linalg::{suffix_min_term, ScaledProduct, SquareMatrix, SuffixNormTracker, Vector, DEFAULT_T_MAX};
use crate::report::{ext_real, ext_real_vec};
use crate::rng::RngStream;

pub use ensemble::{run_ensemble, run_ensemble_with, Ensemble, EnsembleSummary, StepSummary, DEFAULT_X_GRID};
pub use trace::{write_trace, write_trace_file};

/// Everything needed to reproduce a batch of replications.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub law: SharedLaw,
    pub z0: VectorLaw,
    pub horizon: usize,
    pub replications: usize,
    /// Compute `Y_t` and `U_t` (quadratic in the horizon).
    pub suffix_stats: bool,
    pub seed: u64,
    /// Largest horizon allowed with suffix statistics on.
    pub t_max: usize,
}

impl RunConfig {
    /// Suffix statistics default to on exactly when `horizon ≤ DEFAULT_T_MAX`.
    pub fn new(law: SharedLaw, z0: VectorLaw, horizon: usize, replications: usize, seed: u64) -> Result<Self> {
        let cfg = Self {
            law,
            z0,
            horizon,
            replications,
            suffix_stats: horizon <= DEFAULT_T_MAX,
            seed,
            t_max: DEFAULT_T_MAX,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_suffix_stats(mut self, on: bool) -> Self {
        self.suffix_stats = on;
        self
    }

    pub fn dim(&self) -> usize {
        self.law.dim()
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidInput("horizon must be at least 1".into()));
        }
        if self.replications == 0 {
            return Err(Error::InvalidInput("need at least one replication".into()));
        }
        check_dim(self.law.dim(), self.z0.dim())?;
        self.z0.validate()?;
        if self.suffix_stats && self.horizon > self.t_max {
            return Err(Error::Config(format!(
                "suffix statistics need horizon <= {} (got {}); disable them or raise the cap",
                self.t_max, self.horizon
            )));
        }
        Ok(())
    }
}

/// One step of a trajectory.
///
/// Log-valued fields are natural logs. `y_log` and `u_log` are `+inf` at
/// `t = 1` and `nan` when suffix statistics are off. After an overflow the
/// affected vector is set to `+inf` entries and its flag stays raised.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunRecord {
    pub t: usize,
    #[serde(serialize_with = "ext_real_vec")]
    pub x: Vec<f64>,
    #[serde(serialize_with = "ext_real_vec")]
    pub v_partial: Vec<f64>,
    #[serde(serialize_with = "ext_real")]
    pub w_term_log: f64,
    #[serde(serialize_with = "ext_real")]
    pub prod_norm_log: f64,
    #[serde(serialize_with = "ext_real")]
    pub y_log: f64,
    #[serde(serialize_with = "ext_real")]
    pub u_log: f64,
    pub x_overflow: bool,
    pub v_overflow: bool,
}

/// Sees every draw of a trajectory, in order.
pub trait StepObserver {
    fn initial(&mut self, _z0: &Vector) {}
    fn step(&mut self, t: usize, m: &SquareMatrix, z: &Vector);
}

/// Keeps every draw; handy for oracles that need the realised path.
#[derive(Clone, Debug, Default)]
pub struct DrawRecorder {
    pub z0: Option<Vector>,
    pub draws: Vec<(SquareMatrix, Vector)>,
}

impl StepObserver for DrawRecorder {
    fn initial(&mut self, z0: &Vector) {
        self.z0 = Some(z0.clone());
    }

    fn step(&mut self, _t: usize, m: &SquareMatrix, z: &Vector) {
        self.draws.push((m.clone(), z.clone()));
    }
}

struct NoObserver;

impl StepObserver for NoObserver {
    fn step(&mut self, _: usize, _: &SquareMatrix, _: &Vector) {}
}

/// Records `t = 1..=T` for replication `stream_id`.
pub fn run_trajectory(cfg: &RunConfig, stream_id: u64) -> Result<Vec<RunRecord>> {
    run_trajectory_observed(cfg, stream_id, &mut NoObserver)
}

pub fn run_trajectory_observed(
    cfg: &RunConfig,
    stream_id: u64,
    observer: &mut dyn StepObserver,
) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let d = cfg.dim();
    let mut rng = RngStream::new(cfg.seed, stream_id);

    let z0 = cfg.z0.sample(&mut rng);
    observer.initial(&z0);
    let mut x = z0.into_vec();
    let mut x_overflow = false;
    let mut v = vec![0.0; d];
    let mut v_overflow = false;

    let mut prefix = ScaledProduct::identity(d)?;
    let mut history: Vec<SquareMatrix> = Vec::new();
    let mut tracker = if cfg.suffix_stats { Some(SuffixNormTracker::with_cap(d, cfg.t_max)?) } else { None };

    let mut out = Vec::with_capacity(cfg.horizon);
    for t in 1..=cfg.horizon {
        let (m, z) = cfg.law.sample(&mut rng);
        check_dim(d, m.dim())?;
        check_dim(d, z.dim())?;
        observer.step(t, &m, &z);

        if !x_overflow {
            let mx = m.as_slice().chunks(d).map(|row| row.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>());
            x = mx.zip(z.as_slice()).map(|(a, b)| a + b).collect();
            if x.iter().any(|e| !e.is_finite()) {
                x_overflow = true;
            }
        }
        if x_overflow {
            x.iter_mut().for_each(|e| *e = f64::INFINITY);
        }

        // W_t uses the product of M_1..M_{t-1}
        let w = prefix.apply(&z)?;
        let w_term_log = w.log_norm();
        if !v_overflow && !w.is_zero() {
            for (acc, term) in v.iter_mut().zip(w.materialize()) {
                *acc += term;
            }
            if v.iter().any(|e| !e.is_finite()) {
                v_overflow = true;
            }
        }
        if v_overflow {
            v.iter_mut().for_each(|e| *e = f64::INFINITY);
        }

        let (y_log, u_log) = match tracker.as_mut() {
            Some(tr) => {
                let y = suffix_min_term(&history, &z)?;
                let u = tr.min_log_norm();
                tr.push(&m)?;
                history.push(m.clone());
                (y, u)
            }
            None => (f64::NAN, f64::NAN),
        };

        prefix.extend_in_place(&m)?;
        out.push(RunRecord {
            t,
            x: x.clone(),
            v_partial: v.clone(),
            w_term_log,
            prod_norm_log: prefix.log_norm(),
            y_log,
            u_log,
            x_overflow,
            v_overflow,
        });
    }
    Ok(out)
}
