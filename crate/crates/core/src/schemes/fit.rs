//! Solve for ideal-operator parameters that produce a requested PNES.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use super::SchemeKind;
use crate::error::{PnesError, Result};
use crate::optics::SqueezerParams;
use crate::optimizer::{minimize_all, Bounds, OptimizerConfig};
use crate::states::{pnes_from_ops, pnes_from_pair_ops, CoherentOpParams, PairOpParams, PnesCoefficients};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FitMode {
    /// Match the complex coefficients up to a global phase.
    #[default]
    Exact,
    /// Match |C_n| only; the realized signs are reported in the solution.
    Magnitudes,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitOptions {
    /// Squeezing s of every scheme-1 operator.
    pub squeezing: f64,
    /// Scheme-1 squeezing phases per stage; default 0, pi, 0, pi, ...
    pub phases: Option<Vec<f64>>,
    pub mode: FitMode,
    /// Largest accepted infidelity between target and ideal output.
    pub tol: f64,
    pub optimizer: OptimizerConfig,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            squeezing: 0.1,
            phases: None,
            mode: FitMode::Exact,
            tol: 1e-10,
            optimizer: OptimizerConfig { starts: 32, ..OptimizerConfig::default() },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FitParams {
    Scheme1(Vec<CoherentOpParams>),
    /// (odd, even) factors per stage; the first odd factor is pinned to (0, 1).
    Scheme2(Vec<(PairOpParams, PairOpParams)>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitSolution {
    pub params: FitParams,
    /// 1 - |<target|ideal output>|^2 (magnitudes only under [`FitMode::Magnitudes`]).
    pub residual: f64,
    pub realized: PnesCoefficients,
    /// Splitting angles, t = cos, r = sin, each reduced to [0, pi).
    pub angles: Vec<f64>,
}

fn default_phase(k: usize) -> f64 {
    if k % 2 == 0 {
        0.0
    } else {
        PI
    }
}

fn decode(kind: SchemeKind, x: &[f64], n: usize, opts: &FitOptions) -> Result<FitParams> {
    let split = |th: f64| (th.cos(), th.sin());
    match kind {
        SchemeKind::Scheme1 => {
            let mut ops = Vec::with_capacity(n);
            for (k, &th) in x.iter().enumerate() {
                let phi = match &opts.phases {
                    Some(p) => *p.get(k).ok_or_else(|| {
                        PnesError::InvalidParameter(format!("{} phases for {n} stages", p.len()))
                    })?,
                    None => default_phase(k),
                };
                let (t, r) = split(th);
                ops.push(CoherentOpParams {
                    t: C64::new(t, 0.0),
                    r: C64::new(r, 0.0),
                    xi: SqueezerParams::new(opts.squeezing, phi)?,
                });
            }
            Ok(FitParams::Scheme1(ops))
        }
        SchemeKind::Scheme2 => {
            let mut ops = Vec::with_capacity(n);
            let (t, r) = split(x[0]);
            ops.push((PairOpParams::real(0.0, 1.0), PairOpParams::real(t, r)));
            for pair in x[1..].chunks(2) {
                let (to, ro) = split(pair[0]);
                let (te, re) = split(pair[1]);
                ops.push((PairOpParams::real(to, ro), PairOpParams::real(te, re)));
            }
            Ok(FitParams::Scheme2(ops))
        }
    }
}

fn realize(p: &FitParams) -> Result<PnesCoefficients> {
    match p {
        FitParams::Scheme1(ops) => pnes_from_ops(ops),
        FitParams::Scheme2(ops) => pnes_from_pair_ops(ops),
    }
}

fn infidelity(target: &PnesCoefficients, out: &PnesCoefficients, mode: FitMode) -> f64 {
    let pairs = target.as_slice().iter().zip(out.as_slice());
    let ov = match mode {
        FitMode::Exact => pairs.map(|(a, b)| a.conj() * b).sum::<C64>().norm_sqr(),
        FitMode::Magnitudes => pairs.map(|(a, b)| a.norm() * b.norm()).sum::<f64>().powi(2),
    };
    (1.0 - ov).max(0.0)
}

fn canonical(th: f64) -> f64 {
    let t = th.rem_euclid(PI);
    if PI - t < 1e-7 {
        0.0
    } else {
        t
    }
}

/// All distinct parameter sets whose ideal output matches `target` within `opts.tol`,
/// sorted by their angles. Scheme 1 uses N operators with fixed squeezing; scheme 2
/// uses N two-step operators with the first odd factor pinned to a^dag.
pub fn fit_params_to_target(target: &PnesCoefficients, kind: SchemeKind, opts: &FitOptions) -> Result<Vec<FitSolution>> {
    let n = target.n_max();
    if n == 0 {
        return Err(PnesError::InvalidParameter("target needs N >= 1".into()));
    }
    let dim = match kind {
        SchemeKind::Scheme1 => n,
        SchemeKind::Scheme2 => 2 * n - 1,
    };
    let bounds = Bounds::uniform(dim, 0.0, PI)?;
    let f = |x: &[f64]| -> f64 {
        decode(kind, x, n, opts)
            .and_then(|p| realize(&p))
            .map_or(1.0, |out| infidelity(target, &out, opts.mode))
    };
    let minima = minimize_all(f, &bounds, &opts.optimizer)?;
    let best = minima.iter().map(|m| m.value).fold(f64::INFINITY, f64::min);
    let mut sols: Vec<FitSolution> = Vec::new();
    for m in minima.into_iter().filter(|m| m.value <= opts.tol) {
        let angles: Vec<f64> = m.x.iter().map(|&t| canonical(t)).collect();
        if sols
            .iter()
            .any(|s| s.angles.iter().zip(&angles).all(|(a, b)| (a - b).abs() < 1e-5))
        {
            continue;
        }
        let params = decode(kind, &angles, n, opts)?;
        let realized = realize(&params)?;
        let residual = infidelity(target, &realized, opts.mode);
        sols.push(FitSolution { params, residual, realized, angles });
    }
    if sols.is_empty() {
        return Err(PnesError::NoConvergence { residual: best });
    }
    sols.sort_by(|a, b| a.angles.partial_cmp(&b.angles).unwrap_or(std::cmp::Ordering::Equal));
    Ok(sols)
}
