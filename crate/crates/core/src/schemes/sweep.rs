//! Sensitivity of the output fidelity to errors in the mixing beam splitters.

use rayon::prelude::*;

use super::{RunConfig, ScenarioPoint, Stages};
use crate::error::Result;
use crate::fock::fidelity_pure_vs_ensemble;

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    /// Index into the input points.
    pub point: usize,
    pub label: Vec<f64>,
    pub which_bs: &'static str,
    pub delta_t: f64,
    /// None when a perturbed transmission leaves [-1, 1].
    pub fidelity: Option<f64>,
    /// Unperturbed fidelity minus `fidelity`.
    pub degradation: Option<f64>,
}

fn splitters(stages: &Stages) -> &'static [&'static str] {
    match stages {
        Stages::Scheme1(_) => &["BS3"],
        Stages::Scheme2(_) => &["BS3", "BS4"],
    }
}

/// Shift the named splitter's transmission by `dt` in every stage.
fn perturb(stages: &Stages, which: &str, dt: f64) -> Stages {
    match stages {
        Stages::Scheme1(v) => Stages::Scheme1(
            v.iter()
                .map(|p| {
                    let mut p = *p;
                    p.t_n += dt;
                    p
                })
                .collect(),
        ),
        Stages::Scheme2(v) => Stages::Scheme2(
            v.iter()
                .map(|p| {
                    let mut p = *p;
                    if which == "BS3" {
                        p.t_odd += dt;
                    } else {
                        p.t_even += dt;
                    }
                    p
                })
                .collect(),
        ),
    }
}

fn feasible(stages: &Stages) -> bool {
    match stages {
        Stages::Scheme1(v) => v.iter().all(|p| p.t_n.abs() <= 1.0),
        Stages::Scheme2(v) => v.iter().all(|p| p.t_odd.abs() <= 1.0 && p.t_even.abs() <= 1.0),
    }
}

/// One row per (point, splitter, delta), in that nesting order. Fidelity is always
/// measured against the point's unperturbed ideal output.
pub fn bs_error_sweep(points: &[ScenarioPoint], deltas: &[f64], cfg: &RunConfig) -> Result<Vec<SweepRow>> {
    let base: Vec<f64> = points
        .par_iter()
        .map(|p| Ok(p.run(cfg)?.fidelity_vs_target.unwrap_or(0.0)))
        .collect::<Result<_>>()?;
    let mut jobs = Vec::new();
    for (k, p) in points.iter().enumerate() {
        for &bs in splitters(&p.stages) {
            for &dt in deltas {
                jobs.push((k, bs, dt));
            }
        }
    }
    jobs.into_par_iter()
        .map(|(k, bs, dt)| {
            let p = &points[k];
            let stages = perturb(&p.stages, bs, dt);
            let fidelity = if feasible(&stages) {
                Some(fidelity_pure_vs_ensemble(&p.target, &stages.run(cfg)?.output)?)
            } else {
                None
            };
            Ok(SweepRow {
                point: k,
                label: p.label.clone(),
                which_bs: bs,
                delta_t: dt,
                fidelity,
                degradation: fidelity.map(|f| base[k] - f),
            })
        })
        .collect()
}
