//! Target families and the circuits that prepare them.

use num_complex::Complex64 as C64;

use super::{
    fit_params_to_target, FirstBranch, FitMode, FitOptions, FitParams, RunConfig, Scheme1Branch, Scheme1StageParams,
    Scheme2StageParams, SchemeCutoffs, SchemeKind, SchemeResult, SecondBranch, Stages,
};
use crate::error::{PnesError, Result};
use crate::fock::{FockCutoffs, PureState};
use crate::optics::SqueezerParams;
use crate::states::{apply_ideal_on, coefficients_of, make_pnes, CoherentOpParams, PairOpParams, PnesCoefficients};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircuitDefaults {
    /// Squeezing of the signal squeezers (scheme 1) and of both squeezers (scheme 2).
    pub squeezing: f64,
    /// Scheme-1 tap squeezing.
    pub s_tap: f64,
    /// Intensity transmissivity T^2 of BS1 and BS2.
    pub transmissivity: f64,
}

impl Default for CircuitDefaults {
    fn default() -> Self {
        CircuitDefaults { squeezing: 0.1, s_tap: 0.1, transmissivity: 0.99 }
    }
}

impl CircuitDefaults {
    fn t_amp(&self) -> Result<f64> {
        if !(self.transmissivity > 0.0 && self.transmissivity <= 1.0) {
            return Err(PnesError::InvalidParameter(format!("T^2 = {}", self.transmissivity)));
        }
        Ok(self.transmissivity.sqrt())
    }
}

/// A circuit together with the ideal state it approximates.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioPoint {
    /// Requested |C_n|^2.
    pub label: Vec<f64>,
    pub stages: Stages,
    /// Ideal output on the signal cutoff.
    pub target: PureState,
    pub ideal: PnesCoefficients,
}

impl ScenarioPoint {
    pub fn run(&self, cfg: &RunConfig) -> Result<SchemeResult> {
        self.stages.run(cfg)?.with_target(&self.target)
    }
}

/// |C_0|^2 = 0.1, 0.2, ..., 0.9.
pub fn n1_grid() -> Vec<f64> {
    (1..=9).map(|k| k as f64 / 10.0).collect()
}

/// (|C_0|^2, |C_1|^2, |C_2|^2) with |C_1|^2 = i/10, |C_2|^2 = j/10, i, j >= 1, i + j <= 9.
pub fn n2_grid() -> Vec<[f64; 3]> {
    let mut out = Vec::new();
    for i in 1..=8 {
        for j in 1..=(9 - i) {
            out.push([(10 - i - j) as f64 / 10.0, i as f64 / 10.0, j as f64 / 10.0]);
        }
    }
    out
}

fn split_pair(c0sq: f64) -> Result<(f64, f64)> {
    if !(c0sq > 0.0 && c0sq < 1.0) {
        return Err(PnesError::InvalidParameter(format!("|C0|^2 = {c0sq} outside (0, 1)")));
    }
    Ok((c0sq.sqrt(), (1.0 - c0sq).sqrt()))
}

fn signal(cut: SchemeCutoffs) -> Result<FockCutoffs> {
    FockCutoffs::uniform(2, cut.signal)
}

/// Single scheme-1 stage whose ideal operator (zero squeezing phase) sends vacuum to
/// C0|00> - C1|11>, which equals the requested state up to a local phase on mode a.
pub fn scheme1_n1_point(c0sq: f64, d: &CircuitDefaults, cut: SchemeCutoffs) -> Result<ScenarioPoint> {
    let (c0, c1) = split_pair(c0sq)?;
    let th = d.squeezing.tanh();
    let k = c0 / c1;
    let ratio = -(th * th + k * th) / (1.0 + k * th);
    let r = 1.0 / (1.0 + ratio * ratio).sqrt();
    let op = CoherentOpParams {
        t: C64::new(ratio * r, 0.0),
        r: C64::new(r, 0.0),
        xi: SqueezerParams::new(d.squeezing, 0.0)?,
    };
    let target = apply_ideal_on(&PureState::vacuum(signal(cut)?), &op)?.normalized()?;
    let t = d.t_amp()?;
    let stage = Scheme1StageParams::from_ideal(&op, d.s_tap, t, t, Scheme1Branch::Pd1Click)?;
    Ok(ScenarioPoint {
        label: vec![c0sq, 1.0 - c0sq],
        stages: Stages::Scheme1(vec![stage]),
        ideal: coefficients_of(&target)?,
        target,
    })
}

/// Single scheme-2 stage with odd factor a^dag and even factor (C0 a + C1 b^dag).
pub fn scheme2_n1_point(c0sq: f64, d: &CircuitDefaults, cut: SchemeCutoffs) -> Result<ScenarioPoint> {
    let (c0, c1) = split_pair(c0sq)?;
    let ideal = PnesCoefficients::from_real(&[c0, c1])?;
    let t = d.t_amp()?;
    let stage = Scheme2StageParams::from_ideal(
        &PairOpParams::real(0.0, 1.0),
        &PairOpParams::real(c0, c1),
        d.squeezing,
        d.squeezing,
        t,
        t,
        FirstBranch::Pd1,
        SecondBranch::Pd3,
    )?;
    Ok(ScenarioPoint {
        label: vec![c0sq, 1.0 - c0sq],
        stages: Stages::Scheme2(vec![stage]),
        target: make_pnes(&ideal, cut.signal)?,
        ideal,
    })
}

fn fit_points(
    target: &PnesCoefficients,
    kind: SchemeKind,
    mode: FitMode,
    d: &CircuitDefaults,
    cut: SchemeCutoffs,
) -> Result<Vec<ScenarioPoint>> {
    let opts = FitOptions { squeezing: d.squeezing, mode, ..FitOptions::default() };
    let t = d.t_amp()?;
    let label: Vec<f64> = target.magnitudes().iter().map(|m| m * m).collect();
    let mut out = Vec::new();
    for sol in fit_params_to_target(target, kind, &opts)? {
        let stages = match &sol.params {
            FitParams::Scheme1(ops) => Stages::Scheme1(
                ops.iter()
                    .map(|op| Scheme1StageParams::from_ideal(op, d.s_tap, t, t, Scheme1Branch::Pd1Click))
                    .collect::<Result<_>>()?,
            ),
            FitParams::Scheme2(ops) => Stages::Scheme2(
                ops.iter()
                    .map(|(odd, even)| {
                        Scheme2StageParams::from_ideal(
                            odd,
                            even,
                            d.squeezing,
                            d.squeezing,
                            t,
                            t,
                            FirstBranch::Pd1,
                            SecondBranch::Pd3,
                        )
                    })
                    .collect::<Result<_>>()?,
            ),
        };
        out.push(ScenarioPoint {
            label: label.clone(),
            stages,
            target: make_pnes(&sol.realized, cut.signal)?,
            ideal: sol.realized,
        });
    }
    Ok(out)
}

/// Every scheme-1 circuit (one per fit branch) whose ideal output matches `target`.
pub fn scheme1_point_from_fit(
    target: &PnesCoefficients,
    mode: FitMode,
    d: &CircuitDefaults,
    cut: SchemeCutoffs,
) -> Result<Vec<ScenarioPoint>> {
    fit_points(target, SchemeKind::Scheme1, mode, d, cut)
}

/// Every scheme-2 circuit (one per fit branch) whose ideal output matches `target`.
pub fn scheme2_point_from_fit(
    target: &PnesCoefficients,
    mode: FitMode,
    d: &CircuitDefaults,
    cut: SchemeCutoffs,
) -> Result<Vec<ScenarioPoint>> {
    fit_points(target, SchemeKind::Scheme2, mode, d, cut)
}

/// Keep the candidate with the highest output fidelity. Candidates are ranked with the
/// ancilla cutoff capped at 3 and no loss limit; only the winner is rerun under `cfg`.
pub fn best_branch(points: Vec<ScenarioPoint>, cfg: &RunConfig) -> Result<(ScenarioPoint, SchemeResult)> {
    let screen = RunConfig {
        cutoffs: SchemeCutoffs { ancilla: cfg.cutoffs.ancilla.min(3), ..cfg.cutoffs },
        loss_limit: f64::INFINITY,
        ..*cfg
    };
    let mut best: Option<(usize, f64)> = None;
    for (k, p) in points.iter().enumerate() {
        let f = if points.len() == 1 { 1.0 } else { p.run(&screen)?.fidelity_vs_target.unwrap_or(0.0) };
        if best.is_none_or(|(_, b)| f > b) {
            best = Some((k, f));
        }
    }
    let (k, _) = best.ok_or_else(|| PnesError::InvalidParameter("no candidate circuits".into()))?;
    let p = points.into_iter().nth(k).expect("index in range");
    let r = p.run(cfg)?;
    Ok((p, r))
}
