//! Scenario files: which circuit to run, on what grid, and what to report.

use std::path::PathBuf;

use pnes::fock::{FockCutoffs, PureState};
use pnes::optics::SqueezerParams;
use pnes::schemes::{
    perturbative_scheme1, perturbative_scheme2, ClickModel, CircuitDefaults, FirstBranch, FitMode, RunConfig,
    ScenarioPoint, Scheme1Branch, Scheme1StageParams, Scheme2StageParams, SchemeCutoffs, SecondBranch, Stages,
};
use pnes::states::{
    coefficients_of, make_pnes, make_tmss, pnes_from_ops, pnes_from_pair_ops, tmss_cutoff, CoherentOpParams,
    PairOpParams, PnesCoefficients, TMSS_TAIL,
};
use pnes::C64;
use serde::Deserialize;

use crate::CliError;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// 1 or 2; absent for a bare resource state.
    pub scheme: Option<u8>,
    pub eta: Option<f64>,
    pub cutoffs: Option<CutoffConfig>,
    #[serde(default)]
    pub circuit: CircuitConfig,
    pub target: Option<TargetConfig>,
    #[serde(default)]
    pub ops: Vec<OpConfig>,
    #[serde(default)]
    pub pair_ops: Vec<PairOpConfig>,
    #[serde(default)]
    pub stages: Vec<StageConfig>,
    pub grid: Option<GridConfig>,
    pub deltas: Option<Vec<f64>>,
    #[serde(default)]
    pub outputs: Vec<Output>,
    pub output_path: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffConfig {
    pub signal: usize,
    pub ancilla: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Click {
    OnOff,
    SinglePhoton,
}

impl From<Click> for ClickModel {
    fn from(c: Click) -> Self {
        match c {
            Click::OnOff => ClickModel::OnOff,
            Click::SinglePhoton => ClickModel::SinglePhoton,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Pd1,
    Pd2,
    Pd3,
    Pd4,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CircuitConfig {
    pub squeezing: f64,
    pub s_tap: f64,
    /// Intensity transmissivity T^2 of BS1 and BS2.
    pub transmissivity: f64,
    pub click: Click,
    pub tap: Click,
    pub branch: Branch,
    pub second_branch: Branch,
}

impl Default for CircuitConfig {
    fn default() -> Self {
        let d = CircuitDefaults::default();
        CircuitConfig {
            squeezing: d.squeezing,
            s_tap: d.s_tap,
            transmissivity: d.transmissivity,
            click: Click::OnOff,
            tap: Click::SinglePhoton,
            branch: Branch::Pd1,
            second_branch: Branch::Pd3,
        }
    }
}

impl CircuitConfig {
    pub fn defaults(&self) -> CircuitDefaults {
        CircuitDefaults { squeezing: self.squeezing, s_tap: self.s_tap, transmissivity: self.transmissivity }
    }

    fn t_amp(&self) -> f64 {
        self.transmissivity.sqrt()
    }

    fn scheme1_branch(&self) -> Result<Scheme1Branch, CliError> {
        match self.branch {
            Branch::Pd1 => Ok(Scheme1Branch::Pd1Click),
            Branch::Pd2 => Ok(Scheme1Branch::Pd2Click),
            b => Err(CliError::Validation(format!("scheme 1 branch must be pd1 or pd2, got {b:?}"))),
        }
    }

    fn first_branch(&self, b: Branch) -> Result<FirstBranch, CliError> {
        match b {
            Branch::Pd1 => Ok(FirstBranch::Pd1),
            Branch::Pd2 => Ok(FirstBranch::Pd2),
            b => Err(CliError::Validation(format!("first branch must be pd1 or pd2, got {b:?}"))),
        }
    }

    fn second_branch(&self, b: Branch) -> Result<SecondBranch, CliError> {
        match b {
            Branch::Pd3 => Ok(SecondBranch::Pd3),
            Branch::Pd4 => Ok(SecondBranch::Pd4),
            b => Err(CliError::Validation(format!("second branch must be pd3 or pd4, got {b:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fit {
    #[default]
    Exact,
    Magnitudes,
}

impl From<Fit> for FitMode {
    fn from(f: Fit) -> Self {
        match f {
            Fit::Exact => FitMode::Exact,
            Fit::Magnitudes => FitMode::Magnitudes,
        }
    }
}

/// A PNES given by real amplitudes, or a TMSS given by its squeezing.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub coefficients: Option<Vec<f64>>,
    pub tmss: Option<f64>,
    #[serde(default)]
    pub fit: Fit,
}

/// Scheme-1 ideal operator; `s` defaults to the circuit squeezing.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpConfig {
    pub t: f64,
    pub r: f64,
    pub s: Option<f64>,
    #[serde(default)]
    pub phi: f64,
}

/// Scheme-2 factors as (t, r) pairs.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairOpConfig {
    pub odd: [f64; 2],
    pub even: [f64; 2],
}

/// Explicit circuit settings for one stage. Unset fields fall back to `circuit`.
#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageConfig {
    pub squeezing: Option<f64>,
    pub phi: Option<f64>,
    pub s_tap: Option<f64>,
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    pub t_n: Option<f64>,
    pub s1: Option<f64>,
    pub s2: Option<f64>,
    pub t_odd: Option<f64>,
    pub t_even: Option<f64>,
    pub branch: Option<Branch>,
    pub second_branch: Option<Branch>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// |C0|^2 = 0.1 .. 0.9.
    N1,
    /// The N=2 grid plus the teleportation optimum.
    N2,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub family: Option<Family>,
    /// Explicit targets as photon-number weights |C_n|^2.
    pub weights: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub fit: Fit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Output {
    Fidelity,
    Probability,
    Loss,
    Coefficients,
    Entropy,
    Epr,
    Teleport,
    Bell,
}

impl Output {
    pub fn name(self) -> &'static str {
        match self {
            Output::Fidelity => "fidelity",
            Output::Probability => "probability",
            Output::Loss => "loss",
            Output::Coefficients => "coefficients",
            Output::Entropy => "entropy",
            Output::Epr => "epr",
            Output::Teleport => "teleport",
            Output::Bell => "bell",
        }
    }
}

/// Shipped parameter sets, addressable by name.
pub const PRESETS: &[(&str, &str)] = &[
    ("scheme1-teleport", include_str!("../presets/scheme1-teleport.toml")),
    ("scheme1-bell", include_str!("../presets/scheme1-bell.toml")),
    ("scheme2-teleport", include_str!("../presets/scheme2-teleport.toml")),
    ("scheme2-bell", include_str!("../presets/scheme2-bell.toml")),
    ("scheme1-n1", include_str!("../presets/scheme1-n1.toml")),
    ("scheme2-n1", include_str!("../presets/scheme2-n1.toml")),
    ("scheme1-n2", include_str!("../presets/scheme1-n2.toml")),
    ("scheme2-n2", include_str!("../presets/scheme2-n2.toml")),
    ("tmss-teleport", include_str!("../presets/tmss-teleport.toml")),
];

pub fn preset(name: &str) -> Result<ScenarioConfig, CliError> {
    let (_, text) = PRESETS.iter().find(|(n, _)| *n == name).ok_or_else(|| {
        let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
        CliError::Validation(format!("unknown preset {name:?}; known: {}", names.join(", ")))
    })?;
    ScenarioConfig::parse(text)
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn pnes_err(e: pnes::PnesError) -> CliError {
    CliError::Validation(e.to_string())
}

/// Command-line overrides applied on top of a file.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub eta: Option<f64>,
    pub cutoff_signal: Option<usize>,
    pub cutoff_ancilla: Option<usize>,
}

pub const DEFAULT_ETA: f64 = 0.66;

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| invalid(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(eta) = self.eta {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(invalid(format!("eta = {eta} outside (0, 1]")));
            }
        }
        let c = &self.circuit;
        if !(c.transmissivity > 0.0 && c.transmissivity <= 1.0) {
            return Err(invalid(format!("transmissivity = {} outside (0, 1]", c.transmissivity)));
        }
        for (name, v) in [("squeezing", c.squeezing), ("s_tap", c.s_tap)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        if let Some(t) = &self.target {
            match (&t.coefficients, t.tmss) {
                (Some(v), None) => {
                    if v.is_empty() || v.iter().all(|x| *x == 0.0) || v.iter().any(|x| !x.is_finite()) {
                        return Err(invalid("target coefficients must be finite and not all zero"));
                    }
                }
                (None, Some(s)) if s >= 0.0 && s.is_finite() => {
                    if self.scheme.is_some() {
                        return Err(invalid("a TMSS target is only valid without a scheme"));
                    }
                }
                _ => return Err(invalid("target needs exactly one of coefficients or tmss (s >= 0)")),
            }
        }
        if let Some(d) = &self.deltas {
            if d.iter().any(|x| !x.is_finite()) {
                return Err(invalid("deltas must be finite"));
            }
        }
        let sources = [!self.ops.is_empty(), !self.pair_ops.is_empty(), !self.stages.is_empty(), self.grid.is_some()]
            .iter()
            .filter(|b| **b)
            .count();
        match self.scheme {
            None => {
                if sources > 0 {
                    return Err(invalid("ops, pair_ops, stages and grid need a scheme"));
                }
                if self.target.is_none() {
                    return Err(invalid("without a scheme a target resource is required"));
                }
                if let Some(o) = self.outputs.iter().find(|o| {
                    matches!(o, Output::Fidelity | Output::Probability | Output::Loss | Output::Coefficients)
                }) {
                    return Err(invalid(format!("output {} needs a scheme", o.name())));
                }
            }
            Some(k @ (1 | 2)) => {
                if sources > 1 {
                    return Err(invalid("give only one of ops, pair_ops, stages or grid"));
                }
                if sources == 0 && self.target.is_none() {
                    return Err(invalid("nothing to run: give ops, pair_ops, stages, grid or a target"));
                }
                if k == 1 && !self.pair_ops.is_empty() {
                    return Err(invalid("pair_ops belong to scheme 2"));
                }
                if k == 2 && !self.ops.is_empty() {
                    return Err(invalid("ops belong to scheme 1"));
                }
                if let Some(g) = &self.grid {
                    if g.family.is_some() == g.weights.is_some() {
                        return Err(invalid("grid needs exactly one of family or weights"));
                    }
                }
                if self.outputs.contains(&Output::Entropy) {
                    return Err(invalid("entropy is defined for pure resources only; run without a scheme"));
                }
            }
            Some(k) => return Err(invalid(format!("scheme must be 1 or 2, got {k}"))),
        }
        Ok(())
    }

    pub fn outputs(&self) -> Vec<Output> {
        if !self.outputs.is_empty() {
            return self.outputs.clone();
        }
        match self.scheme {
            None => vec![Output::Entropy, Output::Epr, Output::Teleport],
            Some(_) => vec![Output::Fidelity, Output::Probability, Output::Loss, Output::Coefficients],
        }
    }

    pub fn cutoffs(&self, o: &Overrides) -> Result<SchemeCutoffs, CliError> {
        let base = self.cutoffs.map_or(SchemeCutoffs::default(), |c| SchemeCutoffs { signal: c.signal, ancilla: c.ancilla });
        SchemeCutoffs::new(o.cutoff_signal.unwrap_or(base.signal), o.cutoff_ancilla.unwrap_or(base.ancilla))
            .map_err(pnes_err)
    }

    pub fn run_config(&self, o: &Overrides) -> Result<RunConfig, CliError> {
        let eta = o.eta.or(self.eta).unwrap_or(DEFAULT_ETA);
        Ok(RunConfig::new(eta, self.cutoffs(o)?)
            .map_err(pnes_err)?
            .with_click(self.circuit.click.into())
            .with_tap(self.circuit.tap.into()))
    }

    /// The resource state of a scheme-less config.
    pub fn resource(&self) -> Result<(String, PureState), CliError> {
        let t = self.target.as_ref().ok_or_else(|| invalid("no target"))?;
        resource_state(t.coefficients.as_deref(), t.tmss)
    }

    pub fn target_coefficients(&self) -> Result<Option<PnesCoefficients>, CliError> {
        match self.target.as_ref().and_then(|t| t.coefficients.as_ref()) {
            Some(c) => Ok(Some(PnesCoefficients::from_real(c).map_err(pnes_err)?)),
            None => Ok(None),
        }
    }

    /// Circuits built directly from ops, pair_ops or stages. Grid and fitted targets are
    /// handled by the caller because choosing among fit branches needs full runs.
    pub fn direct_point(&self, cut: SchemeCutoffs) -> Result<Option<ScenarioPoint>, CliError> {
        let c = &self.circuit;
        let t = c.t_amp();
        let signal = FockCutoffs::uniform(2, cut.signal).map_err(pnes_err)?;
        if !self.ops.is_empty() {
            let ops: Vec<CoherentOpParams> = self
                .ops
                .iter()
                .map(|o| {
                    Ok(CoherentOpParams {
                        t: C64::new(o.t, 0.0),
                        r: C64::new(o.r, 0.0),
                        xi: SqueezerParams::new(o.s.unwrap_or(c.squeezing), o.phi).map_err(pnes_err)?,
                    })
                })
                .collect::<Result<_, CliError>>()?;
            let ideal = pnes_from_ops(&ops).map_err(pnes_err)?;
            let branch = c.scheme1_branch()?;
            let stages = ops
                .iter()
                .map(|op| Scheme1StageParams::from_ideal(op, c.s_tap, t, t, branch))
                .collect::<pnes::Result<_>>()
                .map_err(pnes_err)?;
            return point(Stages::Scheme1(stages), ideal, cut.signal).map(Some);
        }
        if !self.pair_ops.is_empty() {
            let ops: Vec<(PairOpParams, PairOpParams)> = self
                .pair_ops
                .iter()
                .map(|p| (PairOpParams::real(p.odd[0], p.odd[1]), PairOpParams::real(p.even[0], p.even[1])))
                .collect();
            let ideal = pnes_from_pair_ops(&ops).map_err(pnes_err)?;
            let (b1, b2) = (c.first_branch(c.branch)?, c.second_branch(c.second_branch)?);
            let stages = ops
                .iter()
                .map(|(odd, even)| Scheme2StageParams::from_ideal(odd, even, c.squeezing, c.squeezing, t, t, b1, b2))
                .collect::<pnes::Result<_>>()
                .map_err(pnes_err)?;
            return point(Stages::Scheme2(stages), ideal, cut.signal).map(Some);
        }
        if !self.stages.is_empty() {
            // the reference output is the first-order (ideal-limit) prediction
            let mut state = PureState::vacuum(signal);
            let stages = if self.scheme == Some(1) {
                let v: Vec<Scheme1StageParams> =
                    self.stages.iter().map(|s| self.scheme1_stage(s)).collect::<Result<_, _>>()?;
                for p in &v {
                    state = perturbative_scheme1(&state, p).and_then(PureState::normalized).map_err(pnes_err)?;
                }
                Stages::Scheme1(v)
            } else {
                let v: Vec<Scheme2StageParams> =
                    self.stages.iter().map(|s| self.scheme2_stage(s)).collect::<Result<_, _>>()?;
                for p in &v {
                    state = perturbative_scheme2(&state, p).and_then(PureState::normalized).map_err(pnes_err)?;
                }
                Stages::Scheme2(v)
            };
            let ideal = coefficients_of(&state).map_err(pnes_err)?;
            return point(stages, ideal, cut.signal).map(Some);
        }
        Ok(None)
    }

    fn scheme1_stage(&self, s: &StageConfig) -> Result<Scheme1StageParams, CliError> {
        let c = &self.circuit;
        let branch = match s.branch {
            Some(b) => CircuitConfig { branch: b, ..c.clone() }.scheme1_branch()?,
            None => c.scheme1_branch()?,
        };
        let p = Scheme1StageParams {
            xi: SqueezerParams::new(s.squeezing.unwrap_or(c.squeezing), s.phi.unwrap_or(0.0)).map_err(pnes_err)?,
            s_tap: s.s_tap.unwrap_or(c.s_tap),
            t1: s.t1.unwrap_or(c.t_amp()),
            t2: s.t2.unwrap_or(c.t_amp()),
            t_n: s.t_n.ok_or_else(|| invalid("scheme-1 stage needs t_n"))?,
            branch,
        };
        p.validate().map_err(pnes_err)?;
        Ok(p)
    }

    fn scheme2_stage(&self, s: &StageConfig) -> Result<Scheme2StageParams, CliError> {
        let c = &self.circuit;
        let p = Scheme2StageParams {
            s1: s.s1.unwrap_or(c.squeezing),
            s2: s.s2.unwrap_or(c.squeezing),
            t1: s.t1.unwrap_or(c.t_amp()),
            t2: s.t2.unwrap_or(c.t_amp()),
            t_odd: s.t_odd.ok_or_else(|| invalid("scheme-2 stage needs t_odd"))?,
            t_even: s.t_even.ok_or_else(|| invalid("scheme-2 stage needs t_even"))?,
            branch_first: c.first_branch(s.branch.unwrap_or(c.branch))?,
            branch_second: c.second_branch(s.second_branch.unwrap_or(c.second_branch))?,
        };
        p.validate().map_err(pnes_err)?;
        Ok(p)
    }
}

fn point(stages: Stages, ideal: PnesCoefficients, signal: usize) -> Result<ScenarioPoint, CliError> {
    let target = make_pnes(&ideal, signal).map_err(pnes_err)?;
    let label = ideal.magnitudes().iter().map(|m| m * m).collect();
    Ok(ScenarioPoint { label, stages, target, ideal })
}

/// A named PNES or TMSS resource.
pub fn resource_state(coefficients: Option<&[f64]>, tmss: Option<f64>) -> Result<(String, PureState), CliError> {
    match (coefficients, tmss) {
        (Some(c), None) => {
            let pc = PnesCoefficients::from_real(c).map_err(pnes_err)?;
            let n = pc.n_max();
            Ok((format!("pnes N={n}"), make_pnes(&pc, n.max(1)).map_err(pnes_err)?))
        }
        (None, Some(s)) => {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(invalid(format!("squeezing s = {s} must be finite and >= 0")));
            }
            let st = make_tmss(s, tmss_cutoff(s, TMSS_TAIL)).map_err(pnes_err)?;
            Ok((format!("tmss s={s}"), st))
        }
        _ => Err(invalid("give exactly one of coefficients or tmss squeezing")),
    }
}
