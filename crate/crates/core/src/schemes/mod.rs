//! Heralded optical circuits that prepare PNES one operator at a time.
//!
//! Scheme 1 (modes a, b signal; c, d, e ancilla) applies
//! S_ab^dag B_cd B_ad S_ae B_ac S_ab right to left and heralds on c, d, e.
//! Scheme 2 (ancillas c, d, e, f) applies B_ef B_ae S_bf B_cd B_bd S_ac with an
//! intermediate herald on (c, d) before the second half.

mod fit;
mod perturbative;
mod scenarios;
mod sweep;

pub use fit::{fit_params_to_target, FitMode, FitOptions, FitParams, FitSolution};
pub use perturbative::{perturbative_scheme1, perturbative_scheme2};
pub use scenarios::{
    best_branch, n1_grid, n2_grid, scheme1_n1_point, scheme1_point_from_fit, scheme2_n1_point,
    scheme2_point_from_fit, CircuitDefaults, ScenarioPoint,
};
pub use sweep::{bs_error_sweep, SweepRow};

use rayon::prelude::*;

use crate::error::{PnesError, Result};
use crate::fock::{fidelity_pure_vs_ensemble, FockCutoffs, PureState, StateEnsemble};
use crate::optics::{
    apply_beam_splitter, apply_two_mode_squeezer, herald, BeamSplitterParams, Detection, HeraldOutcome,
    OnOffDetector, SqueezerParams,
};
use crate::states::{CoherentOpParams, PairOpParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchemeKind {
    Scheme1,
    Scheme2,
}

/// Relative truncation loss above which a run is rejected.
pub const LOSS_LIMIT: f64 = 1e-6;
/// Eigenvalues of the stage output below this (relative) are dropped when compressing.
pub const COMPRESS_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SchemeCutoffs {
    pub signal: usize,
    pub ancilla: usize,
}

impl Default for SchemeCutoffs {
    fn default() -> Self {
        SchemeCutoffs { signal: 10, ancilla: 3 }
    }
}

impl SchemeCutoffs {
    pub fn new(signal: usize, ancilla: usize) -> Result<Self> {
        if signal < 1 || ancilla < 2 {
            return Err(PnesError::InvalidCutoffs(format!(
                "signal cutoff {signal} (>= 1), ancilla cutoff {ancilla} (>= 2)"
            )));
        }
        Ok(SchemeCutoffs { signal, ancilla })
    }
}

/// How a detector outcome projects the ancilla.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ClickModel {
    /// On-off detector with efficiency eta: click = 1 - (1-eta)^n.
    #[default]
    OnOff,
    /// Ideal single-photon projection: click = <1|, no click = <0|.
    SinglePhoton,
}

impl ClickModel {
    fn detection(self, click: bool) -> Detection {
        match (self, click) {
            (ClickModel::OnOff, true) => Detection::Click,
            (ClickModel::OnOff, false) => Detection::NoClick,
            (ClickModel::SinglePhoton, true) => Detection::Exactly(1),
            (ClickModel::SinglePhoton, false) => Detection::Exactly(0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunConfig {
    pub eta: f64,
    pub cutoffs: SchemeCutoffs,
    /// Model of the detectors behind the final beam splitters.
    pub click: ClickModel,
    /// Model of the scheme-1 tap detector on mode e.
    pub tap: ClickModel,
    /// Runs whose relative truncation loss exceeds this fail.
    pub loss_limit: f64,
}

impl RunConfig {
    pub fn new(eta: f64, cutoffs: SchemeCutoffs) -> Result<Self> {
        OnOffDetector::new(eta)?;
        Ok(RunConfig { eta, cutoffs, click: ClickModel::OnOff, tap: ClickModel::OnOff, loss_limit: LOSS_LIMIT })
    }

    pub fn with_tap(mut self, tap: ClickModel) -> Self {
        self.tap = tap;
        self
    }

    pub fn with_click(mut self, click: ClickModel) -> Self {
        self.click = click;
        self
    }

    fn detector(&self) -> Result<OnOffDetector> {
        OnOffDetector::new(self.eta)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme1Branch {
    /// Click on d, no click on c.
    Pd1Click,
    /// Click on c, no click on d.
    Pd2Click,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scheme1StageParams {
    pub xi: SqueezerParams,
    pub s_tap: f64,
    /// Amplitude transmissivities of BS1 (a, c) and BS2 (a, d).
    pub t1: f64,
    pub t2: f64,
    /// BS3 transmission; its reflection is sqrt(1 - t_n^2) >= 0.
    pub t_n: f64,
    pub branch: Scheme1Branch,
}

fn check_transmissivity(name: &str, t: f64) -> Result<()> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(PnesError::InvalidParameter(format!("{name} = {t} outside (0, 1]")));
    }
    Ok(())
}

fn check_split(name: &str, t: f64) -> Result<()> {
    if !(t.abs() <= 1.0) {
        return Err(PnesError::InvalidParameter(format!("{name} = {t} outside [-1, 1]")));
    }
    Ok(())
}

impl Scheme1StageParams {
    pub fn validate(&self) -> Result<()> {
        check_transmissivity("T1", self.t1)?;
        check_transmissivity("T2", self.t2)?;
        check_split("t_n", self.t_n)?;
        if !(self.s_tap >= 0.0) {
            return Err(PnesError::InvalidParameter(format!("s_tap = {}", self.s_tap)));
        }
        SqueezerParams::new(self.xi.s, self.xi.phi)?;
        Ok(())
    }

    /// Circuit that realizes the ideal operator `op` to first order. On the PD2 branch the
    /// realized pair is (-r_n, t_n), so the BS3 setting is rotated accordingly.
    pub fn from_ideal(op: &CoherentOpParams, s_tap: f64, t1: f64, t2: f64, branch: Scheme1Branch) -> Result<Self> {
        if op.t.im.abs() > 1e-12 || op.r.im.abs() > 1e-12 {
            return Err(PnesError::InvalidParameter("circuit needs real t and r".into()));
        }
        let (t, r) = (op.t.re, op.r.re);
        let (tn, rn) = match branch {
            Scheme1Branch::Pd1Click => (t, r),
            Scheme1Branch::Pd2Click => (r, -t),
        };
        let (tn, rn) = if rn < 0.0 { (-tn, -rn) } else { (tn, rn) };
        let norm = (tn * tn + rn * rn).sqrt();
        let p = Scheme1StageParams { xi: op.xi, s_tap, t1, t2, t_n: tn / norm, branch };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FirstBranch {
    /// Click on d, no click on c.
    Pd1,
    /// Click on c, no click on d.
    Pd2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SecondBranch {
    /// Click on f, no click on e.
    Pd3,
    /// Click on e, no click on f.
    Pd4,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scheme2StageParams {
    pub s1: f64,
    pub s2: f64,
    pub t1: f64,
    pub t2: f64,
    /// BS3 (d, c) and BS4 (f, e) transmissions; reflections are sqrt(1 - t^2) >= 0.
    pub t_odd: f64,
    pub t_even: f64,
    pub branch_first: FirstBranch,
    pub branch_second: SecondBranch,
}

impl Scheme2StageParams {
    pub fn validate(&self) -> Result<()> {
        check_transmissivity("T1", self.t1)?;
        check_transmissivity("T2", self.t2)?;
        check_split("t_odd", self.t_odd)?;
        check_split("t_even", self.t_even)?;
        SqueezerParams::new(self.s1, 0.0)?;
        SqueezerParams::new(self.s2, 0.0)?;
        Ok(())
    }

    /// Circuit that realizes (t_e a + r_e b^dag)(t_o b + r_o a^dag) to first order.
    /// The first half realizes (t_odd, r_odd) on PD1 and (r_odd, -t_odd) on PD2; the
    /// second half realizes (r_even, t_even) on PD3 and (-t_even, r_even) on PD4.
    pub fn from_ideal(
        odd: &PairOpParams,
        even: &PairOpParams,
        s1: f64,
        s2: f64,
        t1: f64,
        t2: f64,
        branch_first: FirstBranch,
        branch_second: SecondBranch,
    ) -> Result<Self> {
        let real = |p: &PairOpParams| -> Result<(f64, f64)> {
            if p.t.im.abs() > 1e-12 || p.r.im.abs() > 1e-12 {
                return Err(PnesError::InvalidParameter("circuit needs real t and r".into()));
            }
            Ok((p.t.re, p.r.re))
        };
        let norm = |(t, r): (f64, f64)| -> f64 {
            let (t, r) = if r < 0.0 { (-t, -r) } else { (t, r) };
            t / (t * t + r * r).sqrt()
        };
        let (to, ro) = real(odd)?;
        let (te, re) = real(even)?;
        let t_odd = match branch_first {
            FirstBranch::Pd1 => norm((to, ro)),
            FirstBranch::Pd2 => norm((-ro, to)),
        };
        let t_even = match branch_second {
            SecondBranch::Pd3 => norm((re, te)),
            SecondBranch::Pd4 => norm((-te, re)),
        };
        let p = Scheme2StageParams { s1, s2, t1, t2, t_odd, t_even, branch_first, branch_second };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchemeResult {
    pub output: StateEnsemble,
    pub success_probability: f64,
    pub fidelity_vs_target: Option<f64>,
    pub truncation_loss: f64,
}

impl SchemeResult {
    /// Record the fidelity of the output against `target`.
    pub fn with_target(mut self, target: &PureState) -> Result<Self> {
        self.fidelity_vs_target = Some(fidelity_pure_vs_ensemble(target, &self.output)?);
        Ok(self)
    }
}

/// Click flags for the three scheme-1 detectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Scheme1Pattern {
    pub c: bool,
    pub d: bool,
    pub e: bool,
}

impl From<Scheme1Branch> for Scheme1Pattern {
    fn from(b: Scheme1Branch) -> Self {
        match b {
            Scheme1Branch::Pd1Click => Scheme1Pattern { c: false, d: true, e: true },
            Scheme1Branch::Pd2Click => Scheme1Pattern { c: true, d: false, e: true },
        }
    }
}

/// Members carry absolute probability weights; states are normalized.
type Members = Vec<(f64, PureState)>;

fn herald_members(members: Members, outcomes: &[HeraldOutcome], det: OnOffDetector) -> Result<Members> {
    let mut out = Vec::new();
    for (w, s) in members {
        match herald(&s, outcomes, det) {
            Ok((ens, p)) => out.extend(ens.into_members().into_iter().map(|(w2, s2)| (w * p * w2, s2))),
            Err(PnesError::ZeroProbability) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

fn signal_cutoffs(cfg: &RunConfig) -> Result<FockCutoffs> {
    FockCutoffs::uniform(2, cfg.cutoffs.signal)
}

fn fit_signal(s: &PureState, cfg: &RunConfig) -> Result<PureState> {
    let cut = signal_cutoffs(cfg)?;
    if s.cutoffs() == &cut {
        Ok(s.clone())
    } else {
        s.resized(cut)
    }
}

fn s1_member(psi: &PureState, p: &Scheme1StageParams, pat: Scheme1Pattern, cfg: &RunConfig) -> Result<Members> {
    let ca = cfg.cutoffs.ancilla;
    let det = cfg.detector()?;
    // a0 b1
    let s = apply_two_mode_squeezer(psi, 0, 1, p.xi)?;
    let s = s.with_vacuum_mode(ca)?; // c2
    let s = apply_beam_splitter(&s, 0, 2, BeamSplitterParams::real(p.t1)?)?;
    let s = s.with_vacuum_mode(ca)?; // e3
    let s = apply_two_mode_squeezer(&s, 0, 3, SqueezerParams::new(p.s_tap, 0.0)?)?;
    let tap = [HeraldOutcome::new(3, cfg.tap.detection(pat.e))];
    let mut out = Vec::new();
    for (w, s) in herald_members(vec![(1.0, s)], &tap, det)? {
        let s = s.with_vacuum_mode(ca)?; // d3
        let s = apply_beam_splitter(&s, 0, 3, BeamSplitterParams::real(p.t2)?)?;
        let s = apply_beam_splitter(&s, 3, 2, BeamSplitterParams::real(p.t_n)?)?;
        let outcomes = [
            HeraldOutcome::new(2, cfg.click.detection(pat.c)),
            HeraldOutcome::new(3, cfg.click.detection(pat.d)),
        ];
        for (w2, s2) in herald_members(vec![(w, s)], &outcomes, det)? {
            out.push((w2, apply_two_mode_squeezer(&s2, 0, 1, p.xi.inverse())?));
        }
    }
    Ok(out)
}

fn s2_member(psi: &PureState, p: &Scheme2StageParams, cfg: &RunConfig) -> Result<Members> {
    let ca = cfg.cutoffs.ancilla;
    let det = cfg.detector()?;
    let s = psi.with_vacuum_mode(ca)?; // c2
    let s = apply_two_mode_squeezer(&s, 0, 2, SqueezerParams::new(p.s1, 0.0)?)?;
    let s = s.with_vacuum_mode(ca)?; // d3
    let s = apply_beam_splitter(&s, 1, 3, BeamSplitterParams::real(p.t1)?)?;
    let s = apply_beam_splitter(&s, 3, 2, BeamSplitterParams::real(p.t_odd)?)?;
    let (c_click, d_click) = match p.branch_first {
        FirstBranch::Pd1 => (false, true),
        FirstBranch::Pd2 => (true, false),
    };
    let first = [
        HeraldOutcome::new(2, cfg.click.detection(c_click)),
        HeraldOutcome::new(3, cfg.click.detection(d_click)),
    ];
    let (e_click, f_click) = match p.branch_second {
        SecondBranch::Pd3 => (false, true),
        SecondBranch::Pd4 => (true, false),
    };
    let mut out = Vec::new();
    for (w, s) in herald_members(vec![(1.0, s)], &first, det)? {
        let s = s.with_vacuum_mode(ca)?; // f2
        let s = apply_two_mode_squeezer(&s, 1, 2, SqueezerParams::new(p.s2, 0.0)?)?;
        let s = s.with_vacuum_mode(ca)?; // e3
        let s = apply_beam_splitter(&s, 0, 3, BeamSplitterParams::real(p.t2)?)?;
        let s = apply_beam_splitter(&s, 2, 3, BeamSplitterParams::real(p.t_even)?)?;
        let second = [
            HeraldOutcome::new(3, cfg.click.detection(e_click)),
            HeraldOutcome::new(2, cfg.click.detection(f_click)),
        ];
        out.extend(herald_members(vec![(w, s)], &second, det)?);
    }
    Ok(out)
}

/// Run one stage over every input member and merge; returns the compressed
/// conditional output and the stage success probability.
fn run_stage<F>(input: &StateEnsemble, cfg: &RunConfig, member: F) -> Result<(StateEnsemble, f64)>
where
    F: Fn(&PureState) -> Result<Members> + Sync,
{
    let parts: Vec<Result<Members>> = input
        .iter()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(w, s)| {
            let s = fit_signal(s, cfg)?;
            Ok(member(&s)?.into_iter().map(|(w2, s2)| (w * w2, s2)).collect())
        })
        .collect();
    let mut all = Vec::new();
    for p in parts {
        all.extend(p?);
    }
    let prob: f64 = all.iter().map(|(w, _)| w).sum();
    if !(prob > 0.0) {
        return Err(PnesError::ZeroProbability);
    }
    let ens = StateEnsemble::new(all)?;
    let ens = if ens.len() > 1 { ens.compress(COMPRESS_TOL)? } else { ens };
    Ok((ens, prob))
}

fn finish(output: StateEnsemble, prob: f64, cfg: &RunConfig) -> Result<SchemeResult> {
    let loss = output.truncation_loss();
    if loss > cfg.loss_limit {
        return Err(PnesError::TruncationLoss { loss, limit: cfg.loss_limit });
    }
    Ok(SchemeResult { output, success_probability: prob, fidelity_vs_target: None, truncation_loss: loss })
}

fn vacuum_input(cfg: &RunConfig) -> Result<StateEnsemble> {
    StateEnsemble::pure(PureState::vacuum(signal_cutoffs(cfg)?))
}

/// One scheme-1 stage with an arbitrary click pattern.
pub fn scheme1_stage(
    input: &StateEnsemble,
    p: &Scheme1StageParams,
    pattern: Scheme1Pattern,
    cfg: &RunConfig,
) -> Result<(StateEnsemble, f64)> {
    p.validate()?;
    run_stage(input, cfg, |s| s1_member(s, p, pattern, cfg))
}

/// Chain scheme-1 stages from vacuum; success probabilities multiply.
pub fn scheme1_run(stages: &[Scheme1StageParams], cfg: &RunConfig) -> Result<SchemeResult> {
    scheme1_run_from(&vacuum_input(cfg)?, stages, cfg)
}

pub fn scheme1_run_from(input: &StateEnsemble, stages: &[Scheme1StageParams], cfg: &RunConfig) -> Result<SchemeResult> {
    if stages.is_empty() {
        return Err(PnesError::InvalidParameter("no stages".into()));
    }
    let mut state = input.clone();
    let mut prob = 1.0;
    for p in stages {
        let (s, q) = scheme1_stage(&state, p, p.branch.into(), cfg)?;
        state = s;
        prob *= q;
    }
    finish(state, prob, cfg)
}

pub fn scheme2_stage(input: &StateEnsemble, p: &Scheme2StageParams, cfg: &RunConfig) -> Result<(StateEnsemble, f64)> {
    p.validate()?;
    run_stage(input, cfg, |s| s2_member(s, p, cfg))
}

/// Chain scheme-2 stages from vacuum; success probabilities multiply.
pub fn scheme2_run(stages: &[Scheme2StageParams], cfg: &RunConfig) -> Result<SchemeResult> {
    scheme2_run_from(&vacuum_input(cfg)?, stages, cfg)
}

pub fn scheme2_run_from(input: &StateEnsemble, stages: &[Scheme2StageParams], cfg: &RunConfig) -> Result<SchemeResult> {
    if stages.is_empty() {
        return Err(PnesError::InvalidParameter("no stages".into()));
    }
    let mut state = input.clone();
    let mut prob = 1.0;
    for p in stages {
        let (s, q) = scheme2_stage(&state, p, cfg)?;
        state = s;
        prob *= q;
    }
    finish(state, prob, cfg)
}

/// Stage list for either scheme.
#[derive(Clone, Debug, PartialEq)]
pub enum Stages {
    Scheme1(Vec<Scheme1StageParams>),
    Scheme2(Vec<Scheme2StageParams>),
}

impl Stages {
    pub fn run(&self, cfg: &RunConfig) -> Result<SchemeResult> {
        match self {
            Stages::Scheme1(s) => scheme1_run(s, cfg),
            Stages::Scheme2(s) => scheme2_run(s, cfg),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Stages::Scheme1(s) => s.len(),
            Stages::Scheme2(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> SchemeKind {
        match self {
            Stages::Scheme1(_) => SchemeKind::Scheme1,
            Stages::Scheme2(_) => SchemeKind::Scheme2,
        }
    }
}
