//! Beam splitters, two-mode squeezers and heralding with on-off detectors.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{PnesError, Result};
use crate::fock::{pair_bases, Ensemble, FockCutoffs, PureState, StateEnsemble};

const UNIT_TOL: f64 = 1e-12;
/// Herald slices lighter than this fraction of the input are dropped.
const SLICE_FLOOR: f64 = 1e-30;

/// Beam-splitter amplitudes with real transmission `t` and complex reflection `r`.
///
/// On modes (i, j): |1,0> -> t|1,0> - r|0,1> and |0,1> -> t|0,1> + r*|1,0>.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeamSplitterParams {
    t: f64,
    r: C64,
}

impl BeamSplitterParams {
    pub fn new(t: f64, r: C64) -> Result<Self> {
        let n = t * t + r.norm_sqr();
        if !t.is_finite() || !r.re.is_finite() || !r.im.is_finite() || (n - 1.0).abs() > UNIT_TOL {
            return Err(PnesError::InvalidParameter(format!(
                "beam splitter |t|^2 + |r|^2 = {n}"
            )));
        }
        Ok(BeamSplitterParams { t, r })
    }

    /// Real transmission `t` in [-1, 1] with r = sqrt(1 - t^2) >= 0.
    pub fn real(t: f64) -> Result<Self> {
        if !(t.abs() <= 1.0) {
            return Err(PnesError::InvalidParameter(format!(
                "transmission {t} outside [-1, 1]"
            )));
        }
        Self::new(t, C64::new((1.0 - t * t).max(0.0).sqrt(), 0.0))
    }

    /// Intensity transmissivity T^2 in [0, 1].
    pub fn from_transmissivity(t_sq: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t_sq) {
            return Err(PnesError::InvalidParameter(format!(
                "transmissivity {t_sq} outside [0, 1]"
            )));
        }
        Self::real(t_sq.sqrt())
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn r(&self) -> C64 {
        self.r
    }

    /// (theta, phi) of the generator theta (e^{i phi} a_i^dag a_j - h.c.).
    pub fn angles(&self) -> (f64, f64) {
        let rr = self.r.norm();
        let theta = rr.atan2(self.t);
        let phi = if rr > 0.0 { -self.r.arg() } else { 0.0 };
        (theta, phi)
    }
}

/// Two-mode squeezing xi = s e^{i phi}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SqueezerParams {
    pub s: f64,
    pub phi: f64,
}

impl SqueezerParams {
    pub fn new(s: f64, phi: f64) -> Result<Self> {
        if !(s >= 0.0) || !s.is_finite() || !phi.is_finite() {
            return Err(PnesError::InvalidParameter(format!(
                "squeezing s = {s}, phi = {phi}"
            )));
        }
        Ok(SqueezerParams { s, phi })
    }

    pub fn xi(&self) -> C64 {
        C64::from_polar(self.s, self.phi)
    }

    /// S(xi)^dag = S(-xi).
    pub fn inverse(&self) -> Self {
        SqueezerParams {
            s: self.s,
            phi: self.phi + std::f64::consts::PI,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OnOffDetector {
    eta: f64,
}

impl OnOffDetector {
    pub fn new(eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(PnesError::InvalidParameter(format!(
                "efficiency {eta} outside [0, 1]"
            )));
        }
        Ok(OnOffDetector { eta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Probability of the given detection for an n-photon input.
    pub fn weight(&self, detection: Detection, n: usize) -> f64 {
        let none = (1.0 - self.eta).powi(n as i32);
        match detection {
            Detection::NoClick => none,
            Detection::Click => 1.0 - none,
            Detection::Exactly(k) => (k == n) as u8 as f64,
        }
    }
}

/// `Exactly(k)` is an ideal number-resolving projection and ignores the efficiency.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Detection {
    NoClick,
    Click,
    Exactly(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HeraldOutcome {
    pub mode: usize,
    pub detection: Detection,
}

impl HeraldOutcome {
    pub fn new(mode: usize, detection: Detection) -> Self {
        HeraldOutcome { mode, detection }
    }
}

/// Sparse unitary on the (i, j) subspace, index n_i * (c_j + 1) + n_j.
#[derive(Debug)]
pub struct TwoModeGate {
    di: usize,
    dj: usize,
    rows: Vec<Vec<(usize, C64)>>,
    kind: GateKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum GateKind {
    BeamSplitter,
    Squeezer,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct GateKey {
    kind: GateKind,
    ci: usize,
    cj: usize,
    a: u64,
    b: u64,
}

const CACHE_CAP: usize = 8192;

fn cache() -> &'static RwLock<HashMap<GateKey, Arc<TwoModeGate>>> {
    static C: OnceLock<RwLock<HashMap<GateKey, Arc<TwoModeGate>>>> = OnceLock::new();
    C.get_or_init(|| RwLock::new(HashMap::new()))
}

fn cached(key: GateKey, build: impl FnOnce() -> TwoModeGate) -> Arc<TwoModeGate> {
    if let Some(g) = cache().read().unwrap_or_else(|e| e.into_inner()).get(&key) {
        return g.clone();
    }
    let g = Arc::new(build());
    let mut w = cache().write().unwrap_or_else(|e| e.into_inner());
    if w.len() >= CACHE_CAP {
        w.clear();
    }
    w.entry(key).or_insert(g).clone()
}

fn exp_gate(gen: DMatrix<C64>, di: usize, dj: usize, kind: GateKind) -> TwoModeGate {
    let u = gen.exp();
    let rows = (0..di * dj)
        .map(|r| {
            (0..di * dj)
                .filter_map(|c| {
                    let z = u[(r, c)];
                    (z.norm_sqr() > 1e-300).then_some((c, z))
                })
                .collect()
        })
        .collect();
    TwoModeGate { di, dj, rows, kind }
}

pub fn beam_splitter_gate(ci: usize, cj: usize, p: BeamSplitterParams) -> Arc<TwoModeGate> {
    let (theta, phi) = p.angles();
    let key = GateKey {
        kind: GateKind::BeamSplitter,
        ci,
        cj,
        a: theta.to_bits(),
        b: phi.to_bits(),
    };
    cached(key, || {
        let (di, dj) = (ci + 1, cj + 1);
        let mut g = DMatrix::<C64>::zeros(di * dj, di * dj);
        let e = C64::from_polar(theta, phi);
        for ni in 0..ci {
            for nj in 1..dj {
                // a_i^dag a_j : |ni, nj> -> sqrt((ni+1) nj) |ni+1, nj-1>
                let amp = (((ni + 1) * nj) as f64).sqrt();
                let from = ni * dj + nj;
                let to = (ni + 1) * dj + nj - 1;
                g[(to, from)] += e * amp;
                g[(from, to)] -= e.conj() * amp;
            }
        }
        exp_gate(g, di, dj, GateKind::BeamSplitter)
    })
}

pub fn squeezer_gate(ci: usize, cj: usize, p: SqueezerParams) -> Arc<TwoModeGate> {
    let xi = p.xi();
    let key = GateKey {
        kind: GateKind::Squeezer,
        ci,
        cj,
        a: xi.re.to_bits(),
        b: xi.im.to_bits(),
    };
    cached(key, || {
        let (di, dj) = (ci + 1, cj + 1);
        let mut g = DMatrix::<C64>::zeros(di * dj, di * dj);
        for ni in 0..ci {
            for nj in 0..cj {
                let amp = (((ni + 1) * (nj + 1)) as f64).sqrt();
                let from = ni * dj + nj;
                let to = (ni + 1) * dj + nj + 1;
                g[(to, from)] -= xi * amp;
                g[(from, to)] += xi.conj() * amp;
            }
        }
        exp_gate(g, di, dj, GateKind::Squeezer)
    })
}

fn check_pair(cutoffs: &FockCutoffs, i: usize, j: usize) -> Result<()> {
    cutoffs.check_mode(i)?;
    cutoffs.check_mode(j)?;
    if i == j {
        return Err(PnesError::SameMode(i));
    }
    Ok(())
}

/// Apply a gate to modes (i, j); `strength` scales the first-order leak estimate.
fn apply_gate(
    state: &PureState,
    i: usize,
    j: usize,
    gate: &TwoModeGate,
    strength: f64,
) -> PureState {
    let cut = state.cutoffs();
    let (si, sj) = (cut.strides()[i], cut.strides()[j]);
    let (di, dj) = (gate.di, gate.dj);
    let mut out = PureState::zeros(cut.clone());
    let src = state.amplitudes();
    let mut v = vec![C64::new(0.0, 0.0); di * dj];
    let mut leak = 0.0;
    {
        let dst = out.amplitudes_mut();
        for base in pair_bases(cut, i, j) {
            let mut any = false;
            for ni in 0..di {
                for nj in 0..dj {
                    let a = src[base + ni * si + nj * sj];
                    any |= a.norm_sqr() > 0.0;
                    v[ni * dj + nj] = a;
                }
            }
            if !any {
                continue;
            }
            for (r, row) in gate.rows.iter().enumerate() {
                let acc: C64 = row.iter().map(|&(c, u)| u * v[c]).sum();
                let (ni, nj) = (r / dj, r % dj);
                dst[base + ni * si + nj * sj] = acc;
                let w = acc.norm_sqr();
                if w == 0.0 || (ni + 1 < di && nj + 1 < dj) {
                    continue;
                }
                let s2 = strength * strength;
                leak += match gate.kind {
                    GateKind::BeamSplitter => {
                        let mut l = 0.0;
                        if ni + 1 == di {
                            l += w * s2 * (di * nj) as f64;
                        }
                        if nj + 1 == dj {
                            l += w * s2 * (dj * ni) as f64;
                        }
                        l
                    }
                    GateKind::Squeezer => w * s2 * ((ni + 1) * (nj + 1)) as f64,
                };
            }
        }
    }
    out.set_loss(state.truncation_loss() + leak);
    out
}

/// Beam splitter on modes (i, j), unitary exp(theta (e^{i phi} a_i^dag a_j - h.c.)).
pub fn apply_beam_splitter(
    state: &PureState,
    i: usize,
    j: usize,
    p: BeamSplitterParams,
) -> Result<PureState> {
    check_pair(state.cutoffs(), i, j)?;
    let gate = beam_splitter_gate(state.cutoffs().cutoff(i), state.cutoffs().cutoff(j), p);
    Ok(apply_gate(state, i, j, &gate, p.angles().0))
}

/// Two-mode squeezer exp(-xi a_i^dag a_j^dag + xi* a_i a_j).
pub fn apply_two_mode_squeezer(
    state: &PureState,
    i: usize,
    j: usize,
    p: SqueezerParams,
) -> Result<PureState> {
    check_pair(state.cutoffs(), i, j)?;
    let gate = squeezer_gate(state.cutoffs().cutoff(i), state.cutoffs().cutoff(j), p);
    Ok(apply_gate(state, i, j, &gate, p.s))
}

/// Project the listed modes onto the detector outcomes. Returns the normalized
/// conditional ensemble over the remaining modes and the outcome probability.
/// A click expands into one member per photon number of the clicked mode.
pub fn herald<E: Ensemble + ?Sized>(
    state: &E,
    outcomes: &[HeraldOutcome],
    detector: OnOffDetector,
) -> Result<(StateEnsemble, f64)> {
    let cut = state.cutoffs();
    let mut order: Vec<HeraldOutcome> = outcomes.to_vec();
    for o in &order {
        cut.check_mode(o.mode)?;
    }
    order.sort_by(|a, b| b.mode.cmp(&a.mode));
    for w in order.windows(2) {
        if w[0].mode == w[1].mode {
            return Err(PnesError::HeraldOverlap(w[0].mode));
        }
    }
    if order.len() >= cut.modes() {
        return Err(PnesError::InvalidParameter("herald leaves no modes".into()));
    }
    let input = state.total_weight();
    if !(input > 0.0) {
        return Err(PnesError::ZeroProbability);
    }
    let mut members: Vec<(f64, PureState)> = state
        .members()
        .into_iter()
        .map(|(w, s)| (w, s.clone()))
        .collect();
    for o in &order {
        let mut next = Vec::new();
        for (w, s) in &members {
            for n in 0..=s.cutoffs().cutoff(o.mode) {
                let q = detector.weight(o.detection, n);
                if q <= 0.0 {
                    continue;
                }
                let mut slice = s.project(o.mode, n)?;
                let p = slice.norm_sqr() * q * w;
                if p <= SLICE_FLOOR * input {
                    continue;
                }
                slice.scale(C64::new(q.sqrt(), 0.0));
                next.push((*w, slice));
            }
        }
        members = next;
    }
    let prob: f64 = members.iter().map(|(w, s)| w * s.norm_sqr()).sum::<f64>() / input;
    if !(prob > 0.0) {
        return Err(PnesError::ZeroProbability);
    }
    let weighted = members
        .into_iter()
        .map(|(w, s)| (w * s.norm_sqr(), s))
        .collect();
    Ok((StateEnsemble::new(weighted)?, prob))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::Ladder;

    fn cut(v: &[usize]) -> FockCutoffs {
        FockCutoffs::new(v.to_vec()).unwrap()
    }

    #[test]
    fn single_photon_splits_with_sign() {
        let p = BeamSplitterParams::real(0.6).unwrap();
        let s = PureState::basis(cut(&[3, 3]), &[1, 0]).unwrap();
        let o = apply_beam_splitter(&s, 0, 1, p).unwrap();
        assert!((o.amplitude(&[1, 0]).re - 0.6).abs() < 1e-13);
        assert!((o.amplitude(&[0, 1]).re + 0.8).abs() < 1e-13);
        let s = PureState::basis(cut(&[3, 3]), &[0, 1]).unwrap();
        let o = apply_beam_splitter(&s, 0, 1, p).unwrap();
        assert!((o.amplitude(&[1, 0]).re - 0.8).abs() < 1e-13);
    }

    #[test]
    fn complex_reflection() {
        let r = C64::from_polar(0.8, 0.3);
        let p = BeamSplitterParams::new(0.6, r).unwrap();
        let s = PureState::basis(cut(&[2, 2]), &[1, 0]).unwrap();
        let o = apply_beam_splitter(&s, 0, 1, p).unwrap();
        assert!((o.amplitude(&[0, 1]) + r).norm() < 1e-13);
        let s = PureState::basis(cut(&[2, 2]), &[0, 1]).unwrap();
        let o = apply_beam_splitter(&s, 0, 1, p).unwrap();
        assert!((o.amplitude(&[1, 0]) - r.conj()).norm() < 1e-13);
    }

    #[test]
    fn hong_ou_mandel() {
        let p = BeamSplitterParams::from_transmissivity(0.5).unwrap();
        let s = PureState::basis(cut(&[4, 4]), &[1, 1]).unwrap();
        let o = apply_beam_splitter(&s, 0, 1, p).unwrap();
        assert!(o.amplitude(&[1, 1]).norm() < 1e-13);
        assert!((o.amplitude(&[2, 0]).norm_sqr() - 0.5).abs() < 1e-13);
        assert!((o.amplitude(&[0, 2]).norm_sqr() - 0.5).abs() < 1e-13);
    }

    #[test]
    fn squeezed_vacuum_amplitudes() {
        let sq = SqueezerParams::new(0.3, 0.7).unwrap();
        let o = apply_two_mode_squeezer(&PureState::vacuum(cut(&[20, 20])), 0, 1, sq).unwrap();
        let base = -C64::from_polar(0.3f64.tanh(), 0.7);
        for n in 0..6 {
            let expect = base.powu(n as u32) / 0.3f64.cosh();
            assert!((o.amplitude(&[n, n]) - expect).norm() < 1e-12, "n = {n}");
        }
        assert!(o.truncation_loss() < 1e-12);
    }

    #[test]
    fn gate_rejects_bad_modes() {
        let s = PureState::vacuum(cut(&[2, 2]));
        let p = BeamSplitterParams::real(0.5).unwrap();
        assert_eq!(
            apply_beam_splitter(&s, 1, 1, p).unwrap_err(),
            PnesError::SameMode(1)
        );
        assert!(apply_beam_splitter(&s, 0, 2, p).is_err());
        assert!(BeamSplitterParams::new(0.5, C64::new(0.5, 0.0)).is_err());
        assert!(SqueezerParams::new(-0.1, 0.0).is_err());
    }

    #[test]
    fn gate_acts_on_middle_modes() {
        // the two-mode gate must find the right strides when other modes surround it
        let s = PureState::basis(cut(&[1, 2, 1, 2]), &[1, 1, 1, 0]).unwrap();
        let o = apply_beam_splitter(&s, 3, 1, BeamSplitterParams::real(0.0).unwrap()).unwrap();
        assert!((o.amplitude(&[1, 0, 1, 1]).norm() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn herald_click_probability() {
        // |psi> = (|0> + |1> + |2>)/sqrt3 on mode 1 with a spectator
        let c = cut(&[1, 2]);
        let mut s = PureState::zeros(c.clone());
        for n in 0..3 {
            s.amplitudes_mut()[c.index_of(&[0, n]).unwrap()] = C64::new(1.0 / 3f64.sqrt(), 0.0);
        }
        let det = OnOffDetector::new(0.5).unwrap();
        let (_, p_click) = herald(&s, &[HeraldOutcome::new(1, Detection::Click)], det).unwrap();
        let (_, p_none) = herald(&s, &[HeraldOutcome::new(1, Detection::NoClick)], det).unwrap();
        assert!((p_click - (0.5 + 0.75) / 3.0).abs() < 1e-15);
        assert!((p_click + p_none - 1.0).abs() < 1e-15);
        let dup = [
            HeraldOutcome::new(1, Detection::Click),
            HeraldOutcome::new(1, Detection::NoClick),
        ];
        assert_eq!(
            herald(&s, &dup, det).unwrap_err(),
            PnesError::HeraldOverlap(1)
        );
    }

    #[test]
    fn creation_then_squeeze_keeps_loss_bookkeeping() {
        let s = PureState::basis(cut(&[2, 2]), &[2, 0]).unwrap();
        let up = s.apply_ladder(0, Ladder::Create).unwrap();
        assert!(up.truncation_loss() > 0.0);
        let sq =
            apply_two_mode_squeezer(&up, 0, 1, SqueezerParams::new(0.1, 0.0).unwrap()).unwrap();
        assert!(sq.truncation_loss() >= up.truncation_loss());
    }
}
