//! Truncated Fock-space states: pure tensors, ensembles and reduced density matrices.
//!
//! Amplitudes are stored row-major with the last mode varying fastest, so a
//! two-mode state with cutoffs `(ca, cb)` keeps `|m, n>` at `m * (cb + 1) + n`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{PnesError, Result};
use crate::special::{laguerre_all, ln_factorial};

/// Largest density-matrix side produced by [`partial_trace`] and ensemble compression.
pub const MAX_DENSITY_DIM: usize = 4096;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FockCutoffs {
    cut: Vec<usize>,
}

impl FockCutoffs {
    pub fn new(cut: impl Into<Vec<usize>>) -> Result<Self> {
        let cut = cut.into();
        if cut.is_empty() {
            return Err(PnesError::InvalidCutoffs("no modes".into()));
        }
        if let Some(m) = cut.iter().position(|&c| c == 0) {
            return Err(PnesError::InvalidCutoffs(format!("mode {m} has cutoff 0")));
        }
        cut.iter()
            .try_fold(1usize, |acc, &c| acc.checked_mul(c + 1))
            .ok_or(PnesError::DimensionOverflow)?;
        Ok(FockCutoffs { cut })
    }

    pub fn uniform(modes: usize, cutoff: usize) -> Result<Self> {
        Self::new(vec![cutoff; modes])
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.cut
    }

    pub fn modes(&self) -> usize {
        self.cut.len()
    }

    pub fn cutoff(&self, mode: usize) -> usize {
        self.cut[mode]
    }

    pub fn dim(&self, mode: usize) -> usize {
        self.cut[mode] + 1
    }

    pub fn total_dim(&self) -> usize {
        self.cut.iter().map(|c| c + 1).product()
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.cut.len()];
        for m in (0..self.cut.len().saturating_sub(1)).rev() {
            s[m] = s[m + 1] * (self.cut[m + 1] + 1);
        }
        s
    }

    /// Flat index of an occupation tuple, `None` when any entry exceeds its cutoff.
    pub fn index_of(&self, occ: &[usize]) -> Option<usize> {
        if occ.len() != self.cut.len() {
            return None;
        }
        let mut idx = 0;
        for (&n, &c) in occ.iter().zip(&self.cut) {
            if n > c {
                return None;
            }
            idx = idx * (c + 1) + n;
        }
        Some(idx)
    }

    pub fn occupations(&self, mut flat: usize) -> Vec<usize> {
        let mut occ = vec![0; self.cut.len()];
        for m in (0..self.cut.len()).rev() {
            occ[m] = flat % (self.cut[m] + 1);
            flat /= self.cut[m] + 1;
        }
        occ
    }

    pub fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.cut.len() {
            Err(PnesError::ModeOutOfRange {
                mode,
                modes: self.cut.len(),
            })
        } else {
            Ok(())
        }
    }

    pub fn appended(&self, cutoff: usize) -> Result<Self> {
        let mut cut = self.cut.clone();
        cut.push(cutoff);
        Self::new(cut)
    }

    pub(crate) fn removed(&self, mode: usize) -> Result<Self> {
        let mut cut = self.cut.clone();
        cut.remove(mode);
        Self::new(cut)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ladder {
    Create,
    Annihilate,
}

/// Flat offsets of every amplitude whose occupations of modes `i` and `j` are zero.
pub(crate) fn pair_bases(cutoffs: &FockCutoffs, i: usize, j: usize) -> Vec<usize> {
    let strides = cutoffs.strides();
    let mut bases = vec![0usize];
    for m in 0..cutoffs.modes() {
        if m == i || m == j {
            continue;
        }
        let mut next = Vec::with_capacity(bases.len() * cutoffs.dim(m));
        for &b in &bases {
            for n in 0..cutoffs.dim(m) {
                next.push(b + n * strides[m]);
            }
        }
        bases = next;
    }
    bases
}

#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    cutoffs: FockCutoffs,
    amps: Vec<C64>,
    loss: f64,
}

impl PureState {
    pub fn vacuum(cutoffs: FockCutoffs) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); cutoffs.total_dim()];
        amps[0] = C64::new(1.0, 0.0);
        PureState {
            cutoffs,
            amps,
            loss: 0.0,
        }
    }

    pub fn zeros(cutoffs: FockCutoffs) -> Self {
        let amps = vec![C64::new(0.0, 0.0); cutoffs.total_dim()];
        PureState {
            cutoffs,
            amps,
            loss: 0.0,
        }
    }

    pub fn basis(cutoffs: FockCutoffs, occ: &[usize]) -> Result<Self> {
        let idx = cutoffs.index_of(occ).ok_or_else(|| {
            PnesError::InvalidParameter(format!("occupation {occ:?} outside cutoffs"))
        })?;
        let mut s = Self::zeros(cutoffs);
        s.amps[idx] = C64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn from_amplitudes(cutoffs: FockCutoffs, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != cutoffs.total_dim() {
            return Err(PnesError::Incompatible(format!(
                "{} amplitudes for dimension {}",
                amps.len(),
                cutoffs.total_dim()
            )));
        }
        Ok(PureState {
            cutoffs,
            amps,
            loss: 0.0,
        })
    }

    pub fn cutoffs(&self) -> &FockCutoffs {
        &self.cutoffs
    }

    pub fn modes(&self) -> usize {
        self.cutoffs.modes()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    /// Amplitude of an occupation tuple, zero outside the cutoffs.
    pub fn amplitude(&self, occ: &[usize]) -> C64 {
        self.cutoffs
            .index_of(occ)
            .map_or(C64::new(0.0, 0.0), |i| self.amps[i])
    }

    /// Norm^2 estimated to have leaked past the cutoffs, in the same units as `norm_sqr`.
    pub fn truncation_loss(&self) -> f64 {
        self.loss
    }

    pub fn relative_truncation_loss(&self) -> f64 {
        let n = self.norm_sqr();
        if n > 0.0 {
            self.loss / n
        } else {
            0.0
        }
    }

    pub(crate) fn set_loss(&mut self, l: f64) {
        self.loss = l;
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) -> Result<f64> {
        let n = self.norm_sqr();
        if !(n > 0.0) {
            return Err(PnesError::ZeroProbability);
        }
        let inv = 1.0 / n.sqrt();
        self.amps.iter_mut().for_each(|a| *a *= inv);
        self.loss /= n;
        Ok(n)
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    pub fn scale(&mut self, c: C64) {
        self.amps.iter_mut().for_each(|a| *a *= c);
        self.loss *= c.norm_sqr();
    }

    /// `self += c * other`; both states must share cutoffs.
    pub fn add_scaled(&mut self, c: C64, other: &PureState) -> Result<()> {
        if self.cutoffs != other.cutoffs {
            return Err(PnesError::Incompatible("cutoffs differ".into()));
        }
        for (a, b) in self.amps.iter_mut().zip(&other.amps) {
            *a += c * b;
        }
        self.loss += c.norm_sqr() * other.loss;
        Ok(())
    }

    /// <self|other>, summed over the occupations both tensors can represent.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if self.modes() != other.modes() {
            return Err(PnesError::Incompatible(format!(
                "{} modes vs {} modes",
                self.modes(),
                other.modes()
            )));
        }
        if self.cutoffs == other.cutoffs {
            return Ok(self
                .amps
                .iter()
                .zip(&other.amps)
                .map(|(a, b)| a.conj() * b)
                .sum());
        }
        let mut acc = C64::new(0.0, 0.0);
        for (flat, a) in self.amps.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let occ = self.cutoffs.occupations(flat);
            if let Some(j) = other.cutoffs.index_of(&occ) {
                acc += a.conj() * other.amps[j];
            }
        }
        Ok(acc)
    }

    /// Re-embed into new cutoffs with the same mode count; dropped weight counts as loss.
    pub fn resized(&self, cutoffs: FockCutoffs) -> Result<Self> {
        if cutoffs.modes() != self.modes() {
            return Err(PnesError::Incompatible("mode count differs".into()));
        }
        let mut out = Self::zeros(cutoffs);
        let mut dropped = 0.0;
        for (flat, a) in self.amps.iter().enumerate() {
            let occ = self.cutoffs.occupations(flat);
            match out.cutoffs.index_of(&occ) {
                Some(j) => out.amps[j] = *a,
                None => dropped += a.norm_sqr(),
            }
        }
        out.loss = self.loss + dropped;
        Ok(out)
    }

    /// Tensor a vacuum mode with the given cutoff onto the end.
    pub fn with_vacuum_mode(&self, cutoff: usize) -> Result<Self> {
        let cutoffs = self.cutoffs.appended(cutoff)?;
        let d = cutoff + 1;
        let mut amps = vec![C64::new(0.0, 0.0); self.amps.len() * d];
        for (k, a) in self.amps.iter().enumerate() {
            amps[k * d] = *a;
        }
        Ok(PureState {
            cutoffs,
            amps,
            loss: self.loss,
        })
    }

    /// Unnormalized slice `<n|_mode |self>`, with `mode` removed.
    pub fn project(&self, mode: usize, n: usize) -> Result<Self> {
        self.cutoffs.check_mode(mode)?;
        let cutoffs = self.cutoffs.removed(mode)?;
        if n > self.cutoffs.cutoff(mode) {
            return Ok(Self::zeros(cutoffs));
        }
        let strides = self.cutoffs.strides();
        let inner = strides[mode];
        let d = self.cutoffs.dim(mode);
        let outer = self.amps.len() / (inner * d);
        let mut amps = Vec::with_capacity(outer * inner);
        for o in 0..outer {
            let start = o * inner * d + n * inner;
            amps.extend_from_slice(&self.amps[start..start + inner]);
        }
        let mut s = PureState {
            cutoffs,
            amps,
            loss: 0.0,
        };
        let total = self.norm_sqr();
        if total > 0.0 {
            s.loss = self.loss * s.norm_sqr() / total;
        }
        Ok(s)
    }

    /// Apply a or a^dagger to one mode. Creation at the cutoff drops that component
    /// and records its weight as truncation loss.
    pub fn apply_ladder(&self, mode: usize, op: Ladder) -> Result<Self> {
        self.cutoffs.check_mode(mode)?;
        let stride = self.cutoffs.strides()[mode];
        let c = self.cutoffs.cutoff(mode);
        let mut out = Self::zeros(self.cutoffs.clone());
        out.loss = self.loss;
        for (flat, a) in self.amps.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let n = (flat / stride) % (c + 1);
            match op {
                Ladder::Annihilate => {
                    if n > 0 {
                        out.amps[flat - stride] += a * (n as f64).sqrt();
                    }
                }
                Ladder::Create => {
                    if n < c {
                        out.amps[flat + stride] += a * ((n + 1) as f64).sqrt();
                    } else {
                        out.loss += a.norm_sqr() * (n + 1) as f64;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        partial_trace(self, keep)
    }
}

/// Convex mixture of normalized pure states with probability weights.
#[derive(Clone, Debug, PartialEq)]
pub struct StateEnsemble {
    cutoffs: FockCutoffs,
    members: Vec<(f64, PureState)>,
}

impl StateEnsemble {
    /// Normalizes every member and rescales the weights to sum to one.
    pub fn new(members: Vec<(f64, PureState)>) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| PnesError::InvalidParameter("empty ensemble".into()))?;
        let cutoffs = first.1.cutoffs.clone();
        let mut out = Vec::with_capacity(members.len());
        let mut total = 0.0;
        for (w, s) in members {
            if s.cutoffs != cutoffs {
                return Err(PnesError::Incompatible(
                    "ensemble members differ in cutoffs".into(),
                ));
            }
            if !(w >= 0.0) || !w.is_finite() {
                return Err(PnesError::InvalidParameter(format!("ensemble weight {w}")));
            }
            if w == 0.0 || s.norm_sqr() == 0.0 {
                continue;
            }
            total += w;
            out.push((w, s.normalized()?));
        }
        if !(total > 0.0) {
            return Err(PnesError::ZeroProbability);
        }
        out.iter_mut().for_each(|(w, _)| *w /= total);
        Ok(StateEnsemble {
            cutoffs,
            members: out,
        })
    }

    pub fn pure(state: PureState) -> Result<Self> {
        Self::new(vec![(1.0, state)])
    }

    pub fn cutoffs(&self) -> &FockCutoffs {
        &self.cutoffs
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &PureState)> {
        self.members.iter().map(|(w, s)| (*w, s))
    }

    pub fn into_members(self) -> Vec<(f64, PureState)> {
        self.members
    }

    /// Weighted relative truncation loss of the members.
    pub fn truncation_loss(&self) -> f64 {
        self.members
            .iter()
            .map(|(w, s)| w * s.relative_truncation_loss())
            .sum()
    }

    pub fn density_matrix(&self) -> Result<DensityMatrix> {
        let keep: Vec<usize> = (0..self.cutoffs.modes()).collect();
        partial_trace(self, &keep)
    }

    /// Replace the members by the eigenvectors of rho with eigenvalue above
    /// `tol` (relative to the largest). Exact up to the discarded eigenvalues.
    ///
    /// Diagonalizes whichever is smaller: rho itself or the member Gram matrix
    /// G_kl = sqrt(w_k w_l) <psi_k|psi_l>, which shares the nonzero spectrum of rho.
    pub fn compress(&self, tol: f64) -> Result<Self> {
        let by_gram = self.members.len() <= self.cutoffs.total_dim();
        let first = if by_gram { self.compress_gram(tol)? } else { self.compress_rho(tol)? };
        match first {
            Some(e) => Ok(e),
            None => Ok(if by_gram { self.compress_rho(tol)? } else { self.compress_gram(tol)? }
                .unwrap_or_else(|| self.clone())),
        }
    }

    fn compress_rho(&self, tol: f64) -> Result<Option<Self>> {
        let rho = self.density_matrix()?;
        let loss = self.truncation_loss();
        let eig = rho.matrix.symmetric_eigen();
        if eig.eigenvalues.iter().any(|l| !l.is_finite()) {
            return Ok(None);
        }
        let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let mut members = Vec::new();
        for (k, &lam) in eig.eigenvalues.iter().enumerate() {
            if lam > tol * top {
                let v: Vec<C64> = eig.eigenvectors.column(k).iter().cloned().collect();
                let mut s = PureState::from_amplitudes(self.cutoffs.clone(), v)?;
                s.loss = loss;
                members.push((lam, s));
            }
        }
        Self::new(members).map(Some)
    }

    fn compress_gram(&self, tol: f64) -> Result<Option<Self>> {
        let m = self.members.len();
        let loss = self.truncation_loss();
        let sw: Vec<f64> = self.members.iter().map(|(w, _)| w.sqrt()).collect();
        let mut g = DMatrix::<C64>::zeros(m, m);
        for k in 0..m {
            for l in k..m {
                let v = self.members[k].1.inner(&self.members[l].1)? * (sw[k] * sw[l]);
                g[(k, l)] = v;
                g[(l, k)] = v.conj();
            }
        }
        let eig = g.symmetric_eigen();
        if eig.eigenvalues.iter().any(|l| !l.is_finite()) {
            return Ok(None);
        }
        let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let mut members = Vec::new();
        for (k, &lam) in eig.eigenvalues.iter().enumerate() {
            if lam > tol * top {
                let mut s = PureState::zeros(self.cutoffs.clone());
                for (j, (_, psi)) in self.members.iter().enumerate() {
                    s.add_scaled(eig.eigenvectors[(j, k)] * sw[j], psi)?;
                }
                s.loss = loss * s.norm_sqr();
                members.push((lam, s));
            }
        }
        Self::new(members).map(Some)
    }
}

/// Anything expressible as weighted pure members: a pure state has a single member of weight one.
pub trait Ensemble {
    fn cutoffs(&self) -> &FockCutoffs;
    fn members(&self) -> Vec<(f64, &PureState)>;

    /// Sum of weight * norm^2 over members.
    fn total_weight(&self) -> f64 {
        self.members().iter().map(|(w, s)| w * s.norm_sqr()).sum()
    }
}

impl Ensemble for PureState {
    fn cutoffs(&self) -> &FockCutoffs {
        &self.cutoffs
    }
    fn members(&self) -> Vec<(f64, &PureState)> {
        vec![(1.0, self)]
    }
}

impl Ensemble for StateEnsemble {
    fn cutoffs(&self) -> &FockCutoffs {
        &self.cutoffs
    }
    fn members(&self) -> Vec<(f64, &PureState)> {
        self.iter().collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    pub cutoffs: FockCutoffs,
    pub matrix: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .collect()
    }
}

/// Reduced density matrix of the modes in `keep` (ascending, distinct), normalized to unit trace.
pub fn partial_trace<E: Ensemble + ?Sized>(state: &E, keep: &[usize]) -> Result<DensityMatrix> {
    let cutoffs = state.cutoffs();
    for w in keep.windows(2) {
        if w[0] >= w[1] {
            return Err(PnesError::InvalidParameter(
                "keep must be ascending and distinct".into(),
            ));
        }
    }
    for &m in keep {
        cutoffs.check_mode(m)?;
    }
    let kept_cut = FockCutoffs::new(keep.iter().map(|&m| cutoffs.cutoff(m)).collect::<Vec<_>>())?;
    let dk = kept_cut.total_dim();
    if dk > MAX_DENSITY_DIM {
        return Err(PnesError::DimensionLimit {
            dim: dk,
            limit: MAX_DENSITY_DIM,
        });
    }
    let total = cutoffs.total_dim();
    let dt = total / dk;
    // flat index -> (kept index, traced index)
    let traced: Vec<usize> = (0..cutoffs.modes()).filter(|m| !keep.contains(m)).collect();
    let mut kidx = vec![0usize; total];
    let mut tidx = vec![0usize; total];
    for flat in 0..total {
        let occ = cutoffs.occupations(flat);
        kidx[flat] = keep.iter().fold(0, |acc, &m| acc * cutoffs.dim(m) + occ[m]);
        tidx[flat] = traced
            .iter()
            .fold(0, |acc, &m| acc * cutoffs.dim(m) + occ[m]);
    }
    let mut rho = DMatrix::<C64>::zeros(dk, dk);
    let mut norm = 0.0;
    for (w, s) in state.members() {
        let mut m = DMatrix::<C64>::zeros(dk, dt);
        for (flat, a) in s.amplitudes().iter().enumerate() {
            m[(kidx[flat], tidx[flat])] = *a;
        }
        rho += (&m * m.adjoint()) * C64::new(w, 0.0);
        norm += w * s.norm_sqr();
    }
    if !(norm > 0.0) {
        return Err(PnesError::ZeroProbability);
    }
    rho /= C64::new(norm, 0.0);
    Ok(DensityMatrix {
        cutoffs: kept_cut,
        matrix: rho,
    })
}

/// <target| rho |target> with both sides normalized. Cutoffs may differ;
/// amplitudes outside either tensor count as zero.
pub fn fidelity_pure_vs_ensemble<E: Ensemble + ?Sized>(target: &PureState, rho: &E) -> Result<f64> {
    if target.modes() != rho.cutoffs().modes() {
        return Err(PnesError::Incompatible(format!(
            "target has {} modes, state has {}",
            target.modes(),
            rho.cutoffs().modes()
        )));
    }
    let tn = target.norm_sqr();
    let rn = rho.total_weight();
    if !(tn > 0.0) || !(rn > 0.0) {
        return Err(PnesError::ZeroProbability);
    }
    let mut acc = 0.0;
    for (w, s) in rho.members() {
        acc += w * target.inner(s)?.norm_sqr();
    }
    Ok(acc / (tn * rn))
}

/// Matrix of <m|D(alpha)|n> for 0 <= m, n <= cutoff, from the closed form in
/// generalized Laguerre polynomials. Exact up to rounding; no truncation artefact.
pub fn displacement_matrix(alpha: C64, cutoff: usize) -> DMatrix<C64> {
    let d = cutoff + 1;
    if alpha.norm_sqr() == 0.0 {
        return DMatrix::identity(d, d);
    }
    let x = alpha.norm_sqr();
    let ln_abs = 0.5 * x.ln();
    let theta = alpha.arg();
    let mut out = DMatrix::<C64>::zeros(d, d);
    for k in 0..d {
        let lag = laguerre_all(cutoff - k, k, x);
        let ph_up = C64::from_polar(1.0, k as f64 * theta);
        // (-alpha*)^k has phase k(pi - theta)
        let ph_dn = C64::from_polar(1.0, k as f64 * (std::f64::consts::PI - theta));
        for n in 0..d - k {
            let m = n + k;
            let mag = (0.5 * (ln_factorial(n) - ln_factorial(m)) + k as f64 * ln_abs - 0.5 * x)
                .exp()
                * lag[n];
            out[(m, n)] = ph_up * mag;
            if k > 0 {
                out[(n, m)] = ph_dn * mag;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn cutoff_validation() {
        assert!(FockCutoffs::new(vec![]).is_err());
        assert!(FockCutoffs::new(vec![3, 0]).is_err());
        assert_eq!(
            FockCutoffs::new(vec![usize::MAX / 2, 3]).unwrap_err(),
            PnesError::DimensionOverflow
        );
        let f = FockCutoffs::new(vec![2, 3]).unwrap();
        assert_eq!(f.total_dim(), 12);
        assert_eq!(f.index_of(&[1, 2]), Some(6));
        assert_eq!(f.occupations(6), vec![1, 2]);
        assert_eq!(f.index_of(&[3, 0]), None);
    }

    #[test]
    fn vacuum_is_normalized() {
        let v = PureState::vacuum(FockCutoffs::uniform(3, 2).unwrap());
        assert_eq!(v.amplitudes().len(), 27);
        assert_eq!(v.norm_sqr(), 1.0);
        assert_eq!(v.amplitude(&[0, 0, 0]), c(1.0, 0.0));
    }

    #[test]
    fn ladder_on_fock_states() {
        let cut = FockCutoffs::new(vec![3, 2]).unwrap();
        let s = PureState::basis(cut.clone(), &[2, 1]).unwrap();
        let up = s.apply_ladder(0, Ladder::Create).unwrap();
        assert!((up.amplitude(&[3, 1]) - c(3f64.sqrt(), 0.0)).norm() < 1e-15);
        let dn = s.apply_ladder(1, Ladder::Annihilate).unwrap();
        assert!((dn.amplitude(&[2, 0]) - c(1.0, 0.0)).norm() < 1e-15);
        let zero = PureState::vacuum(cut.clone())
            .apply_ladder(0, Ladder::Annihilate)
            .unwrap();
        assert_eq!(zero.norm_sqr(), 0.0);
        let top = PureState::basis(cut, &[3, 0])
            .unwrap()
            .apply_ladder(0, Ladder::Create)
            .unwrap();
        assert_eq!(top.norm_sqr(), 0.0);
        assert!((top.truncation_loss() - 4.0).abs() < 1e-15);
        assert!(s.apply_ladder(2, Ladder::Create).is_err());
    }

    #[test]
    fn projection_removes_mode() {
        let cut = FockCutoffs::new(vec![1, 2, 1]).unwrap();
        let mut s = PureState::zeros(cut.clone());
        s.amplitudes_mut()[cut.index_of(&[1, 2, 0]).unwrap()] = c(0.6, 0.0);
        s.amplitudes_mut()[cut.index_of(&[0, 1, 1]).unwrap()] = c(0.0, 0.8);
        let p = s.project(1, 2).unwrap();
        assert_eq!(p.cutoffs().as_slice(), &[1, 1]);
        assert_eq!(p.amplitude(&[1, 0]), c(0.6, 0.0));
        assert_eq!(p.norm_sqr(), 0.36);
    }

    #[test]
    fn partial_trace_of_bell_pair() {
        let cut = FockCutoffs::new(vec![1, 1]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s =
            PureState::from_amplitudes(cut, vec![c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)])
                .unwrap();
        let r = s.partial_trace(&[0]).unwrap();
        assert!((r.matrix[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!(r.matrix[(0, 1)].norm() < 1e-15);
        assert!((r.purity() - 0.5).abs() < 1e-15);
        assert!(s.partial_trace(&[1, 0]).is_err());
    }

    #[test]
    fn fidelity_pads_missing_amplitudes() {
        let small = PureState::basis(FockCutoffs::new(vec![1, 1]).unwrap(), &[1, 1]).unwrap();
        let big = PureState::basis(FockCutoffs::new(vec![4, 4]).unwrap(), &[1, 1]).unwrap();
        assert!((fidelity_pure_vs_ensemble(&small, &big).unwrap() - 1.0).abs() < 1e-15);
        let three = PureState::vacuum(FockCutoffs::uniform(3, 1).unwrap());
        assert!(fidelity_pure_vs_ensemble(&small, &three).is_err());
    }

    #[test]
    fn displacement_of_vacuum_is_coherent() {
        let a = c(0.3, -0.4);
        let d = displacement_matrix(a, 12);
        let mut lnf = 0.0;
        for n in 0..=12usize {
            if n > 0 {
                lnf += (n as f64).ln();
            }
            let expect = (-a.norm_sqr() / 2.0).exp() * a.powu(n as u32) / (0.5 * lnf).exp();
            assert!((d[(n, 0)] - expect).norm() < 1e-14, "n = {n}");
        }
    }

    #[test]
    fn compress_keeps_density_matrix() {
        let cut = FockCutoffs::new(vec![2, 2]).unwrap();
        let mut members = Vec::new();
        for k in 0..6 {
            let mut s = PureState::zeros(cut.clone());
            for (j, a) in s.amplitudes_mut().iter_mut().enumerate() {
                *a = c(((j * 7 + k * 3) % 5) as f64 - 2.0, ((j + k) % 3) as f64);
            }
            members.push((1.0 + k as f64, s));
        }
        let e = StateEnsemble::new(members).unwrap();
        let before = e.density_matrix().unwrap();
        let comp = e.compress(1e-14).unwrap();
        assert!(comp.len() <= 6);
        let after = comp.density_matrix().unwrap();
        assert!((before.matrix - after.matrix)
            .iter()
            .all(|z| z.norm() < 1e-12));
    }
}
