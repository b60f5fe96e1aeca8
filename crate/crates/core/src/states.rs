//! PNES, two-mode squeezed vacua and the ideal operators that build PNES from vacuum.

use num_complex::Complex64 as C64;

use crate::error::{PnesError, Result};
use crate::fock::{FockCutoffs, Ladder, PureState};
use crate::optics::SqueezerParams;

/// Off-diagonal weight (relative) tolerated by [`coefficients_of`].
pub const DIAGONAL_TOL: f64 = 1e-8;
/// Tail weight beyond the cutoff tolerated by [`make_tmss`].
pub const TMSS_TAIL: f64 = 1e-8;

/// Normalized amplitudes C_0..C_N of sum_n C_n |n, n>.
#[derive(Clone, Debug, PartialEq)]
pub struct PnesCoefficients(Vec<C64>);

impl PnesCoefficients {
    /// Requires sum |C_n|^2 = 1 within 1e-12.
    pub fn new(c: Vec<C64>) -> Result<Self> {
        if c.is_empty() {
            return Err(PnesError::InvalidParameter("no coefficients".into()));
        }
        let n: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        if (n - 1.0).abs() > 1e-12 {
            return Err(PnesError::NotNormalized(n));
        }
        Ok(PnesCoefficients(c))
    }

    pub fn normalized(c: Vec<C64>) -> Result<Self> {
        let n: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        if c.is_empty() || !(n > 0.0) || !n.is_finite() {
            return Err(PnesError::InvalidParameter(
                "coefficients have zero norm".into(),
            ));
        }
        let k = 1.0 / n.sqrt();
        Ok(PnesCoefficients(c.into_iter().map(|z| z * k).collect()))
    }

    pub fn from_real(c: &[f64]) -> Result<Self> {
        Self::normalized(c.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Highest photon number N.
    pub fn n_max(&self) -> usize {
        self.0.len() - 1
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.0.iter().map(|z| z.norm()).collect()
    }

    /// Largest |C_n| - |D_n| over n, padding the shorter list with zeros.
    pub fn magnitude_distance(&self, other: &PnesCoefficients) -> f64 {
        let n = self.0.len().max(other.0.len());
        (0..n)
            .map(|k| {
                let a = self.0.get(k).map_or(0.0, |z| z.norm());
                let b = other.0.get(k).map_or(0.0, |z| z.norm());
                (a - b).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Pair-coherent amplitudes C_n proportional to lambda^n / n!.
    pub fn pair_coherent(lambda: C64, n_max: usize) -> Result<Self> {
        let mut c = Vec::with_capacity(n_max + 1);
        let mut term = C64::new(1.0, 0.0);
        for n in 0..=n_max {
            if n > 0 {
                term *= lambda / n as f64;
            }
            c.push(term);
        }
        Self::normalized(c)
    }
}

/// Parameters of the single-step operator built from squeezing xi and splitting (t, r).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoherentOpParams {
    pub t: C64,
    pub r: C64,
    pub xi: SqueezerParams,
}

/// One factor (t a + r b^dag) or (t b + r a^dag) of the two-step operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairOpParams {
    pub t: C64,
    pub r: C64,
}

impl PairOpParams {
    pub fn real(t: f64, r: f64) -> Self {
        PairOpParams {
            t: C64::new(t, 0.0),
            r: C64::new(r, 0.0),
        }
    }
}

fn two_mode(state: &PureState) -> Result<()> {
    if state.modes() != 2 {
        return Err(PnesError::Incompatible(format!(
            "expected 2 modes, got {}",
            state.modes()
        )));
    }
    Ok(())
}

/// sum_n C_n |n, n> with both modes cut at `cutoff`.
pub fn make_pnes(c: &PnesCoefficients, cutoff: usize) -> Result<PureState> {
    if c.n_max() > cutoff {
        return Err(PnesError::CutoffTooSmall {
            count: c.0.len(),
            cutoff,
        });
    }
    let cut = FockCutoffs::uniform(2, cutoff.max(1))?;
    let mut s = PureState::zeros(cut.clone());
    for (n, z) in c.0.iter().enumerate() {
        if let Some(i) = cut.index_of(&[n, n]) {
            s.amplitudes_mut()[i] = *z;
        }
    }
    Ok(s)
}

/// Smallest cutoff whose discarded tail tanh(s)^{2(c+1)} is below `tail`.
pub fn tmss_cutoff(s: f64, tail: f64) -> usize {
    let l2 = s.tanh().powi(2);
    if l2 == 0.0 {
        return 1;
    }
    let c = (tail.ln() / l2.ln()).ceil() as i64 - 1;
    c.max(1) as usize
}

/// Two-mode squeezed vacuum with C_n proportional to tanh(s)^n, renormalized on the cutoff.
pub fn make_tmss(s: f64, cutoff: usize) -> Result<PureState> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(PnesError::InvalidParameter(format!("squeezing {s}")));
    }
    let lam = s.tanh();
    let tail = lam.powi(2 * (cutoff as i32 + 1));
    if tail >= TMSS_TAIL {
        return Err(PnesError::TruncationLoss {
            loss: tail,
            limit: TMSS_TAIL,
        });
    }
    let c: Vec<C64> = (0..=cutoff)
        .map(|n| C64::new(lam.powi(n as i32), 0.0))
        .collect();
    make_pnes(&PnesCoefficients::normalized(c)?, cutoff)
}

fn ladder(s: &PureState, mode: usize, op: Ladder) -> Result<PureState> {
    s.apply_ladder(mode, op)
}

/// A + (t+r)(n_a cosh^2 s + n_b sinh^2 s) - (t+r) cosh s sinh s (e^{-i phi} a b + e^{i phi} a^dag b^dag),
/// with A = t cosh^2 s + r sinh^2 s. Output is unnormalized.
pub fn apply_ideal_on(state: &PureState, p: &CoherentOpParams) -> Result<PureState> {
    two_mode(state)?;
    let (ch, sh) = (p.xi.s.cosh(), p.xi.s.sinh());
    let tr = p.t + p.r;
    let a_const = p.t * ch * ch + p.r * sh * sh;
    let e = C64::from_polar(1.0, p.xi.phi);

    let mut out = state.clone();
    out.scale(a_const);
    let a = ladder(state, 0, Ladder::Annihilate)?;
    let na = ladder(&a, 0, Ladder::Create)?;
    out.add_scaled(tr * ch * ch, &na)?;
    let b = ladder(state, 1, Ladder::Annihilate)?;
    let nb = ladder(&b, 1, Ladder::Create)?;
    out.add_scaled(tr * sh * sh, &nb)?;
    let ab = ladder(&b, 0, Ladder::Annihilate)?;
    out.add_scaled(-tr * ch * sh * e.conj(), &ab)?;
    let bd = ladder(state, 1, Ladder::Create)?;
    let abd = ladder(&bd, 0, Ladder::Create)?;
    out.add_scaled(-tr * ch * sh * e, &abd)?;
    Ok(out)
}

/// (t_even a + r_even b^dag)(t_odd b + r_odd a^dag), unnormalized.
pub fn apply_ideal_oprime(
    state: &PureState,
    odd: &PairOpParams,
    even: &PairOpParams,
) -> Result<PureState> {
    two_mode(state)?;
    let mut mid = ladder(state, 1, Ladder::Annihilate)?;
    mid.scale(odd.t);
    mid.add_scaled(odd.r, &ladder(state, 0, Ladder::Create)?)?;
    let mut out = ladder(&mid, 0, Ladder::Annihilate)?;
    out.scale(even.t);
    out.add_scaled(even.r, &ladder(&mid, 1, Ladder::Create)?)?;
    Ok(out)
}

/// Diagonal amplitudes C_n = <n,n|psi>, normalized, with the global phase chosen so
/// the largest-magnitude coefficient is real and positive.
pub fn coefficients_of(state: &PureState) -> Result<PnesCoefficients> {
    two_mode(state)?;
    let cut = state.cutoffs();
    let total = state.norm_sqr();
    if !(total > 0.0) {
        return Err(PnesError::ZeroProbability);
    }
    let n = cut.cutoff(0).min(cut.cutoff(1));
    let diag: Vec<C64> = (0..=n).map(|k| state.amplitude(&[k, k])).collect();
    let dw: f64 = diag.iter().map(|z| z.norm_sqr()).sum();
    let off = (total - dw) / total;
    if off > DIAGONAL_TOL {
        return Err(PnesError::OffDiagonal(off));
    }
    let top = diag.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let k = diag
        .iter()
        .position(|z| z.norm() >= top - 1e-12)
        .unwrap_or(0);
    let phase = C64::from_polar(1.0, -diag[k].arg());
    let mut c: Vec<C64> = diag.into_iter().map(|z| z * phase).collect();
    while c.len() > 1 && c.last().is_some_and(|z| z.norm_sqr() <= 1e-30 * dw) {
        c.pop();
    }
    PnesCoefficients::normalized(c)
}

/// Apply O_1 .. O_N (first element acts first) to vacuum and return the PNES.
pub fn pnes_from_ops(ops: &[CoherentOpParams]) -> Result<PnesCoefficients> {
    let mut s = PureState::vacuum(FockCutoffs::uniform(2, ops.len().max(1) + 1)?);
    for p in ops {
        s = apply_ideal_on(&s, p)?;
    }
    coefficients_of(&s)
}

/// Apply the two-step operators (odd, even) pairwise to vacuum.
pub fn pnes_from_pair_ops(ops: &[(PairOpParams, PairOpParams)]) -> Result<PnesCoefficients> {
    let mut s = PureState::vacuum(FockCutoffs::uniform(2, ops.len().max(1) + 1)?);
    for (odd, even) in ops {
        s = apply_ideal_oprime(&s, odd, even)?;
    }
    coefficients_of(&s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::apply_two_mode_squeezer;

    fn re(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn pnes_layout() {
        let c = PnesCoefficients::from_real(&[1.0, 1.0]).unwrap();
        let s = make_pnes(&c, 3).unwrap();
        assert!((s.amplitude(&[1, 1]).re - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.amplitude(&[1, 0]), re(0.0));
        assert!(make_pnes(&PnesCoefficients::from_real(&[1.0; 5]).unwrap(), 3).is_err());
        assert!(PnesCoefficients::new(vec![re(1.0), re(1.0)]).is_err());
    }

    #[test]
    fn tmss_ratio_and_cutoff_guard() {
        let s = make_tmss(0.5, 30).unwrap();
        let l = 0.5f64.tanh();
        for n in 0..10 {
            let r = s.amplitude(&[n + 1, n + 1]).re / s.amplitude(&[n, n]).re;
            assert!((r - l).abs() < 1e-14);
        }
        assert!(make_tmss(1.0, 10).is_err());
        let c = tmss_cutoff(1.0, TMSS_TAIL);
        assert!(make_tmss(1.0, c).is_ok() && make_tmss(1.0, c - 1).is_err());
    }

    #[test]
    fn ideal_on_matches_conjugated_circuit() {
        // O = S^dag (t a a^dag + r a^dag a) S on a test state
        let xi = SqueezerParams::new(0.2, 0.4).unwrap();
        let p = CoherentOpParams {
            t: re(0.3),
            r: re(-0.8),
            xi,
        };
        let cut = FockCutoffs::uniform(2, 25).unwrap();
        let mut psi = PureState::zeros(cut.clone());
        psi.amplitudes_mut()[cut.index_of(&[0, 0]).unwrap()] = re(0.6);
        psi.amplitudes_mut()[cut.index_of(&[1, 1]).unwrap()] = C64::new(0.0, 0.8);
        let direct = apply_ideal_on(&psi, &p).unwrap();

        let sq = apply_two_mode_squeezer(&psi, 0, 1, xi).unwrap();
        let ad = sq.apply_ladder(0, Ladder::Create).unwrap();
        let mut x = ad.apply_ladder(0, Ladder::Annihilate).unwrap();
        x.scale(p.t);
        let a = sq.apply_ladder(0, Ladder::Annihilate).unwrap();
        x.add_scaled(p.r, &a.apply_ladder(0, Ladder::Create).unwrap())
            .unwrap();
        let back = apply_two_mode_squeezer(&x, 0, 1, xi.inverse()).unwrap();
        for n in 0..5 {
            for m in 0..5 {
                let d = direct.amplitude(&[n, m]) - back.amplitude(&[n, m]);
                assert!(d.norm() < 1e-9, "({n},{m}) {d}");
            }
        }
    }

    #[test]
    fn ideal_single_step_from_vacuum() {
        // O|00> = A|00> - (t+r) ch sh e^{i phi}|11>
        let xi = SqueezerParams::new(0.1, 0.0).unwrap();
        let p = CoherentOpParams {
            t: re(0.6),
            r: re(0.8),
            xi,
        };
        let out =
            apply_ideal_on(&PureState::vacuum(FockCutoffs::uniform(2, 3).unwrap()), &p).unwrap();
        let (ch, sh) = (0.1f64.cosh(), 0.1f64.sinh());
        assert!((out.amplitude(&[0, 0]).re - (0.6 * ch * ch + 0.8 * sh * sh)).abs() < 1e-15);
        assert!((out.amplitude(&[1, 1]).re + 1.4 * ch * sh).abs() < 1e-15);
        assert_eq!(out.truncation_loss(), 0.0);
    }

    #[test]
    fn oprime_from_vacuum() {
        let out = apply_ideal_oprime(
            &PureState::vacuum(FockCutoffs::uniform(2, 3).unwrap()),
            &PairOpParams::real(0.6, 0.8),
            &PairOpParams::real(0.28, 0.96),
        )
        .unwrap();
        // (t2 a + r2 b^dag) r1 |10> = r1 (t2 |00> + r2 |11>)
        assert!((out.amplitude(&[0, 0]).re - 0.8 * 0.28).abs() < 1e-15);
        assert!((out.amplitude(&[1, 1]).re - 0.8 * 0.96).abs() < 1e-15);
    }

    #[test]
    fn coefficient_canonical_phase() {
        let cut = FockCutoffs::uniform(2, 2).unwrap();
        let mut s = PureState::zeros(cut.clone());
        s.amplitudes_mut()[cut.index_of(&[0, 0]).unwrap()] = C64::new(0.0, 0.6);
        s.amplitudes_mut()[cut.index_of(&[1, 1]).unwrap()] = C64::new(0.0, -0.8);
        let c = coefficients_of(&s).unwrap();
        assert!((c.as_slice()[1] - re(0.8)).norm() < 1e-15);
        assert!((c.as_slice()[0] - re(-0.6)).norm() < 1e-15);
        s.amplitudes_mut()[cut.index_of(&[0, 1]).unwrap()] = re(0.01);
        assert!(matches!(
            coefficients_of(&s),
            Err(PnesError::OffDiagonal(_))
        ));
    }

    #[test]
    fn pair_coherent_amplitudes() {
        let c = PnesCoefficients::pair_coherent(re(2.0), 3).unwrap();
        let m = c.magnitudes();
        assert!((m[2] / m[1] - 1.0).abs() < 1e-15);
        assert!((m[3] / m[2] - 2.0 / 3.0).abs() < 1e-15);
    }
}
