//! Entanglement entropy, EPR correlation, characteristic function and Wigner function.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{PnesError, Result};
use crate::fock::{displacement_matrix, partial_trace, Ensemble, Ladder, PureState};

fn require_two_modes<E: Ensemble + ?Sized>(state: &E) -> Result<()> {
    let m = state.cutoffs().modes();
    if m != 2 {
        return Err(PnesError::Incompatible(format!(
            "expected 2 modes, got {m}"
        )));
    }
    Ok(())
}

/// Von Neumann entropy (bits) of either reduced state of a pure two-mode state.
pub fn entanglement_entropy(state: &PureState) -> Result<f64> {
    require_two_modes(state)?;
    let rho = partial_trace(state, &[0])?;
    Ok(rho
        .eigenvalues()
        .into_iter()
        .filter(|&l| l > 1e-300)
        .map(|l| -l * l.log2())
        .sum())
}

/// Entropy of the two-mode squeezed vacuum, cosh^2 log2 cosh^2 - sinh^2 log2 sinh^2.
pub fn tmss_entropy(s: f64) -> f64 {
    let (c2, s2) = (s.cosh().powi(2), s.sinh().powi(2));
    if s2 == 0.0 {
        return 0.0;
    }
    c2 * c2.log2() - s2 * s2.log2()
}

/// Squeezing whose vacuum has the given entropy (bits).
pub fn tmss_squeezing_for_entropy(bits: f64) -> Result<f64> {
    if !(bits >= 0.0) || !bits.is_finite() {
        return Err(PnesError::InvalidParameter(format!("entropy {bits}")));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while tmss_entropy(hi) < bits {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tmss_entropy(mid) < bits {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// <M> - <x_A - x_B>^2 - <p_A + p_B>^2 with M = 2(n_A + n_B + 1) - 2(ab + a^dag b^dag)
/// and x = (a + a^dag)/sqrt2, p = -i(a - a^dag)/sqrt2. Equals 2 for vacuum.
pub fn epr_correlation<E: Ensemble + ?Sized>(state: &E) -> Result<f64> {
    require_two_modes(state)?;
    let total = state.total_weight();
    if !(total > 0.0) {
        return Err(PnesError::ZeroProbability);
    }
    let (mut m, mut ea, mut eb) = (0.0, C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    for (w, s) in state.members() {
        let a = s.apply_ladder(0, Ladder::Annihilate)?;
        let b = s.apply_ladder(1, Ladder::Annihilate)?;
        let ab = b.apply_ladder(0, Ladder::Annihilate)?;
        let n = s.norm_sqr();
        let na = a.norm_sqr();
        let nb = b.norm_sqr();
        let abv = s.inner(&ab)?;
        m += w * (2.0 * (na + nb + n) - 4.0 * abv.re);
        ea += s.inner(&a)? * w;
        eb += s.inner(&b)? * w;
    }
    m /= total;
    ea /= total;
    eb /= total;
    // <x_A - x_B> = sqrt2 Re(<a> - <b>), <p_A + p_B> = sqrt2 Im(<a> + <b>)
    let dx = 2f64.sqrt() * (ea - eb).re;
    let dp = 2f64.sqrt() * (ea + eb).im;
    Ok(m - dx * dx - dp * dp)
}

/// Squeezing whose vacuum has the given EPR value 2 e^{-2s}.
pub fn tmss_squeezing_for_epr(epr: f64) -> Result<f64> {
    if !(epr > 0.0 && epr <= 2.0) {
        return Err(PnesError::InvalidParameter(format!(
            "EPR value {epr} outside (0, 2]"
        )));
    }
    Ok(-0.5 * (epr / 2.0).ln())
}

fn amp_matrix(s: &PureState) -> DMatrix<C64> {
    let cut = s.cutoffs();
    let (da, db) = (cut.dim(0), cut.dim(1));
    DMatrix::from_row_slice(da, db, s.amplitudes())
}

/// sum_{m,n} conj(psi_{mn}) (X psi Y^T)_{mn} = <psi| X (x) Y |psi>.
fn sandwich(psi: &DMatrix<C64>, x: &DMatrix<C64>, y: &DMatrix<C64>) -> C64 {
    let m = x * psi * y.transpose();
    psi.iter().zip(m.iter()).map(|(p, v)| p.conj() * v).sum()
}

/// C(lambda2, lambda3) = Tr[rho D_a(lambda2) D_b(lambda3)].
pub fn characteristic_fn<E: Ensemble + ?Sized>(state: &E, l2: C64, l3: C64) -> Result<C64> {
    require_two_modes(state)?;
    let cut = state.cutoffs();
    let da = displacement_matrix(l2, cut.cutoff(0));
    let db = displacement_matrix(l3, cut.cutoff(1));
    let total = state.total_weight();
    if !(total > 0.0) {
        return Err(PnesError::ZeroProbability);
    }
    let mut acc = C64::new(0.0, 0.0);
    for (w, s) in state.members() {
        acc += sandwich(&amp_matrix(s), &da, &db) * w;
    }
    Ok(acc / total)
}

/// D(2 alpha) Pi, the displaced parity whose expectation gives pi/2 W(alpha).
pub fn displaced_parity(alpha: C64, cutoff: usize) -> DMatrix<C64> {
    let mut d = displacement_matrix(alpha * 2.0, cutoff);
    for n in (1..=cutoff).step_by(2) {
        d.column_mut(n).neg_mut();
    }
    d
}

/// W(alpha, beta) = (4/pi^2) <D_a(2 alpha) Pi_a D_b(2 beta) Pi_b>.
pub fn wigner<E: Ensemble + ?Sized>(state: &E, alpha: C64, beta: C64) -> Result<f64> {
    require_two_modes(state)?;
    let cut = state.cutoffs();
    let pa = displaced_parity(alpha, cut.cutoff(0));
    let pb = displaced_parity(beta, cut.cutoff(1));
    wigner_from_parities(state, &pa, &pb)
}

/// Wigner value from precomputed (possibly summed) displaced parities.
pub fn wigner_from_parities<E: Ensemble + ?Sized>(
    state: &E,
    pa: &DMatrix<C64>,
    pb: &DMatrix<C64>,
) -> Result<f64> {
    let total = state.total_weight();
    if !(total > 0.0) {
        return Err(PnesError::ZeroProbability);
    }
    let mut acc = 0.0;
    for (w, s) in state.members() {
        acc += w * sandwich(&amp_matrix(s), pa, pb).re;
    }
    Ok(4.0 / (std::f64::consts::PI * std::f64::consts::PI) * acc / total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FockCutoffs;
    use crate::states::{make_pnes, make_tmss, tmss_cutoff, PnesCoefficients, TMSS_TAIL};
    use std::f64::consts::PI;

    #[test]
    fn vacuum_values() {
        let v = PureState::vacuum(FockCutoffs::uniform(2, 4).unwrap());
        assert_eq!(entanglement_entropy(&v).unwrap(), 0.0);
        assert!((epr_correlation(&v).unwrap() - 2.0).abs() < 1e-15);
        assert!(
            (wigner(&v, C64::new(0.0, 0.0), C64::new(0.0, 0.0)).unwrap() - 4.0 / (PI * PI)).abs()
                < 1e-15
        );
    }

    #[test]
    fn bell_pair_entropy_is_one_bit() {
        let c = PnesCoefficients::from_real(&[1.0, 1.0]).unwrap();
        let e = entanglement_entropy(&make_pnes(&c, 3).unwrap()).unwrap();
        assert!((e - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tmss_closed_forms() {
        for s in [0.2, 0.7, 1.1] {
            let psi = make_tmss(s, tmss_cutoff(s, TMSS_TAIL)).unwrap();
            assert!((entanglement_entropy(&psi).unwrap() - tmss_entropy(s)).abs() < 1e-5);
            assert!((epr_correlation(&psi).unwrap() - 2.0 * (-2.0 * s).exp()).abs() < 1e-5);
            assert!((tmss_squeezing_for_entropy(tmss_entropy(s)).unwrap() - s).abs() < 1e-12);
        }
    }

    #[test]
    fn characteristic_at_origin_is_trace() {
        let psi = make_tmss(0.4, 20).unwrap();
        let z = C64::new(0.0, 0.0);
        assert!((characteristic_fn(&psi, z, z).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-12);
    }
}
