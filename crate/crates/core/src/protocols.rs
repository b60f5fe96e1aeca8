//! Coherent-state teleportation fidelity and Bell-Wigner (CHSH-type) violations.

use num_complex::Complex64 as C64;

use crate::error::{PnesError, Result};
use crate::fock::{Ensemble, PureState};
use crate::measures::{displaced_parity, epr_correlation, wigner_from_parities};
use crate::optimizer::{
    minimize, sphere_to_coefficients, Bounds, Minimum, OptimizerConfig, OptimizerTrace,
};
use crate::special::ln_factorial;
use crate::states::{make_pnes, PnesCoefficients};

/// Average fidelity of teleporting coherent states with the two-mode resource,
/// F = (1/pi) int d^2 lambda e^{-|lambda|^2} C(lambda*, lambda).
///
/// The angular integral forces m' - m = n' - n on the pair <m'|D|m><n'|D|n>, and the
/// radial moments of e^{-2x} x^d L_m^{(d)} L_n^{(d)} sum to (m+n+d)!/(m! n! 2^{m+n+d+1}),
/// so the fidelity is an exact finite sum with no cancellation between terms.
pub fn teleport_fidelity_coherent<E: Ensemble + ?Sized>(resource: &E) -> Result<f64> {
    let cut = resource.cutoffs();
    if cut.modes() != 2 {
        return Err(PnesError::Incompatible(format!(
            "expected 2 modes, got {}",
            cut.modes()
        )));
    }
    let (da, db) = (cut.dim(0), cut.dim(1));
    let ln2 = std::f64::consts::LN_2;
    let kernel = |lo_a: usize, lo_b: usize, d: usize| -> f64 {
        let (hi_a, hi_b) = (lo_a + d, lo_b + d);
        (ln_factorial(lo_a + lo_b + d)
            - 0.5
                * (ln_factorial(lo_a)
                    + ln_factorial(hi_a)
                    + ln_factorial(lo_b)
                    + ln_factorial(hi_b))
            - (lo_a + lo_b + d + 1) as f64 * ln2)
            .exp()
    };
    let total = resource.total_weight();
    if !(total > 0.0) {
        return Err(PnesError::ZeroProbability);
    }
    let mut acc = 0.0;
    for (w, s) in resource.members() {
        let amp = s.amplitudes();
        let mut f = C64::new(0.0, 0.0);
        for mp in 0..da {
            for m in 0..da {
                let shift = mp as isize - m as isize;
                let d = shift.unsigned_abs();
                for np in 0..db {
                    let n = np as isize - shift;
                    if n < 0 || n >= db as isize {
                        continue;
                    }
                    let n = n as usize;
                    let x = amp[m * db + n];
                    if x.norm_sqr() == 0.0 {
                        continue;
                    }
                    let k = kernel(m.min(mp), n.min(np), d);
                    f += amp[mp * db + np].conj() * x * k;
                }
            }
        }
        acc += w * f.re;
    }
    Ok(acc / total)
}

/// Closed form for the squeezed vacuum: 1 / (1 + e^{-2s}).
pub fn tmss_teleport_fidelity(s: f64) -> f64 {
    1.0 / (1.0 + (-2.0 * s).exp())
}

/// Squeezing whose vacuum teleports with fidelity `f`, f in [1/2, 1).
pub fn tmss_squeezing_for_fidelity(f: f64) -> Result<f64> {
    if !(0.5..1.0).contains(&f) {
        return Err(PnesError::InvalidParameter(format!(
            "fidelity {f} outside [1/2, 1)"
        )));
    }
    Ok(-0.5 * (1.0 / f - 1.0).ln())
}

#[derive(Clone, Debug, PartialEq)]
pub struct PnesOptimum {
    pub coefficients: PnesCoefficients,
    pub value: f64,
    pub trace: OptimizerTrace,
}

fn coeffs_from_angles(angles: &[f64]) -> PnesCoefficients {
    let c = sphere_to_coefficients(angles);
    PnesCoefficients::from_real(&c).expect("unit vector")
}

fn sphere_bounds(n: usize) -> Result<Bounds> {
    Bounds::uniform(n, 0.0, std::f64::consts::FRAC_PI_2)
}

/// Minimize `objective` over nonnegative N-photon PNES amplitudes (hyperspherical angles).
pub fn optimize_pnes<F>(n: usize, objective: F, cfg: &OptimizerConfig) -> Result<PnesOptimum>
where
    F: Fn(&PureState) -> Result<f64> + Sync,
{
    if n == 0 {
        return Err(PnesError::InvalidParameter("N must be at least 1".into()));
    }
    let f = |x: &[f64]| -> f64 {
        make_pnes(&coeffs_from_angles(x), n)
            .and_then(|s| objective(&s))
            .unwrap_or(f64::INFINITY)
    };
    let m = minimize(f, &sphere_bounds(n)?, cfg)?;
    Ok(PnesOptimum {
        coefficients: coeffs_from_angles(&m.x),
        value: m.value,
        trace: m.trace,
    })
}

/// Maximize teleportation fidelity over nonnegative N-photon PNES amplitudes.
pub fn optimize_pnes_for_teleportation(n: usize, cfg: &OptimizerConfig) -> Result<PnesOptimum> {
    let mut o = optimize_pnes(n, |s| teleport_fidelity_coherent(s).map(|f| -f), cfg)?;
    o.value = -o.value;
    Ok(o)
}

/// Minimize the EPR correlation over nonnegative N-photon PNES amplitudes.
pub fn optimize_pnes_for_epr(n: usize, cfg: &OptimizerConfig) -> Result<PnesOptimum> {
    optimize_pnes(n, |s| epr_correlation(s), cfg)
}

/// Displacements (alpha, alpha', beta, beta') of the Bell-Wigner combination.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BellSettings {
    pub alpha: C64,
    pub alpha_p: C64,
    pub beta: C64,
    pub beta_p: C64,
}

impl BellSettings {
    pub fn real(a: f64, ap: f64, b: f64, bp: f64) -> Self {
        let c = |x| C64::new(x, 0.0);
        BellSettings {
            alpha: c(a),
            alpha_p: c(ap),
            beta: c(b),
            beta_p: c(bp),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SettingsStrategy {
    /// All four displacements real.
    RealLine,
    /// Independent complex displacements.
    Complex,
}

impl SettingsStrategy {
    fn dim(self) -> usize {
        match self {
            SettingsStrategy::RealLine => 4,
            SettingsStrategy::Complex => 8,
        }
    }

    fn decode(self, x: &[f64]) -> BellSettings {
        match self {
            SettingsStrategy::RealLine => BellSettings::real(x[0], x[1], x[2], x[3]),
            SettingsStrategy::Complex => BellSettings {
                alpha: C64::new(x[0], x[1]),
                alpha_p: C64::new(x[2], x[3]),
                beta: C64::new(x[4], x[5]),
                beta_p: C64::new(x[6], x[7]),
            },
        }
    }
}

/// Range searched for each displacement component.
pub const SETTINGS_BOUND: f64 = 1.0;

/// B = (pi^2/4) |W(a,b) + W(a,b') + W(a',b) - W(a',b')|.
pub fn bell_bw<E: Ensemble + ?Sized>(state: &E, set: &BellSettings) -> Result<f64> {
    let cut = state.cutoffs();
    if cut.modes() != 2 {
        return Err(PnesError::Incompatible(format!(
            "expected 2 modes, got {}",
            cut.modes()
        )));
    }
    let (ca, cb) = (cut.cutoff(0), cut.cutoff(1));
    let pa = displaced_parity(set.alpha, ca);
    let pap = displaced_parity(set.alpha_p, ca);
    let pb = displaced_parity(set.beta, cb);
    let pbp = displaced_parity(set.beta_p, cb);
    let w = |x, y| wigner_from_parities(state, x, y);
    let sum = w(&pa, &pb)? + w(&pa, &pbp)? + w(&pap, &pb)? - w(&pap, &pbp)?;
    Ok(std::f64::consts::PI.powi(2) / 4.0 * sum.abs())
}

#[derive(Clone, Debug, PartialEq)]
pub struct BellOptimum {
    pub settings: BellSettings,
    pub value: f64,
    pub trace: OptimizerTrace,
}

/// Maximize B over the displacement settings.
pub fn optimize_bell<E: Ensemble + Sync + ?Sized>(
    state: &E,
    strategy: SettingsStrategy,
    cfg: &OptimizerConfig,
) -> Result<BellOptimum> {
    let b = Bounds::uniform(strategy.dim(), -SETTINGS_BOUND, SETTINGS_BOUND)?;
    let f = |x: &[f64]| bell_bw(state, &strategy.decode(x)).map_or(f64::INFINITY, |v| -v);
    let m: Minimum = minimize(f, &b, cfg)?;
    Ok(BellOptimum {
        settings: strategy.decode(&m.x),
        value: -m.value,
        trace: m.trace,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PnesBellOptimum {
    pub coefficients: PnesCoefficients,
    pub settings: BellSettings,
    pub value: f64,
    pub trace: OptimizerTrace,
}

/// Jointly maximize B over nonnegative N-photon PNES amplitudes and the settings.
pub fn optimize_pnes_for_bell(
    n: usize,
    strategy: SettingsStrategy,
    cfg: &OptimizerConfig,
) -> Result<PnesBellOptimum> {
    if n == 0 {
        return Err(PnesError::InvalidParameter("N must be at least 1".into()));
    }
    let k = strategy.dim();
    let mut lo = vec![0.0; n];
    let mut hi = vec![std::f64::consts::FRAC_PI_2; n];
    lo.extend(std::iter::repeat(-SETTINGS_BOUND).take(k));
    hi.extend(std::iter::repeat(SETTINGS_BOUND).take(k));
    let b = Bounds::new(lo, hi)?;
    let eval = |x: &[f64]| -> Result<f64> {
        let s: PureState = make_pnes(&coeffs_from_angles(&x[..n]), n)?;
        bell_bw(&s, &strategy.decode(&x[n..]))
    };
    let m = minimize(|x: &[f64]| eval(x).map_or(f64::INFINITY, |v| -v), &b, cfg)?;
    Ok(PnesBellOptimum {
        coefficients: coeffs_from_angles(&m.x[..n]),
        settings: strategy.decode(&m.x[n..]),
        value: -m.value,
        trace: m.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FockCutoffs;
    use crate::states::make_tmss;

    #[test]
    fn vacuum_is_classical() {
        let v = PureState::vacuum(FockCutoffs::uniform(2, 3).unwrap());
        assert!((teleport_fidelity_coherent(&v).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn tmss_matches_closed_form() {
        for s in [0.1, 0.5, 1.0] {
            let psi = make_tmss(s, 60).unwrap();
            let f = teleport_fidelity_coherent(&psi).unwrap();
            assert!((f - tmss_teleport_fidelity(s)).abs() < 1e-9, "s = {s}: {f}");
        }
    }

    #[test]
    fn degenerate_settings_are_local() {
        let psi = make_tmss(0.8, 40).unwrap();
        let z = C64::new(0.2, -0.1);
        let set = BellSettings {
            alpha: z,
            alpha_p: z,
            beta: -z,
            beta_p: -z,
        };
        assert!(bell_bw(&psi, &set).unwrap() <= 2.0 + 1e-12);
    }
}
