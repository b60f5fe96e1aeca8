use num_complex::Complex64 as C64;
use pnes::fock::{fidelity_pure_vs_ensemble, FockCutoffs, PureState, StateEnsemble};
use pnes::optics::SqueezerParams;
use pnes::schemes::*;
use pnes::states::{apply_ideal_oprime, coefficients_of, make_pnes, CoherentOpParams, PairOpParams, PnesCoefficients};
use pnes::PnesError;
use proptest::prelude::*;

fn ideal_cfg(signal: usize, ancilla: usize) -> RunConfig {
    let mut cfg = RunConfig::new(1.0, SchemeCutoffs::new(signal, ancilla).unwrap())
        .unwrap()
        .with_click(ClickModel::SinglePhoton)
        .with_tap(ClickModel::SinglePhoton);
    cfg.loss_limit = 1e-4;
    cfg
}

fn bell_like(c: &[f64], cutoff: usize) -> PureState {
    make_pnes(&PnesCoefficients::from_real(c).unwrap(), cutoff).unwrap()
}

fn fid(a: &PureState, b: &StateEnsemble) -> f64 {
    fidelity_pure_vs_ensemble(&a.clone().normalized().unwrap(), b).unwrap()
}

fn amp(s: &PureState, n: usize) -> C64 {
    s.amplitude(&[n, n])
}

fn output_state(r: &SchemeResult) -> PureState {
    assert_eq!(r.output.len(), 1);
    r.output.iter().next().unwrap().1.clone()
}

fn ratio(t_sq: f64) -> f64 {
    (1.0 - t_sq).sqrt() / t_sq.sqrt()
}

#[test]
fn scheme1_recovers_first_order_coefficients() {
    // With no signal squeezing the stage acts as t a a^dag + r a^dag a; on
    // (|00> + |11>)/sqrt2 that leaves t|00> + (2t + r)|11>.
    let (t1sq, t2sq): (f64, f64) = (0.999, 0.998);
    let tn: f64 = 0.6;
    let rn = (1.0 - tn * tn).sqrt();
    let cfg = ideal_cfg(6, 4);
    let input = StateEnsemble::pure(bell_like(&[1.0, 1.0], 6)).unwrap();
    for branch in [Scheme1Branch::Pd1Click, Scheme1Branch::Pd2Click] {
        let p = Scheme1StageParams {
            xi: SqueezerParams::new(0.0, 0.0).unwrap(),
            s_tap: 0.05,
            t1: t1sq.sqrt(),
            t2: t2sq.sqrt(),
            t_n: tn,
            branch,
        };
        let out = output_state(&scheme1_run_from(&input, &[p], &cfg).unwrap());
        let got = (amp(&out, 1) / amp(&out, 0)).re - 2.0;
        let want = match branch {
            Scheme1Branch::Pd1Click => ratio(t1sq) * rn / (ratio(t2sq) * tn),
            Scheme1Branch::Pd2Click => ratio(t1sq) * tn / (-ratio(t2sq) * rn),
        };
        assert!((got / want - 1.0).abs() < 0.02, "{branch:?}: r/t = {got}, expected {want}");
    }
}

#[test]
fn scheme1_pure_annihilation_branch() {
    let p = Scheme1StageParams {
        xi: SqueezerParams::new(0.0, 0.0).unwrap(),
        s_tap: 0.05,
        t1: 0.999f64.sqrt(),
        t2: 0.999f64.sqrt(),
        t_n: 1.0,
        branch: Scheme1Branch::Pd1Click,
    };
    let input = bell_like(&[1.0, 1.0, 1.0], 6);
    let out = perturbative_scheme1(&input, &p).unwrap();
    // a a^dag alone: amplitudes grow as n + 1
    let c: Vec<f64> = (0..3).map(|n| (amp(&out, n) / amp(&out, 0)).re).collect();
    for (n, v) in c.iter().enumerate() {
        assert!((v - (n + 1) as f64).abs() < 1e-12, "{c:?}");
    }
}

#[test]
fn scheme2_recovers_odd_factor() {
    // t_even = 1 leaves the second half as b^dag; then
    // b^dag (t' b + r' a^dag)(|00> + |11>) = (t' + r')|11> + 2 r'|22>.
    let (s1, t1sq): (f64, f64) = (0.05, 0.998);
    let t_odd: f64 = 0.7;
    let r_odd = (1.0 - t_odd * t_odd).sqrt();
    let cfg = ideal_cfg(6, 4);
    let input = StateEnsemble::pure(bell_like(&[1.0, 1.0], 6)).unwrap();
    let p = Scheme2StageParams {
        s1,
        s2: 0.05,
        t1: t1sq.sqrt(),
        t2: 0.999f64.sqrt(),
        t_odd,
        t_even: 1.0,
        branch_first: FirstBranch::Pd1,
        branch_second: SecondBranch::Pd3,
    };
    let out = output_state(&scheme2_run_from(&input, &[p], &cfg).unwrap());
    let (c1, c2) = (amp(&out, 1).re, amp(&out, 2).re);
    assert!(amp(&out, 0).norm() < 1e-9 * c1.abs());
    let got = (c2 / 2.0) / (c1 - c2 / 2.0);
    let want = (-s1 * r_odd) / (-ratio(t1sq) * t_odd);
    assert!((got / want - 1.0).abs() < 0.02, "r'/t' = {got}, expected {want}");
}

#[test]
fn scheme2_without_first_squeezing_kills_vacuum() {
    let p = Scheme2StageParams {
        s1: 0.0,
        s2: 0.1,
        t1: 0.99f64.sqrt(),
        t2: 0.99f64.sqrt(),
        t_odd: 0.5,
        t_even: 0.5,
        branch_first: FirstBranch::Pd1,
        branch_second: SecondBranch::Pd3,
    };
    let vac = PureState::vacuum(FockCutoffs::uniform(2, 4).unwrap());
    let out = perturbative_scheme2(&vac, &p).unwrap();
    assert!(out.norm_sqr() < 1e-30);
    let cfg = ideal_cfg(4, 3);
    assert!(matches!(scheme2_run(&[p], &cfg), Err(PnesError::ZeroProbability)));
}

#[test]
fn scheme2_circuit_matches_ideal_pair_operator() {
    // With s = R/T in both halves the heralded output is the ideal two-step operator.
    let t_sq: f64 = 0.9999;
    let s = ratio(t_sq);
    let cfg = ideal_cfg(6, 3);
    let input = bell_like(&[0.8, 0.5, 0.3], 6);
    let odd = PairOpParams::real(0.6, 0.8);
    let even = PairOpParams::real(-0.28, 0.96);
    for (bf, bs) in [
        (FirstBranch::Pd1, SecondBranch::Pd3),
        (FirstBranch::Pd2, SecondBranch::Pd4),
        (FirstBranch::Pd1, SecondBranch::Pd4),
    ] {
        let p = Scheme2StageParams::from_ideal(&odd, &even, s, s, t_sq.sqrt(), t_sq.sqrt(), bf, bs).unwrap();
        let r = scheme2_run_from(&StateEnsemble::pure(input.clone()).unwrap(), &[p], &cfg).unwrap();
        let want = apply_ideal_oprime(&input, &odd, &even).unwrap();
        let f = fid(&want, &r.output);
        assert!(f > 0.9999, "{bf:?} {bs:?}: F = {f}");
    }
}

#[test]
fn scheme1_branches_realize_the_same_operator() {
    let op = CoherentOpParams {
        t: C64::new(0.6, 0.0),
        r: C64::new(-0.8, 0.0),
        xi: SqueezerParams::new(0.1, 0.0).unwrap(),
    };
    let t = 0.9999f64.sqrt();
    let cfg = ideal_cfg(8, 3);
    let run = |b| {
        let p = Scheme1StageParams::from_ideal(&op, 0.01, t, t, b).unwrap();
        let r = scheme1_run(&[p], &cfg).unwrap();
        coefficients_of(&output_state(&r)).unwrap()
    };
    let (c1, c2) = (run(Scheme1Branch::Pd1Click), run(Scheme1Branch::Pd2Click));
    for (a, b) in c1.as_slice().iter().zip(c2.as_slice()) {
        assert!((a - b).norm() < 1e-2, "{c1:?} vs {c2:?}");
    }
}

#[test]
fn detector_efficiency_is_monotone() {
    let d = CircuitDefaults::default();
    let cut = SchemeCutoffs::default();
    for c0sq in [0.2, 0.5, 0.8] {
        for point in [scheme1_n1_point(c0sq, &d, cut).unwrap(), scheme2_n1_point(c0sq, &d, cut).unwrap()] {
            let mut last = 0.0;
            for eta in [0.3, 0.5, 0.66, 0.8, 0.9, 1.0] {
                let cfg = RunConfig::new(eta, cut).unwrap();
                let f = point.run(&cfg).unwrap().fidelity_vs_target.unwrap();
                assert!(f >= last - 1e-12, "|C0|^2 = {c0sq}, eta = {eta}: {f} < {last}");
                last = f;
            }
        }
    }
}

#[test]
fn raising_cutoffs_is_stable() {
    let d = CircuitDefaults::default();
    let base = SchemeCutoffs::default();
    let raised = SchemeCutoffs::new(base.signal + 2, base.ancilla + 2).unwrap();
    for c0sq in [0.1, 0.5, 0.9] {
        for build in [scheme1_n1_point, scheme2_n1_point] {
            let lo = build(c0sq, &d, base).unwrap().run(&RunConfig::new(0.66, base).unwrap()).unwrap();
            let hi = build(c0sq, &d, raised).unwrap().run(&RunConfig::new(0.66, raised).unwrap()).unwrap();
            let df = (lo.fidelity_vs_target.unwrap() - hi.fidelity_vs_target.unwrap()).abs();
            let dp = (lo.success_probability / hi.success_probability - 1.0).abs();
            assert!(df < 1e-4 && dp < 0.01, "|C0|^2 = {c0sq}: dF = {df}, dp = {dp}");
        }
    }
}

#[test]
fn sweep_zero_shift_reproduces_base() {
    let d = CircuitDefaults::default();
    let cut = SchemeCutoffs::default();
    let cfg = RunConfig::new(0.66, cut).unwrap();
    let pts = vec![scheme1_n1_point(0.3, &d, cut).unwrap(), scheme2_n1_point(0.3, &d, cut).unwrap()];
    let rows = bs_error_sweep(&pts, &[0.0], &cfg).unwrap();
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert_eq!(r.degradation, Some(0.0));
    }
}

#[test]
fn fit_recovers_n1_closed_form() {
    let target = PnesCoefficients::from_real(&[0.6, -0.8]).unwrap();
    let sols = fit_params_to_target(&target, SchemeKind::Scheme1, &FitOptions::default()).unwrap();
    assert!(!sols.is_empty());
    for s in &sols {
        assert!(s.residual < 1e-10);
        assert!(target.magnitude_distance(&s.realized) < 1e-5);
    }
}

fn all_patterns() -> impl Iterator<Item = Scheme1Pattern> {
    (0..8).map(|k| Scheme1Pattern { c: k & 1 != 0, d: k & 2 != 0, e: k & 4 != 0 })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn herald_patterns_sum_to_one(
        eta in 0.05f64..=1.0,
        s in 0.0f64..0.15,
        s_tap in 0.0f64..0.1,
        t_sq in 0.9f64..=1.0,
        t_n in -1.0f64..=1.0,
    ) {
        let cfg = RunConfig::new(eta, SchemeCutoffs::new(10, 6).unwrap()).unwrap();
        let p = Scheme1StageParams {
            xi: SqueezerParams::new(s, 0.0).unwrap(),
            s_tap,
            t1: t_sq.sqrt(),
            t2: t_sq.sqrt(),
            t_n,
            branch: Scheme1Branch::Pd1Click,
        };
        let input = StateEnsemble::pure(PureState::vacuum(FockCutoffs::uniform(2, 10).unwrap())).unwrap();
        let mut total = 0.0;
        for pat in all_patterns() {
            match scheme1_stage(&input, &p, pat, &cfg) {
                Ok((_, q)) => total += q,
                Err(PnesError::ZeroProbability) => {}
                Err(e) => panic!("{e}"),
            }
        }
        prop_assert!((total - 1.0).abs() < 1e-8, "sum = {}", total);
    }

    #[test]
    fn scheme1_circuit_matches_perturbative(
        t_n in -0.95f64..0.95,
        s in 0.0f64..0.2,
        phi in 0.0f64..std::f64::consts::TAU,
        pd2 in any::<bool>(),
        c in proptest::collection::vec(0.1f64..1.0, 3),
    ) {
        let (s_tap, t_sq): (f64, f64) = (0.05, 0.999);
        let p = Scheme1StageParams {
            xi: SqueezerParams::new(s, phi).unwrap(),
            s_tap,
            t1: t_sq.sqrt(),
            t2: t_sq.sqrt(),
            t_n,
            branch: if pd2 { Scheme1Branch::Pd2Click } else { Scheme1Branch::Pd1Click },
        };
        let input = bell_like(&c, 10);
        let oracle = perturbative_scheme1(&input, &p).unwrap();
        let r = scheme1_run_from(&StateEnsemble::pure(input).unwrap(), &[p], &ideal_cfg(10, 3)).unwrap();
        let f = fid(&oracle, &r.output);
        let bound = 1.0 - 10.0 * f64::max(s_tap * s_tap, 1.0 - t_sq);
        prop_assert!(f > bound, "F = {}", f);
    }

    #[test]
    fn scheme2_circuit_matches_perturbative(
        t_odd in -0.95f64..0.95,
        t_even in -0.95f64..0.95,
        pd2 in any::<bool>(),
        pd4 in any::<bool>(),
        c in proptest::collection::vec(0.1f64..1.0, 3),
    ) {
        let (s, t_sq): (f64, f64) = (0.05, 0.999);
        let p = Scheme2StageParams {
            s1: s,
            s2: s,
            t1: t_sq.sqrt(),
            t2: t_sq.sqrt(),
            t_odd,
            t_even,
            branch_first: if pd2 { FirstBranch::Pd2 } else { FirstBranch::Pd1 },
            branch_second: if pd4 { SecondBranch::Pd4 } else { SecondBranch::Pd3 },
        };
        let input = bell_like(&c, 8);
        let oracle = perturbative_scheme2(&input, &p).unwrap();
        let r = scheme2_run_from(&StateEnsemble::pure(input).unwrap(), &[p], &ideal_cfg(8, 3)).unwrap();
        let f = fid(&oracle, &r.output);
        let bound = 1.0 - 10.0 * f64::max(s * s, 1.0 - t_sq);
        prop_assert!(f > bound, "F = {}", f);
    }
}
