//! Figure data with embedded tolerance checks.

use std::f64::consts::SQRT_2;

use clap::ValueEnum;
use pnes::measures::{entanglement_entropy, epr_correlation, tmss_entropy};
use pnes::optimizer::OptimizerConfig;
use pnes::protocols::{
    optimize_bell, optimize_pnes_for_bell, optimize_pnes_for_epr, optimize_pnes_for_teleportation,
    teleport_fidelity_coherent, tmss_squeezing_for_fidelity, SettingsStrategy,
};
use pnes::schemes::{
    best_branch, bs_error_sweep, n1_grid, n2_grid, scheme1_n1_point, scheme1_point_from_fit, scheme2_n1_point,
    scheme2_point_from_fit, CircuitDefaults, ClickModel, FitMode, RunConfig, SchemeCutoffs,
};
use pnes::states::{make_pnes, make_tmss, tmss_cutoff, PnesCoefficients, TMSS_TAIL};
use rayon::prelude::*;

use crate::commands::TELEPORT_N2;
use crate::config::{Overrides, DEFAULT_ETA};
use crate::table::{fmt_num, Cell, Table};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    #[value(name = "1a")]
    F1a,
    #[value(name = "1b")]
    F1b,
    #[value(name = "2a")]
    F2a,
    #[value(name = "2b")]
    F2b,
    #[value(name = "5")]
    F5,
    #[value(name = "6a")]
    F6a,
    #[value(name = "6b")]
    F6b,
    #[value(name = "7")]
    F7,
}

/// Checked figure data: `failed` lists the violated tolerances.
pub struct FigureData {
    pub table: Table,
    pub failed: Vec<String>,
}

struct Checks {
    notes: Vec<String>,
    failed: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Checks { notes: Vec::new(), failed: Vec::new() }
    }

    fn check(&mut self, what: String, pass: bool) {
        self.notes.push(format!("check {}: {what}", if pass { "PASS" } else { "FAIL" }));
        if !pass {
            self.failed.push(what);
        }
    }

    fn finish(self, mut table: Table, header: &[String]) -> FigureData {
        let mut notes: Vec<String> = header.to_vec();
        notes.extend(self.notes);
        notes.append(&mut table.notes);
        table.notes = notes;
        FigureData { table, failed: self.failed }
    }
}

fn s_grid(max: f64, step: f64) -> Vec<f64> {
    let n = (max / step).round() as usize;
    (0..=n).map(|k| k as f64 * step).collect()
}

fn tmss(s: f64) -> Result<pnes::fock::PureState, CliError> {
    Ok(make_tmss(s, tmss_cutoff(s, TMSS_TAIL))?)
}

fn equal_pnes(n: usize) -> Result<pnes::fock::PureState, CliError> {
    Ok(make_pnes(&PnesCoefficients::from_real(&vec![1.0; n + 1])?, n)?)
}

const PNES_N: [usize; 3] = [1, 2, 10];

fn close(got: f64, want: f64, tol: f64) -> (String, bool) {
    (format!("{} vs {} (tol {tol:e})", fmt_num(got), fmt_num(want)), (got - want).abs() <= tol)
}

fn fig1a() -> Result<FigureData, CliError> {
    const TOL: f64 = 1e-3;
    const TMSS_TOL: f64 = 5e-3;
    let quoted = [1.0, 1.585, 3.459];
    let mut c = Checks::new();
    let pnes: Vec<f64> = PNES_N.iter().map(|&n| entanglement_entropy(&equal_pnes(n)?).map_err(Into::into)).collect::<Result<_, CliError>>()?;
    for (k, n) in PNES_N.iter().enumerate() {
        let (w, ok) = close(pnes[k], quoted[k], TOL);
        c.check(format!("equal-amplitude PNES N={n} entropy {w}"), ok);
    }
    for (k, s) in [0.5185, 0.7335, 1.391].into_iter().enumerate() {
        let (w, ok) = close(entanglement_entropy(&tmss(s)?)?, quoted[k], TMSS_TOL);
        c.check(format!("TMSS s={s} entropy {w}"), ok);
    }
    let mut t = Table::new(&["s", "entropy_tmss", "entropy_tmss_closed", "entropy_pnes_N1", "entropy_pnes_N2", "entropy_pnes_N10"]);
    let rows: Vec<Vec<Cell>> = s_grid(2.0, 0.05)
        .into_par_iter()
        .map(|s| -> Result<Vec<Cell>, CliError> {
            let mut row: Vec<Cell> = vec![s.into(), entanglement_entropy(&tmss(s)?)?.into(), tmss_entropy(s).into()];
            row.extend(pnes.iter().map(|&e| Cell::Num(e)));
            Ok(row)
        })
        .collect::<Result<_, _>>()?;
    rows.into_iter().for_each(|r| t.push(r));
    Ok(c.finish(t, &["figure 1a: entanglement entropy (bits) of TMSS vs squeezing, and equal-amplitude PNES".into()]))
}

fn fig1b() -> Result<FigureData, CliError> {
    const TOL: f64 = 1e-3;
    let quoted = [1.172, 0.8315, 0.2516];
    let cfg = OptimizerConfig::default();
    let mut c = Checks::new();
    let pnes: Vec<f64> = PNES_N.iter().map(|&n| Ok(optimize_pnes_for_epr(n, &cfg)?.value)).collect::<Result<_, CliError>>()?;
    for (k, n) in PNES_N.iter().enumerate() {
        let (w, ok) = close(pnes[k], quoted[k], TOL);
        c.check(format!("minimized PNES N={n} EPR {w}"), ok);
    }
    for s in [0.2674, 0.4388, 1.037] {
        let (w, ok) = close(epr_correlation(&tmss(s)?)?, 2.0 * (-2.0 * s).exp(), TOL);
        c.check(format!("TMSS s={s} EPR against 2e^(-2s): {w}"), ok);
    }
    let (w, ok) = close(pnes[0], 2.0 * (2.0 - SQRT_2), 1e-6);
    c.check(format!("N=1 minimum against 2(2 - sqrt2): {w}"), ok);
    let mut t = Table::new(&["s", "epr_tmss", "epr_pnes_N1", "epr_pnes_N2", "epr_pnes_N10"]);
    let rows: Vec<Vec<Cell>> = s_grid(2.0, 0.05)
        .into_par_iter()
        .map(|s| -> Result<Vec<Cell>, CliError> {
            let mut row: Vec<Cell> = vec![s.into(), epr_correlation(&tmss(s)?)?.into()];
            row.extend(pnes.iter().map(|&e| Cell::Num(e)));
            Ok(row)
        })
        .collect::<Result<_, _>>()?;
    rows.into_iter().for_each(|r| t.push(r));
    Ok(c.finish(t, &["figure 1b: EPR correlation of TMSS vs squeezing, and of minimizing PNES".into()]))
}

fn fig2a() -> Result<FigureData, CliError> {
    let cfg = OptimizerConfig::default();
    let mut c = Checks::new();
    let opt: Vec<_> = (1..=3).map(|n| optimize_pnes_for_teleportation(n, &cfg)).collect::<Result<_, _>>()?;
    let (w, ok) = close(opt[0].value, (3.0 + 5f64.sqrt()) / 8.0, 1e-6);
    c.check(format!("N=1 optimum against (3 + sqrt5)/8: {w}"), ok);
    let (w, ok) = close(opt[1].value, 0.7334, 1e-3);
    c.check(format!("N=2 optimum {w}"), ok);
    let m = opt[1].coefficients.magnitudes();
    let dev = m.iter().zip(TELEPORT_N2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    c.check(format!("N=2 optimal coefficients within 1e-2 of {TELEPORT_N2:?}: max dev {}", fmt_num(dev)), dev <= 1e-2);
    for (k, want) in [0.320, 0.506, 0.638].into_iter().enumerate() {
        let (w, ok) = close(tmss_squeezing_for_fidelity(opt[k].value)?, want, 5e-3);
        c.check(format!("equivalent TMSS squeezing for N={}: {w}", k + 1), ok);
    }
    let mut t = Table::new(&["s", "fidelity_tmss", "fidelity_tmss_closed", "fidelity_pnes_N1", "fidelity_pnes_N2", "fidelity_pnes_N3"]);
    let rows: Vec<Vec<Cell>> = s_grid(1.5, 0.05)
        .into_par_iter()
        .map(|s| -> Result<Vec<Cell>, CliError> {
            let f = teleport_fidelity_coherent(&tmss(s)?)?;
            let mut row: Vec<Cell> = vec![s.into(), f.into(), pnes::protocols::tmss_teleport_fidelity(s).into()];
            row.extend(opt.iter().map(|o| Cell::Num(o.value)));
            Ok(row)
        })
        .collect::<Result<_, _>>()?;
    rows.into_iter().for_each(|r| t.push(r));
    Ok(c.finish(t, &["figure 2a: coherent-state teleportation fidelity of TMSS vs squeezing, and of optimal PNES".into()]))
}

fn fig2b() -> Result<FigureData, CliError> {
    const FLOOR: f64 = 2.3188;
    let cfg = OptimizerConfig::default();
    let mut c = Checks::new();
    let opt: Vec<_> = (1..=2).map(|n| optimize_pnes_for_bell(n, SettingsStrategy::RealLine, &cfg)).collect::<Result<_, _>>()?;
    c.check(format!("N=2 Bell optimum {} >= {FLOOR}", fmt_num(opt[1].value)), opt[1].value >= FLOOR);
    let m = opt[1].coefficients.magnitudes();
    let want = [0.589, 0.700, 0.404];
    let dev = m.iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    c.check(format!("N=2 Bell-optimal coefficients within 2e-2 of {want:?}: max dev {}", fmt_num(dev)), dev <= 2e-2);
    let mut t = Table::new(&["s", "bell_tmss", "bell_pnes_N1", "bell_pnes_N2"]);
    // lighter search for the TMSS curve, which needs cutoffs near 50 at s = 1.2
    let light = OptimizerConfig { starts: 4, max_evals: 4000, ..OptimizerConfig::default() };
    let rows: Vec<Vec<Cell>> = s_grid(1.2, 0.1)
        .into_par_iter()
        .map(|s| -> Result<Vec<Cell>, CliError> {
            let st = tmss(s)?;
            let b = optimize_bell(&st, SettingsStrategy::RealLine, &light)?.value;
            Ok(vec![s.into(), b.into(), opt[0].value.into(), opt[1].value.into()])
        })
        .collect::<Result<_, _>>()?;
    let tmss_max = rows.iter().filter_map(|r| if let Cell::Num(b) = r[1] { Some(b) } else { None }).fold(0.0, f64::max);
    c.check(format!("TMSS values stay below 2 sqrt2: max {}", fmt_num(tmss_max)), tmss_max <= 2.0 * SQRT_2);
    rows.into_iter().for_each(|r| t.push(r));
    Ok(c.finish(t, &["figure 2b: Bell-Wigner value B maximized over real settings for TMSS vs squeezing, and for optimal PNES".into()]))
}

/// Run configurations of the shipped figures: scheme 1 heralds its tap with a single-photon projection.
fn run_configs(o: &Overrides) -> Result<(RunConfig, RunConfig), CliError> {
    let eta = o.eta.unwrap_or(DEFAULT_ETA);
    let base = SchemeCutoffs::default();
    let cut = SchemeCutoffs::new(o.cutoff_signal.unwrap_or(base.signal), o.cutoff_ancilla.unwrap_or(base.ancilla))
        .map_err(CliError::from_config)?;
    let s1 = RunConfig::new(eta, cut).map_err(CliError::from_config)?.with_tap(ClickModel::SinglePhoton);
    let s2 = RunConfig::new(eta, cut).map_err(CliError::from_config)?;
    Ok((s1, s2))
}

fn header(fig: &str, what: &str, run: &RunConfig) -> Vec<String> {
    vec![format!(
        "figure {fig}: {what}; eta = {}, cutoffs = ({}, {}), squeezing 0.1, T^2 = 0.99",
        run.eta, run.cutoffs.signal, run.cutoffs.ancilla
    )]
}

fn fig5(o: &Overrides) -> Result<FigureData, CliError> {
    const F1: f64 = 0.996;
    const F2: f64 = 0.993;
    const P1_BAND: (f64, f64) = (2.4e-6 / 3.0, 3e-4);
    const P2: f64 = 1e-4;
    let (r1, r2) = run_configs(o)?;
    let d = CircuitDefaults::default();
    let rows: Vec<[f64; 5]> = n1_grid()
        .into_par_iter()
        .map(|c0| -> Result<[f64; 5], CliError> {
            let a = scheme1_n1_point(c0, &d, r1.cutoffs)?.run(&r1)?;
            let b = scheme2_n1_point(c0, &d, r2.cutoffs)?.run(&r2)?;
            Ok([c0, a.fidelity_vs_target.unwrap_or(0.0), b.fidelity_vs_target.unwrap_or(0.0), a.success_probability, b.success_probability])
        })
        .collect::<Result<_, _>>()?;
    let mut c = Checks::new();
    let col = |k: usize| rows.iter().map(move |r| r[k]);
    let m1 = col(1).fold(1.0, f64::min);
    let m2 = col(2).fold(1.0, f64::min);
    c.check(format!("min f1_scheme1 {} >= {F1}", fmt_num(m1)), m1 >= F1);
    c.check(format!("min f1_scheme2 {} >= {F2}", fmt_num(m2)), m2 >= F2);
    // the quoted band starts at |C0|^2 = 1/2
    let upper: Vec<f64> = rows.iter().filter(|r| r[0] >= 0.5 - 1e-12).map(|r| r[3]).collect();
    let in_band = upper.iter().all(|&p| p >= P1_BAND.0 && p <= P1_BAND.1);
    c.check(format!("p_scheme1 within [{}, {}] for |C0|^2 >= 1/2", fmt_num(P1_BAND.0), fmt_num(P1_BAND.1)), in_band);
    let increasing = rows.windows(2).all(|w| w[1][3] >= w[0][3]);
    c.check("p_scheme1 increases with |C0|".into(), increasing);
    let p2_ok = col(4).all(|p| (P2 / 3.0..=3.0 * P2).contains(&p));
    c.check(format!("p_scheme2 within a factor 3 of {}", fmt_num(P2)), p2_ok);
    let mut t = Table::new(&["c0_sq", "f1_scheme1", "f1_scheme2", "p_scheme1", "p_scheme2"]);
    rows.iter().for_each(|r| t.push(r.iter().map(|&x| Cell::Num(x)).collect()));
    Ok(c.finish(t, &header("5", "N=1 output fidelity and success probability of both schemes", &r1)))
}

fn n2_targets() -> Result<Vec<PnesCoefficients>, CliError> {
    let mut v = vec![PnesCoefficients::from_real(&TELEPORT_N2)?];
    for w in n2_grid() {
        v.push(PnesCoefficients::from_real(&w.map(f64::sqrt))?);
    }
    Ok(v)
}

fn fig6(o: &Overrides, scheme1: bool) -> Result<FigureData, CliError> {
    let (r1, r2) = run_configs(o)?;
    let (run, floor, name) = if scheme1 {
        (r1, 0.941, "f2_scheme1")
    } else {
        // below ancilla cutoff 4 the two-stage scheme-2 runs exceed the truncation limit
        let cut = SchemeCutoffs { ancilla: r2.cutoffs.ancilla.max(4), ..r2.cutoffs };
        (RunConfig { cutoffs: cut, ..r2 }, 0.949, "f2_scheme2")
    };
    let d = CircuitDefaults::default();
    let rows: Vec<Vec<Cell>> = n2_targets()?
        .into_par_iter()
        .map(|t| -> Result<Vec<Cell>, CliError> {
            let cands = if scheme1 {
                scheme1_point_from_fit(&t, FitMode::Exact, &d, run.cutoffs)?
            } else {
                scheme2_point_from_fit(&t, FitMode::Magnitudes, &d, run.cutoffs)?
            };
            let (p, r) = best_branch(cands, &run)?;
            let mut row: Vec<Cell> = p.label.iter().map(|&w| Cell::Num(w)).collect();
            row.push(r.fidelity_vs_target.into());
            row.push(r.success_probability.into());
            Ok(row)
        })
        .collect::<Result<_, _>>()?;
    let p_name = if scheme1 { "p_scheme1" } else { "p_scheme2" };
    let mut t = Table::new(&["c0_sq", "c1_sq", "c2_sq", name, p_name]);
    rows.into_iter().for_each(|r| t.push(r));
    t.sort_by_keys(3);
    let mut c = Checks::new();
    let min = t.column(name).into_iter().fold(1.0, f64::min);
    c.check(format!("min {name} {} >= {floor}", fmt_num(min)), min >= floor);
    let (fig, which) = if scheme1 { ("6a", "scheme 1") } else { ("6b", "scheme 2") };
    Ok(c.finish(t, &header(fig, &format!("N=2 output fidelity of {which}, two stages"), &run)))
}

fn fig7(o: &Overrides) -> Result<FigureData, CliError> {
    const DT: f64 = 0.01;
    let (r1, r2) = run_configs(o)?;
    let d = CircuitDefaults::default();
    let p1 = n1_grid().into_iter().map(|c| scheme1_n1_point(c, &d, r1.cutoffs)).collect::<Result<Vec<_>, _>>()?;
    let p2 = n1_grid().into_iter().map(|c| scheme2_n1_point(c, &d, r2.cutoffs)).collect::<Result<Vec<_>, _>>()?;
    let rows1 = bs_error_sweep(&p1, &[-DT, DT], &r1)?;
    let rows2 = bs_error_sweep(&p2, &[-DT, DT], &r2)?;
    let worst = |rows: &[pnes::schemes::SweepRow], n: usize| {
        let mut w = vec![f64::NEG_INFINITY; n];
        for r in rows {
            if let Some(d) = r.degradation {
                w[r.point] = w[r.point].max(d);
            }
        }
        w
    };
    let (w1, w2) = (worst(&rows1, p1.len()), worst(&rows2, p2.len()));
    let mut c = Checks::new();
    let bad: Vec<String> = n1_grid().iter().zip(w1.iter().zip(&w2)).filter(|(_, (a, b))| b > a).map(|(g, _)| fmt_num(*g)).collect();
    c.check(format!("scheme-2 worst degradation <= scheme-1 at every |C0|^2 (violations: {})", if bad.is_empty() { "none".into() } else { bad.join(" ") }), bad.is_empty());
    let mut t = Table::new(&["scheme", "c0_sq", "bs", "delta_t", "fidelity", "degradation"]);
    for (k, rows) in [(1usize, rows1), (2, rows2)] {
        for r in rows {
            t.push(vec![k.into(), r.label[0].into(), r.which_bs.into(), r.delta_t.into(), r.fidelity.into(), r.degradation.into()]);
        }
    }
    t.sort_by_keys(4);
    Ok(c.finish(t, &header("7", &format!("N=1 fidelity with mixing-splitter transmission shifted by +-{DT}"), &r1)))
}

pub fn reproduce(fig: Figure, o: &Overrides) -> Result<FigureData, CliError> {
    match fig {
        Figure::F1a => fig1a(),
        Figure::F1b => fig1b(),
        Figure::F2a => fig2a(),
        Figure::F2b => fig2b(),
        Figure::F5 => fig5(o),
        Figure::F6a => fig6(o, true),
        Figure::F6b => fig6(o, false),
        Figure::F7 => fig7(o),
    }
}
