//! Free-form subcommands: resource measures, protocols and scheme runs.

use pnes::fock::StateEnsemble;
use pnes::measures::{entanglement_entropy, epr_correlation};
use pnes::optimizer::OptimizerConfig;
use pnes::protocols::{
    optimize_bell, optimize_pnes_for_bell, optimize_pnes_for_epr, optimize_pnes_for_teleportation,
    teleport_fidelity_coherent, tmss_squeezing_for_fidelity, BellSettings, SettingsStrategy,
};
use pnes::schemes::{
    best_branch, bs_error_sweep, n1_grid, n2_grid, scheme1_n1_point, scheme1_point_from_fit, scheme2_n1_point,
    scheme2_point_from_fit, RunConfig, ScenarioPoint, SchemeResult,
};
use pnes::states::{make_pnes, PnesCoefficients};
use pnes::PnesError;
use rayon::prelude::*;

use crate::config::{resource_state, Family, Output, Overrides, ScenarioConfig};
use crate::table::{Cell, Table};
use crate::CliError;

/// Coefficients of the N=2 teleportation optimum, also the first N=2 grid target.
pub const TELEPORT_N2: [f64; 3] = [0.765, 0.535, 0.359];

pub struct Resource {
    pub name: String,
    pub state: pnes::fock::PureState,
    pub coefficients: Option<Vec<f64>>,
}

pub fn resource(coeffs: Option<&[f64]>, s: Option<f64>) -> Result<Resource, CliError> {
    let (name, state) = resource_state(coeffs, s)?;
    Ok(Resource { name, state, coefficients: None })
}

pub fn optimized(n: usize, which: &str) -> Result<Resource, CliError> {
    let cfg = OptimizerConfig::default();
    let o = match which {
        "teleport" => optimize_pnes_for_teleportation(n, &cfg)?,
        "epr" => optimize_pnes_for_epr(n, &cfg)?,
        _ => unreachable!("known objective"),
    };
    let c = o.coefficients.magnitudes();
    Ok(Resource {
        name: format!("pnes N={n} ({which} optimum)"),
        state: make_pnes(&o.coefficients, n)?,
        coefficients: Some(c),
    })
}

fn coefficient_columns(t: &mut Table, n: usize) {
    for k in 0..=n {
        t.columns.push(format!("c{k}"));
    }
}

fn coefficient_cells(c: Option<&[f64]>, n: usize) -> Vec<Cell> {
    (0..=n).map(|k| c.and_then(|c| c.get(k).copied()).into()).collect()
}

pub fn measures(r: &Resource) -> Result<Table, CliError> {
    let mut t = Table::new(&["resource", "entropy", "epr"]);
    let n = r.coefficients.as_ref().map_or(0, |c| c.len() - 1);
    if r.coefficients.is_some() {
        coefficient_columns(&mut t, n);
    }
    let mut row = vec![
        r.name.as_str().into(),
        entanglement_entropy(&r.state)?.into(),
        epr_correlation(&r.state)?.into(),
    ];
    if let Some(c) = &r.coefficients {
        row.extend(coefficient_cells(Some(c), n));
    }
    t.push(row);
    Ok(t)
}

pub fn teleport(r: &Resource) -> Result<Table, CliError> {
    let mut t = Table::new(&["resource", "fidelity", "equivalent_s"]);
    let n = r.coefficients.as_ref().map_or(0, |c| c.len() - 1);
    if r.coefficients.is_some() {
        coefficient_columns(&mut t, n);
    }
    let f = teleport_fidelity_coherent(&r.state)?;
    let mut row = vec![r.name.as_str().into(), f.into(), tmss_squeezing_for_fidelity(f).ok().into()];
    if let Some(c) = &r.coefficients {
        row.extend(coefficient_cells(Some(c), n));
    }
    t.push(row);
    Ok(t)
}

const SETTING_COLUMNS: [&str; 8] =
    ["alpha_re", "alpha_im", "alpha_p_re", "alpha_p_im", "beta_re", "beta_im", "beta_p_re", "beta_p_im"];

fn setting_cells(s: &BellSettings) -> Vec<Cell> {
    [s.alpha, s.alpha_p, s.beta, s.beta_p].iter().flat_map(|z| [Cell::Num(z.re), Cell::Num(z.im)]).collect()
}

/// Maximize B over settings for a fixed resource, or jointly with the N-photon amplitudes.
pub fn bell(r: Option<&Resource>, optimize_n: Option<usize>, strategy: SettingsStrategy) -> Result<Table, CliError> {
    let cfg = OptimizerConfig::default();
    let mut cols = vec!["resource", "bell"];
    cols.extend(SETTING_COLUMNS);
    let mut t = Table::new(&cols);
    match (r, optimize_n) {
        (Some(r), None) => {
            let o = optimize_bell(&r.state, strategy, &cfg)?;
            let mut row = vec![r.name.as_str().into(), o.value.into()];
            row.extend(setting_cells(&o.settings));
            t.push(row);
        }
        (None, Some(n)) => {
            let o = optimize_pnes_for_bell(n, strategy, &cfg)?;
            coefficient_columns(&mut t, n);
            let mut row = vec![format!("pnes N={n} (Bell optimum)").into(), o.value.into()];
            row.extend(setting_cells(&o.settings));
            row.extend(coefficient_cells(Some(&o.coefficients.magnitudes()), n));
            t.push(row);
        }
        _ => return Err(CliError::Validation("give a resource or --optimize N, not both".into())),
    }
    Ok(t)
}

fn weights_to_target(w: &[f64]) -> Result<PnesCoefficients, CliError> {
    if w.iter().any(|x| !(*x >= 0.0)) {
        return Err(CliError::Validation(format!("weights {w:?} must be nonnegative")));
    }
    Ok(PnesCoefficients::from_real(&w.iter().map(|x| x.sqrt()).collect::<Vec<_>>())?)
}

/// Every circuit the scenario describes, with its run under `run`.
pub fn prepare(cfg: &ScenarioConfig, run: &RunConfig) -> Result<Vec<(ScenarioPoint, SchemeResult)>, CliError> {
    let cut = run.cutoffs;
    let d = cfg.circuit.defaults();
    let scheme1 = cfg.scheme == Some(1);
    if let Some(p) = cfg.direct_point(cut)? {
        let r = p.run(run)?;
        return Ok(vec![(p, r)]);
    }
    let (targets, fit) = match &cfg.grid {
        Some(g) => match (g.family, &g.weights) {
            (Some(Family::N1), _) => {
                let build = if scheme1 { scheme1_n1_point } else { scheme2_n1_point };
                return n1_grid()
                    .into_par_iter()
                    .map(|c| {
                        let p = build(c, &d, cut).map_err(CliError::from_config)?;
                        let r = p.run(run)?;
                        Ok((p, r))
                    })
                    .collect();
            }
            (Some(Family::N2), _) => {
                let mut v = vec![PnesCoefficients::from_real(&TELEPORT_N2)?];
                for w in n2_grid() {
                    v.push(weights_to_target(&w)?);
                }
                (v, g.fit)
            }
            (None, Some(ws)) => (ws.iter().map(|w| weights_to_target(w)).collect::<Result<_, _>>()?, g.fit),
            (None, None) => unreachable!("validated"),
        },
        None => {
            let t = cfg.target_coefficients()?.ok_or_else(|| CliError::Validation("no target".into()))?;
            (vec![t], cfg.target.as_ref().map(|t| t.fit).unwrap_or_default())
        }
    };
    targets
        .into_par_iter()
        .map(|t| {
            let cands = if scheme1 {
                scheme1_point_from_fit(&t, fit.into(), &d, cut)
            } else {
                scheme2_point_from_fit(&t, fit.into(), &d, cut)
            }
            .map_err(CliError::from_config)?;
            Ok(best_branch(cands, run)?)
        })
        .collect()
}

fn max_len<'a>(it: impl Iterator<Item = &'a Vec<f64>>) -> usize {
    it.map(Vec::len).max().unwrap_or(0)
}

/// Scheme-less configs score their resource; scheme configs run their circuits.
pub fn scheme(cfg: &ScenarioConfig, o: &Overrides) -> Result<Table, CliError> {
    let outputs = cfg.outputs();
    if cfg.scheme.is_none() {
        let (name, state) = cfg.resource()?;
        let mut t = Table::new(&["resource"]);
        let mut row: Vec<Cell> = vec![name.into()];
        for out in &outputs {
            t.columns.push(out.name().into());
            row.push(match out {
                Output::Entropy => entanglement_entropy(&state)?.into(),
                Output::Epr => epr_correlation(&state)?.into(),
                Output::Teleport => teleport_fidelity_coherent(&state)?.into(),
                Output::Bell => optimize_bell(&state, SettingsStrategy::RealLine, &OptimizerConfig::default())?.value.into(),
                _ => unreachable!("validated"),
            });
        }
        t.push(row);
        return Ok(t);
    }
    let run = cfg.run_config(o)?;
    let runs = prepare(cfg, &run)?;
    let width = max_len(runs.iter().map(|(p, _)| &p.label));
    let mut t = Table::new(&[]);
    for k in 0..width {
        t.columns.push(format!("w{k}"));
    }
    let target = cfg.target_coefficients()?;
    for out in &outputs {
        if *out == Output::Coefficients {
            for k in 0..width {
                t.columns.push(format!("abs_c{k}"));
            }
            if target.is_some() {
                t.columns.push("target_dev".into());
            }
        } else {
            t.columns.push(out.name().into());
        }
    }
    let rows: Vec<Vec<Cell>> = runs
        .par_iter()
        .map(|(p, r)| -> Result<Vec<Cell>, CliError> {
            let mut row: Vec<Cell> = (0..width).map(|k| p.label.get(k).copied().into()).collect();
            for out in &outputs {
                match out {
                    Output::Fidelity => row.push(r.fidelity_vs_target.into()),
                    Output::Probability => row.push(r.success_probability.into()),
                    Output::Loss => row.push(r.truncation_loss.into()),
                    Output::Coefficients => {
                        let m = p.ideal.magnitudes();
                        row.extend((0..width).map(|k| Cell::from(m.get(k).copied())));
                        if let Some(tc) = &target {
                            let want = tc.magnitudes();
                            let n = m.len().max(want.len());
                            let dev = (0..n)
                                .map(|k| (m.get(k).copied().unwrap_or(0.0) - want.get(k).copied().unwrap_or(0.0)).abs())
                                .fold(0.0, f64::max);
                            row.push(dev.into());
                        }
                    }
                    Output::Epr => row.push(epr_correlation(&r.output)?.into()),
                    Output::Teleport => row.push(teleport_fidelity_coherent(&r.output)?.into()),
                    Output::Bell => row.push(bell_of(&r.output)?.into()),
                    Output::Entropy => unreachable!("validated"),
                }
            }
            Ok(row)
        })
        .collect::<Result<_, _>>()?;
    for row in rows {
        t.push(row);
    }
    t.sort_by_keys(width);
    t.note(format!("scheme {}, eta = {}, cutoffs = ({}, {})", cfg.scheme.unwrap_or(0), run.eta, run.cutoffs.signal, run.cutoffs.ancilla));
    Ok(t)
}

fn bell_of(rho: &StateEnsemble) -> Result<f64, PnesError> {
    Ok(optimize_bell(rho, SettingsStrategy::RealLine, &OptimizerConfig::default())?.value)
}

pub const DEFAULT_DELTAS: [f64; 2] = [-0.01, 0.01];

pub fn sweep(cfg: &ScenarioConfig, o: &Overrides, deltas: Option<&[f64]>) -> Result<Table, CliError> {
    if cfg.scheme.is_none() {
        return Err(CliError::Validation("sweep needs a scheme".into()));
    }
    let run = cfg.run_config(o)?;
    let deltas: Vec<f64> = deltas.map(<[f64]>::to_vec).or(cfg.deltas.clone()).unwrap_or(DEFAULT_DELTAS.to_vec());
    let points: Vec<ScenarioPoint> = prepare(cfg, &run)?.into_iter().map(|(p, _)| p).collect();
    sweep_table(&points, &deltas, &run)
}

pub fn sweep_table(points: &[ScenarioPoint], deltas: &[f64], run: &RunConfig) -> Result<Table, CliError> {
    let width = max_len(points.iter().map(|p| &p.label));
    let mut t = Table::new(&[]);
    for k in 0..width {
        t.columns.push(format!("w{k}"));
    }
    for c in ["bs", "delta_t", "fidelity", "degradation"] {
        t.columns.push(c.into());
    }
    for row in bs_error_sweep(points, deltas, run)? {
        let mut cells: Vec<Cell> = (0..width).map(|k| row.label.get(k).copied().into()).collect();
        cells.extend([row.which_bs.into(), row.delta_t.into(), row.fidelity.into(), row.degradation.into()]);
        t.push(cells);
    }
    t.sort_by_keys(width + 2);
    t.note(format!("eta = {}, cutoffs = ({}, {}); empty fidelity marks a transmission outside [-1, 1]", run.eta, run.cutoffs.signal, run.cutoffs.ancilla));
    Ok(t)
}
