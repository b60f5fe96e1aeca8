//! First-order expansions of the circuits in the small squeezing and reflectivity.
//!
//! Each beam splitter B(i, j) with transmission T contributes 1 - (R/T) a_i a_j^dag, each
//! squeezer 1 - s a_i^dag a_j^dag, and the final splitter is folded into the ancilla
//! creation operators. The heralds become projections onto |1>, |0>.

use num_complex::Complex64 as C64;

use super::{FirstBranch, Scheme1Branch, Scheme1StageParams, Scheme2StageParams, SecondBranch};
use crate::error::{PnesError, Result};
use crate::fock::{Ladder, PureState};
use crate::optics::apply_two_mode_squeezer;

const ANCILLA: usize = 2;

fn ratio(t: f64) -> f64 {
    (1.0 - t * t).max(0.0).sqrt() / t
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// (1 + k sig (sum_j c_j a_j^dag)) |s>
fn factor(s: &PureState, k: f64, sig: (usize, Ladder), anc: [(usize, f64); 2]) -> Result<PureState> {
    let base = s.apply_ladder(sig.0, sig.1)?;
    let mut out = s.clone();
    for (mode, c) in anc {
        out.add_scaled(re(k * c), &base.apply_ladder(mode, Ladder::Create)?)?;
    }
    Ok(out)
}

/// Project ancillas (mode 3 then mode 2) onto the given photon numbers.
fn project_pair(s: &PureState, n2: usize, n3: usize) -> Result<PureState> {
    s.project(3, n3)?.project(2, n2)
}

fn two_mode(s: &PureState) -> Result<()> {
    if s.modes() != 2 {
        return Err(PnesError::Incompatible(format!("expected 2 modes, got {}", s.modes())));
    }
    Ok(())
}

/// First-order conditional output of one scheme-1 stage (unnormalized), with an ideal
/// single-photon tap and ideal detectors.
pub fn perturbative_scheme1(input: &PureState, p: &Scheme1StageParams) -> Result<PureState> {
    two_mode(input)?;
    p.validate()?;
    let (t, r) = (p.t_n, (1.0 - p.t_n * p.t_n).max(0.0).sqrt());
    // modes a0 b1 c2 d3
    let s = apply_two_mode_squeezer(input, 0, 1, p.xi)?;
    let s = s.with_vacuum_mode(ANCILLA)?.with_vacuum_mode(ANCILLA)?;
    let s = factor(&s, -ratio(p.t1), (0, Ladder::Annihilate), [(2, t), (3, r)])?;
    let mut s = s.apply_ladder(0, Ladder::Create)?;
    s.scale(re(-p.s_tap));
    let s = factor(&s, -ratio(p.t2), (0, Ladder::Annihilate), [(3, t), (2, -r)])?;
    let s = match p.branch {
        Scheme1Branch::Pd1Click => project_pair(&s, 0, 1)?,
        Scheme1Branch::Pd2Click => project_pair(&s, 1, 0)?,
    };
    apply_two_mode_squeezer(&s, 0, 1, p.xi.inverse())
}

/// First-order conditional output of one scheme-2 stage (unnormalized), ideal detectors.
pub fn perturbative_scheme2(input: &PureState, p: &Scheme2StageParams) -> Result<PureState> {
    two_mode(input)?;
    p.validate()?;
    let split = |t: f64| (t, (1.0 - t * t).max(0.0).sqrt());
    let (to, ro) = split(p.t_odd);
    let (te, re_) = split(p.t_even);
    // first half: c2 d3
    let s = input.with_vacuum_mode(ANCILLA)?.with_vacuum_mode(ANCILLA)?;
    let s = factor(&s, -p.s1, (0, Ladder::Create), [(2, to), (3, ro)])?;
    let s = factor(&s, -ratio(p.t1), (1, Ladder::Annihilate), [(3, to), (2, -ro)])?;
    let s = match p.branch_first {
        FirstBranch::Pd1 => project_pair(&s, 0, 1)?,
        FirstBranch::Pd2 => project_pair(&s, 1, 0)?,
    };
    // second half: f2 e3
    let s = s.with_vacuum_mode(ANCILLA)?.with_vacuum_mode(ANCILLA)?;
    let s = factor(&s, -p.s2, (1, Ladder::Create), [(2, te), (3, -re_)])?;
    let s = factor(&s, -ratio(p.t2), (0, Ladder::Annihilate), [(3, te), (2, re_)])?;
    match p.branch_second {
        SecondBranch::Pd3 => project_pair(&s, 1, 0),
        SecondBranch::Pd4 => project_pair(&s, 0, 1),
    }
}
