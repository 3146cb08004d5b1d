//! Threshold optimization by nested bisection on the equalization system,
//! and the brute-force γ surface used to cross-check it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Evaluator, ExponentError};
use crate::model::{Class, ClassPair, Thresholds, User};
use crate::optim::{bisect_increasing, Bracket};
use crate::value::{ext_sub, ExponentValue};

/// How the threshold of one user was settled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisStatus {
    /// The two class branches were equalized inside `(0, 1)`.
    Equalized,
    /// The difference never reached zero from below; `γ = 0`.
    LowerBoundary,
    /// The difference stayed negative; `γ = 1`.
    UpperBoundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSolution {
    pub gamma: Thresholds,
    /// `min_{i₁,i₂} f_{i₁,i₂}(γ⋆)`, carrying `ρ⋆`, `λ⋆` of the binding term.
    pub exponent: ExponentValue,
    /// Class pair and error type attaining the exponent.
    pub binding: (ClassPair, crate::model::ErrorType),
    /// `f_{i₁,i₂}(γ⋆)` in [`ClassPair::ALL`] order.
    pub f: [f64; 4],
    pub status: [AxisStatus; 2],
    /// `|min_{i₂} f_{1,i₂} − min_{i₂} f_{2,i₂}|` and the user-2 analogue at
    /// `γ⋆`; `None` for an axis settled on the boundary.
    pub residuals: [Option<f64>; 2],
    /// Number of `γ` points at which all four `f` were evaluated.
    pub evaluations: usize,
}

/// `min_{i_ν̄} f` for class `c` of `user`, minimizing over the other user's class.
fn branch(f: &[f64; 4], user: User, c: Class) -> f64 {
    ClassPair::ALL
        .iter()
        .filter(|cp| cp.of(user) == c)
        .map(|cp| f[cp.index()])
        .fold(f64::INFINITY, f64::min)
}

/// Class-1 branch minus class-2 branch for `user`; non-decreasing in `γ_user`.
/// Equal infinities count as zero.
fn difference(f: &[f64; 4], user: User) -> f64 {
    ext_sub(branch(f, user, Class::One), branch(f, user, Class::Two))
}

struct Counter<'e, 'a> {
    ev: &'e Evaluator<'a>,
    calls: std::cell::Cell<usize>,
}

impl Counter<'_, '_> {
    fn f(&self, g: Thresholds) -> [f64; 4] {
        self.calls.set(self.calls.get() + 1);
        self.ev.f_values(g)
    }
}

/// Root of a non-decreasing difference on `[0, 1]` with the boundary rule:
/// a difference that is already `≥ 0` at 0 puts the threshold at 0, one still
/// negative at 1 puts it at 1.
fn solve_axis(
    mut d: impl FnMut(f64) -> f64,
    tol: f64,
    residual: f64,
    monotone_tol: f64,
    check: Option<User>,
) -> Result<(f64, AxisStatus), ExponentError> {
    let d0 = d(0.0);
    if d0 >= 0.0 {
        return Ok((0.0, AxisStatus::LowerBoundary));
    }
    let d1 = d(1.0);
    if d1 < 0.0 {
        return Ok((1.0, AxisStatus::UpperBoundary));
    }
    let (br, trail) = bisect_increasing(&mut d, 0.0, d0, 1.0, d1, tol, residual);
    if let Some(user) = check {
        let mut pts = trail;
        pts.push((0.0, d0));
        pts.push((1.0, d1));
        check_monotone(&mut pts, monotone_tol, user)?;
    }
    Ok(settle(br))
}

fn settle(br: Bracket) -> (f64, AxisStatus) {
    if br.d_lo == f64::NEG_INFINITY {
        // Everything left of the jump evaluates the class-1 branch alone,
        // which is flat there: the lower boundary attains the same value.
        return (0.0, AxisStatus::LowerBoundary);
    }
    if br.d_hi == f64::INFINITY {
        return (1.0, AxisStatus::UpperBoundary);
    }
    let span = br.d_hi - br.d_lo;
    let x = if span > 0.0 { br.lo + (br.hi - br.lo) * (-br.d_lo / span) } else { 0.5 * (br.lo + br.hi) };
    (x.clamp(br.lo, br.hi), AxisStatus::Equalized)
}

fn check_monotone(pts: &mut [(f64, f64)], tol: f64, user: User) -> Result<(), ExponentError> {
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in pts.windows(2) {
        let ((ga, da), (gb, db)) = (w[0], w[1]);
        if da > db && ext_sub(da, db) > tol {
            return Err(ExponentError::NonMonotoneDetected {
                user: user.index() as u8 + 1,
                gamma_a: ga,
                d_a: da,
                gamma_b: gb,
                d_b: db,
            });
        }
    }
    Ok(())
}

/// User 2's threshold for fixed `γ₁`, with `min f` and user 1's difference there.
#[derive(Debug, Clone, Copy)]
struct Section {
    gamma2: f64,
    status: AxisStatus,
    value: f64,
    d1: f64,
}

/// Optimal thresholds for the evaluator's bank.
///
/// The inner loop equalizes user 2's branches for fixed `γ₁`; its difference
/// is monotone, which is checked on every solve. Along the resulting curve
/// `γ₂⋆(γ₁)` user 1's difference is not strictly monotone: it can vanish on
/// a whole interval, and every point there solves the equalization system.
/// The outer loop therefore brackets the zero set of that difference (up to
/// `plateau_tol`) from both sides and maximizes `min f` over it.
pub fn optimize_thresholds(ev: &Evaluator<'_>) -> Result<ThresholdSolution, ExponentError> {
    let cfg = *ev.config();
    let counter = Counter { ev, calls: std::cell::Cell::new(0) };
    let section = |g1: f64| -> Result<Section, ExponentError> {
        let (gamma2, status) = solve_axis(
            |g2| difference(&counter.f(Thresholds { gamma1: g1, gamma2: g2 }), User::Two),
            cfg.gamma_tol,
            cfg.residual_tol,
            cfg.monotone_tol,
            Some(User::Two),
        )?;
        let f = counter.f(Thresholds { gamma1: g1, gamma2 });
        let value = f.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Section { gamma2, status, value, d1: difference(&f, User::One) })
    };

    let at0 = section(0.0)?;
    let (g1, s1, sec) = if at0.d1 >= 0.0 {
        (0.0, AxisStatus::LowerBoundary, at0)
    } else {
        let at1 = section(1.0)?;
        if at1.d1 < 0.0 {
            (1.0, AxisStatus::UpperBoundary, at1)
        } else {
            outer_search(&section, at0, at1, &cfg)?
        }
    };
    let gamma = Thresholds { gamma1: g1, gamma2: sec.gamma2 };
    let s2 = sec.status;

    let mut best: Option<(ExponentValue, ClassPair, crate::model::ErrorType)> = None;
    let mut f = [f64::INFINITY; 4];
    for cp in ClassPair::ALL {
        let (v, tau) = ev.small_f(cp, gamma);
        f[cp.index()] = v.value;
        if best.as_ref().map_or(true, |b| v.value < b.0.value) {
            best = Some((v, cp, tau));
        }
    }
    let (exponent, cp, tau) = best.expect("four class pairs");
    let residual = |user: User, s: AxisStatus| (s == AxisStatus::Equalized).then(|| difference(&f, user).abs());
    Ok(ThresholdSolution {
        gamma,
        exponent,
        binding: (cp, tau),
        f,
        status: [s1, s2],
        residuals: [residual(User::One, s1), residual(User::Two, s2)],
        evaluations: counter.calls.get() + 4,
    })
}

/// Outer loop once `D(0) < 0 ≤ D(1)`.
fn outer_search(
    section: &dyn Fn(f64) -> Result<Section, ExponentError>,
    at0: Section,
    at1: Section,
    cfg: &crate::solver::SolverConfig,
) -> Result<(f64, AxisStatus, Section), ExponentError> {
    let tol = cfg.plateau_tol;
    // Left end of the zero set: last point with D < -tol.
    let mut left = ((0.0, at0), (1.0, at1));
    // Right end: last point with D <= tol.
    let mut right = ((0.0, at0), (1.0, at1));
    while left.1 .0 - left.0 .0 > cfg.gamma_tol {
        let m = 0.5 * (left.0 .0 + left.1 .0);
        let s = section(m)?;
        if s.d1 < -tol {
            left.0 = (m, s);
        } else {
            left.1 = (m, s);
        }
        if s.d1 <= tol {
            if m > right.0 .0 {
                right.0 = (m, s);
            }
        } else if m < right.1 .0 {
            right.1 = (m, s);
        }
    }
    while right.1 .0 - right.0 .0 > cfg.gamma_tol {
        let m = 0.5 * (right.0 .0 + right.1 .0);
        let s = section(m)?;
        if s.d1 <= tol {
            right.0 = (m, s);
        } else {
            right.1 = (m, s);
        }
    }

    let mut candidates: Vec<(f64, AxisStatus, Section)> = Vec::new();
    if left.0 .1.d1 == f64::NEG_INFINITY {
        // Left of the jump only the class-1 branch is finite, and it is flat
        // there: the lower boundary attains the same value.
        candidates.push((0.0, AxisStatus::LowerBoundary, at0));
    }
    if right.1 .1.d1 == f64::INFINITY {
        candidates.push((1.0, AxisStatus::UpperBoundary, at1));
    }
    let a = left.1;
    let b = right.0;
    if b.0 >= a.0 {
        candidates.push((a.0, AxisStatus::Equalized, a.1));
        candidates.push((b.0, AxisStatus::Equalized, b.1));
        if b.0 - a.0 > 2.0 * cfg.gamma_tol {
            let mut err = None;
            let mut best: Option<(f64, Section)> = None;
            crate::optim::golden_section_min(
                |x| match section(x) {
                    Ok(s) => {
                        if best.map_or(true, |b| s.value > b.1.value) {
                            best = Some((x, s));
                        }
                        -s.value
                    }
                    Err(e) => {
                        err.get_or_insert(e);
                        f64::NAN
                    }
                },
                a.0,
                b.0,
                cfg.gamma_tol,
            );
            if let Some(e) = err {
                return Err(e);
            }
            if let Some((x, s)) = best {
                candidates.push((x, AxisStatus::Equalized, s));
            }
        }
    } else {
        // Zero set thinner than the tolerance: interpolate the crossing.
        let (lo, hi) = left;
        let (x, _) = settle(Bracket { lo: lo.0, d_lo: lo.1.d1, hi: hi.0, d_hi: hi.1.d1 });
        candidates.push((x, AxisStatus::Equalized, section(x)?));
    }
    let best = candidates
        .into_iter()
        .fold(None::<(f64, AxisStatus, Section)>, |acc, c| match acc {
            Some(a) if a.2.value >= c.2.value => Some(a),
            _ => Some(c),
        })
        .expect("at least one candidate");
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub gamma1: f64,
    pub gamma2: f64,
    /// `min_{i₁,i₂} f_{i₁,i₂}(γ₁, γ₂)`.
    #[serde(with = "crate::value::extended")]
    pub value: f64,
}

/// `min f` on a `grid × grid` lattice of `[0, 1]²`, `γ₁`-major.
pub fn gamma_surface(ev: &Evaluator<'_>, grid: usize) -> Vec<SurfacePoint> {
    let n = grid.max(2);
    let step = 1.0 / (n - 1) as f64;
    (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (a, b) = (k / n, k % n);
            let gamma1 = a as f64 * step;
            let gamma2 = b as f64 * step;
            SurfacePoint { gamma1, gamma2, value: ev.min_f(Thresholds { gamma1, gamma2 }) }
        })
        .collect()
}

/// Largest surface point; the last one in row order wins exact ties.
///
/// `min f` is often exactly flat in one threshold while that user's class-1
/// constraint is inactive; the equalization point sits at the upper edge of
/// such a plateau, which last-wins tie-breaking selects.
pub fn surface_max(points: &[SurfacePoint]) -> Option<SurfacePoint> {
    points.iter().copied().fold(None, |best, p| match best {
        Some(b) if b.value > p.value => Some(b),
        _ => Some(p),
    })
}
