//! Gallager source and channel functions.
//!
//! Natural logarithms throughout; every exponent is in nats.

use crate::model::{support_min, Class, ErrorType, JointSource};
use crate::optim::{log_sum_exp, minimize_half_line, HalfLineMin};
use crate::solver::SolverConfig;
use crate::value::ExponentValue;

/// Row-stochastic tolerance for point-to-point channels.
pub const CHANNEL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GallagerError {
    #[error("channel row {row} sums to {sum}")]
    RowSum { row: usize, sum: f64 },
    #[error("channel entry ({row}, {col}) = {value} is not a probability")]
    BadEntry { row: usize, col: usize, value: f64 },
    #[error("channel has {len} entries, not {nx} x {ny}")]
    Shape { nx: usize, ny: usize, len: usize },
    #[error("point-mass distribution cannot reach threshold {gamma}")]
    DegenerateDistribution { gamma: f64 },
}

/// A single-input channel `w(y'|x)` stored row-major, with cached logs.
#[derive(Debug, Clone, PartialEq)]
pub struct PointToPointChannel {
    nx: usize,
    ny: usize,
    w: Vec<f64>,
    ln_w: Vec<f64>,
}

impl PointToPointChannel {
    pub fn new(nx: usize, ny: usize, w: Vec<f64>) -> Result<Self, GallagerError> {
        if w.len() != nx * ny || nx == 0 || ny == 0 {
            return Err(GallagerError::Shape { nx, ny, len: w.len() });
        }
        for (row, chunk) in w.chunks(ny).enumerate() {
            if let Some(col) = chunk.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(GallagerError::BadEntry { row, col, value: chunk[col] });
            }
            let sum: f64 = chunk.iter().sum();
            if (sum - 1.0).abs() > CHANNEL_TOL {
                return Err(GallagerError::RowSum { row, sum });
            }
        }
        let ln_w = w.iter().map(|x| x.ln()).collect();
        Ok(PointToPointChannel { nx, ny, w, ln_w })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, GallagerError> {
        let ny = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ny) {
            return Err(GallagerError::Shape { nx: rows.len(), ny, len: rows.iter().map(Vec::len).sum() });
        }
        Self::new(rows.len(), ny, rows.iter().flatten().copied().collect())
    }

    pub fn input_size(&self) -> usize {
        self.nx
    }

    pub fn output_size(&self) -> usize {
        self.ny
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.w[x * self.ny..(x + 1) * self.ny]
    }

    fn ln_row(&self, x: usize) -> &[f64] {
        &self.ln_w[x * self.ny..(x + 1) * self.ny]
    }
}

/// `E_s(ρ, p) = (1+ρ) log Σ_u p(u)^{1/(1+ρ)}`.
pub fn es(rho: f64, p: &[f64]) -> f64 {
    let s = 1.0 + rho;
    s * log_sum_exp(p.iter().filter(|&&x| x > 0.0).map(|x| x.ln() / s))
}

/// `E₀(ρ, q, W) = -log Σ_{y'} (Σ_x q(x) w(y'|x)^{1/(1+ρ)})^{1+ρ}`.
///
/// # Panics
/// If `q` and the channel input alphabet differ in size.
pub fn e0(rho: f64, q: &[f64], ch: &PointToPointChannel) -> f64 {
    assert_eq!(q.len(), ch.nx, "input distribution does not match channel input alphabet");
    let s = 1.0 + rho;
    let inv = 1.0 / s;
    let mut inner = vec![0.0; ch.ny];
    for (x, &qx) in q.iter().enumerate() {
        if qx <= 0.0 {
            continue;
        }
        for (acc, &lw) in inner.iter_mut().zip(ch.ln_row(x)) {
            if lw > f64::NEG_INFINITY {
                *acc += qx * (lw * inv).exp();
            }
        }
    }
    let total: f64 = inner.iter().filter(|&&v| v > 0.0).map(|v| v.powf(s)).sum();
    -total.ln()
}

/// Generalized source function for error type `τ`:
/// `log Σ_{u_τᶜ} (Σ_{u_τ} P(u)^{1/(1+ρ)})^{1+ρ}`.
///
/// For `τ = Both` the outer sum has a single term, so the value equals
/// [`es`] of the flattened joint law.
pub fn es_tau(rho: f64, source: &JointSource, tau: ErrorType) -> f64 {
    grouped_log_sum(rho, source, tau, |_, _| 0.0)
}

/// `log Σ_{outer} (Σ_{inner} exp((ln P(u) + shift(u₁,u₂)) / (1+ρ)))^{1+ρ}`,
/// where the inner sum runs over the erroneous user(s) and the outer sum
/// over the correctly decoded one.
pub(crate) fn grouped_log_sum<F: Fn(usize, usize) -> f64>(
    rho: f64,
    source: &JointSource,
    tau: ErrorType,
    shift: F,
) -> f64 {
    let s = 1.0 + rho;
    let (n1, n2) = source.dims();
    let ln_p = source.ln_flat();
    let term = |u1: usize, u2: usize| {
        let lp = ln_p[u1 * n2 + u2];
        if lp == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            (lp + shift(u1, u2)) / s
        }
    };
    match tau {
        ErrorType::Both => s * log_sum_exp((0..n1 * n2).map(|k| term(k / n2, k % n2))),
        ErrorType::User1 => log_sum_exp((0..n2).map(|u2| s * log_sum_exp((0..n1).map(|u1| term(u1, u2))))),
        ErrorType::User2 => log_sum_exp((0..n1).map(|u1| s * log_sum_exp((0..n2).map(|u2| term(u1, u2))))),
    }
}

/// Solution of the tilting equation `E_{p^t}[log p] = log γ`, `t = 1/(1+ρ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhoGamma {
    /// `γ` is below the smallest positive probability.
    BelowMin,
    /// `γ` exceeds the largest probability.
    AboveMax,
    /// `tilt = 1/(1+ρ)`; `tilt = ±inf` (ρ = -1) when `γ` sits at an end of
    /// the range, `tilt = 0` (ρ = ±inf) when `γ` is the geometric mean.
    Root { rho: f64, tilt: f64 },
}

/// Mean of `log p` under the tilted law `p^t / Σ p^t`, over the support.
pub fn tilted_log_mean(t: f64, ln_support: &[f64]) -> f64 {
    let m = ln_support.iter().map(|l| t * l).fold(f64::NEG_INFINITY, f64::max);
    let (mut num, mut den) = (0.0, 0.0);
    for &l in ln_support {
        let w = (t * l - m).exp();
        num += w * l;
        den += w;
    }
    num / den
}

/// Residual tolerance of the tilting-equation root.
pub const RHO_GAMMA_TOL: f64 = 1e-10;

/// Solves for `ρ_γ` by bisection on the tilt `t`, where the tilted mean is
/// non-decreasing.
///
/// A uniform distribution solves the equation for every `ρ` when `γ`
/// equals its mass; `ρ = 0` is returned in that case.
pub fn rho_gamma(p: &[f64], gamma: f64) -> Result<RhoGamma, GallagerError> {
    let ln_support: Vec<f64> = p.iter().filter(|&&x| x > 0.0).map(|x| x.ln()).collect();
    let lo_p = support_min(p);
    let hi_p = p.iter().copied().fold(0.0, f64::max);
    if ln_support.len() == 1 {
        return if gamma == hi_p {
            Ok(RhoGamma::Root { rho: 0.0, tilt: 1.0 })
        } else {
            Err(GallagerError::DegenerateDistribution { gamma })
        };
    }
    if gamma < lo_p {
        return Ok(RhoGamma::BelowMin);
    }
    if gamma > hi_p {
        return Ok(RhoGamma::AboveMax);
    }
    let target = gamma.ln();
    if (hi_p.ln() - lo_p.ln()).abs() < 1e-15 {
        return Ok(RhoGamma::Root { rho: 0.0, tilt: 1.0 });
    }
    if gamma == hi_p {
        return Ok(RhoGamma::Root { rho: -1.0, tilt: f64::INFINITY });
    }
    if gamma == lo_p {
        return Ok(RhoGamma::Root { rho: -1.0, tilt: f64::NEG_INFINITY });
    }
    let g = |t: f64| tilted_log_mean(t, &ln_support) - target;
    if g(1.0).abs() <= RHO_GAMMA_TOL {
        return Ok(RhoGamma::Root { rho: 0.0, tilt: 1.0 });
    }
    let (mut lo, mut hi) = (-1.0_f64, 1.0_f64);
    while g(lo) > 0.0 {
        lo *= 2.0;
    }
    while g(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..400 {
        t = 0.5 * (lo + hi);
        let r = g(t);
        if r.abs() <= RHO_GAMMA_TOL || hi - lo <= f64::EPSILON * t.abs().max(1e-300) {
            break;
        }
        if r < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
    }
    Ok(RhoGamma::Root { rho: 1.0 / t - 1.0, tilt: t })
}

/// Constraint status of a single-user class at threshold `γ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassStatus {
    /// No empirical distribution satisfies the class predicate.
    Empty,
    /// Every distribution satisfies it; the multiplier is 0.
    Inactive,
    Active,
}

/// Classifies class `class` of a marginal `p` at threshold `γ`.
///
/// Class 1 (`E log p ≥ log γ`) is empty iff `γ > max p` and inactive iff
/// `γ ≤ min p`; class 2 (`E log p < log γ`) is empty iff `γ ≤ min p` and
/// inactive iff `γ > max p`. Minimum and maximum run over the support.
pub fn class_status(p: &[f64], gamma: f64, class: Class) -> ClassStatus {
    let lo = support_min(p);
    let hi = p.iter().copied().fold(0.0, f64::max);
    match class {
        Class::One if gamma > hi => ClassStatus::Empty,
        Class::One if gamma <= lo => ClassStatus::Inactive,
        Class::Two if gamma <= lo => ClassStatus::Empty,
        Class::Two if gamma > hi => ClassStatus::Inactive,
        _ => ClassStatus::Active,
    }
}

/// Single-user source function restricted to one message class:
/// `min_{λ≥0} (1+ρ) log Σ_u p(u)^{1/(1+ρ)} (p(u)/γ)^{-(-1)^i λ/(1+ρ)}`.
///
/// `-inf` for an empty class. The multiplier is found by golden-section
/// search on a geometrically grown bracket.
pub fn es_class(rho: f64, p: &[f64], gamma: f64, class: Class, cfg: &SolverConfig) -> ExponentValue {
    match class_status(p, gamma, class) {
        ClassStatus::Empty => ExponentValue::neg_inf(),
        ClassStatus::Inactive => ExponentValue::finite(es(rho, p)).with_lambda([0.0, 0.0]),
        ClassStatus::Active => {
            let s = 1.0 + rho;
            let sign = class.sign();
            let ln_g = gamma.ln();
            let support: Vec<f64> = p.iter().filter(|&&x| x > 0.0).map(|x| x.ln()).collect();
            let objective = |lambda: f64| {
                s * log_sum_exp(support.iter().map(|&l| (l + sign * lambda * (l - ln_g)) / s))
            };
            match minimize_half_line(objective, cfg.lambda_tol, cfg.neg_inf_floor) {
                HalfLineMin::Attained { x, value } => ExponentValue::finite(value).with_lambda([x, 0.0]),
                HalfLineMin::Unbounded => ExponentValue::neg_inf(),
            }
        }
    }
}
