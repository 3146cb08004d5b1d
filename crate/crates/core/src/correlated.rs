//! Class-constrained source function for correlated sources.
//!
//! For thresholds `γ = (γ₁, γ₂)` and classes `(i₁, i₂)` the source term is
//!
//! ```text
//! min_{λ₁,λ₂ ≥ 0} log Σ_{u_τᶜ} ( Σ_{u_τ} P(u)^{1/(1+ρ)}
//!     · (P₁(u₁)/γ₁)^{-(-1)^{i₁} λ₁/(1+ρ)} · (P₂(u₂)/γ₂)^{-(-1)^{i₂} λ₂/(1+ρ)} )^{1+ρ}
//! ```
//!
//! The objective is a log-sum-exp of affine functions of `λ`, hence convex.
//! Classes that no empirical distribution can reach are detected before any
//! optimization and yield `-inf`; constraints every distribution satisfies
//! have their multiplier pinned at zero.

use crate::gallager::{class_status, es_tau, ClassStatus};
use crate::model::{Class, ClassPair, ErrorType, JointSource, Thresholds, User};
use crate::optim::{minimize_half_line, HalfLineMin};
use crate::solver::SolverConfig;
use crate::value::ExponentValue;

/// Upper limit on a multiplier; beyond it every decaying term has underflowed.
const LAMBDA_CAP: f64 = 1e12;
const MAX_NEWTON_STEPS: usize = 500;

#[derive(Debug, Clone, Copy)]
struct Cell {
    /// `ln P(u) / (1+ρ)`
    alpha: f64,
    /// constraint slopes `sign_ν (ln P_ν(u_ν) - ln γ_ν) / (1+ρ)`, 0 when pinned
    slope: [f64; 2],
}

/// The dual objective `λ ↦ log Σ_a (Σ_b exp(α_b + λ·d_b))^{1+ρ}` for fixed
/// `(ρ, γ, τ, classes)`.
#[derive(Debug, Clone)]
pub struct DualObjective {
    s: f64,
    groups: Vec<Vec<Cell>>,
    free: [bool; 2],
}

/// Value, gradient and Hessian of the dual objective.
#[derive(Debug, Clone, Copy)]
pub struct DualEval {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

impl DualObjective {
    /// Builds the objective. `free[ν]` false pins `λ_ν = 0`.
    pub fn new(
        rho: f64,
        source: &JointSource,
        gamma: Thresholds,
        tau: ErrorType,
        classes: ClassPair,
        free: [bool; 2],
    ) -> Self {
        let s = 1.0 + rho;
        let (n1, n2) = source.dims();
        let ln_p = source.ln_flat();
        let ln_m1 = source.ln_marginal(User::One);
        let ln_m2 = source.ln_marginal(User::Two);
        let slope_of = |user: User, ln_m: f64| {
            if free[user.index()] {
                classes.of(user).sign() * (ln_m - gamma.of(user).ln()) / s
            } else {
                0.0
            }
        };
        let cell = |u1: usize, u2: usize| {
            let lp = ln_p[u1 * n2 + u2];
            (lp > f64::NEG_INFINITY).then(|| Cell {
                alpha: lp / s,
                slope: [slope_of(User::One, ln_m1[u1]), slope_of(User::Two, ln_m2[u2])],
            })
        };
        let groups: Vec<Vec<Cell>> = match tau {
            ErrorType::Both => vec![(0..n1 * n2).filter_map(|k| cell(k / n2, k % n2)).collect()],
            ErrorType::User1 => (0..n2).map(|u2| (0..n1).filter_map(|u1| cell(u1, u2)).collect()).collect(),
            ErrorType::User2 => (0..n1).map(|u1| (0..n2).filter_map(|u2| cell(u1, u2)).collect()).collect(),
        };
        let groups = groups.into_iter().filter(|g| !g.is_empty()).collect();
        DualObjective { s, groups, free }
    }

    pub fn value(&self, lambda: [f64; 2]) -> f64 {
        let mut outer_max = f64::NEG_INFINITY;
        let mut inner = Vec::with_capacity(self.groups.len());
        for g in &self.groups {
            let e = |c: &Cell| c.alpha + lambda[0] * c.slope[0] + lambda[1] * c.slope[1];
            let m = g.iter().map(e).fold(f64::NEG_INFINITY, f64::max);
            let lse = m + g.iter().map(|c| (e(c) - m).exp()).sum::<f64>().ln();
            let h = self.s * lse;
            outer_max = outer_max.max(h);
            inner.push(h);
        }
        outer_max + inner.iter().map(|h| (h - outer_max).exp()).sum::<f64>().ln()
    }

    pub fn eval(&self, lambda: [f64; 2]) -> DualEval {
        let s = self.s;
        let mut hs = Vec::with_capacity(self.groups.len());
        let mut grads = Vec::with_capacity(self.groups.len());
        let mut hesses = Vec::with_capacity(self.groups.len());
        for g in &self.groups {
            let e = |c: &Cell| c.alpha + lambda[0] * c.slope[0] + lambda[1] * c.slope[1];
            let m = g.iter().map(e).fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            let mut m1 = [0.0; 2];
            let mut m2 = [[0.0; 2]; 2];
            for c in g {
                let w = (e(c) - m).exp();
                z += w;
                for i in 0..2 {
                    m1[i] += w * c.slope[i];
                    for j in 0..2 {
                        m2[i][j] += w * c.slope[i] * c.slope[j];
                    }
                }
            }
            let mean = [m1[0] / z, m1[1] / z];
            let mut cov = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    cov[i][j] = m2[i][j] / z - mean[i] * mean[j];
                }
            }
            hs.push(s * (m + z.ln()));
            grads.push(mean);
            hesses.push(cov);
        }
        let hmax = hs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = hs.iter().map(|h| (h - hmax).exp()).collect();
        let total: f64 = weights.iter().sum();
        let value = hmax + total.ln();
        let mut grad = [0.0; 2];
        let mut second = [[0.0; 2]; 2];
        for ((w, gm), cov) in weights.iter().zip(&grads).zip(&hesses) {
            let w = w / total;
            for i in 0..2 {
                grad[i] += w * s * gm[i];
                for j in 0..2 {
                    second[i][j] += w * (s * cov[i][j] + s * s * gm[i] * gm[j]);
                }
            }
        }
        let mut hess = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                hess[i][j] = second[i][j] - grad[i] * grad[j];
            }
        }
        DualEval { value, grad, hess }
    }

    /// Projected Newton with Armijo backtracking on `λ ≥ 0`.
    ///
    /// Returns `None` once the objective drops below `floor`.
    pub fn minimize_newton(&self, start: [f64; 2], floor: f64) -> Option<([f64; 2], f64)> {
        let project = |x: [f64; 2]| {
            let mut y = [0.0; 2];
            for i in 0..2 {
                y[i] = if self.free[i] { x[i].clamp(0.0, LAMBDA_CAP) } else { 0.0 };
            }
            y
        };
        let mut lam = project(start);
        let mut cur = self.eval(lam);
        for _ in 0..MAX_NEWTON_STEPS {
            if cur.value < floor {
                return None;
            }
            let g = cur.grad;
            let mut moving = [false; 2];
            for i in 0..2 {
                moving[i] = self.free[i] && !(lam[i] <= 0.0 && g[i] >= 0.0) && !(lam[i] >= LAMBDA_CAP && g[i] <= 0.0);
            }
            let pg = (0..2).filter(|&i| moving[i]).map(|i| g[i].abs()).fold(0.0, f64::max);
            if pg <= 1e-14 {
                break;
            }
            let dir = newton_direction(&cur, moving);
            let slope: f64 = (0..2).map(|i| g[i] * dir[i]).sum();
            let dir = if slope < 0.0 {
                dir
            } else {
                let mut d = [0.0; 2];
                for i in 0..2 {
                    if moving[i] {
                        d[i] = -g[i];
                    }
                }
                d
            };
            let mut t = 1.0;
            let mut accepted = None;
            while t > 1e-30 {
                let cand = project([lam[0] + t * dir[0], lam[1] + t * dir[1]]);
                let fc = self.value(cand);
                let decrease: f64 = (0..2).map(|i| g[i] * (cand[i] - lam[i])).sum();
                if fc <= cur.value + 1e-4 * decrease {
                    accepted = Some((cand, fc));
                    break;
                }
                t *= 0.5;
            }
            let Some((cand, fc)) = accepted else { break };
            if cand == lam {
                break;
            }
            let gain = cur.value - fc;
            lam = cand;
            cur = self.eval(lam);
            // Rounding in the gradient leaves partials near 1e-9 once the
            // value has converged to machine precision.
            if gain <= 1e-15 * (1.0 + fc.abs()) && pg <= 1e-6 {
                break;
            }
        }
        if cur.value < floor {
            return None;
        }
        Some((lam, cur.value))
    }

    /// Alternating golden-section sweeps over `λ₁` then `λ₂`, each on a
    /// geometrically grown bracket, until a sweep improves less than
    /// `cfg.coord_tol`. Slow; kept as an independent cross-check of
    /// [`DualObjective::minimize_newton`].
    pub fn minimize_coordinate(&self, cfg: &SolverConfig) -> Option<([f64; 2], f64)> {
        let mut lam = [0.0; 2];
        let mut best = self.value(lam);
        for _ in 0..10_000 {
            let before = best;
            for i in 0..2 {
                if !self.free[i] {
                    continue;
                }
                let line = |x: f64| {
                    let mut l = lam;
                    l[i] = x;
                    self.value(l)
                };
                match minimize_half_line(line, cfg.lambda_tol, cfg.neg_inf_floor) {
                    HalfLineMin::Unbounded => return None,
                    HalfLineMin::Attained { x, value } => {
                        if value <= best {
                            lam[i] = x;
                            best = value;
                        }
                    }
                }
            }
            if before - best < cfg.coord_tol {
                break;
            }
        }
        Some((lam, best))
    }

    /// Largest central-difference partial derivative over the multipliers
    /// that are strictly positive (interior).
    pub fn stationarity_residual(&self, lambda: [f64; 2]) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            if !self.free[i] || lambda[i] <= 0.0 {
                continue;
            }
            let h = 1e-6 * lambda[i].max(1e-3);
            let mut a = lambda;
            let mut b = lambda;
            a[i] += h;
            b[i] -= h;
            let d = (self.value(a) - self.value(b)) / (2.0 * h);
            worst = worst.max(d.abs());
        }
        worst
    }
}

fn newton_direction(ev: &DualEval, moving: [bool; 2]) -> [f64; 2] {
    let g = ev.grad;
    let h = ev.hess;
    let mut d = [0.0; 2];
    match moving {
        [true, true] => {
            let scale = h[0][0].abs() + h[1][1].abs();
            let mu = 1e-12 * scale + 1e-300;
            let (a, b, c) = (h[0][0] + mu, h[0][1], h[1][1] + mu);
            let det = a * c - b * b;
            if det > 1e-14 * a * c && a > 0.0 {
                d[0] = -(c * g[0] - b * g[1]) / det;
                d[1] = -(a * g[1] - b * g[0]) / det;
            } else {
                d = [-g[0] / a.max(1e-300), -g[1] / c.max(1e-300)];
            }
        }
        [true, false] | [false, true] => {
            let i = if moving[0] { 0 } else { 1 };
            d[i] = -g[i] / h[i][i].max(1e-300);
        }
        [false, false] => {}
    }
    d
}

/// Emptiness and activity of both class constraints.
fn statuses(source: &JointSource, gamma: Thresholds, classes: ClassPair) -> [ClassStatus; 2] {
    User::BOTH.map(|u| class_status(source.marginal(u), gamma.of(u), classes.of(u)))
}

/// Class-constrained source function `E_{s,τ,i₁,i₂}(ρ, P, γ)`.
///
/// `-inf` when either class is empty; the minimizing `(λ₁, λ₂)` is recorded.
pub fn es_corr(
    rho: f64,
    source: &JointSource,
    gamma: Thresholds,
    tau: ErrorType,
    classes: ClassPair,
    cfg: &SolverConfig,
) -> ExponentValue {
    let st = statuses(source, gamma, classes);
    if st.contains(&ClassStatus::Empty) {
        return ExponentValue::neg_inf();
    }
    let free = st.map(|s| s == ClassStatus::Active);
    if free == [false, false] {
        return ExponentValue::finite(es_tau(rho, source, tau)).with_lambda([0.0, 0.0]);
    }
    let obj = DualObjective::new(rho, source, gamma, tau, classes, free);
    match obj.minimize_newton([0.0, 0.0], cfg.neg_inf_floor) {
        Some((lam, value)) => ExponentValue::finite(value).with_lambda(lam),
        None => ExponentValue::neg_inf(),
    }
}

/// [`es_corr`] computed by coordinate golden-section sweeps instead of
/// Newton steps.
pub fn es_corr_coordinate(
    rho: f64,
    source: &JointSource,
    gamma: Thresholds,
    tau: ErrorType,
    classes: ClassPair,
    cfg: &SolverConfig,
) -> ExponentValue {
    let st = statuses(source, gamma, classes);
    if st.contains(&ClassStatus::Empty) {
        return ExponentValue::neg_inf();
    }
    let free = st.map(|s| s == ClassStatus::Active);
    let obj = DualObjective::new(rho, source, gamma, tau, classes, free);
    match obj.minimize_coordinate(cfg) {
        Some((lam, value)) => ExponentValue::finite(value).with_lambda(lam),
        None => ExponentValue::neg_inf(),
    }
}

/// Source function with only the class constraint of `user` enforced; the
/// other multiplier is pinned at 0.
pub fn es_corr_single_active(
    rho: f64,
    source: &JointSource,
    gamma: f64,
    user: User,
    class: Class,
    tau: ErrorType,
    cfg: &SolverConfig,
) -> ExponentValue {
    let status = class_status(source.marginal(user), gamma, class);
    match status {
        ClassStatus::Empty => ExponentValue::neg_inf(),
        ClassStatus::Inactive => ExponentValue::finite(es_tau(rho, source, tau)).with_lambda([0.0, 0.0]),
        ClassStatus::Active => {
            // The pinned user's threshold and class never enter the objective.
            let thresholds = Thresholds { gamma1: 1.0, gamma2: 1.0 }.with(user, gamma);
            let classes = match user {
                User::One => ClassPair::new(class, Class::One),
                User::Two => ClassPair::new(Class::One, class),
            };
            let mut free = [false; 2];
            free[user.index()] = true;
            let obj = DualObjective::new(rho, source, thresholds, tau, classes, free);
            let k = user.index();
            let line = |x: f64| {
                let mut l = [0.0; 2];
                l[k] = x;
                obj.value(l)
            };
            match minimize_half_line(line, cfg.lambda_tol, cfg.neg_inf_floor) {
                HalfLineMin::Unbounded => ExponentValue::neg_inf(),
                HalfLineMin::Attained { x, value } => {
                    let mut l = [0.0; 2];
                    l[k] = x;
                    ExponentValue::finite(value).with_lambda(l)
                }
            }
        }
    }
}

/// Central-difference stationarity check of [`es_corr`] at its recorded
/// minimizer: the largest partial over interior multipliers.
pub fn es_corr_stationarity(
    rho: f64,
    source: &JointSource,
    gamma: Thresholds,
    tau: ErrorType,
    classes: ClassPair,
    lambda: [f64; 2],
) -> f64 {
    let st = statuses(source, gamma, classes);
    let free = st.map(|s| s == ClassStatus::Active);
    DualObjective::new(rho, source, gamma, tau, classes, free).stationarity_residual(lambda)
}
