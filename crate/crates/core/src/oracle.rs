//! Primal-domain brute force. Nothing here is fast; it exists to certify
//! the dual formulas on small instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::gallager::PointToPointChannel;
use crate::model::{ClassPair, ErrorType, JointSource, Thresholds, User};

pub const MAX_SOURCE_CELLS: usize = 6;
pub const MIN_GRID_STEP: f64 = 1e-3;
pub const MAX_CHANNEL_CELLS: usize = 64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("source alphabet has {size} cells; the lattice oracle handles at most {max}")]
    AlphabetTooLarge { size: usize, max: usize },
    #[error("grid step {0} is below {MIN_GRID_STEP}")]
    GridTooFine(f64),
    #[error("channel has {size} input-output cells; the descent oracle handles at most {max}")]
    DimensionTooLarge { size: usize, max: usize },
    #[error("tilted maximization needs a non-negative vector with a positive entry")]
    AllZero,
    #[error("input distribution length {found} does not match channel input size {expected}")]
    Shape { expected: usize, found: usize },
}

/// Objective `D(P̂‖P) − ρ H(P̂_{U_τ|U_τᶜ})` restricted to the support of `P`
/// plus the class predicates, with the empirical distribution given by
/// weights on the support cells.
struct SourceProblem {
    rho: f64,
    /// Group of each support cell under the conditioning variable `U_τᶜ`.
    group: Vec<usize>,
    ln_p: Vec<f64>,
    /// `ln P_{Uν}` of each support cell, per user.
    ln_marg: [Vec<f64>; 2],
    ln_gamma: [f64; 2],
    classes: ClassPair,
}

impl SourceProblem {
    fn new(rho: f64, source: &JointSource, tau: ErrorType, gamma: Thresholds, classes: ClassPair) -> Self {
        let (_, n2) = source.dims();
        let cells: Vec<usize> = (0..source.len()).filter(|&k| source.flat()[k] > 0.0).collect();
        let ln_p = cells.iter().map(|&k| source.ln_flat()[k]).collect();
        let ln_marg = User::BOTH.map(|u| {
            cells
                .iter()
                .map(|&k| source.ln_marginal(u)[if u == User::One { k / n2 } else { k % n2 }])
                .collect()
        });
        let group = cells
            .iter()
            .map(|&c| match tau {
                ErrorType::User1 => c % n2,
                ErrorType::User2 => c / n2,
                ErrorType::Both => 0,
            })
            .collect();
        SourceProblem { rho, group, ln_p, ln_marg, ln_gamma: User::BOTH.map(|u| gamma.of(u).ln()), classes }
    }

    fn feasible(&self, w: &[f64]) -> bool {
        User::BOTH.iter().all(|&u| {
            let m: f64 = w.iter().zip(&self.ln_marg[u.index()]).map(|(x, l)| x * l).sum();
            let g = self.ln_gamma[u.index()];
            // Rounding in the sum must not move a point across the
            // threshold, e.g. for a uniform marginal with gamma on it.
            let slack = 1e-12 * (1.0 + g.abs());
            match self.classes.of(u) {
                crate::model::Class::One => m >= g - slack,
                crate::model::Class::Two => m < g - slack,
            }
        })
    }


    /// Objective at probabilities `w` (summing to 1) over the support cells.
    fn value(&self, w: &[f64]) -> f64 {
        let xlnx = |x: f64| if x > 0.0 { x * x.ln() } else { 0.0 };
        let mut neg_h = 0.0;
        let mut cross = 0.0;
        let mut g = [0.0; MAX_SOURCE_CELLS];
        for (k, &x) in w.iter().enumerate() {
            neg_h += xlnx(x);
            cross += x * self.ln_p[k];
            g[self.group[k]] += x;
        }
        let h_cond = -neg_h + g.into_iter().map(xlnx).sum::<f64>();
        neg_h - cross - self.rho * h_cond
    }
}

fn check_source(source: &JointSource, grid_step: f64) -> Result<usize, OracleError> {
    if source.len() > MAX_SOURCE_CELLS {
        return Err(OracleError::AlphabetTooLarge { size: source.len(), max: MAX_SOURCE_CELLS });
    }
    if !(grid_step >= MIN_GRID_STEP) {
        return Err(OracleError::GridTooFine(grid_step));
    }
    Ok((1.0 / grid_step).round() as usize)
}

/// Calls `visit` on every composition of `n` into `parts` non-negative parts.
fn compositions(n: usize, parts: usize, prefix: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
    if parts == 1 {
        prefix.push(n);
        visit(prefix);
        prefix.pop();
        return;
    }
    for first in 0..=n {
        prefix.push(first);
        compositions(n - first, parts - 1, prefix, visit);
        prefix.pop();
    }
}

/// Best lattice point of resolution `1/N` and its value.
fn lattice_min(problem: &SourceProblem, n: usize) -> Option<(Vec<f64>, f64)> {
    let k = problem.group.len();
    let scale = 1.0 / n as f64;
    let best_for = |first: usize| {
        let mut best: Option<(Vec<f64>, f64)> = None;
        let mut w = vec![0.0; k];
        let mut prefix = vec![first];
        let mut visit = |counts: &[usize]| {
            for (x, &c) in w.iter_mut().zip(counts) {
                *x = c as f64 * scale;
            }
            if problem.feasible(&w) {
                let v = problem.value(&w);
                if best.as_ref().map_or(true, |b| v < b.1) {
                    best = Some((w.clone(), v));
                }
            }
        };
        if k == 1 {
            if first == n {
                visit(&[n]);
            }
        } else {
            compositions(n - first, k - 1, &mut prefix, &mut visit);
        }
        best
    };
    (0..=n)
        .into_par_iter()
        .map(best_for)
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .fold(None, |acc: Option<(Vec<f64>, f64)>, b| match acc {
            Some(a) if a.1 <= b.1 => Some(a),
            _ => Some(b),
        })
}

/// Primal source term `min D(P̂‖P) − ρ H(P̂_{U_τ|U_τᶜ})` over lattice points
/// of the simplex (resolution `grid_step`) satisfying the class predicates
/// `E_P̂ log P_{Uν} ≥ log γν` (class 1) or `< log γν` (class 2).
///
/// Cells where `P` vanishes are held at zero (the divergence is infinite
/// elsewhere). Returns `+inf` when no lattice point is feasible.
pub fn primal_source_min(
    rho: f64,
    source: &JointSource,
    tau: ErrorType,
    gamma: Thresholds,
    classes: ClassPair,
    grid_step: f64,
) -> Result<f64, OracleError> {
    let n = check_source(source, grid_step)?;
    let problem = SourceProblem::new(rho, source, tau, gamma, classes);
    Ok(lattice_min(&problem, n).map_or(f64::INFINITY, |b| b.1))
}

/// [`primal_source_min`] followed by local zoom refinement: around the
/// current best point, a box of `±m` steps in every free coordinate is
/// enumerated, the step shrinks fourfold, and this repeats until the step is
/// below `1e-9`.
///
/// The coarse lattice cannot resolve cells with tiny probabilities, where
/// the divergence is steep; the zoom recovers the continuous minimum to
/// well below the lattice spacing.
pub fn primal_source_min_refined(
    rho: f64,
    source: &JointSource,
    tau: ErrorType,
    gamma: Thresholds,
    classes: ClassPair,
    grid_step: f64,
) -> Result<f64, OracleError> {
    let n = check_source(source, grid_step)?;
    let problem = SourceProblem::new(rho, source, tau, gamma, classes);
    let Some((mut w, mut best)) = lattice_min(&problem, n) else {
        return Ok(f64::INFINITY);
    };
    let k = w.len();
    if k == 1 {
        return Ok(best);
    }
    let m: i64 = if k <= 4 { 8 } else { 4 };
    let side = (2 * m + 1) as usize;
    let mut h = 1.0 / n as f64;
    while h > 1e-9 {
        h /= 4.0;
        // The largest weight absorbs the normalization.
        let dep = (0..k).max_by(|&a, &b| w[a].total_cmp(&w[b])).expect("k > 1");
        let free: Vec<usize> = (0..k).filter(|&i| i != dep).collect();
        let total = side.pow(free.len() as u32);
        let center = w.clone();
        let found = (0..total)
            .into_par_iter()
            .filter_map(|mut idx| {
                let mut cand = center.clone();
                for &i in &free {
                    let off = (idx % side) as i64 - m;
                    idx /= side;
                    cand[i] = center[i] + off as f64 * h;
                    if cand[i] < 0.0 {
                        return None;
                    }
                }
                let rest: f64 = free.iter().map(|&i| cand[i]).sum();
                cand[dep] = 1.0 - rest;
                if cand[dep] < 0.0 || !problem.feasible(&cand) {
                    return None;
                }
                let v = problem.value(&cand);
                Some((cand, v))
            })
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((c, v)) = found {
            if v < best {
                best = v;
                w = c;
            }
        }
    }
    Ok(best)
}

/// `D(P̂‖QW) + ρ D(P̂‖Q P̂_Y)` for a joint `P̂[x·|Y| + y]`.
pub fn channel_objective(rho: f64, q: &[f64], ch: &PointToPointChannel, p: &[f64]) -> f64 {
    let ny = ch.output_size();
    let mut py = vec![0.0; ny];
    for (k, &v) in p.iter().enumerate() {
        py[k % ny] += v;
    }
    let mut total = 0.0;
    for (k, &v) in p.iter().enumerate() {
        if v <= 0.0 {
            continue;
        }
        let (x, y) = (k / ny, k % ny);
        let qw = q[x] * ch.row(x)[y];
        if qw <= 0.0 {
            return f64::INFINITY;
        }
        total += v * (v / qw).ln() + rho * v * (v / (q[x] * py[y])).ln();
    }
    total
}

/// Minimizer `P̂ ∝ Q W^{1/(1+ρ)} V⋆^{ρ/(1+ρ)}` with `V⋆` from [`tilted_max`].
pub fn closed_form_channel_optimum(rho: f64, q: &[f64], ch: &PointToPointChannel) -> Result<Vec<f64>, OracleError> {
    let (nx, ny) = (ch.input_size(), ch.output_size());
    if q.len() != nx {
        return Err(OracleError::Shape { expected: nx, found: q.len() });
    }
    let t = 1.0 / (1.0 + rho);
    let e: Vec<f64> = (0..ny).map(|y| (0..nx).map(|x| q[x] * ch.row(x)[y].powf(t)).sum()).collect();
    let (_, v) = tilted_max(&e, rho)?;
    let mut p: Vec<f64> = (0..nx * ny)
        .map(|k| {
            let (x, y) = (k / ny, k % ny);
            let w = ch.row(x)[y];
            if q[x] > 0.0 && w > 0.0 {
                q[x] * w.powf(t) * v[y].powf(rho * t)
            } else {
                0.0
            }
        })
        .collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    Ok(p)
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (j + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

const DESCENT_STEP: f64 = 0.1;
const DESCENT_ITERS: usize = 100_000;

/// Projected-gradient descent on the support of `QW`, from `start`.
fn descend(rho: f64, q: &[f64], ch: &PointToPointChannel, support: &[usize], start: Vec<f64>) -> f64 {
    let ny = ch.output_size();
    let full = |z: &[f64]| {
        let mut p = vec![0.0; q.len() * ny];
        for (&k, &v) in support.iter().zip(z) {
            p[k] = v;
        }
        p
    };
    let mut z = start;
    let mut f = channel_objective(rho, q, ch, &full(&z));
    let mut step = DESCENT_STEP;
    for _ in 0..DESCENT_ITERS {
        let p = full(&z);
        let mut py = vec![0.0; ny];
        for (k, &v) in p.iter().enumerate() {
            py[k % ny] += v;
        }
        let grad: Vec<f64> = support
            .iter()
            .zip(&z)
            .map(|(&k, &v)| {
                let (x, y) = (k / ny, k % ny);
                let lv = v.max(1e-300).ln();
                (lv - (q[x] * ch.row(x)[y]).ln() + 1.0) + rho * (lv - q[x].ln() - py[y].max(1e-300).ln())
            })
            .collect();
        let mut accepted = false;
        while step > 1e-16 {
            let trial: Vec<f64> = z.iter().zip(&grad).map(|(a, g)| a - step * g).collect();
            let trial = project_simplex(&trial);
            let ft = channel_objective(rho, q, ch, &full(&trial));
            if ft < f {
                let gain = f - ft;
                z = trial;
                f = ft;
                accepted = gain > 1e-15;
                step = (2.0 * step).min(DESCENT_STEP);
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    f
}

/// Result of [`primal_channel_min`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelPrimal {
    /// Best value over every start.
    pub value: f64,
    /// Best value over the random starts alone.
    pub random_only: f64,
}

/// `min_{P̂_XY} D(P̂‖QW) + ρ D(P̂‖Q P̂_Y)` by projected-gradient descent from
/// `restarts` seeded random points plus the closed-form minimizer.
pub fn primal_channel_min(
    rho: f64,
    q: &[f64],
    ch: &PointToPointChannel,
    restarts: usize,
    seed: u64,
) -> Result<ChannelPrimal, OracleError> {
    let (nx, ny) = (ch.input_size(), ch.output_size());
    if nx * ny > MAX_CHANNEL_CELLS {
        return Err(OracleError::DimensionTooLarge { size: nx * ny, max: MAX_CHANNEL_CELLS });
    }
    if q.len() != nx {
        return Err(OracleError::Shape { expected: nx, found: q.len() });
    }
    let support: Vec<usize> = (0..nx * ny).filter(|&k| q[k / ny] > 0.0 && ch.row(k / ny)[k % ny] > 0.0).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut random_only = f64::INFINITY;
    for _ in 0..restarts {
        let raw: Vec<f64> = support.iter().map(|_| rng.gen::<f64>() + 1e-3).collect();
        let s: f64 = raw.iter().sum();
        let start = raw.into_iter().map(|x| x / s).collect();
        random_only = random_only.min(descend(rho, q, ch, &support, start));
    }
    let closed = closed_form_channel_optimum(rho, q, ch)?;
    let start = support.iter().map(|&k| closed[k]).collect();
    let value = random_only.min(descend(rho, q, ch, &support, start));
    Ok(ChannelPrimal { value, random_only })
}

/// `max_V Σ_y e(y) V(y)^{ρ/(1+ρ)} = (Σ e^{1+ρ})^{1/(1+ρ)}`, attained at
/// `V⋆ ∝ e^{1+ρ}`.
pub fn tilted_max(e: &[f64], rho: f64) -> Result<(f64, Vec<f64>), OracleError> {
    if e.iter().any(|&x| !(x >= 0.0)) || !e.iter().any(|&x| x > 0.0) {
        return Err(OracleError::AllZero);
    }
    let pw: Vec<f64> = e.iter().map(|&x| x.powf(1.0 + rho)).collect();
    let s: f64 = pw.iter().sum();
    Ok((s.powf(1.0 / (1.0 + rho)), pw.into_iter().map(|x| x / s).collect()))
}

/// `Σ e(y) V(y)^{ρ/(1+ρ)}`.
pub fn tilted_objective(e: &[f64], v: &[f64], rho: f64) -> f64 {
    let a = rho / (1.0 + rho);
    e.iter().zip(v).map(|(&x, &w)| if a == 0.0 { x } else { x * w.powf(a) }).sum()
}
