//! Exponent assembly: per-event objectives maximized over `ρ`, the i.i.d.
//! exponent, the message-dependent exponent with optimized thresholds, and
//! its i.i.d. lower bound.
//!
//! Naming follows the usual notation: `F_{τ,i₁,i₂}(γ)` is the channel
//! function minus the class-constrained source function, maximized over
//! `ρ ∈ [0, 1]`; `f_{i₁,i₂}(γ) = min_τ F_{τ,i₁,i₂}(γ)`.

mod report;
mod thresholds;

pub use report::{assignment_search, assignment_search_with, Assignment, GRID_TOL, TIE_TOL, AssignmentOutcome, ExponentReport, GridCheck, SearchOptions};
pub use thresholds::{gamma_surface, optimize_thresholds, surface_max, AxisStatus, SurfacePoint, ThresholdSolution};

use serde::{Deserialize, Serialize};

use crate::channels::{superchannel, superchannel_for, ChannelError, Superchannel};
use crate::correlated::es_corr;
use crate::gallager::{class_status, e0, es_tau, ClassStatus};
use crate::model::{ClassPair, ErrorType, Instance, Thresholds, User};
use crate::optim::maximize_unit_interval;
use crate::solver::SolverConfig;
use crate::value::{Ext, ExponentValue};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExponentError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(
        "threshold difference for user {user} not monotone: d({gamma_a}) = {d_a} > d({gamma_b}) = {d_b}"
    )]
    NonMonotoneDetected { user: u8, gamma_a: f64, d_a: f64, gamma_b: f64, d_b: f64 },
}

/// `[τ][class pair]` table in the row/column order of [`ErrorType::ALL`]
/// and [`ClassPair::ALL`].
pub type Table = [[f64; 4]; 3];

/// [`Table`] with serializable extended reals.
pub fn ext_table(t: &Table) -> [[Ext; 4]; 3] {
    t.map(|row| row.map(Ext))
}

/// Evaluates exponent objectives for one instance. Superchannels for all
/// twelve `(τ, i₁, i₂)` combinations are built once up front.
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    instance: &'a Instance,
    cfg: SolverConfig,
    channels: Vec<Superchannel>,
}

impl<'a> Evaluator<'a> {
    pub fn new(instance: &'a Instance, cfg: SolverConfig) -> Result<Self, ExponentError> {
        let mut channels = Vec::with_capacity(12);
        for tau in ErrorType::ALL {
            for classes in ClassPair::ALL {
                channels.push(superchannel(tau, &instance.channel, &instance.bank, classes)?);
            }
        }
        Ok(Evaluator { instance, cfg, channels })
    }

    pub fn instance(&self) -> &Instance {
        self.instance
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    fn channel(&self, tau: ErrorType, classes: ClassPair) -> &Superchannel {
        &self.channels[4 * tau.index() + classes.index()]
    }

    /// `E₀(ρ, Q_{τ,i_τ}, W Q_{τᶜ,i_τᶜ})`.
    pub fn e0(&self, rho: f64, tau: ErrorType, classes: ClassPair) -> f64 {
        let sc = self.channel(tau, classes);
        e0(rho, &sc.input, &sc.channel)
    }

    /// `F_{τ,i₁,i₂}(γ) = max_{ρ∈[0,1]} E₀(ρ) − E_{s,τ,i₁,i₂}(ρ, P, γ)`.
    ///
    /// `+inf` when either class is empty.
    pub fn big_f(&self, tau: ErrorType, classes: ClassPair, gamma: Thresholds) -> ExponentValue {
        let source = &self.instance.source;
        let empty = User::BOTH
            .iter()
            .any(|&u| class_status(source.marginal(u), gamma.of(u), classes.of(u)) == ClassStatus::Empty);
        if empty {
            return ExponentValue::pos_inf();
        }
        let objective = |rho: f64| self.e0(rho, tau, classes) - es_corr(rho, source, gamma, tau, classes, &self.cfg).value;
        let (rho, value) = maximize_unit_interval(objective, self.cfg.rho_grid, self.cfg.rho_tol);
        let dual = es_corr(rho, source, gamma, tau, classes, &self.cfg);
        let mut out = ExponentValue::finite(value).with_rho(rho);
        out.lambda = dual.lambda;
        out
    }

    /// `f_{i₁,i₂}(γ) = min_τ F_{τ,i₁,i₂}(γ)`, with the minimizing `τ`.
    pub fn small_f(&self, classes: ClassPair, gamma: Thresholds) -> (ExponentValue, ErrorType) {
        let mut best = (ExponentValue::pos_inf(), ErrorType::User1);
        for tau in ErrorType::ALL {
            let v = self.big_f(tau, classes, gamma);
            if v.value < best.0.value {
                best = (v, tau);
            }
        }
        best
    }

    /// All twelve `F` values at `γ`.
    pub fn f_table(&self, gamma: Thresholds) -> Table {
        let mut t = [[0.0; 4]; 3];
        for tau in ErrorType::ALL {
            for classes in ClassPair::ALL {
                t[tau.index()][classes.index()] = self.big_f(tau, classes, gamma).value;
            }
        }
        t
    }

    /// `f_{i₁,i₂}(γ)` for the four class pairs.
    pub fn f_values(&self, gamma: Thresholds) -> [f64; 4] {
        column_min(&self.f_table(gamma))
    }

    /// `min_{i₁,i₂} f_{i₁,i₂}(γ)`.
    pub fn min_f(&self, gamma: Thresholds) -> f64 {
        self.f_values(gamma).into_iter().fold(f64::INFINITY, f64::min)
    }
}

/// Minimum over the rows of each column.
pub fn column_min(t: &Table) -> [f64; 4] {
    let mut out = [f64::INFINITY; 4];
    for row in t {
        for (o, v) in out.iter_mut().zip(row) {
            *o = o.min(*v);
        }
    }
    out
}

/// i.i.d. exponent for one pair of input distributions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IidExponent {
    pub value: f64,
    /// Error type attaining the minimum.
    pub tau: ErrorType,
    /// `max_ρ E₀ − E_{s,τ}` per error type, in [`ErrorType::ALL`] order.
    pub per_tau: [f64; 3],
}

/// `max_{ρ∈[0,1]} E₀(ρ, Q_τ, W Q_τᶜ) − E_{s,τ}(ρ, P)`.
pub fn iid_term(instance: &Instance, q1: &[f64], q2: &[f64], tau: ErrorType, cfg: &SolverConfig) -> Result<ExponentValue, ExponentError> {
    let sc = superchannel_for(tau, &instance.channel, q1, q2)?;
    let objective = |rho: f64| e0(rho, &sc.input, &sc.channel) - es_tau(rho, &instance.source, tau);
    let (rho, value) = maximize_unit_interval(objective, cfg.rho_grid, cfg.rho_tol);
    Ok(ExponentValue::finite(value).with_rho(rho))
}

/// i.i.d. random-coding exponent `min_τ max_ρ E₀ − E_{s,τ}` with inputs
/// `q1`, `q2`.
pub fn iid_exponent(instance: &Instance, q1: &[f64], q2: &[f64], cfg: &SolverConfig) -> Result<IidExponent, ExponentError> {
    let mut per_tau = [0.0; 3];
    for tau in ErrorType::ALL {
        per_tau[tau.index()] = iid_term(instance, q1, q2, tau, cfg)?.value;
    }
    let (k, value) = per_tau
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (k, v)| if v < acc.1 { (k, v) } else { acc });
    Ok(IidExponent { value, tau: ErrorType::ALL[k], per_tau })
}

/// The best i.i.d. exponent over the four fixed class assignments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBound {
    pub value: f64,
    /// Pair `(i₁, i₂)` whose fixed inputs attain `value`.
    pub classes: ClassPair,
    /// `F^L_{τ,i₁,i₂}` table.
    pub table: Table,
    /// i.i.d. exponent of each pair (column minima of `table`).
    pub iid: [f64; 4],
}

/// `max_{i₁,i₂} min_τ F^L_{τ,i₁,i₂}`: the exponent reached by always using
/// `Q_{1,i₁}`, `Q_{2,i₂}`.
pub fn lower_bound(instance: &Instance, cfg: &SolverConfig) -> Result<LowerBound, ExponentError> {
    let mut table = [[0.0; 4]; 3];
    for classes in ClassPair::ALL {
        let q1 = instance.bank.get(User::One, classes.user1);
        let q2 = instance.bank.get(User::Two, classes.user2);
        let iid = iid_exponent(instance, q1, q2, cfg)?;
        for tau in ErrorType::ALL {
            table[tau.index()][classes.index()] = iid.per_tau[tau.index()];
        }
    }
    let iid = column_min(&table);
    let mut best = 0;
    for k in 1..4 {
        if iid[k] > iid[best] {
            best = k;
        }
    }
    Ok(LowerBound { value: iid[best], classes: ClassPair::ALL[best], table, iid })
}
