use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::thresholds::{gamma_surface, optimize_thresholds, surface_max, AxisStatus, SurfacePoint};
use super::{ext_table, lower_bound, Evaluator, ExponentError, LowerBound};
use crate::model::{ClassPair, ErrorType, Instance, Thresholds};
use crate::solver::SolverConfig;
use crate::value::{Ext, ExponentValue};

/// Exponents closer than this count as ties between assignments.
pub const TIE_TOL: f64 = 1e-6;
/// Grid maxima further than this from the bisection result are flagged.
pub const GRID_TOL: f64 = 1e-3;

/// Which bank distribution serves which class: `swap_user1` exchanges
/// `Q_{1,1}` and `Q_{1,2}`, likewise for user 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment {
    pub swap_user1: bool,
    pub swap_user2: bool,
}

impl Assignment {
    pub const ALL: [Assignment; 4] = [
        Assignment { swap_user1: false, swap_user2: false },
        Assignment { swap_user1: false, swap_user2: true },
        Assignment { swap_user1: true, swap_user2: false },
        Assignment { swap_user1: true, swap_user2: true },
    ];

    pub fn index(self) -> usize {
        2 * self.swap_user1 as usize + self.swap_user2 as usize
    }

    pub fn apply(self, instance: &Instance) -> Instance {
        Instance {
            bank: instance.bank.swapped(self.swap_user1, self.swap_user2),
            ..instance.clone()
        }
    }
}

impl std::fmt::Display for Assignment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let side = |s: bool| if s { "swapped" } else { "as given" };
        write!(f, "user 1 {}, user 2 {}", side(self.swap_user1), side(self.swap_user2))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentOutcome {
    pub assignment: Assignment,
    pub exponent: ExponentValue,
    pub gamma: Thresholds,
    pub status: [AxisStatus; 2],
}

/// Bisection result compared against a brute-force `γ` lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCheck {
    pub grid: usize,
    pub max: SurfacePoint,
    /// `grid max − E`; positive when the lattice found a better point.
    pub gap: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentReport {
    /// Message-dependent exponent `E` at the optimal thresholds.
    pub exponent: ExponentValue,
    pub gamma: Thresholds,
    pub status: [AxisStatus; 2],
    pub residuals: [Option<f64>; 2],
    /// Winning class-pair and error type.
    pub binding: (ClassPair, ErrorType),
    /// `F_{τ,i₁,i₂}(γ⋆)`, rows `τ`, columns `(i₁, i₂)`.
    pub table_f: [[Ext; 4]; 3],
    /// `f_{i₁,i₂}(γ⋆)` and the minimizing `τ` of each column.
    pub f: [Ext; 4],
    pub f_tau: [ErrorType; 4],
    pub lower_bound: LowerBound,
    pub assignment: Assignment,
    pub assignments: Vec<AssignmentOutcome>,
    /// Assignments other than the winner within [`TIE_TOL`] of it.
    pub ties: Vec<Assignment>,
    pub grid_check: Option<GridCheck>,
}

impl ExponentReport {
    /// `E ≥ lower bound − 1e-6` and `E` equal to the table minimum.
    pub fn consistent(&self) -> bool {
        let table_min = self.table_f.iter().flatten().map(|e| e.0).fold(f64::INFINITY, f64::min);
        self.exponent.value >= self.lower_bound.value - 1e-6 && (table_min - self.exponent.value).abs() < 1e-9
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SearchOptions {
    /// Side of the `γ` lattice used to cross-check the winner.
    pub grid: Option<usize>,
}

/// [`assignment_search_with`] without a grid check.
pub fn assignment_search(instance: &Instance, cfg: &SolverConfig) -> Result<ExponentReport, ExponentError> {
    assignment_search_with(instance, cfg, SearchOptions::default())
}

/// Optimizes thresholds for all four assignments and reports the best; the
/// lowest-index assignment wins ties.
pub fn assignment_search_with(instance: &Instance, cfg: &SolverConfig, opts: SearchOptions) -> Result<ExponentReport, ExponentError> {
    let instances: Vec<Instance> = Assignment::ALL.iter().map(|a| a.apply(instance)).collect();
    let solutions = instances
        .par_iter()
        .map(|inst| optimize_thresholds(&Evaluator::new(inst, *cfg)?))
        .collect::<Result<Vec<_>, _>>()?;

    let mut win = 0;
    for (k, s) in solutions.iter().enumerate() {
        if s.exponent.value > solutions[win].exponent.value + TIE_TOL {
            win = k;
        }
    }
    let best = &solutions[win];
    let ties = Assignment::ALL
        .iter()
        .zip(&solutions)
        .filter(|(a, s)| a.index() != win && (s.exponent.value - best.exponent.value).abs() <= TIE_TOL)
        .map(|(a, _)| *a)
        .collect();

    let ev = Evaluator::new(&instances[win], *cfg)?;
    let table = ev.f_table(best.gamma);
    let mut f = [Ext(f64::INFINITY); 4];
    let mut f_tau = [ErrorType::User1; 4];
    for cp in ClassPair::ALL {
        for tau in ErrorType::ALL {
            let v = table[tau.index()][cp.index()];
            if v < f[cp.index()].0 {
                f[cp.index()] = Ext(v);
                f_tau[cp.index()] = tau;
            }
        }
    }

    let grid_check = opts.grid.map(|grid| {
        let max = surface_max(&gamma_surface(&ev, grid)).expect("non-empty grid");
        let gap = max.value - best.exponent.value;
        GridCheck { grid, max, gap, flagged: gap.abs() > GRID_TOL }
    });

    Ok(ExponentReport {
        exponent: best.exponent,
        gamma: best.gamma,
        status: best.status,
        residuals: best.residuals,
        binding: best.binding,
        table_f: ext_table(&table),
        f,
        f_tau,
        lower_bound: lower_bound(&instances[win], cfg)?,
        assignment: Assignment::ALL[win],
        assignments: Assignment::ALL
            .iter()
            .zip(&solutions)
            .map(|(a, s)| AssignmentOutcome { assignment: *a, exponent: s.exponent, gamma: s.gamma, status: s.status })
            .collect(),
        ties,
        grid_check,
    })
}
