use std::path::Path;

// CSV labels avoid commas so no field needs quoting.
fn tau_field(tau: ErrorType) -> &'static str {
    match tau {
        ErrorType::User1 => "1",
        ErrorType::User2 => "2",
        ErrorType::Both => "both",
    }
}

fn pair_field(cp: ClassPair) -> String {
    format!("{}{}", cp.user1.number(), cp.user2.number())
}

use macexp_core::correlated::es_corr;
use macexp_core::exponents::{SurfacePoint, Table};
use macexp_core::gallager::es_tau;
use macexp_core::{ClassPair, ErrorType, ExponentReport, Instance, SolverConfig, Thresholds};

#[derive(Debug, Clone, Copy)]
pub struct Units {
    pub bits: bool,
}

impl Units {
    pub fn scale(self, v: f64) -> f64 {
        if self.bits {
            v / std::f64::consts::LN_2
        } else {
            v
        }
    }

    pub fn name(self) -> &'static str {
        if self.bits {
            "bits"
        } else {
            "nats"
        }
    }

    /// Six decimals; infinities as `inf` / `-inf`.
    pub fn fmt(self, v: f64) -> String {
        if v == f64::INFINITY {
            "inf".into()
        } else if v == f64::NEG_INFINITY {
            "-inf".into()
        } else {
            format!("{:.6}", self.scale(v))
        }
    }
}

pub const TABLE_I_HEADER: [&str; 5] = ["tau", "f11", "f12", "f21", "f22"];
pub const TABLE_II_HEADER: [&str; 5] = ["tau", "q11", "q12", "q21", "q22"];

pub fn write_table(path: &Path, header: &[&str; 5], table: &Table, units: Units) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for tau in ErrorType::ALL {
        let mut row = vec![tau_field(tau).to_string()];
        row.extend(table[tau.index()].iter().map(|&v| units.fmt(v)));
        w.write_record(&row)?;
    }
    w.flush()
}

/// `rho, tau, es_tau, es_corr(1,1), …, es_corr(2,2)` over `n` points of `[0, 1]`.
pub fn write_rho_sweep(
    path: &Path,
    instance: &Instance,
    gamma: Thresholds,
    n: usize,
    cfg: &SolverConfig,
    units: Units,
) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["rho".to_string(), "tau".into(), "es_tau".into()];
    header.extend(ClassPair::ALL.iter().map(|cp| format!("es_corr_{}", pair_field(*cp))));
    w.write_record(&header)?;
    for k in 0..n {
        let rho = k as f64 / (n - 1) as f64;
        for tau in ErrorType::ALL {
            let mut row = vec![format!("{rho:.6}"), tau_field(tau).to_string(), units.fmt(es_tau(rho, &instance.source, tau))];
            for cp in ClassPair::ALL {
                row.push(units.fmt(es_corr(rho, &instance.source, gamma, tau, cp, cfg).value));
            }
            w.write_record(&row)?;
        }
    }
    w.flush()
}

pub fn write_gamma_sweep(path: &Path, surface: &[SurfacePoint], units: Units) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["gamma1", "gamma2", "min_f"])?;
    for p in surface {
        w.write_record([format!("{:.6}", p.gamma1), format!("{:.6}", p.gamma2), units.fmt(p.value)])?;
    }
    w.flush()
}

pub fn report_text(r: &ExponentReport, units: Units) -> String {
    let u = units.name();
    let mut s = String::new();
    let mut line = |t: String| {
        s.push_str(&t);
        s.push('\n');
    };
    line(format!("exponent E = {} {u}", units.fmt(r.exponent.value)));
    line(format!(
        "thresholds gamma* = ({:.6}, {:.6})  [{:?}, {:?}]",
        r.gamma.gamma1, r.gamma.gamma2, r.status[0], r.status[1]
    ));
    let res = |v: Option<f64>| v.map_or("boundary".to_string(), |x| format!("{x:.2e}"));
    line(format!("equalization residuals: {}, {}", res(r.residuals[0]), res(r.residuals[1])));
    line(format!(
        "binding term: classes {} error type {}",
        r.binding.0.label(),
        r.binding.1.label()
    ));
    line(format!("assignment: {}", r.assignment));
    if !r.ties.is_empty() {
        let ties: Vec<String> = r.ties.iter().map(|a| a.to_string()).collect();
        line(format!("tied assignments: {}", ties.join("; ")));
    }
    line(String::new());
    line(format!("F at gamma* ({u})"));
    line(format!("{:>8} {:>10} {:>10} {:>10} {:>10}", "tau", "(1,1)", "(1,2)", "(2,1)", "(2,2)"));
    for tau in ErrorType::ALL {
        let row: Vec<String> = r.table_f[tau.index()].iter().map(|v| format!("{:>10}", units.fmt(v.0))).collect();
        line(format!("{:>8} {}", tau.label(), row.join(" ")));
    }
    let f: Vec<String> = r.f.iter().map(|v| format!("{:>10}", units.fmt(v.0))).collect();
    line(format!("{:>8} {}", "f", f.join(" ")));
    line(String::new());
    line(format!(
        "lower bound = {} {u} at classes {}",
        units.fmt(r.lower_bound.value),
        r.lower_bound.classes.label()
    ));
    let iid: Vec<String> = r.lower_bound.iid.iter().map(|&v| units.fmt(v)).collect();
    line(format!("i.i.d. exponents per fixed pair (1,1) (1,2) (2,1) (2,2): {}", iid.join(" ")));
    if let Some(g) = &r.grid_check {
        line(format!(
            "gamma grid {}x{}: max {} at ({:.4}, {:.4}), gap {:.2e}{}",
            g.grid,
            g.grid,
            units.fmt(g.max.value),
            g.max.gamma1,
            g.max.gamma2,
            g.gap,
            if g.flagged { " [FLAGGED]" } else { "" }
        ));
    }
    s
}
