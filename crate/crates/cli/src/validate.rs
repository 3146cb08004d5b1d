//! Oracle cross-checks run by `macexp validate`.

use macexp_core::channels::superchannel;
use macexp_core::correlated::es_corr;
use macexp_core::gallager::{e0, PointToPointChannel};
use macexp_core::oracle::{
    primal_channel_min, primal_source_min_refined, tilted_max, tilted_objective, MAX_CHANNEL_CELLS, MAX_SOURCE_CELLS,
};
use macexp_core::{iid_exponent, Class, ClassPair, ErrorType, Evaluator, Instance, SolverConfig, Thresholds, User};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Check {
    pub name: &'static str,
    pub worst: f64,
    pub tol: f64,
    pub cases: usize,
    pub note: Option<String>,
    pub offending: Option<String>,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.worst <= self.tol
    }

    pub fn line(&self) -> String {
        let status = if self.cases == 0 {
            "SKIP"
        } else if self.passed() {
            "ok"
        } else {
            "FAIL"
        };
        let mut s = format!("{status:>4}  {:<28} cases {:>4}  max discrepancy {:.2e} (tol {:.0e})", self.name, self.cases, self.worst, self.tol);
        if let Some(n) = &self.note {
            s.push_str(&format!("  [{n}]"));
        }
        s
    }
}

fn dist(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 0.02).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}

fn diff(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs()
    }
}

fn source_duality(inst: &Instance, cfg: &SolverConfig, samples: usize, tol: f64, rng: &mut ChaCha8Rng) -> Check {
    let src = &inst.source;
    let mut check = Check { name: "source dual = primal", worst: 0.0, tol, cases: 0, note: None, offending: None };
    if src.len() > MAX_SOURCE_CELLS {
        check.note = Some(format!("source has {} cells; the lattice oracle handles {MAX_SOURCE_CELLS}", src.len()));
        return check;
    }
    for _ in 0..samples {
        let rho = rng.gen::<f64>();
        let tau = ErrorType::ALL[rng.gen_range(0..3)];
        let classes = ClassPair::ALL[rng.gen_range(0..4)];
        let g = User::BOTH.map(|u| rng.gen_range(src.support_min(u)..=src.support_max(u)));
        let gamma = Thresholds { gamma1: g[0], gamma2: g[1] };
        let dual = -es_corr(rho, src, gamma, tau, classes, cfg).value;
        let primal = primal_source_min_refined(rho, src, tau, gamma, classes, 5e-3).expect("size checked");
        let d = diff(dual, primal);
        if d > check.worst {
            check.worst = d;
            check.offending = (d > check.tol).then(|| {
                format!("rho={rho:.6} tau={} classes={} gamma=({:.6},{:.6})", tau.label(), classes.label(), g[0], g[1])
            });
        }
        check.cases += 1;
    }
    check
}

fn channel_primal(inst: &Instance, rng: &mut ChaCha8Rng) -> Check {
    let mut check = Check { name: "channel primal = E0", worst: 0.0, tol: 1e-4, cases: 0, note: None, offending: None };
    let mut channels: Vec<(String, Vec<f64>, PointToPointChannel)> = Vec::new();
    for tau in ErrorType::ALL {
        for cp in ClassPair::ALL {
            let sc = superchannel(tau, &inst.channel, &inst.bank, cp).expect("validated instance");
            if sc.input.len() * sc.channel.output_size() <= MAX_CHANNEL_CELLS {
                channels.push((format!("superchannel {} {}", tau.label(), cp.label()), sc.input, sc.channel));
            }
        }
    }
    let from_instance = channels.len();
    for k in 0..8 {
        let (nx, ny) = (rng.gen_range(2..=4), rng.gen_range(2..=4));
        let rows: Vec<Vec<f64>> = (0..nx).map(|_| dist(rng, ny)).collect();
        let ch = PointToPointChannel::from_rows(&rows).expect("stochastic rows");
        channels.push((format!("random channel {k} ({nx}x{ny})"), dist(rng, nx), ch));
    }
    for (name, q, ch) in &channels {
        for rho in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let primal = primal_channel_min(rho, q, ch, 3, check.cases as u64).expect("size checked").value;
            let d = diff(primal, e0(rho, q, ch));
            if d > check.worst {
                check.worst = d;
                check.offending = (d > check.tol).then(|| format!("{name} rho={rho}"));
            }
            check.cases += 1;
        }
    }
    check.note = Some(format!("{from_instance} instance superchannels small enough, plus 8 reduced random channels"));
    check
}

fn tilted(rng: &mut ChaCha8Rng) -> Check {
    let mut check = Check { name: "tilted maximizer", worst: 0.0, tol: 1e-12, cases: 0, note: None, offending: None };
    for _ in 0..20 {
        let n = rng.gen_range(2..=6);
        let e: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 2.0).collect();
        let rho = rng.gen::<f64>();
        let (value, _) = tilted_max(&e, rho).expect("positive vector");
        for _ in 0..1000 {
            let v = dist(rng, n);
            check.worst = check.worst.max(tilted_objective(&e, &v, rho) - value);
        }
        check.cases += 1;
    }
    check
}

fn boundary(inst: &Instance, cfg: &SolverConfig) -> Check {
    let mut check = Check { name: "boundary identities", worst: 0.0, tol: 1e-8, cases: 0, note: None, offending: None };
    let ev = Evaluator::new(inst, *cfg).expect("validated instance");
    for (cp, (g1, g2)) in [
        (ClassPair::new(Class::One, Class::One), (0.0, 0.0)),
        (ClassPair::new(Class::One, Class::Two), (0.0, 1.0)),
        (ClassPair::new(Class::Two, Class::One), (1.0, 0.0)),
        (ClassPair::new(Class::Two, Class::Two), (1.0, 1.0)),
    ] {
        let gamma = Thresholds { gamma1: g1, gamma2: g2 };
        let q1 = inst.bank.get(User::One, cp.user1);
        let q2 = inst.bank.get(User::Two, cp.user2);
        let iid = iid_exponent(inst, q1, q2, cfg).expect("validated instance").value;
        for other in ClassPair::ALL {
            let f = ev.small_f(other, gamma).0.value;
            let d = if other == cp { diff(f, iid) } else if f == f64::INFINITY { 0.0 } else { f64::INFINITY };
            if d > check.worst {
                check.worst = d;
                check.offending = (d > check.tol).then(|| format!("f{} at gamma=({g1},{g2})", other.label()));
            }
            check.cases += 1;
        }
    }
    check
}

pub fn run(inst: &Instance, cfg: &SolverConfig, samples: usize, seed: u64, tol_exp: Option<f64>) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let source = source_duality(inst, cfg, samples, tol_exp.unwrap_or(2e-3), &mut rng);
    vec![source, channel_primal(inst, &mut rng), tilted(&mut rng), boundary(inst, cfg)]
}
