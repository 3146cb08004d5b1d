//! Scalar optimization and root finding used by the exponent solvers.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Minimizes a unimodal `f` on `[a, b]` by golden-section search until the
/// bracket is narrower than `tol`. Returns `(x, f(x))` for the best point
/// evaluated, endpoints included.
pub fn golden_section_min<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut best = (lo, f(lo));
    let fb = f(hi);
    if fb < best.1 {
        best = (hi, fb);
    }
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    for (x, fx) in [(x1, f1), (x2, f2)] {
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Outcome of minimizing a convex function over `[0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HalfLineMin {
    Attained { x: f64, value: f64 },
    /// The objective fell below the `-inf` detection floor.
    Unbounded,
}

/// Largest bracket tried before accepting the limit at infinity.
const MAX_BRACKET: f64 = 1.0e12;

/// Minimizes a convex `f` over `[0, ∞)`.
///
/// The upper bracket doubles (1, 2, 4, ...) until the right derivative at the
/// bracket end turns positive; the search then runs golden-section on the
/// last doubling interval. An infimum approached only at infinity is
/// reported at the largest bracket tried.
pub fn minimize_half_line<F: FnMut(f64) -> f64>(mut f: F, tol: f64, floor: f64) -> HalfLineMin {
    let f0 = f(0.0);
    if f0 < floor {
        return HalfLineMin::Unbounded;
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    loop {
        let fh = f(hi);
        if fh < floor {
            return HalfLineMin::Unbounded;
        }
        let step = 1e-7 * hi.max(1.0);
        if f(hi + step) > fh || hi >= MAX_BRACKET {
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    // Scale the stopping width so huge brackets do not force ~1e-10 resolution.
    let width = tol.max(hi * 1e-15);
    let (x, value) = golden_section_min(&mut f, lo, hi, width);
    if value < floor {
        return HalfLineMin::Unbounded;
    }
    if f0 <= value {
        HalfLineMin::Attained { x: 0.0, value: f0 }
    } else {
        HalfLineMin::Attained { x, value }
    }
}

/// Maximizes `h` on `[0, 1]`: a uniform grid of `grid` points locates the
/// best cell, then golden-section refines around it.
pub fn maximize_unit_interval<F: FnMut(f64) -> f64>(mut h: F, grid: usize, tol: f64) -> (f64, f64) {
    let n = grid.max(3);
    let step = 1.0 / (n - 1) as f64;
    let mut best = (0.0, f64::NEG_INFINITY);
    let mut best_k = 0;
    for k in 0..n {
        let x = k as f64 * step;
        let v = h(x);
        if v > best.1 {
            best = (x, v);
            best_k = k;
        }
    }
    let a = best_k.saturating_sub(1) as f64 * step;
    let b = ((best_k + 1).min(n - 1)) as f64 * step;
    let (x, neg) = golden_section_min(|x| -h(x), a, b, tol);
    if -neg > best.1 {
        (x, -neg)
    } else {
        best
    }
}

/// Bisection for a non-decreasing `d` with `d(lo) < 0 <= d(hi)`.
///
/// Returns the final bracket `(lo, d(lo), hi, d(hi))` and every evaluated
/// point, in evaluation order.
pub fn bisect_increasing<F: FnMut(f64) -> f64>(
    mut d: F,
    mut lo: f64,
    mut d_lo: f64,
    mut hi: f64,
    mut d_hi: f64,
    tol: f64,
    residual: f64,
) -> (Bracket, Vec<(f64, f64)>) {
    let mut trail = Vec::new();
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let dm = d(mid);
        trail.push((mid, dm));
        if dm < 0.0 {
            lo = mid;
            d_lo = dm;
        } else {
            hi = mid;
            d_hi = dm;
        }
        if d_lo.is_finite() && d_hi.is_finite() && d_hi - d_lo <= residual {
            break;
        }
    }
    (Bracket { lo, d_lo, hi, d_hi }, trail)
}

/// Final bracket of [`bisect_increasing`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub d_lo: f64,
    pub hi: f64,
    pub d_hi: f64,
}

/// `log Σ exp(xᵢ)`, exact for `-inf` entries; `-inf` for an empty slice.
pub fn log_sum_exp(xs: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if m.is_infinite() {
        return m;
    }
    m + xs.into_iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}
