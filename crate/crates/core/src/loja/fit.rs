/// Frozen coefficients of the differential-check tolerance
/// `tol = a dt^2 + b dt h^2`, calibrated on the exact round solutions.
pub const TOL_A: f64 = 1.0;
pub const TOL_B: f64 = 1.0;

pub fn differential_tolerance(dt: f64, h: f64) -> f64 {
    TOL_A * dt * dt + TOL_B * dt * h * h
}

/// Smallest non-negative `(K, C)` with `lhs_i <= K a_i + C b_i` for all `i`,
/// minimising `K / K_max + C / C_max` where `K_max` and `C_max` are the
/// one-constant fits. Returns `None` when some row cannot be satisfied.
pub fn fit_two_constants(lhs: &[f64], a: &[f64], b: &[f64]) -> Option<(f64, f64)> {
    fit_two_constants_scaled(lhs, a, b, None)
}

/// As [`fit_two_constants`], with the objective `K / scales.0 + C / scales.1`
/// when `scales` is given.
pub fn fit_two_constants_scaled(lhs: &[f64], a: &[f64], b: &[f64], scales: Option<(f64, f64)>) -> Option<(f64, f64)> {
    assert!(lhs.len() == a.len() && a.len() == b.len());
    let mut k_lo: f64 = 0.0;
    let mut k_hi: f64 = 0.0;
    for i in 0..lhs.len() {
        if !(lhs[i] > 0.0) {
            if lhs[i].is_nan() {
                return None;
            }
            continue;
        }
        if a[i] <= 0.0 && b[i] <= 0.0 {
            return None;
        }
        if a[i] > 0.0 {
            k_hi = k_hi.max(lhs[i] / a[i]);
            if b[i] <= 0.0 {
                k_lo = k_lo.max(lhs[i] / a[i]);
            }
        }
    }
    let k_hi = k_hi.max(k_lo);
    let c_of = |k: f64| {
        let mut c: f64 = 0.0;
        for i in 0..lhs.len() {
            if lhs[i] > 0.0 && b[i] > 0.0 {
                c = c.max((lhs[i] - k * a[i]) / b[i]);
            }
        }
        c
    };
    let (ks, cs) = match scales {
        Some(sc) => sc,
        None => {
            let c0 = c_of(k_lo);
            (if k_hi > 0.0 { k_hi } else { 1.0 }, if c0 > 0.0 { c0 } else { 1.0 })
        }
    };
    let obj = |k: f64| k / ks + c_of(k) / cs;
    // The objective is convex and piecewise linear in K.
    let (mut lo, mut hi) = (k_lo, k_hi);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (obj(x1), obj(x2));
    for _ in 0..200 {
        if hi - lo <= 1e-14 * hi.max(1e-300) {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = obj(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = obj(x2);
        }
    }
    let mut best = 0.5 * (lo + hi);
    for cand in [k_lo, k_hi] {
        if obj(cand) < obj(best) {
            best = cand;
        }
    }
    Some((best, c_of(best)))
}

/// Ordinary least squares `y = p + q x`, returning `(p, q, se(q))`.
pub fn linear_regression(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = x.len();
    if n < 3 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let q = sxy / sxx;
    let p = my - q * mx;
    let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - p - q * a).powi(2)).sum();
    Some((p, q, (ssr / (nf - 2.0) / sxx).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_planted_constants() {
        // lhs = 2 a + 3 b exactly, with rows isolating each constant.
        let a = [1.0, 0.0, 0.5, 0.2];
        let b = [0.0, 1.0, 0.5, 0.9];
        let lhs: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 2.0 * x + 3.0 * y).collect();
        let (k, c) = fit_two_constants(&lhs, &a, &b).unwrap();
        assert!((k - 2.0).abs() < 1e-9 && (c - 3.0).abs() < 1e-9, "{k} {c}");
    }

    #[test]
    fn fit_is_feasible() {
        let a = [0.3, 0.9, 0.1, 0.5, 0.05];
        let b = [0.8, 0.1, 0.6, 0.5, 0.9];
        let lhs = [1.0, 0.7, 0.4, 0.9, 0.2];
        let (k, c) = fit_two_constants(&lhs, &a, &b).unwrap();
        for i in 0..5 {
            assert!(lhs[i] <= k * a[i] + c * b[i] + 1e-12);
        }
    }

    #[test]
    fn unsatisfiable_row() {
        assert!(fit_two_constants(&[1.0], &[0.0], &[0.0]).is_none());
        assert_eq!(fit_two_constants(&[-1.0, 0.0], &[0.0, 0.0], &[0.0, 0.0]), Some((0.0, 0.0)));
    }

    #[test]
    fn regression_on_a_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let (p, q, se) = linear_regression(&x, &y).unwrap();
        assert!((p - 1.0).abs() < 1e-14 && (q - 2.0).abs() < 1e-14 && se < 1e-14);
    }
}
