//! Real roots of the photon-number fixed point
//! `n (kappa^2 + (delta_c - eta n)^2) = omega_sq`.
//!
//! In `y = eta n` the left side is `f(y) = y (kappa^2 + (delta_c - y)^2)`,
//! whose critical points are available in closed form. Each monotone piece of
//! `f` on `y >= 0` is bracketed and solved by safeguarded Newton iteration, so
//! the root count never depends on a discriminant threshold.

/// Ascending, distinct, nonnegative photon numbers. Never empty for
/// `kappa > 0`, `eta >= 0`, `omega_sq >= 0`.
pub fn photon_number_roots(kappa: f64, delta_c: f64, eta: f64, omega_sq: f64) -> Vec<f64> {
    if omega_sq == 0.0 {
        return vec![0.0];
    }
    if eta == 0.0 {
        return vec![omega_sq / (kappa * kappa + delta_c * delta_c)];
    }

    // Work in u = eta n / s with s the natural frequency scale.
    let s = delta_c.abs().max(kappa);
    let k = kappa / s;
    let d = delta_c / s;
    let rho = eta * omega_sq / (s * s * s);
    let f = |u: f64| u * (k * k + (d - u) * (d - u)) - rho;
    let df = |u: f64| 3.0 * u * u - 4.0 * d * u + d * d + k * k;

    let mut breaks = Vec::with_capacity(2);
    let disc = 4.0 * d * d - 12.0 * k * k;
    if disc > 0.0 {
        let r = disc.sqrt();
        for c in [(4.0 * d - r) / 6.0, (4.0 * d + r) / 6.0] {
            if c > 0.0 {
                breaks.push(c);
            }
        }
    }

    // f(0) = -rho < 0 and f grows like u^3, so the last piece always has a root.
    let mut upper = (2.0 * d.abs()).max(1.0).max(rho.cbrt());
    while f(upper) <= 0.0 {
        upper *= 2.0;
    }

    let mut edges = vec![0.0];
    edges.extend(&breaks);
    edges.push(upper);

    let mut roots_u: Vec<f64> = Vec::with_capacity(3);
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, fb) = (f(a), f(b));
        let root = if fa == 0.0 {
            Some(a)
        } else if fb == 0.0 {
            Some(b)
        } else if (fa < 0.0) != (fb < 0.0) {
            Some(safeguarded_newton(&f, &df, a, b))
        } else {
            None
        };
        if let Some(r) = root {
            if roots_u.last().is_none_or(|&last| r > last) {
                roots_u.push(r);
            }
        }
    }

    let g = |n: f64| {
        let det = delta_c - eta * n;
        n * (kappa * kappa + det * det) - omega_sq
    };
    let dg = |n: f64| {
        let det = delta_c - eta * n;
        kappa * kappa + det * det - 2.0 * eta * n * det
    };
    roots_u
        .into_iter()
        .map(|u| polish(&g, &dg, u * s / eta))
        .collect()
}

fn safeguarded_newton(f: &impl Fn(f64) -> f64, df: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (mut lo, mut hi) = if f(a) < 0.0 { (a, b) } else { (b, a) };
    let mut x = 0.5 * (a + b);
    for _ in 0..200 {
        let fx = f(x);
        if fx == 0.0 {
            return x;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let step = fx / df(x);
        let newton = x - step;
        let inside = (newton - lo) * (newton - hi) < 0.0;
        let next = if inside && step.is_finite() {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
            return next;
        }
        x = next;
    }
    x
}

/// A few Newton steps on the unscaled residual, kept only while they reduce it.
fn polish(g: &impl Fn(f64) -> f64, dg: &impl Fn(f64) -> f64, mut n: f64) -> f64 {
    let mut best = g(n).abs();
    for _ in 0..4 {
        let d = dg(n);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let candidate = n - g(n) / d;
        let r = g(candidate).abs();
        if candidate >= 0.0 && r < best {
            n = candidate;
            best = r;
        } else {
            break;
        }
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix3;

    /// Independent route: eigenvalues of the companion matrix of
    /// eta^2 n^3 - 2 eta delta_c n^2 + (kappa^2 + delta_c^2) n - omega_sq.
    fn companion_real_roots(kappa: f64, delta_c: f64, eta: f64, omega_sq: f64) -> Vec<f64> {
        let a2 = -2.0 * delta_c / eta;
        let a1 = (kappa * kappa + delta_c * delta_c) / (eta * eta);
        let a0 = -omega_sq / (eta * eta);
        let m = Matrix3::new(0.0, 0.0, -a0, 1.0, 0.0, -a1, 0.0, 1.0, -a2);
        let mut v: Vec<f64> = m
            .complex_eigenvalues()
            .iter()
            .filter(|z| z.im.abs() < 1e-8 * z.re.abs().max(1.0))
            .map(|z| z.re)
            .filter(|&r| r >= 0.0)
            .collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    fn residual(kappa: f64, delta_c: f64, eta: f64, omega_sq: f64, n: f64) -> f64 {
        let det = delta_c - eta * n;
        (n * (kappa * kappa + det * det) - omega_sq).abs() / omega_sq.max(1.0)
    }

    #[test]
    fn monostable_matches_companion() {
        for &(k, d, e, w) in &[
            (0.1, 0.05, 0.01, 2.0),
            (0.3, 1.0, 1e-3, 10.0),
            (1.0, -2.0, 0.5, 3.0),
        ] {
            let r = photon_number_roots(k, d, e, w);
            let c = companion_real_roots(k, d, e, w);
            assert_eq!(r.len(), 1, "{r:?}");
            assert_eq!(c.len(), 1, "{c:?}");
            assert!((r[0] - c[0]).abs() < 1e-8 * c[0]);
            assert!(residual(k, d, e, w, r[0]) < 1e-12);
        }
    }

    #[test]
    fn bistable_scan_finds_three_roots() {
        // kappa = 0.1, delta_c = 1, eta = 0.01: scan the pump upward until three
        // roots appear, then compare with the companion matrix route.
        let (k, d, e) = (0.1, 1.0, 0.01);
        let mut found = None;
        for i in 0..4000 {
            let omega = 0.05 * i as f64;
            let w = omega * omega;
            let r = photon_number_roots(k, d, e, w);
            if r.len() == 3 {
                found = Some((w, r));
                break;
            }
        }
        let (w, r) = found.expect("no bistable region");
        let c = companion_real_roots(k, d, e, w);
        assert_eq!(c.len(), 3, "{c:?}");
        for (a, b) in r.iter().zip(&c) {
            assert!((a - b).abs() < 1e-6 * b, "{a} vs {b}");
        }
        for &n in &r {
            assert!(residual(k, d, e, w, n) < 1e-12, "{n}");
        }
        assert!(r[0] < r[1] && r[1] < r[2]);
    }

    #[test]
    fn si_scale_coefficients() {
        // SI scales of the bundled preset: eta ~ 1e-4 rad/s per photon, omega_sq ~ 1e20.
        let kappa = 2.0 * std::f64::consts::PI * 215e3;
        let delta_c = 2.0 * std::f64::consts::PI * 947e3;
        let eta = 1.030_116_475e-4;
        let w = 8.68e19;
        let r = photon_number_roots(kappa, delta_c, eta, w);
        assert!(!r.is_empty());
        for &n in &r {
            assert!(residual(kappa, delta_c, eta, w, n) < 1e-12);
        }
    }

    #[test]
    fn trivial_branches() {
        assert_eq!(photon_number_roots(0.5, 1.0, 0.2, 0.0), vec![0.0]);
        assert_eq!(photon_number_roots(0.5, 0.0, 0.0, 1.0), vec![4.0]);
    }
}
