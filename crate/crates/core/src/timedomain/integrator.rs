//! Dormand–Prince 5(4) with FSAL and the standard step-size controller.
//!
//! Steps are clipped so that every requested sample time is hit exactly;
//! no interpolation is involved.

use crate::error::{invalid, Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights minus the embedded fourth-order ones.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;
const MAX_STEPS: usize = 50_000_000;
/// Local error target as a fraction of the requested tolerance. Global
/// error over ~100 oscillation periods then stays within a few tolerances.
const LOCAL_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance<const N: usize> {
    pub rtol: f64,
    pub atol: [f64; N],
}

/// Integrates `y' = f(t, y)` from `(t0, y0)` and returns the state at each of
/// `samples`, which must be nondecreasing and not earlier than `t0`.
pub fn integrate_samples<const N: usize>(
    f: impl Fn(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: [f64; N],
    samples: &[f64],
    tol: &Tolerance<N>,
) -> Result<Vec<[f64; N]>> {
    if samples.windows(2).any(|w| w[1] < w[0]) || samples.first().is_some_and(|&s| s < t0) {
        return Err(invalid(
            "sample times must be nondecreasing and start at or after t0",
        ));
    }
    let norm = |err: &[f64; N], y: &[f64; N], y1: &[f64; N]| -> f64 {
        let mut acc = 0.0;
        for i in 0..N {
            let sc = LOCAL_FRACTION * (tol.atol[i] + tol.rtol * y[i].abs().max(y1[i].abs()));
            let r = err[i] / sc;
            acc += r * r;
        }
        (acc / N as f64).sqrt()
    };

    let mut out = Vec::with_capacity(samples.len());
    let mut t = t0;
    let mut y = y0;
    let mut k0 = f(t, &y);
    let span = samples.last().map_or(0.0, |&s| s - t0);
    let mut h = initial_step(&f, t, &y, &k0, tol, span);
    let mut steps = 0usize;

    for &target in samples {
        while t < target {
            steps += 1;
            if steps > MAX_STEPS {
                return Err(Error::StepUnderflow { time: t });
            }
            let last = h >= target - t;
            let step = if last { target - t } else { h };
            if step <= 4.0 * f64::EPSILON * t.abs() || step < f64::MIN_POSITIVE {
                return Err(Error::StepUnderflow { time: t });
            }

            let mut k = [[0.0; N]; 7];
            k[0] = k0;
            let mut ys = [0.0; N];
            for s in 1..7 {
                for i in 0..N {
                    let mut acc = 0.0;
                    for (j, kj) in k.iter().enumerate().take(s) {
                        acc += A[s][j] * kj[i];
                    }
                    ys[i] = y[i] + step * acc;
                }
                k[s] = f(t + C[s] * step, &ys);
            }
            // Row 6 of A holds the fifth-order weights, so ys is the new state.
            let y1 = ys;
            let mut err = [0.0; N];
            for i in 0..N {
                let mut acc = 0.0;
                for (s, ks) in k.iter().enumerate() {
                    acc += E[s] * ks[i];
                }
                err[i] = step * acc;
            }
            let e = norm(&err, &y, &y1);
            if !e.is_finite() || y1.iter().any(|v| !v.is_finite()) {
                if y.iter().all(|v| v.is_finite()) && step > f64::EPSILON * t.abs().max(1.0) * 1e3 {
                    h = step * MIN_FACTOR;
                    continue;
                }
                return Err(Error::Divergence { time: t });
            }
            let factor = if e == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * e.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            if e <= 1.0 {
                t = if last { target } else { t + step };
                y = y1;
                k0 = k[6];
                // A clipped step says nothing about the natural step size.
                if !last {
                    h = step * factor;
                } else if factor < 1.0 {
                    h = h.min(step * factor);
                }
            } else {
                h = step * factor.min(1.0);
            }
        }
        out.push(y);
    }
    Ok(out)
}

fn initial_step<const N: usize>(
    f: &impl Fn(f64, &[f64; N]) -> [f64; N],
    t: f64,
    y: &[f64; N],
    k0: &[f64; N],
    tol: &Tolerance<N>,
    span: f64,
) -> f64 {
    let scaled = |v: &[f64; N]| -> f64 {
        let mut acc = 0.0;
        for i in 0..N {
            let sc = LOCAL_FRACTION * (tol.atol[i] + tol.rtol * y[i].abs());
            acc += (v[i] / sc).powi(2);
        }
        (acc / N as f64).sqrt()
    };
    let d0 = scaled(y);
    let d1 = scaled(k0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = if span > 0.0 { h0.min(span) } else { h0 };
    let mut y1 = [0.0; N];
    for i in 0..N {
        y1[i] = y[i] + h0 * k0[i];
    }
    let k1 = f(t + h0, &y1);
    let mut diff = [0.0; N];
    for i in 0..N {
        diff[i] = k1[i] - k0[i];
    }
    let d2 = scaled(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    let h = (100.0 * h0).min(h1);
    if span > 0.0 {
        h.min(span)
    } else {
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let tol = Tolerance {
            rtol: 1e-10,
            atol: [1e-14],
        };
        let ts: Vec<f64> = (0..=10).map(|i| i as f64 * 0.5).collect();
        let ys = integrate_samples(|_, y| [-y[0]], 0.0, [1.0], &ts, &tol).unwrap();
        for (t, y) in ts.iter().zip(&ys) {
            assert!((y[0] - (-t).exp()).abs() < 1e-9, "{t}");
        }
    }

    #[test]
    fn harmonic_oscillator_phase() {
        let tol = Tolerance {
            rtol: 1e-11,
            atol: [1e-14; 2],
        };
        let ts = [0.0, 1.0, 50.0, 100.0];
        let ys = integrate_samples(|_, y| [y[1], -y[0]], 0.0, [1.0, 0.0], &ts, &tol).unwrap();
        for (t, y) in ts.iter().zip(&ys) {
            assert!((y[0] - t.cos()).abs() < 1e-8, "{t}: {}", y[0]);
        }
    }

    #[test]
    fn blow_up_is_reported() {
        let tol = Tolerance {
            rtol: 1e-8,
            atol: [1e-12],
        };
        let err = integrate_samples(|_, y| [y[0] * y[0]], 0.0, [1.0], &[2.0], &tol).unwrap_err();
        assert!(
            matches!(err, Error::Divergence { .. } | Error::StepUnderflow { .. }),
            "{err:?}"
        );
    }

    #[test]
    fn rejects_unordered_samples() {
        let tol = Tolerance {
            rtol: 1e-8,
            atol: [1e-12],
        };
        assert!(integrate_samples(|_, y| [y[0]], 0.0, [1.0], &[1.0, 0.5], &tol).is_err());
    }
}
