//! Adaptive Dormand-Prince integration along straight segments in the
//! complex plane. The state is a flat complex vector; callers pack whatever
//! operator structure they carry into it.

use crate::error::{GdeError, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OdeSettings {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeSettings {
    fn default() -> Self {
        OdeSettings {
            rtol: 1e-9,
            atol: 1e-12,
            max_steps: 200_000,
        }
    }
}

pub struct PathResult {
    /// State at every node, the seed included.
    pub states: Vec<Vec<Complex64>>,
    /// Accumulated local error estimate per segment.
    pub step_errors: Vec<f64>,
}

type Rhs<'a> = dyn FnMut(Complex64, &[Complex64]) -> Result<Vec<Complex64>> + 'a;

/// Integrate dy/dz = f(z, y) through the polyline `nodes`, seeding with `y0`
/// at the first node.
pub fn integrate_path(
    f: &mut Rhs,
    nodes: &[Complex64],
    y0: Vec<Complex64>,
    settings: &OdeSettings,
) -> Result<PathResult> {
    assert!(nodes.len() >= 2, "need at least one segment");
    let mut states = Vec::with_capacity(nodes.len());
    let mut step_errors = Vec::with_capacity(nodes.len() - 1);
    let mut y = y0;
    states.push(y.clone());
    for w in nodes.windows(2) {
        let (next, err) = integrate_segment(f, w[0], w[1], &y, settings)?;
        y = next;
        states.push(y.clone());
        step_errors.push(err);
    }
    Ok(PathResult {
        states,
        step_errors,
    })
}

/// One straight segment z(u) = z0 + u (z1 - z0), u in [0, 1].
pub fn integrate_segment(
    f: &mut Rhs,
    z0: Complex64,
    z1: Complex64,
    y0: &[Complex64],
    settings: &OdeSettings,
) -> Result<(Vec<Complex64>, f64)> {
    let dz = z1 - z0;
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut u = 0.0_f64;
    let mut h = 0.05_f64;
    let mut err_prev = 1.0_f64;
    let mut accumulated = 0.0_f64;
    let mut steps = 0usize;

    let eval = |f: &mut Rhs, u: f64, y: &[Complex64]| -> Result<Vec<Complex64>> {
        let mut dy = f(z0 + u * dz, y)?;
        for v in &mut dy {
            *v *= dz;
        }
        Ok(dy)
    };

    let mut k1 = eval(f, 0.0, &y)?;

    while u < 1.0 {
        if steps >= settings.max_steps {
            return Err(GdeError::StepFailure {
                z: z0 + u * dz,
                step: h * dz.norm(),
            });
        }
        steps += 1;
        let mut is_last = false;
        if h >= 1.0 - u {
            h = 1.0 - u;
            is_last = true;
        }
        if h < 1e-14 {
            return Err(GdeError::StepFailure {
                z: z0 + u * dz,
                step: h * dz.norm(),
            });
        }

        let stage = |y: &[Complex64], ks: &[(&[Complex64], f64)]| -> Vec<Complex64> {
            let mut out = y.to_vec();
            for &(k, c) in ks {
                for i in 0..n {
                    out[i] += h * c * k[i];
                }
            }
            out
        };

        let y2 = stage(&y, &[(&k1, 1.0 / 5.0)]);
        let k2 = eval(f, u + h / 5.0, &y2)?;
        let y3 = stage(&y, &[(&k1, 3.0 / 40.0), (&k2, 9.0 / 40.0)]);
        let k3 = eval(f, u + 3.0 * h / 10.0, &y3)?;
        let y4 = stage(
            &y,
            &[(&k1, 44.0 / 45.0), (&k2, -56.0 / 15.0), (&k3, 32.0 / 9.0)],
        );
        let k4 = eval(f, u + 4.0 * h / 5.0, &y4)?;
        let y5 = stage(
            &y,
            &[
                (&k1, 19372.0 / 6561.0),
                (&k2, -25360.0 / 2187.0),
                (&k3, 64448.0 / 6561.0),
                (&k4, -212.0 / 729.0),
            ],
        );
        let k5 = eval(f, u + 8.0 * h / 9.0, &y5)?;
        let y6 = stage(
            &y,
            &[
                (&k1, 9017.0 / 3168.0),
                (&k2, -355.0 / 33.0),
                (&k3, 46732.0 / 5247.0),
                (&k4, 49.0 / 176.0),
                (&k5, -5103.0 / 18656.0),
            ],
        );
        let k6 = eval(f, u + h, &y6)?;
        let ynew = stage(
            &y,
            &[
                (&k1, 35.0 / 384.0),
                (&k3, 500.0 / 1113.0),
                (&k4, 125.0 / 192.0),
                (&k5, -2187.0 / 6784.0),
                (&k6, 11.0 / 84.0),
            ],
        );
        let k7 = eval(f, u + h, &ynew)?;

        // embedded 4th-order difference
        let mut err_rms = 0.0_f64;
        let mut err_abs = 0.0_f64;
        for i in 0..n {
            let e = h
                * (71.0 / 57600.0 * k1[i] - 71.0 / 16695.0 * k3[i] + 71.0 / 1920.0 * k4[i]
                    - 17253.0 / 339200.0 * k5[i]
                    + 22.0 / 525.0 * k6[i]
                    - 1.0 / 40.0 * k7[i]);
            let sc = settings.atol + settings.rtol * y[i].norm().max(ynew[i].norm());
            err_rms += (e.norm() / sc).powi(2);
            err_abs += e.norm_sqr();
        }
        let err = (err_rms / n as f64).sqrt().max(1e-300);

        if err <= 1.0 {
            u = if is_last { 1.0 } else { u + h };
            y = ynew;
            k1 = k7;
            accumulated += err_abs.sqrt();
            let factor = 0.9 * err.powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0);
            h *= factor.clamp(0.2, 5.0);
            err_prev = err;
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
        }
    }
    Ok((y, accumulated))
}
