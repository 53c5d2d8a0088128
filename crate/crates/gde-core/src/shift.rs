//! Level-shift corrections driven by an asymptotic self-energy family.
//!
//! The family is sigma(E) = (alpha/4pi) E ln((m^2 - E^2)/m^2), optionally
//! multiplied by the soft cutoff Lambda^4/(Lambda^4 + E^4). The principal
//! log keeps sigma analytic in the open upper half plane: along Im E > 0 the
//! argument (m^2 - E^2)/m^2 never crosses the negative real axis, and on the
//! real axis the +i0 limit fixes Im ln = 0 for |E| < m, -pi for E > m, +pi
//! for E < -m. Everything below the axis is refused rather than continued.
//!
//! The leading shift is sigma at the unperturbed energy. The dynamical
//! correction multiplies it by the derivative of sigma, measured here as a
//! contour jump integral rather than a finite difference: the kernel pair
//! (E - e0 - 2i eps)^-2 - (E - e0)^-2 on the line Im = eps isolates the
//! derivative up to O(eps), and Richardson in eps removes that. Without the
//! cutoff the same window integral grows without bound as the window opens,
//! which is the point of the demonstration.

use crate::error::{GdeError, Result};
use crate::quad::adaptive_simpson;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SelfEnergyFamily {
    QedAsymptotic,
    QedAsymptoticRegulated { lambda: f64 },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SelfEnergyModel {
    pub alpha: f64,
    pub mass: f64,
    pub family: SelfEnergyFamily,
}

impl SelfEnergyModel {
    pub fn unregulated(alpha: f64, mass: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) || !(mass.is_finite() && mass > 0.0) {
            return Err(GdeError::InvalidModel(format!(
                "need positive finite alpha and mass, got {alpha}, {mass}"
            )));
        }
        Ok(SelfEnergyModel {
            alpha,
            mass,
            family: SelfEnergyFamily::QedAsymptotic,
        })
    }

    pub fn regulated(alpha: f64, mass: f64, lambda: f64) -> Result<Self> {
        let base = Self::unregulated(alpha, mass)?;
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(GdeError::InvalidModel(format!(
                "cutoff must be positive and finite, got {lambda}"
            )));
        }
        Ok(SelfEnergyModel {
            family: SelfEnergyFamily::QedAsymptoticRegulated { lambda },
            ..base
        })
    }

    pub fn lambda(&self) -> Option<f64> {
        match self.family {
            SelfEnergyFamily::QedAsymptotic => None,
            SelfEnergyFamily::QedAsymptoticRegulated { lambda } => Some(lambda),
        }
    }

    pub fn is_regulated(&self) -> bool {
        self.lambda().is_some()
    }

    /// sigma(E) on the closed upper half plane.
    pub fn sigma(&self, e: Complex64) -> Result<Complex64> {
        if e.im < 0.0 {
            return Err(GdeError::BranchViolation { e });
        }
        if let Some(lambda) = self.lambda() {
            // stay below the first regulator pole at height lambda/sqrt(2)
            if e.im > 0.5 * lambda {
                return Err(GdeError::BranchViolation { e });
            }
        }
        let m2 = self.mass * self.mass;
        let w = (m2 - e * e) / m2;
        if w.norm() < 1e-300 {
            return Err(GdeError::BranchViolation { e });
        }
        let ln_w = if e.im > 0.0 {
            w.ln()
        } else {
            // +i0 limit on the real axis
            let im = if w.re > 0.0 {
                0.0
            } else if e.re > 0.0 {
                -PI
            } else {
                PI
            };
            c64(w.re.abs().ln(), im)
        };
        let mut value = self.alpha / (4.0 * PI) * e * ln_w;
        if let Some(lambda) = self.lambda() {
            let l4 = lambda.powi(4);
            value *= l4 / (l4 + e.powu(4));
        }
        Ok(value)
    }
}

/// First-order shift, sigma at the bare energy approached from above.
pub fn leading_shift(model: &SelfEnergyModel, e0: f64) -> Result<Complex64> {
    model.sigma(c64(e0, 0.0))
}

/// One self-consistency sweep: move to e0 + delta0 and re-evaluate. Returns
/// (e_iter, delta2). Leaving the analyticity region is reported as
/// RegionExit, not BranchViolation: the model pushed itself out.
pub fn iterated_shift(model: &SelfEnergyModel, e0: f64) -> Result<(Complex64, Complex64)> {
    let delta0 = leading_shift(model, e0)?;
    let e_iter = e0 + delta0;
    let delta2 = model.sigma(e_iter).map_err(|err| match err {
        GdeError::BranchViolation { e } => GdeError::RegionExit { e },
        other => other,
    })?;
    Ok((e_iter, delta2))
}

const CONTOUR_TOL: f64 = 1e-12;
const CONTOUR_DEPTH: usize = 48;

/// Grading shared by every line integral here: tight brackets around the
/// kernel point, wide wings to the window edge.
fn graded_breakpoints(e0: f64, r: f64, eps: f64) -> Result<Vec<f64>> {
    if !(r.is_finite() && r > 0.0) || !(eps.is_finite() && eps > 0.0) {
        return Err(GdeError::InvalidModel(format!(
            "window {r} and line offset {eps} must be positive"
        )));
    }
    if e0 - 50.0 * eps <= -r || e0 + 50.0 * eps >= r {
        return Err(GdeError::InvalidModel(format!(
            "window [{:.3e}, {:.3e}] does not enclose the graded region around {e0}",
            -r, r
        )));
    }
    Ok(vec![
        -r,
        e0 - 50.0 * eps,
        e0 - 5.0 * eps,
        e0,
        e0 + 5.0 * eps,
        e0 + 50.0 * eps,
        r,
    ])
}

fn line_integral(
    model: &SelfEnergyModel,
    e0: f64,
    r: f64,
    eps: f64,
    kernel: &dyn Fn(Complex64) -> Complex64,
) -> Result<Complex64> {
    let points = graded_breakpoints(e0, r, eps)?;
    let mut total = c64(0.0, 0.0);
    for pair in points.windows(2) {
        let mut f = |x: f64| {
            let e = c64(x, eps);
            // Im = eps > 0 keeps the evaluation inside the branch region
            let s = model.sigma(e).expect("line stays inside the branch region");
            s * kernel(e)
        };
        total += adaptive_simpson(&mut f, pair[0], pair[1], CONTOUR_TOL, CONTOUR_DEPTH)?;
    }
    Ok(total / c64(0.0, 2.0 * PI))
}

/// (1/2pi i) integral of sigma(E)/(E - e0)^2 over the window [-r, r] on the
/// line Im = eps. The unregulated family makes this grow with the window;
/// the regulated one saturates once r passes the cutoff. Shared by the
/// divergence demonstration and the convergence check.
pub fn partial_window_integral(
    model: &SelfEnergyModel,
    e0: f64,
    r: f64,
    eps: f64,
) -> Result<Complex64> {
    let center = c64(e0, 0.0);
    line_integral(model, e0, r, eps, &|e| {
        let d = e - center;
        1.0 / (d * d)
    })
}

fn jump_integral(model: &SelfEnergyModel, e0: f64, r: f64, eps: f64) -> Result<Complex64> {
    let above = c64(e0, 2.0 * eps);
    let below = c64(e0, 0.0);
    line_integral(model, e0, r, eps, &|e| {
        let da = e - above;
        let db = e - below;
        1.0 / (da * da) - 1.0 / (db * db)
    })
}

pub const WINDOW_DOUBLING_LIMIT: f64 = 1e-6;

/// Derivative of sigma at e0 measured by the contour jump, and the
/// dynamical shift it induces. Returns (sigma_prime, delta_d) with
/// delta_d = delta0 * sigma_prime.
///
/// J(eps) = (1/2pi i) int_{Im=eps} sigma(E) [(E-e0-2i eps)^-2 - (E-e0)^-2] dE
/// equals sigma'(e0 + 2i eps) up to O(eps); the two-point Richardson
/// 2 J(eps/2) - J(eps) removes the linear term. Each J must be stable under
/// doubling the window, which is what pins the cutoff requirement r >= 10
/// Lambda.
pub fn dynamical_shift_contour(
    model: &SelfEnergyModel,
    e0: f64,
    r: f64,
    eps: f64,
) -> Result<(Complex64, Complex64)> {
    let lambda = model.lambda().ok_or(GdeError::NotRegulated)?;
    if r < 10.0 * lambda {
        return Err(GdeError::InvalidModel(format!(
            "window {r} too small; the tail needs r >= 10 lambda = {}",
            10.0 * lambda
        )));
    }
    if !(1e-4 * model.mass..=1e-2 * model.mass).contains(&eps) {
        return Err(GdeError::InvalidModel(format!(
            "line offset {eps} outside [1e-4, 1e-2] * mass"
        )));
    }
    let mut stabilized = Vec::with_capacity(2);
    for &line_eps in &[eps, 0.5 * eps] {
        let j_r = jump_integral(model, e0, r, line_eps)?;
        let j_2r = jump_integral(model, e0, 2.0 * r, line_eps)?;
        let rel_change = (j_2r - j_r).norm() / j_r.norm().max(1e-300);
        if rel_change > WINDOW_DOUBLING_LIMIT {
            return Err(GdeError::WindowUnstable {
                rel_change,
                limit: WINDOW_DOUBLING_LIMIT,
            });
        }
        stabilized.push(j_2r);
    }
    let sigma_prime = 2.0 * stabilized[1] - stabilized[0];
    let delta0 = leading_shift(model, e0)?;
    Ok((sigma_prime, delta0 * sigma_prime))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DivergenceRecord {
    pub windows: Vec<f64>,
    /// |partial window integral| per window.
    pub values: Vec<f64>,
    /// Pearson correlation of the values against ln^2 R.
    pub growth_correlation: f64,
    /// Least-squares slope of the values against ln R.
    pub log_slope: f64,
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt().max(1e-300)
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx.max(1e-300)
}

/// Open the window by successive decades and record the growth of the
/// uncut integral. Refused for the regulated family, whose window converges
/// instead of growing.
pub fn divergence_demo(model: &SelfEnergyModel, e0: f64) -> Result<DivergenceRecord> {
    if model.is_regulated() {
        return Err(GdeError::NotApplicable(
            "the regulated family converges; the growth demonstration needs the uncut one".into(),
        ));
    }
    let eps = 1e-3 * model.mass;
    let windows: Vec<f64> = [1e2, 1e3, 1e4].iter().map(|f| f * model.mass).collect();
    let mut values = Vec::with_capacity(windows.len());
    for &r in &windows {
        values.push(partial_window_integral(model, e0, r, eps)?.norm());
    }
    let ln2: Vec<f64> = windows.iter().map(|r| r.ln() * r.ln()).collect();
    let ln1: Vec<f64> = windows.iter().map(|r| r.ln()).collect();
    Ok(DivergenceRecord {
        growth_correlation: pearson(&ln2, &values),
        log_slope: fit_slope(&ln1, &values),
        windows,
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DivergenceStatus {
    Converged,
    Divergent,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShiftReport {
    pub e0: f64,
    pub delta0: Complex64,
    pub e_iter: Complex64,
    pub delta2: Complex64,
    pub delta_d: Complex64,
    /// delta_d / (alpha^3 delta0); None when the leading shift vanishes.
    pub a0: Option<Complex64>,
    pub divergence: DivergenceStatus,
    /// delta_d recomputed at cutoffs {lambda/2, lambda, 2 lambda}.
    pub lambda_sweep: Vec<(f64, Complex64)>,
}

/// Full correction pipeline at one energy for a regulated model.
pub fn scaling_report(model: &SelfEnergyModel, e0: f64) -> Result<ShiftReport> {
    let lambda = model.lambda().ok_or(GdeError::NotRegulated)?;
    let eps = 1e-3 * model.mass;
    let delta0 = leading_shift(model, e0)?;
    let (e_iter, delta2) = iterated_shift(model, e0)?;
    let (_, delta_d) = dynamical_shift_contour(model, e0, 10.0 * lambda, eps)?;
    let a0 = if delta0.norm() < 1e-300 {
        None
    } else {
        Some(delta_d / (model.alpha.powi(3) * delta0))
    };

    // window saturation: successive decade differences must collapse
    let i1 = partial_window_integral(model, e0, lambda, eps)?;
    let i2 = partial_window_integral(model, e0, 10.0 * lambda, eps)?;
    let i3 = partial_window_integral(model, e0, 100.0 * lambda, eps)?;
    let d1 = (i2 - i1).norm();
    let d2 = (i3 - i2).norm();
    let divergence = if d2 <= 0.1 * d1 {
        DivergenceStatus::Converged
    } else {
        DivergenceStatus::Divergent
    };

    let mut lambda_sweep = Vec::with_capacity(3);
    for factor in [0.5, 1.0, 2.0] {
        let l = factor * lambda;
        let swept = SelfEnergyModel::regulated(model.alpha, model.mass, l)?;
        let (_, dd) = dynamical_shift_contour(&swept, e0, 10.0 * l, eps)?;
        lambda_sweep.push((l, dd));
    }

    Ok(ShiftReport {
        e0,
        delta0,
        e_iter,
        delta2,
        delta_d,
        a0,
        divergence,
        lambda_sweep,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALPHA: f64 = 1.0 / 137.036;

    fn unreg() -> SelfEnergyModel {
        SelfEnergyModel::unregulated(ALPHA, 1.0).unwrap()
    }

    fn reg(lambda: f64) -> SelfEnergyModel {
        SelfEnergyModel::regulated(ALPHA, 1.0, lambda).unwrap()
    }

    /// d sigma/dE below the branch point, for real e, closed form.
    fn sigma_prime_analytic(model: &SelfEnergyModel, e: f64) -> Complex64 {
        let m2 = model.mass * model.mass;
        let w = 1.0 - e * e / m2;
        let pref = model.alpha / (4.0 * PI);
        let base = pref * e * w.ln();
        let base_prime = pref * (w.ln() - 2.0 * e * e / (m2 - e * e));
        match model.lambda() {
            None => c64(base_prime, 0.0),
            Some(lambda) => {
                let l4 = lambda.powi(4);
                let rg = l4 / (l4 + e.powi(4));
                let rg_prime = -rg * 4.0 * e.powi(3) / (l4 + e.powi(4));
                c64(base_prime * rg + base * rg_prime, 0.0)
            }
        }
    }

    #[test]
    fn frozen_point_values() {
        let su = leading_shift(&unreg(), 0.5).unwrap();
        assert!((su.re - (-8.352918917222792e-5)).abs() < 1e-16, "{su}");
        assert!(su.im == 0.0);

        let sr = leading_shift(&reg(100.0), 0.5).unwrap();
        assert!((sr.re - (-8.352918912002218e-5)).abs() < 1e-16, "{sr}");
        // cutoff correction is (e0/lambda)^4 at leading order
        let rel = (su.re - sr.re) / su.re;
        assert!((rel - 6.25e-10).abs() < 1e-12, "cutoff correction {rel:.3e}");

        let sp = sigma_prime_analytic(&reg(100.0), 0.5);
        assert!((sp.re - (-5.541949526212918e-4)).abs() < 1e-15, "{sp}");
        // the closed form is its own worst enemy; arbitrate with a
        // Richardson finite difference
        let model = reg(100.0);
        let fd = |h: f64| {
            let a = model.sigma(c64(0.5 + h, 0.0)).unwrap();
            let b = model.sigma(c64(0.5 - h, 0.0)).unwrap();
            ((a - b) / (2.0 * h)).re
        };
        let rich = (4.0 * fd(5e-5) - fd(1e-4)) / 3.0;
        assert!((rich - sp.re).abs() < 1e-12, "fd {rich:e} vs closed {sp}");
    }

    #[test]
    fn branch_conventions_on_and_off_axis() {
        let model = unreg();
        let pref = ALPHA / (4.0 * PI);

        let above = model.sigma(c64(2.0, 0.0)).unwrap();
        let expected = pref * 2.0 * c64(3.0_f64.ln(), -PI);
        assert!((above - expected).norm() < 1e-18, "{above} vs {expected}");

        let below = model.sigma(c64(-2.0, 0.0)).unwrap();
        let expected = pref * -2.0 * c64(3.0_f64.ln(), PI);
        assert!((below - expected).norm() < 1e-18, "{below} vs {expected}");

        // both continuum sides damp:
        assert!(above.im < 0.0 && below.im < 0.0);

        // continuity from above at the cut
        let lifted = model.sigma(c64(2.0, 1e-9)).unwrap();
        assert!((lifted - above).norm() < 1e-10);

        assert!(matches!(
            model.sigma(c64(0.5, -0.1)),
            Err(GdeError::BranchViolation { .. })
        ));
        assert!(matches!(
            model.sigma(c64(1.0, 0.0)),
            Err(GdeError::BranchViolation { .. })
        ));
        assert!(matches!(
            reg(100.0).sigma(c64(0.0, 60.0)),
            Err(GdeError::BranchViolation { .. })
        ));
        // same point is fine without the regulator region cap
        assert!(model.sigma(c64(0.0, 60.0)).is_ok());
    }

    #[test]
    fn iteration_moves_by_the_derivative() {
        let model = reg(100.0);
        let (e_iter, delta2) = iterated_shift(&model, 0.5).unwrap();
        let delta0 = leading_shift(&model, 0.5).unwrap();
        assert!((e_iter - (0.5 + delta0)).norm() == 0.0);
        let predicted = delta0 * sigma_prime_analytic(&model, 0.5);
        assert!(
            ((delta2 - delta0) - predicted).norm() < 1e-10,
            "delta2 - delta0 = {}, predicted {predicted}",
            delta2 - delta0
        );

        // above the branch point the first shift acquires a width and the
        // iterate leaves the region
        assert!(matches!(
            iterated_shift(&unreg(), 2.0),
            Err(GdeError::RegionExit { .. })
        ));
    }

    #[test]
    fn contour_jump_recovers_the_derivative() {
        let model = reg(100.0);
        let (sigma_prime, delta_d) = dynamical_shift_contour(&model, 0.5, 1000.0, 1e-3).unwrap();
        let oracle = sigma_prime_analytic(&model, 0.5);
        let rel = (sigma_prime - oracle).norm() / oracle.norm();
        assert!(rel < 1e-4, "contour derivative off by {rel:.3e}");
        let delta0 = leading_shift(&model, 0.5).unwrap();
        assert!((delta_d - delta0 * sigma_prime).norm() < 1e-20);

        assert!(matches!(
            dynamical_shift_contour(&unreg(), 0.5, 1000.0, 1e-3),
            Err(GdeError::NotRegulated)
        ));
        assert!(dynamical_shift_contour(&model, 0.5, 500.0, 1e-3).is_err());
        assert!(dynamical_shift_contour(&model, 0.5, 1000.0, 0.5).is_err());
    }

    #[test]
    fn uncut_window_grows_by_decades() {
        let record = divergence_demo(&unreg(), 0.5).unwrap();
        let frozen = [2.674286200495e-3, 4.011365373667e-3, 5.348489110498e-3];
        for (v, f) in record.values.iter().zip(frozen) {
            assert!((v - f).abs() / f < 1e-3, "window value {v:.4e} vs {f:.4e}");
        }
        assert!(record.values[0] < record.values[1] && record.values[1] < record.values[2]);
        assert!(record.growth_correlation >= 0.99);
        // the wings contribute (alpha/4pi) ln R through the branch jump
        let wing_rate = ALPHA / (4.0 * PI);
        assert!(
            (record.log_slope / wing_rate - 1.0).abs() < 0.01,
            "log slope {:.4e} vs alpha/4pi {:.4e}",
            record.log_slope,
            wing_rate
        );

        assert!(matches!(
            divergence_demo(&reg(100.0), 0.5),
            Err(GdeError::NotApplicable(_))
        ));
    }

    #[test]
    fn regulated_window_growth_matches_residue_sum() {
        let lambda = 100.0;
        let model = reg(lambda);
        let e0 = 0.5;
        let eps = 1e-3;
        let near = partial_window_integral(&model, e0, lambda, eps).unwrap();
        let wide = partial_window_integral(&model, e0, 10.0 * lambda, eps).unwrap();
        // the cutoff does not cap the window until the window covers it
        assert!(wide.norm() > near.norm());

        // closing the wide window upward picks up exactly the two upper
        // regulator poles p^4 = -lambda^4
        let base = unreg();
        let mut oracle = c64(0.0, 0.0);
        for &angle in &[PI / 4.0, 3.0 * PI / 4.0] {
            let p = lambda * c64(0.0, angle).exp();
            let su = base.sigma(p).unwrap();
            let residue = su * lambda.powi(4) / (4.0 * p.powu(3));
            oracle += residue / ((p - e0) * (p - e0));
        }
        // the open window misses an O(R^-4 ln R) tail, about 5e-6 here
        let rel = (wide - oracle).norm() / oracle.norm();
        assert!(rel < 1e-5, "window vs residue sum: {rel:.3e}");

        // and past the cutoff the growth dies while the tail collapses
        let wider = partial_window_integral(&model, e0, 100.0 * lambda, eps).unwrap();
        assert!((wider - wide).norm() <= 0.1 * (wide - near).norm());
        let rel_wider = (wider - oracle).norm() / oracle.norm();
        assert!(rel_wider < 1e-8, "saturated window vs residue sum: {rel_wider:.3e}");
    }

    #[test]
    fn report_scales_as_alpha_squared() {
        let report = scaling_report(&reg(100.0), 0.5).unwrap();
        assert_eq!(report.divergence, DivergenceStatus::Converged);
        assert_eq!(report.lambda_sweep.len(), 3);
        let a0 = report.a0.expect("leading shift is nonzero");

        let other_alpha = 1.0 / 100.0;
        let other = SelfEnergyModel::regulated(other_alpha, 1.0, 100.0).unwrap();
        let report2 = scaling_report(&other, 0.5).unwrap();
        let b0 = report2.a0.expect("leading shift is nonzero");

        let q1 = a0 * ALPHA * ALPHA;
        let q2 = b0 * other_alpha * other_alpha;
        let rel = (q1 - q2).norm() / q1.norm();
        assert!(rel < 1e-8, "alpha^2-scaled coefficient drifted by {rel:.3e}");
    }
}
