//! Energy-domain flow for the transition operator T(z).
//!
//! T obeys dT/dz = -T G0(z)^2 T with the interaction fixing the boundary
//! value at large |z|, where T(z) -> B(z). The flow has an exact algebraic
//! first integral: K = T(z)^-1 + G0(z) is constant, so any known pair
//! (z_a, T_a) continues to T(z) = (I + T_a [G0(z_a) - G0(z)])^-1 T_a without
//! further integration. The ODE route and the continuation route are kept
//! side by side on purpose: the solver produces samples along a contour, the
//! continuation evaluates between and beyond them, and their disagreement is
//! a direct numerical health signal (see `dt_dz_residual`).
//!
//! Contours live in the upper half plane and run inward from a start radius
//! in the asymptotic regime. The seed T = B is exact only at infinite radius;
//! the relative truncation it carries scales like ||B G0|| ~ ||H|| / R, so
//! tight downstream targets need generous start radii rather than tighter
//! integrator tolerances.

use crate::basis::FreeBasis;
use crate::error::{GdeError, Result};
use crate::interaction::InteractionModel;
use crate::linalg::{hermitian_evolution, outer, CMatrix};
use crate::ode::{integrate_path, OdeSettings};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Seed regime gate: ||B(z0)||_F * ||G0(z0)||_F must stay below this.
pub const BOUNDARY_PRODUCT_LIMIT: f64 = 0.1;

/// Contour start radius must exceed this multiple of the spectral extent.
pub const RADIUS_MARGIN: f64 = 10.0;

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContourDirection {
    /// First sample sits at the start radius, later samples move inward.
    Inward,
    /// Reversed storage order; last sample is the outermost.
    Outward,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZContour {
    pub start_radius: f64,
    pub imag_offset: f64,
    pub sample_points: Vec<Complex64>,
    pub direction: ContourDirection,
}

impl ZContour {
    /// Wrap an explicit inward point list. The first point sets the radius,
    /// `imag_offset` must lower-bound every imaginary part.
    pub fn from_points(points: Vec<Complex64>, imag_offset: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(GdeError::InvalidModel("contour needs sample points".into()));
        }
        Ok(ZContour {
            start_radius: points[0].norm(),
            imag_offset,
            sample_points: points,
            direction: ContourDirection::Inward,
        })
    }

    /// Log-spaced radii on the positive imaginary axis, r_hi down to r_lo.
    pub fn imaginary_axis(r_hi: f64, r_lo: f64, n: usize) -> Result<Self> {
        if !(r_hi.is_finite() && r_lo.is_finite()) || r_lo <= 0.0 || r_hi <= r_lo || n < 2 {
            return Err(GdeError::InvalidModel(format!(
                "imaginary-axis contour needs 0 < r_lo < r_hi and n >= 2, got ({r_hi}, {r_lo}, {n})"
            )));
        }
        let ratio = r_lo / r_hi;
        let points = (0..n)
            .map(|k| {
                let f = k as f64 / (n - 1) as f64;
                c64(0.0, r_hi * ratio.powf(f))
            })
            .collect();
        ZContour::from_points(points, r_lo * 0.999_999)
    }

    /// Straight horizontal run at fixed height, left-moving.
    pub fn horizontal_line(re_hi: f64, re_lo: f64, im: f64, n: usize) -> Result<Self> {
        if re_hi <= re_lo || im <= 0.0 || n < 2 {
            return Err(GdeError::InvalidModel(format!(
                "horizontal contour needs re_hi > re_lo, im > 0, n >= 2, got ({re_hi}, {re_lo}, {im}, {n})"
            )));
        }
        let points = (0..n)
            .map(|k| {
                let f = k as f64 / (n - 1) as f64;
                c64(re_hi + (re_lo - re_hi) * f, im)
            })
            .collect();
        ZContour::from_points(points, im * 0.999_999)
    }

    /// Inward sweep that approaches the spectrum at height eps, climbs before
    /// reaching it, crosses above it at half a scale unit, and descends past
    /// the lower spectral edge. Every sample keeps a distance of at least
    /// 0.5 * scale from the level set, which keeps both the flow and the
    /// finite-difference defect detector away from the T poles that sit on
    /// the real axis between the levels.
    pub fn standard_sweep(basis: &FreeBasis, start_radius: f64, n: usize) -> Result<Self> {
        if n < 16 {
            return Err(GdeError::InvalidModel(format!(
                "standard sweep needs at least 16 points, got {n}"
            )));
        }
        let s = basis.scale();
        let eps = 1e-3 * s;
        let energies = basis.energies();
        let e_max = energies[energies.len() - 1];
        let e_min = energies[0];
        let re_hi = e_max + 0.5 * s;
        let re_lo = e_min - 0.5 * s;
        let h_cross = 0.5 * s;
        if start_radius <= re_hi.abs() * 2.0 + s {
            return Err(GdeError::InvalidModel(format!(
                "start radius {start_radius} is not asymptotic for a spectrum reaching {e_max}"
            )));
        }

        let n_b = (n / 10).max(3);
        let n_c = (3 * n / 10).max(4);
        let n_e = (n / 10).max(2);
        let n_a = n - 2 * n_b - n_c - n_e;

        let mut points = Vec::with_capacity(n);
        // approach leg, geometric in the shifted abscissa
        let g_hi = start_radius - re_hi + 0.5 * s;
        let g_lo = 0.5 * s;
        for k in 0..n_a {
            let f = k as f64 / (n_a - 1) as f64;
            let g = g_hi * (g_lo / g_hi).powf(f);
            points.push(c64(re_hi - 0.5 * s + g, eps));
        }
        // climb at the right spectral edge
        for j in 1..=n_b {
            let f = j as f64 / n_b as f64;
            points.push(c64(re_hi, eps + (h_cross - eps) * f));
        }
        // crossing above the spectrum
        for j in 1..=n_c {
            let f = j as f64 / n_c as f64;
            points.push(c64(re_hi + (re_lo - re_hi) * f, h_cross));
        }
        // descend at the left edge
        for j in 1..=n_b {
            let f = j as f64 / n_b as f64;
            points.push(c64(re_lo, h_cross + (eps - h_cross) * f));
        }
        // run below the spectrum
        for j in 1..=n_e {
            let f = j as f64 / n_e as f64;
            points.push(c64(re_lo - 0.5 * s * f, eps));
        }
        ZContour::from_points(points, eps * 0.999_999)
    }

    pub fn len(&self) -> usize {
        self.sample_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample_points.is_empty()
    }

    /// Structural checks against a basis: upper half plane with the declared
    /// offset, monotone real part in the declared direction, outermost point
    /// consistent with the radius, and the radius asymptotic relative to the
    /// spectrum.
    pub fn validate(&self, basis: &FreeBasis) -> Result<()> {
        if self.sample_points.len() < 2 {
            return Err(GdeError::InvalidModel(
                "contour needs at least 2 sample points".into(),
            ));
        }
        if !self.imag_offset.is_finite() || self.imag_offset <= 0.0 {
            return Err(GdeError::InvalidModel(format!(
                "imag_offset must be positive and finite, got {}",
                self.imag_offset
            )));
        }
        if !self.start_radius.is_finite() || self.start_radius <= 0.0 {
            return Err(GdeError::InvalidModel(format!(
                "start_radius must be positive and finite, got {}",
                self.start_radius
            )));
        }
        for (k, z) in self.sample_points.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(GdeError::InvalidModel(format!(
                    "contour point {k} is not finite"
                )));
            }
            if z.im < self.imag_offset * (1.0 - 1e-12) {
                return Err(GdeError::LowerHalfPlane { z: *z });
            }
        }
        let pts = &self.sample_points;
        let ordered: Box<dyn Iterator<Item = &[Complex64]>> = match self.direction {
            ContourDirection::Inward => Box::new(pts.windows(2)),
            ContourDirection::Outward => Box::new(pts.windows(2).rev()),
        };
        for pair in ordered {
            let (outer_pt, inner_pt) = match self.direction {
                ContourDirection::Inward => (pair[0], pair[1]),
                ContourDirection::Outward => (pair[1], pair[0]),
            };
            if inner_pt.re > outer_pt.re + 1e-9 * outer_pt.norm().max(1.0) {
                return Err(GdeError::InvalidModel(format!(
                    "real part must not increase along the sweep: {} -> {}",
                    outer_pt, inner_pt
                )));
            }
        }
        let outermost = match self.direction {
            ContourDirection::Inward => pts[0],
            ContourDirection::Outward => pts[pts.len() - 1],
        };
        if (outermost.norm() - self.start_radius).abs() > 1e-6 * self.start_radius {
            return Err(GdeError::InvalidModel(format!(
                "outermost sample |z| = {} disagrees with start_radius {}",
                outermost.norm(),
                self.start_radius
            )));
        }
        let mx = pts.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if mx > self.start_radius * (1.0 + 1e-6) {
            return Err(GdeError::InvalidModel(format!(
                "a sample at |z| = {mx} lies beyond start_radius {}",
                self.start_radius
            )));
        }
        let floor = RADIUS_MARGIN * basis.max_abs_energy().max(basis.scale());
        if self.start_radius < floor {
            return Err(GdeError::InvalidModel(format!(
                "start_radius {} is inside the boundary regime floor {} for this spectrum",
                self.start_radius, floor
            )));
        }
        Ok(())
    }
}

/// Continue a known pair (z_a, T_a) to z through the exact first integral.
pub fn continue_t(
    basis: &FreeBasis,
    z_a: Complex64,
    t_a: &CMatrix,
    z: Complex64,
) -> Result<CMatrix> {
    let da = basis.resolvent_entries(z_a)?;
    let dz = basis.resolvent_entries(z)?;
    let delta: Vec<Complex64> = da.iter().zip(&dz).map(|(a, b)| a - b).collect();
    let sys = CMatrix::identity(t_a.rows()).add(&t_a.scale_cols(&delta));
    sys.lu_solve(t_a)
}

/// G(z) = G0 + G0 T G0 for an explicit T value.
pub fn green_operator(t: &CMatrix, basis: &FreeBasis, z: Complex64) -> Result<CMatrix> {
    let d = basis.resolvent_entries(z)?;
    let mut g = t.scale_rows(&d).scale_cols(&d);
    for i in 0..g.rows() {
        g[(i, i)] += d[i];
    }
    Ok(g)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TSolution {
    pub contour: ZContour,
    pub samples: Vec<CMatrix>,
    /// Accumulated local truncation estimate per contour segment.
    pub step_errors: Vec<f64>,
    basis: FreeBasis,
}

impl TSolution {
    pub fn basis(&self) -> &FreeBasis {
        &self.basis
    }

    pub fn dimension(&self) -> usize {
        self.basis.dimension()
    }

    fn nearest_sample(&self, z: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, p) in self.contour.sample_points.iter().enumerate() {
            let d = (z - p).norm();
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        best
    }

    /// Evaluate T at z by exact continuation from the nearest sample.
    /// Valid anywhere inside the start radius; beyond it the solution is
    /// extrapolating into the regime the boundary data already owns.
    pub fn t_at(&self, z: Complex64) -> Result<CMatrix> {
        if z.norm() > self.contour.start_radius * (1.0 + 1e-9) {
            return Err(GdeError::OutOfContour {
                z,
                radius: self.contour.start_radius,
            });
        }
        let k = self.nearest_sample(z);
        continue_t(
            &self.basis,
            self.contour.sample_points[k],
            &self.samples[k],
            z,
        )
    }

    pub fn green_at(&self, z: Complex64) -> Result<CMatrix> {
        let t = self.t_at(z)?;
        green_operator(&t, &self.basis, z)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("TSolution serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<TSolution> {
        let sol: TSolution =
            serde_json::from_str(text).map_err(|e| GdeError::Parse(format!("TSolution: {e}")))?;
        sol.check_shape()?;
        Ok(sol)
    }

    fn check_shape(&self) -> Result<()> {
        self.contour
            .validate(&self.basis)
            .map_err(|e| GdeError::Parse(format!("TSolution contour: {e}")))?;
        let n = self.contour.sample_points.len();
        let d = self.basis.dimension();
        if self.samples.len() != n {
            return Err(GdeError::Parse(format!(
                "{} samples for {} contour points",
                self.samples.len(),
                n
            )));
        }
        if self.step_errors.len() + 1 != n {
            return Err(GdeError::Parse(format!(
                "{} step errors for {} contour points",
                self.step_errors.len(),
                n
            )));
        }
        for (k, s) in self.samples.iter().enumerate() {
            if s.rows() != d || s.cols() != d {
                return Err(GdeError::Parse(format!(
                    "sample {k} is {}x{}, basis dimension is {d}",
                    s.rows(),
                    s.cols()
                )));
            }
        }
        Ok(())
    }
}

fn mat_to_state(m: &CMatrix) -> Vec<Complex64> {
    m.data().to_vec()
}

fn state_to_mat(v: &[Complex64], d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| v[i * d + j])
}

/// Integrate the flow along the contour from the asymptotic seed T = B.
pub fn solve_t_ode(
    model: &InteractionModel,
    basis: &FreeBasis,
    contour: &ZContour,
    settings: &OdeSettings,
) -> Result<TSolution> {
    contour.validate(basis)?;
    if model.dimension() != basis.dimension() {
        return Err(GdeError::InvalidModel(format!(
            "interaction dimension {} vs basis dimension {}",
            model.dimension(),
            basis.dimension()
        )));
    }
    if contour.direction != ContourDirection::Inward {
        return Err(GdeError::InvalidModel(
            "the flow is seeded at the outer end; use an inward contour".into(),
        ));
    }
    let d = basis.dimension();
    let z0 = contour.sample_points[0];
    let b0 = model.b_of_z(z0)?;
    let g0 = basis.resolvent_entries(z0)?;
    let g0_norm = g0.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let product = b0.frobenius() * g0_norm;
    if product >= BOUNDARY_PRODUCT_LIMIT {
        return Err(GdeError::BoundaryRegimeViolation {
            z: z0,
            product,
            limit: BOUNDARY_PRODUCT_LIMIT,
        });
    }

    let mut rhs = |z: Complex64, y: &[Complex64]| -> Result<Vec<Complex64>> {
        let t = state_to_mat(y, d);
        let g2 = basis.squared_resolvent_entries(z)?;
        let dt = t.scale_cols(&g2).mul(&t).scale(c64(-1.0, 0.0));
        Ok(mat_to_state(&dt))
    };
    let path = integrate_path(&mut rhs, &contour.sample_points, mat_to_state(&b0), settings)?;
    let samples = path.states.iter().map(|s| state_to_mat(s, d)).collect();
    Ok(TSolution {
        contour: contour.clone(),
        samples,
        step_errors: path.step_errors,
        basis: basis.clone(),
    })
}

/// Independent oracle: solve (I - H G0(z)) T = H directly.
pub fn lippmann_schwinger_oracle(
    h_matrix: &CMatrix,
    basis: &FreeBasis,
    z: Complex64,
) -> Result<CMatrix> {
    if !h_matrix.is_square() || h_matrix.rows() != basis.dimension() {
        return Err(GdeError::InvalidModel(format!(
            "interaction is {}x{}, basis dimension is {}",
            h_matrix.rows(),
            h_matrix.cols(),
            basis.dimension()
        )));
    }
    let d = basis.resolvent_entries(z)?;
    let sys = CMatrix::identity(h_matrix.rows()).sub(&h_matrix.scale_cols(&d));
    sys.lu_solve(h_matrix)
}

/// Closed-form T for rank-one couplings, T(z) = t(z) |phi><phi|.
///
/// Instantaneous models admit the bare closed form t = g / (1 - g sigma(z)).
/// Memory models decay at large |z|, so the scalar flow must be matched to
/// the boundary operator at an explicit finite point z_s:
/// 1/t(z) = 1/b(z_s) + sigma(z_s) - sigma(z).
pub fn solve_t_separable(
    model: &InteractionModel,
    basis: &FreeBasis,
    z: Complex64,
    matching_point: Option<Complex64>,
) -> Result<CMatrix> {
    let (g, phi) = model.rank_one_factor()?;
    let dim = basis.dimension();
    if phi.len() != dim {
        return Err(GdeError::InvalidModel(format!(
            "rank-one state has {} components, basis dimension is {dim}",
            phi.len()
        )));
    }
    if g.abs() < 1e-300 {
        return Ok(CMatrix::zeros(dim, dim));
    }
    let sigma = |w: Complex64| -> Result<Complex64> {
        let d = basis.resolvent_entries(w)?;
        Ok(phi.iter().zip(&d).map(|(p, r)| p.norm_sqr() * r).sum())
    };
    let scalar_b = |w: Complex64| -> Result<Complex64> {
        match model {
            InteractionModel::Instantaneous { .. } => Ok(c64(g, 0.0)),
            InteractionModel::ExponentialMemory { theta, .. } => {
                let den = c64(1.0, 0.0) - c64(0.0, 1.0) * w * *theta;
                if den.norm() < 1e-14 {
                    return Err(GdeError::InvalidModel(format!(
                        "boundary operator undefined at z = {w}"
                    )));
                }
                Ok(c64(g, 0.0) / den)
            }
        }
    };
    let inv_t = match matching_point {
        None => {
            if model.is_nonlocal() {
                return Err(GdeError::InvalidModel(
                    "memory couplings vanish at the boundary; pass a finite matching point".into(),
                ));
            }
            c64(1.0 / g, 0.0) - sigma(z)?
        }
        Some(zs) => {
            let b = scalar_b(zs)?;
            if b.norm() < 1e-300 {
                return Ok(CMatrix::zeros(dim, dim));
            }
            1.0 / b + sigma(zs)? - sigma(z)?
        }
    };
    if inv_t.norm() < 1e-300 {
        return Err(GdeError::SingularSolve(format!(
            "separable amplitude has a pole at z = {z}"
        )));
    }
    Ok(outer(&phi, &phi).scale(1.0 / inv_t))
}

/// Defect of the flow equation at a point interior to the contour.
///
/// The derivative is a central difference along the local contour tangent,
/// with each side continued from the adjacent sample rather than the nearest
/// one. A corrupted sample therefore shows up twice: once through the right
/// hand side and once, amplified by 1/h, through its neighbors' differences.
pub fn dt_dz_residual(sol: &TSolution, z: Complex64) -> Result<f64> {
    let pts = &sol.contour.sample_points;
    if z.norm() > sol.contour.start_radius * (1.0 + 1e-9) {
        return Err(GdeError::OutOfContour {
            z,
            radius: sol.contour.start_radius,
        });
    }
    let k = sol.nearest_sample(z);
    if k == 0 || k + 1 >= pts.len() {
        return Err(GdeError::OutOfContour {
            z,
            radius: sol.contour.start_radius,
        });
    }
    let secant = pts[k + 1] - pts[k - 1];
    if secant.norm() == 0.0 {
        return Err(GdeError::InvalidModel(
            "degenerate contour: neighbors coincide".into(),
        ));
    }
    let dir = secant / secant.norm();
    let h = 1e-4 * z.norm().max(1.0);
    let t0 = continue_t(&sol.basis, pts[k], &sol.samples[k], z)?;
    let tp = continue_t(&sol.basis, pts[k + 1], &sol.samples[k + 1], z + dir * h)?;
    let tm = continue_t(&sol.basis, pts[k - 1], &sol.samples[k - 1], z - dir * h)?;
    let fd = tp.sub(&tm).scale(1.0 / (dir * 2.0 * h));
    let g2 = sol.basis.squared_resolvent_entries(z)?;
    let rhs = t0.scale_cols(&g2).mul(&t0);
    let defect = fd.add(&rhs).frobenius();
    let t_norm = t0.frobenius();
    Ok(defect / (t_norm * t_norm).max(1.0))
}

/// Green operator sampled on a horizontal line just above the real axis,
/// the input for spectral reconstruction of the evolution.
#[derive(Debug, Clone)]
pub struct GreenLine {
    pub e_min: f64,
    pub e_max: f64,
    pub eps: f64,
    pub step: f64,
    pub samples: Vec<CMatrix>,
}

/// Shared window checks. Returns (segment count, adjusted step) with the
/// segment count even so Simpson weights apply.
fn check_line_window(
    basis: &FreeBasis,
    e_min: f64,
    e_max: f64,
    eps: f64,
    step: f64,
) -> Result<(usize, f64)> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(GdeError::InvalidModel(format!(
            "line offset must be positive, got {eps}"
        )));
    }
    if !(step.is_finite() && step > 0.0) || e_min >= e_max {
        return Err(GdeError::InvalidModel(format!(
            "bad line window [{e_min}, {e_max}] step {step}"
        )));
    }
    if step > eps / 2.0 * (1.0 + 1e-12) {
        return Err(GdeError::WindowTooNarrow(format!(
            "step {step} cannot resolve a line at offset {eps}; need step <= eps/2"
        )));
    }
    let energies = basis.energies();
    let lo = energies[0];
    let hi = energies[energies.len() - 1];
    if e_min > lo - 10.0 * eps || e_max < hi + 10.0 * eps {
        return Err(GdeError::WindowTooNarrow(format!(
            "window [{e_min}, {e_max}] must cover the spectrum [{lo}, {hi}] with 10 eps margin"
        )));
    }
    let mut segments = ((e_max - e_min) / step).ceil() as usize;
    if segments % 2 == 1 {
        segments += 1;
    }
    segments = segments.max(2);
    Ok((segments, (e_max - e_min) / segments as f64))
}

const LINE_STORAGE_CAP: usize = 4_000_000;

/// Sample G on the line Im = eps across the window.
pub fn green_line_from_t(
    sol: &TSolution,
    e_min: f64,
    e_max: f64,
    eps: f64,
    step: f64,
) -> Result<GreenLine> {
    let (segments, step) = check_line_window(&sol.basis, e_min, e_max, eps, step)?;
    let d = sol.dimension();
    if (segments + 1) * d * d > LINE_STORAGE_CAP {
        return Err(GdeError::QuadratureFailure(format!(
            "line grid would store {} complex entries; widen the step or use the scalar survival path",
            (segments + 1) * d * d
        )));
    }
    let mut samples = Vec::with_capacity(segments + 1);
    for k in 0..=segments {
        let e = e_min + step * k as f64;
        samples.push(sol.green_at(c64(e, eps))?);
    }
    Ok(GreenLine {
        e_min,
        e_max,
        eps,
        step,
        samples,
    })
}

/// Fraction of 1/t the line spacing must not exceed when reconstructing at
/// time t: phases across one step stay well inside a period.
pub const LINE_DENSITY_FRACTION: f64 = 0.05;

/// Schroedinger-picture U(t, 0) from the sampled line.
///
/// The free part is split off and handled exactly; only the interacting
/// difference D = G - G0 is transformed. D falls off like 1/E^2 at the
/// window edges, which is what makes the truncated window stable (the raw
/// G kernel would decay only like 1/E). The spectral weight of the
/// difference is A(E) = (i/2pi) (D - D^dagger), and
/// U(t) = exp(-i H0 t) + exp(eps t) * integral A(E) exp(-i E t) dE.
pub fn evolution_from_green(line: &GreenLine, basis: &FreeBasis, t: f64) -> Result<CMatrix> {
    if !t.is_finite() || t < 0.0 {
        return Err(GdeError::InvalidModel(format!(
            "reconstruction time must be nonnegative, got {t}"
        )));
    }
    if t > 0.0 && line.step > LINE_DENSITY_FRACTION / t {
        return Err(GdeError::WindowTooNarrow(format!(
            "step {} too coarse for t = {t}; need step <= {}",
            line.step,
            LINE_DENSITY_FRACTION / t
        )));
    }
    let d = basis.dimension();
    if line.samples.is_empty() || line.samples[0].rows() != d {
        return Err(GdeError::InvalidModel(
            "line samples do not match the basis dimension".into(),
        ));
    }
    let n = line.samples.len();
    if n < 3 || n % 2 == 0 {
        return Err(GdeError::QuadratureFailure(format!(
            "Simpson reconstruction needs an odd sample count >= 3, got {n}"
        )));
    }
    let pref = c64(0.0, 1.0) / (2.0 * std::f64::consts::PI);
    let mut acc = CMatrix::zeros(d, d);
    for (k, g) in line.samples.iter().enumerate() {
        let e = line.e_min + line.step * k as f64;
        let g0 = basis.free_resolvent(c64(e, line.eps))?;
        let diff = g.sub(&g0);
        let a = diff.sub(&diff.adjoint()).scale(pref);
        let w = if k == 0 || k == n - 1 {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let phase = c64(0.0, -e * t).exp();
        acc = acc.add(&a.scale(phase * (w * line.step / 3.0)));
    }
    let damping = (line.eps * t).exp();
    Ok(basis.free_evolution(t).add(&acc.scale(c64(damping, 0.0))))
}

/// Survival amplitude <n| U(t) |n> across a time list, via the scalar
/// diagonal of the same line reconstruction. Avoids storing the full line
/// for large bases.
pub fn survival_series(
    sol: &TSolution,
    n: usize,
    e_min: f64,
    e_max: f64,
    eps: f64,
    step: f64,
    times: &[f64],
) -> Result<Vec<(f64, Complex64)>> {
    let (segments, step) = check_line_window(&sol.basis, e_min, e_max, eps, step)?;
    let e_n = sol.basis.energy(n)?;
    let mut weights = Vec::with_capacity(segments + 1);
    for k in 0..=segments {
        let e = e_min + step * k as f64;
        let z = c64(e, eps);
        let g = sol.green_at(z)?;
        let d0 = 1.0 / (z - e_n);
        // spectral weight of the diagonal difference, -(1/pi) Im D_nn
        let a = -(g[(n, n)] - d0).im / std::f64::consts::PI;
        let w = if k == 0 || k == segments {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        weights.push(a * w * step / 3.0);
    }
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        if !t.is_finite() || t < 0.0 {
            return Err(GdeError::InvalidModel(format!(
                "survival times must be nonnegative, got {t}"
            )));
        }
        if t > 0.0 && step > LINE_DENSITY_FRACTION / t {
            return Err(GdeError::WindowTooNarrow(format!(
                "step {step} too coarse for t = {t}"
            )));
        }
        let mut acc = c64(0.0, 0.0);
        for (k, &w) in weights.iter().enumerate() {
            let e = e_min + step * k as f64;
            acc += w * c64(0.0, -e * t).exp();
        }
        let amp = c64(0.0, -e_n * t).exp() + acc * (eps * t).exp();
        out.push((t, amp));
    }
    Ok(out)
}

/// exp(-i (H0 + H_I) t) for instantaneous models, the reference evolution.
pub fn total_evolution(model: &InteractionModel, basis: &FreeBasis, t: f64) -> Result<CMatrix> {
    let h = model.total_hamiltonian(basis)?;
    Ok(hermitian_evolution(&h, t))
}
