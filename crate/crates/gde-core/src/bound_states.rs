//! Channel functions, pole location, and bound-state structure.
//!
//! Every diagonal of the Green operator defines a dressing function
//! C_m(z) = z - E_m - 1/G_mm(z), and the off-diagonal remainder
//! M = G_tilde0^-1 (G - G_tilde0) G_tilde0^-1 with G_tilde0 = diag(1/(z - E_m - C_m))
//! carries the inter-channel coupling. The pair (C, M) satisfies a closed
//! flow inherited from G' = -G^2, which gives two independent routes to the
//! same functions: algebraic extraction from a T solution, and direct
//! integration of the channel flow from the same boundary.
//!
//! Poles of G are zeros of 1/G_nn. Newton in that variable has the exact
//! step -G_nn/[G^2]_nn, and the residue at a simple pole factorizes as
//! |psi'><psi| with <psi|psi'> = 1, which fixes the normalization
//! C0 = (1 - C_n')^{-1/2}.
//!
//! Near a pole every channel dressing resonates at once (each diagonal of G
//! carries the pole), so ratios like G_mn/G_nn are the analytic objects, not
//! the factors. State construction and derivative evaluation sample those
//! ratios symmetrically off the pole and average; the odd term cancels and
//! the continuation system is never solved at its singular point.

use crate::basis::FreeBasis;
use crate::energy::{continue_t, green_operator, TSolution, ZContour, ContourDirection};
use crate::error::{GdeError, Result};
use crate::interaction::InteractionModel;
use crate::linalg::{outer, vnorm, CMatrix};
use crate::ode::{integrate_path, OdeSettings};
use num_complex::Complex64;

pub const MAX_NEWTON_ITERATIONS: usize = 100;

/// Offset used when sampling ratios around a pole, in units of the basis
/// scale. Symmetric averaging leaves an O(offset^2) bias.
const POLE_SAMPLING_OFFSET: f64 = 1e-5;

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelProvenance {
    /// Extracted algebraically from a T solution.
    ExtractedFromT,
    /// Marched with the channel flow itself.
    DirectOde,
}

/// Dressing function of one selected channel plus the coupling matrix M,
/// sampled along a contour, with the boundary pair kept for evaluation at
/// arbitrary points. The flow couples all channels, so M and the anchor
/// carry the full operator content; `n` is only the selection label.
#[derive(Debug, Clone)]
pub struct ChannelFunctions {
    pub n: usize,
    pub z_points: Vec<Complex64>,
    pub c_samples: Vec<Complex64>,
    pub m_samples: Vec<CMatrix>,
    pub provenance: ChannelProvenance,
    anchor_z: Complex64,
    anchor_t: CMatrix,
    basis: FreeBasis,
}

/// Split a Green sample into (C_all, M). Fails when a diagonal entry is too
/// small to divide by; that happens at antiresonances, not at poles.
fn channel_split(g: &CMatrix, basis: &FreeBasis, z: Complex64) -> Result<(Vec<Complex64>, CMatrix)> {
    let d = basis.dimension();
    let floor = 1e-13 * g.max_abs().max(1.0);
    let mut c = Vec::with_capacity(d);
    for m in 0..d {
        let g_mm = g[(m, m)];
        if g_mm.norm() <= floor {
            return Err(GdeError::VanishingDiagonal {
                z,
                magnitude: g_mm.norm(),
            });
        }
        c.push(z - basis.energy(m)? - 1.0 / g_mm);
    }
    let m_mat = CMatrix::from_fn(d, d, |i, j| {
        if i == j {
            c64(0.0, 0.0)
        } else {
            g[(i, j)] / (g[(i, i)] * g[(j, j)])
        }
    });
    Ok((c, m_mat))
}

impl ChannelFunctions {
    /// Channel object carrying only a boundary pair, no contour samples.
    /// Everything evaluated on demand through the exact continuation.
    pub fn from_anchor(
        basis: &FreeBasis,
        n: usize,
        anchor_z: Complex64,
        anchor_t: CMatrix,
    ) -> Result<Self> {
        if n >= basis.dimension() {
            return Err(GdeError::UnknownLabel {
                n,
                dim: basis.dimension(),
            });
        }
        if !anchor_t.is_square() || anchor_t.rows() != basis.dimension() {
            return Err(GdeError::InvalidModel(format!(
                "anchor operator is {}x{}, basis dimension is {}",
                anchor_t.rows(),
                anchor_t.cols(),
                basis.dimension()
            )));
        }
        Ok(ChannelFunctions {
            n,
            z_points: Vec::new(),
            c_samples: Vec::new(),
            m_samples: Vec::new(),
            provenance: ChannelProvenance::ExtractedFromT,
            anchor_z,
            anchor_t,
            basis: basis.clone(),
        })
    }

    pub fn basis(&self) -> &FreeBasis {
        &self.basis
    }

    pub fn anchor(&self) -> (Complex64, &CMatrix) {
        (self.anchor_z, &self.anchor_t)
    }

    /// Green operator at z, continued from the boundary pair.
    pub fn green_at(&self, z: Complex64) -> Result<CMatrix> {
        let t = continue_t(&self.basis, self.anchor_z, &self.anchor_t, z)?;
        green_operator(&t, &self.basis, z)
    }

    pub fn c_all(&self, z: Complex64) -> Result<Vec<Complex64>> {
        let g = self.green_at(z)?;
        Ok(channel_split(&g, &self.basis, z)?.0)
    }

    pub fn c_at(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.c_all(z)?[self.n])
    }

    pub fn m_at(&self, z: Complex64) -> Result<CMatrix> {
        let g = self.green_at(z)?;
        Ok(channel_split(&g, &self.basis, z)?.1)
    }

    /// C_n'(z) = 1 - [G^2]_nn / G_nn^2, exact under the flow.
    pub fn c_prime_exact(&self, z: Complex64) -> Result<Complex64> {
        let g = self.green_at(z)?;
        let n = self.n;
        let g_nn = g[(n, n)];
        if g_nn.norm() <= 1e-13 * g.max_abs().max(1.0) {
            return Err(GdeError::VanishingDiagonal {
                z,
                magnitude: g_nn.norm(),
            });
        }
        let d = self.basis.dimension();
        let mut g2_nn = c64(0.0, 0.0);
        for k in 0..d {
            g2_nn += g[(n, k)] * g[(k, n)];
        }
        Ok(1.0 - g2_nn / (g_nn * g_nn))
    }
}

/// Channel functions read off a T solution at its own contour samples.
pub fn extract_channel(sol: &TSolution, n: usize) -> Result<ChannelFunctions> {
    if n >= sol.dimension() {
        return Err(GdeError::UnknownLabel {
            n,
            dim: sol.dimension(),
        });
    }
    let basis = sol.basis().clone();
    let mut c_samples = Vec::with_capacity(sol.samples.len());
    let mut m_samples = Vec::with_capacity(sol.samples.len());
    for (z, t) in sol.contour.sample_points.iter().zip(&sol.samples) {
        let g = green_operator(t, &basis, *z)?;
        let (c, m) = channel_split(&g, &basis, *z)?;
        c_samples.push(c[n]);
        m_samples.push(m);
    }
    Ok(ChannelFunctions {
        n,
        z_points: sol.contour.sample_points.clone(),
        c_samples,
        m_samples,
        provenance: ChannelProvenance::ExtractedFromT,
        anchor_z: sol.contour.sample_points[0],
        anchor_t: sol.samples[0].clone(),
        basis,
    })
}

/// March the channel flow itself along the contour:
///
///   dC_m/dz = -[M Gt^2 M]_mm,
///   dM/dz   = -offdiag(M Gt^2 M) - W M - M W,   W = diag(C_m' / (z - E_m - C_m)),
///
/// seeded by splitting the boundary Green operator built from T = B at the
/// outer point. The seed is bitwise the same object the extraction route
/// starts from, so comparing the two routes measures integration error and
/// nothing else.
pub fn solve_channel_ode(
    model: &InteractionModel,
    basis: &FreeBasis,
    contour: &ZContour,
    n: usize,
    settings: &OdeSettings,
) -> Result<ChannelFunctions> {
    contour.validate(basis)?;
    if contour.direction != ContourDirection::Inward {
        return Err(GdeError::InvalidModel(
            "the channel flow is seeded at the outer end; use an inward contour".into(),
        ));
    }
    let d = basis.dimension();
    if model.dimension() != d {
        return Err(GdeError::InvalidModel(format!(
            "interaction dimension {} vs basis dimension {}",
            model.dimension(),
            d
        )));
    }
    if n >= d {
        return Err(GdeError::UnknownLabel { n, dim: d });
    }
    let z0 = contour.sample_points[0];
    let b0 = model.b_of_z(z0)?;
    let g0 = basis.resolvent_entries(z0)?;
    let g0_norm = g0.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let product = b0.frobenius() * g0_norm;
    if product >= crate::energy::BOUNDARY_PRODUCT_LIMIT {
        return Err(GdeError::BoundaryRegimeViolation {
            z: z0,
            product,
            limit: crate::energy::BOUNDARY_PRODUCT_LIMIT,
        });
    }
    let g_boundary = green_operator(&b0, basis, z0)?;
    let (c_seed, m_seed) = channel_split(&g_boundary, basis, z0)?;

    // state layout: [C_0 .. C_{d-1}, M row-major]
    let mut y0 = Vec::with_capacity(d + d * d);
    y0.extend_from_slice(&c_seed);
    y0.extend_from_slice(m_seed.data());

    let energies: Vec<f64> = basis.energies().to_vec();
    let mut rhs = |z: Complex64, y: &[Complex64]| -> Result<Vec<Complex64>> {
        let c = &y[..d];
        let m = &y[d..];
        let dt: Vec<Complex64> = (0..d).map(|k| 1.0 / (z - energies[k] - c[k])).collect();
        let dt2: Vec<Complex64> = dt.iter().map(|x| x * x).collect();
        // p = M diag(dt^2) M
        let mut p = vec![c64(0.0, 0.0); d * d];
        for i in 0..d {
            for k in 0..d {
                let factor = m[i * d + k] * dt2[k];
                if factor.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..d {
                    p[i * d + j] += factor * m[k * d + j];
                }
            }
        }
        let w: Vec<Complex64> = (0..d).map(|k| -p[k * d + k] * dt[k]).collect();
        let mut dy = vec![c64(0.0, 0.0); d + d * d];
        for k in 0..d {
            dy[k] = -p[k * d + k];
        }
        for i in 0..d {
            for j in 0..d {
                if i == j {
                    continue;
                }
                dy[d + i * d + j] = -p[i * d + j] - (w[i] + w[j]) * m[i * d + j];
            }
        }
        Ok(dy)
    };
    let path = integrate_path(&mut rhs, &contour.sample_points, y0, settings)?;

    let mut c_samples = Vec::with_capacity(path.states.len());
    let mut m_samples = Vec::with_capacity(path.states.len());
    for state in &path.states {
        c_samples.push(state[n]);
        m_samples.push(CMatrix::from_fn(d, d, |i, j| state[d + i * d + j]));
    }
    Ok(ChannelFunctions {
        n,
        z_points: contour.sample_points.clone(),
        c_samples,
        m_samples,
        provenance: ChannelProvenance::DirectOde,
        anchor_z: z0,
        anchor_t: b0,
        basis: basis.clone(),
    })
}

fn newton_run(
    ch: &ChannelFunctions,
    start: Complex64,
    step_cap: f64,
) -> Result<(Complex64, usize)> {
    let n = ch.n;
    let d = ch.basis.dimension();
    let mut z = start;
    let mut last_step = f64::NAN;
    for it in 1..=MAX_NEWTON_ITERATIONS {
        let g = match ch.green_at(z) {
            Ok(g) => g,
            // the continuation system is singular exactly at poles of T, so
            // a singular hit mid-iteration means the step landed on the
            // root; for nearly linear 1/G_nn that happens in one jump. The
            // caller's trust window decides whether it is the right root.
            Err(GdeError::SingularSolve(_)) if last_step.is_finite() => {
                return Ok((z, it));
            }
            Err(other) => return Err(other),
        };
        let g_nn = g[(n, n)];
        let mut g2_nn = c64(0.0, 0.0);
        for k in 0..d {
            g2_nn += g[(n, k)] * g[(k, n)];
        }
        // Newton on f = 1/G_nn: f' = [G^2]_nn / G_nn^2, so the step is
        // -f/f' = -G_nn/[G^2]_nn.
        let mut delta = -g_nn / g2_nn;
        if !(delta.re.is_finite() && delta.im.is_finite()) {
            return Err(GdeError::NoConvergence {
                iterations: it,
                last_step,
            });
        }
        if delta.norm() > step_cap {
            delta *= step_cap / delta.norm();
        }
        z += delta;
        last_step = delta.norm();
        if last_step <= 1e-15 * z.norm().max(1.0) {
            return Ok((z, it));
        }
    }
    Err(GdeError::NoConvergence {
        iterations: MAX_NEWTON_ITERATIONS,
        last_step,
    })
}

/// Locate the dressed pole that descends from level n. Returns the energy
/// and the Newton iteration count.
///
/// Trust window: the root must stay within half the local level gap of the
/// bare energy, and a probe run from the other side of the level must not
/// find a second in-window root.
pub fn find_pole(ch: &ChannelFunctions) -> Result<(Complex64, usize)> {
    let e0 = ch.basis.energy(ch.n)?;
    let gap = ch.basis.gap_around(ch.n)?;
    let span = ch.basis.span();
    let step_cap = 0.3 * gap;
    let lift = 1e-3 * span;
    let (root, iterations) = newton_run(ch, c64(e0 + 0.12 * gap, lift), step_cap)?;
    if (root - e0).norm() > 0.5 * gap {
        return Err(GdeError::NoConvergence {
            iterations,
            last_step: (root - e0).norm(),
        });
    }
    // probe from below; failures of the probe mean no second root was seen
    if let Ok((second, _)) = newton_run(ch, c64(e0 - 0.12 * gap, lift), step_cap) {
        if (second - e0).norm() <= 0.5 * gap
            && (second - root).norm() > 1e-10 * ch.basis.scale()
        {
            return Err(GdeError::MultipleRoots {
                first: root,
                second,
            });
        }
    }
    Ok((root, iterations))
}

/// C0 = (1 - C_n')^{-1/2} at the pole, with the exact flow derivative
/// gated by two finite-difference resolutions.
pub fn normalization_c0(ch: &ChannelFunctions, e_n: Complex64) -> Result<Complex64> {
    let h = POLE_SAMPLING_OFFSET * ch.basis.scale();
    let cp = (ch.c_prime_exact(e_n + h)? + ch.c_prime_exact(e_n - h)?) * 0.5;
    let fd_full = (ch.c_at(e_n + h)? - ch.c_at(e_n - h)?) / (2.0 * h);
    let fd_half = (ch.c_at(e_n + h / 2.0)? - ch.c_at(e_n - h / 2.0)?) / h;
    let disagreement = (cp - fd_full).norm().max((cp - fd_half).norm());
    let limit = 1e-6 * cp.norm().max(1.0);
    if disagreement > limit {
        return Err(GdeError::DerivativeUnstable {
            disagreement,
            limit,
        });
    }
    let w = 1.0 - cp;
    if w.norm() < 1e-14 {
        return Err(GdeError::InvalidModel(
            "1 - C_n' vanishes at the pole; no normalizable state".into(),
        ));
    }
    Ok(1.0 / w.sqrt())
}

fn ratio_column(ch: &ChannelFunctions, z: Complex64) -> Result<Vec<Complex64>> {
    let g = ch.green_at(z)?;
    let n = ch.n;
    let g_nn = g[(n, n)];
    if g_nn.norm() <= 1e-13 * g.max_abs().max(1.0) {
        return Err(GdeError::VanishingDiagonal {
            z,
            magnitude: g_nn.norm(),
        });
    }
    Ok((0..ch.basis.dimension()).map(|m| g[(m, n)] / g_nn).collect())
}

fn ratio_row(ch: &ChannelFunctions, z: Complex64) -> Result<Vec<Complex64>> {
    let g = ch.green_at(z)?;
    let n = ch.n;
    let g_nn = g[(n, n)];
    if g_nn.norm() <= 1e-13 * g.max_abs().max(1.0) {
        return Err(GdeError::VanishingDiagonal {
            z,
            magnitude: g_nn.norm(),
        });
    }
    Ok((0..ch.basis.dimension()).map(|m| g[(n, m)] / g_nn).collect())
}

/// Right and left states at the pole, scaled so the residue of G is
/// exactly |psi'><psi|:
///
///   psi'_m = C0 * lim G_mn/G_nn at e_n,
///   psi_m  = conj(C0 * lim G_nm/G_nn at conj(e_n)).
///
/// Returns (psi, psi_prime).
pub fn build_states(
    ch: &ChannelFunctions,
    e_n: Complex64,
    c0: Complex64,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let d = ch.basis.dimension();
    let h = POLE_SAMPLING_OFFSET * ch.basis.scale();
    let col_hi = ratio_column(ch, e_n + h)?;
    let col_lo = ratio_column(ch, e_n - h)?;
    let e_bar = e_n.conj();
    let row_hi = ratio_row(ch, e_bar + h)?;
    let row_lo = ratio_row(ch, e_bar - h)?;
    let mut psi_prime = Vec::with_capacity(d);
    let mut psi = Vec::with_capacity(d);
    for m in 0..d {
        psi_prime.push(c0 * 0.5 * (col_hi[m] + col_lo[m]));
        psi.push((c0 * 0.5 * (row_hi[m] + row_lo[m])).conj());
    }
    Ok((psi, psi_prime))
}

/// Frobenius distance between the extrapolated residue of G at e_n and the
/// dyad |psi'><psi|. `green_near` holds (z_k, G(z_k)) pairs off the pole;
/// (z_k - e_n) G_k is a polynomial in the offset up to the next singularity,
/// so Lagrange extrapolation of the offsets to zero recovers the residue.
pub fn residue_diagnostic(
    green_near: &[(Complex64, CMatrix)],
    e_n: Complex64,
    psi: &[Complex64],
    psi_prime: &[Complex64],
) -> f64 {
    assert!(!green_near.is_empty(), "need at least one sample off the pole");
    let deltas: Vec<Complex64> = green_near.iter().map(|(z, _)| z - e_n).collect();
    let d = green_near[0].1.rows();
    let mut limit = CMatrix::zeros(d, d);
    for (k, (_, g)) in green_near.iter().enumerate() {
        let mut weight = c64(1.0, 0.0);
        for (j, dj) in deltas.iter().enumerate() {
            if j != k {
                weight *= -dj / (deltas[k] - dj);
            }
        }
        limit.add_scaled_assign(&g.scale(deltas[k]), weight);
    }
    limit.sub(&outer(psi_prime, psi)).frobenius()
}

/// Worst deviation of U(t) psi from pure phase rotation across the samples.
/// Expects full (Schroedinger-picture) evolution operators.
pub fn stationarity_diagnostic(
    samples: &[(f64, CMatrix)],
    energy: Complex64,
    psi: &[Complex64],
) -> f64 {
    let mut worst = 0.0_f64;
    for (t, u) in samples {
        let rotated = u.matvec(psi);
        let phase = (c64(0.0, -*t) * energy).exp();
        let diff: Vec<Complex64> = rotated
            .iter()
            .zip(psi)
            .map(|(a, b)| a - phase * b)
            .collect();
        worst = worst.max(vnorm(&diff));
    }
    worst
}

/// One-step quasistationary estimate E = E0 + C_n(E0 + i eps) for a level
/// embedded in a dense comb. Deliberately not iterated: the fixed point
/// drifts into the discrete poles and the width collapses. eps should sit
/// at the golden-rule window, about 1.5 level spacings.
pub fn quasistationary_estimate(ch: &ChannelFunctions, eps: f64) -> Result<Complex64> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(GdeError::InvalidModel(format!(
            "quasistationary offset must be positive, got {eps}"
        )));
    }
    let e0 = ch.basis.energy(ch.n)?;
    Ok(e0 + ch.c_at(c64(e0, eps))?)
}

#[derive(Debug, Clone)]
pub struct PoleResult {
    pub n: usize,
    pub energy: Complex64,
    /// Gamma = -2 Im(energy), clamped at zero.
    pub width: f64,
    pub c0: Complex64,
    pub psi: Vec<Complex64>,
    pub psi_prime: Vec<Complex64>,
    pub residue_defect: f64,
    pub newton_iterations: usize,
}

fn flat(v: &[Complex64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * v.len());
    for x in v {
        out.push(x.re);
        out.push(x.im);
    }
    out
}

fn unflat(value: &serde_json::Value, field: &str) -> Result<Vec<Complex64>> {
    let arr = value
        .get(field)
        .and_then(|v| v.as_array())
        .ok_or_else(|| GdeError::Parse(format!("PoleResult: missing array '{field}'")))?;
    if arr.len() % 2 != 0 {
        return Err(GdeError::Parse(format!(
            "PoleResult: '{field}' holds {} numbers, expected an even count of re,im pairs",
            arr.len()
        )));
    }
    let mut nums = Vec::with_capacity(arr.len());
    for v in arr {
        let x = v
            .as_f64()
            .ok_or_else(|| GdeError::Parse(format!("PoleResult: non-numeric entry in '{field}'")))?;
        if !x.is_finite() {
            return Err(GdeError::Parse(format!(
                "PoleResult: non-finite entry in '{field}'"
            )));
        }
        nums.push(x);
    }
    Ok(nums.chunks(2).map(|p| c64(p[0], p[1])).collect())
}

fn scalar(value: &serde_json::Value, field: &str) -> Result<f64> {
    let x = value
        .get(field)
        .and_then(|v| v.as_f64())
        .ok_or_else(|| GdeError::Parse(format!("PoleResult: missing number '{field}'")))?;
    if !x.is_finite() {
        return Err(GdeError::Parse(format!("PoleResult: non-finite '{field}'")));
    }
    Ok(x)
}

impl PoleResult {
    /// Complex data serializes as flat [re, im, re, im, ...] arrays.
    pub fn to_json(&self) -> String {
        let value = serde_json::json!({
            "n": self.n,
            "energy": [self.energy.re, self.energy.im],
            "width": self.width,
            "c0": [self.c0.re, self.c0.im],
            "psi": flat(&self.psi),
            "psi_prime": flat(&self.psi_prime),
            "residue_defect": self.residue_defect,
            "newton_iterations": self.newton_iterations,
        });
        serde_json::to_string_pretty(&value).expect("PoleResult serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<PoleResult> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| GdeError::Parse(format!("PoleResult: {e}")))?;
        let n = value
            .get("n")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| GdeError::Parse("PoleResult: missing integer 'n'".into()))?
            as usize;
        let energy_pair = unflat(&value, "energy")?;
        let c0_pair = unflat(&value, "c0")?;
        if energy_pair.len() != 1 || c0_pair.len() != 1 {
            return Err(GdeError::Parse(
                "PoleResult: 'energy' and 'c0' must each hold one re,im pair".into(),
            ));
        }
        let psi = unflat(&value, "psi")?;
        let psi_prime = unflat(&value, "psi_prime")?;
        if psi.len() != psi_prime.len() || psi.is_empty() {
            return Err(GdeError::Parse(format!(
                "PoleResult: psi holds {} entries, psi_prime {}",
                psi.len(),
                psi_prime.len()
            )));
        }
        let newton_iterations = value
            .get("newton_iterations")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| GdeError::Parse("PoleResult: missing 'newton_iterations'".into()))?
            as usize;
        Ok(PoleResult {
            n,
            energy: energy_pair[0],
            width: scalar(&value, "width")?,
            c0: c0_pair[0],
            psi,
            psi_prime,
            residue_defect: scalar(&value, "residue_defect")?,
            newton_iterations,
        })
    }
}

/// Full pipeline for one level: pole, normalization, states, residue check.
pub fn analyze_level(ch: &ChannelFunctions) -> Result<PoleResult> {
    let (energy, newton_iterations) = find_pole(ch)?;
    let c0 = normalization_c0(ch, energy)?;
    let (psi, psi_prime) = build_states(ch, energy, c0)?;
    let span = ch.basis.span();
    let mut green_near = Vec::with_capacity(3);
    for &frac in &[1e-2, 1e-3, 1e-4] {
        let z = energy + c64(0.0, frac * span);
        green_near.push((z, ch.green_at(z)?));
    }
    let residue_defect = residue_diagnostic(&green_near, energy, &psi, &psi_prime);
    Ok(PoleResult {
        n: ch.n,
        energy,
        width: (-2.0 * energy.im).max(0.0),
        c0,
        psi,
        psi_prime,
        residue_defect,
        newton_iterations,
    })
}
