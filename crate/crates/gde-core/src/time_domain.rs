//! Time-domain kernel march and evolution assembly.
//!
//! The memory kernel is split as S(tau) = w delta(tau) + a(tau) in the
//! Schroedinger picture. The singular weight w is fixed once by dressing the
//! boundary operator at a far anchor point on the imaginary axis,
//! w = -i herm[(I + B G0)^-1 B] at z = i * anchor_factor * scale, and the
//! smooth part a is marched out of the quadratic relation
//!
//!   tau a(tau) = w E(tau) w + w q(tau) + (a * E)(tau) w + (a * q)(tau),
//!   q(tau) = integral_0^tau E(u) a(tau - u) du,
//!   E(u) = u exp(-i H0 u),
//!
//! with trapezoid convolutions, seeded by a(0) = w^2. Every second step the
//! same relation is rebuilt with Simpson weights on the outer convolution;
//! the two quadratures disagree at O(step^2) and their defect is the march's
//! own health signal.
//!
//! Anchoring at a finite radius suppresses the effective coupling of a
//! memory model by 1/(1 + theta * anchor): the kernel the march propagates
//! is internally consistent (unitary order, composition, Laplace identity)
//! but approaches the instantaneous limit only as theta -> 0. Comparisons
//! against instantaneous evolution must treat the anchor as part of the
//! model, not as a free knob.

use crate::basis::FreeBasis;
use crate::error::{GdeError, Result};
use crate::interaction::InteractionModel;
use crate::linalg::CMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Anchor radius in units of the basis scale.
pub const DEFAULT_ANCHOR_FACTOR: f64 = 160.0;

/// Relation defect above this aborts the march.
pub const RELATION_DEFECT_LIMIT: f64 = 1e-3;

/// Minimum Im(z) * t_max for the half-line Laplace transform.
pub const LAPLACE_DAMPING_FLOOR: f64 = 20.0;

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub t_max: f64,
    pub step: f64,
    segments: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t_max: f64, step: f64) -> Result<Self> {
        if !(t0.is_finite() && t_max.is_finite() && step.is_finite()) || step <= 0.0 || t_max <= t0
        {
            return Err(GdeError::InvalidModel(format!(
                "bad time grid [{t0}, {t_max}] step {step}"
            )));
        }
        let raw = (t_max - t0) / step;
        let rounded = raw.round();
        if (raw - rounded).abs() > 1e-12 * rounded.max(1.0) || rounded < 1.0 {
            return Err(GdeError::InvalidModel(format!(
                "step {step} does not divide the window [{t0}, {t_max}] into whole segments"
            )));
        }
        Ok(TimeGrid {
            t0,
            t_max,
            step,
            segments: rounded as usize,
        })
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    pub fn nodes(&self) -> usize {
        self.segments + 1
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + self.step * k as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.nodes()).map(|k| self.time(k)).collect()
    }
}

/// Memory kernel on a grid. Storage is the time-translation-invariant
/// Schroedinger-picture generator: the delta weight plus one smooth matrix
/// per separation. Interaction-picture entries are reconstructed on demand.
#[derive(Debug, Clone)]
pub struct TimeKernel {
    pub grid: TimeGrid,
    /// Delta-brick weight, Schroedinger picture.
    pub w: CMatrix,
    /// Smooth part at separations 0, step, 2 step, ...
    pub a: Vec<CMatrix>,
    /// Worst Simpson-vs-trapezoid relation defect seen by the march.
    pub relation_defect: f64,
    basis: FreeBasis,
}

impl TimeKernel {
    pub fn basis(&self) -> &FreeBasis {
        &self.basis
    }

    pub fn dimension(&self) -> usize {
        self.basis.dimension()
    }

    /// Largest separation index currently held.
    pub fn max_separation(&self) -> usize {
        self.a.len() - 1
    }

    /// Smooth part at separation index s (Schroedinger picture); manifestly
    /// translation invariant.
    pub fn schrodinger_value(&self, s: usize) -> Result<&CMatrix> {
        self.a.get(s).ok_or_else(|| {
            GdeError::InvalidModel(format!(
                "kernel holds separations up to {}, asked for {s}",
                self.a.len() - 1
            ))
        })
    }

    /// Interaction-picture smooth entry S(t_j, t_i) for j >= i.
    pub fn value(&self, j: usize, i: usize) -> Result<CMatrix> {
        if j < i {
            return Err(GdeError::InvalidModel(format!(
                "kernel entries need j >= i, got ({j}, {i})"
            )));
        }
        let base = self.schrodinger_value(j - i)?;
        let tj = self.grid.time(j);
        let ti = self.grid.time(i);
        let left: Vec<Complex64> = self
            .basis
            .energies()
            .iter()
            .map(|&e| c64(0.0, e * tj).exp())
            .collect();
        let right: Vec<Complex64> = self
            .basis
            .energies()
            .iter()
            .map(|&e| c64(0.0, -e * ti).exp())
            .collect();
        Ok(base.scale_rows(&left).scale_cols(&right))
    }

    /// Interaction-picture delta weight at node i.
    pub fn singular_at(&self, i: usize) -> CMatrix {
        let ti = self.grid.time(i);
        let left: Vec<Complex64> = self
            .basis
            .energies()
            .iter()
            .map(|&e| c64(0.0, e * ti).exp())
            .collect();
        let right: Vec<Complex64> = self
            .basis
            .energies()
            .iter()
            .map(|&e| c64(0.0, -e * ti).exp())
            .collect();
        self.w.scale_rows(&left).scale_cols(&right)
    }
}

/// Seed the kernel band: delta weight from the dressed far anchor, smooth
/// part at separation zero from the quadratic relation's tau -> 0 limit.
pub fn seed_kernel(model: &InteractionModel, basis: &FreeBasis, grid: &TimeGrid) -> Result<TimeKernel> {
    seed_kernel_anchored(model, basis, grid, DEFAULT_ANCHOR_FACTOR)
}

pub fn seed_kernel_anchored(
    model: &InteractionModel,
    basis: &FreeBasis,
    grid: &TimeGrid,
    anchor_factor: f64,
) -> Result<TimeKernel> {
    if !model.is_nonlocal() {
        return Err(GdeError::DistributionalKernel);
    }
    if model.dimension() != basis.dimension() {
        return Err(GdeError::InvalidModel(format!(
            "interaction dimension {} vs basis dimension {}",
            model.dimension(),
            basis.dimension()
        )));
    }
    if grid.t0 != 0.0 {
        return Err(GdeError::InvalidModel(
            "kernel marches start at t0 = 0; compose with free phases for shifted windows".into(),
        ));
    }
    if !(anchor_factor.is_finite() && anchor_factor > 1.0) {
        return Err(GdeError::InvalidModel(format!(
            "anchor factor must exceed 1, got {anchor_factor}"
        )));
    }
    let z_b = c64(0.0, anchor_factor * basis.scale());
    let b = model.b_of_z(z_b)?;
    let g0 = basis.resolvent_entries(z_b)?;
    let g0_norm = g0.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let product = b.frobenius() * g0_norm;
    if product >= crate::energy::BOUNDARY_PRODUCT_LIMIT {
        return Err(GdeError::BoundaryRegimeViolation {
            z: z_b,
            product,
            limit: crate::energy::BOUNDARY_PRODUCT_LIMIT,
        });
    }
    let sys = CMatrix::identity(b.rows()).add(&b.scale_cols(&g0));
    let dressed = sys.lu_solve(&b)?;
    let w = dressed.herm_part().scale(c64(0.0, -1.0));
    let a0 = w.mul(&w);
    Ok(TimeKernel {
        grid: *grid,
        w,
        a: vec![a0],
        relation_defect: 0.0,
        basis: basis.clone(),
    })
}

/// March the smooth part across the whole grid.
pub fn propagate_kernel(kernel: &TimeKernel) -> Result<TimeKernel> {
    let d = kernel.dimension();
    let n_seg = kernel.grid.segments();
    let delta = kernel.grid.step;
    let w = &kernel.w;
    let energies = kernel.basis.energies().to_vec();

    // E(k step) diagonal entries, weight k step times the free phase
    let e_diag: Vec<Vec<Complex64>> = (0..=n_seg)
        .map(|k| {
            let tau = delta * k as f64;
            energies
                .iter()
                .map(|&e| c64(0.0, -e * tau).exp() * tau)
                .collect()
        })
        .collect();

    let mut a: Vec<CMatrix> = vec![kernel.a[0].clone()];
    let mut q: Vec<CMatrix> = vec![CMatrix::zeros(d, d)];
    let mut worst = 0.0_f64;
    let one = c64(1.0, 0.0);
    let half = c64(0.5, 0.0);

    for s in 1..=n_seg {
        let mut q_s = a[0].scale_rows(&e_diag[s]).scale(half);
        for k in 1..s {
            q_s.add_scaled_assign(&a[s - k].scale_rows(&e_diag[k]), one);
        }
        let q_s = q_s.scale(c64(delta, 0.0));

        let mut ae_s = a[0].scale_cols(&e_diag[s]).scale(half);
        for k in 1..s {
            ae_s.add_scaled_assign(&a[k].scale_cols(&e_diag[s - k]), one);
        }
        let ae_s = ae_s.scale(c64(delta, 0.0));

        let mut aq_s = a[0].mul(&q_s).scale(half);
        for k in 1..s {
            aq_s.add_scaled_assign(&a[k].mul(&q[s - k]), one);
        }
        let aq_s = aq_s.scale(c64(delta, 0.0));

        let mut num = w.scale_cols(&e_diag[s]).mul(w);
        num.add_scaled_assign(&w.mul(&q_s), one);
        num.add_scaled_assign(&ae_s.mul(w), one);
        num.add_scaled_assign(&aq_s, one);
        let a_s = num.scale(c64(1.0 / (delta * s as f64), 0.0));

        q.push(q_s);
        a.push(a_s);

        // independent outer quadrature every second step
        if s % 2 == 0 {
            let mut simp = CMatrix::zeros(d, d);
            for k in 0..=s {
                let f_k = a[k].mul(&w.scale_rows(&e_diag[s - k]).add(&q[s - k]));
                let wt = if k == 0 || k == s {
                    1.0
                } else if k % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                simp.add_scaled_assign(&f_k, c64(wt * delta / 3.0, 0.0));
            }
            let mut alt = w.scale_cols(&e_diag[s]).mul(w);
            alt.add_scaled_assign(&w.mul(&q[s]), one);
            alt.add_scaled_assign(&simp, one);
            let lhs = a[s].scale(c64(delta * s as f64, 0.0));
            let defect = alt.sub(&lhs).frobenius() / (1.0 + lhs.frobenius());
            if defect > RELATION_DEFECT_LIMIT {
                return Err(GdeError::QuadratureBreakdown {
                    separation: s,
                    defect,
                    threshold: RELATION_DEFECT_LIMIT,
                });
            }
            worst = worst.max(defect);
        }
    }

    Ok(TimeKernel {
        grid: kernel.grid,
        w: kernel.w.clone(),
        a,
        relation_defect: worst,
        basis: kernel.basis.clone(),
    })
}

#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub u: Vec<CMatrix>,
    pub unitarity_defect: Vec<f64>,
}

impl EvolutionResult {
    pub fn max_defect(&self) -> f64 {
        self.unitarity_defect.iter().copied().fold(0.0, f64::max)
    }
}

/// Interaction-picture U(t_n, 0) by trapezoid in the outer time and a
/// running convolution for the inner one.
pub fn assemble_evolution(kernel: &TimeKernel) -> Result<EvolutionResult> {
    let d = kernel.dimension();
    let n_seg = kernel.grid.segments();
    if kernel.max_separation() < n_seg {
        return Err(GdeError::InvalidModel(format!(
            "kernel holds separations up to {}, grid needs {}",
            kernel.max_separation(),
            n_seg
        )));
    }
    let delta = kernel.grid.step;
    let energies = kernel.basis.energies().to_vec();
    let p_entries: Vec<Complex64> = energies.iter().map(|&e| c64(0.0, -e * delta).exp()).collect();
    let ident = CMatrix::identity(d);
    let one = c64(1.0, 0.0);

    let mut times = Vec::with_capacity(n_seg + 1);
    let mut us = Vec::with_capacity(n_seg + 1);
    let mut defects = Vec::with_capacity(n_seg + 1);

    // cur(t) = e^{i H0 t} (w + Phi(t)) e^{-i H0 t} ... the right factor only
    // touches the w term; Phi already carries its own inner phases.
    let mut phi = CMatrix::zeros(d, d);
    let cur0 = kernel.w.clone();
    let mut acc = cur0.scale(c64(0.5, 0.0));

    times.push(kernel.grid.time(0));
    us.push(ident.clone());
    defects.push(0.0);

    for n in 1..=n_seg {
        let tn = kernel.grid.time(n);
        let mut phi_next = phi.scale_cols(&p_entries);
        phi_next.add_scaled_assign(&kernel.a[n - 1].scale_cols(&p_entries), c64(delta / 2.0, 0.0));
        phi_next.add_scaled_assign(&kernel.a[n], c64(delta / 2.0, 0.0));
        phi = phi_next;

        let left: Vec<Complex64> = energies.iter().map(|&e| c64(0.0, e * tn).exp()).collect();
        let right: Vec<Complex64> = energies.iter().map(|&e| c64(0.0, -e * tn).exp()).collect();
        let mut cur = kernel.w.scale_rows(&left).scale_cols(&right);
        cur.add_scaled_assign(&phi.scale_rows(&left), one);

        let mut u = ident.clone();
        u.add_scaled_assign(&acc, c64(delta, 0.0));
        u.add_scaled_assign(&cur, c64(delta / 2.0, 0.0));
        acc.add_scaled_assign(&cur, one);

        let defect = u.adjoint().mul(&u).sub(&ident).frobenius();
        times.push(tn);
        us.push(u);
        defects.push(defect);
    }

    Ok(EvolutionResult {
        times,
        u: us,
        unitarity_defect: defects,
    })
}

/// Half-line transform of the marched kernel: i (w + Simpson of
/// exp(i z tau) a(tau)). Must reproduce the energy-domain T(z) wherever the
/// damping Im(z) t_max is strong enough to bury the truncated tail.
pub fn laplace_crosscheck(kernel: &TimeKernel, z: Complex64) -> Result<CMatrix> {
    let n_seg = kernel.grid.segments();
    if kernel.max_separation() < n_seg {
        return Err(GdeError::InvalidModel(format!(
            "kernel holds separations up to {}, grid needs {}",
            kernel.max_separation(),
            n_seg
        )));
    }
    let product = z.im * (kernel.grid.t_max - kernel.grid.t0);
    if product < LAPLACE_DAMPING_FLOOR * (1.0 - 1e-12) {
        return Err(GdeError::InsufficientDamping {
            product,
            required: LAPLACE_DAMPING_FLOOR,
        });
    }
    if n_seg % 2 == 1 || n_seg < 2 {
        return Err(GdeError::QuadratureFailure(format!(
            "Simpson transform needs an even segment count, got {n_seg}"
        )));
    }
    let delta = kernel.grid.step;
    let d = kernel.dimension();
    let mut sum = CMatrix::zeros(d, d);
    for k in 0..=n_seg {
        let tau = delta * k as f64;
        let wt = if k == 0 || k == n_seg {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let phase = (c64(0.0, 1.0) * z * tau).exp();
        sum.add_scaled_assign(&kernel.a[k], phase * (wt * delta / 3.0));
    }
    Ok(kernel.w.add(&sum).scale(c64(0.0, 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::continue_t;
    use crate::linalg::hermitian_evolution;

    fn two_level_basis() -> FreeBasis {
        FreeBasis::new(vec![0.0, 1.0]).unwrap()
    }

    fn coupling(g: f64) -> CMatrix {
        let mut h = CMatrix::zeros(2, 2);
        h[(0, 1)] = c64(g, 0.0);
        h[(1, 0)] = c64(g, 0.0);
        h
    }

    fn marched(g: f64, theta: f64, t_max: f64, step: f64) -> TimeKernel {
        let basis = two_level_basis();
        let model = InteractionModel::exponential(coupling(g), theta).unwrap();
        let grid = TimeGrid::new(0.0, t_max, step).unwrap();
        let seed = seed_kernel(&model, &basis, &grid).unwrap();
        propagate_kernel(&seed).unwrap()
    }

    #[test]
    fn grid_requires_whole_segments() {
        assert!(TimeGrid::new(0.0, 1.0, 0.01).is_ok());
        assert!(TimeGrid::new(0.0, 1.0, 0.003).is_err());
        assert!(TimeGrid::new(0.0, -1.0, 0.01).is_err());
        let g = TimeGrid::new(0.0, 2.0, 0.5).unwrap();
        assert_eq!(g.segments(), 4);
        assert_eq!(g.times(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn instantaneous_models_have_no_time_kernel() {
        let basis = two_level_basis();
        let model = InteractionModel::instantaneous(coupling(0.1)).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 0.01).unwrap();
        match seed_kernel(&model, &basis, &grid) {
            Err(GdeError::DistributionalKernel) => {}
            other => panic!("expected DistributionalKernel, got {other:?}"),
        }
    }

    #[test]
    fn zero_coupling_marches_to_identity() {
        let kernel = marched(0.0, 0.1, 1.0, 0.01);
        assert!(kernel.w.max_abs() == 0.0);
        assert!(kernel.a.iter().all(|m| m.max_abs() == 0.0));
        let ev = assemble_evolution(&kernel).unwrap();
        assert!(ev.max_defect() == 0.0);
        for u in &ev.u {
            assert!(u.sub(&CMatrix::identity(2)).max_abs() == 0.0);
        }
    }

    #[test]
    fn kernel_is_translation_invariant_through_the_picture_map() {
        let kernel = marched(0.05, 0.1, 1.0, 0.1);
        // undoing the free phases at shifted node pairs recovers one matrix
        let strip = |j: usize, i: usize| -> CMatrix {
            let v = kernel.value(j, i).unwrap();
            let tj = kernel.grid.time(j);
            let ti = kernel.grid.time(i);
            let left: Vec<Complex64> = kernel
                .basis()
                .energies()
                .iter()
                .map(|&e| c64(0.0, -e * tj).exp())
                .collect();
            let right: Vec<Complex64> = kernel
                .basis()
                .energies()
                .iter()
                .map(|&e| c64(0.0, e * ti).exp())
                .collect();
            v.scale_rows(&left).scale_cols(&right)
        };
        let a = strip(4, 1);
        let b = strip(7, 4);
        assert!(a.sub(&b).max_abs() < 1e-14);
        assert!(kernel.value(1, 4).is_err());
    }

    #[test]
    fn relation_defect_shrinks_at_second_order() {
        let k1 = marched(0.05, 0.1, 1.0, 0.01);
        let k2 = marched(0.05, 0.1, 1.0, 0.005);
        assert!(k1.relation_defect < 1e-11, "defect {:.3e}", k1.relation_defect);
        let ratio = k1.relation_defect / k2.relation_defect;
        assert!(
            (3.0..5.0).contains(&ratio),
            "defect ratio {ratio} (values {:.3e}, {:.3e})",
            k1.relation_defect,
            k2.relation_defect
        );
    }

    #[test]
    fn unitarity_defect_small_and_second_order() {
        let e1 = assemble_evolution(&marched(0.05, 0.1, 1.0, 0.02)).unwrap();
        let e2 = assemble_evolution(&marched(0.05, 0.1, 1.0, 0.01)).unwrap();
        assert!(e1.max_defect() < 1e-4, "defect {:.3e}", e1.max_defect());
        let ratio = e1.max_defect() / e2.max_defect();
        assert!(
            (3.0..5.0).contains(&ratio),
            "unitarity ratio {ratio} (values {:.3e}, {:.3e})",
            e1.max_defect(),
            e2.max_defect()
        );
    }

    #[test]
    fn evolution_composes_through_free_phases() {
        let kernel = marched(0.05, 0.1, 1.0, 0.01);
        let ev = assemble_evolution(&kernel).unwrap();
        let basis = two_level_basis();
        let (i1, i2) = (40, 100);
        let t1 = ev.times[i1];
        // U(t2, t1) = e^{i H0 t1} U(t2 - t1) e^{-i H0 t1}
        let shift = ev.u[i2 - i1].clone();
        let left = basis.free_evolution(-t1);
        let right = basis.free_evolution(t1);
        let two_time = left.mul(&shift).mul(&right);
        let composed = two_time.mul(&ev.u[i1]);
        let defect = composed.sub(&ev.u[i2]).max_abs();
        assert!(defect < 1e-9, "composition defect {defect:.3e}");
    }

    #[test]
    fn memory_width_sweep_approaches_instantaneous_evolution() {
        let basis = two_level_basis();
        let g = 0.05;
        let h_total = {
            let mut h = coupling(g);
            h[(1, 1)] += c64(1.0, 0.0);
            h
        };
        let dev_for = |theta: f64| -> f64 {
            let ev = assemble_evolution(&marched(g, theta, 1.0, 0.01)).unwrap();
            let mut worst = 0.0_f64;
            for (k, &t) in ev.times.iter().enumerate() {
                // interaction picture of the instantaneous evolution
                let target = basis.free_evolution(-t).mul(&hermitian_evolution(&h_total, t));
                worst = worst.max(ev.u[k].sub(&target).max_abs());
            }
            worst
        };
        let d_big = dev_for(0.2);
        let d_mid = dev_for(0.1);
        let d_small = dev_for(0.05);
        assert!(
            d_big > d_mid && d_mid > d_small,
            "memory deviations not monotone: {d_big:.4}, {d_mid:.4}, {d_small:.4}"
        );
        let d_tiny = dev_for(1e-9);
        assert!(d_tiny < 1e-5, "tiny-memory deviation {d_tiny:.3e}");
    }

    #[test]
    fn laplace_transform_matches_energy_continuation() {
        let basis = two_level_basis();
        let g = 0.05;
        let theta = 0.1;
        let kernel = marched(g, theta, 10.0, 0.01);
        let model = InteractionModel::exponential(coupling(g), theta).unwrap();
        let z_b = c64(0.0, DEFAULT_ANCHOR_FACTOR * basis.scale());
        let t_anchor = model.b_of_z(z_b).unwrap();
        let mut worst = 0.0_f64;
        for &z in &[c64(2.0, 2.0), c64(-1.0, 2.5), c64(0.5, 3.0), c64(3.0, 2.2), c64(1.0, 4.0)] {
            let lhs = laplace_crosscheck(&kernel, z).unwrap();
            let rhs = continue_t(&basis, z_b, &t_anchor, z).unwrap();
            let rel = lhs.sub(&rhs).frobenius() / rhs.frobenius();
            worst = worst.max(rel);
        }
        assert!(worst < 1e-3, "worst transform deviation {worst:.3e}");

        match laplace_crosscheck(&kernel, c64(1.0, 1.0)) {
            Err(GdeError::InsufficientDamping { .. }) => {}
            other => panic!("expected InsufficientDamping, got {other:?}"),
        }
    }
}
