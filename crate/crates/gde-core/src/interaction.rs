//! Interaction models: an instantaneous Hermitian coupling, or the same
//! coupling smeared over an exponential memory window of width theta.
//!
//! Conventions: the time kernel carries a factor -i/theta so that its
//! half-line transform times i reproduces the energy-domain boundary
//! operator B(z) = H / (1 - i z theta). theta -> 0 recovers the
//! instantaneous model in every limit we take.

use crate::error::{GdeError, Result};
use crate::linalg::CMatrix;
use crate::basis::{FreeBasis, MAX_DIMENSION};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

const HERMITICITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum InteractionModel {
    Instantaneous { h: CMatrix },
    ExponentialMemory { h: CMatrix, theta: f64 },
}

fn check_coupling(h: &CMatrix) -> Result<()> {
    if !h.is_square() {
        return Err(GdeError::InvalidModel(format!(
            "coupling must be square, got {}x{}",
            h.rows(),
            h.cols()
        )));
    }
    if h.rows() < 2 || h.rows() > MAX_DIMENSION {
        return Err(GdeError::InvalidModel(format!(
            "coupling dimension {} outside [2, {MAX_DIMENSION}]",
            h.rows()
        )));
    }
    if !h.data().iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(GdeError::InvalidModel("coupling entries must be finite".into()));
    }
    let dev = h.sub(&h.adjoint()).max_abs();
    if dev > HERMITICITY_TOL * h.max_abs().max(1.0) {
        return Err(GdeError::InvalidModel(format!(
            "coupling is not Hermitian (deviation {dev:.3e})"
        )));
    }
    Ok(())
}

impl InteractionModel {
    pub fn instantaneous(h: CMatrix) -> Result<Self> {
        check_coupling(&h)?;
        Ok(InteractionModel::Instantaneous { h })
    }

    pub fn exponential(h: CMatrix, theta: f64) -> Result<Self> {
        check_coupling(&h)?;
        if !theta.is_finite() || theta < 0.0 {
            return Err(GdeError::InvalidModel(format!(
                "memory width must be finite and nonnegative, got {theta}"
            )));
        }
        Ok(InteractionModel::ExponentialMemory { h, theta })
    }

    /// Rank-one coupling g|phi><phi| on `dim` levels; `phi` is normalized.
    pub fn rank_one(dim: usize, phi: &[Complex64], g: f64, theta: Option<f64>) -> Result<Self> {
        if phi.len() != dim {
            return Err(GdeError::InvalidModel(format!(
                "state has {} components for dimension {dim}",
                phi.len()
            )));
        }
        let norm = crate::linalg::vnorm(phi);
        if norm == 0.0 || !norm.is_finite() {
            return Err(GdeError::InvalidModel("state must be normalizable".into()));
        }
        let unit: Vec<Complex64> = phi.iter().map(|z| z / norm).collect();
        let h = crate::linalg::outer(&unit, &unit).scale(Complex64::new(g, 0.0));
        match theta {
            Some(t) => Self::exponential(h, t),
            None => Self::instantaneous(h),
        }
    }

    pub fn coupling(&self) -> &CMatrix {
        match self {
            InteractionModel::Instantaneous { h } => h,
            InteractionModel::ExponentialMemory { h, .. } => h,
        }
    }

    pub fn dimension(&self) -> usize {
        self.coupling().rows()
    }

    pub fn is_nonlocal(&self) -> bool {
        matches!(self, InteractionModel::ExponentialMemory { theta, .. } if *theta > 0.0)
    }

    pub fn memory_width(&self) -> f64 {
        match self {
            InteractionModel::Instantaneous { .. } => 0.0,
            InteractionModel::ExponentialMemory { theta, .. } => *theta,
        }
    }

    /// The coupling operator when the model has no memory, else None.
    pub fn instantaneous_equivalent(&self) -> Option<&CMatrix> {
        if self.is_nonlocal() {
            None
        } else {
            Some(self.coupling())
        }
    }

    /// Boundary operator for the energy-domain flow.
    /// Instantaneous: B(z) = H. Exponential memory: B(z) = H / (1 - i z theta).
    pub fn b_of_z(&self, z: Complex64) -> Result<CMatrix> {
        match self {
            InteractionModel::Instantaneous { h } => Ok(h.clone()),
            InteractionModel::ExponentialMemory { h, theta } => {
                let den = Complex64::new(1.0, 0.0) - Complex64::new(0.0, 1.0) * z * *theta;
                if den.norm() < 1e-14 {
                    return Err(GdeError::InvalidModel(format!(
                        "boundary operator pole at z = {z} for memory width {theta}"
                    )));
                }
                Ok(h.scale(1.0 / den))
            }
        }
    }

    /// Memory kernel at separation tau >= 0:
    /// H_s(tau) = (-i/theta) exp(-tau/theta) H.
    pub fn schrodinger_kernel(&self, tau: f64) -> Result<CMatrix> {
        if !(tau >= 0.0) {
            return Err(GdeError::InvalidModel(format!(
                "kernel separation must be nonnegative, got {tau}"
            )));
        }
        match self {
            InteractionModel::Instantaneous { .. } => Err(GdeError::DistributionalKernel),
            InteractionModel::ExponentialMemory { h, theta } => {
                if *theta == 0.0 {
                    return Err(GdeError::DistributionalKernel);
                }
                let factor = Complex64::new(0.0, -1.0 / theta) * (-tau / theta).exp();
                Ok(h.scale(factor))
            }
        }
    }

    /// H0 + H for models without memory.
    pub fn total_hamiltonian(&self, basis: &FreeBasis) -> Result<CMatrix> {
        let h = self.instantaneous_equivalent().ok_or(GdeError::NotInstantaneous)?;
        if h.rows() != basis.dimension() {
            return Err(GdeError::InvalidModel(format!(
                "coupling dimension {} does not match basis dimension {}",
                h.rows(),
                basis.dimension()
            )));
        }
        Ok(basis.h0().add(h))
    }

    /// Decompose the coupling as g|phi><phi|. Errors unless exactly one
    /// eigenvalue is nonnegligible.
    pub fn rank_one_factor(&self) -> Result<(f64, Vec<Complex64>)> {
        let h = self.coupling();
        let (evals, vecs) = h.eigh();
        let top = evals.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
        if top == 0.0 {
            return Err(GdeError::NotRankOne);
        }
        let big: Vec<usize> = (0..evals.len())
            .filter(|&i| evals[i].abs() > 1e-10 * top)
            .collect();
        if big.len() != 1 {
            return Err(GdeError::NotRankOne);
        }
        let idx = big[0];
        let mut phi: Vec<Complex64> = (0..h.rows()).map(|i| vecs[(i, idx)]).collect();
        // fix the overall phase so the factorization is reproducible
        let lead = phi
            .iter()
            .cloned()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap();
        if lead.norm() > 0.0 {
            let phase = lead / lead.norm();
            for x in &mut phi {
                *x /= phase;
            }
        }
        Ok((evals[idx], phi))
    }
}

/// Parse an operator from entry-list CSV: header `row,col,re,im`, one matrix
/// entry per line, unlisted entries zero. Dimension is one past the largest
/// index seen.
pub fn operator_from_csv(text: &str) -> Result<CMatrix> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines.next().ok_or_else(|| GdeError::Parse("empty input".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols != ["row", "col", "re", "im"] {
        return Err(GdeError::Parse(format!("unexpected header `{header}`")));
    }
    let mut entries: Vec<(usize, usize, Complex64)> = Vec::new();
    let mut dim = 0usize;
    for (lineno, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(GdeError::Parse(format!(
                "line {}: expected 4 fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let row: usize = fields[0]
            .parse()
            .map_err(|_| GdeError::Parse(format!("line {}: bad row index", lineno + 2)))?;
        let col: usize = fields[1]
            .parse()
            .map_err(|_| GdeError::Parse(format!("line {}: bad column index", lineno + 2)))?;
        let re: f64 = fields[2]
            .parse()
            .map_err(|_| GdeError::Parse(format!("line {}: bad real part", lineno + 2)))?;
        let im: f64 = fields[3]
            .parse()
            .map_err(|_| GdeError::Parse(format!("line {}: bad imaginary part", lineno + 2)))?;
        if !re.is_finite() || !im.is_finite() {
            return Err(GdeError::Parse(format!("line {}: nonfinite entry", lineno + 2)));
        }
        if row >= MAX_DIMENSION || col >= MAX_DIMENSION {
            return Err(GdeError::Parse(format!(
                "line {}: index beyond the {MAX_DIMENSION}-level cap",
                lineno + 2
            )));
        }
        if entries.iter().any(|&(r, c, _)| r == row && c == col) {
            return Err(GdeError::Parse(format!(
                "line {}: duplicate entry ({row}, {col})",
                lineno + 2
            )));
        }
        dim = dim.max(row + 1).max(col + 1);
        entries.push((row, col, Complex64::new(re, im)));
    }
    if dim < 2 {
        return Err(GdeError::Parse("operator needs at least two levels".into()));
    }
    let mut m = CMatrix::zeros(dim, dim);
    for (r, c, v) in entries {
        m[(r, c)] = v;
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn two_level(g: f64, theta: Option<f64>) -> InteractionModel {
        let phi = [c(1.0, 0.0), c(0.0, 0.0)];
        InteractionModel::rank_one(2, &phi, g, theta).unwrap()
    }

    #[test]
    fn boundary_operator_memory_suppression() {
        let model = two_level(0.05, Some(0.1));
        let b = model.b_of_z(c(0.0, 1.0)).unwrap();
        // at z = i the denominator is 1 + theta
        assert!((b[(0, 0)] - c(0.05 / 1.1, 0.0)).norm() < 1e-15);
        let inst = two_level(0.05, None);
        let b = inst.b_of_z(c(3.0, 7.0)).unwrap();
        assert!((b[(0, 0)] - c(0.05, 0.0)).norm() < 1e-16);
    }

    #[test]
    fn kernel_matches_closed_form() {
        let theta = 0.25;
        let g = -0.4;
        let model = two_level(g, Some(theta));
        let tau = 0.3;
        let k = model.schrodinger_kernel(tau).unwrap();
        let expect = c(0.0, -g / theta) * (-tau / theta).exp();
        assert!((k[(0, 0)] - expect).norm() < 1e-15);
        assert!(k[(1, 1)].norm() < 1e-300);
    }

    #[test]
    fn distributional_cases_refuse_a_grid_kernel() {
        assert!(matches!(
            two_level(0.1, None).schrodinger_kernel(0.5),
            Err(GdeError::DistributionalKernel)
        ));
        assert!(matches!(
            two_level(0.1, Some(0.0)).schrodinger_kernel(0.5),
            Err(GdeError::DistributionalKernel)
        ));
    }

    #[test]
    fn total_hamiltonian_only_without_memory() {
        let basis = FreeBasis::new(vec![0.0, 1.0]).unwrap();
        let inst = two_level(0.05, None);
        let h = inst.total_hamiltonian(&basis).unwrap();
        assert!((h[(0, 0)] - c(0.05, 0.0)).norm() < 1e-16);
        assert!((h[(1, 1)] - c(1.0, 0.0)).norm() < 1e-16);
        assert!(matches!(
            two_level(0.05, Some(0.1)).total_hamiltonian(&basis),
            Err(GdeError::NotInstantaneous)
        ));
        // zero-width memory degenerates to the instantaneous coupling
        let degenerate = two_level(0.05, Some(0.0));
        assert!(degenerate.total_hamiltonian(&basis).is_ok());
    }

    #[test]
    fn rank_one_factor_roundtrip() {
        let s5 = 5.0_f64.sqrt();
        let phi = [c(1.0 / s5, 0.0), c(0.0, 2.0 / s5)];
        let model = InteractionModel::rank_one(2, &phi, -0.3, None).unwrap();
        let (g, v) = model.rank_one_factor().unwrap();
        assert!((g + 0.3).abs() < 1e-13);
        let rebuilt = crate::linalg::outer(&v, &v).scale(c(g, 0.0));
        assert!(rebuilt.sub(model.coupling()).max_abs() < 1e-13);

        let full = CMatrix::diag(&[c(1.0, 0.0), c(2.0, 0.0)]);
        let m = InteractionModel::instantaneous(full).unwrap();
        assert!(matches!(m.rank_one_factor(), Err(GdeError::NotRankOne)));
    }

    #[test]
    fn non_hermitian_coupling_rejected() {
        let mut h = CMatrix::zeros(2, 2);
        h[(0, 1)] = c(1.0, 0.0);
        assert!(InteractionModel::instantaneous(h).is_err());
    }

    #[test]
    fn csv_operator_parses_and_validates() {
        let text = "row,col,re,im\n0,0,0.05,0\n0,1,0.02,0.01\n1,0,0.02,-0.01\n";
        let m = operator_from_csv(text).unwrap();
        assert_eq!(m.rows(), 2);
        assert!((m[(0, 1)] - c(0.02, 0.01)).norm() < 1e-16);
        assert_eq!(m[(1, 1)], c(0.0, 0.0));

        assert!(operator_from_csv("").is_err());
        assert!(operator_from_csv("a,b,c\n").is_err());
        assert!(operator_from_csv("row,col,re,im\n0,0,1,0\n0,0,2,0\n").is_err());
        assert!(operator_from_csv("row,col,re,im\n0,0,xyz,0\n").is_err());
        assert!(operator_from_csv("row,col,re,im\n0,0,1,0\n").is_err());
    }
}
