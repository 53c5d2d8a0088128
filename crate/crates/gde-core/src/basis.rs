//! Free Hamiltonian data: a finite ladder of real levels and the diagonal
//! operators built from it. All tolerances downstream are expressed through
//! `scale`, so a basis with span below one still gets absolute floors.

use crate::error::{GdeError, Result};
use crate::linalg::CMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub const MAX_DIMENSION: usize = 512;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FreeBasis {
    energies: Vec<f64>,
}

impl FreeBasis {
    pub fn new(energies: Vec<f64>) -> Result<Self> {
        if energies.len() < 2 {
            return Err(GdeError::InvalidModel(format!(
                "need at least two levels, got {}",
                energies.len()
            )));
        }
        if energies.len() > MAX_DIMENSION {
            return Err(GdeError::InvalidModel(format!(
                "{} levels exceeds the cap of {MAX_DIMENSION}",
                energies.len()
            )));
        }
        if !energies.iter().all(|e| e.is_finite()) {
            return Err(GdeError::InvalidModel("levels must be finite".into()));
        }
        if energies.windows(2).any(|w| w[0] > w[1]) {
            return Err(GdeError::InvalidModel(
                "levels must be sorted nondecreasing".into(),
            ));
        }
        Ok(FreeBasis { energies })
    }

    /// `count` levels starting at `start`, spaced by `spacing`.
    pub fn uniform(count: usize, start: f64, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(GdeError::InvalidModel(format!(
                "spacing must be positive and finite, got {spacing}"
            )));
        }
        Self::new((0..count).map(|k| start + k as f64 * spacing).collect())
    }

    /// Insert an extra level, keeping order. Returns the new basis and the
    /// index the level landed at.
    pub fn with_level(&self, e: f64) -> Result<(Self, usize)> {
        let idx = self.energies.partition_point(|&x| x < e);
        let mut energies = self.energies.clone();
        energies.insert(idx, e);
        Ok((Self::new(energies)?, idx))
    }

    pub fn dimension(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn energy(&self, n: usize) -> Result<f64> {
        self.energies
            .get(n)
            .copied()
            .ok_or(GdeError::UnknownLabel {
                n,
                dim: self.dimension(),
            })
    }

    pub fn span(&self) -> f64 {
        self.energies[self.energies.len() - 1] - self.energies[0]
    }

    /// Reference magnitude for tolerances; never below one.
    pub fn scale(&self) -> f64 {
        self.span().max(1.0)
    }

    pub fn pole_tolerance(&self) -> f64 {
        1e-8 * self.scale()
    }

    pub fn max_abs_energy(&self) -> f64 {
        self.energies.iter().fold(0.0, |m, e| m.max(e.abs()))
    }

    /// Smallest distance from level n to any other level.
    pub fn gap_around(&self, n: usize) -> Result<f64> {
        let en = self.energy(n)?;
        let gap = self
            .energies
            .iter()
            .enumerate()
            .filter(|&(m, _)| m != n)
            .map(|(_, &e)| (e - en).abs())
            .fold(f64::INFINITY, f64::min);
        Ok(gap)
    }

    pub fn min_gap(&self) -> f64 {
        self.energies
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    fn check_pole_distance(&self, z: Complex64) -> Result<()> {
        let tol = self.pole_tolerance();
        let dist = self
            .energies
            .iter()
            .map(|&e| (z - e).norm())
            .fold(f64::INFINITY, f64::min);
        if dist <= tol {
            return Err(GdeError::PoleProximity { z, dist, tol });
        }
        Ok(())
    }

    /// Diagonal entries of G0(z) = (z - H0)^-1.
    pub fn resolvent_entries(&self, z: Complex64) -> Result<Vec<Complex64>> {
        self.check_pole_distance(z)?;
        Ok(self.energies.iter().map(|&e| 1.0 / (z - e)).collect())
    }

    /// Diagonal entries of G0(z)^2.
    pub fn squared_resolvent_entries(&self, z: Complex64) -> Result<Vec<Complex64>> {
        self.check_pole_distance(z)?;
        Ok(self
            .energies
            .iter()
            .map(|&e| {
                let d = z - e;
                1.0 / (d * d)
            })
            .collect())
    }

    /// G0(z) = (z - H0)^-1, diagonal.
    pub fn free_resolvent(&self, z: Complex64) -> Result<CMatrix> {
        Ok(CMatrix::diag(&self.resolvent_entries(z)?))
    }

    /// G0(z)^2, diagonal. Same proximity guard as the resolvent.
    pub fn squared_resolvent(&self, z: Complex64) -> Result<CMatrix> {
        Ok(CMatrix::diag(&self.squared_resolvent_entries(z)?))
    }

    /// |n><n|
    pub fn projector(&self, n: usize) -> Result<CMatrix> {
        if n >= self.dimension() {
            return Err(GdeError::UnknownLabel {
                n,
                dim: self.dimension(),
            });
        }
        let mut p = CMatrix::zeros(self.dimension(), self.dimension());
        p[(n, n)] = Complex64::new(1.0, 0.0);
        Ok(p)
    }

    pub fn h0(&self) -> CMatrix {
        let entries: Vec<Complex64> = self
            .energies
            .iter()
            .map(|&e| Complex64::new(e, 0.0))
            .collect();
        CMatrix::diag(&entries)
    }

    /// exp(-i H0 t), diagonal.
    pub fn free_evolution(&self, t: f64) -> CMatrix {
        let entries: Vec<Complex64> = self
            .energies
            .iter()
            .map(|&e| Complex64::new(0.0, -e * t).exp())
            .collect();
        CMatrix::diag(&entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_rejects_bad_ladders() {
        assert!(FreeBasis::new(vec![1.0]).is_err());
        assert!(FreeBasis::new(vec![0.0, f64::NAN]).is_err());
        assert!(FreeBasis::new(vec![1.0, 0.5]).is_err());
        assert!(FreeBasis::new(vec![0.0; 513]).is_err());
        assert!(FreeBasis::new(vec![0.0, 0.0, 1.0]).is_ok());
    }

    #[test]
    fn resolvent_entries_and_proximity_guard() {
        let basis = FreeBasis::new(vec![0.0, 1.0]).unwrap();
        let z = Complex64::new(0.0, 1.0);
        let g0 = basis.free_resolvent(z).unwrap();
        assert!((g0[(0, 0)] - 1.0 / z).norm() < 1e-15);
        assert!((g0[(1, 1)] - 1.0 / (z - 1.0)).norm() < 1e-15);
        assert_eq!(g0[(0, 1)], Complex64::new(0.0, 0.0));

        let near = Complex64::new(1.0 + 1e-10, 0.0);
        match basis.free_resolvent(near) {
            Err(GdeError::PoleProximity { .. }) => {}
            other => panic!("expected pole proximity, got {other:?}"),
        }
    }

    #[test]
    fn squared_resolvent_is_square_of_resolvent() {
        let basis = FreeBasis::new(vec![-0.5, 0.3, 2.0]).unwrap();
        let z = Complex64::new(0.7, 0.4);
        let g = basis.free_resolvent(z).unwrap();
        let g2 = basis.squared_resolvent(z).unwrap();
        assert!(g.mul(&g).sub(&g2).max_abs() < 1e-15);
    }

    #[test]
    fn projector_is_idempotent() {
        let basis = FreeBasis::new(vec![0.0, 1.0, 2.0]).unwrap();
        let p = basis.projector(1).unwrap();
        assert!(p.mul(&p).sub(&p).max_abs() < 1e-16);
        assert!((p.trace() - 1.0).norm() < 1e-16);
        assert!(matches!(
            basis.projector(3),
            Err(GdeError::UnknownLabel { n: 3, dim: 3 })
        ));
    }

    #[test]
    fn scale_has_unit_floor() {
        let narrow = FreeBasis::new(vec![0.0, 0.01]).unwrap();
        assert_eq!(narrow.scale(), 1.0);
        assert!((narrow.span() - 0.01).abs() < 1e-18);
        let wide = FreeBasis::new(vec![0.0, 5.0]).unwrap();
        assert_eq!(wide.scale(), 5.0);
    }

    #[test]
    fn free_evolution_phases() {
        let basis = FreeBasis::new(vec![0.2, 1.4]).unwrap();
        let u = basis.free_evolution(3.0);
        let expect = Complex64::new(0.0, -0.2 * 3.0).exp();
        assert!((u[(0, 0)] - expect).norm() < 1e-15);
        assert!((u[(0, 0)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn with_level_keeps_order() {
        let band = FreeBasis::uniform(4, 0.0, 1.0).unwrap();
        let (basis, idx) = band.with_level(1.5).unwrap();
        assert_eq!(idx, 2);
        assert_eq!(basis.energies(), &[0.0, 1.0, 1.5, 2.0, 3.0]);
        let gap = basis.gap_around(idx).unwrap();
        assert!((gap - 0.5).abs() < 1e-15);
    }
}
