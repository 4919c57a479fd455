use rand::Rng;
use serde::{Deserialize, Serialize};

use super::rng::sample_rng;
use super::StochasticError;
use crate::mesh::DeviceGeometry;

/// One random event: dopant positions (nm) inside the silicon layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DopantSample {
    pub seed: u64,
    pub positions: Vec<[f64; 2]>,
    pub charge_sign: Vec<f64>,
    pub count: usize,
    /// Set when the concentration rounds to zero dopants.
    pub empty: bool,
}

impl DopantSample {
    pub fn empty(seed: u64) -> Self {
        Self { seed, positions: Vec::new(), charge_sign: Vec::new(), count: 0, empty: true }
    }
}

/// `round(C · area · depth)` with the area in nm², the depth in nm and `C`
/// in cm⁻³.
pub fn dopant_count(c_dop: f64, area: f64, depth: f64) -> usize {
    (c_dop * area * depth * 1e-21).round() as usize
}

/// Uniformly distributed dopants of one sign in the silicon box.
pub fn draw_dopants(
    seed: u64,
    geometry: &DeviceGeometry,
    c_dop: f64,
    depth: f64,
    sign: f64,
) -> Result<DopantSample, StochasticError> {
    if !(c_dop > 0.0 && c_dop.is_finite()) {
        return Err(StochasticError::Config(format!("dopant concentration must be positive, got {c_dop}")));
    }
    if !(depth > 0.0 && depth.is_finite()) {
        return Err(StochasticError::Config(format!("effective depth must be positive, got {depth}")));
    }
    geometry.validate().map_err(|e| StochasticError::Config(e.to_string()))?;
    let count = dopant_count(c_dop, geometry.silicon_area(), depth);
    if count == 0 {
        return Ok(DopantSample::empty(seed));
    }
    let (lo, hi) = geometry.silicon_box();
    let mut rng = sample_rng(seed);
    let mut positions = Vec::with_capacity(count);
    while positions.len() < count {
        let x = rng.random_range(lo[0]..hi[0]);
        let y = rng.random_range(lo[1]..hi[1]);
        // Keep positions strictly inside.
        if x > lo[0] && y > lo[1] {
            positions.push([x, y]);
        }
    }
    Ok(DopantSample { seed, positions, charge_sign: vec![sign; count], count, empty: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_sample() {
        let g = DeviceGeometry::default();
        let a = draw_dopants(99, &g, 2e17, 60.0, -1.0).unwrap();
        let b = draw_dopants(99, &g, 2e17, 60.0, -1.0).unwrap();
        assert_eq!(a, b);
        let c = draw_dopants(100, &g, 2e17, 60.0, -1.0).unwrap();
        assert_ne!(a.positions, c.positions);
    }

    #[test]
    fn count_follows_concentration() {
        let g = DeviceGeometry::default();
        // 3000 nm² of silicon: 5e17 cm⁻³ over a 400 nm depth gives 600 atoms.
        assert_eq!(dopant_count(5e17, g.silicon_area(), 400.0), 600);
        let s = draw_dopants(1, &g, 5e17, 400.0, -1.0).unwrap();
        assert_eq!(s.count, 600);
        assert_eq!(s.positions.len(), 600);
        let (lo, hi) = g.silicon_box();
        assert!(s.positions.iter().all(|p| p[0] > lo[0] && p[0] < hi[0] && p[1] > lo[1] && p[1] < hi[1]));
    }

    #[test]
    fn low_concentration_gives_flagged_empty_sample() {
        let g = DeviceGeometry::default();
        let s = draw_dopants(1, &g, 1e12, 60.0, -1.0).unwrap();
        assert!(s.empty && s.count == 0);
        assert!(draw_dopants(1, &g, 0.0, 60.0, -1.0).is_err());
    }
}
