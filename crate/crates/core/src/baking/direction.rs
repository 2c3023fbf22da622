use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::math::{angles_from_direction, direction_from_angles, Vec3};

/// Direction samples on an `n_elev × n_azim` grid. Row `i` sits at elevation
/// `i·180°/(n_elev − 1)` measured from +y, column `j` at azimuth
/// `j·360°/n_azim` measured from +x toward +z.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DirectionGrid {
    pub n_elev: usize,
    pub n_azim: usize,
}

/// How the renderer reads the direction map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DirectionFetch {
    #[default]
    Nearest,
    Bilinear,
}

impl DirectionGrid {
    pub const SYNTHETIC: DirectionGrid = DirectionGrid { n_elev: 32, n_azim: 32 };
    pub const REAL: DirectionGrid = DirectionGrid { n_elev: 32, n_azim: 64 };

    pub fn new(n_elev: usize, n_azim: usize) -> Result<DirectionGrid> {
        if n_elev < 2 || n_azim < 1 {
            return Err(Error::invalid(format!(
                "direction grid needs at least 2 elevation rows and 1 azimuth column, got {n_elev}x{n_azim}"
            )));
        }
        Ok(DirectionGrid { n_elev, n_azim })
    }

    pub fn sample_count(&self) -> usize {
        self.n_elev * self.n_azim
    }

    fn elev_step(&self) -> f64 {
        PI / (self.n_elev - 1) as f64
    }

    fn azim_step(&self) -> f64 {
        2.0 * PI / self.n_azim as f64
    }

    /// Unit direction of cell `(row, col)`.
    pub fn direction(&self, row: usize, col: usize) -> Vec3 {
        direction_from_angles(row as f64 * self.elev_step(), col as f64 * self.azim_step())
    }

    /// All cell directions, row-major.
    pub fn directions(&self) -> Vec<Vec3> {
        (0..self.n_elev)
            .flat_map(|i| (0..self.n_azim).map(move |j| self.direction(i, j)))
            .collect()
    }

    /// Cells and weights contributing to direction `d`.
    pub fn lookup(&self, d: &Vec3, mode: DirectionFetch) -> [((usize, usize), f64); 4] {
        let (elev, azim) = angles_from_direction(d);
        let fi = (elev / self.elev_step()).clamp(0.0, (self.n_elev - 1) as f64);
        let fj = (azim / self.azim_step()).rem_euclid(self.n_azim as f64);
        match mode {
            DirectionFetch::Nearest => {
                let i = fi.round() as usize;
                let j = (fj.round() as usize) % self.n_azim;
                [((i, j), 1.0), ((i, j), 0.0), ((i, j), 0.0), ((i, j), 0.0)]
            }
            DirectionFetch::Bilinear => {
                let i0 = (fi.floor() as usize).min(self.n_elev - 2);
                let ti = fi - i0 as f64;
                let j0 = (fj.floor() as usize) % self.n_azim;
                let tj = fj - fj.floor();
                let j1 = (j0 + 1) % self.n_azim;
                [
                    ((i0, j0), (1.0 - ti) * (1.0 - tj)),
                    ((i0, j1), (1.0 - ti) * tj),
                    ((i0 + 1, j0), ti * (1.0 - tj)),
                    ((i0 + 1, j1), ti * tj),
                ]
            }
        }
    }
}
