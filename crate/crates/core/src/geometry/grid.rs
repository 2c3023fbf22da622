use crate::error::{Error, Result};
use crate::math::{Aabb, Vec3};
use crate::par;
use crate::scene::RadianceField;

/// Density samples on a `side^3` lattice spanning `bounds` corner to corner.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub side: usize,
    pub bounds: Aabb,
    /// Indexed `(k * side + j) * side + i` for lattice point `(i, j, k)`.
    pub values: Vec<f64>,
}

impl DensityGrid {
    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.side + j) * self.side + i
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.index(i, j, k)]
    }

    /// World position of lattice point `(i, j, k)`.
    pub fn point(&self, i: usize, j: usize, k: usize) -> Vec3 {
        lattice_point(&self.bounds, self.side, i, j, k)
    }

    pub fn cell_size(&self) -> Vec3 {
        self.bounds.extent() / (self.side - 1) as f64
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

// `min + extent * (i / (side - 1))`: the ratio is a single correctly rounded
// division, so lattice points shared between `side` and `2 * side - 1` match
// bit for bit.
fn lattice_point(bounds: &Aabb, side: usize, i: usize, j: usize, k: usize) -> Vec3 {
    let n = (side - 1) as f64;
    let e = bounds.extent();
    Vec3::new(
        bounds.min.x + e.x * (i as f64 / n),
        bounds.min.y + e.y * (j as f64 / n),
        bounds.min.z + e.z * (k as f64 / n),
    )
}

pub fn sample_density_grid(field: &dyn RadianceField, side: usize, bounds: Aabb) -> Result<DensityGrid> {
    if side < 2 {
        return Err(Error::invalid(format!("grid side must be >= 2, got {side}")));
    }
    if bounds.is_empty() || (0..3).any(|a| bounds.extent()[a] <= 0.0) {
        return Err(Error::invalid("grid bounds must have positive extent"));
    }
    let slabs = par::try_map_range(side, |k| {
        let mut out = Vec::with_capacity(side * side);
        for j in 0..side {
            for i in 0..side {
                let p = lattice_point(&bounds, side, i, j, k);
                let v = field.density(&p);
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::NonFinite {
                        what: "density",
                        location: format!("lattice ({i}, {j}, {k}) = {p:?}: {v}"),
                    });
                }
                out.push(v);
            }
        }
        Ok(out)
    })?;
    Ok(DensityGrid {
        side,
        bounds,
        values: slabs.into_iter().flatten().collect(),
    })
}
