//! Exact initial conditions used by the reconstruction experiments. All of
//! them vanish outside the closed unit square.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{QrmError, Result};
use crate::grid::{SpaceTimeGrid, SpatialField};

const SUPPORT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phantom {
    /// `sin(2π x1) sin(2π x2)` on the unit square.
    SineFull,
    /// `sin(π/2 (x1 - 0.5)) sin(π/2 (x2 - 0.5))` on the unit square.
    SineShifted,
    /// Discrete unit masses at `(0.4, 0.4)` and `(0.7, 0.7)`.
    DeltaPair,
    Zero,
}

impl Phantom {
    pub const ALL: [Phantom; 4] = [
        Phantom::SineFull,
        Phantom::SineShifted,
        Phantom::DeltaPair,
        Phantom::Zero,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Phantom::SineFull => "sine-full",
            Phantom::SineShifted => "sine-shifted",
            Phantom::DeltaPair => "delta-pair",
            Phantom::Zero => "zero",
        }
    }

    pub fn sample(self, grid: &SpaceTimeGrid) -> Result<SpatialField> {
        match self {
            Phantom::SineFull => Ok(sine_full(grid)),
            Phantom::SineShifted => Ok(sine_shifted(grid)),
            Phantom::DeltaPair => delta_pair(grid),
            Phantom::Zero => Ok(SpatialField::zeros(grid)),
        }
    }
}

impl fmt::Display for Phantom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Phantom {
    type Err = QrmError;

    fn from_str(s: &str) -> Result<Self> {
        Phantom::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| QrmError::InvalidArgument(format!("unknown phantom '{s}'")))
    }
}

fn in_unit_square(x1: f64, x2: f64) -> bool {
    let inside = |x: f64| (-SUPPORT_TOL..=1.0 + SUPPORT_TOL).contains(&x);
    inside(x1) && inside(x2)
}

fn restricted(grid: &SpaceTimeGrid, f: impl Fn(f64, f64) -> f64) -> SpatialField {
    SpatialField::from_fn(grid, |x1, x2| if in_unit_square(x1, x2) { f(x1, x2) } else { 0.0 })
}

pub fn sine_full(grid: &SpaceTimeGrid) -> SpatialField {
    restricted(grid, |x1, x2| {
        let v = (2.0 * PI * x1).sin() * (2.0 * PI * x2).sin();
        // Snap roundoff at the square's node lines (sin(kπ) ~ 1e-16) to exact zero.
        if v.abs() < 1e-12 {
            0.0
        } else {
            v
        }
    })
}

pub fn sine_shifted(grid: &SpaceTimeGrid) -> SpatialField {
    restricted(grid, |x1, x2| {
        (0.5 * PI * (x1 - 0.5)).sin() * (0.5 * PI * (x2 - 0.5)).sin()
    })
}

pub const DELTA_CENTERS: [(f64, f64); 2] = [(0.4, 0.4), (0.7, 0.7)];

/// Height of a single-node spike whose pyramid over the surrounding
/// `2h x 2h` patch has unit volume: `3 / (4 h_x1 h_x2)`.
pub fn delta_height(grid: &SpaceTimeGrid) -> f64 {
    3.0 / (4.0 * grid.h_x1 * grid.h_x2)
}

pub fn delta_pair(grid: &SpaceTimeGrid) -> Result<SpatialField> {
    let mut field = SpatialField::zeros(grid);
    let height = delta_height(grid);
    for (x1, x2) in DELTA_CENTERS {
        match (grid.column_of(x1), grid.row_of(x2)) {
            (Some(n), Some(m)) => field.set(m, n, height),
            _ => return Err(QrmError::NodeMisaligned { x1, x2 }),
        }
    }
    Ok(field)
}

/// Integral of the pyramid interpolant of a nodal field: every node carries a
/// square pyramid of its value over the `2h x 2h` patch around it, with
/// volume `(4/3) h_x1 h_x2` per unit height.
pub fn pyramid_integral(field: &SpatialField, grid: &SpaceTimeGrid) -> f64 {
    (4.0 / 3.0) * grid.cell_area() * field.values().iter().sum::<f64>()
}
