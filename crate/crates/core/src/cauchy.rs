//! Lateral boundary segments and the Cauchy data (trace and outward normal
//! derivative) recorded on them.

use crate::error::{QrmError, Result};
use crate::grid::SpaceTimeGrid;

/// One edge of the rectangular domain.
///
/// Corner nodes belong to exactly one segment: Γ1 claims both of its
/// corners, Γ2 and Γ3 claim their upper corners, and Γ4 keeps only its
/// interior nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundarySegment {
    /// `x2 = x2_min`, outward normal `-e2`.
    Gamma1,
    /// `x1 = x1_min`, outward normal `-e1`.
    Gamma2,
    /// `x1 = x1_max`, outward normal `+e1`.
    Gamma3,
    /// `x2 = x2_max`, outward normal `+e2`.
    Gamma4,
}

impl BoundarySegment {
    pub const ALL: [BoundarySegment; 4] = [
        BoundarySegment::Gamma1,
        BoundarySegment::Gamma2,
        BoundarySegment::Gamma3,
        BoundarySegment::Gamma4,
    ];

    pub fn index(self) -> usize {
        match self {
            BoundarySegment::Gamma1 => 0,
            BoundarySegment::Gamma2 => 1,
            BoundarySegment::Gamma3 => 2,
            BoundarySegment::Gamma4 => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BoundarySegment::Gamma1 => "gamma1",
            BoundarySegment::Gamma2 => "gamma2",
            BoundarySegment::Gamma3 => "gamma3",
            BoundarySegment::Gamma4 => "gamma4",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|seg| seg.name() == s)
    }

    /// Γ3 and Γ4, where finite propagation speed forces zero data in the
    /// half-plane configuration.
    pub fn is_far_side(self) -> bool {
        matches!(self, BoundarySegment::Gamma3 | BoundarySegment::Gamma4)
    }

    /// `(row, column)` of every node owned by this segment, in increasing order.
    pub fn nodes(self, grid: &SpaceTimeGrid) -> Vec<(usize, usize)> {
        let (nx, ny) = (grid.nx, grid.ny);
        match self {
            BoundarySegment::Gamma1 => (0..=nx).map(|n| (0, n)).collect(),
            BoundarySegment::Gamma2 => (1..=ny).map(|m| (m, 0)).collect(),
            BoundarySegment::Gamma3 => (1..=ny).map(|m| (m, nx)).collect(),
            BoundarySegment::Gamma4 => (1..nx).map(|n| (ny, n)).collect(),
        }
    }

    pub fn node_count(self, grid: &SpaceTimeGrid) -> usize {
        match self {
            BoundarySegment::Gamma1 => grid.nx + 1,
            BoundarySegment::Gamma2 | BoundarySegment::Gamma3 => grid.ny,
            BoundarySegment::Gamma4 => grid.nx.saturating_sub(1),
        }
    }

    /// Offset `(dm, dn)` from a boundary node to its inward neighbour.
    pub fn inward(self) -> (isize, isize) {
        match self {
            BoundarySegment::Gamma1 => (1, 0),
            BoundarySegment::Gamma2 => (0, 1),
            BoundarySegment::Gamma3 => (0, -1),
            BoundarySegment::Gamma4 => (-1, 0),
        }
    }

    /// Grid step across the edge (along the normal).
    pub fn normal_step(self, grid: &SpaceTimeGrid) -> f64 {
        match self {
            BoundarySegment::Gamma1 | BoundarySegment::Gamma4 => grid.h_x2,
            BoundarySegment::Gamma2 | BoundarySegment::Gamma3 => grid.h_x1,
        }
    }

    /// Grid step along the edge; the quadrature weight of one node.
    pub fn edge_step(self, grid: &SpaceTimeGrid) -> f64 {
        match self {
            BoundarySegment::Gamma1 | BoundarySegment::Gamma4 => grid.h_x1,
            BoundarySegment::Gamma2 | BoundarySegment::Gamma3 => grid.h_x2,
        }
    }
}

/// Samples on one segment, stored level-major: `values[k * nodes + i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentData {
    pub nodes: usize,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

impl SegmentData {
    fn zeros(levels: usize, nodes: usize) -> Self {
        SegmentData {
            nodes,
            f: vec![0.0; levels * nodes],
            g: vec![0.0; levels * nodes],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.f.iter().chain(&self.g).all(|&v| v == 0.0)
    }
}

/// Trace `f` and outward normal derivative `g` on all four segments over every time level.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyData {
    levels: usize,
    segments: [SegmentData; 4],
}

impl CauchyData {
    pub fn zeros(grid: &SpaceTimeGrid) -> Self {
        let levels = grid.levels();
        CauchyData {
            levels,
            segments: BoundarySegment::ALL
                .map(|seg| SegmentData::zeros(levels, seg.node_count(grid))),
        }
    }

    /// Assemble from per-segment arrays; shapes are checked against `grid`.
    pub fn from_segments(grid: &SpaceTimeGrid, segments: [SegmentData; 4]) -> Result<Self> {
        let data = CauchyData {
            levels: grid.levels(),
            segments,
        };
        data.check(grid)?;
        Ok(data)
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn segment(&self, seg: BoundarySegment) -> &SegmentData {
        &self.segments[seg.index()]
    }

    pub fn segment_mut(&mut self, seg: BoundarySegment) -> &mut SegmentData {
        &mut self.segments[seg.index()]
    }

    pub fn segments(&self) -> &[SegmentData; 4] {
        &self.segments
    }

    pub fn is_zero(&self) -> bool {
        self.segments.iter().all(SegmentData::is_zero)
    }

    /// Set `f = g = 0` on Γ3 and Γ4.
    pub fn zero_far_side(&mut self) {
        for seg in [BoundarySegment::Gamma3, BoundarySegment::Gamma4] {
            let s = self.segment_mut(seg);
            s.f.iter_mut().for_each(|v| *v = 0.0);
            s.g.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    /// Sum of squares of every stored sample.
    pub fn norm_sq(&self) -> f64 {
        self.segments
            .iter()
            .flat_map(|s| s.f.iter().chain(&s.g))
            .map(|v| v * v)
            .sum()
    }

    pub fn check(&self, grid: &SpaceTimeGrid) -> Result<()> {
        if self.levels != grid.levels() {
            return Err(QrmError::GridMismatch(format!(
                "Cauchy data has {} time levels, grid has {}",
                self.levels,
                grid.levels()
            )));
        }
        for seg in BoundarySegment::ALL {
            let s = self.segment(seg);
            let want = seg.node_count(grid);
            if s.nodes != want || s.f.len() != want * self.levels || s.g.len() != want * self.levels
            {
                return Err(QrmError::GridMismatch(format!(
                    "{} holds {} nodes, grid needs {}",
                    seg.name(),
                    s.nodes,
                    want
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, Extent, Steps};
    use std::collections::HashSet;

    #[test]
    fn segments_partition_the_boundary() {
        let g = make_grid(Extent::new((0.0, 1.0), (0.0, 0.6), 1.0), Steps::uniform(0.1, 0.05)).unwrap();
        let mut seen = HashSet::new();
        for seg in BoundarySegment::ALL {
            let nodes = seg.nodes(&g);
            assert_eq!(nodes.len(), seg.node_count(&g));
            for node in nodes {
                assert!(seen.insert(node), "{node:?} owned twice");
            }
        }
        let perimeter = 2 * (g.nx + g.ny);
        assert_eq!(seen.len(), perimeter);
        for (m, n) in seen {
            assert!(m == 0 || n == 0 || m == g.ny || n == g.nx);
        }
    }

    #[test]
    fn corners_go_to_lower_segment() {
        let g = make_grid(Extent::square(0.0, 1.0, 1.0), Steps::uniform(0.5, 0.5)).unwrap();
        assert_eq!(BoundarySegment::Gamma1.nodes(&g), vec![(0, 0), (0, 1), (0, 2)]);
        assert_eq!(BoundarySegment::Gamma2.nodes(&g), vec![(1, 0), (2, 0)]);
        assert_eq!(BoundarySegment::Gamma3.nodes(&g), vec![(1, 2), (2, 2)]);
        assert_eq!(BoundarySegment::Gamma4.nodes(&g), vec![(2, 1)]);
    }

    #[test]
    fn shape_check_rejects_foreign_grid() {
        let a = make_grid(Extent::square(0.0, 1.0, 1.0), Steps::uniform(0.5, 0.5)).unwrap();
        let b = make_grid(Extent::square(0.0, 1.0, 1.0), Steps::uniform(0.25, 0.25)).unwrap();
        let data = CauchyData::zeros(&a);
        assert!(data.check(&a).is_ok());
        assert!(matches!(data.check(&b), Err(QrmError::GridMismatch(_))));
    }
}
