#![allow(dead_code)]

use qrm::noise::SplitMix64;
use qrm::*;

pub fn grid(nx: usize, ny: usize, nt: usize, h_x1: f64, h_x2: f64, h_t: f64) -> SpaceTimeGrid {
    make_grid(
        Extent::new((0.0, nx as f64 * h_x1), (0.0, ny as f64 * h_x2), nt as f64 * h_t),
        Steps { h_x1, h_x2, h_t },
    )
    .unwrap()
}

pub fn random_field(grid: &SpaceTimeGrid, rng: &mut SplitMix64) -> Field {
    let values = (0..grid.len()).map(|_| rng.next_symmetric()).collect();
    Field::from_values(grid, values).unwrap()
}

pub fn random_plane(grid: &SpaceTimeGrid, rng: &mut SplitMix64) -> SpatialField {
    let values = (0..grid.plane_len()).map(|_| rng.next_symmetric()).collect();
    SpatialField::from_values(grid, values).unwrap()
}

/// Random data on all four segments, so every boundary term is exercised.
pub fn random_data(grid: &SpaceTimeGrid, rng: &mut SplitMix64) -> CauchyData {
    let mut data = CauchyData::zeros(grid);
    for seg in BoundarySegment::ALL {
        let s = data.segment_mut(seg);
        s.f.iter_mut().for_each(|v| *v = rng.next_symmetric());
        s.g.iter_mut().for_each(|v| *v = rng.next_symmetric());
    }
    data
}

pub fn random_spec(grid: SpaceTimeGrid, kind: ProblemKind, weights: Weights, seed: u64) -> FunctionalSpec {
    let mut rng = SplitMix64::new(seed);
    let data = random_data(&grid, &mut rng);
    let known = random_plane(&grid, &mut rng);
    FunctionalSpec::new(grid, kind, weights, data, known).unwrap()
}

pub fn basis(grid: &SpaceTimeGrid, i: usize, scale: f64) -> Field {
    let mut f = Field::zeros(grid);
    f.values_mut()[i] = scale;
    f
}

/// Dense Hessian `H` and linear term `b` of `J(u) = u·Hu/2 - b·u + J(0)`,
/// recovered from functional values alone by polarization.
pub fn dense_quadratic(spec: &FunctionalSpec) -> (nalgebra::DMatrix<f64>, nalgebra::DVector<f64>) {
    let g = *spec.grid();
    let n = g.len();
    let j = |u: &Field| evaluate(u, spec).total;
    let j0 = j(&Field::zeros(&g));
    let plus: Vec<f64> = (0..n).map(|i| j(&basis(&g, i, 1.0))).collect();
    let minus: Vec<f64> = (0..n).map(|i| j(&basis(&g, i, -1.0))).collect();
    let mut h = nalgebra::DMatrix::zeros(n, n);
    for a in 0..n {
        h[(a, a)] = plus[a] + minus[a] - 2.0 * j0;
        for b in a + 1..n {
            let mut u = basis(&g, a, 1.0);
            u.values_mut()[b] = 1.0;
            let v = j(&u) - plus[a] - plus[b] + j0;
            h[(a, b)] = v;
            h[(b, a)] = v;
        }
    }
    let rhs = nalgebra::DVector::from_iterator(n, (0..n).map(|i| 0.5 * (minus[i] - plus[i])));
    (h, rhs)
}

pub fn dense_minimizer(spec: &FunctionalSpec) -> Field {
    let (h, b) = dense_quadratic(spec);
    let x = h.cholesky().expect("positive definite").solve(&b);
    Field::from_values(spec.grid(), x.iter().copied().collect()).unwrap()
}
