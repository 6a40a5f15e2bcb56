use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::basis::Domain;
use crate::error::{Error, Result};

const BOUNDARY_TOL: f64 = 1e-12;

/// Collocation points with their interior/boundary partition.
#[derive(Clone, Debug)]
pub struct CollocationSet {
    points: Mat<f64>,
    is_boundary: Vec<bool>,
    grid: Vec<usize>,
}

impl CollocationSet {
    /// Tensor grid with `counts[q]` equispaced points per axis (endpoints included).
    /// Points are ordered with the first axis varying fastest.
    pub fn grid(domain: &Domain, counts: &[usize]) -> Result<Self> {
        if counts.len() != domain.dim() {
            return Err(Error::arg(format!("need {} grid counts, got {}", domain.dim(), counts.len())));
        }
        if counts.iter().any(|&c| c < 2) {
            return Err(Error::arg("each grid axis needs at least 2 points"));
        }
        let axes: Vec<Vec<f64>> = counts
            .iter()
            .zip(domain.bounds())
            .map(|(&c, [a, b])| linspace(*a, *b, c))
            .collect();
        let m: usize = counts.iter().product();
        let d = counts.len();
        let mut points = Mat::zeros(m, d);
        let mut is_boundary = vec![false; m];
        for i in 0..m {
            let mut rest = i;
            for q in 0..d {
                let k = rest % counts[q];
                rest /= counts[q];
                points[(i, q)] = axes[q][k];
                if k == 0 || k + 1 == counts[q] {
                    is_boundary[i] = true;
                }
            }
        }
        Ok(CollocationSet { points, is_boundary, grid: counts.to_vec() })
    }

    /// Random interior points plus the boundary points of the equispaced grid.
    pub fn random(domain: &Domain, counts: &[usize], seed: u64) -> Result<Self> {
        let g = CollocationSet::grid(domain, counts)?;
        let d = domain.dim();
        let n_inner = g.m_pde();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut rows: Vec<(Vec<f64>, bool)> = (0..g.len())
            .filter(|&i| g.is_boundary[i])
            .map(|i| ((0..d).map(|q| g.points[(i, q)]).collect(), true))
            .collect();
        while rows.len() < g.len() {
            let x: Vec<f64> = domain.bounds().iter().map(|[a, b]| a + (b - a) * rng.random::<f64>()).collect();
            if !domain.on_boundary(&x, BOUNDARY_TOL) {
                rows.push((x, false));
            }
        }
        debug_assert_eq!(rows.len() - g.m_bc(), n_inner);
        rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let points = Mat::from_fn(rows.len(), d, |i, q| rows[i].0[q]);
        let is_boundary = rows.iter().map(|r| r.1).collect();
        Ok(CollocationSet { points, is_boundary, grid: counts.to_vec() })
    }

    pub fn points(&self) -> &Mat<f64> {
        &self.points
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        (0..self.points.ncols()).map(|q| self.points[(i, q)]).collect()
    }

    pub fn is_boundary(&self) -> &[bool] {
        &self.is_boundary
    }

    /// Points per axis of the underlying grid.
    pub fn grid_counts(&self) -> &[usize] {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.is_boundary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.is_boundary.is_empty()
    }

    pub fn m_bc(&self) -> usize {
        self.is_boundary.iter().filter(|&&b| b).count()
    }

    pub fn m_pde(&self) -> usize {
        self.len() - self.m_bc()
    }
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let h = (b - a) / (n - 1) as f64;
    (0..n).map(|k| if k + 1 == n { b } else { a + h * k as f64 }).collect()
}
