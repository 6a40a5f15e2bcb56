use faer::{c64, Col, Mat};
use serde::{Deserialize, Serialize};

use crate::solver::SvdFactors;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigGroup {
    Physical,
    SpuriousNearZero,
    BoundaryInfinite,
}

impl EigGroup {
    pub fn as_str(self) -> &'static str {
        match self {
            EigGroup::Physical => "physical",
            EigGroup::SpuriousNearZero => "spurious_near_zero",
            EigGroup::BoundaryInfinite => "boundary_infinite",
        }
    }
}

/// Eigenpairs with group labels. Weight vectors are empty for dense paths.
#[derive(Clone, Debug, Default)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<c64>,
    pub weight_vectors: Vec<Col<c64>>,
    pub physical_vectors: Vec<Col<c64>>,
    pub residuals: Vec<f64>,
    pub shift: f64,
    pub groups: Vec<EigGroup>,
    /// A computed eigenvalue sits on the shift, so `A_sigma` is (nearly) singular.
    pub shift_degenerate: bool,
    pub warnings: Vec<String>,
}

impl SpectrumResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Indices of physical eigenvalues, ordered by decreasing real part.
    pub fn physical(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).filter(|&i| self.groups[i] == EigGroup::Physical).collect();
        idx.sort_by(|&a, &b| self.eigenvalues[b].re.total_cmp(&self.eigenvalues[a].re));
        idx
    }

    /// Physical eigenvalue with the largest real part.
    pub fn leading(&self) -> Option<c64> {
        self.physical().first().map(|&i| self.eigenvalues[i])
    }

    pub fn count(&self, group: EigGroup) -> usize {
        self.groups.iter().filter(|&&g| g == group).count()
    }

    /// Reorders every per-eigenvalue list by `order`.
    pub(crate) fn permute(&mut self, order: &[usize]) {
        fn pick<T: Clone>(v: &[T], order: &[usize]) -> Vec<T> {
            if v.is_empty() {
                return vec![];
            }
            order.iter().map(|&i| v[i].clone()).collect()
        }
        self.eigenvalues = pick(&self.eigenvalues, order);
        self.weight_vectors = pick(&self.weight_vectors, order);
        self.physical_vectors = pick(&self.physical_vectors, order);
        self.residuals = pick(&self.residuals, order);
        self.groups = pick(&self.groups, order);
    }

    /// Sorts by decreasing real part, infinite eigenvalues last.
    pub fn sort_by_real_part(&mut self) {
        let mut order: Vec<usize> = (0..self.len()).collect();
        let key = |z: c64| if z.re.is_finite() { z.re } else { f64::NEG_INFINITY };
        order.sort_by(|&a, &b| {
            key(self.eigenvalues[b])
                .total_cmp(&key(self.eigenvalues[a]))
                .then(self.eigenvalues[b].im.total_cmp(&self.eigenvalues[a].im))
        });
        self.permute(&order);
    }
}

/// Scale factor making the first largest-modulus entry of `phi` equal to one.
pub fn normalization(phi: &Col<c64>) -> c64 {
    match pivot(phi) {
        Some(i) => c64::new(1.0, 0.0) / phi[i],
        None => c64::new(1.0, 0.0),
    }
}

/// First entry of largest modulus, if the vector is nonzero.
fn pivot(phi: &Col<c64>) -> Option<usize> {
    let mut best = 0;
    for i in 1..phi.nrows() {
        if phi[i].norm() > phi[best].norm() {
            best = i;
        }
    }
    (phi.nrows() > 0 && phi[best].norm() > 0.0).then_some(best)
}

/// `phi` scaled so its first largest-modulus entry is exactly 1, and the factor used.
pub fn normalized(phi: &Col<c64>) -> (Col<c64>, c64) {
    let s = normalization(phi);
    let mut out = scale(phi, s);
    if let Some(i) = pivot(phi) {
        out[i] = c64::new(1.0, 0.0);
    }
    (out, s)
}

pub fn scale(v: &Col<c64>, s: c64) -> Col<c64> {
    Col::from_fn(v.nrows(), |i| v[i] * s)
}

/// Real matrix times complex vector.
pub fn real_mul(a: &Mat<f64>, v: &Col<c64>) -> Col<c64> {
    let re = a * Col::from_fn(v.nrows(), |i| v[i].re);
    let im = a * Col::from_fn(v.nrows(), |i| v[i].im);
    Col::from_fn(a.nrows(), |i| c64::new(re[i], im[i]))
}

/// Labels a dense spectrum. Boundary labels are kept; a finite eigenvalue is
/// spurious when `|lambda| <= zero_tol * max|lambda|` and more than half of its
/// (unit) eigenvector lies outside the retained range of `Psi`.
pub fn classify_spectrum(raw: &SpectrumResult, psi: &SvdFactors, zero_tol: f64) -> SpectrumResult {
    let mut out = raw.clone();
    let max_abs = raw.eigenvalues.iter().filter(|z| z.re.is_finite()).map(|z| z.norm()).fold(0.0, f64::max);
    let thresh = zero_tol * max_abs;
    for i in 0..out.len() {
        if out.groups[i] == EigGroup::BoundaryInfinite {
            continue;
        }
        let lam = out.eigenvalues[i];
        let mut group = EigGroup::Physical;
        if zero_tol > 0.0 && lam.norm() <= thresh {
            if let Some(phi) = raw.physical_vectors.get(i) {
                let nrm = phi.norm_l2();
                let re = Col::from_fn(phi.nrows(), |r| phi[r].re / nrm);
                let im = Col::from_fn(phi.nrows(), |r| phi[r].im / nrm);
                let off = psi.range_residual(&re).hypot(psi.range_residual(&im));
                if off > 0.5 {
                    group = EigGroup::SpuriousNearZero;
                }
            }
        }
        out.groups[i] = group;
    }
    out
}
