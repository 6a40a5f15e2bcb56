//! Random logistic-sigmoid feature basis.
//!
//! Each neuron is `psi_j(x) = 1 / (1 + exp(-(alpha_j . x + beta_j)))` with a
//! fixed random slope vector `alpha_j` and a bias chosen so the inflection
//! point sits on a center `c_j` inside the domain.

use faer::{Mat, MatRef};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const Z_CLAMP: f64 = 709.0;
const ALPHA_STREAM: u64 = 1;
const CENTER_STREAM: u64 = 2;

/// Axis-aligned box in one or two dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct Domain {
    bounds: Vec<[f64; 2]>,
}

impl Domain {
    pub fn new(bounds: Vec<[f64; 2]>) -> Result<Self> {
        if bounds.is_empty() || bounds.len() > 2 {
            return Err(Error::arg(format!("domain dimension {} not in {{1,2}}", bounds.len())));
        }
        for (q, [a, b]) in bounds.iter().enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::arg(format!("domain axis {q}: need a < b, got [{a}, {b}]")));
            }
        }
        Ok(Domain { bounds })
    }

    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Domain::new(vec![[a, b]])
    }

    pub fn rectangle(x: [f64; 2], y: [f64; 2]) -> Result<Self> {
        Domain::new(vec![x, y])
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[[f64; 2]] {
        &self.bounds
    }

    pub fn length(&self, q: usize) -> f64 {
        self.bounds[q][1] - self.bounds[q][0]
    }

    pub fn contains(&self, x: &[f64], margin: f64) -> bool {
        x.len() == self.dim()
            && x.iter().zip(&self.bounds).all(|(v, [a, b])| *v >= a - margin && *v <= b + margin)
    }

    /// True when `x` lies on the boundary within `tol`.
    pub fn on_boundary(&self, x: &[f64], tol: f64) -> bool {
        x.iter().zip(&self.bounds).any(|(v, [a, b])| (v - a).abs() <= tol || (v - b).abs() <= tol)
    }
}

impl TryFrom<Vec<[f64; 2]>> for Domain {
    type Error = Error;
    fn try_from(bounds: Vec<[f64; 2]>) -> Result<Self> {
        Domain::new(bounds)
    }
}

impl From<Domain> for Vec<[f64; 2]> {
    fn from(d: Domain) -> Self {
        d.bounds
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterPlacement {
    #[default]
    Uniform,
    /// Evenly spaced centers including both endpoints (1D only).
    Equispaced,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingOptions {
    pub centers: CenterPlacement,
    /// Multiplies the slope bound on every axis.
    pub alpha_scale: f64,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        SamplingOptions { centers: CenterPlacement::Uniform, alpha_scale: 1.0 }
    }
}

/// Slope bound for one axis: `(min(N, M)/5 + 4) / |I|`.
pub fn alpha_upper(n_neurons: usize, n_points: usize, length: f64) -> f64 {
    (n_neurons.min(n_points) as f64 / 5.0 + 4.0) / length
}

/// Fixed hidden-layer parameters. Matrices are stored row-major, one row per neuron.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BasisRecord", into = "BasisRecord")]
pub struct RpnnBasis {
    domain: Domain,
    n_neurons: usize,
    seed: u64,
    alpha_upper: Vec<f64>,
    alphas: Vec<f64>,
    betas: Vec<f64>,
    centers: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct BasisRecord {
    seed: u64,
    #[serde(rename = "N")]
    n: usize,
    domain: Domain,
    alphas: Vec<Vec<f64>>,
    betas: Vec<f64>,
    centers: Vec<Vec<f64>>,
    alpha_upper: Vec<f64>,
}

impl From<RpnnBasis> for BasisRecord {
    fn from(b: RpnnBasis) -> Self {
        let d = b.dim();
        BasisRecord {
            seed: b.seed,
            n: b.n_neurons,
            alphas: b.alphas.chunks(d).map(<[f64]>::to_vec).collect(),
            centers: b.centers.chunks(d).map(<[f64]>::to_vec).collect(),
            betas: b.betas,
            alpha_upper: b.alpha_upper,
            domain: b.domain,
        }
    }
}

impl TryFrom<BasisRecord> for RpnnBasis {
    type Error = Error;
    fn try_from(r: BasisRecord) -> Result<Self> {
        let d = r.domain.dim();
        let ok = r.alphas.len() == r.n
            && r.centers.len() == r.n
            && r.betas.len() == r.n
            && r.alpha_upper.len() == d
            && r.alphas.iter().chain(&r.centers).all(|row| row.len() == d);
        if !ok {
            return Err(Error::arg("basis record has inconsistent sizes"));
        }
        Ok(RpnnBasis {
            domain: r.domain,
            n_neurons: r.n,
            seed: r.seed,
            alpha_upper: r.alpha_upper,
            alphas: r.alphas.concat(),
            betas: r.betas,
            centers: r.centers.concat(),
        })
    }
}

impl RpnnBasis {
    pub fn n_neurons(&self) -> usize {
        self.n_neurons
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn alpha_upper(&self) -> &[f64] {
        &self.alpha_upper
    }

    pub fn alpha(&self, j: usize) -> &[f64] {
        let d = self.dim();
        &self.alphas[j * d..(j + 1) * d]
    }

    pub fn center(&self, j: usize) -> &[f64] {
        let d = self.dim();
        &self.centers[j * d..(j + 1) * d]
    }

    pub fn beta(&self, j: usize) -> f64 {
        self.betas[j]
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    /// Pre-activation `alpha_j . x + beta_j`.
    pub fn preactivation(&self, j: usize, x: &[f64]) -> f64 {
        self.alpha(j).iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + self.betas[j]
    }

    /// Builds a basis from explicit slopes and centers (row-major, one row per neuron).
    pub fn from_parts(domain: Domain, alphas: Vec<f64>, centers: Vec<f64>, seed: u64) -> Result<Self> {
        let d = domain.dim();
        if alphas.is_empty() || alphas.len() % d != 0 || centers.len() != alphas.len() {
            return Err(Error::arg("slopes and centers must be non-empty N x d arrays"));
        }
        let n = alphas.len() / d;
        let betas = (0..n)
            .map(|j| -(0..d).map(|q| alphas[j * d + q] * centers[j * d + q]).sum::<f64>())
            .collect();
        let alpha_upper = (0..d)
            .map(|q| (0..n).map(|j| alphas[j * d + q].abs()).fold(0.0, f64::max))
            .collect();
        Ok(RpnnBasis { domain, n_neurons: n, seed, alpha_upper, alphas, betas, centers })
    }
}

/// Samples a basis with the default options. `n_points` is the number of
/// collocation points along each axis.
pub fn sample_basis(domain: &Domain, n_neurons: usize, n_points: usize, seed: u64) -> Result<RpnnBasis> {
    sample_basis_with(domain, n_neurons, n_points, seed, &SamplingOptions::default())
}

pub fn sample_basis_with(
    domain: &Domain,
    n_neurons: usize,
    n_points: usize,
    seed: u64,
    opts: &SamplingOptions,
) -> Result<RpnnBasis> {
    if n_neurons == 0 {
        return Err(Error::arg("n_neurons must be at least 1"));
    }
    if n_points < 2 {
        return Err(Error::arg("n_points must be at least 2"));
    }
    if !(opts.alpha_scale.is_finite() && opts.alpha_scale > 0.0) {
        return Err(Error::arg("alpha_scale must be positive"));
    }
    let d = domain.dim();
    if opts.centers == CenterPlacement::Equispaced && d != 1 {
        return Err(Error::arg("equispaced centers are only defined in 1D"));
    }
    let upper: Vec<f64> = (0..d)
        .map(|q| opts.alpha_scale * alpha_upper(n_neurons, n_points, domain.length(q)))
        .collect();

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(ALPHA_STREAM);
    let mut alphas = Vec::with_capacity(n_neurons * d);
    for _ in 0..n_neurons {
        for &u_q in &upper {
            let u: f64 = rng.random();
            alphas.push((2.0 * u - 1.0) * u_q);
        }
    }

    let mut centers = Vec::with_capacity(n_neurons * d);
    match opts.centers {
        CenterPlacement::Uniform => {
            rng.set_stream(CENTER_STREAM);
            rng.set_word_pos(0);
            for _ in 0..n_neurons {
                for [a, b] in domain.bounds() {
                    let u: f64 = rng.random();
                    centers.push(a + (b - a) * u);
                }
            }
        }
        CenterPlacement::Equispaced => {
            let [a, b] = domain.bounds()[0];
            let step = if n_neurons > 1 { (b - a) / (n_neurons - 1) as f64 } else { 0.0 };
            centers.extend((0..n_neurons).map(|j| if n_neurons > 1 { a + step * j as f64 } else { 0.5 * (a + b) }));
        }
    }

    let mut basis = RpnnBasis::from_parts(domain.clone(), alphas, centers, seed)?;
    basis.alpha_upper = upper;
    Ok(basis)
}

/// Basis values and closed-form spatial derivatives at a point set.
#[derive(Clone, Debug)]
pub struct FeatureMatrices {
    pub psi: Mat<f64>,
    pub dpsi: Vec<Mat<f64>>,
    pub d2psi: Vec<Mat<f64>>,
}

impl FeatureMatrices {
    pub fn n_points(&self) -> usize {
        self.psi.nrows()
    }

    pub fn n_neurons(&self) -> usize {
        self.psi.ncols()
    }

    pub fn laplacian(&self) -> Mat<f64> {
        let mut lap = self.d2psi[0].clone();
        for d2 in &self.d2psi[1..] {
            lap += d2;
        }
        lap
    }
}

/// Returns `(s, 1 - s)` for the logistic sigmoid, each computed without cancellation.
#[inline]
pub fn sigmoid_pair(z: f64) -> (f64, f64) {
    let z = z.clamp(-Z_CLAMP, Z_CLAMP);
    (1.0 / (1.0 + (-z).exp()), 1.0 / (1.0 + z.exp()))
}

/// Evaluates the basis at the rows of `points` (M x d).
pub fn eval_features(basis: &RpnnBasis, points: MatRef<'_, f64>) -> Result<FeatureMatrices> {
    let d = basis.dim();
    if points.ncols() != d {
        return Err(Error::arg(format!("points have {} columns, basis dimension is {d}", points.ncols())));
    }
    let (m, n) = (points.nrows(), basis.n_neurons());
    let mut psi = Mat::zeros(m, n);
    let mut dpsi = vec![Mat::zeros(m, n); d];
    let mut d2psi = vec![Mat::zeros(m, n); d];
    let mut x = vec![0.0; d];
    for i in 0..m {
        for (q, xq) in x.iter_mut().enumerate() {
            *xq = points[(i, q)];
        }
        for j in 0..n {
            let (s, sc) = sigmoid_pair(basis.preactivation(j, &x));
            let ds = s * sc;
            psi[(i, j)] = s;
            for (q, &a) in basis.alpha(j).iter().enumerate() {
                dpsi[q][(i, j)] = a * ds;
                d2psi[q][(i, j)] = a * a * ds * (sc - s);
            }
        }
    }
    Ok(FeatureMatrices { psi, dpsi, d2psi })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Domain {
        Domain::interval(0.0, 1.0).unwrap()
    }

    #[test]
    fn slope_bound_matches_formula() {
        assert_eq!(alpha_upper(50, 101, 1.0), 14.0);
        assert_eq!(alpha_upper(10, 10, 2.0), 3.0);
        let b = sample_basis(&unit(), 50, 101, 3).unwrap();
        assert_eq!(b.alpha_upper(), &[14.0]);
        assert!((0..50).all(|j| b.alpha(j)[0].abs() <= 14.0));
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_basis(&unit(), 40, 80, 11).unwrap();
        let b = sample_basis(&unit(), 40, 80, 11).unwrap();
        let c = sample_basis(&unit(), 40, 80, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn biases_place_inflection_on_center() {
        let dom = Domain::rectangle([0.0, 1.0], [-2.0, 3.0]).unwrap();
        let b = sample_basis(&dom, 30, 21, 5).unwrap();
        for j in 0..30 {
            let c = b.center(j);
            assert!(dom.contains(c, 0.0));
            let (s, _) = sigmoid_pair(b.preactivation(j, c));
            assert!((s - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn bad_arguments_are_rejected() {
        assert!(Domain::interval(1.0, 1.0).is_err());
        assert!(Domain::new(vec![[0.0, 1.0]; 3]).is_err());
        assert!(sample_basis(&unit(), 0, 10, 0).is_err());
        assert!(sample_basis(&unit(), 5, 1, 0).is_err());
        let b = sample_basis(&unit(), 5, 10, 0).unwrap();
        assert!(eval_features(&b, Mat::<f64>::zeros(3, 2).as_ref()).is_err());
    }

    #[test]
    fn values_at_center_and_in_saturation() {
        let b = RpnnBasis::from_parts(unit(), vec![8.0, 1.0], vec![0.25, 0.5], 0).unwrap();
        let pts = Mat::from_fn(2, 1, |i, _| [0.25, 0.5][i]);
        let f = eval_features(&b, pts.as_ref()).unwrap();
        assert_eq!(f.psi[(0, 0)], 0.5);
        assert_eq!(f.dpsi[0][(0, 0)], 2.0);
        assert_eq!(f.d2psi[0][(0, 0)], 0.0);

        let far = RpnnBasis::from_parts(unit(), vec![80.0, -2000.0], vec![0.0, 0.9], 0).unwrap();
        let f = eval_features(&far, pts.as_ref()).unwrap();
        assert_eq!(f.psi[(1, 0)], 1.0);
        assert!(f.dpsi[0][(1, 0)].abs() < 1e-15);
        for m in [&f.psi, &f.dpsi[0], &f.d2psi[0]] {
            assert!(m.col_iter().flat_map(|c| c.iter().copied().collect::<Vec<_>>()).all(f64::is_finite));
        }
    }

    #[test]
    fn equispaced_centers_cover_interval() {
        let opts = SamplingOptions { centers: CenterPlacement::Equispaced, alpha_scale: 1.0 };
        let b = sample_basis_with(&unit(), 5, 20, 0, &opts).unwrap();
        let c: Vec<f64> = (0..5).map(|j| b.center(j)[0]).collect();
        assert_eq!(c, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn json_round_trip() {
        let b = sample_basis(&Domain::rectangle([0.0, 1.0], [0.0, 2.0]).unwrap(), 7, 9, 42).unwrap();
        let s = serde_json::to_string(&b).unwrap();
        assert!(s.contains("\"N\":7"));
        let back: RpnnBasis = serde_json::from_str(&s).unwrap();
        assert_eq!(b, back);
    }
}
