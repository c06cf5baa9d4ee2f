//! Correlated integer mutations.
//!
//! A correlated lattice mutation is an uncorrelated one pushed through a
//! product of `n(n-1)/2` plane rotations and rounded back to the lattice. The
//! pair order is fixed and lexicographic, `(0,1), (0,2), …, (n-2,n-1)`
//! (0-based), and rotations are applied to the vector one after another in
//! that order. Rounding (half away from zero) happens once, after the whole
//! product.
//!
//! The forced-normal path instead assembles a covariance matrix from step
//! sizes and angles, repairs it to be positive semidefinite, and samples
//! rounded multivariate normals. The assembly is only partially defined.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::distributions::{self, dg_p_for_step, geometric_from_uniform, round_half_away};
use crate::distributions::{tn_sigma_for_step, DistributionKind};
use crate::error::{Error, Result};
use crate::rng::RandomSource;

/// A point or mutation on the integer lattice.
pub type IntegerVector = Vec<i64>;

/// Distance of `|2α mod π − π/2|` under which `tan(2α)` counts as unbounded.
pub const FTN_DEGENERACY_TOL: f64 = 1e-6;

/// Per-coordinate target mean absolute steps; all entries strictly positive.
#[derive(Clone, Debug, PartialEq)]
pub struct StepSizeVector(Vec<f64>);

impl StepSizeVector {
    pub fn new(steps: Vec<f64>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::ParamDomain("step-size vector must not be empty".into()));
        }
        if let Some(bad) = steps.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(Error::ParamDomain(format!("step size {bad} must be positive")));
        }
        Ok(Self(steps))
    }

    pub fn uniform(n: usize, s: f64) -> Result<Self> {
        Self::new(vec![s; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Unchecked construction for values already known to be positive.
    pub(crate) fn from_positive(steps: Vec<f64>) -> Self {
        debug_assert!(steps.iter().all(|s| *s > 0.0));
        Self(steps)
    }
}

/// Rotation angles for every coordinate pair of an `n`-dimensional space.
///
/// Index `j` maps to the `j`-th pair in lexicographic order, see
/// [`AngleVector::pairs`]. Angles are kept in `(-π, π]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleVector {
    n: usize,
    angles: Vec<f64>,
}

impl AngleVector {
    pub fn new(n: usize, angles: Vec<f64>) -> Result<Self> {
        let expected = pair_count(n);
        if angles.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: angles.len() });
        }
        Ok(Self { n, angles: angles.into_iter().map(wrap_angle).collect() })
    }

    pub fn zeros(n: usize) -> Self {
        Self { n, angles: vec![0.0; pair_count(n)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.angles
    }

    pub fn is_zero(&self) -> bool {
        self.angles.iter().all(|a| *a == 0.0)
    }

    /// Adds `delta[j]` to every angle and wraps back into `(-π, π]`.
    pub fn perturb(&mut self, delta: impl IntoIterator<Item = f64>) {
        for (a, d) in self.angles.iter_mut().zip(delta) {
            *a = wrap_angle(*a + d);
        }
    }

    /// Coordinate pairs `(i, l)`, `i < l`, in the fixed lexicographic order.
    pub fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
        (0..n).flat_map(move |i| (i + 1..n).map(move |l| (i, l)))
    }
}

pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// Symmetric covariance matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix(DMatrix<f64>);

impl CovarianceMatrix {
    /// Wraps a square matrix that is symmetric to 1e-12 (relative to its largest entry).
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
        }
        let scale = m.amax().max(1.0);
        let asym = (&m - m.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(Error::ParamDomain(format!("matrix is not symmetric (max |c_ij - c_ji| = {asym:e})")));
        }
        Ok(Self(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.0.clone()).eigenvalues.min()
    }

    /// Clips negative eigenvalues to zero and re-symmetrizes.
    pub fn psd_repair(&self) -> Self {
        let eig = SymmetricEigen::new(self.0.clone());
        let clipped = eig.eigenvalues.map(|l| l.max(0.0));
        let q = &eig.eigenvectors;
        let m = q * DMatrix::from_diagonal(&clipped) * q.transpose();
        Self((&m + m.transpose()) * 0.5)
    }
}

/// The `n×n` plane rotation by `alpha` in the `(i, l)` plane (0-based, `i < l`).
pub fn rotation_matrix(n: usize, i: usize, l: usize, alpha: f64) -> Result<DMatrix<f64>> {
    if i >= l || l >= n {
        return Err(Error::IndexOutOfRange(format!("pair ({i}, {l}) in dimension {n}")));
    }
    let (sin, cos) = alpha.sin_cos();
    let mut r = DMatrix::identity(n, n);
    r[(i, i)] = cos;
    r[(l, l)] = cos;
    r[(i, l)] = -sin;
    r[(l, i)] = sin;
    Ok(r)
}

/// Precomputed rotation product for one angle vector.
#[derive(Clone, Debug)]
pub struct Rotation {
    n: usize,
    planes: Vec<(usize, usize, f64, f64)>,
}

impl Rotation {
    pub fn new(alpha: &AngleVector) -> Self {
        let planes = AngleVector::pairs(alpha.n)
            .zip(&alpha.angles)
            .filter(|(_, a)| **a != 0.0)
            .map(|((i, l), a)| {
                let (sin, cos) = a.sin_cos();
                (i, l, cos, sin)
            })
            .collect();
        Self { n: alpha.n, planes }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Applies the product in real arithmetic, in place.
    pub fn apply(&self, v: &mut [f64]) {
        for &(i, l, cos, sin) in &self.planes {
            let (a, b) = (v[i], v[l]);
            v[i] = cos * a - sin * b;
            v[l] = sin * a + cos * b;
        }
    }

    /// Rotates an integer vector and rounds the result back onto the lattice.
    pub fn apply_int(&self, z: &[i64]) -> IntegerVector {
        let mut v: Vec<f64> = z.iter().map(|&x| x as f64).collect();
        self.apply(&mut v);
        v.into_iter().map(round_half_away).collect()
    }

    /// The rotation product as a dense matrix (columns are rotated unit vectors).
    pub fn to_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::identity(self.n, self.n);
        for c in 0..self.n {
            let mut col: Vec<f64> = m.column(c).iter().copied().collect();
            self.apply(&mut col);
            m.set_column(c, &DVector::from_vec(col));
        }
        m
    }
}

pub fn rotate_int(z: &[i64], alpha: &AngleVector) -> Result<IntegerVector> {
    if z.len() != alpha.n {
        return Err(Error::DimensionMismatch { expected: alpha.n, got: z.len() });
    }
    Ok(Rotation::new(alpha).apply_int(z))
}

/// One uncorrelated draw per coordinate.
///
/// For DG this is a single *one-sided* geometric vector with `p_i` calibrated
/// to `s_i`; the symmetric DG mutation is the difference of two such vectors.
/// The other kinds return their symmetric variates directly.
pub fn gen_uncorrelated(s: &StepSizeVector, kind: DistributionKind, rng: &mut RandomSource) -> IntegerVector {
    match kind {
        DistributionKind::Tn => {
            s.0.iter().map(|&si| round_half_away(tn_sigma_for_step(si) * rng.standard_normal())).collect()
        }
        DistributionKind::Dg => {
            s.0.iter().map(|&si| geometric_from_uniform(rng.uniform(), dg_p_for_step(si)) as i64).collect()
        }
        DistributionKind::Du | DistributionKind::Sb => {
            s.0.iter()
                .map(|&si| {
                    let param = distributions::param_from_step(kind, si).expect("positive step size");
                    distributions::sample(&param, rng)
                })
                .collect()
        }
    }
}

/// Uncorrelated symmetric mutation vector with per-coordinate mean |z_i| ≈ s_i.
///
/// Consumes the random stream exactly like [`corr_mutate`] with zero angles.
pub fn uncorrelated_mutation(s: &StepSizeVector, kind: DistributionKind, rng: &mut RandomSource) -> IntegerVector {
    let mut z = gen_uncorrelated(s, kind, rng);
    if kind == DistributionKind::Dg {
        let g = gen_uncorrelated(s, kind, rng);
        for (zi, gi) in z.iter_mut().zip(g) {
            *zi = zi.saturating_sub(gi);
        }
    }
    z
}

/// Correlated mutation: uncorrelated draw, rotated and rounded. For DG two
/// geometric vectors are rotated independently and subtracted.
pub fn corr_mutate(
    s: &StepSizeVector,
    alpha: &AngleVector,
    kind: DistributionKind,
    rng: &mut RandomSource,
) -> Result<IntegerVector> {
    if s.dim() != alpha.dim() {
        return Err(Error::DimensionMismatch { expected: alpha.dim(), got: s.dim() });
    }
    let rotation = Rotation::new(alpha);
    corr_mutate_with(s, &rotation, kind, rng)
}

pub(crate) fn corr_mutate_with(
    s: &StepSizeVector,
    rotation: &Rotation,
    kind: DistributionKind,
    rng: &mut RandomSource,
) -> Result<IntegerVector> {
    match kind {
        DistributionKind::Tn => {
            let z = gen_uncorrelated(s, kind, rng);
            Ok(rotation.apply_int(&z))
        }
        DistributionKind::Dg => {
            let z = rotation.apply_int(&gen_uncorrelated(s, kind, rng));
            let g = rotation.apply_int(&gen_uncorrelated(s, kind, rng));
            Ok(z.into_iter().zip(g).map(|(a, b)| a.saturating_sub(b)).collect())
        }
        other => Err(Error::UnsupportedKind(other)),
    }
}

/// `α = ½·arctan(2c/(σ_i² − σ_j²))`; `±π/4` at equal variances, `0` without correlation.
pub fn angle_from_covariance(c_ij: f64, sigma_i2: f64, sigma_j2: f64) -> f64 {
    if c_ij == 0.0 {
        return 0.0;
    }
    let denom = sigma_i2 - sigma_j2;
    if denom == 0.0 {
        FRAC_PI_4.copysign(c_ij)
    } else {
        0.5 * (2.0 * c_ij / denom).atan()
    }
}

/// Inverse of [`angle_from_covariance`]: `c = ½(σ_i² − σ_j²)·tan(2α)`.
/// `None` when `tan(2α)` is unbounded.
pub fn covariance_from_angle(alpha: f64, sigma_i2: f64, sigma_j2: f64) -> Option<f64> {
    if alpha == 0.0 {
        return Some(0.0);
    }
    let folded = (2.0 * alpha).rem_euclid(PI);
    if (folded - FRAC_PI_2).abs() < FTN_DEGENERACY_TOL {
        return None;
    }
    Some(0.5 * (sigma_i2 - sigma_j2) * (2.0 * alpha).tan())
}

/// Assembles the forced-normal covariance from step sizes and angles.
///
/// Diagonal: `σ_i² = (√(π/2)·s_i)²`; off-diagonals from
/// [`covariance_from_angle`]. The result is PSD-repaired. `Ok(None)` marks
/// angle vectors for which the assembly is undefined.
pub fn build_ftn_covariance(s: &StepSizeVector, alpha: &AngleVector) -> Result<Option<CovarianceMatrix>> {
    let n = s.dim();
    if alpha.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: alpha.dim() });
    }
    let var: Vec<f64> = s.0.iter().map(|&si| tn_sigma_for_step(si).powi(2)).collect();
    let mut m = DMatrix::from_diagonal(&DVector::from_vec(var.clone()));
    for ((i, l), &a) in AngleVector::pairs(n).zip(&alpha.angles) {
        match covariance_from_angle(a, var[i], var[l]) {
            Some(c) => {
                m[(i, l)] = c;
                m[(l, i)] = c;
            }
            None => return Ok(None),
        }
    }
    Ok(Some(CovarianceMatrix(m).psd_repair()))
}

/// Rounded multivariate-normal sampler for a PSD covariance.
#[derive(Clone, Debug)]
pub struct FtnSampler {
    factor: DMatrix<f64>,
}

impl FtnSampler {
    /// Factorizes `c = A·Aᵀ` with `A = Q·Λ^{1/2}` from the symmetric eigendecomposition.
    pub fn new(c: &CovarianceMatrix) -> Result<Self> {
        let eig = SymmetricEigen::new(c.0.clone());
        let min = eig.eigenvalues.min();
        let tol = 1e-10 * eig.eigenvalues.amax().max(1.0);
        if min < -tol {
            return Err(Error::NotPsd(min));
        }
        let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
        let factor = &eig.eigenvectors * DMatrix::from_diagonal(&roots);
        Ok(Self { factor })
    }

    pub fn sample(&self, rng: &mut RandomSource) -> IntegerVector {
        let n = self.factor.nrows();
        let w = DVector::from_fn(n, |_, _| rng.standard_normal());
        (&self.factor * w).iter().map(|&x| round_half_away(x)).collect()
    }
}

pub fn sample_ftn(c: &CovarianceMatrix, rng: &mut RandomSource) -> Result<IntegerVector> {
    Ok(FtnSampler::new(c)?.sample(rng))
}

/// Empirical covariance of the samples and of their coordinate-wise absolute values.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationMeasures {
    pub covariance: DMatrix<f64>,
    pub abs_covariance: DMatrix<f64>,
}

pub fn correlation_measures(samples: &[IntegerVector]) -> Result<CorrelationMeasures> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "correlation measures need at least 2 samples, got {}",
            samples.len()
        )));
    }
    let n = samples[0].len();
    if let Some(bad) = samples.iter().find(|z| z.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: bad.len() });
    }
    let covariance = empirical_covariance(samples.iter().map(|z| z.iter().map(|&x| x as f64)), n);
    let abs_covariance = empirical_covariance(samples.iter().map(|z| z.iter().map(|&x| x.unsigned_abs() as f64)), n);
    Ok(CorrelationMeasures { covariance, abs_covariance })
}

fn empirical_covariance<I, R>(rows: I, n: usize) -> DMatrix<f64>
where
    I: Iterator<Item = R> + Clone,
    R: Iterator<Item = f64>,
{
    let mut count = 0usize;
    let mut mean = vec![0.0; n];
    for row in rows.clone() {
        count += 1;
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= count as f64);
    let mut cov = DMatrix::zeros(n, n);
    let mut centered = vec![0.0; n];
    for row in rows {
        for ((c, x), m) in centered.iter_mut().zip(row).zip(&mean) {
            *c = x - m;
        }
        for i in 0..n {
            for j in i..n {
                cov[(i, j)] += centered[i] * centered[j];
            }
        }
    }
    for i in 0..n {
        for j in i..n {
            let v = cov[(i, j)] / (count - 1) as f64;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    cov
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{param_from_step, pmf_exact, DistParam};
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn tv_against(counts: &BTreeMap<i64, u64>, total: usize, param: &DistParam) -> f64 {
        let lo = counts.keys().next().copied().unwrap_or(0).min(-60);
        let hi = counts.keys().last().copied().unwrap_or(0).max(60);
        0.5 * (lo..=hi)
            .map(|k| (counts.get(&k).copied().unwrap_or(0) as f64 / total as f64 - pmf_exact(param, k)).abs())
            .sum::<f64>()
    }

    #[test]
    fn rotation_matrix_examples() {
        let r = rotation_matrix(2, 0, 1, 0.0).unwrap();
        assert_eq!(r, DMatrix::identity(2, 2));
        let r = rotation_matrix(2, 0, 1, FRAC_PI_2).unwrap();
        let v = &r * DVector::from_vec(vec![1.0, 0.0]);
        assert!((v[0]).abs() < 1e-15 && (v[1] - 1.0).abs() < 1e-15);
        assert!(rotation_matrix(3, 1, 1, 0.3).is_err());
        assert!(rotation_matrix(3, 0, 3, 0.3).is_err());
    }

    #[test]
    fn rotation_matrix_is_orthogonal() {
        let mut rng = RandomSource::new(9, 0);
        for _ in 0..50 {
            let a = (rng.uniform() - 0.5) * 2.0 * PI;
            let r = rotation_matrix(5, 1, 3, a).unwrap();
            let err = (&r * r.transpose() - DMatrix::<f64>::identity(5, 5)).amax();
            assert!(err < 1e-12);
        }
    }

    #[test]
    fn rotation_product_matches_matrix_product() {
        let alpha = AngleVector::new(3, vec![0.3, -1.1, 2.0]).unwrap();
        let mut expected = DMatrix::identity(3, 3);
        for ((i, l), a) in AngleVector::pairs(3).zip(alpha.as_slice()) {
            expected = rotation_matrix(3, i, l, *a).unwrap() * expected;
        }
        let got = Rotation::new(&alpha).to_matrix();
        assert!((got - expected).amax() < 1e-14);
    }

    #[test]
    fn rotate_int_examples() {
        let zero = AngleVector::zeros(2);
        assert_eq!(rotate_int(&[1, 0], &zero).unwrap(), vec![1, 0]);
        let quarter = AngleVector::new(2, vec![FRAC_PI_2]).unwrap();
        assert_eq!(rotate_int(&[1, 0], &quarter).unwrap(), vec![0, 1]);
        let eighth = AngleVector::new(2, vec![FRAC_PI_4]).unwrap();
        assert_eq!(rotate_int(&[1, 0], &eighth).unwrap(), vec![1, 1]);
        assert!(rotate_int(&[1, 0, 0], &quarter).is_err());
    }

    #[test]
    fn angle_vector_invariants() {
        assert!(AngleVector::new(3, vec![0.0; 2]).is_err());
        let a = AngleVector::new(2, vec![3.0 * PI]).unwrap();
        assert!((a.as_slice()[0] - PI).abs() < 1e-12);
        let a = AngleVector::new(2, vec![-PI]).unwrap();
        assert_eq!(a.as_slice()[0], PI);
        let pairs: Vec<_> = AngleVector::pairs(4).collect();
        assert_eq!(pairs, vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
    }

    #[test]
    fn step_vector_validation() {
        assert!(StepSizeVector::new(vec![]).is_err());
        assert!(StepSizeVector::new(vec![1.0, 0.0]).is_err());
        assert!(StepSizeVector::new(vec![1.0, f64::NAN]).is_err());
        assert!(StepSizeVector::new(vec![1.0, 2.0]).is_ok());
    }

    #[test]
    fn corr_mutate_rejects_du_sb() {
        let s = StepSizeVector::uniform(2, 1.0).unwrap();
        let a = AngleVector::zeros(2);
        let mut rng = RandomSource::new(1, 1);
        for kind in [DistributionKind::Du, DistributionKind::Sb] {
            assert!(matches!(corr_mutate(&s, &a, kind, &mut rng), Err(Error::UnsupportedKind(_))));
        }
        let bad = AngleVector::zeros(3);
        assert!(corr_mutate(&s, &bad, DistributionKind::Tn, &mut rng).is_err());
    }

    #[test]
    fn corr_mutate_zero_angles_matches_dg_marginal() {
        let s = StepSizeVector::new(vec![1.0, 2.5]).unwrap();
        let alpha = AngleVector::zeros(2);
        let mut rng = RandomSource::new(21, 0);
        let draws = 100_000;
        let mut counts = [BTreeMap::new(), BTreeMap::new()];
        for _ in 0..draws {
            let z = corr_mutate(&s, &alpha, DistributionKind::Dg, &mut rng).unwrap();
            for (c, zi) in counts.iter_mut().zip(z) {
                *c.entry(zi).or_insert(0u64) += 1;
            }
        }
        for (c, si) in counts.iter().zip(s.as_slice()) {
            let param = param_from_step(DistributionKind::Dg, *si).unwrap();
            assert!(tv_against(c, draws, &param) < 0.01);
        }
    }

    #[test]
    fn corr_mutate_zero_angles_tn_calibration() {
        let n = 6;
        let s = StepSizeVector::uniform(n, 1.0).unwrap();
        let alpha = AngleVector::zeros(n);
        let mut rng = RandomSource::new(22, 0);
        let draws = 50_000;
        let total: i64 = (0..draws)
            .map(|_| {
                corr_mutate(&s, &alpha, DistributionKind::Tn, &mut rng).unwrap().iter().map(|z| z.abs()).sum::<i64>()
            })
            .sum();
        let per_coord = total as f64 / (draws * n) as f64;
        assert!((per_coord - 1.0).abs() < 0.03, "{per_coord}");
    }

    #[test]
    fn dg_branch_replays_from_same_stream() {
        let s = StepSizeVector::new(vec![1.0, 2.0, 0.5]).unwrap();
        let alpha = AngleVector::new(3, vec![0.4, -0.2, 1.3]).unwrap();
        let mut a = RandomSource::new(5, 5);
        let mut b = RandomSource::new(5, 5);
        for _ in 0..200 {
            let z = corr_mutate(&s, &alpha, DistributionKind::Dg, &mut a).unwrap();
            let g1 = rotate_int(&gen_uncorrelated(&s, DistributionKind::Dg, &mut b), &alpha).unwrap();
            let g2 = rotate_int(&gen_uncorrelated(&s, DistributionKind::Dg, &mut b), &alpha).unwrap();
            let replay: Vec<i64> = g1.iter().zip(&g2).map(|(x, y)| x - y).collect();
            assert_eq!(z, replay);
        }
    }

    #[test]
    fn dg_cloud_is_heavier_tailed_than_tn() {
        let s = StepSizeVector::new(vec![1.0, 2.0]).unwrap();
        let alpha = AngleVector::new(2, vec![PI / 8.0]).unwrap();
        let kurtosis = |kind| {
            let mut rng = RandomSource::new(31, 0);
            let xs: Vec<f64> =
                (0..100_000).map(|_| corr_mutate(&s, &alpha, kind, &mut rng).unwrap()[1] as f64).collect();
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64;
            let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / xs.len() as f64;
            m4 / (m2 * m2)
        };
        assert!(kurtosis(DistributionKind::Dg) > kurtosis(DistributionKind::Tn));
    }

    #[test]
    fn angle_from_covariance_examples() {
        assert_eq!(angle_from_covariance(0.0, 2.0, 5.0), 0.0);
        assert!((angle_from_covariance(0.7, 2.0, 2.0) - FRAC_PI_4).abs() < 1e-15);
        assert!((angle_from_covariance(-0.7, 2.0, 2.0) + FRAC_PI_4).abs() < 1e-15);
        assert!((angle_from_covariance(1.0, 3.0, 1.0) - PI / 8.0).abs() < 1e-15);
    }

    #[test]
    fn ftn_examples() {
        let s = StepSizeVector::new(vec![1.0, 2.0, 0.5]).unwrap();
        let c = build_ftn_covariance(&s, &AngleVector::zeros(3)).unwrap().unwrap();
        for i in 0..3 {
            let sigma = tn_sigma_for_step(s.as_slice()[i]);
            assert!((c.matrix()[(i, i)] - sigma * sigma).abs() < 1e-12);
        }
        assert_eq!(c.matrix()[(0, 1)], 0.0);

        let s2 = StepSizeVector::new(vec![1.0, 2.0]).unwrap();
        let near = AngleVector::new(2, vec![FRAC_PI_4]).unwrap();
        assert!(build_ftn_covariance(&s2, &near).unwrap().is_none());

        let repaired = build_ftn_covariance(&s2, &AngleVector::new(2, vec![0.7]).unwrap()).unwrap().unwrap();
        assert!(repaired.min_eigenvalue() >= -1e-10);
    }

    #[test]
    fn ftn_zero_matrix_gives_zero_vector() {
        let c = CovarianceMatrix::new(DMatrix::zeros(3, 3)).unwrap();
        let mut rng = RandomSource::new(1, 0);
        for _ in 0..100 {
            assert_eq!(sample_ftn(&c, &mut rng).unwrap(), vec![0, 0, 0]);
        }
    }

    #[test]
    fn ftn_rejects_non_psd() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 3.0, 1.0]);
        let c = CovarianceMatrix::new(m).unwrap();
        assert!(matches!(FtnSampler::new(&c), Err(Error::NotPsd(_))));
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.2, 1.0]);
        assert!(CovarianceMatrix::new(asym).is_err());
    }

    #[test]
    fn ftn_diagonal_marginals_match_tn() {
        let sigma = 1.7;
        let c = CovarianceMatrix::new(DMatrix::from_diagonal_element(2, 2, sigma * sigma)).unwrap();
        let sampler = FtnSampler::new(&c).unwrap();
        let mut rng = RandomSource::new(44, 0);
        let draws = 100_000;
        let mut counts = BTreeMap::new();
        for _ in 0..draws {
            *counts.entry(sampler.sample(&mut rng)[0]).or_insert(0u64) += 1;
        }
        assert!(tv_against(&counts, draws, &DistParam::tn(sigma).unwrap()) < 0.01);
    }

    #[test]
    fn ftn_correlated_covariance_recovered() {
        let m = DMatrix::from_row_slice(2, 2, &[9.0, 6.0, 6.0, 16.0]);
        let c = CovarianceMatrix::new(m).unwrap();
        let sampler = FtnSampler::new(&c).unwrap();
        let mut rng = RandomSource::new(45, 0);
        let samples: Vec<IntegerVector> = (0..100_000).map(|_| sampler.sample(&mut rng)).collect();
        let cov = correlation_measures(&samples).unwrap().covariance;
        assert!((cov[(0, 1)] - 6.0).abs() < 0.05 * 6.0, "{}", cov[(0, 1)]);
    }

    #[test]
    fn correlation_measures_edge_cases() {
        assert!(correlation_measures(&[vec![1, 2]]).is_err());
        let same = vec![vec![3, -1]; 10];
        let m = correlation_measures(&same).unwrap();
        assert_eq!(m.covariance, DMatrix::zeros(2, 2));
        assert_eq!(m.abs_covariance, DMatrix::zeros(2, 2));

        let samples = vec![vec![1, -1], vec![-1, 1], vec![2, -2], vec![-2, 2]];
        let m = correlation_measures(&samples).unwrap();
        assert!((m.covariance[(0, 1)] + 10.0 / 3.0).abs() < 1e-12);
        assert!((m.abs_covariance[(0, 1)] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn uncorrelated_2d_has_small_covariance() {
        let s = StepSizeVector::new(vec![1.0, 3.0]).unwrap();
        let mut rng = RandomSource::new(46, 0);
        let samples: Vec<IntegerVector> =
            (0..50_000).map(|_| uncorrelated_mutation(&s, DistributionKind::Dg, &mut rng)).collect();
        let m = correlation_measures(&samples).unwrap();
        // sd of the product estimator is about sqrt(var1·var2/N) ≈ 0.06
        assert!(m.covariance[(0, 1)].abs() < 0.25);
    }

    proptest! {
        #[test]
        fn zero_angles_are_identity(z in proptest::collection::vec(-1_000_000i64..1_000_000, 1..12)) {
            let alpha = AngleVector::zeros(z.len());
            prop_assert_eq!(rotate_int(&z, &alpha).unwrap(), z);
        }

        #[test]
        fn quarter_turn_is_l1_isometry(x in -100_000i64..100_000, y in -100_000i64..100_000) {
            let alpha = AngleVector::new(2, vec![FRAC_PI_2]).unwrap();
            let r = rotate_int(&[x, y], &alpha).unwrap();
            prop_assert_eq!(r[0].abs() + r[1].abs(), x.abs() + y.abs());
        }

        #[test]
        fn rotation_product_preserves_l2(
            angles in proptest::collection::vec(-PI..PI, 10),
            v in proptest::collection::vec(-50.0f64..50.0, 5),
        ) {
            let rot = Rotation::new(&AngleVector::new(5, angles).unwrap());
            let mut w = v.clone();
            rot.apply(&mut w);
            let n0 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let n1 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!((n0 - n1).abs() < 1e-10);
        }

        #[test]
        fn angle_covariance_round_trip(
            alpha in -(FRAC_PI_4 - 1e-6)..(FRAC_PI_4 - 1e-6),
            v1 in 0.1f64..20.0,
            v2 in 0.1f64..20.0,
        ) {
            prop_assume!((v1 - v2).abs() > 1e-3);
            let c = covariance_from_angle(alpha, v1, v2).unwrap();
            let back = angle_from_covariance(c, v1, v2);
            prop_assert!((back - alpha).abs() < 1e-9);
        }
    }
}
