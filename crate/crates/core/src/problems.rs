//! Integer benchmark objectives: the integer Sphere and the quadratic family
//! `f(x) = (1/c)·(x − ξ0)ᵀ H (x − ξ0)` over `Z^n`.

use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_id, RandomSource};

/// Condition numbers of the benchmark suite.
pub const CONDITION_LEVELS: [f64; 6] = [1e1, 1e2, 1e3, 1e4, 1e5, 1e6];

/// Half-width of the integer box the optimum location is drawn from.
pub const XI0_BOX: i64 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HessianKind {
    Discus,
    Cigar,
    RotatedEllipse,
    HadamardEllipse,
    Sphere,
}

impl HessianKind {
    /// The four quadratic benchmark kinds, separable pair first.
    pub const BENCHMARK: [HessianKind; 4] = [Self::Discus, Self::Cigar, Self::RotatedEllipse, Self::HadamardEllipse];

    pub fn is_separable(self) -> bool {
        matches!(self, Self::Discus | Self::Cigar | Self::Sphere)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Discus => "discus",
            Self::Cigar => "cigar",
            Self::RotatedEllipse => "rotated-ellipse",
            Self::HadamardEllipse => "hadamard-ellipse",
            Self::Sphere => "sphere",
        }
    }

    fn code(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for HessianKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HessianKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "discus" => Ok(Self::Discus),
            "cigar" => Ok(Self::Cigar),
            "rotated-ellipse" | "rotated" => Ok(Self::RotatedEllipse),
            "hadamard-ellipse" | "hadamard" => Ok(Self::HadamardEllipse),
            "sphere" => Ok(Self::Sphere),
            other => Err(Error::InvalidInstance(format!("unknown problem kind '{other}'"))),
        }
    }
}

/// Sylvester-construction Hadamard matrix of order `n = 2^k`.
pub fn hadamard(n: usize) -> Result<DMatrix<i64>> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::InvalidInstance(format!("Hadamard order {n} is not a power of two")));
    }
    let mut h = DMatrix::from_element(1, 1, 1i64);
    while h.nrows() < n {
        let m = h.nrows();
        let mut next = DMatrix::zeros(2 * m, 2 * m);
        next.view_mut((0, 0), (m, m)).copy_from(&h);
        next.view_mut((0, m), (m, m)).copy_from(&h);
        next.view_mut((m, 0), (m, m)).copy_from(&h);
        next.view_mut((m, m), (m, m)).copy_from(&(-&h));
        h = next;
    }
    Ok(h)
}

fn ellipse_diagonal(n: usize, c: f64) -> DVector<f64> {
    if n == 1 {
        return DVector::from_element(1, 1.0);
    }
    DVector::from_fn(n, |i, _| c.powf(i as f64 / (n - 1) as f64))
}

/// Rotation by `theta` in the plane spanned by the normalized alternating
/// vectors `(1,0,1,0,…)` and `(0,1,0,1,…)`.
fn alternating_plane_rotation(n: usize, theta: f64) -> DMatrix<f64> {
    let norm_u = (n.div_ceil(2) as f64).sqrt();
    let norm_v = ((n / 2) as f64).sqrt();
    let u = DVector::from_fn(n, |i, _| if i % 2 == 0 { 1.0 / norm_u } else { 0.0 });
    let v = DVector::from_fn(n, |i, _| if i % 2 == 1 { 1.0 / norm_v } else { 0.0 });
    let (sin, cos) = theta.sin_cos();
    DMatrix::identity(n, n)
        + (&u * u.transpose() + &v * v.transpose()) * (cos - 1.0)
        + (&v * u.transpose() - &u * v.transpose()) * sin
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

pub fn make_hessian(kind: HessianKind, n: usize, c: f64) -> Result<DMatrix<f64>> {
    if !(c >= 1.0 && c.is_finite()) {
        return Err(Error::InvalidInstance(format!("condition number {c} must be >= 1")));
    }
    if kind == HessianKind::Sphere {
        if n == 0 {
            return Err(Error::InvalidInstance("dimension must be positive".into()));
        }
        return Ok(DMatrix::identity(n, n));
    }
    if n < 2 {
        return Err(Error::InvalidInstance(format!("dimension {n} must be at least 2")));
    }
    let h = match kind {
        HessianKind::Discus => {
            let mut d = DVector::from_element(n, 1.0);
            d[0] = c;
            DMatrix::from_diagonal(&d)
        }
        HessianKind::Cigar => {
            let mut d = DVector::from_element(n, c);
            d[0] = 1.0;
            DMatrix::from_diagonal(&d)
        }
        HessianKind::RotatedEllipse => {
            let o = alternating_plane_rotation(n, FRAC_PI_4);
            let ellipse = DMatrix::from_diagonal(&ellipse_diagonal(n, c));
            symmetrize(&o * ellipse * o.transpose())
        }
        HessianKind::HadamardEllipse => {
            let s = hadamard(n)?.map(|x| x as f64) / (n as f64).sqrt();
            let ellipse = DMatrix::from_diagonal(&ellipse_diagonal(n, c));
            // the normalized Hadamard matrix is symmetric and its own inverse
            symmetrize(&s * ellipse * &s)
        }
        HessianKind::Sphere => unreachable!(),
    };
    Ok(h)
}

/// Anything the strategies can minimize over `Z^n`.
pub trait Objective: Sync {
    fn dim(&self) -> usize;

    /// Objective value; `x` must have length [`Objective::dim`].
    fn value(&self, x: &[i64]) -> f64;
}

/// Serializable identity of an instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceDescriptor {
    pub kind: HessianKind,
    pub n: usize,
    pub c: f64,
    pub seed: u64,
    pub xi0: Vec<i64>,
}

impl InstanceDescriptor {
    /// Stable key `kind/n/c/seed` used to group runs by instance.
    pub fn key(&self) -> String {
        format!("{}/n{}/c{:e}/s{}", self.kind, self.n, self.c, self.seed)
    }
}

/// An immutable quadratic instance with materialized Hessian.
#[derive(Clone, Debug)]
pub struct QuadraticInstance {
    kind: HessianKind,
    n: usize,
    c: f64,
    seed: u64,
    xi0: Vec<i64>,
    hessian: DMatrix<f64>,
    diagonal: bool,
}

impl QuadraticInstance {
    /// Builds the instance; `ξ0` is drawn uniformly from `[-10, 10]^n` by the
    /// instance seed, so `(kind, n, c, seed)` determines everything. The
    /// Sphere ignores `c`.
    pub fn new(kind: HessianKind, n: usize, c: f64, seed: u64) -> Result<Self> {
        let c = if kind == HessianKind::Sphere { 1.0 } else { c };
        let hessian = make_hessian(kind, n, c)?;
        let mut rng = RandomSource::new(seed, stream_id(&[kind.code(), n as u64, c.to_bits()]));
        let xi0 = (0..n).map(|_| rng.int_inclusive(-XI0_BOX, XI0_BOX)).collect();
        Self::with_optimum(kind, c, seed, xi0, hessian)
    }

    pub fn sphere(n: usize, seed: u64) -> Result<Self> {
        Self::new(HessianKind::Sphere, n, 1.0, seed)
    }

    fn with_optimum(kind: HessianKind, c: f64, seed: u64, xi0: Vec<i64>, hessian: DMatrix<f64>) -> Result<Self> {
        let n = hessian.nrows();
        if xi0.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: xi0.len() });
        }
        let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || hessian[(i, j)] == 0.0));
        Ok(Self { kind, n, c, seed, xi0, hessian, diagonal })
    }

    pub fn from_descriptor(d: &InstanceDescriptor) -> Result<Self> {
        let hessian = make_hessian(d.kind, d.n, d.c)?;
        Self::with_optimum(d.kind, d.c, d.seed, d.xi0.clone(), hessian)
    }

    pub fn kind(&self) -> HessianKind {
        self.kind
    }

    pub fn condition(&self) -> f64 {
        self.c
    }

    pub fn xi0(&self) -> &[i64] {
        &self.xi0
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.hessian
    }

    pub fn descriptor(&self) -> InstanceDescriptor {
        InstanceDescriptor { kind: self.kind, n: self.n, c: self.c, seed: self.seed, xi0: self.xi0.clone() }
    }

    /// `(1/c)·(x − ξ0)ᵀH(x − ξ0)` with a dimension check.
    pub fn evaluate(&self, x: &[i64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: x.len() });
        }
        Ok(self.value(x))
    }

    /// Euclidean distance of `x` to the optimum location.
    pub fn distance_to_optimum(&self, x: &[i64]) -> f64 {
        x.iter().zip(&self.xi0).map(|(a, b)| ((a - b) as f64).powi(2)).sum::<f64>().sqrt()
    }
}

impl Objective for QuadraticInstance {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[i64]) -> f64 {
        debug_assert_eq!(x.len(), self.n);
        let d: Vec<f64> = x.iter().zip(&self.xi0).map(|(a, b)| a.saturating_sub(*b) as f64).collect();
        let mut f = 0.0;
        if self.diagonal {
            for (i, di) in d.iter().enumerate() {
                f += self.hessian[(i, i)] * di * di;
            }
        } else {
            for (j, dj) in d.iter().enumerate() {
                if *dj == 0.0 {
                    continue;
                }
                let col = self.hessian.column(j);
                let mut acc = 0.0;
                for (h, di) in col.iter().zip(&d) {
                    acc += h * di;
                }
                f += acc * dj;
            }
        }
        // quadratic form of a PD matrix; clamp rounding noise at the optimum
        (f / self.c).max(0.0)
    }
}

/// `Σ (x_i − ξ0_i)²` in exact integer arithmetic.
pub fn sphere(x: &[i64], xi0: &[i64]) -> Result<f64> {
    if x.len() != xi0.len() {
        return Err(Error::DimensionMismatch { expected: xi0.len(), got: x.len() });
    }
    let sum: i128 = x.iter().zip(xi0).map(|(a, b)| (*a as i128 - *b as i128).pow(2)).sum();
    Ok(sum as f64)
}

/// The 24-instance quadratic suite (4 kinds × 6 condition levels) in dimension `n`.
pub fn benchmark_suite(n: usize, seed: u64) -> Result<Vec<QuadraticInstance>> {
    let mut out = Vec::with_capacity(HessianKind::BENCHMARK.len() * CONDITION_LEVELS.len());
    for kind in HessianKind::BENCHMARK {
        for c in CONDITION_LEVELS {
            out.push(QuadraticInstance::new(kind, n, c, seed)?);
        }
    }
    Ok(out)
}
