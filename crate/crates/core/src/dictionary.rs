//! Signals, discrete dictionaries and parametric (continuous) dictionaries.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use crate::error::{config, Error, Result};

/// Tolerance on the unit-norm invariant of dictionary atoms.
pub const UNIT_NORM_TOL: f64 = 1e-12;

#[inline]
pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// A dense, finite real vector in signal space.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal(Vec<f64>);

impl Signal {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return config("signal must have at least one entry");
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return config(format!("signal entry {bad} is not finite"));
        }
        Ok(Signal(values))
    }

    pub fn zeros(m: usize) -> Self {
        assert!(m > 0, "zero-length signal");
        Signal(vec![0.0; m])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn inner_product(&self, other: &Signal) -> Result<f64> {
        check_dim(self.len(), other.len())?;
        Ok(dot(&self.0, &other.0))
    }

    /// Uncounted Euclidean norm.
    pub fn norm(&self) -> f64 {
        dot(&self.0, &self.0).sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Signal {
        Signal(self.0.iter().map(|v| v * factor).collect())
    }

    /// `self += factor * other`.
    pub fn axpy(&mut self, factor: f64, other: &Signal) -> Result<()> {
        check_dim(self.len(), other.len())?;
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += factor * b;
        }
        Ok(())
    }

    pub fn distance(&self, other: &Signal) -> Result<f64> {
        check_dim(self.len(), other.len())?;
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension { expected, found })
    }
}

/// A residual together with its cached norm.
///
/// The norm is computed once when the residual is formed, so region tests
/// only pay for the center correlation.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    signal: Signal,
    norm: f64,
}

impl Residual {
    pub fn new(signal: Signal) -> Self {
        let norm = signal.norm();
        Residual { signal, norm }
    }

    pub fn signal(&self) -> &Signal {
        &self.signal
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn len(&self) -> usize {
        self.signal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signal.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.signal.as_slice()
    }
}

/// Identifies an atom: by index for discrete dictionaries, by parameter
/// value for parametric ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AtomId {
    Index(usize),
    Param(f64),
}

impl std::fmt::Display for AtomId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AtomId::Index(i) => write!(f, "{i}"),
            AtomId::Param(mu) => write!(f, "{mu}"),
        }
    }
}

/// A finite, indexed collection of unit-norm atoms of equal length.
#[derive(Debug, Clone)]
pub struct DiscreteDictionary {
    atoms: Vec<Signal>,
    labels: Option<Vec<f64>>,
    dim: usize,
}

impl DiscreteDictionary {
    pub fn new(atoms: Vec<Signal>, labels: Option<Vec<f64>>) -> Result<Self> {
        let Some(first) = atoms.first() else {
            return config("dictionary must contain at least one atom");
        };
        let dim = first.len();
        for (i, a) in atoms.iter().enumerate() {
            check_dim(dim, a.len())?;
            let norm = a.norm();
            if (norm - 1.0).abs() > UNIT_NORM_TOL {
                return config(format!("atom {i} has norm {norm}, expected 1"));
            }
        }
        if let Some(l) = &labels {
            if l.len() != atoms.len() {
                return config("label count does not match atom count");
            }
        }
        Ok(DiscreteDictionary { atoms, labels, dim })
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atom(&self, index: usize) -> &Signal {
        &self.atoms[index]
    }

    pub fn atoms(&self) -> &[Signal] {
        &self.atoms
    }

    pub fn label(&self, index: usize) -> Option<f64> {
        self.labels.as_ref().map(|l| l[index])
    }

    /// Writes one atom per row as comma-separated reals.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        for a in &self.atoms {
            w.write_record(a.as_slice().iter().map(|v| v.to_string()))?;
        }
        w.flush()
    }
}

/// Real-valued steering vector of a half-wavelength uniform linear array with
/// `m / 2` sensors: real parts stacked over imaginary parts, unit norm.
pub fn steering_vector(m: usize, theta: f64) -> Signal {
    let sensors = m / 2;
    let phase = PI * theta.sin();
    // phase reference at the array centroid
    let mid = (sensors as f64 - 1.0) / 2.0;
    let mut values = vec![0.0; m];
    for j in 0..sensors {
        let (s, c) = (phase * (j as f64 - mid)).sin_cos();
        values[j] = c;
        values[sensors + j] = s;
    }
    let norm = dot(&values, &values).sqrt();
    values.iter_mut().for_each(|v| *v /= norm);
    Signal(values)
}

/// `n` steering vectors on a uniform angle grid spanning `angle_range`
/// (radians, inclusive). Labels carry the angles.
pub fn build_doa_dictionary(n: usize, m: usize, angle_range: (f64, f64)) -> Result<DiscreteDictionary> {
    let (lo, hi) = angle_range;
    if n < 2 {
        return config("DOA dictionary needs n >= 2");
    }
    if m < 2 || !m.is_multiple_of(2) {
        return config(format!("DOA dictionary needs an even m >= 2, got {m}"));
    }
    if !(lo.is_finite() && hi.is_finite()) || lo < -FRAC_PI_2 || hi > FRAC_PI_2 || lo >= hi {
        return config(format!(
            "angle range [{lo}, {hi}] must be an increasing sub-interval of [-pi/2, pi/2]"
        ));
    }
    let step = (hi - lo) / (n - 1) as f64;
    let angles: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
    let atoms = angles.iter().map(|&t| steering_vector(m, t)).collect();
    DiscreteDictionary::new(atoms, Some(angles))
}

/// A dictionary of atoms `a(mu)` indexed by a scalar parameter over a closed
/// interval.
pub trait ParametricDictionary: Sync {
    fn domain(&self) -> (f64, f64);

    fn dim(&self) -> usize;

    /// Spacing used whenever a finite sampling of the parameter is needed.
    fn grid_resolution(&self) -> f64;

    /// Writes the unit-norm atom for `mu` into `out` (length [`dim`](Self::dim)).
    fn synthesize_into(&self, mu: f64, out: &mut [f64]) -> Result<()>;

    fn synthesize(&self, mu: f64) -> Result<Signal> {
        let mut v = vec![0.0; self.dim()];
        self.synthesize_into(mu, &mut v)?;
        Ok(Signal(v))
    }

    /// Uniform grid over the domain, endpoints included.
    fn grid(&self) -> Vec<f64> {
        let (lo, hi) = self.domain();
        let h = self.grid_resolution();
        let steps = ((hi - lo) / h).round() as usize;
        let mut g: Vec<f64> = (0..=steps).map(|i| (lo + h * i as f64).min(hi)).collect();
        if let Some(last) = g.last_mut() {
            *last = hi;
        }
        g
    }

    fn contains(&self, mu: f64) -> bool {
        let (lo, hi) = self.domain();
        mu >= lo && mu <= hi
    }
}

/// Gaussian atoms `exp(-(s - mu)^2 / (2 sigma^2))` sampled at `m` uniform
/// points of the parameter interval, then l2-normalized.
#[derive(Debug, Clone)]
pub struct GaussianDictionary {
    lo: f64,
    hi: f64,
    sigma2: f64,
    samples: Vec<f64>,
    grid_resolution: f64,
}

pub const DEFAULT_GRID_RESOLUTION: f64 = 0.01;

pub fn build_gaussian_dictionary(mu_range: (f64, f64), sigma2: f64, m: usize) -> Result<GaussianDictionary> {
    let (lo, hi) = mu_range;
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return config(format!("sigma2 must be positive, got {sigma2}"));
    }
    if m < 2 {
        return config("Gaussian dictionary needs m >= 2");
    }
    if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
        return config(format!("invalid parameter range [{lo}, {hi}]"));
    }
    let step = (hi - lo) / (m - 1) as f64;
    let samples = (0..m).map(|j| lo + step * j as f64).collect();
    Ok(GaussianDictionary {
        lo,
        hi,
        sigma2,
        samples,
        grid_resolution: DEFAULT_GRID_RESOLUTION,
    })
}

impl GaussianDictionary {
    pub fn with_grid_resolution(mut self, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return config(format!("grid resolution must be positive, got {h}"));
        }
        self.grid_resolution = h;
        Ok(self)
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }
}

impl ParametricDictionary for GaussianDictionary {
    fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    fn dim(&self) -> usize {
        self.samples.len()
    }

    fn grid_resolution(&self) -> f64 {
        self.grid_resolution
    }

    fn synthesize_into(&self, mu: f64, out: &mut [f64]) -> Result<()> {
        check_dim(self.samples.len(), out.len())?;
        if !self.contains(mu) {
            return Err(Error::Domain {
                value: mu,
                lo: self.lo,
                hi: self.hi,
            });
        }
        let scale = -0.5 / self.sigma2;
        for (o, s) in out.iter_mut().zip(&self.samples) {
            let d = s - mu;
            *o = (scale * d * d).exp();
        }
        let norm = dot(out, out).sqrt();
        if norm == 0.0 {
            return Err(Error::Internal(format!("atom at {mu} underflows to zero")));
        }
        out.iter_mut().for_each(|v| *v /= norm);
        Ok(())
    }
}
