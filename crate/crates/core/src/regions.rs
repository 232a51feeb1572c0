//! Sphere and dome test regions.
//!
//! For a residual `r` with `c = <r, t>` and `rho = ||r||`:
//!
//! * sphere `S(t, eps) = {a : ||a - t|| <= eps}`:
//!   `max |<r, a>| = |c| + eps * rho` (Cauchy-Schwarz, attained at `t +- eps r / rho`);
//! * dome `D(t, eps) = {a : <t, a> >= eps, ||a|| = 1}` with `||t|| = 1`:
//!   the maximizer lies in `span{t, r}`. Writing `a = cos(phi) t + sin(phi) u`
//!   with `u` the unit component of `r` orthogonal to `t`, the correlation is
//!   `rho * cos(phi - phi0)` with `phi0 = atan2(w, |c|)`, `w = sqrt(rho^2 - c^2)`,
//!   and the cap is `phi <= acos(eps)`.
//!
//! Both bounds need only the center correlation, which the caller supplies
//! or which is computed with one counted inner product.

use std::str::FromStr;

use crate::dictionary::{check_dim, dot, DiscreteDictionary, ParametricDictionary, Residual, Signal};
use crate::error::{config, Error, Result};
use crate::exec::Exec;
use crate::instrumentation::{CostCategory, CostCounter};

/// Relative shrink applied to a tuned sphere radius before screening, so the
/// strict test `bound < tau` holds.
pub const SPHERE_TUNE_MARGIN: f64 = 1e-9;
/// Absolute increase applied to a tuned dome threshold before screening.
pub const DOME_TUNE_MARGIN: f64 = 1e-9;

pub const BISECTION_TOL: f64 = 1e-6;
pub const BISECTION_MAX_ITER: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    Sphere,
    Dome,
}

impl FromStr for Geometry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sphere" => Ok(Geometry::Sphere),
            "dome" => Ok(Geometry::Dome),
            other => config(format!("unknown region geometry '{other}'")),
        }
    }
}

impl std::fmt::Display for Geometry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Geometry::Sphere => "sphere",
            Geometry::Dome => "dome",
        })
    }
}

impl Geometry {
    /// Closed-form `max |<r, a>|` over the region given the center correlation.
    pub fn bound(self, center_corr: f64, rnorm: f64, size: f64) -> f64 {
        match self {
            Geometry::Sphere => sphere_bound(center_corr, rnorm, size),
            Geometry::Dome => dome_bound(center_corr, rnorm, size),
        }
    }

    /// Critical size at which the bound reaches `tau`, if any region of this
    /// geometry centered there can pass the test.
    pub fn tune(self, center_corr: f64, rnorm: f64, tau: f64) -> Option<f64> {
        match self {
            Geometry::Sphere => tune_sphere_radius(center_corr, rnorm, tau),
            Geometry::Dome => tune_dome_threshold(center_corr, rnorm, tau),
        }
    }

    /// Tuned size nudged onto the passing side of the strict test.
    pub fn tuned_screening_size(self, center_corr: f64, rnorm: f64, tau: f64) -> Option<f64> {
        let critical = self.tune(center_corr, rnorm, tau)?;
        Some(match self {
            Geometry::Sphere => critical * (1.0 - SPHERE_TUNE_MARGIN),
            Geometry::Dome => (critical + DOME_TUNE_MARGIN).min(1.0),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphereRegion {
    pub center: Signal,
    pub radius: f64,
}

impl SphereRegion {
    pub fn new(center: Signal, radius: f64) -> Result<Self> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return config(format!("sphere radius must be finite and >= 0, got {radius}"));
        }
        Ok(SphereRegion { center, radius })
    }

    pub fn contains(&self, a: &Signal) -> Result<bool> {
        Ok(self.center.distance(a)? <= self.radius)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomeRegion {
    pub center: Signal,
    pub threshold: f64,
}

impl DomeRegion {
    pub fn new(center: Signal, threshold: f64) -> Result<Self> {
        let norm = center.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return config(format!("dome center must be unit norm, got {norm}"));
        }
        if !(-1.0..=1.0).contains(&threshold) {
            return config(format!("dome threshold must lie in [-1, 1], got {threshold}"));
        }
        Ok(DomeRegion { center, threshold })
    }

    pub fn contains(&self, a: &Signal) -> Result<bool> {
        Ok(self.center.inner_product(a)? >= self.threshold)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Sphere(SphereRegion),
    Dome(DomeRegion),
}

impl Region {
    pub fn new(geometry: Geometry, center: Signal, size: f64) -> Result<Self> {
        Ok(match geometry {
            Geometry::Sphere => Region::Sphere(SphereRegion::new(center, size)?),
            Geometry::Dome => Region::Dome(DomeRegion::new(center, size)?),
        })
    }

    pub fn geometry(&self) -> Geometry {
        match self {
            Region::Sphere(_) => Geometry::Sphere,
            Region::Dome(_) => Geometry::Dome,
        }
    }

    pub fn center(&self) -> &Signal {
        match self {
            Region::Sphere(s) => &s.center,
            Region::Dome(d) => &d.center,
        }
    }

    pub fn size(&self) -> f64 {
        match self {
            Region::Sphere(s) => s.radius,
            Region::Dome(d) => d.threshold,
        }
    }

    /// `max_{a in region} |<r, a>|`, one counted test inner product.
    pub fn max_abs(&self, r: &Residual, counter: &CostCounter) -> Result<f64> {
        match self {
            Region::Sphere(s) => sphere_max_abs(r, s, counter),
            Region::Dome(d) => dome_max_abs(r, d, counter),
        }
    }

    pub fn contains(&self, a: &Signal) -> Result<bool> {
        match self {
            Region::Sphere(s) => s.contains(a),
            Region::Dome(d) => d.contains(a),
        }
    }
}

/// An ordered, nonempty list of regions.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionSet {
    regions: Vec<Region>,
}

impl RegionSet {
    pub fn new(regions: Vec<Region>) -> Result<Self> {
        if regions.is_empty() {
            return config("region set must contain at least one region");
        }
        let dim = regions[0].center().len();
        for r in &regions {
            check_dim(dim, r.center().len())?;
        }
        Ok(RegionSet { regions })
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Region> {
        self.regions.iter()
    }
}

pub fn sphere_bound(center_corr: f64, rnorm: f64, radius: f64) -> f64 {
    center_corr.abs() + radius * rnorm
}

pub fn dome_bound(center_corr: f64, rnorm: f64, threshold: f64) -> f64 {
    if rnorm == 0.0 {
        return 0.0;
    }
    let c = center_corr.abs();
    if c >= threshold * rnorm {
        return rnorm;
    }
    let w = (rnorm * rnorm - c * c).max(0.0).sqrt();
    threshold * c + (1.0 - threshold * threshold).max(0.0).sqrt() * w
}

pub fn sphere_max_abs(r: &Residual, region: &SphereRegion, counter: &CostCounter) -> Result<f64> {
    let c = counter.inner_product(&region.center, r.signal(), CostCategory::Test)?;
    Ok(sphere_bound(c, r.norm(), region.radius))
}

pub fn dome_max_abs(r: &Residual, region: &DomeRegion, counter: &CostCounter) -> Result<f64> {
    let c = counter.inner_product(&region.center, r.signal(), CostCategory::Test)?;
    Ok(dome_bound(c, r.norm(), region.threshold))
}

/// Critical sphere radius `(tau - |c|) / rho`; `None` when no positive
/// radius exists or the residual vanishes.
pub fn tune_sphere_radius(center_corr: f64, rnorm: f64, tau: f64) -> Option<f64> {
    if rnorm == 0.0 {
        return None;
    }
    let eps = (tau - center_corr.abs()) / rnorm;
    (eps > 0.0).then_some(eps)
}

/// Critical dome threshold: every `eps' > eps*` passes `dome_bound < tau`.
/// Returns `-1` when `tau > rho` (every direction passes) and `None` when
/// `tau <= |c|` (no cap passes).
pub fn tune_dome_threshold(center_corr: f64, rnorm: f64, tau: f64) -> Option<f64> {
    if rnorm == 0.0 {
        return None;
    }
    let c = center_corr.abs();
    if tau > rnorm {
        return Some(-1.0);
    }
    if tau <= c {
        return None;
    }
    let w = (rnorm * rnorm - c * c).max(0.0).sqrt();
    let phi0 = w.atan2(c);
    let alpha = (tau / rnorm).min(1.0).acos();
    Some((phi0 - alpha).cos())
}

/// Same root as [`tune_dome_threshold`], found by bisection of
/// `h(eps) = eps |c| + sqrt(1 - eps^2) w` on its decreasing branch.
pub fn tune_dome_threshold_bisection(center_corr: f64, rnorm: f64, tau: f64) -> Option<f64> {
    if rnorm == 0.0 {
        return None;
    }
    let c = center_corr.abs();
    if tau > rnorm {
        return Some(-1.0);
    }
    if tau <= c {
        return None;
    }
    let w = (rnorm * rnorm - c * c).max(0.0).sqrt();
    let h = |e: f64| e * c + (1.0 - e * e).max(0.0).sqrt() * w;
    let (mut lo, mut hi) = ((c / rnorm).min(1.0), 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) >= tau {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(hi)
}

pub fn tune_epsilon_sphere(r: &Residual, t: &Signal, tau: f64, counter: &CostCounter) -> Result<Option<f64>> {
    let c = counter.inner_product(t, r.signal(), CostCategory::Test)?;
    Ok(tune_sphere_radius(c, r.norm(), tau))
}

pub fn tune_epsilon_dome(r: &Residual, t: &Signal, tau: f64, counter: &CostCounter) -> Result<Option<f64>> {
    let c = counter.inner_product(t, r.signal(), CostCategory::Test)?;
    Ok(tune_dome_threshold(c, r.norm(), tau))
}

/// Indices of dictionary atoms inside `region`, by linear scan.
pub fn members_discrete(region: &Region, dict: &DiscreteDictionary) -> Result<Vec<usize>> {
    check_dim(dict.dim(), region.center().len())?;
    let mut out = Vec::new();
    for (i, a) in dict.atoms().iter().enumerate() {
        if region.contains(a)? {
            out.push(i);
        }
    }
    Ok(out)
}

/// Per-center sorted membership keys for a fixed set of atom centers, so a
/// runtime size resolves to a prefix by binary search.
#[derive(Debug, Clone)]
pub struct MembershipIndex {
    geometry: Geometry,
    // (key, atom index) sorted so members form a prefix
    entries: Vec<Vec<(f64, usize)>>,
}

impl MembershipIndex {
    /// Costs `centers.len() * dict.len()` setup inner products.
    pub fn build(
        geometry: Geometry,
        centers: &[usize],
        dict: &DiscreteDictionary,
        counter: &CostCounter,
        exec: Exec,
    ) -> Result<Self> {
        if let Some(&bad) = centers.iter().find(|&&c| c >= dict.len()) {
            return config(format!("region center index {bad} out of range"));
        }
        let entries = exec.map_slice(centers, |&ci| {
            let t = dict.atom(ci);
            let mut keys: Vec<(f64, usize)> = dict
                .atoms()
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    let key = match geometry {
                        Geometry::Dome => dot(t.as_slice(), a.as_slice()),
                        Geometry::Sphere => t.distance(a).expect("same dictionary"),
                    };
                    (key, i)
                })
                .collect();
            match geometry {
                Geometry::Dome => keys.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1))),
                Geometry::Sphere => keys.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1))),
            }
            keys
        });
        counter.add(CostCategory::Setup, (centers.len() * dict.len()) as u64);
        Ok(MembershipIndex { geometry, entries })
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    /// Members of region `l` at the given size, in key order.
    pub fn members(&self, l: usize, size: f64) -> impl Iterator<Item = usize> + '_ {
        let keys = &self.entries[l];
        let count = match self.geometry {
            Geometry::Dome => keys.partition_point(|&(k, _)| k >= size),
            Geometry::Sphere => keys.partition_point(|&(k, _)| k <= size),
        };
        keys[..count].iter().map(|&(_, i)| i)
    }
}

/// Closed parameter interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi);
        Interval { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

/// Parameter interval of atoms `a(mu)` with `||a(mu) - a(center_mu)|| <= radius`.
///
/// Each side is inverted separately by bisection, relying on the distance
/// growing with `|mu - center_mu|`. The returned bounds always lie inside
/// the region. Distance evaluations are booked as setup cost.
pub fn members_interval<D: ParametricDictionary + ?Sized>(
    dict: &D,
    center_mu: f64,
    radius: f64,
    counter: &CostCounter,
) -> Result<Interval> {
    let (lo, hi) = dict.domain();
    if !dict.contains(center_mu) {
        return Err(Error::Domain {
            value: center_mu,
            lo,
            hi,
        });
    }
    if radius.is_nan() || radius < 0.0 {
        return config(format!("sphere radius must be >= 0, got {radius}"));
    }
    let center = dict.synthesize(center_mu)?;
    let mut buf = vec![0.0; dict.dim()];
    let mut dist = |mu: f64| -> Result<f64> {
        dict.synthesize_into(mu, &mut buf)?;
        counter.add(CostCategory::Setup, 1);
        let s: f64 = buf.iter().zip(center.as_slice()).map(|(a, b)| (a - b) * (a - b)).sum();
        Ok(s.sqrt())
    };
    let right = half_width(center_mu, hi - center_mu, 1.0, radius, &mut dist)?;
    let left = half_width(center_mu, center_mu - lo, -1.0, radius, &mut dist)?;
    Ok(Interval::new((center_mu - left).max(lo), (center_mu + right).min(hi)))
}

fn half_width(
    center_mu: f64,
    reach: f64,
    side: f64,
    radius: f64,
    dist: &mut impl FnMut(f64) -> Result<f64>,
) -> Result<f64> {
    if reach <= 0.0 {
        return Ok(0.0);
    }
    let at = |d: f64| center_mu + side * d;
    let d_edge = dist(at(reach))?;
    if d_edge <= radius {
        return Ok(reach);
    }
    let (mut inside, mut outside) = (0.0, reach);
    let (mut d_in, mut d_out) = (0.0, d_edge);
    for _ in 0..BISECTION_MAX_ITER {
        if outside - inside <= BISECTION_TOL {
            break;
        }
        let mid = 0.5 * (inside + outside);
        let d_mid = dist(at(mid))?;
        if d_mid < d_in - 1e-12 || d_mid > d_out + 1e-12 {
            return Err(Error::Internal(format!(
                "atom distance not monotone around parameter {center_mu} (offset {mid})"
            )));
        }
        if d_mid <= radius {
            inside = mid;
            d_in = d_mid;
        } else {
            outside = mid;
            d_out = d_mid;
        }
    }
    Ok(inside)
}
