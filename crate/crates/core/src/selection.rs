//! The atom-selection step: `argmax_a |<r, a>|`.
//!
//! Exhaustive variants scan the whole dictionary (continuous dictionaries
//! are scanned on a grid, then refined by golden-section search). Screened
//! variants run a screen first and scan only the survivors. Ties go to the
//! lowest index / lowest parameter value.

use crate::dictionary::{check_dim, dot, AtomId, DiscreteDictionary, ParametricDictionary, Residual, Signal};
use crate::error::{config, Error, Result};
use crate::exec::{argmax, Exec};
use crate::instrumentation::{CostCategory, CostCounter};
use crate::regions::Interval;
use crate::screening::{surviving_intervals, ContinuousScreener, DiscreteScreener, ScreeningReport};

/// Parameter tolerance of the golden-section refinement.
pub const REFINE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub atom: AtomId,
    /// `|<r, a>|` at the selected atom.
    pub value: f64,
    pub report: Option<ScreeningReport>,
}

/// Something that can run the selection step against a residual.
pub trait Selector: Sync {
    fn dim(&self) -> usize;

    fn atom(&self, id: AtomId) -> Result<Signal>;

    /// Selects the best atom, skipping `excluded`.
    fn select(&self, r: &Residual, excluded: &[AtomId], counter: &CostCounter) -> Result<Selection>;
}

fn scan_indices(
    r: &Residual,
    dict: &DiscreteDictionary,
    candidates: &[usize],
    counter: &CostCounter,
    exec: Exec,
) -> Option<(usize, f64)> {
    let values = exec.map_slice(candidates, |&i| dot(dict.atom(i).as_slice(), r.as_slice()).abs());
    counter.add(CostCategory::ReducedScan, candidates.len() as u64);
    argmax(&values).map(|(j, v)| (candidates[j], v))
}

/// Exhaustive discrete selection: exactly `n` counted inner products.
pub fn select_exhaustive_discrete(
    r: &Residual,
    dict: &DiscreteDictionary,
    counter: &CostCounter,
    exec: Exec,
) -> Result<(usize, f64)> {
    check_dim(dict.dim(), r.len())?;
    let all: Vec<usize> = (0..dict.len()).collect();
    scan_indices(r, dict, &all, counter, exec).ok_or_else(|| Error::Config("empty dictionary".into()))
}

/// Screened discrete selection: screen, then scan the surviving atoms.
pub fn select_screened_discrete(
    r: &Residual,
    screener: &DiscreteScreener<'_>,
    counter: &CostCounter,
) -> Result<(usize, f64, ScreeningReport)> {
    select_screened_discrete_excluding(r, screener, &[], counter)
}

fn select_screened_discrete_excluding(
    r: &Residual,
    screener: &DiscreteScreener<'_>,
    excluded: &[usize],
    counter: &CostCounter,
) -> Result<(usize, f64, ScreeningReport)> {
    let dict = screener.dictionary();
    let report = screener.screen(r, counter)?;
    let survivors: Vec<usize> = (0..dict.len())
        .filter(|&i| !report.removed.contains(AtomId::Index(i)) && !excluded.contains(&i))
        .collect();
    let (i, v) = scan_indices(r, dict, &survivors, counter, screener.exec())
        .ok_or_else(|| Error::Internal("screening removed every atom".into()))?;
    Ok((i, v, report))
}

/// Golden-section search for the maximum of `f` on `[a, b]`.
///
/// Returns `(x, f(x))` for the best point evaluated.
pub fn golden_section_max<F>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

fn correlation<D: ParametricDictionary + ?Sized>(dict: &D, r: &Residual, mu: f64) -> Result<f64> {
    let mut buf = vec![0.0; dict.dim()];
    dict.synthesize_into(mu, &mut buf)?;
    Ok(dot(&buf, r.as_slice()).abs())
}

/// Scans `points` (ascending), then refines the best one within one grid
/// step. Every correlation is one reduced-scan product.
fn scan_and_refine<D: ParametricDictionary + ?Sized>(
    r: &Residual,
    dict: &D,
    points: &[f64],
    counter: &CostCounter,
    exec: Exec,
) -> Result<Option<(f64, f64)>> {
    let values = exec
        .map_slice(points, |&mu| correlation(dict, r, mu))
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    counter.add(CostCategory::ReducedScan, points.len() as u64);
    let Some((j, best)) = argmax(&values) else {
        return Ok(None);
    };
    let center = points[j];
    let (lo, hi) = dict.domain();
    let h = dict.grid_resolution();
    let (a, b) = ((center - h).max(lo), (center + h).min(hi));
    let (mu, v) = golden_section_max(
        |mu| {
            counter.add(CostCategory::ReducedScan, 1);
            correlation(dict, r, mu)
        },
        a,
        b,
        REFINE_TOL,
    )?;
    Ok(Some(if v > best { (mu, v) } else { (center, best) }))
}

fn near_excluded(mu: f64, excluded: &[f64], h: f64) -> bool {
    excluded.iter().any(|&e| (mu - e).abs() <= h)
}

fn excluded_params(excluded: &[AtomId]) -> Vec<f64> {
    excluded
        .iter()
        .filter_map(|id| match id {
            AtomId::Param(mu) => Some(*mu),
            AtomId::Index(_) => None,
        })
        .collect()
}

/// Grid scan plus golden-section refinement over the whole parameter domain.
pub fn select_exhaustive_continuous<D: ParametricDictionary + ?Sized>(
    r: &Residual,
    dict: &D,
    counter: &CostCounter,
    exec: Exec,
) -> Result<(f64, f64)> {
    exhaustive_continuous_excluding(r, dict, &[], counter, exec)
}

fn exhaustive_continuous_excluding<D: ParametricDictionary + ?Sized>(
    r: &Residual,
    dict: &D,
    excluded: &[f64],
    counter: &CostCounter,
    exec: Exec,
) -> Result<(f64, f64)> {
    check_dim(dict.dim(), r.len())?;
    let h = dict.grid_resolution();
    let points: Vec<f64> = dict
        .grid()
        .into_iter()
        .filter(|&mu| !near_excluded(mu, excluded, h))
        .collect();
    scan_and_refine(r, dict, &points, counter, exec)?.ok_or_else(|| Error::Config("no admissible grid point".into()))
}

/// Grid points that survived screening, plus the midpoint of any surviving
/// interval too narrow to hold a grid point.
fn surviving_points(grid: &[f64], survivors: &[Interval]) -> Vec<f64> {
    let mut points = Vec::new();
    let mut g = 0;
    for iv in survivors {
        while g < grid.len() && grid[g] < iv.lo {
            g += 1;
        }
        let start = points.len();
        while g < grid.len() && grid[g] <= iv.hi {
            if grid[g] > iv.lo || iv.lo == grid[0] {
                points.push(grid[g]);
            }
            g += 1;
        }
        if points.len() == start {
            points.push(0.5 * (iv.lo + iv.hi));
        }
    }
    points
}

/// Screened continuous selection: screen, then grid-scan and refine over the
/// surviving parameter intervals only.
pub fn select_screened_continuous<D: ParametricDictionary + ?Sized>(
    r: &Residual,
    screener: &ContinuousScreener<'_, D>,
    counter: &CostCounter,
) -> Result<(f64, f64, ScreeningReport)> {
    screened_continuous_excluding(r, screener, &[], counter)
}

fn screened_continuous_excluding<D: ParametricDictionary + ?Sized>(
    r: &Residual,
    screener: &ContinuousScreener<'_, D>,
    excluded: &[f64],
    counter: &CostCounter,
) -> Result<(f64, f64, ScreeningReport)> {
    let dict = screener.dictionary();
    let report = screener.screen(r, counter)?;
    let survivors = surviving_intervals(dict.domain(), report.removed.intervals());
    let h = dict.grid_resolution();
    let points: Vec<f64> = surviving_points(&dict.grid(), &survivors)
        .into_iter()
        .filter(|&mu| !near_excluded(mu, excluded, h))
        .collect();
    let (mu, v) = scan_and_refine(r, dict, &points, counter, screener.exec())?
        .ok_or_else(|| Error::Internal("screening removed every atom".into()))?;
    Ok((mu, v, report))
}

fn discrete_excluded(excluded: &[AtomId]) -> Vec<usize> {
    excluded
        .iter()
        .filter_map(|id| match id {
            AtomId::Index(i) => Some(*i),
            AtomId::Param(_) => None,
        })
        .collect()
}

fn discrete_atom(dict: &DiscreteDictionary, id: AtomId) -> Result<Signal> {
    match id {
        AtomId::Index(i) if i < dict.len() => Ok(dict.atom(i).clone()),
        other => config(format!("atom {other} is not in the dictionary")),
    }
}

fn parametric_atom<D: ParametricDictionary + ?Sized>(dict: &D, id: AtomId) -> Result<Signal> {
    match id {
        AtomId::Param(mu) => dict.synthesize(mu),
        other => config(format!("atom {other} is not a parameter value")),
    }
}

pub struct ExhaustiveDiscrete<'d> {
    pub dict: &'d DiscreteDictionary,
    pub exec: Exec,
}

impl Selector for ExhaustiveDiscrete<'_> {
    fn dim(&self) -> usize {
        self.dict.dim()
    }

    fn atom(&self, id: AtomId) -> Result<Signal> {
        discrete_atom(self.dict, id)
    }

    fn select(&self, r: &Residual, excluded: &[AtomId], counter: &CostCounter) -> Result<Selection> {
        check_dim(self.dict.dim(), r.len())?;
        let excluded = discrete_excluded(excluded);
        let candidates: Vec<usize> = (0..self.dict.len()).filter(|i| !excluded.contains(i)).collect();
        let (i, value) = scan_indices(r, self.dict, &candidates, counter, self.exec)
            .ok_or_else(|| Error::Config("every atom is excluded".into()))?;
        Ok(Selection {
            atom: AtomId::Index(i),
            value,
            report: None,
        })
    }
}

pub struct ScreenedDiscrete<'s, 'd> {
    pub screener: &'s DiscreteScreener<'d>,
}

impl Selector for ScreenedDiscrete<'_, '_> {
    fn dim(&self) -> usize {
        self.screener.dictionary().dim()
    }

    fn atom(&self, id: AtomId) -> Result<Signal> {
        discrete_atom(self.screener.dictionary(), id)
    }

    fn select(&self, r: &Residual, excluded: &[AtomId], counter: &CostCounter) -> Result<Selection> {
        let (i, value, report) =
            select_screened_discrete_excluding(r, self.screener, &discrete_excluded(excluded), counter)?;
        Ok(Selection {
            atom: AtomId::Index(i),
            value,
            report: Some(report),
        })
    }
}

pub struct ExhaustiveContinuous<'d, D: ParametricDictionary + ?Sized> {
    pub dict: &'d D,
    pub exec: Exec,
}

impl<D: ParametricDictionary + ?Sized> Selector for ExhaustiveContinuous<'_, D> {
    fn dim(&self) -> usize {
        self.dict.dim()
    }

    fn atom(&self, id: AtomId) -> Result<Signal> {
        parametric_atom(self.dict, id)
    }

    fn select(&self, r: &Residual, excluded: &[AtomId], counter: &CostCounter) -> Result<Selection> {
        let (mu, value) =
            exhaustive_continuous_excluding(r, self.dict, &excluded_params(excluded), counter, self.exec)?;
        Ok(Selection {
            atom: AtomId::Param(mu),
            value,
            report: None,
        })
    }
}

pub struct ScreenedContinuous<'s, 'd, D: ParametricDictionary + ?Sized> {
    pub screener: &'s ContinuousScreener<'d, D>,
}

impl<D: ParametricDictionary + ?Sized> Selector for ScreenedContinuous<'_, '_, D> {
    fn dim(&self) -> usize {
        self.screener.dictionary().dim()
    }

    fn atom(&self, id: AtomId) -> Result<Signal> {
        parametric_atom(self.screener.dictionary(), id)
    }

    fn select(&self, r: &Residual, excluded: &[AtomId], counter: &CostCounter) -> Result<Selection> {
        let (mu, value, report) = screened_continuous_excluding(r, self.screener, &excluded_params(excluded), counter)?;
        Ok(Selection {
            atom: AtomId::Param(mu),
            value,
            report: Some(report),
        })
    }
}
