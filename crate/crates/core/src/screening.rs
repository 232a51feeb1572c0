//! Region screening for the atom-selection step.
//!
//! A screen call computes `tau = max |<r, a>|` over a probe set, evaluates
//! one closed-form bound per region, and removes every atom of each region
//! whose bound falls strictly below `tau`. Such atoms cannot attain the
//! maximum correlation, so the argmax over the survivors equals the global
//! argmax.

use std::collections::HashMap;

use crate::dictionary::{check_dim, dot, AtomId, DiscreteDictionary, ParametricDictionary, Residual, Signal};
use crate::error::{config, Result};
use crate::exec::Exec;
use crate::instrumentation::{CostCategory, CostCounter, CostSnapshot};
use crate::regions::{members_discrete, members_interval, Geometry, Interval, MembershipIndex, Region, RegionSet};

/// Removed intervals closer than this are coalesced.
pub const INTERVAL_MERGE_TOL: f64 = 1e-9;

/// Nonempty subset of dictionary atoms whose best correlation sets `tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSet {
    atoms: Vec<AtomId>,
}

impl ProbeSet {
    pub fn new(atoms: Vec<AtomId>) -> Result<Self> {
        if atoms.is_empty() {
            return config("probe set must not be empty");
        }
        Ok(ProbeSet { atoms })
    }

    pub fn indices(indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        Self::new(indices.into_iter().map(AtomId::Index).collect())
    }

    pub fn params(params: impl IntoIterator<Item = f64>) -> Result<Self> {
        Self::new(params.into_iter().map(AtomId::Param).collect())
    }

    pub fn atoms(&self) -> &[AtomId] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

/// Probe atoms materialized once per dictionary.
#[derive(Debug, Clone)]
struct Probe {
    ids: Vec<AtomId>,
    atoms: Vec<Signal>,
}

/// How region sizes are chosen on each screen call.
#[derive(Debug, Clone, PartialEq)]
pub enum RegionSizing {
    /// Largest region passing the test against the current `tau`.
    Tuned,
    /// One fixed size per region.
    Fixed(Vec<f64>),
}

/// What a single region removed.
#[derive(Debug, Clone, PartialEq)]
pub enum Removal {
    Nothing,
    Indices(Vec<usize>),
    Interval(Interval),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionOutcome {
    pub region: usize,
    pub center: Option<AtomId>,
    /// Region size used for the test; `None` when tuning found no passing size.
    pub size: Option<f64>,
    pub test_value: Option<f64>,
    pub passed: bool,
    pub removal: Removal,
}

/// Union of everything the passing regions removed.
#[derive(Debug, Clone, PartialEq)]
pub enum Removed {
    /// Mask over dictionary indices.
    Indices(Vec<bool>),
    /// Merged, sorted, disjoint parameter intervals.
    Intervals(Vec<Interval>),
}

impl Removed {
    pub fn is_empty(&self) -> bool {
        match self {
            Removed::Indices(mask) => !mask.iter().any(|&b| b),
            Removed::Intervals(v) => v.is_empty(),
        }
    }

    pub fn contains(&self, atom: AtomId) -> bool {
        match (self, atom) {
            (Removed::Indices(mask), AtomId::Index(i)) => mask.get(i).copied().unwrap_or(false),
            (Removed::Intervals(v), AtomId::Param(mu)) => v.iter().any(|iv| iv.contains(mu)),
            _ => false,
        }
    }

    pub fn indices(&self) -> Vec<usize> {
        match self {
            Removed::Indices(mask) => mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect(),
            Removed::Intervals(_) => Vec::new(),
        }
    }

    pub fn intervals(&self) -> &[Interval] {
        match self {
            Removed::Intervals(v) => v,
            Removed::Indices(_) => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScreeningReport {
    pub tau: f64,
    pub regions: Vec<RegionOutcome>,
    pub removed: Removed,
    /// Tau and test cost of this call.
    pub cost: CostSnapshot,
}

/// `max |<r, a>|` over the probe atoms; one counted product per atom.
pub fn compute_tau(r: &Residual, probe: &[Signal], counter: &CostCounter, exec: Exec) -> Result<f64> {
    Ok(probe_correlations(r, probe, counter, exec)?
        .iter()
        .fold(0.0, |m, c| m.max(c.abs())))
}

fn probe_correlations(r: &Residual, probe: &[Signal], counter: &CostCounter, exec: Exec) -> Result<Vec<f64>> {
    if probe.is_empty() {
        return config("probe set must not be empty");
    }
    for a in probe {
        check_dim(r.len(), a.len())?;
    }
    let corr = exec.map_slice(probe, |a| dot(a.as_slice(), r.as_slice()));
    counter.add(CostCategory::Tau, probe.len() as u64);
    Ok(corr)
}

/// Discrete screening with arbitrary fixed regions; membership by linear scan.
pub fn screen(
    r: &Residual,
    probe: &ProbeSet,
    regions: &RegionSet,
    dict: &DiscreteDictionary,
    counter: &CostCounter,
    exec: Exec,
) -> Result<ScreeningReport> {
    let start = counter.snapshot();
    let probe_atoms = discrete_probe(probe, dict)?;
    let tau = compute_tau(r, &probe_atoms.atoms, counter, exec)?;
    let mut mask = vec![false; dict.len()];
    let outcomes = exec.map_slice(regions.regions(), |region| -> Result<(f64, bool, Vec<usize>)> {
        let value = region.max_abs(r, counter)?;
        let passed = value < tau;
        let members = if passed {
            members_discrete(region, dict)?
        } else {
            Vec::new()
        };
        Ok((value, passed, members))
    });
    let mut per_region = Vec::with_capacity(regions.len());
    for (l, (outcome, region)) in outcomes.into_iter().zip(regions.iter()).enumerate() {
        let (value, passed, members) = outcome?;
        for &i in &members {
            mask[i] = true;
        }
        per_region.push(RegionOutcome {
            region: l,
            center: None,
            size: Some(region.size()),
            test_value: Some(value),
            passed,
            removal: if passed {
                Removal::Indices(members)
            } else {
                Removal::Nothing
            },
        });
    }
    Ok(ScreeningReport {
        tau,
        regions: per_region,
        removed: Removed::Indices(mask),
        cost: counter.snapshot().since(&start),
    })
}

fn discrete_probe(probe: &ProbeSet, dict: &DiscreteDictionary) -> Result<Probe> {
    let mut atoms = Vec::with_capacity(probe.len());
    for id in probe.atoms() {
        match *id {
            AtomId::Index(i) if i < dict.len() => atoms.push(dict.atom(i).clone()),
            other => return config(format!("probe atom {other} is not in the dictionary")),
        }
    }
    Ok(Probe {
        ids: probe.atoms().to_vec(),
        atoms,
    })
}

fn parametric_probe<D: ParametricDictionary + ?Sized>(probe: &ProbeSet, dict: &D) -> Result<Probe> {
    let mut atoms = Vec::with_capacity(probe.len());
    for id in probe.atoms() {
        match *id {
            AtomId::Param(mu) => atoms.push(dict.synthesize(mu)?),
            other => return config(format!("probe atom {other} is not a parameter value")),
        }
    }
    Ok(Probe {
        ids: probe.atoms().to_vec(),
        atoms,
    })
}

/// Region centers placed on dictionary atoms.
#[derive(Debug, Clone)]
struct Centers {
    ids: Vec<AtomId>,
    atoms: Vec<Signal>,
}

/// Per-region test results before membership resolution.
struct Evaluation {
    tau: f64,
    sizes: Vec<Option<f64>>,
    values: Vec<Option<f64>>,
}

struct Plan<'a> {
    geometry: Geometry,
    sizing: &'a RegionSizing,
    share_probe: bool,
    exec: Exec,
}

impl Plan<'_> {
    fn evaluate(&self, r: &Residual, probe: &Probe, centers: &Centers, counter: &CostCounter) -> Result<Evaluation> {
        let probe_corr = probe_correlations(r, &probe.atoms, counter, self.exec)?;
        let tau = probe_corr.iter().fold(0.0, |m: f64, c| m.max(c.abs()));

        let shared: HashMap<usize, f64> = if self.share_probe {
            centers
                .ids
                .iter()
                .enumerate()
                .filter_map(|(l, id)| probe.ids.iter().position(|p| p == id).map(|j| (l, probe_corr[j])))
                .collect()
        } else {
            HashMap::new()
        };
        let to_compute: Vec<usize> = (0..centers.ids.len()).filter(|l| !shared.contains_key(l)).collect();
        let computed = self
            .exec
            .map_slice(&to_compute, |&l| dot(centers.atoms[l].as_slice(), r.as_slice()));
        counter.add(CostCategory::Test, to_compute.len() as u64);
        let mut center_corr = vec![0.0; centers.ids.len()];
        for (l, c) in shared {
            center_corr[l] = c;
        }
        for (&l, c) in to_compute.iter().zip(computed) {
            center_corr[l] = c;
        }

        let rnorm = r.norm();
        let sizes: Vec<Option<f64>> = match self.sizing {
            RegionSizing::Tuned => center_corr
                .iter()
                .map(|&c| self.geometry.tuned_screening_size(c, rnorm, tau))
                .collect(),
            RegionSizing::Fixed(v) => {
                if v.len() != centers.ids.len() {
                    return config("fixed region sizes must match the number of centers");
                }
                v.iter().map(|&s| Some(s)).collect()
            }
        };
        let values = center_corr
            .iter()
            .zip(&sizes)
            .map(|(&c, s)| s.map(|s| self.geometry.bound(c, rnorm, s)))
            .collect();
        Ok(Evaluation { tau, sizes, values })
    }
}

/// Screening against atom-centered regions of a discrete dictionary, with
/// membership precomputed once.
#[derive(Debug, Clone)]
pub struct DiscreteScreener<'d> {
    dict: &'d DiscreteDictionary,
    geometry: Geometry,
    centers: Centers,
    center_indices: Vec<usize>,
    probe: Probe,
    membership: MembershipIndex,
    sizing: RegionSizing,
    share_probe: bool,
    exec: Exec,
}

impl<'d> DiscreteScreener<'d> {
    /// Builds the membership index (booked as setup cost on `counter`).
    pub fn new(
        dict: &'d DiscreteDictionary,
        geometry: Geometry,
        center_indices: Vec<usize>,
        probe: &ProbeSet,
        counter: &CostCounter,
        exec: Exec,
    ) -> Result<Self> {
        if center_indices.is_empty() {
            return config("at least one region is required");
        }
        let membership = MembershipIndex::build(geometry, &center_indices, dict, counter, exec)?;
        let centers = Centers {
            ids: center_indices.iter().map(|&i| AtomId::Index(i)).collect(),
            atoms: center_indices.iter().map(|&i| dict.atom(i).clone()).collect(),
        };
        Ok(DiscreteScreener {
            dict,
            geometry,
            centers,
            center_indices,
            probe: discrete_probe(probe, dict)?,
            membership,
            sizing: RegionSizing::Tuned,
            share_probe: true,
            exec,
        })
    }

    pub fn with_sizing(mut self, sizing: RegionSizing) -> Self {
        self.sizing = sizing;
        self
    }

    pub fn with_shared_probe(mut self, share: bool) -> Self {
        self.share_probe = share;
        self
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn dictionary(&self) -> &'d DiscreteDictionary {
        self.dict
    }

    pub fn exec(&self) -> Exec {
        self.exec
    }

    pub fn center_indices(&self) -> &[usize] {
        &self.center_indices
    }

    /// The region `l` at a given size, for inspection.
    pub fn region(&self, l: usize, size: f64) -> Result<Region> {
        Region::new(self.geometry, self.centers.atoms[l].clone(), size)
    }

    pub fn screen(&self, r: &Residual, counter: &CostCounter) -> Result<ScreeningReport> {
        check_dim(self.dict.dim(), r.len())?;
        let start = counter.snapshot();
        let plan = Plan {
            geometry: self.geometry,
            sizing: &self.sizing,
            share_probe: self.share_probe,
            exec: self.exec,
        };
        let eval = plan.evaluate(r, &self.probe, &self.centers, counter)?;
        let mut mask = vec![false; self.dict.len()];
        let mut regions = Vec::with_capacity(self.centers.ids.len());
        for l in 0..self.centers.ids.len() {
            let passed = matches!(eval.values[l], Some(v) if v < eval.tau);
            let removal = if passed {
                let size = eval.sizes[l].expect("passing region has a size");
                let mut members: Vec<usize> = self.membership.members(l, size).collect();
                members.sort_unstable();
                for &i in &members {
                    mask[i] = true;
                }
                Removal::Indices(members)
            } else {
                Removal::Nothing
            };
            regions.push(RegionOutcome {
                region: l,
                center: Some(self.centers.ids[l]),
                size: eval.sizes[l],
                test_value: eval.values[l],
                passed,
                removal,
            });
        }
        Ok(ScreeningReport {
            tau: eval.tau,
            regions,
            removed: Removed::Indices(mask),
            cost: counter.snapshot().since(&start),
        })
    }
}

/// Screening against regions centered on atoms `a(mu_l)` of a parametric
/// dictionary. Removed sets are parameter intervals.
pub struct ContinuousScreener<'d, D: ParametricDictionary + ?Sized> {
    dict: &'d D,
    geometry: Geometry,
    centers: Centers,
    center_params: Vec<f64>,
    probe: Probe,
    sizing: RegionSizing,
    share_probe: bool,
    exec: Exec,
}

impl<'d, D: ParametricDictionary + ?Sized> ContinuousScreener<'d, D> {
    pub fn new(dict: &'d D, geometry: Geometry, center_params: Vec<f64>, probe: &ProbeSet, exec: Exec) -> Result<Self> {
        if center_params.is_empty() {
            return config("at least one region is required");
        }
        let atoms = center_params
            .iter()
            .map(|&mu| dict.synthesize(mu))
            .collect::<Result<Vec<_>>>()?;
        Ok(ContinuousScreener {
            dict,
            geometry,
            centers: Centers {
                ids: center_params.iter().map(|&mu| AtomId::Param(mu)).collect(),
                atoms,
            },
            center_params,
            probe: parametric_probe(probe, dict)?,
            sizing: RegionSizing::Tuned,
            share_probe: true,
            exec,
        })
    }

    pub fn with_sizing(mut self, sizing: RegionSizing) -> Self {
        self.sizing = sizing;
        self
    }

    pub fn with_shared_probe(mut self, share: bool) -> Self {
        self.share_probe = share;
        self
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn dictionary(&self) -> &'d D {
        self.dict
    }

    pub fn exec(&self) -> Exec {
        self.exec
    }

    pub fn center_params(&self) -> &[f64] {
        &self.center_params
    }

    pub fn screen(&self, r: &Residual, counter: &CostCounter) -> Result<ScreeningReport> {
        check_dim(self.dict.dim(), r.len())?;
        let start = counter.snapshot();
        let plan = Plan {
            geometry: self.geometry,
            sizing: &self.sizing,
            share_probe: self.share_probe,
            exec: self.exec,
        };
        let eval = plan.evaluate(r, &self.probe, &self.centers, counter)?;
        let passed: Vec<bool> = eval
            .values
            .iter()
            .map(|v| matches!(v, Some(v) if *v < eval.tau))
            .collect();
        let removals = self.exec.map(self.centers.ids.len(), |l| -> Result<Removal> {
            if !passed[l] {
                return Ok(Removal::Nothing);
            }
            let size = eval.sizes[l].expect("passing region has a size");
            // unit atoms: <t, a> >= eps  <=>  ||a - t|| <= sqrt(2 - 2 eps)
            let radius = match self.geometry {
                Geometry::Sphere => size,
                Geometry::Dome => (2.0 - 2.0 * size).max(0.0).sqrt(),
            };
            Ok(Removal::Interval(members_interval(
                self.dict,
                self.center_params[l],
                radius,
                counter,
            )?))
        });
        let mut regions = Vec::with_capacity(removals.len());
        let mut intervals = Vec::new();
        for (l, removal) in removals.into_iter().enumerate() {
            let removal = removal?;
            if let Removal::Interval(iv) = removal {
                intervals.push(iv);
            }
            regions.push(RegionOutcome {
                region: l,
                center: Some(self.centers.ids[l]),
                size: eval.sizes[l],
                test_value: eval.values[l],
                passed: passed[l],
                removal,
            });
        }
        Ok(ScreeningReport {
            tau: eval.tau,
            regions,
            removed: Removed::Intervals(merge_intervals(intervals)),
            cost: counter.snapshot().since(&start),
        })
    }
}

/// Sorts and coalesces overlapping or touching intervals.
pub fn merge_intervals(mut intervals: Vec<Interval>) -> Vec<Interval> {
    intervals.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(a.hi.total_cmp(&b.hi)));
    let mut out: Vec<Interval> = Vec::with_capacity(intervals.len());
    for iv in intervals {
        match out.last_mut() {
            Some(last) if iv.lo <= last.hi + INTERVAL_MERGE_TOL => last.hi = last.hi.max(iv.hi),
            _ => out.push(iv),
        }
    }
    out
}

/// Parts of `domain` not covered by the merged `removed` intervals.
pub fn surviving_intervals(domain: (f64, f64), removed: &[Interval]) -> Vec<Interval> {
    let (lo, hi) = domain;
    let mut out = Vec::new();
    let mut cursor = lo;
    for iv in removed {
        if iv.lo > cursor {
            out.push(Interval::new(cursor, iv.lo.min(hi)));
        }
        cursor = cursor.max(iv.hi);
        if cursor >= hi {
            break;
        }
    }
    if cursor < hi {
        out.push(Interval::new(cursor, hi));
    }
    out
}
