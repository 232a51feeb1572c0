//! The two benchmark experiments: DOA estimation with a discrete steering
//! dictionary (inner-product counts of exhaustive vs screened OMP) and
//! Gaussian deconvolution with a continuous dictionary (intervals removed
//! by tuned sphere regions).

use std::f64::consts::FRAC_PI_2;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dictionary::{
    build_doa_dictionary, build_gaussian_dictionary, AtomId, DiscreteDictionary, GaussianDictionary,
    ParametricDictionary, Residual, Signal,
};
use crate::error::{config, Error, Result};
use crate::exec::Exec;
use crate::instrumentation::CostCounter;
use crate::regions::{Geometry, Interval};
use crate::screening::{surviving_intervals, ContinuousScreener, DiscreteScreener, ProbeSet, Removal};
use crate::selection::{
    select_exhaustive_continuous, select_screened_continuous, ExhaustiveDiscrete, ScreenedDiscrete,
};
use crate::solvers::{solve, SolverConfig, SolverKind};

/// The project's seeded generator.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoaConfig {
    pub n: usize,
    pub m: usize,
    pub regions: usize,
    pub k: usize,
    pub angle_range: (f64, f64),
    pub geometry: Geometry,
    pub seed: u64,
    pub share_probe: bool,
    pub noise: f64,
    pub exec: Exec,
}

impl Default for DoaConfig {
    fn default() -> Self {
        DoaConfig {
            n: 1000,
            m: 100,
            regions: 100,
            k: 5,
            angle_range: (-FRAC_PI_2, FRAC_PI_2),
            geometry: Geometry::Dome,
            seed: 0,
            share_probe: true,
            noise: 0.0,
            exec: Exec::Parallel,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeconvConfig {
    pub m: usize,
    pub regions: usize,
    pub k: usize,
    pub sigma2: f64,
    pub mu_range: (f64, f64),
    pub geometry: Geometry,
    pub seed: u64,
    pub share_probe: bool,
    pub noise: f64,
    pub grid_step: f64,
    pub exec: Exec,
}

impl Default for DeconvConfig {
    fn default() -> Self {
        DeconvConfig {
            m: 500,
            regions: 100,
            k: 5,
            sigma2: 10.0,
            mu_range: (0.0, 100.0),
            geometry: Geometry::Sphere,
            seed: 0,
            share_probe: true,
            noise: 0.0,
            grid_step: crate::dictionary::DEFAULT_GRID_RESOLUTION,
            exec: Exec::Parallel,
        }
    }
}

fn check_noise(noise: f64) -> Result<()> {
    if !(noise >= 0.0 && noise.is_finite()) {
        return config(format!("noise std must be finite and >= 0, got {noise}"));
    }
    Ok(())
}

fn add_noise(y: &mut Signal, noise: f64, rng: &mut ChaCha8Rng) -> Result<()> {
    if noise == 0.0 {
        return Ok(());
    }
    let normal = Normal::new(0.0, noise).map_err(|e| Error::Config(e.to_string()))?;
    let noisy: Vec<f64> = y.as_slice().iter().map(|v| v + normal.sample(rng)).collect();
    *y = Signal::new(noisy)?;
    Ok(())
}

/// A random combination of `k` distinct atoms with coefficients uniform on
/// `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Planted {
    pub atoms: Vec<AtomId>,
    pub coefficients: Vec<f64>,
    pub signal: Signal,
}

pub fn plant_discrete(dict: &DiscreteDictionary, k: usize, rng: &mut ChaCha8Rng) -> Result<Planted> {
    if k == 0 || k > dict.len() {
        return config(format!("cannot plant {k} atoms in a dictionary of {}", dict.len()));
    }
    let indices = sample(rng, dict.len(), k).into_vec();
    let mut signal = Signal::zeros(dict.dim());
    let mut coefficients = Vec::with_capacity(k);
    for &i in &indices {
        let x = rng.random_range(-1.0..=1.0);
        signal.axpy(x, dict.atom(i))?;
        coefficients.push(x);
    }
    Ok(Planted {
        atoms: indices.into_iter().map(AtomId::Index).collect(),
        coefficients,
        signal,
    })
}

pub fn plant_parametric<D: ParametricDictionary + ?Sized>(dict: &D, k: usize, rng: &mut ChaCha8Rng) -> Result<Planted> {
    if k == 0 {
        return config("cannot plant zero atoms");
    }
    let (lo, hi) = dict.domain();
    let mut signal = Signal::zeros(dict.dim());
    let mut atoms = Vec::with_capacity(k);
    let mut coefficients = Vec::with_capacity(k);
    for _ in 0..k {
        let mu = rng.random_range(lo..=hi);
        let x = rng.random_range(-1.0..=1.0);
        signal.axpy(x, &dict.synthesize(mu)?)?;
        atoms.push(AtomId::Param(mu));
        coefficients.push(x);
    }
    Ok(Planted {
        atoms,
        coefficients,
        signal,
    })
}

/// Region centers by regular subsampling of the dictionary indices.
pub fn doa_centers(n: usize, regions: usize) -> Result<Vec<usize>> {
    if regions == 0 || regions > n {
        return config(format!("need 1 <= L <= n, got L = {regions}, n = {n}"));
    }
    Ok((0..regions).map(|l| l * n / regions).collect())
}

/// Region centers by regular subsampling of the parameter interval,
/// endpoints included.
pub fn deconv_centers(mu_range: (f64, f64), regions: usize) -> Result<Vec<f64>> {
    let (lo, hi) = mu_range;
    match regions {
        0 => config("need at least one region"),
        1 => Ok(vec![0.5 * (lo + hi)]),
        l => Ok((0..l).map(|i| lo + (hi - lo) * i as f64 / (l - 1) as f64).collect()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DoaRow {
    pub iter: usize,
    pub exhaustive_cum: u64,
    pub screened_cum: u64,
    pub tau_cost: u64,
    pub test_cost: u64,
    pub reduced_scan_cost: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoaOutcome {
    pub rows: Vec<DoaRow>,
    pub planted: Planted,
    pub exhaustive_support: Vec<AtomId>,
    pub screened_support: Vec<AtomId>,
    /// One-time membership precomputation, not part of the selection cost.
    pub setup_cost: u64,
}

impl DoaOutcome {
    /// `screened / exhaustive` cumulative cost after the last iteration.
    pub fn cost_ratio(&self) -> f64 {
        let last = self.rows.last().expect("at least one iteration");
        last.screened_cum as f64 / last.exhaustive_cum as f64
    }
}

/// Runs OMP twice on the same planted signal, with exhaustive and screened
/// selection, and reports cumulative inner-product counts per iteration.
pub fn run_doa(cfg: &DoaConfig) -> Result<DoaOutcome> {
    check_noise(cfg.noise)?;
    if cfg.k == 0 {
        return config("k must be >= 1");
    }
    let dict = build_doa_dictionary(cfg.n, cfg.m, cfg.angle_range)?;
    let centers = doa_centers(cfg.n, cfg.regions)?;
    let mut rng = rng_from_seed(cfg.seed);
    let mut planted = plant_discrete(&dict, cfg.k, &mut rng)?;
    add_noise(&mut planted.signal, cfg.noise, &mut rng)?;
    let solver = SolverConfig::new(cfg.k, SolverKind::Omp)?;

    let exhaustive_counter = CostCounter::new();
    let exhaustive = ExhaustiveDiscrete {
        dict: &dict,
        exec: cfg.exec,
    };
    let ex = solve(&planted.signal, &exhaustive, &solver, &exhaustive_counter)?;

    let screened_counter = CostCounter::new();
    let probe = ProbeSet::indices(centers.iter().copied())?;
    let screener = DiscreteScreener::new(&dict, cfg.geometry, centers, &probe, &screened_counter, cfg.exec)?
        .with_shared_probe(cfg.share_probe);
    let sc = solve(
        &planted.signal,
        &ScreenedDiscrete { screener: &screener },
        &solver,
        &screened_counter,
    )?;

    let rows = exhaustive_counter
        .iterations()
        .iter()
        .zip(screened_counter.iterations())
        .enumerate()
        .map(|(i, (e, s))| DoaRow {
            iter: i + 1,
            exhaustive_cum: e.total(),
            screened_cum: s.total(),
            tau_cost: s.tau,
            test_cost: s.test,
            reduced_scan_cost: s.reduced_scan,
        })
        .collect();
    Ok(DoaOutcome {
        rows,
        planted,
        exhaustive_support: ex.selected,
        screened_support: sc.selected,
        setup_cost: screened_counter.snapshot().setup,
    })
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Config(format!("output error: {e}"))
}

pub fn write_doa_csv<W: Write>(rows: &[DoaRow], out: W) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record([
        "iter",
        "exhaustive_cum",
        "screened_cum",
        "tau_cost",
        "test_cost",
        "reduced_scan_cost",
    ])
    .map_err(io_err)?;
    for r in rows {
        w.write_record([
            r.iter.to_string(),
            r.exhaustive_cum.to_string(),
            r.screened_cum.to_string(),
            r.tau_cost.to_string(),
            r.test_cost.to_string(),
            r.reduced_scan_cost.to_string(),
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeconvRegionRow {
    pub region_index: usize,
    pub center_mu: f64,
    pub epsilon: Option<f64>,
    pub removed: Option<Interval>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeconvOutcome {
    pub rows: Vec<DeconvRegionRow>,
    pub survivors: Vec<Interval>,
    pub tau: f64,
    pub mu_exhaustive: f64,
    pub value_exhaustive: f64,
    pub mu_screened: f64,
    pub value_screened: f64,
    pub exhaustive_cost: u64,
    pub screened_cost: u64,
    pub planted: Option<Planted>,
}

impl DeconvOutcome {
    pub fn survivor_measure(&self) -> f64 {
        self.survivors.iter().map(Interval::width).sum()
    }

    /// Whether any removed interval contains `mu`.
    pub fn removes(&self, mu: f64) -> bool {
        self.rows
            .iter()
            .any(|r| matches!(r.removed, Some(iv) if iv.contains(mu)))
    }
}

pub fn deconv_dictionary(cfg: &DeconvConfig) -> Result<GaussianDictionary> {
    build_gaussian_dictionary(cfg.mu_range, cfg.sigma2, cfg.m)?.with_grid_resolution(cfg.grid_step)
}

/// One screened selection (plus the exhaustive reference) on a given
/// observation.
pub fn analyze_deconv(cfg: &DeconvConfig, dict: &GaussianDictionary, y: &Signal) -> Result<DeconvOutcome> {
    let centers = deconv_centers(cfg.mu_range, cfg.regions)?;
    let probe = ProbeSet::params(centers.iter().copied())?;
    let screener = ContinuousScreener::new(dict, cfg.geometry, centers.clone(), &probe, cfg.exec)?
        .with_shared_probe(cfg.share_probe);
    let r = Residual::new(y.clone());

    let exhaustive_counter = CostCounter::new();
    let (mu_exhaustive, value_exhaustive) = select_exhaustive_continuous(&r, dict, &exhaustive_counter, cfg.exec)?;
    let screened_counter = CostCounter::new();
    let (mu_screened, value_screened, report) = select_screened_continuous(&r, &screener, &screened_counter)?;

    let rows = report
        .regions
        .iter()
        .map(|o| DeconvRegionRow {
            region_index: o.region,
            center_mu: centers[o.region],
            epsilon: o.size,
            removed: match o.removal {
                Removal::Interval(iv) => Some(iv),
                _ => None,
            },
        })
        .collect();
    Ok(DeconvOutcome {
        rows,
        survivors: surviving_intervals(dict.domain(), report.removed.intervals()),
        tau: report.tau,
        mu_exhaustive,
        value_exhaustive,
        mu_screened,
        value_screened,
        exhaustive_cost: exhaustive_counter.snapshot().total(),
        screened_cost: screened_counter.snapshot().total(),
        planted: None,
    })
}

/// Plants `k` random Gaussian atoms and screens the first selection step.
pub fn run_deconv(cfg: &DeconvConfig) -> Result<DeconvOutcome> {
    check_noise(cfg.noise)?;
    let dict = deconv_dictionary(cfg)?;
    let mut rng = rng_from_seed(cfg.seed);
    let mut planted = plant_parametric(&dict, cfg.k, &mut rng)?;
    add_noise(&mut planted.signal, cfg.noise, &mut rng)?;
    let mut outcome = analyze_deconv(cfg, &dict, &planted.signal)?;
    outcome.planted = Some(planted);
    Ok(outcome)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_deconv_regions_csv<W: Write>(outcome: &DeconvOutcome, out: W) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["region_index", "center_mu", "epsilon", "removed_lo", "removed_hi"])
        .map_err(io_err)?;
    for r in &outcome.rows {
        w.write_record([
            r.region_index.to_string(),
            r.center_mu.to_string(),
            opt(r.epsilon),
            opt(r.removed.map(|iv| iv.lo)),
            opt(r.removed.map(|iv| iv.hi)),
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn write_deconv_survivors_csv<W: Write>(outcome: &DeconvOutcome, out: W) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["interval_index", "lo", "hi"]).map_err(io_err)?;
    for (i, iv) in outcome.survivors.iter().enumerate() {
        w.write_record([i.to_string(), iv.lo.to_string(), iv.hi.to_string()])
            .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn write_deconv_summary_csv<W: Write>(outcome: &DeconvOutcome, out: W) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["key", "value"]).map_err(io_err)?;
    let mut rows = vec![
        ("tau", outcome.tau.to_string()),
        ("mu_exhaustive", outcome.mu_exhaustive.to_string()),
        ("value_exhaustive", outcome.value_exhaustive.to_string()),
        ("mu_screened", outcome.mu_screened.to_string()),
        ("value_screened", outcome.value_screened.to_string()),
        ("survivor_measure", outcome.survivor_measure().to_string()),
        ("exhaustive_cost", outcome.exhaustive_cost.to_string()),
        ("screened_cost", outcome.screened_cost.to_string()),
    ];
    if let Some(p) = &outcome.planted {
        for (id, x) in p.atoms.iter().zip(&p.coefficients) {
            rows.push(("planted", format!("{id}:{x}")));
        }
    }
    for (k, v) in rows {
        w.write_record([k, v.as_str()]).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Sibling output path: `dir/stem_suffix.csv`.
pub fn sibling_path(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("deconv");
    out.with_file_name(format!("{stem}_{suffix}.csv"))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", path.display())))
}

/// Writes the region table to `out` and the survivor set and summary to
/// `<stem>_survivors.csv` and `<stem>_summary.csv` next to it.
pub fn write_deconv_outputs(outcome: &DeconvOutcome, out: &Path) -> Result<Vec<PathBuf>> {
    let survivors = sibling_path(out, "survivors");
    let summary = sibling_path(out, "summary");
    write_deconv_regions_csv(outcome, create(out)?)?;
    write_deconv_survivors_csv(outcome, create(&survivors)?)?;
    write_deconv_summary_csv(outcome, create(&summary)?)?;
    Ok(vec![out.to_path_buf(), survivors, summary])
}

pub fn write_doa_output(outcome: &DoaOutcome, out: &Path) -> Result<()> {
    write_doa_csv(&outcome.rows, create(out)?)
}
