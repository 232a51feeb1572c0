//! Matching pursuit and orthogonal matching pursuit on top of any
//! [`Selector`].

use std::str::FromStr;

use crate::dictionary::{dot, AtomId, Residual, Signal};
use crate::error::{config, Error, Result};
use crate::instrumentation::CostCounter;
use crate::selection::{Selection, Selector};

/// Columns whose orthogonal remainder falls below this norm are treated as
/// linearly dependent on the current support.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Mp,
    Omp,
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mp" => Ok(SolverKind::Mp),
            "omp" => Ok(SolverKind::Omp),
            other => config(format!("unknown solver '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverConfig {
    pub max_iterations: usize,
    pub solver: SolverKind,
}

impl SolverConfig {
    pub fn new(max_iterations: usize, solver: SolverKind) -> Result<Self> {
        if max_iterations == 0 {
            return config("at least one iteration is required");
        }
        Ok(SolverConfig { max_iterations, solver })
    }
}

/// Thin QR factorization `A = Q R` of the selected atoms, grown one column
/// at a time. `Q` has orthonormal columns; `R` is stored column by column.
#[derive(Debug, Clone, Default)]
struct IncrementalQr {
    q: Vec<Vec<f64>>,
    r: Vec<Vec<f64>>,
    // Q^T y
    qty: Vec<f64>,
}

impl IncrementalQr {
    /// Appends a column; `false` (and no change) if it is numerically
    /// dependent on the existing ones.
    fn push(&mut self, column: &[f64], y: &[f64]) -> bool {
        let mut v = column.to_vec();
        let mut rcol = vec![0.0; self.q.len()];
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for (j, q) in self.q.iter().enumerate() {
                let h = dot(q, &v);
                rcol[j] += h;
                v.iter_mut().zip(q).for_each(|(vi, qi)| *vi -= h * qi);
            }
        }
        let nu = dot(&v, &v).sqrt();
        if nu < RANK_TOL {
            return false;
        }
        v.iter_mut().for_each(|vi| *vi /= nu);
        rcol.push(nu);
        self.qty.push(dot(&v, y));
        self.q.push(v);
        self.r.push(rcol);
        true
    }

    /// Least-squares coefficients: back-substitution of `R x = Q^T y`.
    fn solve(&self) -> Vec<f64> {
        let k = self.q.len();
        let mut x = vec![0.0; k];
        for i in (0..k).rev() {
            let tail: f64 = (i + 1..k).map(|j| self.r[j][i] * x[j]).sum();
            x[i] = (self.qty[i] - tail) / self.r[i][i];
        }
        x
    }
}

#[derive(Debug, Clone)]
pub struct SparseSolution {
    pub selected: Vec<AtomId>,
    pub atoms: Vec<Signal>,
    pub coefficients: Vec<f64>,
    pub residual: Residual,
    /// Per-iteration selections, including screening reports.
    pub history: Vec<Selection>,
    qr: IncrementalQr,
}

impl SparseSolution {
    pub fn empty(y: &Signal) -> Self {
        SparseSolution {
            selected: Vec::new(),
            atoms: Vec::new(),
            coefficients: Vec::new(),
            residual: Residual::new(y.clone()),
            history: Vec::new(),
            qr: IncrementalQr::default(),
        }
    }

    /// `y - sum_i x_i a_i`.
    pub fn approximation_error(&self, y: &Signal) -> Signal {
        let mut r = y.clone();
        for (a, x) in self.atoms.iter().zip(&self.coefficients) {
            r.axpy(-x, a).expect("atoms match signal length");
        }
        r
    }
}

/// One matching-pursuit step: `r <- r - <r, a> a`.
pub fn mp_iterate<S: Selector + ?Sized>(
    _y: &Signal,
    mut state: SparseSolution,
    selector: &S,
    counter: &CostCounter,
) -> Result<SparseSolution> {
    let sel = selector.select(&state.residual, &[], counter)?;
    let atom = selector.atom(sel.atom)?;
    let coef = dot(state.residual.as_slice(), atom.as_slice());
    let mut r = state.residual.signal().clone();
    r.axpy(-coef, &atom)?;
    state.residual = Residual::new(r);
    match state.selected.iter().position(|&s| s == sel.atom) {
        Some(j) => state.coefficients[j] += coef,
        None => {
            state.selected.push(sel.atom);
            state.atoms.push(atom);
            state.coefficients.push(coef);
        }
    }
    state.history.push(sel);
    Ok(state)
}

/// One OMP step: select, refit all coefficients by least squares, recompute
/// the residual. A selected atom dependent on the current support is
/// rejected and the selection re-run without it.
pub fn omp_iterate<S: Selector + ?Sized>(
    y: &Signal,
    mut state: SparseSolution,
    selector: &S,
    counter: &CostCounter,
) -> Result<SparseSolution> {
    let mut excluded = Vec::new();
    let (sel, atom) = loop {
        let sel = selector.select(&state.residual, &excluded, counter)?;
        let atom = selector.atom(sel.atom)?;
        if state.qr.push(atom.as_slice(), y.as_slice()) {
            break (sel, atom);
        }
        excluded.push(sel.atom);
    };
    state.selected.push(sel.atom);
    state.atoms.push(atom);
    state.coefficients = state.qr.solve();
    state.residual = Residual::new(state.approximation_error(y));
    state.history.push(sel);
    Ok(state)
}

/// Runs `config.max_iterations` solver steps, marking an iteration on the
/// counter after each.
pub fn solve<S: Selector + ?Sized>(
    y: &Signal,
    selector: &S,
    config: &SolverConfig,
    counter: &CostCounter,
) -> Result<SparseSolution> {
    if y.len() != selector.dim() {
        return Err(Error::Dimension {
            expected: selector.dim(),
            found: y.len(),
        });
    }
    let mut state = SparseSolution::empty(y);
    for _ in 0..config.max_iterations {
        state = match config.solver {
            SolverKind::Mp => mp_iterate(y, state, selector, counter)?,
            SolverKind::Omp => omp_iterate(y, state, selector, counter)?,
        };
        counter.mark_iteration();
    }
    Ok(state)
}
