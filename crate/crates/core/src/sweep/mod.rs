//! Grid evaluation of steady-state observables.
//!
//! Every grid point is solved independently on a worker pool; rows come back
//! in grid order so the output never depends on the number of workers.

mod contour;
mod table;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic;
use crate::dynamics::{self, DensityMatrix, Tolerances};
use crate::error::{Error, Result};
use crate::hilbert::{BasisState, Mode};
use crate::model::{Model, ModelParams};

pub use contour::{contour_grid, extract_contour, ContourScale, Polyline};
pub use table::format_number;

/// A sweepable model parameter, named as in the flat config keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    Delta,
    G,
    Chi,
    Omega,
    Kappa,
    Gamma,
    J,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::Delta => "delta",
            Param::G => "g",
            Param::Chi => "chi",
            Param::Omega => "omega",
            Param::Kappa => "kappa",
            Param::Gamma => "gamma",
            Param::J => "j",
        }
    }

    pub fn get(self, p: &ModelParams) -> f64 {
        match self {
            Param::Delta => p.delta,
            Param::G => p.g,
            Param::Chi => p.chi,
            Param::Omega => p.omega_drv,
            Param::Kappa => p.kappa,
            Param::Gamma => p.gamma,
            Param::J => p.j_coupling,
        }
    }

    pub fn set(self, p: &mut ModelParams, v: f64) {
        match self {
            Param::Delta => p.delta = v,
            Param::G => p.g = v,
            Param::Chi => p.chi = v,
            Param::Omega => p.omega_drv = v,
            Param::Kappa => p.kappa = v,
            Param::Gamma => p.gamma = v,
            Param::J => p.j_coupling = v,
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_owned())).map_err(|_| {
            Error::InvalidSpec(format!("unknown parameter '{s}' (expected delta, g, chi, omega, kappa, gamma or j)"))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// Numerical g²(0) of the CW mode.
    G2Cw,
    /// Weak-drive g²(0), 2|C20g|²/|C10g|⁴.
    G2Analytic,
    /// Numerical ⟨a₁†a₁⟩.
    MeanNCw,
    /// One-photon probability of the CW mode.
    P1,
    /// Two-photon probability of the CW mode.
    P2,
    /// P(m)/𝒫(m) for every retained photon number m.
    PoissonDev,
}

impl Observable {
    pub fn name(self) -> &'static str {
        match self {
            Observable::G2Cw => "g2_cw",
            Observable::G2Analytic => "g2_analytic",
            Observable::MeanNCw => "mean_n_cw",
            Observable::P1 => "p1",
            Observable::P2 => "p2",
            Observable::PoissonDev => "poisson_dev",
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_owned())).map_err(|_| {
            Error::InvalidSpec(format!(
                "unknown observable '{s}' (expected g2_cw, g2_analytic, mean_n_cw, p1, p2 or poisson_dev)"
            ))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Numeric,
    Analytic,
    Both,
}

impl Method {
    pub fn numeric(self) -> bool {
        matches!(self, Method::Numeric | Method::Both)
    }

    pub fn analytic(self) -> bool {
        matches!(self, Method::Analytic | Method::Both)
    }

    /// Observables reported when none are requested.
    pub fn default_observables(self) -> Vec<Observable> {
        match self {
            Method::Numeric => vec![Observable::G2Cw],
            Method::Analytic => vec![Observable::G2Analytic],
            Method::Both => vec![Observable::G2Cw, Observable::G2Analytic],
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_owned()))
            .map_err(|_| Error::InvalidSpec(format!("unknown method '{s}' (expected numeric, analytic or both)")))
    }
}

/// `count` evenly spaced values from `start` to `stop`, both included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub param: Param,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(param: Param, start: f64, stop: f64, count: usize) -> Self {
        Axis { param, start, stop, count }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count < 2 {
            return Err(Error::InvalidSpec(format!("axis '{}' needs at least 2 points", self.param)));
        }
        if !(self.start.is_finite() && self.stop.is_finite() && self.start < self.stop) {
            return Err(Error::InvalidSpec(format!(
                "axis '{}' needs finite start < stop (got {}:{})",
                self.param, self.start, self.stop
            )));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.stop - self.start) / (self.count - 1) as f64
    }

    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.count {
            self.stop
        } else {
            self.start + (self.stop - self.start) * i as f64 / (self.count - 1) as f64
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.value(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base: ModelParams,
    pub axis1: Axis,
    #[serde(default)]
    pub axis2: Option<Axis>,
    #[serde(default)]
    pub observables: Vec<Observable>,
    #[serde(default)]
    pub method: Method,
}

impl SweepSpec {
    pub fn new(base: ModelParams, axis1: Axis) -> Self {
        SweepSpec { base, axis1, axis2: None, observables: Vec::new(), method: Method::Numeric }
    }

    /// The requested observables, or the method's defaults.
    pub fn effective_observables(&self) -> Vec<Observable> {
        if self.observables.is_empty() {
            self.method.default_observables()
        } else {
            let mut out: Vec<Observable> = Vec::new();
            for o in &self.observables {
                if !out.contains(o) {
                    out.push(*o);
                }
            }
            out
        }
    }

    pub fn axes(&self) -> Vec<Axis> {
        std::iter::once(self.axis1).chain(self.axis2).collect()
    }

    pub fn len(&self) -> usize {
        self.axes().iter().map(|a| a.count).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Parameters of grid point `k` (axis 1 outer, axis 2 inner).
    pub fn point(&self, k: usize) -> ModelParams {
        let mut p = self.base;
        match self.axis2 {
            Some(a2) => {
                self.axis1.param.set(&mut p, self.axis1.value(k / a2.count));
                a2.param.set(&mut p, a2.value(k % a2.count));
            }
            None => self.axis1.param.set(&mut p, self.axis1.value(k)),
        }
        p
    }

    pub fn points(&self) -> impl Iterator<Item = ModelParams> + '_ {
        (0..self.len()).map(|k| self.point(k))
    }

    /// Column names: axis parameters, then observables. `p1`/`p2` are
    /// numerical; their weak-drive counterparts carry an `_analytic` suffix.
    pub fn columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = self.axes().iter().map(|a| a.param.name().to_owned()).collect();
        for o in self.effective_observables() {
            match o {
                Observable::P1 | Observable::P2 => {
                    if self.method.numeric() {
                        cols.push(o.name().to_owned());
                    }
                    if self.method.analytic() {
                        cols.push(format!("{}_analytic", o.name()));
                    }
                }
                Observable::PoissonDev => {
                    cols.extend((0..self.base.n_cut).map(|m| format!("poisson_ratio_{m}")));
                }
                _ => cols.push(o.name().to_owned()),
            }
        }
        cols
    }

    pub fn validate(&self) -> Result<()> {
        self.axis1.validate()?;
        if let Some(a2) = &self.axis2 {
            a2.validate()?;
            if a2.param == self.axis1.param {
                return Err(Error::InvalidSpec(format!("both axes sweep '{}'", a2.param)));
            }
        }
        self.base.validate().map_err(|e| Error::InvalidSpec(e.to_string()))?;
        for o in self.effective_observables() {
            let needs_numeric = matches!(o, Observable::G2Cw | Observable::MeanNCw | Observable::PoissonDev);
            if needs_numeric && !self.method.numeric() {
                return Err(Error::InvalidSpec(format!("observable '{o}' needs method numeric or both")));
            }
            if o == Observable::G2Analytic && !self.method.analytic() {
                return Err(Error::InvalidSpec(format!("observable '{o}' needs method analytic or both")));
            }
        }
        for p in self.points() {
            p.validate().map_err(|e| Error::InvalidSpec(e.to_string()))?;
            if self.method.analytic() {
                analytic::check_regime(&p)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointFailure {
    pub row: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub tool_version: String,
    pub n_cut: usize,
    pub points: usize,
    pub failed: usize,
    /// Largest and mean steady-state residual ‖L ρ‖ over numeric points.
    pub residual_max: Option<f64>,
    pub residual_mean: Option<f64>,
    pub failures: Vec<PointFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub spec: SweepSpec,
    pub columns: Vec<String>,
    /// One row per grid point in grid order; failed observables are NaN.
    pub rows: Vec<Vec<f64>>,
    pub metadata: Metadata,
}

impl SweepTable {
    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::InvalidSpec(format!("no column '{name}' (have {})", self.columns.join(", "))))
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn is_2d(&self) -> bool {
        self.spec.axis2.is_some()
    }

    /// Smallest finite value of a column with the axis values where it occurs.
    pub fn min_of(&self, name: &str) -> Result<Option<(Vec<f64>, f64)>> {
        let i = self.column_index(name)?;
        let n_axes = self.spec.axes().len();
        let best = self
            .rows
            .iter()
            .filter(|r| r[i].is_finite())
            .min_by(|a, b| a[i].total_cmp(&b[i]));
        Ok(best.map(|r| (r[..n_axes].to_vec(), r[i])))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    /// Worker threads; 0 uses every available core.
    pub jobs: usize,
    pub tolerances: Tolerances,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { jobs: 0, tolerances: Tolerances::default() }
    }
}

fn missing<T>() -> Result<T> {
    Err(Error::Unsupported("solver failed at this point".into()))
}

struct PointResult {
    values: Vec<f64>,
    residual: Option<f64>,
    error: Option<String>,
}

/// Steady state and its residual, along the same path as
/// [`dynamics::steady_state_for`].
fn numeric_state(p: &ModelParams, tol: &Tolerances) -> Result<(DensityMatrix, f64)> {
    let model = Model::new(*p)?;
    let l = dynamics::model_liouvillian(&model)?;
    let rho = if p.omega_drv == 0.0 {
        DensityMatrix::pure(model.layout(), BasisState::ground(0, 0))?
    } else {
        dynamics::steady_state_with(&l, tol)?
    };
    let residual = l.residual(&rho);
    Ok((rho, residual))
}

fn evaluate(spec: &SweepSpec, observables: &[Observable], width: usize, p: &ModelParams, tol: &Tolerances) -> PointResult {
    let mut values = Vec::with_capacity(width);
    let mut residual = None;
    let mut errors: Vec<String> = Vec::new();
    for a in spec.axes() {
        values.push(a.param.get(p));
    }

    let numeric = if spec.method.numeric() {
        match numeric_state(p, tol) {
            Ok((rho, r)) => {
                residual = Some(r);
                Some(rho)
            }
            Err(e) => {
                errors.push(e.to_string());
                None
            }
        }
    } else {
        None
    };
    let amps = if spec.method.analytic() {
        analytic::steady_amplitudes(p).map_err(|e| errors.push(e.to_string())).ok()
    } else {
        None
    };
    let dist = numeric.as_ref().map(|rho| dynamics::photon_distribution(rho, Mode::Cw));

    let push = |r: Result<f64>, values: &mut Vec<f64>, errors: &mut Vec<String>| match r {
        Ok(v) => values.push(v),
        Err(e) => {
            errors.push(e.to_string());
            values.push(f64::NAN);
        }
    };
    for o in observables {
        match o {
            Observable::G2Cw => {
                let r = dist.as_deref().map_or_else(missing, dynamics::g2_from_distribution);
                push(r, &mut values, &mut errors);
            }
            Observable::G2Analytic => {
                let r = amps.as_ref().map_or_else(missing, |a| analytic::analytic_g2(a).map(|g| g.approximate));
                push(r, &mut values, &mut errors);
            }
            Observable::MeanNCw => {
                let r = numeric.as_ref().map_or_else(missing, |rho| Ok(dynamics::mean_photon(rho, Mode::Cw)));
                push(r, &mut values, &mut errors);
            }
            Observable::P1 | Observable::P2 => {
                let m = if *o == Observable::P1 { 1 } else { 2 };
                if spec.method.numeric() {
                    let r = dist.as_ref().map_or_else(missing, |d| Ok(d.get(m).copied().unwrap_or(0.0)));
                    push(r, &mut values, &mut errors);
                }
                if spec.method.analytic() {
                    let r = amps.as_ref().map_or_else(missing, |a| Ok(if m == 1 { a.p1() } else { a.p2() }));
                    push(r, &mut values, &mut errors);
                }
            }
            Observable::PoissonDev => {
                let n = spec.base.n_cut;
                match dist.as_ref().map_or_else(missing, |d| {
                    let mean = d.iter().enumerate().map(|(m, pm)| m as f64 * pm).sum();
                    dynamics::poisson_deviation(d, mean)
                }) {
                    Ok(c) => values.extend(c.ratio),
                    Err(e) => {
                        errors.push(e.to_string());
                        values.extend(std::iter::repeat(f64::NAN).take(n));
                    }
                }
            }
        }
    }
    debug_assert_eq!(values.len(), width);
    let error = (!errors.is_empty()).then(|| {
        errors.dedup();
        errors.join("; ")
    });
    PointResult { values, residual, error }
}

/// Evaluate every grid point of `spec` on the default worker pool.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepTable> {
    run_sweep_with(spec, &SweepOptions::default())
}

pub fn run_sweep_with(spec: &SweepSpec, opts: &SweepOptions) -> Result<SweepTable> {
    spec.validate()?;
    let observables = spec.effective_observables();
    let columns = spec.columns();
    let width = columns.len();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| Error::Backend(e.to_string()))?;
    let tol = opts.tolerances;
    let results: Vec<PointResult> = pool.install(|| {
        (0..spec.len())
            .into_par_iter()
            .map(|k| evaluate(spec, &observables, width, &spec.point(k), &tol))
            .collect()
    });

    let total = results.len();
    let failures: Vec<PointFailure> = results
        .iter()
        .enumerate()
        .filter_map(|(row, r)| r.error.clone().map(|message| PointFailure { row, message }))
        .collect();
    if 2 * failures.len() > total {
        return Err(Error::SweepFailed { failed: failures.len(), total });
    }
    let residuals: Vec<f64> = results.iter().filter_map(|r| r.residual).collect();
    let residual_max = residuals.iter().copied().reduce(f64::max);
    let residual_mean = (!residuals.is_empty()).then(|| residuals.iter().sum::<f64>() / residuals.len() as f64);
    let metadata = Metadata {
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        n_cut: spec.base.n_cut,
        points: total,
        failed: failures.len(),
        residual_max,
        residual_mean,
        failures,
    };
    Ok(SweepTable {
        spec: spec.clone(),
        columns,
        rows: results.into_iter().map(|r| r.values).collect(),
        metadata,
    })
}

/// A local minimum of a 1D column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Minimum {
    pub index: usize,
    pub position: f64,
    pub value: f64,
}

/// Interior minima of `values` over `axis`: a point (or the first point of a
/// flat run) strictly below both neighbours. Endpoints and NaN never qualify.
pub fn local_minima(axis: &[f64], values: &[f64]) -> Vec<Minimum> {
    let n = values.len().min(axis.len());
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        let v = values[i];
        let mut end = i;
        while end + 1 < n && values[end + 1] == v {
            end += 1;
        }
        if v.is_finite() && end + 1 < n && values[i - 1] > v && values[end + 1] > v {
            out.push(Minimum { index: i, position: axis[i], value: v });
        }
        i = end + 1;
    }
    out
}

/// Local minima of a column of a 1D sweep.
pub fn find_minima(table: &SweepTable, observable: &str) -> Result<Vec<Minimum>> {
    if table.is_2d() {
        return Err(Error::Unsupported("minimum search needs a 1D sweep".into()));
    }
    let values = table.column(observable)?;
    let axis = table.column(table.spec.axis1.param.name())?;
    Ok(local_minima(&axis, &values))
}
