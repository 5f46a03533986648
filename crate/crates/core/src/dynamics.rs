//! Lindblad dynamics on the composite space and the photon statistics derived
//! from a density matrix.
//!
//! The generator is
//! `L[ρ] = −i[H, ρ] + Σ (r/2)(2 o ρ o† − o†o ρ − ρ o†o)`,
//! so an undriven cavity loses ⟨a†a⟩ at rate κ and its field amplitude at κ/2,
//! the same convention as `H − i(κ/2)a†a` in the effective Hamiltonian.
//! Density matrices are vectorized by stacking columns: `ρ[i, j]` sits at
//! `i + N j`.

use std::collections::HashMap;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{BasisState, Mode, Operator, SpaceLayout};
use crate::linalg;
use crate::model::{Channel, Model, ModelParams};

/// Numerical tolerances shared by the solvers and state checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Max-norm bound on `L[ρ_ss]`.
    pub residual: f64,
    pub trace: f64,
    pub hermiticity: f64,
    /// Most negative eigenvalue tolerated in a density matrix.
    pub positivity: f64,
    /// Trace drift allowed during time evolution.
    pub evolve_drift: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            residual: 1e-10,
            trace: 1e-10,
            hermiticity: 1e-10,
            positivity: 1e-8,
            evolve_drift: 1e-8,
        }
    }
}

/// Sparse Liouvillian in CSR form acting on column-stacked density matrices.
#[derive(Debug, Clone)]
pub struct Superoperator {
    layout: SpaceLayout,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
    dissipative: bool,
}

impl Superoperator {
    pub fn layout(&self) -> SpaceLayout {
        self.layout
    }

    /// Side length `N²` of the superoperator.
    pub fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// True if at least one channel has a strictly positive rate.
    pub fn is_dissipative(&self) -> bool {
        self.dissipative
    }

    fn from_entries(layout: SpaceLayout, entries: HashMap<(usize, usize), C64>, dissipative: bool) -> Self {
        let n = layout.total_dim().pow(2);
        let mut sorted: Vec<_> = entries.into_iter().collect();
        sorted.sort_unstable_by_key(|&(k, _)| k);
        let mut row_ptr = vec![0; n + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());
        for ((r, c), v) in sorted {
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Superoperator { layout, row_ptr, col_idx, values, dissipative }
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim()).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.values[k]))
        })
    }

    pub fn apply_vec(&self, x: &[C64], out: &mut [C64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *o = acc;
        }
    }

    pub fn apply(&self, rho: &Array2<C64>) -> Array2<C64> {
        let n = self.layout.total_dim();
        let x = vectorize(rho);
        let mut y = vec![C64::new(0.0, 0.0); x.len()];
        self.apply_vec(&x, &mut y);
        unvectorize(&y, n)
    }

    /// Max-norm of `L[ρ]`.
    pub fn residual(&self, rho: &DensityMatrix) -> f64 {
        self.apply(rho.matrix()).iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Max-norm of `L†[vec(I)]`; zero for a trace-preserving generator.
    pub fn trace_preservation_error(&self) -> f64 {
        let n = self.layout.total_dim();
        let mut acc = vec![C64::new(0.0, 0.0); self.dim()];
        for i in 0..n {
            let r = i + n * i;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc[self.col_idx[k]] += self.values[k].conj();
            }
        }
        acc.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

fn vectorize(rho: &Array2<C64>) -> Vec<C64> {
    rho.t().iter().copied().collect()
}

fn unvectorize(v: &[C64], n: usize) -> Array2<C64> {
    Array2::from_shape_fn((n, n), |(i, j)| v[i + n * j])
}

/// Add `c · (a ⊗ b)` for dense `a`, `b` into the sparse accumulator.
fn add_kron(acc: &mut HashMap<(usize, usize), C64>, c: C64, a: &Array2<C64>, b: &Array2<C64>) {
    let nb = b.nrows();
    let nz = |m: &Array2<C64>| {
        m.indexed_iter()
            .filter(|(_, z)| z.norm() != 0.0)
            .map(|((i, j), z)| (i, j, *z))
            .collect::<Vec<_>>()
    };
    let (an, bn) = (nz(a), nz(b));
    for &(i, j, x) in &an {
        for &(k, l, y) in &bn {
            *acc.entry((i * nb + k, j * nb + l)).or_default() += c * x * y;
        }
    }
}

pub fn liouvillian(h: &Operator, channels: &[Channel]) -> Result<Superoperator> {
    let layout = h.layout();
    let mut heff = h.clone();
    for ch in channels {
        if ch.op.layout() != layout {
            return Err(Error::Layout("channel operator layout differs from the Hamiltonian".into()));
        }
        if !(ch.rate >= 0.0) {
            return Err(Error::Parameter(format!("channel rate must be non-negative, got {}", ch.rate)));
        }
        let n_op = ch.op.adjoint().mul(&ch.op)?;
        heff.add_scaled(C64::new(0.0, -ch.rate / 2.0), &n_op)?;
    }
    let id = Array2::<C64>::eye(layout.total_dim());
    let heff = heff.into_matrix();
    let mut acc = HashMap::new();
    // −i H_eff ρ + i ρ H_eff†
    add_kron(&mut acc, C64::new(0.0, -1.0), &id, &heff);
    add_kron(&mut acc, C64::new(0.0, 1.0), &heff.mapv(|z| z.conj()), &id);
    for ch in channels.iter().filter(|c| c.rate > 0.0) {
        let o = ch.op.matrix();
        add_kron(&mut acc, C64::new(ch.rate, 0.0), &o.mapv(|z| z.conj()), o);
    }
    acc.retain(|_, z| z.norm() != 0.0);
    let dissipative = channels.iter().any(|c| c.rate > 0.0);
    Ok(Superoperator::from_entries(layout, acc, dissipative))
}

/// Liouvillian of a parameter point.
pub fn model_liouvillian(model: &Model) -> Result<Superoperator> {
    liouvillian(&model.hamiltonian(), &model.collapse_operators())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    layout: SpaceLayout,
    matrix: Array2<C64>,
}

impl DensityMatrix {
    /// Wrap a matrix and check trace, Hermiticity and positivity.
    pub fn new(layout: SpaceLayout, matrix: Array2<C64>, tol: &Tolerances) -> Result<Self> {
        let rho = Self::unchecked(layout, matrix)?;
        rho.check(tol)?;
        Ok(rho)
    }

    fn unchecked(layout: SpaceLayout, matrix: Array2<C64>) -> Result<Self> {
        let d = layout.total_dim();
        if matrix.dim() != (d, d) {
            return Err(Error::Layout(format!("expected {d}x{d} density matrix, got {:?}", matrix.dim())));
        }
        Ok(DensityMatrix { layout, matrix })
    }

    pub fn pure(layout: SpaceLayout, state: BasisState) -> Result<Self> {
        let idx = layout
            .index(state)
            .ok_or_else(|| Error::Layout(format!("{state:?} exceeds truncation")))?;
        let d = layout.total_dim();
        let mut m = Array2::zeros((d, d));
        m[[idx, idx]] = C64::new(1.0, 0.0);
        Ok(DensityMatrix { layout, matrix: m })
    }

    /// Incoherent mixture of basis states with the given weights.
    pub fn diagonal(layout: SpaceLayout, weights: &[(BasisState, f64)], tol: &Tolerances) -> Result<Self> {
        let d = layout.total_dim();
        let mut m = Array2::zeros((d, d));
        for &(s, w) in weights {
            let idx = layout
                .index(s)
                .ok_or_else(|| Error::Layout(format!("{s:?} exceeds truncation")))?;
            m[[idx, idx]] += C64::new(w, 0.0);
        }
        Self::new(layout, m, tol)
    }

    pub fn layout(&self) -> SpaceLayout {
        self.layout
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.diag().sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.matrix[[i, j]] - self.matrix[[j, i]].conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let ev = linalg::hermitian_eigenvalues(&self.matrix)?;
        Ok(ev.first().copied().unwrap_or(0.0))
    }

    pub fn check(&self, tol: &Tolerances) -> Result<()> {
        let tr = self.trace();
        if (tr - 1.0).norm() > tol.trace {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let herm = self.hermiticity_error();
        if herm > tol.hermiticity {
            return Err(Error::InvalidState(format!("hermiticity error {herm:.3e}")));
        }
        let min = self.min_eigenvalue()?;
        if min < -tol.positivity {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    /// Max-entry distance to another state on the same layout.
    pub fn max_distance(&self, other: &DensityMatrix) -> f64 {
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }
}

/// Steady state with the default tolerances.
pub fn steady_state(l: &Superoperator) -> Result<DensityMatrix> {
    steady_state_with(l, &Tolerances::default())
}

/// Solve `L[ρ] = 0` with the `ρ[0,0]` equation replaced by `Tr ρ = 1`.
pub fn steady_state_with(l: &Superoperator, tol: &Tolerances) -> Result<DensityMatrix> {
    if !l.is_dissipative() {
        return Err(Error::NoUniqueSteadyState("every decay rate is zero".into()));
    }
    let n = l.layout.total_dim();
    let dim = l.dim();
    let mut entries: Vec<_> = l.entries().filter(|&(r, _, _)| r != 0).collect();
    entries.extend((0..n).map(|i| (0, i + n * i, C64::new(1.0, 0.0))));
    let mut rhs = vec![C64::new(0.0, 0.0); dim];
    rhs[0] = C64::new(1.0, 0.0);
    let x = linalg::sparse_solve(dim, &entries, &rhs)?;
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NoUniqueSteadyState("singular Liouvillian".into()));
    }
    let m = unvectorize(&x, n);
    // project out the anti-Hermitian rounding noise
    let m = (&m + &m.t().mapv(|z| z.conj())).mapv(|z| z * 0.5);
    let rho = DensityMatrix::unchecked(l.layout, m)?;
    let residual = l.residual(&rho);
    if !(residual <= tol.residual) {
        return Err(Error::Convergence { residual, tolerance: tol.residual });
    }
    rho.check(tol)?;
    Ok(rho)
}

/// Steady state of a parameter point. `Ω = 0` short-circuits to the exact vacuum.
pub fn steady_state_for(params: &ModelParams, tol: &Tolerances) -> Result<DensityMatrix> {
    let model = Model::new(*params)?;
    if params.omega_drv == 0.0 {
        return DensityMatrix::pure(model.layout(), BasisState::ground(0, 0));
    }
    steady_state_with(&model_liouvillian(&model)?, tol)
}

/// Fixed-step classical RK4 on the vectorized master equation.
pub fn evolve(rho0: &DensityMatrix, l: &Superoperator, t_final: f64, dt: f64) -> Result<DensityMatrix> {
    evolve_with(rho0, l, t_final, dt, &Tolerances::default())
}

pub fn evolve_with(
    rho0: &DensityMatrix,
    l: &Superoperator,
    t_final: f64,
    dt: f64,
    tol: &Tolerances,
) -> Result<DensityMatrix> {
    if rho0.layout != l.layout {
        return Err(Error::Layout("initial state and Liouvillian layouts differ".into()));
    }
    if !(dt > 0.0) || !(t_final >= dt) || !t_final.is_finite() {
        return Err(Error::Parameter(format!("need dt > 0 and t_final >= dt, got dt = {dt}, t_final = {t_final}")));
    }
    let steps = (t_final / dt).ceil() as usize;
    let h = t_final / steps as f64;
    let n = l.layout.total_dim();
    let dim = l.dim();
    let tr0 = rho0.trace();

    let mut y = vectorize(&rho0.matrix);
    let zero = C64::new(0.0, 0.0);
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![zero; dim], vec![zero; dim], vec![zero; dim], vec![zero; dim], vec![zero; dim]);
    let axpy = |out: &mut [C64], y: &[C64], a: f64, k: &[C64]| {
        for ((o, y), k) in out.iter_mut().zip(y).zip(k) {
            *o = y + k * a;
        }
    };
    for step in 1..=steps {
        l.apply_vec(&y, &mut k1);
        axpy(&mut tmp, &y, h / 2.0, &k1);
        l.apply_vec(&tmp, &mut k2);
        axpy(&mut tmp, &y, h / 2.0, &k2);
        l.apply_vec(&tmp, &mut k3);
        axpy(&mut tmp, &y, h, &k3);
        l.apply_vec(&tmp, &mut k4);
        for i in 0..dim {
            y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }

        let tr: C64 = (0..n).map(|i| y[i + n * i]).sum();
        let drift = (tr - tr0).norm();
        let mut herm = 0.0f64;
        for i in 0..n {
            for j in i..n {
                herm = herm.max((y[i + n * j] - y[j + n * i].conj()).norm());
            }
        }
        if !(drift <= tol.evolve_drift) || !(herm <= tol.evolve_drift) {
            return Err(Error::Integration { drift: drift.max(herm), time: step as f64 * h });
        }
    }
    DensityMatrix::unchecked(l.layout, unvectorize(&y, n))
}

/// Photon-number distribution of one cavity mode, `P(0..n_cut)`.
pub fn photon_distribution(rho: &DensityMatrix, mode: Mode) -> Vec<f64> {
    let layout = rho.layout;
    let mut p = vec![0.0; layout.n_cut()];
    for idx in 0..layout.total_dim() {
        let s = layout.state(idx);
        let m = match mode {
            Mode::Cw => s.cw,
            Mode::Ccw => s.ccw,
        };
        p[m] += rho.matrix[[idx, idx]].re;
    }
    // populations may carry rounding noise of either sign
    p.iter_mut().for_each(|x| *x = x.max(0.0));
    p
}

/// ⟨a†a⟩ of the chosen mode.
pub fn mean_photon(rho: &DensityMatrix, mode: Mode) -> f64 {
    factorial_moment(&photon_distribution(rho, mode), 1)
}

/// ⟨a†^k a^k⟩ = Σ m(m−1)…(m−k+1) P(m); the operators are diagonal in the Fock basis.
fn factorial_moment(p: &[f64], k: usize) -> f64 {
    p.iter()
        .enumerate()
        .map(|(m, &pm)| (0..k).map(|i| m as f64 - i as f64).product::<f64>().max(0.0) * pm)
        .sum()
}

/// Equal-time second-order correlation `⟨a†²a²⟩ / ⟨a†a⟩²`.
pub fn g2_zero(rho: &DensityMatrix, mode: Mode) -> Result<f64> {
    g2_from_distribution(&photon_distribution(rho, mode))
}

pub fn g2_from_distribution(p: &[f64]) -> Result<f64> {
    let n = factorial_moment(p, 1);
    if !(n > 0.0) {
        return Err(Error::UndefinedCorrelation(n));
    }
    Ok(factorial_moment(p, 2) / (n * n))
}

/// Photon distribution compared against a Poisson law of the given mean.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoissonComparison {
    pub mean: f64,
    /// `P(m) / 𝒫(m)`.
    pub ratio: Vec<f64>,
    /// `(P(m) − 𝒫(m)) / 𝒫(m)`.
    pub deviation: Vec<f64>,
}

pub fn poisson_pmf(mean: f64, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut term = (-mean).exp();
    for m in 0..len {
        if m > 0 {
            term *= mean / m as f64;
        }
        out.push(term);
    }
    out
}

pub fn poisson_deviation(p: &[f64], mean: f64) -> Result<PoissonComparison> {
    if !(mean > 0.0) {
        return Err(Error::UndefinedCorrelation(mean));
    }
    let ratio: Vec<f64> = p.iter().zip(poisson_pmf(mean, p.len())).map(|(a, b)| a / b).collect();
    let deviation = ratio.iter().map(|r| r - 1.0).collect();
    Ok(PoissonComparison { mean, ratio, deviation })
}
