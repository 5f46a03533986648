//! Truncated Fock-space and two-level-atom operators on the composite space
//! CW mode ⊗ CCW mode ⊗ atom.
//!
//! Basis ordering is fixed: `index = (m * n_cut + n) * 2 + s`, with `m` the CW
//! photon number, `n` the CCW photon number and `s` the atomic state
//! (0 = ground, 1 = excited). The atom is the fastest-varying index. Every
//! serialized density matrix and every subspace restriction depends on it.

use ndarray::{linalg::kron, Array1, Array2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ATOM_DIM: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpaceLayout {
    n_cut: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    Cw,
    Ccw,
    Atom,
}

/// Atomic state label in the composite basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AtomState {
    Ground,
    Excited,
}

impl AtomState {
    fn index(self) -> usize {
        match self {
            AtomState::Ground => 0,
            AtomState::Excited => 1,
        }
    }
}

/// A product basis state `|m, n, g/e⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisState {
    pub cw: usize,
    pub ccw: usize,
    pub atom: AtomState,
}

impl BasisState {
    pub const fn new(cw: usize, ccw: usize, atom: AtomState) -> Self {
        BasisState { cw, ccw, atom }
    }

    pub const fn ground(cw: usize, ccw: usize) -> Self {
        Self::new(cw, ccw, AtomState::Ground)
    }

    pub const fn excited(cw: usize, ccw: usize) -> Self {
        Self::new(cw, ccw, AtomState::Excited)
    }

    pub fn excitations(&self) -> usize {
        self.cw + self.ccw + self.atom.index()
    }
}

impl SpaceLayout {
    pub fn new(n_cut: usize) -> Result<Self> {
        if n_cut < 2 {
            return Err(Error::InvalidDimension(n_cut));
        }
        Ok(SpaceLayout { n_cut })
    }

    pub fn n_cut(&self) -> usize {
        self.n_cut
    }

    pub fn slot_dim(&self, slot: Slot) -> usize {
        match slot {
            Slot::Cw | Slot::Ccw => self.n_cut,
            Slot::Atom => ATOM_DIM,
        }
    }

    pub fn total_dim(&self) -> usize {
        self.n_cut * self.n_cut * ATOM_DIM
    }

    /// Composite index of `state`, or `None` if it lies above the truncation.
    pub fn index(&self, state: BasisState) -> Option<usize> {
        if state.cw >= self.n_cut || state.ccw >= self.n_cut {
            return None;
        }
        Some((state.cw * self.n_cut + state.ccw) * ATOM_DIM + state.atom.index())
    }

    pub fn state(&self, index: usize) -> BasisState {
        let s = index % ATOM_DIM;
        let mode = index / ATOM_DIM;
        let atom = if s == 0 { AtomState::Ground } else { AtomState::Excited };
        BasisState::new(mode / self.n_cut, mode % self.n_cut, atom)
    }

    /// Column vector for a product basis state.
    pub fn ket(&self, state: BasisState) -> Result<Array1<C64>> {
        let idx = self
            .index(state)
            .ok_or_else(|| Error::Layout(format!("{state:?} exceeds n_cut = {}", self.n_cut)))?;
        let mut v = Array1::zeros(self.total_dim());
        v[idx] = C64::new(1.0, 0.0);
        Ok(v)
    }
}

/// Single-mode annihilation operator truncated to `dim` Fock levels.
pub fn fock_annihilation(dim: usize) -> Result<Array2<C64>> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let mut a = Array2::zeros((dim, dim));
    for k in 1..dim {
        a[[k - 1, k]] = C64::new((k as f64).sqrt(), 0.0);
    }
    Ok(a)
}

/// Atomic lowering operator σ₋ in the ordering (g, e).
pub fn atom_lowering() -> Array2<C64> {
    let mut s = Array2::zeros((ATOM_DIM, ATOM_DIM));
    s[[0, 1]] = C64::new(1.0, 0.0);
    s
}

pub fn dagger(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

/// Lift a single-subsystem operator onto the composite space.
pub fn embed(op: &Array2<C64>, slot: Slot, layout: SpaceLayout) -> Result<Operator> {
    let dim = layout.slot_dim(slot);
    if op.nrows() != dim || op.ncols() != dim {
        return Err(Error::Layout(format!(
            "{slot:?} slot expects a {dim}x{dim} operator, got {}x{}",
            op.nrows(),
            op.ncols()
        )));
    }
    let id = |n: usize| Array2::<C64>::eye(n);
    let n = layout.n_cut();
    let matrix = match slot {
        Slot::Cw => kron(&kron(op, &id(n)), &id(ATOM_DIM)),
        Slot::Ccw => kron(&kron(&id(n), op), &id(ATOM_DIM)),
        Slot::Atom => kron(&id(n * n), op),
    };
    Ok(Operator { layout, matrix })
}

/// A dense operator on the composite space.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    layout: SpaceLayout,
    matrix: Array2<C64>,
}

impl Operator {
    pub fn from_matrix(layout: SpaceLayout, matrix: Array2<C64>) -> Result<Self> {
        let d = layout.total_dim();
        if matrix.dim() != (d, d) {
            return Err(Error::Layout(format!(
                "expected {d}x{d} matrix, got {:?}",
                matrix.dim()
            )));
        }
        Ok(Operator { layout, matrix })
    }

    pub fn zeros(layout: SpaceLayout) -> Self {
        let d = layout.total_dim();
        Operator { layout, matrix: Array2::zeros((d, d)) }
    }

    pub fn identity(layout: SpaceLayout) -> Self {
        Operator { layout, matrix: Array2::eye(layout.total_dim()) }
    }

    pub fn layout(&self) -> SpaceLayout {
        self.layout
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn check_layout(&self, other: &Operator) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::Layout(format!(
                "n_cut {} vs {}",
                self.layout.n_cut(),
                other.layout.n_cut()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        self.check_layout(other)?;
        Ok(Operator { layout: self.layout, matrix: &self.matrix + &other.matrix })
    }

    pub fn sub(&self, other: &Operator) -> Result<Operator> {
        self.check_layout(other)?;
        Ok(Operator { layout: self.layout, matrix: &self.matrix - &other.matrix })
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &Operator) -> Result<Operator> {
        self.check_layout(other)?;
        Ok(Operator { layout: self.layout, matrix: self.matrix.dot(&other.matrix) })
    }

    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    pub fn scale(&self, c: impl Into<C64>) -> Operator {
        let c = c.into();
        Operator { layout: self.layout, matrix: self.matrix.mapv(|z| z * c) }
    }

    /// In-place `self += c · other`.
    pub fn add_scaled(&mut self, c: impl Into<C64>, other: &Operator) -> Result<()> {
        self.check_layout(other)?;
        let c = c.into();
        self.matrix.zip_mut_with(&other.matrix, |a, b| *a += c * b);
        Ok(())
    }

    pub fn adjoint(&self) -> Operator {
        Operator { layout: self.layout, matrix: dagger(&self.matrix) }
    }

    /// Largest entry of |A − A†|.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.matrix[[i, j]] - self.matrix[[j, i]].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn apply(&self, v: &Array1<C64>) -> Array1<C64> {
        self.matrix.dot(v)
    }

    /// Matrix restricted to the span of `states` (rows and columns in that order).
    pub fn restrict(&self, states: &[BasisState]) -> Result<Array2<C64>> {
        let idx = states
            .iter()
            .map(|&s| {
                self.layout
                    .index(s)
                    .ok_or_else(|| Error::Layout(format!("{s:?} exceeds truncation")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Array2::from_shape_fn((idx.len(), idx.len()), |(i, j)| {
            self.matrix[[idx[i], idx[j]]]
        }))
    }
}

/// The ladder operators of the composite space, built once per layout.
#[derive(Debug, Clone)]
pub struct Ladder {
    pub a_cw: Operator,
    pub a_ccw: Operator,
    pub sigma_minus: Operator,
}

impl Ladder {
    pub fn new(layout: SpaceLayout) -> Result<Self> {
        let a = fock_annihilation(layout.n_cut())?;
        Ok(Ladder {
            a_cw: embed(&a, Slot::Cw, layout)?,
            a_ccw: embed(&a, Slot::Ccw, layout)?,
            sigma_minus: embed(&atom_lowering(), Slot::Atom, layout)?,
        })
    }

    pub fn mode(&self, mode: Mode) -> &Operator {
        match mode {
            Mode::Cw => &self.a_cw,
            Mode::Ccw => &self.a_ccw,
        }
    }
}

/// Cavity mode selector for photon-statistics observables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Cw,
    Ccw,
}
