//! Rotating-frame Hamiltonian of the driven two-mode cavity with one two-level
//! atom, plus its dissipative channels.
//!
//! All rates are in units of the cavity decay `kappa`. The atom is assumed
//! resonant with both cavity modes, so a single detuning `delta` (cavity minus
//! drive) shifts photons and the atomic excitation alike. Only the CW mode is
//! driven.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{Ladder, Operator, SpaceLayout};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// Drive–cavity detuning Δ = ω − ω_p.
    pub delta: f64,
    /// Atom–mode coupling, identical for both modes.
    pub g: f64,
    /// Kerr nonlinearity χ.
    pub chi: f64,
    /// Drive amplitude Ω on the CW mode.
    #[serde(rename = "omega")]
    pub omega_drv: f64,
    /// Total decay rate of each cavity mode.
    pub kappa: f64,
    /// Atomic spontaneous emission rate.
    pub gamma: f64,
    /// Backscattering (CW ↔ CCW) coupling J.
    #[serde(rename = "j")]
    pub j_coupling: f64,
    /// Fock levels kept per cavity mode.
    pub n_cut: usize,
}

impl Default for ModelParams {
    /// The resonant-drive working point used throughout: g = 1.33κ, χ = 8κ,
    /// Ω = 0.1κ, γ = κ.
    fn default() -> Self {
        ModelParams {
            delta: 0.0,
            g: 1.33,
            chi: 8.0,
            omega_drv: 0.1,
            kappa: 1.0,
            gamma: 1.0,
            j_coupling: 0.0,
            n_cut: 5,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("delta", self.delta),
            ("g", self.g),
            ("chi", self.chi),
            ("omega", self.omega_drv),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("j", self.j_coupling),
        ];
        if let Some((name, v)) = named.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Parameter(format!("{name} = {v} is not finite")));
        }
        if self.kappa <= 0.0 {
            return Err(Error::Parameter(format!("kappa must be positive, got {}", self.kappa)));
        }
        for (name, v) in [("g", self.g), ("chi", self.chi), ("omega", self.omega_drv), ("gamma", self.gamma)] {
            if v < 0.0 {
                return Err(Error::Parameter(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.n_cut < 2 {
            return Err(Error::Parameter(format!("n_cut must be at least 2, got {}", self.n_cut)));
        }
        Ok(())
    }

    pub fn layout(&self) -> Result<SpaceLayout> {
        SpaceLayout::new(self.n_cut)
    }
}

/// A dissipation channel `(operator, rate)`.
#[derive(Debug, Clone)]
pub struct Channel {
    pub op: Operator,
    pub rate: f64,
}

/// Operators of one parameter point, built once.
#[derive(Debug, Clone)]
pub struct Model {
    params: ModelParams,
    ladder: Ladder,
}

impl Model {
    pub fn new(params: ModelParams) -> Result<Self> {
        params.validate()?;
        let ladder = Ladder::new(params.layout()?)?;
        Ok(Model { params, ladder })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn ladder(&self) -> &Ladder {
        &self.ladder
    }

    pub fn layout(&self) -> SpaceLayout {
        self.ladder.a_cw.layout()
    }

    /// N = a₁†a₁ + a₂†a₂ + σ₊σ₋.
    pub fn excitation_number(&self) -> Operator {
        let l = &self.ladder;
        let mut n = number(&l.a_cw);
        n.add_scaled(1.0, &number(&l.a_ccw)).unwrap();
        n.add_scaled(1.0, &number(&l.sigma_minus)).unwrap();
        n
    }

    pub fn hamiltonian(&self) -> Operator {
        let p = &self.params;
        let l = &self.ladder;
        let (a1, a2, sm) = (&l.a_cw, &l.a_ccw, &l.sigma_minus);
        let (a1d, a2d, sp) = (a1.adjoint(), a2.adjoint(), sm.adjoint());

        let mut h = self.excitation_number().scale(p.delta);
        for a in [a1, a2] {
            let ad = a.adjoint();
            let kerr = ad.mul(&ad).unwrap().mul(a).unwrap().mul(a).unwrap();
            h.add_scaled(p.chi, &kerr).unwrap();
        }
        for (a, ad) in [(a1, &a1d), (a2, &a2d)] {
            let exchange = ad.mul(sm).unwrap().add(&a.mul(&sp).unwrap()).unwrap();
            h.add_scaled(p.g, &exchange).unwrap();
        }
        h.add_scaled(p.omega_drv, &a1d.add(a1).unwrap()).unwrap();
        let hop = a1d.mul(a2).unwrap().add(&a2d.mul(a1).unwrap()).unwrap();
        h.add_scaled(p.j_coupling, &hop).unwrap();
        h
    }

    /// H − i(κ/2)(a₁†a₁ + a₂†a₂) − i(γ/2)σ₊σ₋.
    pub fn effective_hamiltonian(&self) -> Operator {
        let mut h = self.hamiltonian();
        for ch in self.collapse_operators() {
            h.add_scaled(C64::new(0.0, -ch.rate / 2.0), &number(&ch.op)).unwrap();
        }
        h
    }

    /// Always `[(a₁, κ), (a₂, κ), (σ₋, γ)]`, including zero-rate channels.
    pub fn collapse_operators(&self) -> Vec<Channel> {
        let l = &self.ladder;
        vec![
            Channel { op: l.a_cw.clone(), rate: self.params.kappa },
            Channel { op: l.a_ccw.clone(), rate: self.params.kappa },
            Channel { op: l.sigma_minus.clone(), rate: self.params.gamma },
        ]
    }
}

fn number(a: &Operator) -> Operator {
    a.adjoint().mul(a).unwrap()
}

pub fn build_hamiltonian(params: &ModelParams) -> Result<Operator> {
    Ok(Model::new(*params)?.hamiltonian())
}

pub fn build_effective_hamiltonian(params: &ModelParams) -> Result<Operator> {
    Ok(Model::new(*params)?.effective_hamiltonian())
}

pub fn collapse_operators(params: &ModelParams) -> Result<Vec<Channel>> {
    Ok(Model::new(*params)?.collapse_operators())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::BasisState;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn bare(delta: f64) -> ModelParams {
        ModelParams { delta, g: 0.0, chi: 0.0, omega_drv: 0.0, j_coupling: 0.0, ..Default::default() }
    }

    fn element(h: &Operator, bra: BasisState, ket: BasisState) -> C64 {
        let l = h.layout();
        h.matrix()[[l.index(bra).unwrap(), l.index(ket).unwrap()]]
    }

    #[test]
    fn detuning_diagonal() {
        let h = build_hamiltonian(&bare(1.0)).unwrap();
        assert_eq!(element(&h, BasisState::ground(1, 0), BasisState::ground(1, 0)), C64::new(1.0, 0.0));
    }

    #[test]
    fn two_photon_entries() {
        let p = ModelParams { delta: 0.7, g: 1.3, chi: 2.5, omega_drv: 0.0, ..Default::default() };
        let h = build_hamiltonian(&p).unwrap();
        let d = element(&h, BasisState::ground(2, 0), BasisState::ground(2, 0));
        assert_abs_diff_eq!(d.re, 2.0 * 0.7 + 2.0 * 2.5, epsilon = 1e-14);
        let off = element(&h, BasisState::ground(2, 0), BasisState::excited(1, 0));
        assert_abs_diff_eq!(off.re, 2f64.sqrt() * 1.3, epsilon = 1e-14);
    }

    /// Reference matrix of the two-excitation block in the basis
    /// |2,0,g⟩, |1,1,g⟩, |0,2,g⟩, |1,0,e⟩, |0,1,e⟩ (energies relative to 2Δ).
    fn two_excitation_reference(delta: f64, g: f64, chi: f64) -> [[f64; 5]; 5] {
        let r = 2f64.sqrt() * g;
        let d = 2.0 * delta;
        [
            [d + 2.0 * chi, 0.0, 0.0, r, 0.0],
            [0.0, d, 0.0, g, g],
            [0.0, 0.0, d + 2.0 * chi, 0.0, r],
            [r, g, 0.0, d, 0.0],
            [0.0, g, r, 0.0, d],
        ]
    }

    #[test]
    fn two_excitation_block_matches_reference() {
        let (delta, g, chi) = (-0.4, 1.7, 3.2);
        let p = ModelParams { delta, g, chi, omega_drv: 0.3, ..Default::default() };
        let h = build_hamiltonian(&p).unwrap();
        let basis = [
            BasisState::ground(2, 0),
            BasisState::ground(1, 1),
            BasisState::ground(0, 2),
            BasisState::excited(1, 0),
            BasisState::excited(0, 1),
        ];
        let block = h.restrict(&basis).unwrap();
        let want = two_excitation_reference(delta, g, chi);
        for i in 0..5 {
            for j in 0..5 {
                assert_abs_diff_eq!(block[[i, j]].re, want[i][j], epsilon = 1e-13);
                assert_eq!(block[[i, j]].im, 0.0);
            }
        }
    }

    #[test]
    fn pure_decay_effective_hamiltonian() {
        let p = bare(0.0);
        let model = Model::new(p).unwrap();
        let heff = model.effective_hamiltonian();
        let want = model.excitation_number().scale(C64::new(0.0, -0.5));
        assert_abs_diff_eq!(heff.sub(&want).unwrap().max_abs(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn effective_hamiltonian_decomposes() {
        let p = ModelParams { delta: 0.3, gamma: 2.0, j_coupling: 0.5, ..Default::default() };
        let h = build_hamiltonian(&p).unwrap();
        let heff = build_effective_hamiltonian(&p).unwrap();
        let herm = heff.add(&heff.adjoint()).unwrap().scale(0.5);
        assert_eq!(herm.sub(&h).unwrap().max_abs(), 0.0);
        let idx = h.layout().index(BasisState::ground(1, 0)).unwrap();
        assert_eq!(heff.matrix()[[idx, idx]].im, -p.kappa / 2.0);
        // anti-Hermitian part is diagonal with non-positive entries
        let anti = heff.sub(&heff.adjoint()).unwrap().scale(C64::new(0.0, -0.5));
        for ((i, j), z) in anti.matrix().indexed_iter() {
            if i == j {
                assert!(z.re <= 0.0);
            } else {
                assert_eq!(z.norm(), 0.0);
            }
        }
    }

    #[test]
    fn fixed_channel_set() {
        let p = ModelParams { gamma: 0.0, ..Default::default() };
        let chans = collapse_operators(&p).unwrap();
        assert_eq!(chans.len(), 3);
        assert_eq!(chans[2].rate, 0.0);
        let layout = p.layout().unwrap();
        let vac = layout.ket(BasisState::ground(0, 0)).unwrap();
        for ch in &chans {
            assert!(ch.op.apply(&vac).iter().all(|z| z.norm() == 0.0));
        }
    }

    #[test]
    fn invalid_params_rejected() {
        let bad = [
            ModelParams { kappa: 0.0, ..Default::default() },
            ModelParams { g: -1.0, ..Default::default() },
            ModelParams { n_cut: 1, ..Default::default() },
            ModelParams { delta: f64::NAN, ..Default::default() },
            ModelParams { gamma: f64::INFINITY, ..Default::default() },
        ];
        for p in bad {
            assert!(matches!(build_hamiltonian(&p), Err(Error::Parameter(_))), "{p:?}");
        }
    }

    #[test]
    fn flat_config_keys() {
        let p: ModelParams = serde_json::from_str(
            r#"{"delta": 0.5, "g": 2, "chi": 1, "omega": 0.2, "kappa": 1, "gamma": 0.5, "j": 3, "n_cut": 6}"#,
        )
        .unwrap();
        assert_eq!(p.omega_drv, 0.2);
        assert_eq!(p.j_coupling, 3.0);
        assert_eq!(p.n_cut, 6);
        assert!(serde_json::from_str::<ModelParams>(r#"{"detuning": 1}"#).is_err());
        let partial: ModelParams = serde_json::from_str(r#"{"g": 10}"#).unwrap();
        assert_eq!(partial, ModelParams { g: 10.0, ..Default::default() });
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn hamiltonian_is_hermitian(
            delta in -5.0..5.0f64, g in 0.0..5.0f64, chi in 0.0..10.0f64,
            omega in 0.0..2.0f64, j in -3.0..3.0f64, n_cut in 2usize..6,
        ) {
            let p = ModelParams { delta, g, chi, omega_drv: omega, j_coupling: j, n_cut, ..Default::default() };
            let h = build_hamiltonian(&p).unwrap();
            prop_assert!(h.hermiticity_error() <= 1e-14);
        }

        #[test]
        fn excitation_number_conserved_without_drive(
            delta in -5.0..5.0f64, g in 0.0..5.0f64, chi in 0.0..10.0f64, j in -3.0..3.0f64,
        ) {
            let p = ModelParams { delta, g, chi, omega_drv: 0.0, j_coupling: j, n_cut: 4, ..Default::default() };
            let model = Model::new(p).unwrap();
            let c = model.hamiltonian().commutator(&model.excitation_number()).unwrap();
            prop_assert!(c.max_abs() <= 1e-12);
        }

        #[test]
        fn detuning_enters_through_excitation_number(
            d1 in -5.0..5.0f64, d2 in -5.0..5.0f64, j in -3.0..3.0f64,
        ) {
            let base = ModelParams { j_coupling: j, n_cut: 4, ..Default::default() };
            let h1 = build_hamiltonian(&ModelParams { delta: d1, ..base }).unwrap();
            let m2 = Model::new(ModelParams { delta: d2, ..base }).unwrap();
            let diff = h1.sub(&m2.hamiltonian()).unwrap();
            let want = m2.excitation_number().scale(d1 - d2);
            prop_assert!(diff.sub(&want).unwrap().max_abs() <= 1e-12);
        }
    }
}
