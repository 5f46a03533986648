//! Weak-drive probability-amplitude solution.
//!
//! For Ω ≪ κ the state is truncated to at most two excitations,
//! `|ψ⟩ = |0,0,g⟩ + Σ C_{mn,g/e} |m,n,g/e⟩`, with the ground amplitude fixed
//! to one. Stationarity under the effective non-Hermitian Hamiltonian (with
//! γ = κ, so every single-excitation state decays as Δ̃ = Δ − iκ/2 and every
//! two-excitation state as 2Δ̃) gives eight linear equations for the
//! remaining amplitudes. The linear solve is authoritative; the closed forms
//! are kept as an independent validation route.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::ModelParams;

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Shorthands of the closed-form solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Auxiliary {
    pub a: C64,
    pub b: C64,
    pub q: C64,
    pub d: C64,
    pub f: C64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmplitudeSet {
    pub c00g: C64,
    pub c10g: C64,
    pub c01g: C64,
    pub c00e: C64,
    pub c20g: C64,
    pub c02g: C64,
    pub c11g: C64,
    pub c10e: C64,
    pub c01e: C64,
    /// Δ − iκ/2.
    pub delta_tilde: C64,
    pub aux: Auxiliary,
}

impl AmplitudeSet {
    /// The eight amplitudes in linear-system order:
    /// C10g, C01g, C00e, C20g, C02g, C11g, C10e, C01e.
    pub fn unknowns(&self) -> [C64; 8] {
        [self.c10g, self.c01g, self.c00e, self.c20g, self.c02g, self.c11g, self.c10e, self.c01e]
    }

    pub fn first_order(&self) -> [C64; 3] {
        [self.c10g, self.c01g, self.c00e]
    }

    pub fn second_order(&self) -> [C64; 5] {
        [self.c20g, self.c02g, self.c11g, self.c10e, self.c01e]
    }

    /// Probability of one CW photon, |C10g|² + |C10e|² + |C11g|².
    pub fn p1(&self) -> f64 {
        self.c10g.norm_sqr() + self.c10e.norm_sqr() + self.c11g.norm_sqr()
    }

    /// Probability of two CW photons, |C20g|².
    pub fn p2(&self) -> f64 {
        self.c20g.norm_sqr()
    }

    /// ⟨a₁†a₁⟩ within the truncated ansatz.
    pub fn mean_photon(&self) -> f64 {
        self.p1() + 2.0 * self.p2()
    }
}

/// Preconditions of the amplitude solution: γ = κ, J = 0, g > 0, Ω > 0.
pub fn check_regime(p: &ModelParams) -> Result<()> {
    p.validate()?;
    if (p.gamma - p.kappa).abs() > 1e-12 * p.kappa {
        return Err(Error::UnsupportedRegime(format!(
            "the amplitude solution needs gamma = kappa (got gamma = {}, kappa = {}); use the numerical steady state",
            p.gamma, p.kappa
        )));
    }
    if p.j_coupling != 0.0 {
        return Err(Error::UnsupportedRegime(format!(
            "the amplitude solution needs j = 0 (got {}); use the numerical steady state",
            p.j_coupling
        )));
    }
    if !(p.g > 0.0) {
        return Err(Error::UnsupportedRegime("the amplitude solution needs g > 0; use the numerical steady state".into()));
    }
    if !(p.omega_drv > 0.0) {
        return Err(Error::UnsupportedRegime("the amplitude solution needs a non-zero drive".into()));
    }
    Ok(())
}

fn delta_tilde(p: &ModelParams) -> C64 {
    C64::new(p.delta, -p.kappa / 2.0)
}

/// Coefficient matrix and right-hand side of the stationary amplitude
/// equations, unknowns ordered as in [`AmplitudeSet::unknowns`].
pub fn amplitude_system(p: &ModelParams) -> (Array2<C64>, Array1<C64>) {
    let dt = delta_tilde(p);
    let (g, chi, w) = (C64::from(p.g), C64::from(p.chi), C64::from(p.omega_drv));
    let r2 = C64::from(SQRT2);
    let z = C64::new(0.0, 0.0);
    let kerr = (dt + chi) * 2.0;
    let two = dt * 2.0;
    #[rustfmt::skip]
    let rows = [
        // C10g  C01g  C00e  C20g  C02g  C11g  C10e    C01e
        [dt,     z,    g,    z,    z,    z,    z,      z   ],
        [z,      dt,   g,    z,    z,    z,    z,      z   ],
        [g,      g,    dt,   z,    z,    z,    z,      z   ],
        [r2 * w, z,    z,    kerr, z,    z,    r2 * g, z   ],
        [z,      z,    z,    z,    kerr, z,    z,      r2 * g],
        [z,      w,    z,    z,    z,    two,  g,      g   ],
        [z,      z,    w,    r2 * g, z,  g,    two,    z   ],
        [z,      z,    z,    z,    r2 * g, g,  z,      two ],
    ];
    let m = Array2::from_shape_fn((8, 8), |(i, j)| rows[i][j]);
    let mut rhs = Array1::zeros(8);
    rhs[0] = -w;
    (m, rhs)
}

fn max_residual(m: &Array2<C64>, x: &Array1<C64>, rhs: &Array1<C64>) -> f64 {
    (m.dot(x) - rhs).iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Max-norm residual of the stationary amplitude equations at `amps`.
pub fn linear_system_residual(amps: &AmplitudeSet, p: &ModelParams) -> f64 {
    let (m, rhs) = amplitude_system(p);
    max_residual(&m, &Array1::from(amps.unknowns().to_vec()), &rhs)
}

/// Exact solution of the stationary amplitude equations.
pub fn steady_amplitudes(p: &ModelParams) -> Result<AmplitudeSet> {
    check_regime(p)?;
    let (m, rhs) = amplitude_system(p);
    let x = linalg::dense_solve(&m, &rhs).ok_or_else(|| Error::Singular("non-finite solution".into()))?;
    let res = max_residual(&m, &x, &rhs);
    if !(res <= 1e-10) {
        return Err(Error::Singular(format!("residual {res:.3e}")));
    }
    let dt = delta_tilde(p);
    Ok(AmplitudeSet {
        c00g: C64::new(1.0, 0.0),
        c10g: x[0],
        c01g: x[1],
        c00e: x[2],
        c20g: x[3],
        c02g: x[4],
        c11g: x[5],
        c10e: x[6],
        c01e: x[7],
        delta_tilde: dt,
        aux: auxiliary(dt, p.g, -p.chi),
    })
}

fn nonzero(name: &'static str, z: C64) -> Result<C64> {
    if z.norm() == 0.0 || !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::ClosedFormSingularity(name));
    }
    Ok(z)
}

fn auxiliary(dt: C64, g: f64, kerr: f64) -> Auxiliary {
    let g2 = g * g;
    let a = (dt - kerr) * 2.0;
    let b = dt * 2.0 - g2 * 2.0 / a;
    let q = (g2 - dt * 2.0 * (dt - kerr)) * 2.0;
    let d = q * (dt * dt - 2.0 * g2) - dt * 2.0 * (dt * q / g2 + (dt - kerr)) * (dt * dt * 2.0 - g2);
    let f = dt * q * (dt * dt - 2.0 * g2) * ((dt - kerr) * 2.0 + dt * q / g2);
    Auxiliary { a, b, q, d, f }
}

/// The closed-form amplitudes, term for term, with `kerr` in the place of χ.
fn transcribe(p: &ModelParams, kerr: f64) -> Result<AmplitudeSet> {
    check_regime(p)?;
    let dt = delta_tilde(p);
    let (g, w) = (p.g, p.omega_drv);
    let g2 = g * g;
    let aux = auxiliary(dt, g, kerr);
    let a = nonzero("A", aux.a)?;
    let b = nonzero("B", aux.b)?;
    let f = nonzero("F", aux.f)?;

    let denom1 = nonzero("Δ̃² − 2g²", dt * dt - 2.0 * g2)?;
    let c00e = g * w / denom1;
    let c01g = -(g2 * w) / (dt * denom1);
    let c10g = -(w * (dt * dt - g2)) / (dt * denom1);
    let c20g = SQRT2 * w * w / 2.0 * aux.d / f;
    let c11_den = nonzero(
        "C11g denominator",
        dt * dt * dt * 2.0 - dt * 2.0 * g2 - dt * dt * 2.0 * kerr + g2 * kerr,
    )?;
    let c11g = g2 * w * w / (dt * 2.0 * denom1) * (dt * dt * 4.0 - dt * 3.0 * kerr - 2.0 * g2) / c11_den;
    let c10e = -(g * c11g + w * (c00e - 2.0 * g / a * c10g)) / b;
    let c01e = -g / b * c11g;
    let c02g = -SQRT2 * g / a * c01e;
    Ok(AmplitudeSet {
        c00g: C64::new(1.0, 0.0),
        c10g,
        c01g,
        c00e,
        c20g,
        c02g,
        c11g,
        c10e,
        c01e,
        delta_tilde: dt,
        aux,
    })
}

/// Closed-form amplitudes, consistent with [`steady_amplitudes`].
///
/// The published closed forms are written for the opposite sign of the Kerr
/// term (A = 2(Δ̃ − χ) where the amplitude equations have 2(Δ̃ + χ)); they are
/// evaluated here at −χ, which makes them agree with the linear solve to
/// rounding.
pub fn closed_form_amplitudes(p: &ModelParams) -> Result<AmplitudeSet> {
    transcribe(p, -p.chi)
}

/// The closed forms evaluated literally at +χ. Agrees with the linear solve
/// only when χ = 0.
pub fn printed_closed_form_amplitudes(p: &ModelParams) -> Result<AmplitudeSet> {
    transcribe(p, p.chi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticG2 {
    /// 2|C20g|² / |C10g|⁴.
    pub approximate: f64,
    /// 2|C20g|² / (|C10g|² + |C10e|² + |C11g|²)².
    pub full: f64,
}

pub fn analytic_g2(amps: &AmplitudeSet) -> Result<AnalyticG2> {
    let n1 = amps.c10g.norm_sqr();
    if !(n1 > 0.0) {
        return Err(Error::UndefinedCorrelation(n1));
    }
    let two = 2.0 * amps.c20g.norm_sqr();
    let p1 = amps.p1();
    Ok(AnalyticG2 { approximate: two / (n1 * n1), full: two / (p1 * p1) })
}

/// Populations in the g ≫ κ limit at Δ = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrongCouplingLimits {
    pub p01g: f64,
    pub p10g: f64,
    pub p11g: f64,
    pub p20g: f64,
}

impl StrongCouplingLimits {
    /// 2 p20g / p10g², the g → ∞ value of the approximate analytic g2.
    pub fn g2(&self) -> f64 {
        2.0 * self.p20g / (self.p10g * self.p10g)
    }
}

pub fn strong_coupling_limits(p: &ModelParams) -> StrongCouplingLimits {
    let (w, k, chi) = (p.omega_drv, p.kappa, p.chi);
    let single = w * w / (k * k);
    let pair = w.powi(4) / (k * k * (chi * chi + k * k));
    StrongCouplingLimits { p01g: single, p10g: single, p11g: pair, p20g: pair / 2.0 }
}

/// Largest right-hand side of the full amplitude equations of motion
/// (separate decay constants for photon, atom and mixed states) evaluated at
/// `amps`. The ground-amplitude row is left out: its stationarity is the
/// weak-drive assumption itself.
pub fn effective_hamiltonian_ode_residual(amps: &AmplitudeSet, p: &ModelParams) -> Result<f64> {
    check_regime(p)?;
    let d1 = C64::new(p.delta, -p.kappa / 2.0);
    let de = C64::new(p.delta, -p.gamma / 2.0);
    let d2 = C64::new(2.0 * p.delta, -(p.gamma + p.kappa) / 2.0);
    let (g, chi, w) = (p.g, p.chi, p.omega_drv);
    let a = amps;
    let rhs = [
        w * a.c00g + d1 * a.c10g + g * a.c00e,
        d1 * a.c01g + g * a.c00e,
        g * a.c10g + g * a.c01g + de * a.c00e,
        SQRT2 * w * a.c10g + (d1 + chi) * 2.0 * a.c20g + SQRT2 * g * a.c10e,
        (d1 + chi) * 2.0 * a.c02g + SQRT2 * g * a.c01e,
        w * a.c01g + d1 * 2.0 * a.c11g + g * a.c10e + g * a.c01e,
        w * a.c00e + SQRT2 * g * a.c20g + g * a.c11g + d2 * a.c10e,
        SQRT2 * g * a.c02g + g * a.c11g + d2 * a.c01e,
    ];
    Ok(rhs.iter().fold(0.0, |m, z| m.max(z.norm())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn point(delta: f64, g: f64, chi: f64, omega: f64) -> ModelParams {
        ModelParams { delta, g, chi, omega_drv: omega, ..Default::default() }
    }

    fn random_points(n: usize, seed: u64) -> Vec<ModelParams> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let g = rng.gen_range(0.1..=3.0);
                let chi = rng.gen_range(0.0..=10.0);
                let delta = rng.gen_range(-4.0..=4.0);
                point(delta, g, chi, 0.1)
            })
            .collect()
    }

    #[test]
    fn residual_at_working_point() {
        let p = ModelParams::default();
        let amps = steady_amplitudes(&p).unwrap();
        assert!(linear_system_residual(&amps, &p) <= 1e-10);
        assert_eq!(amps.c00g, C64::new(1.0, 0.0));
        assert_eq!(amps.delta_tilde, C64::new(0.0, -0.5));
    }

    #[test]
    fn first_order_ratio() {
        // C01g / C10g = g² / (Δ̃² − g²); at Δ = 0, g = κ this is 1 / (−1/4 − 1) = −0.8
        let amps = steady_amplitudes(&point(0.0, 1.0, 8.0, 0.1)).unwrap();
        let ratio = amps.c01g / amps.c10g;
        assert_abs_diff_eq!(ratio.re, -0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(ratio.im, 0.0, epsilon = 1e-12);
        // C00e = gΩ / (Δ̃² − 2g²) = 0.1 / (−2.25)
        assert_abs_diff_eq!(amps.c00e.re, -0.1 / 2.25, epsilon = 1e-14);
        assert_abs_diff_eq!(amps.c00e.im, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn strong_coupling_single_photon_population() {
        let p = point(0.0, 100.0, 8.0, 0.1);
        let amps = steady_amplitudes(&p).unwrap();
        let scaled = amps.c10g.norm_sqr() / (p.omega_drv * p.omega_drv);
        assert!((scaled - 1.0).abs() < 0.01, "{scaled}");
    }

    #[test]
    fn closed_forms_match_linear_solve() {
        let p = point(0.5, 1.33, 8.0, 0.1);
        let lin = steady_amplitudes(&p).unwrap();
        let closed = closed_form_amplitudes(&p).unwrap();
        for (a, b) in closed.unknowns().iter().zip(lin.unknowns()) {
            assert!((a - b).norm() <= 1e-8 * b.norm(), "{a} vs {b}");
        }
    }

    #[test]
    fn closed_form_c00e_value() {
        let closed = closed_form_amplitudes(&point(0.0, 1.0, 8.0, 0.1)).unwrap();
        assert_abs_diff_eq!(closed.c00e.re, -0.044444444444444446, epsilon = 1e-15);
    }

    #[test]
    fn closed_form_structural_identities() {
        for p in random_points(3, 11) {
            let c = closed_form_amplitudes(&p).unwrap();
            assert_eq!(c.c01e, -p.g / c.aux.b * c.c11g);
            assert_eq!(c.c02g, -SQRT2 * p.g / c.aux.a * c.c01e);
        }
    }

    #[test]
    fn printed_kerr_sign_only_matches_without_kerr() {
        let lin = steady_amplitudes(&point(0.3, 1.2, 0.0, 0.1)).unwrap();
        let printed = printed_closed_form_amplitudes(&point(0.3, 1.2, 0.0, 0.1)).unwrap();
        for (a, b) in printed.unknowns().iter().zip(lin.unknowns()) {
            assert!((a - b).norm() <= 1e-10 * b.norm());
        }
        let p = point(0.3, 1.2, 4.0, 0.1);
        let lin = steady_amplitudes(&p).unwrap();
        let printed = printed_closed_form_amplitudes(&p).unwrap();
        assert!((printed.c20g - lin.c20g).norm() > 1e-3 * lin.c20g.norm());
        // the first-order amplitudes do not involve χ
        assert!((printed.c10g - lin.c10g).norm() <= 1e-12 * lin.c10g.norm());
    }

    #[test]
    fn closed_forms_agree_on_random_grid() {
        for p in random_points(100, 2024) {
            let lin = steady_amplitudes(&p).unwrap();
            let closed = closed_form_amplitudes(&p).unwrap();
            for (a, b) in closed.unknowns().iter().zip(lin.unknowns()) {
                assert!((a - b).norm() <= 1e-8 * b.norm(), "{p:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn ode_residual_vanishes_at_solution() {
        let p = ModelParams::default();
        let amps = steady_amplitudes(&p).unwrap();
        assert!(effective_hamiltonian_ode_residual(&amps, &p).unwrap() <= 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let p = point(rng.gen_range(-4.0..=4.0), rng.gen_range(0.01..=3.0), rng.gen_range(0.0..=10.0), 0.1);
            let amps = steady_amplitudes(&p).unwrap();
            assert!(effective_hamiltonian_ode_residual(&amps, &p).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn ode_residual_detects_perturbation() {
        let p = ModelParams::default();
        let mut amps = steady_amplitudes(&p).unwrap();
        amps.c20g *= 1.01;
        assert!(effective_hamiltonian_ode_residual(&amps, &p).unwrap() > 1e-4);
    }

    #[test]
    fn regime_guards() {
        let gamma = ModelParams { gamma: 2.0, ..Default::default() };
        assert!(matches!(steady_amplitudes(&gamma), Err(Error::UnsupportedRegime(_))));
        assert!(matches!(closed_form_amplitudes(&gamma), Err(Error::UnsupportedRegime(_))));
        let j = ModelParams { j_coupling: 3.0, ..Default::default() };
        assert!(matches!(steady_amplitudes(&j), Err(Error::UnsupportedRegime(_))));
        let g0 = ModelParams { g: 0.0, ..Default::default() };
        assert!(matches!(steady_amplitudes(&g0), Err(Error::UnsupportedRegime(_))));
    }

    #[test]
    fn strong_coupling_limit_values() {
        let lim = strong_coupling_limits(&point(0.0, 10.0, 8.0, 0.1));
        assert_abs_diff_eq!(lim.p10g, 0.01, epsilon = 1e-15);
        assert_abs_diff_eq!(lim.p01g, 0.01, epsilon = 1e-15);
        assert_abs_diff_eq!(lim.p20g, 1e-4 / 130.0, epsilon = 1e-18);
        assert_abs_diff_eq!(lim.p20g, 7.692307692307692e-7, epsilon = 1e-18);
        for chi in [0.0, 1.0, 8.0, 50.0] {
            let lim = strong_coupling_limits(&point(0.0, 10.0, chi, 0.1));
            assert_abs_diff_eq!(lim.p20g / lim.p11g, 0.5, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(lim.g2(), 1.0 / 65.0, epsilon = 1e-15);
    }

    #[test]
    fn strong_coupling_g2_limit() {
        // oracle: direct amplitude evaluation at large g against κ²/(χ²+κ²)
        let amps = steady_amplitudes(&point(0.0, 100.0, 8.0, 0.1)).unwrap();
        let g2 = analytic_g2(&amps).unwrap().approximate;
        assert!((g2 - 1.0 / 65.0).abs() < 0.05 / 65.0, "{g2}");
    }

    #[test]
    fn strong_coupling_approach_is_monotone() {
        let target = 1.0 / 65.0;
        let gaps: Vec<f64> = (10..=100)
            .step_by(5)
            .map(|g| {
                let amps = steady_amplitudes(&point(0.0, g as f64, 8.0, 0.1)).unwrap();
                (analytic_g2(&amps).unwrap().approximate - target).abs()
            })
            .collect();
        for w in gaps.windows(2) {
            assert!(w[1] <= w[0], "{gaps:?}");
        }
    }

    #[test]
    fn full_and_approximate_forms_close_at_resonance() {
        for delta in [-0.1, 0.0, 0.1] {
            let amps = steady_amplitudes(&point(delta, 1.33, 8.0, 0.1)).unwrap();
            let g2 = analytic_g2(&amps).unwrap();
            assert!((g2.full - g2.approximate).abs() < 0.05 * g2.approximate, "{g2:?}");
        }
    }

    #[test]
    fn drive_scaling_exponents() {
        for base in random_points(20, 99) {
            let lo = steady_amplitudes(&ModelParams { omega_drv: 0.01, ..base }).unwrap();
            let hi = steady_amplitudes(&ModelParams { omega_drv: 0.02, ..base }).unwrap();
            for (a, b) in lo.first_order().iter().zip(hi.first_order()) {
                let exponent = (b.norm() / a.norm()).log2();
                assert!((exponent - 1.0).abs() < 0.01, "{exponent}");
            }
            for (a, b) in lo.second_order().iter().zip(hi.second_order()) {
                let exponent = (b.norm() / a.norm()).log2();
                assert!((exponent - 2.0).abs() < 0.01, "{exponent}");
            }
            let g_lo = analytic_g2(&lo).unwrap().approximate;
            let g_hi = analytic_g2(&hi).unwrap().approximate;
            assert!((g_hi - g_lo).abs() < 0.005 * g_lo);
        }
    }

    #[test]
    fn upb_dips_near_one_point_zero_five() {
        let deltas: Vec<f64> = (0..401).map(|i| -4.0 + 8.0 * i as f64 / 400.0).collect();
        let g2: Vec<f64> = deltas
            .iter()
            .map(|&d| analytic_g2(&steady_amplitudes(&point(d, 1.33, 8.0, 0.1)).unwrap()).unwrap().approximate)
            .collect();
        let minima: Vec<f64> = (1..400).filter(|&i| g2[i] < g2[i - 1] && g2[i] < g2[i + 1]).map(|i| deltas[i]).collect();
        // dips sit at -1.06 and +1.08 on this grid
        for target in [-1.05, 1.05] {
            assert!(minima.iter().any(|m| (m - target).abs() <= 0.05), "{minima:?}");
        }
        assert!(minima.iter().any(|m| m.abs() <= 0.02 + 1e-9), "{minima:?}");
    }
}
