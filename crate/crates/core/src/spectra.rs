//! Dressed-state levels of the undriven system.
//!
//! Levels are reported relative to the bare energy (ω for one excitation,
//! 2ω for two); the offset is kept in `reference_energy`.

use ndarray::{array, Array2};
use serde::Serialize;

use crate::hilbert::BasisState;
use crate::linalg;

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// |2,0,g⟩, |1,1,g⟩, |0,2,g⟩, |1,0,e⟩, |0,1,e⟩
pub const TWO_PHOTON_BASIS: [BasisState; 5] = [
    BasisState::ground(2, 0),
    BasisState::ground(1, 1),
    BasisState::ground(0, 2),
    BasisState::excited(1, 0),
    BasisState::excited(0, 1),
];

/// |1,0,g⟩, |0,1,g⟩, |0,0,e⟩
pub const SINGLE_EXCITATION_BASIS: [BasisState; 3] =
    [BasisState::ground(1, 0), BasisState::ground(0, 1), BasisState::excited(0, 0)];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumResult {
    /// Ascending, relative to `reference_energy`.
    pub levels: Vec<f64>,
    pub basis_labels: Vec<String>,
    pub reference_energy: f64,
}

impl SpectrumResult {
    pub fn absolute_levels(&self) -> Vec<f64> {
        self.levels.iter().map(|e| e + self.reference_energy).collect()
    }

    /// max |E_i + E_{n-1-i}|; zero for a spectrum symmetric about the reference.
    pub fn asymmetry(&self) -> f64 {
        let n = self.levels.len();
        (0..n).map(|i| (self.levels[i] + self.levels[n - 1 - i]).abs()).fold(0.0, f64::max)
    }
}

fn label(s: &BasisState) -> String {
    let atom = match s.atom {
        crate::hilbert::AtomState::Ground => 'g',
        crate::hilbert::AtomState::Excited => 'e',
    };
    format!("|{},{},{}⟩", s.cw, s.ccw, atom)
}

fn eigenvalues(m: &Array2<f64>) -> Vec<f64> {
    // a non-finite entry is the only way this can fail; propagate it as NaN
    let mut e = linalg::symmetric_eigenvalues(m).unwrap_or_else(|_| vec![f64::NAN; m.nrows()]);
    e.sort_by(f64::total_cmp);
    e
}

/// The two-excitation block of H at Ω = J = 0, relative to 2ω.
pub fn two_photon_matrix(g: f64, chi: f64) -> Array2<f64> {
    let r = SQRT2 * g;
    let k = 2.0 * chi;
    array![
        [k, 0.0, 0.0, r, 0.0],
        [0.0, 0.0, 0.0, g, g],
        [0.0, 0.0, k, 0.0, r],
        [r, g, 0.0, 0.0, 0.0],
        [0.0, g, r, 0.0, 0.0],
    ]
}

/// The one-excitation block of H at Ω = 0, relative to ω.
pub fn single_excitation_matrix(g: f64, j: f64) -> Array2<f64> {
    array![[0.0, j, g], [j, 0.0, g], [g, g, 0.0]]
}

pub fn two_photon_eigenvalues(g: f64, chi: f64, omega_ref: f64) -> SpectrumResult {
    SpectrumResult {
        levels: eigenvalues(&two_photon_matrix(g, chi)),
        basis_labels: TWO_PHOTON_BASIS.iter().map(label).collect(),
        reference_energy: 2.0 * omega_ref,
    }
}

/// E₋ = (J − √(J²+8g²))/2, E₀ = −J, E₊ = (J + √(J²+8g²))/2, relative to ω.
pub fn single_excitation_levels(g: f64, j: f64, omega_ref: f64) -> SpectrumResult {
    let root = (j * j + 8.0 * g * g).sqrt();
    let mut levels = vec![(j - root) / 2.0, -j, (j + root) / 2.0];
    levels.sort_by(f64::total_cmp);
    SpectrumResult {
        levels,
        basis_labels: SINGLE_EXCITATION_BASIS.iter().map(label).collect(),
        reference_energy: omega_ref,
    }
}

/// Detunings at which a single-excitation dressed state is driven resonantly
/// (J = 0): {−√2g, 0, +√2g}, or {0} when g = 0.
pub fn cpb_optimal_detunings(g: f64) -> Vec<f64> {
    if g == 0.0 {
        return vec![0.0];
    }
    let d = SQRT2 * g.abs();
    vec![-d, 0.0, d]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_hamiltonian, ModelParams};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn assert_levels(actual: &[f64], expected: &[f64], tol: f64) {
        assert_eq!(actual.len(), expected.len());
        for (a, e) in actual.iter().zip(expected) {
            assert!((a - e).abs() <= tol, "{actual:?} vs {expected:?}");
        }
    }

    #[test]
    fn uncoupled_two_photon_levels() {
        let s = two_photon_eigenvalues(0.0, 3.0, 5.0);
        assert_levels(&s.levels, &[0.0, 0.0, 0.0, 6.0, 6.0], 1e-14);
        assert_levels(&s.absolute_levels(), &[10.0, 10.0, 10.0, 16.0, 16.0], 1e-14);
    }

    #[test]
    fn two_photon_levels_without_kerr() {
        for g in [0.5, 1.0, 1.33, 10.0] {
            let s = two_photon_eigenvalues(g, 0.0, 0.0);
            let r = SQRT2 * g;
            assert_levels(&s.levels, &[-2.0 * g, -r, 0.0, r, 2.0 * g], 1e-10 * g.max(1.0));
            assert!(s.asymmetry() < 1e-10 * g);
        }
    }

    #[test]
    fn kerr_removes_level_at_shifted_pair_energy() {
        let s = two_photon_eigenvalues(10.0, 8.0, 0.0);
        assert!(s.levels.iter().all(|e| (e - 16.0).abs() > 1e-3), "{:?}", s.levels);
        assert!(s.asymmetry() > 0.0);
    }

    #[test]
    fn labels_follow_basis() {
        let s = two_photon_eigenvalues(1.0, 1.0, 0.0);
        assert_eq!(s.basis_labels, ["|2,0,g⟩", "|1,1,g⟩", "|0,2,g⟩", "|1,0,e⟩", "|0,1,e⟩"]);
        let s = single_excitation_levels(1.0, 0.0, 0.0);
        assert_eq!(s.basis_labels, ["|1,0,g⟩", "|0,1,g⟩", "|0,0,e⟩"]);
    }

    #[test]
    fn single_excitation_examples() {
        let s = single_excitation_levels(1.0, 0.0, 0.0);
        assert_levels(&s.levels, &[-SQRT2, 0.0, SQRT2], 1e-15);
        for g in [0.1, 1.0, 7.0] {
            let s = single_excitation_levels(g, 3.0, 0.0);
            assert!(s.levels.iter().any(|&e| e == -3.0));
        }
        let s = single_excitation_levels(1.0, 100.0, 0.0);
        assert_abs_diff_eq!(s.levels[2], 100.02, epsilon = 1e-3);
    }

    #[test]
    fn single_excitation_closed_form_matches_diagonalization() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..100 {
            let g = rng.gen_range(0.0..10.0);
            let j = rng.gen_range(-10.0..10.0);
            let closed = single_excitation_levels(g, j, 0.0).levels;
            let direct = eigenvalues(&single_excitation_matrix(g, j));
            assert_levels(&closed, &direct, 1e-12);
        }
    }

    #[test]
    fn blocks_match_full_hamiltonian() {
        // with Ω = 0 the detuning plays the role of ω
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let p = ModelParams {
                delta: rng.gen_range(-3.0..3.0),
                g: rng.gen_range(0.0..10.0),
                chi: rng.gen_range(0.0..10.0),
                omega_drv: 0.0,
                n_cut: 4,
                ..Default::default()
            };
            let h = build_hamiltonian(&p).unwrap();
            let block = h.restrict(&TWO_PHOTON_BASIS).unwrap();
            let direct = linalg::hermitian_eigenvalues(&block).unwrap();
            let s = two_photon_eigenvalues(p.g, p.chi, p.delta);
            assert_levels(&s.absolute_levels(), &direct, 1e-10);

            let p = ModelParams { j_coupling: rng.gen_range(-5.0..5.0), ..p };
            let h = build_hamiltonian(&p).unwrap();
            let block = h.restrict(&SINGLE_EXCITATION_BASIS).unwrap();
            let direct = linalg::hermitian_eigenvalues(&block).unwrap();
            let s = single_excitation_levels(p.g, p.j_coupling, p.delta);
            assert_levels(&s.absolute_levels(), &direct, 1e-10);
        }
    }

    #[test]
    fn anharmonicity_grows_with_kerr() {
        let gap = |chi: f64| {
            let two = two_photon_eigenvalues(10.0, chi, 0.0).levels[0];
            let one = single_excitation_levels(10.0, 0.0, 0.0).levels[0];
            two - 2.0 * one
        };
        let gaps: Vec<f64> = [0.0, 2.0, 4.0, 8.0, 16.0, 32.0].iter().map(|&c| gap(c)).collect();
        assert!(gaps[0] > 0.0);
        for w in gaps.windows(2) {
            assert!(w[1] > w[0], "{gaps:?}");
        }
    }

    #[test]
    fn cpb_detunings() {
        assert_levels(&cpb_optimal_detunings(1.0), &[-1.41421, 0.0, 1.41421], 1e-5);
        assert_eq!(cpb_optimal_detunings(0.0), vec![0.0]);
        assert_levels(&cpb_optimal_detunings(10.0), &[-14.1421, 0.0, 14.1421], 1e-4);
    }
}
