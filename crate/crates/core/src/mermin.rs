//! GHZ states and the Mermin operator
//! F = (1/2i)[Π(A_j + iA′_j) − Π(A_j − iA′_j)].
//!
//! Particle j occupies tensor slot j (leftmost is particle 1). Because the
//! second product is the adjoint of the first, F = (X − X†)/2i with
//! X = ⊗(A_j + iA′_j), and ⟨ψ|F|ψ⟩ = Im⟨ψ|X|ψ⟩.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as Complex;

use crate::chsh::scan_grid;
use crate::error::{invalid, Error, Result};
use crate::operator::{commutator, embed, expectation, plane_op, tensor_all, Angle, CMatrix, Ket, MeasurementPlane};

pub const MIN_PARTICLES: usize = 2;
pub const MAX_PARTICLES: usize = 10;

const I: Complex = Complex::new(0.0, 1.0);
const TIE_TOL: f64 = 1e-12;

/// (|+…+⟩ + i|−…−⟩)/√2 on `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct GhzState {
    n: usize,
    ket: Ket,
}

impl GhzState {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ket(&self) -> &Ket {
        &self.ket
    }
}

pub fn ghz(n: usize) -> Result<GhzState> {
    if !(MIN_PARTICLES..=MAX_PARTICLES).contains(&n) {
        return Err(invalid(format!(
            "GHZ particle count must be in {MIN_PARTICLES}..={MAX_PARTICLES}, got {n}"
        )));
    }
    let dim = 1usize << n;
    let mut amps = vec![Complex::new(0.0, 0.0); dim];
    amps[0] = Complex::new(FRAC_1_SQRT_2, 0.0);
    amps[dim - 1] = Complex::new(0.0, FRAC_1_SQRT_2);
    Ok(GhzState {
        n,
        ket: Ket::from_amplitudes(amps)?,
    })
}

/// Per-particle (a_j, a′_j) angle pairs and the plane they live in.
#[derive(Clone, Debug, PartialEq)]
pub struct MerminSettings {
    pub pairs: Vec<(Angle, Angle)>,
    pub plane: MeasurementPlane,
}

impl MerminSettings {
    pub fn new(pairs: Vec<(Angle, Angle)>, plane: MeasurementPlane) -> Result<Self> {
        if pairs.is_empty() {
            return Err(invalid("Mermin settings need at least one particle"));
        }
        Ok(MerminSettings { pairs, plane })
    }

    /// The same pair for all `n` particles.
    pub fn shared(n: usize, a: Angle, a_prime: Angle, plane: MeasurementPlane) -> Result<Self> {
        Self::new(vec![(a, a_prime); n], plane)
    }

    pub fn n(&self) -> usize {
        self.pairs.len()
    }

    fn ops(&self) -> Vec<(CMatrix, CMatrix)> {
        self.pairs
            .iter()
            .map(|&(a, ap)| (plane_op(self.plane, a).into_matrix(), plane_op(self.plane, ap).into_matrix()))
            .collect()
    }

    /// The single-particle factors A_j + iA′_j.
    fn raising_factors(&self) -> Vec<CMatrix> {
        self.ops().iter().map(|(a, ap)| a + &ap.scale(I)).collect()
    }
}

pub fn mermin_operator(settings: &MerminSettings) -> CMatrix {
    let x = tensor_all(&settings.raising_factors());
    (&x - &x.dagger()).scale(Complex::new(0.0, -0.5))
}

/// 4I − [A₁,A′₁][A₂,A′₂] − [A₂,A′₂][A₃,A′₃] − [A₃,A′₃][A₁,A′₁], with each
/// commutator placed on its own slot.
pub fn mermin_square_identity_rhs(settings: &MerminSettings) -> Result<CMatrix> {
    if settings.n() != 3 {
        return Err(invalid(format!(
            "the squared-Mermin identity is stated for three particles, got {}",
            settings.n()
        )));
    }
    let comms: Vec<CMatrix> = settings
        .ops()
        .iter()
        .map(|(a, ap)| commutator(a, ap))
        .collect::<Result<_>>()?;
    let placed: Vec<CMatrix> = comms.iter().enumerate().map(|(j, c)| embed(c, j, 3)).collect();
    let mut rhs = CMatrix::identity(8).scale_real(4.0);
    for (j, k) in [(0, 1), (1, 2), (2, 0)] {
        rhs = &rhs - &(&placed[j] * &placed[k]);
    }
    Ok(rhs)
}

/// ‖F² − rhs‖∞ for three particles.
pub fn mermin_square_residual(settings: &MerminSettings) -> Result<f64> {
    let rhs = mermin_square_identity_rhs(settings)?;
    let f = mermin_operator(settings);
    Ok((&(&f * &f) - &rhs).max_abs())
}

pub fn mermin_value(state: &GhzState, settings: &MerminSettings) -> Result<f64> {
    if settings.n() != state.n() {
        return Err(Error::DimensionMismatch {
            expected: state.n(),
            found: settings.n(),
        });
    }
    Ok(expectation(state.ket(), &mermin_operator(settings))?.re)
}

/// Applies ⊗ factors[j] to a ket without forming the full matrix.
fn apply_product(factors: &[CMatrix], psi: &Ket) -> Ket {
    let n = factors.len();
    let mut amps = psi.amplitudes().to_vec();
    for (j, f) in factors.iter().enumerate() {
        let stride = 1usize << (n - 1 - j);
        for base in 0..amps.len() {
            if base & stride != 0 {
                continue;
            }
            let (lo, hi) = (amps[base], amps[base | stride]);
            amps[base] = f.get(0, 0) * lo + f.get(0, 1) * hi;
            amps[base | stride] = f.get(1, 0) * lo + f.get(1, 1) * hi;
        }
    }
    Ket::from_amplitudes(amps).expect("finite amplitudes")
}

/// Im⟨ψ|⊗(A_j + iA′_j)|ψ⟩, equal to ⟨ψ|F|ψ⟩ with O(n 2ⁿ) work.
pub fn mermin_value_fast(state: &GhzState, settings: &MerminSettings) -> Result<f64> {
    if settings.n() != state.n() {
        return Err(Error::DimensionMismatch {
            expected: state.n(),
            found: settings.n(),
        });
    }
    let out = apply_product(&settings.raising_factors(), state.ket());
    Ok(state.ket().inner(&out)?.im)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MerminScan {
    pub value: f64,
    pub settings: MerminSettings,
}

/// Grid search of |⟨F⟩| on ghz(n) over one (a, a′) pair shared by all
/// particles; ties go to the lexicographically smallest pair.
pub fn mermin_scan(n: usize, grid_step: Angle, plane: MeasurementPlane) -> Result<MerminScan> {
    let state = ghz(n)?;
    let grid = scan_grid(grid_step)?;
    let mut best: Option<(f64, f64, usize, usize)> = None;
    for (i, &a) in grid.iter().enumerate() {
        for (j, &ap) in grid.iter().enumerate() {
            let v = mermin_value_fast(&state, &MerminSettings::shared(n, a, ap, plane)?)?;
            if best.is_none_or(|(b, _, _, _)| v.abs() > b + TIE_TOL) {
                best = Some((v.abs(), v, i, j));
            }
        }
    }
    let (_, value, i, j) = best.expect("non-empty grid");
    Ok(MerminScan {
        value,
        settings: MerminSettings::shared(n, grid[i], grid[j], plane)?,
    })
}

/// The quantum bound 2ⁿ⁻¹.
pub fn quantum_bound(n: usize) -> f64 {
    (1u64 << (n - 1)) as f64
}
