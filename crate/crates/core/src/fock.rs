//! Truncated bosonic Fock space over the four detection modes of the
//! Ou–Mandel arrangement, and the type-2 down-conversion pair state.
//!
//! Modes are detector-labelled, in canonical order (1,x), (1,y), (2,x), (2,y).
//! Analyzer operators carry real coefficients (cos θ, sin θ); the
//! beam-splitter phases live entirely in the ±i amplitudes of the state.

use std::f64::consts::PI;

use num_complex::Complex64 as Complex;

use crate::error::{invalid, Error, Result};
use crate::operator::{dagger, Angle, CMatrix, Ket};

pub const MODE_COUNT: usize = 4;
/// All states in scope carry exactly two photons.
pub const MAX_TOTAL_OCCUPATION: usize = 2;
/// Width of the Gaussian stand-in for the momentum delta, radians of clock angle.
pub const DEFAULT_DELTA_WIDTH: f64 = 0.01;

const ZERO: Complex = Complex::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Detector {
    One,
    Two,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Polarization {
    X,
    Y,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ModeIndex {
    pub detector: Detector,
    pub polarization: Polarization,
}

impl ModeIndex {
    pub const X1: ModeIndex = ModeIndex::new(Detector::One, Polarization::X);
    pub const Y1: ModeIndex = ModeIndex::new(Detector::One, Polarization::Y);
    pub const X2: ModeIndex = ModeIndex::new(Detector::Two, Polarization::X);
    pub const Y2: ModeIndex = ModeIndex::new(Detector::Two, Polarization::Y);
    pub const ALL: [ModeIndex; MODE_COUNT] = [Self::X1, Self::Y1, Self::X2, Self::Y2];

    pub const fn new(detector: Detector, polarization: Polarization) -> Self {
        ModeIndex {
            detector,
            polarization,
        }
    }

    /// Position in the canonical mode order.
    pub fn slot(self) -> usize {
        let d = match self.detector {
            Detector::One => 0,
            Detector::Two => 2,
        };
        let p = match self.polarization {
            Polarization::X => 0,
            Polarization::Y => 1,
        };
        d + p
    }
}

pub type Occupation = [u8; MODE_COUNT];

/// Occupation-number basis with total photon number ≤ `n_max_total`,
/// lexicographically ordered.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FockBasis {
    n_max_total: usize,
    states: Vec<Occupation>,
}

impl FockBasis {
    pub fn new(n_max_total: usize) -> Self {
        let n = n_max_total as u8;
        let mut states = Vec::new();
        for a in 0..=n {
            for b in 0..=(n - a) {
                for c in 0..=(n - a - b) {
                    for d in 0..=(n - a - b - c) {
                        states.push([a, b, c, d]);
                    }
                }
            }
        }
        FockBasis {
            n_max_total,
            states,
        }
    }

    pub fn standard() -> Self {
        Self::new(MAX_TOTAL_OCCUPATION)
    }

    pub fn n_max_total(&self) -> usize {
        self.n_max_total
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[Occupation] {
        &self.states
    }

    pub fn index_of(&self, occ: &Occupation) -> Option<usize> {
        self.states.binary_search(occ).ok()
    }

    pub fn vacuum_index(&self) -> usize {
        0
    }

    fn index_with(&self, pairs: &[ModeIndex]) -> usize {
        let mut occ = [0u8; MODE_COUNT];
        for m in pairs {
            occ[m.slot()] += 1;
        }
        self.index_of(&occ).expect("occupation within truncation")
    }
}

/// Amplitudes over a [`FockBasis`].
#[derive(Clone, Debug, PartialEq)]
pub struct FockState {
    basis: FockBasis,
    ket: Ket,
}

impl FockState {
    pub fn normalized(basis: FockBasis, amps: Vec<Complex>) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                found: amps.len(),
            });
        }
        Ok(FockState {
            basis,
            ket: Ket::normalized(amps)?,
        })
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn ket(&self) -> &Ket {
        &self.ket
    }

    pub fn amplitude(&self, occ: &Occupation) -> Complex {
        self.basis
            .index_of(occ)
            .map_or(ZERO, |i| self.ket.amplitudes()[i])
    }

    /// Amplitude of the two-photon ket with one photon in each of `a` and `b`
    /// (or two photons in `a` when `a == b`).
    pub fn pair_amplitude(&self, a: ModeIndex, b: ModeIndex) -> Complex {
        self.ket.amplitudes()[self.basis.index_with(&[a, b])]
    }
}

/// Annihilation operator for `mode`: ⟨n−1|a|n⟩ = √n.
pub fn annihilation(mode: ModeIndex, basis: &FockBasis) -> CMatrix {
    let dim = basis.dim();
    let slot = mode.slot();
    let mut m = CMatrix::zeros(dim, dim);
    for (col, occ) in basis.states().iter().enumerate() {
        let n = occ[slot];
        if n == 0 {
            continue;
        }
        let mut lowered = *occ;
        lowered[slot] -= 1;
        let row = basis.index_of(&lowered).expect("lowered state in basis");
        m.set(row, col, Complex::new((n as f64).sqrt(), 0.0));
    }
    m
}

pub fn creation(mode: ModeIndex, basis: &FockBasis) -> CMatrix {
    dagger(&annihilation(mode, basis))
}

/// Transmission/reflection probabilities per polarization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeamSplitterSpec {
    t_x: f64,
    r_x: f64,
    t_y: f64,
    r_y: f64,
}

impl BeamSplitterSpec {
    pub fn new(t_x: f64, r_x: f64, t_y: f64, r_y: f64) -> Result<Self> {
        for (name, v) in [("t_x", t_x), ("r_x", r_x), ("t_y", t_y), ("r_y", r_y)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(format!("{name} = {v} outside [0, 1]")));
            }
        }
        if (t_x + r_x - 1.0).abs() > 1e-12 || (t_y + r_y - 1.0).abs() > 1e-12 {
            return Err(invalid("transmission and reflection must sum to 1 per polarization"));
        }
        Ok(BeamSplitterSpec { t_x, r_x, t_y, r_y })
    }

    /// Lossless splitter from the two transmissions.
    pub fn lossless(t_x: f64, t_y: f64) -> Result<Self> {
        Self::new(t_x, 1.0 - t_x, t_y, 1.0 - t_y)
    }

    pub fn equal_split() -> Self {
        BeamSplitterSpec {
            t_x: 0.5,
            r_x: 0.5,
            t_y: 0.5,
            r_y: 0.5,
        }
    }

    pub fn t_x(&self) -> f64 {
        self.t_x
    }
    pub fn r_x(&self) -> f64 {
        self.r_x
    }
    pub fn t_y(&self) -> f64 {
        self.t_y
    }
    pub fn r_y(&self) -> f64 {
        self.r_y
    }
}

/// √(TxTy)|x₁y₂⟩ + √(RxRy)|x₂y₁⟩ − i√(RyTx)|x₁y₁⟩ + i√(RxTy)|x₂y₂⟩
pub fn ou_mandel_state(bs: &BeamSplitterSpec) -> FockState {
    let basis = FockBasis::standard();
    let mut amps = vec![ZERO; basis.dim()];
    let terms = [
        (ModeIndex::X1, ModeIndex::Y2, Complex::new((bs.t_x * bs.t_y).sqrt(), 0.0)),
        (ModeIndex::X2, ModeIndex::Y1, Complex::new((bs.r_x * bs.r_y).sqrt(), 0.0)),
        (ModeIndex::X1, ModeIndex::Y1, Complex::new(0.0, -(bs.r_y * bs.t_x).sqrt())),
        (ModeIndex::X2, ModeIndex::Y2, Complex::new(0.0, (bs.r_x * bs.t_y).sqrt())),
    ];
    for (a, b, z) in terms {
        amps[basis.index_with(&[a, b])] = z;
    }
    FockState::normalized(basis, amps).expect("T + R = 1 gives a normalizable state")
}

/// Expands [√Tx a†(x₁) + i√Rx a†(x₂)][√Ty a†(y₂) − i√Ry a†(y₁)]|0⟩.
pub fn product_state(bs: &BeamSplitterSpec) -> FockState {
    let basis = FockBasis::standard();
    let x_photon = &creation(ModeIndex::X1, &basis).scale(Complex::new(bs.t_x.sqrt(), 0.0))
        + &creation(ModeIndex::X2, &basis).scale(Complex::new(0.0, bs.r_x.sqrt()));
    let y_photon = &creation(ModeIndex::Y2, &basis).scale(Complex::new(bs.t_y.sqrt(), 0.0))
        + &creation(ModeIndex::Y1, &basis).scale(Complex::new(0.0, -bs.r_y.sqrt()));
    let vacuum = Ket::basis(basis.dim(), basis.vacuum_index());
    let out = (&x_photon * &y_photon)
        .apply(&vacuum)
        .expect("square operator on basis ket");
    FockState::normalized(basis, out.amplitudes().to_vec()).expect("nonzero two-photon state")
}

fn detector_modes(detector: Detector) -> (ModeIndex, ModeIndex) {
    (
        ModeIndex::new(detector, Polarization::X),
        ModeIndex::new(detector, Polarization::Y),
    )
}

/// cos θ a(det, x) + sin θ a(det, y)
pub fn detector_amplitude_op(detector: Detector, theta: Angle, basis: &FockBasis) -> CMatrix {
    let (s, c) = theta.rad().sin_cos();
    let (mx, my) = detector_modes(detector);
    &annihilation(mx, basis).scale_real(c) + &annihilation(my, basis).scale_real(s)
}

/// ‖D₂(θ₂) D₁(θ₁)|Ψ⟩‖² with K = 1.
pub fn coincidence_probability(state: &FockState, theta1: Angle, theta2: Angle) -> f64 {
    let basis = state.basis();
    let d1 = detector_amplitude_op(Detector::One, theta1, basis);
    let d2 = detector_amplitude_op(Detector::Two, theta2, basis);
    let after = d2
        .apply(&d1.apply(state.ket()).expect("basis dims agree"))
        .expect("basis dims agree");
    after.norm_sqr()
}

/// [(TxTy)^½ cos θ₁ sin θ₂ + (RxRy)^½ sin θ₁ cos θ₂]²
pub fn coincidence_closed_form(bs: &BeamSplitterSpec, theta1: Angle, theta2: Angle) -> f64 {
    let (s1, c1) = theta1.rad().sin_cos();
    let (s2, c2) = theta2.rad().sin_cos();
    let amp = (bs.t_x * bs.t_y).sqrt() * c1 * s2 + (bs.r_x * bs.r_y).sqrt() * s1 * c2;
    amp * amp
}

/// Coincidence-normalized correlation of the two analyzers, with ⊥ = θ + π/2.
pub fn coincidence_correlation(state: &FockState, theta1: Angle, theta2: Angle) -> Result<f64> {
    let perp = Angle::radians(PI / 2.0);
    let p = |a: Angle, b: Angle| coincidence_probability(state, a, b);
    let same = p(theta1, theta2) + p(theta1 + perp, theta2 + perp);
    let diff = p(theta1 + perp, theta2) + p(theta1, theta2 + perp);
    let total = same + diff;
    if total <= f64::MIN_POSITIVE {
        return Err(Error::UndefinedCorrelation);
    }
    Ok((same - diff) / total)
}

/// Projects onto the one-photon-per-detector subspace and rewrites the
/// result as a two-qubit polarization ket (detector 1 ⊗ detector 2, x = |+⟩).
pub fn coincidence_qubit_state(state: &FockState) -> Result<Ket> {
    let amps = [
        (ModeIndex::X1, ModeIndex::X2),
        (ModeIndex::X1, ModeIndex::Y2),
        (ModeIndex::Y1, ModeIndex::X2),
        (ModeIndex::Y1, ModeIndex::Y2),
    ]
    .iter()
    .map(|&(a, b)| state.pair_amplitude(a, b))
    .collect();
    Ket::normalized(amps).map_err(|_| Error::UndefinedCorrelation)
}

/// Down-converted pair: a product of signal and idler cone envelopes times a
/// narrow stand-in for the momentum delta on the clock-angle parameterization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairProductState {
    signal_clock_angle: Angle,
    idler_clock_angle: Angle,
    pump_momentum: [f64; 3],
    delta_width: f64,
}

impl PairProductState {
    /// The conjugate idler angle is fixed to −signal by momentum conservation.
    pub fn new(signal_clock_angle: Angle, pump_momentum: [f64; 3]) -> Result<Self> {
        Self::with_delta_width(signal_clock_angle, pump_momentum, DEFAULT_DELTA_WIDTH)
    }

    pub fn with_delta_width(
        signal_clock_angle: Angle,
        pump_momentum: [f64; 3],
        delta_width: f64,
    ) -> Result<Self> {
        if pump_momentum.iter().any(|k| !k.is_finite()) || pump_momentum.iter().all(|&k| k == 0.0) {
            return Err(invalid("pump momentum must be finite and nonzero"));
        }
        if !(delta_width > 0.0 && delta_width.is_finite()) {
            return Err(invalid("delta width must be positive"));
        }
        Ok(PairProductState {
            signal_clock_angle,
            idler_clock_angle: -signal_clock_angle,
            pump_momentum,
            delta_width,
        })
    }

    pub fn signal_clock_angle(&self) -> Angle {
        self.signal_clock_angle
    }

    pub fn idler_clock_angle(&self) -> Angle {
        self.idler_clock_angle
    }

    pub fn pump_momentum(&self) -> [f64; 3] {
        self.pump_momentum
    }

    pub fn delta_width(&self) -> f64 {
        self.delta_width
    }

    /// Selection aimed at the nominal signal angle.
    pub fn nominal_selection(&self, half_width: f64) -> Result<SelectionSpec> {
        SelectionSpec::new(vec![self.signal_clock_angle], half_width)
    }
}

/// Wraps an angle into (−π, π].
pub fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Clock position on a cone as an angle, 12 o'clock = 0, clockwise positive.
pub fn clock_angle(hours: f64) -> Angle {
    Angle::radians(hours * PI / 6.0)
}

/// Cone envelope: emission is isotropic around each cone.
fn envelope(_angle: f64) -> f64 {
    (2.0 * PI).sqrt().recip()
}

/// φ_x(signal) · φ_y(idler) · δ̃(signal + idler)
pub fn pair_product_amplitude(state: &PairProductState, signal_test: Angle, idler_test: Angle) -> Complex {
    let phi_x = envelope(signal_test.rad());
    let phi_y = envelope(idler_test.rad());
    let mismatch = wrap_angle(signal_test.rad() + idler_test.rad());
    let w = state.delta_width;
    let delta = (-mismatch * mismatch / (2.0 * w * w)).exp();
    Complex::new(phi_x * phi_y * delta, 0.0)
}

/// Accepted signal clock angles with a common acceptance half-width.
#[derive(Clone, Debug, PartialEq)]
pub struct SelectionSpec {
    accepted: Vec<Angle>,
    half_width: f64,
}

impl SelectionSpec {
    pub fn new(accepted: Vec<Angle>, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(invalid("acceptance half-width must be positive"));
        }
        Ok(SelectionSpec {
            accepted,
            half_width,
        })
    }

    pub fn accepted(&self) -> &[Angle] {
        &self.accepted
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }
}

pub fn apply_selection(selection: &SelectionSpec, signal: Angle) -> bool {
    selection
        .accepted
        .iter()
        .any(|a| wrap_angle(signal.rad() - a.rad()).abs() <= selection.half_width)
}

/// Summed |amplitude|² over conjugate pairs whose signal passes the selection,
/// sampled at `samples` equally spaced signal angles around the cone.
pub fn selected_pair_weight(state: &PairProductState, selection: &SelectionSpec, samples: usize) -> f64 {
    (0..samples)
        .map(|k| Angle::radians(2.0 * PI * k as f64 / samples as f64))
        .filter(|&s| apply_selection(selection, s))
        .map(|s| pair_product_amplitude(state, s, -s).norm_sqr())
        .sum()
}
