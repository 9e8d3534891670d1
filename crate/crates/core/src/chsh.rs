//! CHSH/Bell operator, the squared-operator identity and the grid maximizer.
//!
//! S = ⟨AB⟩ + ⟨A′B⟩ + ⟨AB′⟩ − ⟨A′B′⟩. When Alice's operators commute with
//! Bob's and all four square to the identity,
//! S² = 4I − [A, A′] ⊗ [B, B′].

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64 as Complex;

use crate::error::{invalid, Error, Result};
use crate::fock::{coincidence_qubit_state, ou_mandel_state, BeamSplitterSpec};
use crate::operator::{commutator, expectation, photon_op, spin_op, tensor, Angle, CMatrix, Ket, MeasurementOp};

/// 2√2
pub const TSIRELSON_BOUND: f64 = 2.0 * std::f64::consts::SQRT_2;
/// Deterministic (commuting) bound on |S|.
pub const CLASSICAL_BOUND: f64 = 2.0;
/// Coarsest grid accepted by [`tsirelson_scan`].
pub const MAX_SCAN_STEP: f64 = PI / 36.0;

const TIE_TOL: f64 = 1e-12;

/// Which measurement-operator convention the four angles feed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SetupKind {
    /// Stern–Gerlach, cos α σ_z + sin α σ_y
    SpinHalf,
    /// Polarizer, 2P(θ) − I
    Photon,
}

impl SetupKind {
    pub fn op(self, angle: Angle) -> MeasurementOp {
        match self {
            SetupKind::SpinHalf => spin_op(angle),
            SetupKind::Photon => photon_op(angle),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SetupKind::SpinHalf => "spin",
            SetupKind::Photon => "photon",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChshSettings {
    pub alpha: Angle,
    pub alpha_prime: Angle,
    pub beta: Angle,
    pub beta_prime: Angle,
    pub kind: SetupKind,
}

impl ChshSettings {
    pub fn new(alpha: Angle, alpha_prime: Angle, beta: Angle, beta_prime: Angle, kind: SetupKind) -> Self {
        ChshSettings {
            alpha,
            alpha_prime,
            beta,
            beta_prime,
            kind,
        }
    }

    pub fn degrees(a: f64, ap: f64, b: f64, bp: f64, kind: SetupKind) -> Self {
        Self::new(Angle::degrees(a), Angle::degrees(ap), Angle::degrees(b), Angle::degrees(bp), kind)
    }

    fn ops(&self) -> [CMatrix; 4] {
        [self.alpha, self.alpha_prime, self.beta, self.beta_prime].map(|a| self.kind.op(a).into_matrix())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BellValue {
    pub s: f64,
    pub settings: ChshSettings,
}

/// (|+−⟩ − |−+⟩)/√2
pub fn singlet() -> Ket {
    let h = Complex::new(FRAC_1_SQRT_2, 0.0);
    let z = Complex::new(0.0, 0.0);
    Ket::from_amplitudes(vec![z, h, -h, z]).expect("finite amplitudes")
}

/// Reference two-particle state for each convention: the singlet for spins,
/// the coincidence-subspace projection of the equal-split Ou–Mandel state for photons.
pub fn reference_state(kind: SetupKind) -> Ket {
    match kind {
        SetupKind::SpinHalf => singlet(),
        SetupKind::Photon => coincidence_qubit_state(&ou_mandel_state(&BeamSplitterSpec::equal_split()))
            .expect("equal-split state has coincidences"),
    }
}

/// ⟨ψ| Op(a) ⊗ Op(b) |ψ⟩
pub fn correlation(psi: &Ket, a: Angle, b: Angle, kind: SetupKind) -> Result<f64> {
    if psi.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: psi.dim(),
        });
    }
    let op = tensor(kind.op(a).matrix(), kind.op(b).matrix());
    Ok(expectation(psi, &op)?.re)
}

/// A⊗B + A′⊗B + A⊗B′ − A′⊗B′
pub fn bell_operator(settings: &ChshSettings) -> CMatrix {
    let [a, ap, b, bp] = settings.ops();
    let sum = &(&tensor(&a, &b) + &tensor(&ap, &b)) + &tensor(&a, &bp);
    &sum - &tensor(&ap, &bp)
}

/// 4I − [A, A′] ⊗ [B, B′]
pub fn squared_bell_identity_rhs(settings: &ChshSettings) -> CMatrix {
    let [a, ap, b, bp] = settings.ops();
    let ca = commutator(&a, &ap).expect("2x2 operators");
    let cb = commutator(&b, &bp).expect("2x2 operators");
    &CMatrix::identity(4).scale_real(4.0) - &tensor(&ca, &cb)
}

/// ‖S² − (4I − [A, A′] ⊗ [B, B′])‖∞
pub fn identity_residual(settings: &ChshSettings) -> f64 {
    let s = bell_operator(settings);
    (&(&s * &s) - &squared_bell_identity_rhs(settings)).max_abs()
}

pub fn chsh_value(psi: &Ket, settings: &ChshSettings) -> Result<BellValue> {
    let e = |a, b| correlation(psi, a, b, settings.kind);
    let s = e(settings.alpha, settings.beta)? + e(settings.alpha_prime, settings.beta)?
        + e(settings.alpha, settings.beta_prime)?
        - e(settings.alpha_prime, settings.beta_prime)?;
    Ok(BellValue {
        s,
        settings: *settings,
    })
}

/// Angles k·step, k = 0, 1, … covering [0, 2π).
pub fn scan_grid(step: Angle) -> Result<Vec<Angle>> {
    let h = step.rad();
    if !(h > 0.0 && h <= MAX_SCAN_STEP * (1.0 + 1e-12)) {
        return Err(invalid(format!("grid step must lie in (0, π/36], got {h}")));
    }
    let n = ((2.0 * PI) / h - 1e-9).ceil() as usize;
    Ok((0..n).map(|k| Angle::radians(k as f64 * h)).collect())
}

#[derive(Clone, Copy)]
struct Extremum {
    value: f64,
    index: usize,
}

/// First index attaining the maximum (by more than the tie tolerance) of `f`.
fn argmax(n: usize, f: impl Fn(usize) -> f64) -> Extremum {
    let mut best = Extremum {
        value: f(0),
        index: 0,
    };
    for k in 1..n {
        let v = f(k);
        if v > best.value + TIE_TOL {
            best = Extremum { value: v, index: k };
        }
    }
    best
}

/// Exhaustive grid search for max |S| over (α, α′, β, β′) on the reference
/// state. S splits as [E(α,β) + E(α′,β)] + [E(α,β′) − E(α′,β′)], so for each
/// (α, α′) the β and β′ optima are independent and the full 4-D grid is
/// covered in O(n³). Ties go to the lexicographically smallest tuple.
pub fn tsirelson_scan(kind: SetupKind, grid_step: Angle) -> Result<BellValue> {
    tsirelson_scan_state(&reference_state(kind), kind, grid_step)
}

pub fn tsirelson_scan_state(psi: &Ket, kind: SetupKind, grid_step: Angle) -> Result<BellValue> {
    let grid = scan_grid(grid_step)?;
    let n = grid.len();
    let mut table = vec![0.0; n * n];
    for (i, &a) in grid.iter().enumerate() {
        for (j, &b) in grid.iter().enumerate() {
            table[i * n + j] = correlation(psi, a, b, kind)?;
        }
    }
    let e = |i: usize, j: usize| table[i * n + j];

    // (|S|, grid indices) of the best candidate so far
    let mut best: Option<(f64, [usize; 4])> = None;
    let mut consider = |value: f64, tuple: [usize; 4]| {
        let better = match best {
            None => true,
            Some((v, t)) => value.abs() > v + TIE_TOL || ((value.abs() - v).abs() <= TIE_TOL && tuple < t),
        };
        if better {
            best = Some((value.abs(), tuple));
        }
    };

    for i in 0..n {
        for ip in 0..n {
            let hi_b = argmax(n, |b| e(i, b) + e(ip, b));
            let hi_bp = argmax(n, |bp| e(i, bp) - e(ip, bp));
            consider(hi_b.value + hi_bp.value, [i, ip, hi_b.index, hi_bp.index]);
            let lo_b = argmax(n, |b| -(e(i, b) + e(ip, b)));
            let lo_bp = argmax(n, |bp| -(e(i, bp) - e(ip, bp)));
            consider(-(lo_b.value + lo_bp.value), [i, ip, lo_b.index, lo_bp.index]);
        }
    }

    let (_, [i, ip, b, bp]) = best.expect("non-empty grid");
    let settings = ChshSettings::new(grid[i], grid[ip], grid[b], grid[bp], kind);
    chsh_value(psi, &settings)
}
