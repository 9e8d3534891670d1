//! Dense complex matrices, state vectors and the dichotomic measurement
//! operators used throughout the crate.
//!
//! Basis ordering: |+⟩ = (1, 0), |−⟩ = (0, 1). Tensor products use the
//! index convention `i_a * dim_b + i_b`, so the leftmost factor is the most
//! significant digit.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64 as Complex;

use crate::error::{invalid, Error, Result};

/// Tolerance for construction-time invariant checks.
pub const CONSTRUCTION_TOL: f64 = 1e-12;

const ZERO: Complex = Complex::new(0.0, 0.0);
const ONE: Complex = Complex::new(1.0, 0.0);
const I: Complex = Complex::new(0.0, 1.0);

/// A finite angle in radians.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Angle(f64);

impl Angle {
    pub const ZERO: Angle = Angle(0.0);

    /// Panics if `rad` is not finite; use [`Angle::try_radians`] for untrusted input.
    pub fn radians(rad: f64) -> Self {
        assert!(rad.is_finite(), "angle must be finite, got {rad}");
        Angle(rad)
    }

    pub fn try_radians(rad: f64) -> Result<Self> {
        if rad.is_finite() {
            Ok(Angle(rad))
        } else {
            Err(invalid(format!("angle must be finite, got {rad}")))
        }
    }

    pub fn degrees(deg: f64) -> Self {
        Self::radians(deg.to_radians())
    }

    pub fn try_degrees(deg: f64) -> Result<Self> {
        Self::try_radians(deg.to_radians())
    }

    pub fn rad(self) -> f64 {
        self.0
    }

    pub fn deg(self) -> f64 {
        self.0.to_degrees()
    }
}

impl Add for Angle {
    type Output = Angle;
    fn add(self, rhs: Angle) -> Angle {
        Angle(self.0 + rhs.0)
    }
}

impl Sub for Angle {
    type Output = Angle;
    fn sub(self, rhs: Angle) -> Angle {
        Angle(self.0 - rhs.0)
    }
}

impl Neg for Angle {
    type Output = Angle;
    fn neg(self) -> Angle {
        Angle(-self.0)
    }
}

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        CMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid("matrix dimensions must be positive"));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(invalid("matrix entries must be finite"));
        }
        Ok(CMatrix { rows, cols, data })
    }

    /// Builds a matrix from real row-major entries.
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::from_vec(rows, cols, data.iter().map(|&x| Complex::new(x, 0.0)).collect())
    }

    pub fn diag(entries: &[Complex]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &z) in entries.iter().enumerate() {
            m.data[i * n + i] = z;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Complex {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, z: Complex) {
        self.data[i * self.cols + j] = z;
    }

    pub fn entries(&self) -> &[Complex] {
        &self.data
    }

    pub fn scale(&self, z: Complex) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * z).collect(),
        }
    }

    pub fn scale_real(&self, x: f64) -> CMatrix {
        self.scale(Complex::new(x, 0.0))
    }

    pub fn trace(&self) -> Complex {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// Largest entry modulus, the ‖·‖∞ used for every residual in this crate.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn dagger(&self) -> CMatrix {
        dagger(self)
    }

    pub fn hermitian_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (self - &self.dagger()).max_abs()
    }

    pub fn apply(&self, psi: &Ket) -> Result<Ket> {
        if psi.dim() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: psi.dim(),
            });
        }
        let amps = (0..self.rows)
            .map(|i| {
                let row = &self.data[i * self.cols..(i + 1) * self.cols];
                row.iter().zip(psi.amplitudes()).map(|(a, b)| a * b).sum()
            })
            .collect();
        Ok(Ket { amps })
    }

    fn check_same_shape(&self, other: &CMatrix) {
        assert!(
            self.rows == other.rows && self.cols == other.cols,
            "shape mismatch: {}x{} vs {}x{}",
            self.rows,
            self.cols,
            other.rows,
            other.cols
        );
    }
}

impl fmt::Display for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| format!("{:.6}", self.get(i, j))).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        self.check_same_shape(rhs);
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        self.check_same_shape(rhs);
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let src = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, b) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        out
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr for CMatrix {
            type Output = CMatrix;
            fn $method(self, rhs: CMatrix) -> CMatrix {
                (&self).$method(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// State vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Ket {
    amps: Vec<Complex>,
}

impl Ket {
    /// Normalizes the given amplitudes; rejects empty, zero or non-finite input.
    pub fn normalized(amps: Vec<Complex>) -> Result<Self> {
        if amps.is_empty() {
            return Err(invalid("ket must have positive dimension"));
        }
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(invalid("ket amplitudes must be finite and not all zero"));
        }
        Ok(Ket {
            amps: amps.into_iter().map(|z| z / norm).collect(),
        })
    }

    /// Wraps amplitudes without normalizing.
    pub fn from_amplitudes(amps: Vec<Complex>) -> Result<Self> {
        if amps.is_empty() {
            return Err(invalid("ket must have positive dimension"));
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(invalid("ket amplitudes must be finite"));
        }
        Ok(Ket { amps })
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index {index} out of range for dim {dim}");
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Ket { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &Ket) -> Result<Complex> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn tensor(&self, other: &Ket) -> Ket {
        let amps = self
            .amps
            .iter()
            .flat_map(|a| other.amps.iter().map(move |b| a * b))
            .collect();
        Ket { amps }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Plane containing the measurement directions of a family of spin operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum MeasurementPlane {
    /// cos α σ_z + sin α σ_y (Stern–Gerlach axes for particles along ±x).
    ZY,
    /// cos φ σ_x + sin φ σ_y, the equatorial plane of the GHZ basis.
    #[default]
    XY,
}

/// Hermitian involutory operator: spectrum in {−1, +1}.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementOp {
    matrix: CMatrix,
    label: String,
}

impl MeasurementOp {
    pub fn new(matrix: CMatrix, label: impl Into<String>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(invalid("measurement operator must be square"));
        }
        let herm = matrix.hermitian_residual();
        if herm >= CONSTRUCTION_TOL {
            return Err(Error::NotHermitian { residual: herm });
        }
        let inv = (&(&matrix * &matrix) - &CMatrix::identity(matrix.rows())).max_abs();
        if inv >= CONSTRUCTION_TOL {
            return Err(invalid(format!("operator is not involutory (residual {inv:e})")));
        }
        Ok(MeasurementOp {
            matrix,
            label: label.into(),
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }
}

fn pauli_matrix(axis: Axis) -> CMatrix {
    let data = match axis {
        Axis::X => vec![ZERO, ONE, ONE, ZERO],
        Axis::Y => vec![ZERO, -I, I, ZERO],
        Axis::Z => vec![ONE, ZERO, ZERO, -ONE],
    };
    CMatrix { rows: 2, cols: 2, data }
}

pub fn pauli(axis: Axis) -> MeasurementOp {
    let label = match axis {
        Axis::X => "sigma_x",
        Axis::Y => "sigma_y",
        Axis::Z => "sigma_z",
    };
    MeasurementOp {
        matrix: pauli_matrix(axis),
        label: label.to_string(),
    }
}

/// Unit-vector combination c₁·σ_first + c₂·σ_second; involutory whenever c₁² + c₂² = 1.
fn direction_op(first: Axis, second: Axis, angle: f64, label: String) -> MeasurementOp {
    let (s, c) = angle.sin_cos();
    let m = &pauli_matrix(first).scale_real(c) + &pauli_matrix(second).scale_real(s);
    MeasurementOp { matrix: m, label }
}

/// Stern–Gerlach operator cos α σ_z + sin α σ_y.
pub fn spin_op(alpha: Angle) -> MeasurementOp {
    direction_op(Axis::Z, Axis::Y, alpha.rad(), format!("spin({})", alpha.rad()))
}

/// Equatorial operator cos φ σ_x + sin φ σ_y.
pub fn equatorial_op(phi: Angle) -> MeasurementOp {
    direction_op(Axis::X, Axis::Y, phi.rad(), format!("equatorial({})", phi.rad()))
}

pub fn plane_op(plane: MeasurementPlane, angle: Angle) -> MeasurementOp {
    match plane {
        MeasurementPlane::ZY => spin_op(angle),
        MeasurementPlane::XY => equatorial_op(angle),
    }
}

/// Polarizer projector onto (cos θ, sin θ).
pub fn photon_projector(theta: Angle) -> CMatrix {
    let (s, c) = theta.rad().sin_cos();
    CMatrix::from_real(2, 2, &[c * c, s * c, s * c, s * s]).expect("finite 2x2")
}

/// 2·P(θ) − I = [[cos 2θ, sin 2θ], [sin 2θ, −cos 2θ]].
pub fn photon_op(theta: Angle) -> MeasurementOp {
    let (s2, c2) = (2.0 * theta.rad()).sin_cos();
    MeasurementOp {
        matrix: CMatrix::from_real(2, 2, &[c2, s2, s2, -c2]).expect("finite 2x2"),
        label: format!("photon({})", theta.rad()),
    }
}

/// Kronecker product, index `i_a * dim_b + i_b`.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = CMatrix::zeros(rows, cols);
    for ia in 0..a.rows {
        for ja in 0..a.cols {
            let z = a.get(ia, ja);
            if z == ZERO {
                continue;
            }
            for ib in 0..b.rows {
                for jb in 0..b.cols {
                    out.data[(ia * b.rows + ib) * cols + ja * b.cols + jb] = z * b.get(ib, jb);
                }
            }
        }
    }
    out
}

/// Tensor product of a sequence of factors, leftmost most significant.
pub fn tensor_all<'a, I>(factors: I) -> CMatrix
where
    I: IntoIterator<Item = &'a CMatrix>,
{
    let mut iter = factors.into_iter();
    let first = iter.next().expect("at least one factor").clone();
    iter.fold(first, |acc, m| tensor(&acc, m))
}

/// Places `op` on slot `slot` of `n` qubits with identities elsewhere.
pub fn embed(op: &CMatrix, slot: usize, n: usize) -> CMatrix {
    assert!(slot < n);
    let id = CMatrix::identity(op.rows());
    let factors: Vec<&CMatrix> = (0..n).map(|j| if j == slot { op } else { &id }).collect();
    tensor_all(factors)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() || !b.is_square() {
        return Err(invalid("commutator requires square matrices"));
    }
    if a.rows != b.rows {
        return Err(Error::DimensionMismatch {
            expected: a.rows,
            found: b.rows,
        });
    }
    Ok(&(a * b) - &(b * a))
}

pub fn dagger(a: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(a.cols, a.rows);
    for i in 0..a.rows {
        for j in 0..a.cols {
            out.data[j * a.rows + i] = a.get(i, j).conj();
        }
    }
    out
}

/// ⟨ψ|M|ψ⟩
pub fn expectation(psi: &Ket, m: &CMatrix) -> Result<Complex> {
    if !m.is_square() || m.rows() != psi.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.rows(),
            found: psi.dim(),
        });
    }
    psi.inner(&m.apply(psi)?)
}

pub use crate::eigen::hermitian_extremal_eigenvalue;
