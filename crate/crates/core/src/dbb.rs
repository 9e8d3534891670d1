//! De Broglie–Bohm guidance for freely evolving Gaussian packets in one
//! dimension per particle.
//!
//! Wavefunctions are evaluated in log space, ψ = exp(−p x² + q x + r), so the
//! velocity (ħ/m) Im ∂ₓψ/ψ never divides two underflowed numbers.

use std::f64::consts::PI;

use num_complex::Complex64 as Complex;

use crate::error::{invalid, Error, Result};

/// Densities below this are treated as nodes.
pub const NODE_DENSITY: f64 = 1e-300;
/// Finite-difference step for `cross_coupling`, relative to the narrower packet width.
pub const COUPLING_STEP: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalConstants {
    hbar: f64,
    mass: f64,
    gyro: f64,
}

impl PhysicalConstants {
    pub fn new(hbar: f64, mass: f64, gyro: f64) -> Result<Self> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(invalid(format!("hbar must be positive, got {hbar}")));
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(invalid(format!("mass must be positive, got {mass}")));
        }
        if !gyro.is_finite() {
            return Err(invalid("gyro must be finite"));
        }
        Ok(Self { hbar, mass, gyro })
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn gyro(&self) -> f64 {
        self.gyro
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self { hbar: 1.0, mass: 1.0, gyro: 1.0 }
    }
}

/// Gaussian packet with |ψ(x, t₀)|² ∝ exp(−(x − center)²/(2 width²)) and mean momentum ħk.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WavePacket {
    center: f64,
    width: f64,
    wavenumber: f64,
    start_time: f64,
}

/// Coefficients of log ψ = −p x² + q x + r at a fixed time.
#[derive(Clone, Copy, Debug)]
struct LogQuadratic {
    p: Complex,
    q: Complex,
    r: Complex,
}

impl LogQuadratic {
    fn value(&self, x: f64) -> Complex {
        -self.p * x * x + self.q * x + self.r
    }

    fn slope(&self, x: f64) -> Complex {
        -2.0 * self.p * x + self.q
    }
}

impl WavePacket {
    pub fn new(center: f64, width: f64, wavenumber: f64, start_time: f64) -> Result<Self> {
        if !(center.is_finite() && wavenumber.is_finite() && start_time.is_finite()) {
            return Err(invalid("packet parameters must be finite"));
        }
        if !(width.is_finite() && width > 0.0) {
            return Err(invalid(format!("packet width must be positive, got {width}")));
        }
        Ok(Self { center, width, wavenumber, start_time })
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn wavenumber(&self) -> f64 {
        self.wavenumber
    }

    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    /// Ehrenfest mean position.
    pub fn mean_position(&self, c: &PhysicalConstants, t: f64) -> f64 {
        self.center + c.hbar * self.wavenumber / c.mass * (t - self.start_time)
    }

    fn log_form(&self, c: &PhysicalConstants, t: f64) -> Result<LogQuadratic> {
        if !t.is_finite() || t < self.start_time {
            return Err(invalid(format!(
                "time {t} precedes packet start time {}",
                self.start_time
            )));
        }
        let tau = t - self.start_time;
        let (s2, k, x0) = (self.width * self.width, self.wavenumber, self.center);
        let spread = Complex::new(1.0, c.hbar * tau / (2.0 * c.mass * s2));
        let drift = x0 + c.hbar * k * tau / c.mass;
        let p = 1.0 / (4.0 * s2 * spread);
        let q = 2.0 * p * drift + Complex::i() * k;
        let r = -p * drift * drift - Complex::i() * k * x0
            - Complex::i() * (c.hbar * k * k * tau / (2.0 * c.mass))
            - 0.25 * (2.0 * PI * s2).ln()
            - 0.5 * spread.ln();
        Ok(LogQuadratic { p, q, r })
    }

    pub fn log_psi(&self, c: &PhysicalConstants, x: f64, t: f64) -> Result<Complex> {
        Ok(self.log_form(c, t)?.value(x))
    }

    /// ⟨self|other⟩; free evolution is unitary so this is time independent.
    pub fn overlap(&self, other: &WavePacket, c: &PhysicalConstants) -> Result<Complex> {
        let t = self.start_time.max(other.start_time);
        let (a, b) = (self.log_form(c, t)?, other.log_form(c, t)?);
        // ∫ exp(A x² + B x + C) dx with Re A < 0
        let quad = -a.p.conj() - b.p;
        let lin = a.q.conj() + b.q;
        let cst = a.r.conj() + b.r;
        Ok((PI / -quad).sqrt() * (cst - lin * lin / (4.0 * quad)).exp())
    }
}

pub fn psi_eval(wp: &WavePacket, c: &PhysicalConstants, x: f64, t: f64) -> Result<Complex> {
    Ok(wp.log_psi(c, x, t)?.exp())
}

fn node(location: String, log_density: f64) -> Error {
    Error::NodeSingularity { location, density: log_density.exp() }
}

pub fn velocity_1p(wp: &WavePacket, c: &PhysicalConstants, x: f64, t: f64) -> Result<f64> {
    let form = wp.log_form(c, t)?;
    let log_rho = 2.0 * form.value(x).re;
    if log_rho < NODE_DENSITY.ln() || log_rho.is_nan() {
        return Err(node(format!("x={x} t={t}"), log_rho));
    }
    Ok(c.hbar / c.mass * form.slope(x).im)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Form {
    Product,
    Symmetric,
    Antisymmetric,
}

impl Form {
    pub fn name(self) -> &'static str {
        match self {
            Form::Product => "product",
            Form::Symmetric => "symmetric",
            Form::Antisymmetric => "antisymmetric",
        }
    }
}

/// Ψ = ψ_a(x₁)ψ_b(x₂), or N[ψ_a(x₁)ψ_b(x₂) ± ψ_a(x₂)ψ_b(x₁)] with the
/// overlap-corrected N = 1/√(2(1 ± |⟨a|b⟩|²)).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoParticleWF {
    packet_a: WavePacket,
    packet_b: WavePacket,
    form: Form,
    log_norm: f64,
}

/// Per-point pieces of Ψ with the common factor exp(shift) removed.
struct PairEval {
    direct: Complex,
    exchanged: Complex,
    sum: Complex,
    log_scale: f64,
}

impl TwoParticleWF {
    pub fn new(packet_a: WavePacket, packet_b: WavePacket, form: Form, c: &PhysicalConstants) -> Result<Self> {
        let log_norm = match form {
            Form::Product => 0.0,
            Form::Symmetric | Form::Antisymmetric => {
                let o = packet_a.overlap(&packet_b, c)?.norm_sqr();
                let sign = if form == Form::Symmetric { 1.0 } else { -1.0 };
                let n2 = 2.0 * (1.0 + sign * o);
                if n2 < 1e-12 {
                    return Err(invalid("antisymmetrized identical packets vanish identically"));
                }
                -0.5 * n2.ln()
            }
        };
        Ok(Self { packet_a, packet_b, form, log_norm })
    }

    pub fn packet_a(&self) -> &WavePacket {
        &self.packet_a
    }

    pub fn packet_b(&self) -> &WavePacket {
        &self.packet_b
    }

    pub fn form(&self) -> Form {
        self.form
    }

    /// Narrower of the two widths, the length scale of the coupling stencil.
    pub fn min_width(&self) -> f64 {
        self.packet_a.width.min(self.packet_b.width)
    }

    fn forms(&self, c: &PhysicalConstants, t: f64) -> Result<(LogQuadratic, LogQuadratic)> {
        Ok((self.packet_a.log_form(c, t)?, self.packet_b.log_form(c, t)?))
    }

    fn pair_eval(&self, a: &LogQuadratic, b: &LogQuadratic, x1: f64, x2: f64) -> PairEval {
        let l1 = a.value(x1) + b.value(x2);
        if self.form == Form::Product {
            return PairEval {
                direct: Complex::new(1.0, 0.0),
                exchanged: Complex::new(0.0, 0.0),
                sum: Complex::new(1.0, 0.0),
                log_scale: l1.re,
            };
        }
        let l2 = a.value(x2) + b.value(x1);
        let shift = l1.re.max(l2.re);
        let direct = (l1 - shift).exp();
        let mut exchanged = (l2 - shift).exp();
        if self.form == Form::Antisymmetric {
            exchanged = -exchanged;
        }
        PairEval { direct, exchanged, sum: direct + exchanged, log_scale: shift }
    }

    pub fn psi(&self, c: &PhysicalConstants, x1: f64, x2: f64, t: f64) -> Result<Complex> {
        let (a, b) = self.forms(c, t)?;
        let l1 = a.value(x1) + b.value(x2);
        Ok(match self.form {
            Form::Product => l1.exp(),
            Form::Symmetric => (self.log_norm + l1).exp() + (self.log_norm + a.value(x2) + b.value(x1)).exp(),
            Form::Antisymmetric => (self.log_norm + l1).exp() - (self.log_norm + a.value(x2) + b.value(x1)).exp(),
        })
    }
}

pub fn velocity_2p(wf: &TwoParticleWF, c: &PhysicalConstants, x1: f64, x2: f64, t: f64) -> Result<(f64, f64)> {
    let (a, b) = wf.forms(c, t)?;
    let e = wf.pair_eval(&a, &b, x1, x2);
    let log_rho = 2.0 * (wf.log_norm + e.log_scale) + e.sum.norm_sqr().ln();
    if log_rho < NODE_DENSITY.ln() || log_rho.is_nan() {
        return Err(node(format!("x1={x1} x2={x2} t={t}"), log_rho));
    }
    let scale = c.hbar / c.mass;
    if wf.form == Form::Product {
        return Ok((scale * a.slope(x1).im, scale * b.slope(x2).im));
    }
    let d1 = (e.direct * a.slope(x1) + e.exchanged * b.slope(x1)) / e.sum;
    let d2 = (e.direct * b.slope(x2) + e.exchanged * a.slope(x2)) / e.sum;
    Ok((scale * d1.im, scale * d2.im))
}

/// |∂v₁/∂x₂| by Richardson-refined central differences.
pub fn cross_coupling(wf: &TwoParticleWF, c: &PhysicalConstants, x1: f64, x2: f64, t: f64) -> Result<f64> {
    let central = |h: f64| -> Result<f64> {
        let up = velocity_2p(wf, c, x1, x2 + h, t)?.0;
        let down = velocity_2p(wf, c, x1, x2 - h, t)?.0;
        Ok((up - down) / (2.0 * h))
    };
    let h = COUPLING_STEP * wf.min_width();
    let coarse = central(h)?;
    let fine = central(h / 2.0)?;
    Ok(((4.0 * fine - coarse) / 3.0).abs())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<const N: usize> {
    pub times: Vec<f64>,
    pub positions: Vec<[f64; N]>,
}

impl<const N: usize> Trajectory<N> {
    pub fn last(&self) -> Option<(f64, [f64; N])> {
        Some((*self.times.last()?, *self.positions.last()?))
    }
}

/// Integration stopped early; `partial` holds every completed step.
#[derive(Clone, Debug, PartialEq)]
pub struct Halted<const N: usize> {
    pub partial: Trajectory<N>,
    pub error: Error,
}

impl<const N: usize> From<Halted<N>> for Error {
    fn from(h: Halted<N>) -> Error {
        h.error
    }
}

fn axpy<const N: usize>(y: &[f64; N], a: f64, x: &[f64; N]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + a * x[i])
}

/// Number of steps of size `dt` covering [t0, t1], the last one possibly shorter.
fn step_count(t0: f64, t1: f64, dt: f64) -> Result<usize> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(invalid(format!("dt must be positive, got {dt}")));
    }
    if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
        return Err(invalid(format!("need t1 > t0, got [{t0}, {t1}]")));
    }
    let n = ((t1 - t0) / dt * (1.0 - 1e-12)).ceil();
    if n > 1e9 {
        return Err(invalid("too many integration steps"));
    }
    Ok(n.max(1.0) as usize)
}

/// Classical RK4 with every step stored.
pub fn rk4<const N: usize, F>(f: F, start: [f64; N], t0: f64, t1: f64, dt: f64) -> std::result::Result<Trajectory<N>, Halted<N>>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let empty = || Trajectory { times: Vec::new(), positions: Vec::new() };
    let steps = step_count(t0, t1, dt).map_err(|error| Halted { partial: empty(), error })?;
    let mut traj = Trajectory {
        times: Vec::with_capacity(steps + 1),
        positions: Vec::with_capacity(steps + 1),
    };
    if let Err(error) = f(t0, &start) {
        return Err(Halted { partial: traj, error });
    }
    traj.times.push(t0);
    traj.positions.push(start);
    let mut y = start;
    for i in 0..steps {
        let t = t0 + i as f64 * dt;
        let t_next = if i + 1 == steps { t1 } else { t0 + (i + 1) as f64 * dt };
        let h = t_next - t;
        let stage = || -> Result<[f64; N]> {
            let k1 = f(t, &y)?;
            let k2 = f(t + h / 2.0, &axpy(&y, h / 2.0, &k1))?;
            let k3 = f(t + h / 2.0, &axpy(&y, h / 2.0, &k2))?;
            let k4 = f(t + h, &axpy(&y, h, &k3))?;
            Ok(std::array::from_fn(|j| y[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])))
        };
        match stage() {
            Ok(next) => y = next,
            Err(error) => return Err(Halted { partial: traj, error }),
        }
        traj.times.push(t_next);
        traj.positions.push(y);
    }
    Ok(traj)
}

pub fn integrate_trajectory_1p(
    wp: &WavePacket,
    c: &PhysicalConstants,
    start: f64,
    t0: f64,
    t1: f64,
    dt: f64,
) -> std::result::Result<Trajectory<1>, Halted<1>> {
    rk4(|t, x: &[f64; 1]| Ok([velocity_1p(wp, c, x[0], t)?]), [start], t0, t1, dt)
}

pub fn integrate_trajectory_2p(
    wf: &TwoParticleWF,
    c: &PhysicalConstants,
    start: (f64, f64),
    t0: f64,
    t1: f64,
    dt: f64,
) -> std::result::Result<Trajectory<2>, Halted<2>> {
    rk4(
        |t, x: &[f64; 2]| {
            let (v1, v2) = velocity_2p(wf, c, x[0], x[1], t)?;
            Ok([v1, v2])
        },
        [start.0, start.1],
        t0,
        t1,
        dt,
    )
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinState {
    s: [f64; 3],
}

impl SpinState {
    pub fn new(s: [f64; 3]) -> Result<Self> {
        if s.iter().any(|v| !v.is_finite()) || norm(&s) == 0.0 {
            return Err(invalid("spin vector must be finite and non-zero"));
        }
        Ok(Self { s })
    }

    pub fn vector(&self) -> [f64; 3] {
        self.s
    }

    pub fn norm(&self) -> f64 {
        norm(&self.s)
    }
}

pub fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(a: &[f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// ds/dt = gyro · (B × s)
pub fn spin_derivative(s: &SpinState, b_field: &[f64; 3], c: &PhysicalConstants) -> [f64; 3] {
    cross(b_field, &s.s).map(|v| c.gyro * v)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpinHistory {
    pub times: Vec<f64>,
    pub states: Vec<SpinState>,
}

/// RK4 precession from t = 0 to t1; the initial state is included.
pub fn integrate_spin(s0: &SpinState, b_field: &[f64; 3], c: &PhysicalConstants, t1: f64, dt: f64) -> Result<SpinHistory> {
    if b_field.iter().any(|v| !v.is_finite()) {
        return Err(invalid("magnetic field must be finite"));
    }
    let f = |_t: f64, s: &[f64; 3]| Ok(cross(b_field, s).map(|v| c.gyro * v));
    let traj = rk4(f, s0.s, 0.0, t1, dt)?;
    Ok(SpinHistory {
        times: traj.times,
        states: traj.positions.into_iter().map(|s| SpinState { s }).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> PhysicalConstants {
        PhysicalConstants::default()
    }

    fn golden_pair(form: Form) -> TwoParticleWF {
        let a = WavePacket::new(-1.5, 1.0, 1.0, 0.0).unwrap();
        let b = WavePacket::new(1.5, 0.8, -0.5, 0.0).unwrap();
        TwoParticleWF::new(a, b, form, &unit()).unwrap()
    }

    fn trapezoid(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
        let h = (hi - lo) / n as f64;
        let inner: f64 = (1..n).map(|i| f(lo + i as f64 * h)).sum();
        h * (inner + 0.5 * (f(lo) + f(hi)))
    }

    #[test]
    fn norm_is_one_at_all_times() {
        let c = PhysicalConstants::new(0.7, 1.3, 1.0).unwrap();
        let wp = WavePacket::new(0.4, 0.6, 2.0, 0.5).unwrap();
        for t in [0.5, 1.0, 3.0, 10.0] {
            let centre = wp.mean_position(&c, t);
            let n = trapezoid(|x| psi_eval(&wp, &c, x, t).unwrap().norm_sqr(), centre - 80.0, centre + 80.0, 40_000);
            assert!((n - 1.0).abs() < 1e-8, "t={t}: {n}");
        }
        assert!(psi_eval(&wp, &c, 0.0, 0.4).is_err());
    }

    #[test]
    fn ehrenfest_centre() {
        let c = PhysicalConstants::new(1.0, 2.0, 1.0).unwrap();
        let wp = WavePacket::new(-1.0, 0.5, 3.0, 0.0).unwrap();
        for t in [0.0, 0.7, 2.0] {
            let mean = trapezoid(|x| x * psi_eval(&wp, &c, x, t).unwrap().norm_sqr(), -60.0, 60.0, 40_000);
            assert!((mean - (-1.0 + 1.5 * t)).abs() < 1e-8, "t={t}: {mean}");
        }
    }

    #[test]
    fn real_gaussian_has_flat_phase_and_no_current() {
        let c = unit();
        let wp = WavePacket::new(0.3, 1.2, 0.0, 0.0).unwrap();
        let ref_phase = psi_eval(&wp, &c, 0.0, 0.0).unwrap().arg();
        for x in [-3.0, -1.0, 0.5, 2.0] {
            assert!((psi_eval(&wp, &c, x, 0.0).unwrap().arg() - ref_phase).abs() < 1e-15);
            assert_eq!(velocity_1p(&wp, &c, x, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn schrodinger_residual() {
        let c = PhysicalConstants::new(0.9, 1.7, 1.0).unwrap();
        let wp = WavePacket::new(0.2, 0.7, 1.4, 0.1).unwrap();
        let (h, dt) = (1e-3, 1e-4);
        for (x, t) in [(0.0, 0.5), (0.8, 1.2), (-0.4, 0.3)] {
            let psi = |x: f64, t: f64| psi_eval(&wp, &c, x, t).unwrap();
            let dpsi_dt = (psi(x, t + dt) - psi(x, t - dt)) / (2.0 * dt);
            let lap = (psi(x + h, t) - 2.0 * psi(x, t) + psi(x - h, t)) / (h * h);
            let res = Complex::i() * c.hbar() * dpsi_dt + c.hbar().powi(2) / (2.0 * c.mass()) * lap;
            assert!(res.norm() < 1e-6 * psi(x, t).norm().max(1e-3), "{x},{t}: {res}");
        }
    }

    #[test]
    fn velocity_matches_phase_gradient() {
        let c = PhysicalConstants::new(1.1, 0.8, 1.0).unwrap();
        let wp = WavePacket::new(-0.5, 0.9, 0.7, 0.0).unwrap();
        let h = 1e-5;
        for t in [0.0, 0.6, 2.5] {
            for x in [-2.0, -0.5, 0.0, 1.3, 3.0] {
                let up = psi_eval(&wp, &c, x + h, t).unwrap();
                let down = psi_eval(&wp, &c, x - h, t).unwrap();
                let dphase = (up / down).arg() / (2.0 * h);
                let v = velocity_1p(&wp, &c, x, t).unwrap();
                assert!((v - c.hbar() / c.mass() * dphase).abs() < 1e-8, "{x},{t}");
            }
        }
    }

    #[test]
    fn spreading_packet_velocity_is_odd_with_positive_slope() {
        let c = unit();
        let wp = WavePacket::new(1.0, 0.5, 0.0, 0.0).unwrap();
        let t = 0.8;
        let mut prev = f64::NEG_INFINITY;
        for i in -5..=5 {
            let d = i as f64 * 0.4;
            let up = velocity_1p(&wp, &c, 1.0 + d, t).unwrap();
            let down = velocity_1p(&wp, &c, 1.0 - d, t).unwrap();
            assert!((up + down).abs() < 1e-14);
            assert!(up > prev);
            prev = up;
        }
    }

    #[test]
    fn plane_wave_limit() {
        let c = PhysicalConstants::new(1.0, 0.5, 1.0).unwrap();
        let wp = WavePacket::new(0.0, 1e3, 2.0, 0.0).unwrap();
        for x in [-5.0, 0.0, 5.0] {
            assert!((velocity_1p(&wp, &c, x, 1.0).unwrap() - 4.0).abs() < 1e-6);
        }
        let traj = integrate_trajectory_1p(&wp, &c, 0.0, 0.0, 1.0, 0.01).unwrap();
        assert!((traj.last().unwrap().1[0] - 4.0).abs() < 1e-6);
    }

    #[test]
    fn far_tail_is_a_node() {
        let wp = WavePacket::new(0.0, 0.1, 0.0, 0.0).unwrap();
        assert!(matches!(velocity_1p(&wp, &unit(), 10.0, 0.0), Err(Error::NodeSingularity { .. })));
    }

    #[test]
    fn product_velocity_is_single_particle_velocity() {
        let c = unit();
        let wf = golden_pair(Form::Product);
        for x2 in [-3.0, 0.0, 2.5] {
            let (v1, v2) = velocity_2p(&wf, &c, -0.7, x2, 0.9).unwrap();
            assert_eq!(v1, velocity_1p(wf.packet_a(), &c, -0.7, 0.9).unwrap());
            assert_eq!(v2, velocity_1p(wf.packet_b(), &c, x2, 0.9).unwrap());
        }
    }

    #[test]
    fn two_particle_norm_by_quadrature() {
        let c = unit();
        for form in [Form::Product, Form::Symmetric, Form::Antisymmetric] {
            // strongly overlapping packets make the correction visible
            let a = WavePacket::new(-0.3, 1.0, 0.5, 0.0).unwrap();
            let b = WavePacket::new(0.4, 0.8, -0.2, 0.0).unwrap();
            let wf = TwoParticleWF::new(a, b, form, &c).unwrap();
            let n = 600;
            let (lo, hi) = (-12.0, 12.0);
            let h = (hi - lo) / n as f64;
            let mut total = 0.0;
            for i in 0..=n {
                for j in 0..=n {
                    let w = if i == 0 || i == n { 0.5 } else { 1.0 } * if j == 0 || j == n { 0.5 } else { 1.0 };
                    total += w * wf.psi(&c, lo + i as f64 * h, lo + j as f64 * h, 0.6).unwrap().norm_sqr();
                }
            }
            assert!((total * h * h - 1.0).abs() < 1e-10, "{form:?}: {}", total * h * h);
        }
    }

    #[test]
    fn overlap_matches_quadrature() {
        let c = PhysicalConstants::new(1.0, 1.0, 1.0).unwrap();
        let a = WavePacket::new(-0.3, 1.0, 0.5, 0.0).unwrap();
        let b = WavePacket::new(0.4, 0.8, -0.2, 0.3).unwrap();
        let exact = a.overlap(&b, &c).unwrap();
        for t in [0.3, 1.5] {
            let re = trapezoid(|x| (psi_eval(&a, &c, x, t).unwrap().conj() * psi_eval(&b, &c, x, t).unwrap()).re, -40.0, 40.0, 40_000);
            let im = trapezoid(|x| (psi_eval(&a, &c, x, t).unwrap().conj() * psi_eval(&b, &c, x, t).unwrap()).im, -40.0, 40.0, 40_000);
            assert!((Complex::new(re, im) - exact).norm() < 1e-10);
        }
    }

    #[test]
    fn product_form_is_local_on_grid() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let c = unit();
        for _ in 0..5 {
            let a = WavePacket::new(rng.random_range(-2.0..0.0), rng.random_range(0.5..1.5), rng.random_range(-1.0..1.0), 0.0).unwrap();
            let b = WavePacket::new(rng.random_range(0.0..2.0), rng.random_range(0.5..1.5), rng.random_range(-1.0..1.0), 0.0).unwrap();
            let wf = TwoParticleWF::new(a, b, Form::Product, &c).unwrap();
            for i in 0..21 {
                for j in 0..21 {
                    let x1 = -3.0 + 0.3 * i as f64;
                    let x2 = -3.0 + 0.3 * j as f64;
                    assert!(cross_coupling(&wf, &c, x1, x2, 0.5).unwrap() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn golden_couplings() {
        // 40-digit reference from the analytic ∂²/∂x₁∂x₂ of the guidance phase
        let c = unit();
        let anti = golden_pair(Form::Antisymmetric);
        let sym = golden_pair(Form::Symmetric);
        let (x1, x2, t) = (-0.5, 0.6, 0.4);
        assert!((velocity_2p(&anti, &c, x1, x2, t).unwrap().0 - 0.608_571_874_465_038).abs() < 1e-12);
        assert!((velocity_2p(&sym, &c, x1, x2, t).unwrap().0 - 1.523_947_541_669_752).abs() < 1e-12);
        let ka = cross_coupling(&anti, &c, x1, x2, t).unwrap();
        let ks = cross_coupling(&sym, &c, x1, x2, t).unwrap();
        assert!((ka - 0.49379744529007427).abs() < 1e-7, "{ka}");
        assert!((ks - 0.21015748988610044).abs() < 1e-7, "{ks}");
        assert!(ka > 1e-3 && (ka - ks).abs() > 0.1);
    }

    #[test]
    fn identical_symmetric_packets_decouple() {
        let c = unit();
        let p = WavePacket::new(0.2, 0.9, 0.6, 0.0).unwrap();
        let wf = TwoParticleWF::new(p, p, Form::Symmetric, &c).unwrap();
        for (x1, x2) in [(-1.0, 0.5), (0.0, 2.0), (1.5, -1.5)] {
            assert!(cross_coupling(&wf, &c, x1, x2, 0.7).unwrap() < 1e-8);
        }
        assert!(TwoParticleWF::new(p, p, Form::Antisymmetric, &c).is_err());
    }

    #[test]
    fn antisymmetric_diagonal_is_a_node() {
        let c = unit();
        let wf = golden_pair(Form::Antisymmetric);
        assert!(matches!(velocity_2p(&wf, &c, 0.3, 0.3, 0.4), Err(Error::NodeSingularity { .. })));
        let halted = integrate_trajectory_2p(&wf, &c, (0.3, 0.3), 0.0, 1.0, 0.1).unwrap_err();
        assert!(halted.partial.times.is_empty());
    }

    #[test]
    fn stationary_centre_trajectory() {
        let wp = WavePacket::new(0.7, 0.5, 0.0, 0.0).unwrap();
        let traj = integrate_trajectory_1p(&wp, &unit(), 0.7, 0.0, 3.0, 0.01).unwrap();
        assert!(traj.positions.iter().all(|x| (x[0] - 0.7).abs() < 1e-14));
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(traj.times.len(), 301);
        assert_eq!(*traj.times.last().unwrap(), 3.0);
    }

    #[test]
    fn spreading_trajectory_follows_width() {
        // Bohmian paths in a free Gaussian scale with σ(t)/σ(0)
        let c = unit();
        let wp = WavePacket::new(0.0, 0.5, 1.0, 0.0).unwrap();
        let traj = integrate_trajectory_1p(&wp, &c, 0.4, 0.0, 2.0, 0.01).unwrap();
        let t = 2.0f64;
        let ratio = (1.0 + (t / (2.0 * 0.25)).powi(2)).sqrt();
        assert!((traj.last().unwrap().1[0] - (t + 0.4 * ratio)).abs() < 1e-9);
    }

    #[test]
    fn rk4_order() {
        let c = unit();
        let wf = golden_pair(Form::Symmetric);
        let end = |dt: f64| integrate_trajectory_2p(&wf, &c, (-1.2, 1.1), 0.0, 2.0, dt).unwrap().last().unwrap().1;
        let (e1, e2, e3) = (end(0.1), end(0.05), end(0.025));
        for k in 0..2 {
            let order = ((e1[k] - e2[k]) / (e2[k] - e3[k])).abs().log2();
            assert!((3.7..4.3).contains(&order), "coordinate {k}: {order}");
        }
    }

    #[test]
    fn rk4_rejects_bad_intervals() {
        let wp = WavePacket::new(0.0, 1.0, 0.0, 0.0).unwrap();
        assert!(integrate_trajectory_1p(&wp, &unit(), 0.0, 0.0, 1.0, 0.0).is_err());
        assert!(integrate_trajectory_1p(&wp, &unit(), 0.0, 1.0, 1.0, 0.1).is_err());
        let traj = integrate_trajectory_1p(&wp, &unit(), 0.0, 0.0, 1.0, 0.3).unwrap();
        assert_eq!(traj.times, vec![0.0, 0.3, 0.6, 0.8999999999999999, 1.0]);
    }

    #[test]
    fn spin_derivative_convention() {
        let c = PhysicalConstants::new(1.0, 1.0, 2.0).unwrap();
        let s = SpinState::new([1.0, 0.0, 0.0]).unwrap();
        assert_eq!(spin_derivative(&s, &[0.0, 0.0, 3.0], &c), [0.0, 6.0, 0.0]);
        assert_eq!(spin_derivative(&s, &[4.0, 0.0, 0.0], &c), [0.0, 0.0, 0.0]);
        let s = SpinState::new([0.3, -1.2, 0.5]).unwrap();
        let d = spin_derivative(&s, &[0.7, 0.1, -2.0], &c);
        assert!(dot(&d, &s.vector()).abs() < 1e-15);
        assert!(SpinState::new([0.0; 3]).is_err());
    }

    #[test]
    fn spin_rotation_oracle() {
        let c = PhysicalConstants::new(1.0, 1.0, 0.8).unwrap();
        let b = [0.0, 0.0, 1.5];
        let w = 0.8 * 1.5;
        let period = 2.0 * PI / w;
        let hist = integrate_spin(&SpinState::new([1.0, 0.0, 0.0]).unwrap(), &b, &c, period, 1e-3).unwrap();
        for (t, s) in hist.times.iter().zip(&hist.states) {
            let v = s.vector();
            assert!((v[0] - (w * t).cos()).abs() < 1e-6);
            assert!((v[1] - (w * t).sin()).abs() < 1e-6);
        }
        let end = hist.states.last().unwrap().vector();
        assert!((end[0] - 1.0).abs() < 1e-6 && end[1].abs() < 1e-6);

        let par = integrate_spin(&SpinState::new([0.0, 0.0, 2.0]).unwrap(), &b, &c, 5.0, 0.01).unwrap();
        assert!(par.states.iter().all(|s| s.vector() == [0.0, 0.0, 2.0]));
    }
}
