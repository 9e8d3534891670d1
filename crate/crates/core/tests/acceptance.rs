//! Acceptance gate. Each criterion is one test; every sub-check prints a
//! PASS/FAIL line before the test asserts.

use std::f64::consts::{PI, TAU};
use std::process::Command;
use std::time::Instant;

use bell_lab::chsh::{
    chsh_value, identity_residual, singlet, tsirelson_scan, ChshSettings, SetupKind, TSIRELSON_BOUND,
};
use bell_lab::dbb::{
    cross_coupling, dot, integrate_spin, norm, Form, PhysicalConstants, SpinState, TwoParticleWF, WavePacket,
};
use bell_lab::fock::{
    coincidence_closed_form, coincidence_correlation, coincidence_probability, ou_mandel_state, product_state,
    BeamSplitterSpec,
};
use bell_lab::lhv::{chsh_deterministic_max, mermin_deterministic_max, simulate_chsh, SignModel};
use bell_lab::mermin::{mermin_scan, mermin_square_residual, MerminSettings};
use bell_lab::operator::MeasurementPlane;
use bell_lab::{Angle, Complex, Ket};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const IDENTITY_TOL: f64 = 1e-12;
const IDENTITY_RUNTIME_S: f64 = 1.0;
const TSIRELSON_TOL: f64 = 1e-12;
const SCAN_LOWER: f64 = 2.826;
const SCAN_SLACK: f64 = 1e-9;
const BOUND_SLACK: f64 = 1e-9;
const DEGENERATE_SLACK: f64 = 1e-12;
const MC_SAMPLES: u64 = 1_000_000;
const MC_SIGMAS: f64 = 5.0;
const MERMIN_TOL: f64 = 1e-6;
const MERMIN_IDENTITY_TOL: f64 = 1e-12;
const OU_MANDEL_TOL: f64 = 1e-12;
const FACTORIZATION_TOL: f64 = 1e-12;
const LOCAL_COUPLING_TOL: f64 = 1e-8;
const GOLDEN_FRACTION: f64 = 0.99;
const SPIN_DRIFT_TOL: f64 = 1e-9;
const SPIN_FREQ_REL_TOL: f64 = 1e-6;

/// ∂v₁/∂x₂ at the pinned set below, from a 40-digit analytic reference.
const GOLDEN_ANTISYMMETRIC: f64 = 0.49379744529007427;
const GOLDEN_SYMMETRIC: f64 = 0.21015748988610044;

struct Gate {
    criterion: u32,
    all: bool,
}

impl Gate {
    fn new(criterion: u32) -> Self {
        Gate { criterion, all: true }
    }

    fn check(&mut self, label: &str, ok: bool, detail: String) {
        println!("criterion {} {}: {} ({})", self.criterion, label, if ok { "PASS" } else { "FAIL" }, detail);
        self.all &= ok;
    }

    fn finish(self) {
        assert!(self.all, "criterion {} has failing checks", self.criterion);
    }
}

fn random_angle(rng: &mut ChaCha8Rng) -> Angle {
    Angle::radians(rng.random_range(0.0..TAU))
}

fn random_settings(rng: &mut ChaCha8Rng, kind: SetupKind) -> ChshSettings {
    ChshSettings::new(random_angle(rng), random_angle(rng), random_angle(rng), random_angle(rng), kind)
}

#[test]
fn criterion_01_chsh_identity() {
    let mut gate = Gate::new(1);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    for kind in [SetupKind::SpinHalf, SetupKind::Photon] {
        let worst = (0..1000)
            .map(|_| identity_residual(&random_settings(&mut rng, kind)))
            .fold(0.0, f64::max);
        gate.check(
            &format!("{} identity residual", kind.name()),
            worst < IDENTITY_TOL,
            format!("max {worst:e} < {IDENTITY_TOL:e}"),
        );
    }
    let elapsed = start.elapsed().as_secs_f64();
    gate.check("runtime", elapsed < IDENTITY_RUNTIME_S, format!("{elapsed:.3} s < {IDENTITY_RUNTIME_S} s"));
    gate.finish();
}

#[test]
fn criterion_02_tsirelson_value() {
    let mut gate = Gate::new(2);
    let s = chsh_value(&singlet(), &ChshSettings::degrees(0.0, 90.0, 45.0, 135.0, SetupKind::SpinHalf))
        .unwrap()
        .s;
    gate.check(
        "singlet S at (0,90,45,135)",
        (s - TSIRELSON_BOUND).abs() < TSIRELSON_TOL,
        format!("S = {s:.15}, want {TSIRELSON_BOUND:.15} ± {TSIRELSON_TOL:e}"),
    );
    let best = tsirelson_scan(SetupKind::SpinHalf, Angle::degrees(1.0)).unwrap();
    let m = best.s.abs();
    gate.check(
        "1° grid scan max",
        (SCAN_LOWER..=TSIRELSON_BOUND + SCAN_SLACK).contains(&m),
        format!("max |S| = {m:.15} in [{SCAN_LOWER}, 2√2 + {SCAN_SLACK:e}]"),
    );
    gate.finish();
}

fn random_ket(rng: &mut ChaCha8Rng) -> Ket {
    let amps = (0..4)
        .map(|_| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    Ket::normalized(amps).unwrap()
}

#[test]
fn criterion_03_quantum_bound() {
    let mut gate = Gate::new(3);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst, mut worst_degenerate) = (0.0f64, 0.0f64);
    for i in 0..10_000 {
        let kind = if i % 2 == 0 { SetupKind::SpinHalf } else { SetupKind::Photon };
        let psi = random_ket(&mut rng);
        worst = worst.max(chsh_value(&psi, &random_settings(&mut rng, kind)).unwrap().s.abs());
        let (a, b) = (random_angle(&mut rng), random_angle(&mut rng));
        let degenerate = ChshSettings::new(a, a, b, b, kind);
        worst_degenerate = worst_degenerate.max(chsh_value(&psi, &degenerate).unwrap().s.abs());
    }
    gate.check(
        "random |S|",
        worst <= TSIRELSON_BOUND + BOUND_SLACK,
        format!("max {worst:.15} ≤ 2√2 + {BOUND_SLACK:e}"),
    );
    gate.check(
        "degenerate |S|",
        worst_degenerate <= 2.0 + DEGENERATE_SLACK,
        format!("max {worst_degenerate:.15} ≤ 2 + {DEGENERATE_SLACK:e}"),
    );
    gate.finish();
}

#[test]
fn criterion_04_lhv_bounds() {
    let mut gate = Gate::new(4);
    let chsh = chsh_deterministic_max();
    gate.check("CHSH enumeration max", chsh == 2.0, format!("{chsh} == 2"));
    let mermin = mermin_deterministic_max(3).unwrap();
    gate.check("Mermin n=3 enumeration max", mermin == 2.0, format!("{mermin} == 2"));
    let canonical = ChshSettings::new(
        Angle::radians(0.0),
        Angle::radians(PI / 2.0),
        Angle::radians(PI / 4.0),
        Angle::radians(3.0 * PI / 4.0),
        SetupKind::SpinHalf,
    );
    let est = simulate_chsh(&SignModel, &canonical, MC_SAMPLES, 2024).unwrap();
    gate.check(
        "sign model S at canonical angles",
        (est.s - 2.0).abs() <= MC_SIGMAS * est.stderr,
        format!("S = {} ± {}, want 2.0 within {MC_SIGMAS}σ", est.s, est.stderr),
    );
    gate.finish();
}

#[test]
fn criterion_05_mermin_quantum_values() {
    let mut gate = Gate::new(5);
    for (n, want) in [(3usize, 4.0), (4, 8.0)] {
        let scan = mermin_scan(n, Angle::degrees(1.0), MeasurementPlane::XY).unwrap();
        let v = scan.value.abs();
        gate.check(
            &format!("scanned max |F{n}|"),
            (v - want).abs() < MERMIN_TOL,
            format!("{v:.12} vs {want} ± {MERMIN_TOL:e}"),
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for plane in [MeasurementPlane::XY, MeasurementPlane::ZY] {
        for _ in 0..500 {
            let pairs = (0..3).map(|_| (random_angle(&mut rng), random_angle(&mut rng))).collect();
            worst = worst.max(mermin_square_residual(&MerminSettings::new(pairs, plane).unwrap()).unwrap());
        }
    }
    gate.check(
        "F3² identity residual",
        worst < MERMIN_IDENTITY_TOL,
        format!("max {worst:e} < {MERMIN_IDENTITY_TOL:e}"),
    );
    gate.finish();
}

fn random_bs(rng: &mut ChaCha8Rng) -> BeamSplitterSpec {
    let tx: f64 = rng.random_range(0.0..=1.0);
    let ty: f64 = rng.random_range(0.0..=1.0);
    BeamSplitterSpec::new(tx, 1.0 - tx, ty, 1.0 - ty).unwrap()
}

#[test]
fn criterion_06_ou_mandel() {
    let mut gate = Gate::new(6);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let bs = random_bs(&mut rng);
        let state = ou_mandel_state(&bs);
        for i in 0..37 {
            for j in 0..37 {
                let (t1, t2) = (Angle::degrees(5.0 * i as f64), Angle::degrees(5.0 * j as f64));
                let diff = (coincidence_probability(&state, t1, t2) - coincidence_closed_form(&bs, t1, t2)).abs();
                worst = worst.max(diff);
            }
        }
    }
    gate.check(
        "numeric vs closed-form coincidence",
        worst < OU_MANDEL_TOL,
        format!("max |Δ| {worst:e} < {OU_MANDEL_TOL:e}"),
    );

    let equal = ou_mandel_state(&BeamSplitterSpec::equal_split());
    let mut worst_corr = 0.0f64;
    for i in 0..37 {
        for j in 0..37 {
            let (t1, t2) = (5.0 * i as f64, 5.0 * j as f64);
            let e = coincidence_correlation(&equal, Angle::degrees(t1), Angle::degrees(t2)).unwrap();
            let want = (2.0 * (t1 + t2).to_radians()).cos();
            worst_corr = worst_corr.max((e - want).abs());
        }
    }
    gate.check(
        "equal-split correlation vs cos2(θ1+θ2)",
        worst_corr < OU_MANDEL_TOL,
        format!("max |Δ| {worst_corr:e} < {OU_MANDEL_TOL:e}"),
    );

    let e = |a: f64, b: f64| coincidence_correlation(&equal, Angle::degrees(a), Angle::degrees(b)).unwrap();
    let s = e(0.0, 22.5) + e(45.0, 22.5) + e(0.0, 67.5) - e(45.0, 67.5);
    gate.check(
        "CHSH from correlations at (0,45,22.5,67.5)",
        (s - TSIRELSON_BOUND).abs() < OU_MANDEL_TOL,
        format!("S = {s:.15}, want 2√2 ± {OU_MANDEL_TOL:e}"),
    );
    gate.finish();
}

#[test]
fn criterion_07_factorization() {
    let mut gate = Gate::new(7);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let bs = random_bs(&mut rng);
        let (direct, built) = (ou_mandel_state(&bs), product_state(&bs));
        for (a, b) in direct.ket().amplitudes().iter().zip(built.ket().amplitudes()) {
            worst = worst.max((a - b).norm());
        }
    }
    gate.check(
        "ou_mandel_state vs product_state",
        worst < FACTORIZATION_TOL,
        format!("max entrywise |Δ| {worst:e} < {FACTORIZATION_TOL:e}"),
    );
    gate.finish();
}

#[test]
fn criterion_08_dbb_locality() {
    let mut gate = Gate::new(8);
    let c = PhysicalConstants::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let a = WavePacket::new(rng.random_range(-2.0..0.0), rng.random_range(0.5..1.5), rng.random_range(-1.0..1.0), 0.0)
            .unwrap();
        let b = WavePacket::new(rng.random_range(0.0..2.0), rng.random_range(0.5..1.5), rng.random_range(-1.0..1.0), 0.0)
            .unwrap();
        let wf = TwoParticleWF::new(a, b, Form::Product, &c).unwrap();
        let t = rng.random_range(0.0..1.0);
        for i in 0..21 {
            for j in 0..21 {
                let (x1, x2) = (-3.0 + 0.3 * i as f64, -3.0 + 0.3 * j as f64);
                worst = worst.max(cross_coupling(&wf, &c, x1, x2, t).unwrap());
            }
        }
    }
    gate.check(
        "product-form cross coupling",
        worst < LOCAL_COUPLING_TOL,
        format!("max {worst:e} < {LOCAL_COUPLING_TOL:e}"),
    );

    let a = WavePacket::new(-1.5, 1.0, 1.0, 0.0).unwrap();
    let b = WavePacket::new(1.5, 0.8, -0.5, 0.0).unwrap();
    for (form, golden) in [(Form::Antisymmetric, GOLDEN_ANTISYMMETRIC), (Form::Symmetric, GOLDEN_SYMMETRIC)] {
        let wf = TwoParticleWF::new(a, b, form, &c).unwrap();
        let k = cross_coupling(&wf, &c, -0.5, 0.6, 0.4).unwrap();
        gate.check(
            &format!("{} cross coupling at golden point", form.name()),
            k >= GOLDEN_FRACTION * golden,
            format!("{k:.15} ≥ {GOLDEN_FRACTION} × {golden}"),
        );
    }
    gate.finish();
}

#[test]
fn criterion_09_spin_precession() {
    let mut gate = Gate::new(9);
    let c = PhysicalConstants::new(1.0, 1.0, 0.7).unwrap();
    let b = [0.3, -0.4, 1.2];
    let s0 = SpinState::new([0.8, 0.5, -0.2]).unwrap();
    let (steps, dt) = (10_000u32, 0.01);
    let hist = integrate_spin(&s0, &b, &c, steps as f64 * dt, dt).unwrap();
    assert_eq!(hist.states.len(), steps as usize + 1);

    let b_norm = norm(&b);
    let b_hat = b.map(|v| v / b_norm);
    let (n0, p0) = (s0.norm(), dot(&s0.vector(), &b_hat));
    let norm_drift = hist.states.iter().map(|s| (s.norm() - n0).abs()).fold(0.0, f64::max);
    let par_drift = hist.states.iter().map(|s| (dot(&s.vector(), &b_hat) - p0).abs()).fold(0.0, f64::max);
    gate.check("|s| drift", norm_drift < SPIN_DRIFT_TOL, format!("{norm_drift:e} < {SPIN_DRIFT_TOL:e}"));
    gate.check("s·B̂ drift", par_drift < SPIN_DRIFT_TOL, format!("{par_drift:e} < {SPIN_DRIFT_TOL:e}"));

    // accumulated rotation angle of the component perpendicular to B
    let e1 = {
        let p = s0.vector();
        let perp = [p[0] - p0 * b_hat[0], p[1] - p0 * b_hat[1], p[2] - p0 * b_hat[2]];
        let l = norm(&perp);
        perp.map(|x| x / l)
    };
    let e2 = bell_lab::dbb::cross(&b_hat, &e1);
    let mut total = 0.0;
    let mut prev = 0.0f64;
    for s in &hist.states {
        let v = s.vector();
        let angle = dot(&v, &e2).atan2(dot(&v, &e1));
        let mut step = angle - prev;
        if step > PI {
            step -= TAU;
        } else if step < -PI {
            step += TAU;
        }
        total += step;
        prev = angle;
    }
    let omega = total / hist.times.last().unwrap();
    let want = c.gyro() * b_norm;
    let rel = (omega.abs() - want).abs() / want;
    gate.check(
        "precession frequency",
        rel < SPIN_FREQ_REL_TOL,
        format!("ω = {omega:.12}, gyro·|B| = {want:.12}, rel {rel:e} < {SPIN_FREQ_REL_TOL:e}"),
    );
    gate.finish();
}

fn run_cli(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_bell-lab")).args(args).output().expect("spawn bell-lab");
    (out.status.code().unwrap_or(-1), out.stdout)
}

#[test]
fn criterion_10_reproducibility() {
    let mut gate = Gate::new(10);
    let commands: &[&[&str]] = &[
        &["chsh", "--alpha", "0", "--alpha-prime", "90", "--beta", "45", "--beta-prime", "-45"],
        &["chsh", "--alpha", "10", "--alpha-prime", "70", "--beta", "25", "--beta-prime", "100", "--kind", "photon"],
        &["chsh", "scan", "--step", "5", "--kind", "photon"],
        &["identity", "--kind", "spin", "--trials", "1000", "--seed", "7"],
        &["identity", "--kind", "photon", "--trials", "200", "--seed", "11"],
        &["mermin", "--n", "3", "--scan", "--step", "5"],
        &["mermin", "--n", "4"],
        &["lhv", "--enumerate"],
        &["lhv", "--model", "sign", "--samples", "20000", "--seed", "3", "--angles", "0,90,45,-45"],
        &["oumandel", "--tx", "0.3", "--ty", "0.8", "--grid", "7"],
        &["oumandel", "--theta1", "10", "--theta2", "35", "--correlation"],
        &["dbb", "--form", "antisymmetric", "--grid", "6"],
        &["dbb", "--form", "symmetric", "--trajectory", "--t1", "0.5", "--dt", "0.05"],
        &["spin", "--bz", "1.5", "--gyro", "0.8", "--steps", "100", "--dt", "0.01"],
    ];
    for args in commands {
        let (code_a, first) = run_cli(args);
        let (code_b, second) = run_cli(args);
        let label = args.join(" ");
        gate.check(
            &format!("`{label}` byte-identical"),
            code_a == 0 && code_b == 0 && !first.is_empty() && first == second,
            format!("exit {code_a}/{code_b}, {} bytes", first.len()),
        );
    }
    gate.finish();
}
