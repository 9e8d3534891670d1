//! `bell-lab` command line: each subcommand renders one CSV document.
//!
//! Output is assembled in memory and only written once the command has
//! produced it, so a validation failure never leaves a partial file. The one
//! exception is a trajectory halted at a node, whose completed steps are
//! written before exiting with the node status.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chsh::{chsh_value, identity_residual, reference_state, tsirelson_scan, ChshSettings, SetupKind};
use crate::dbb::{
    cross_coupling, integrate_spin, integrate_trajectory_2p, velocity_2p, Form, PhysicalConstants, SpinState,
    TwoParticleWF, WavePacket,
};
use crate::error::Error;
use crate::fock::{coincidence_closed_form, coincidence_correlation, coincidence_probability, ou_mandel_state, BeamSplitterSpec};
use crate::lhv::{chsh_deterministic_max, mermin_deterministic_max, simulate_chsh, SignModel, RNG_ALGORITHM};
use crate::mermin::{ghz, mermin_scan, mermin_value_fast, MerminSettings};
use crate::operator::{Angle, MeasurementPlane};

/// Residual above which `identity` reports a numerical failure.
pub const IDENTITY_TOL: f64 = 1e-12;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_NODE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "bell-lab", version, about = "Bell, Mermin, Ou–Mandel and Bohmian guidance calculations")]
pub struct Cli {
    /// Write CSV here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// CHSH value at one setting, or `chsh scan` for the grid maximum.
    Chsh(ChshArgs),
    /// Worst residual of S² = 4I − [A,A′]⊗[B,B′] over random settings.
    Identity(IdentityArgs),
    /// Mermin value on the n-particle GHZ state.
    Mermin(MerminArgs),
    /// Local hidden-variable baselines.
    Lhv(LhvArgs),
    /// Ou–Mandel coincidence probabilities or correlations.
    Oumandel(OuMandelArgs),
    /// Bohmian velocities of a two-particle Gaussian state.
    Dbb(DbbArgs),
    /// Spin precession in a static field.
    Spin(SpinArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Spin,
    Photon,
}

impl From<KindArg> for SetupKind {
    fn from(k: KindArg) -> SetupKind {
        match k {
            KindArg::Spin => SetupKind::SpinHalf,
            KindArg::Photon => SetupKind::Photon,
        }
    }
}

#[derive(Debug, Args)]
#[command(args_conflicts_with_subcommands = true)]
pub struct ChshArgs {
    #[command(subcommand)]
    pub scan: Option<ChshScan>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha_prime: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta_prime: Option<f64>,
    #[arg(long, value_enum, default_value = "spin")]
    pub kind: KindArg,
}

#[derive(Debug, Subcommand)]
pub enum ChshScan {
    /// Exhaustive grid search for max |S|.
    Scan {
        /// Grid step in degrees, at most 5.
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        #[arg(long, value_enum, default_value = "spin")]
        kind: KindArg,
    },
}

#[derive(Debug, Args)]
pub struct IdentityArgs {
    #[arg(long, value_enum, default_value = "spin")]
    pub kind: KindArg,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PlaneArg {
    Xy,
    Zy,
}

impl From<PlaneArg> for MeasurementPlane {
    fn from(p: PlaneArg) -> MeasurementPlane {
        match p {
            PlaneArg::Xy => MeasurementPlane::XY,
            PlaneArg::Zy => MeasurementPlane::ZY,
        }
    }
}

#[derive(Debug, Args)]
pub struct MerminArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub scan: bool,
    /// Scan grid step in degrees.
    #[arg(long, default_value_t = 1.0, requires = "scan")]
    pub step: f64,
    /// Shared setting a in degrees (ignored with --scan).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub alpha: f64,
    /// Shared setting a′ in degrees (ignored with --scan).
    #[arg(long, default_value_t = 90.0, allow_hyphen_values = true)]
    pub alpha_prime: f64,
    #[arg(long, value_enum, default_value = "xy")]
    pub plane: PlaneArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Sign,
}

#[derive(Debug, Args)]
pub struct LhvArgs {
    /// Exhaust the 16 deterministic CHSH strategies.
    #[arg(long, conflicts_with_all = ["model", "samples", "seed", "angles"])]
    pub enumerate: bool,
    #[arg(long, value_enum, required_unless_present = "enumerate")]
    pub model: Option<ModelArg>,
    #[arg(long, required_unless_present = "enumerate")]
    pub samples: Option<u64>,
    #[arg(long, required_unless_present = "enumerate")]
    pub seed: Option<u64>,
    /// α,α′,β,β′ in degrees.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,90,45,-45")]
    pub angles: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct OuMandelArgs {
    #[arg(long, default_value_t = 0.5)]
    pub tx: f64,
    #[arg(long, default_value_t = 0.5)]
    pub ty: f64,
    #[arg(long, allow_hyphen_values = true, required_unless_present = "grid")]
    pub theta1: Option<f64>,
    #[arg(long, allow_hyphen_values = true, required_unless_present = "grid")]
    pub theta2: Option<f64>,
    /// N×N analyzer grid over [0°, 180°] instead of a single point.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub correlation: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormArg {
    Product,
    Symmetric,
    Antisymmetric,
}

impl From<FormArg> for Form {
    fn from(f: FormArg) -> Form {
        match f {
            FormArg::Product => Form::Product,
            FormArg::Symmetric => Form::Symmetric,
            FormArg::Antisymmetric => Form::Antisymmetric,
        }
    }
}

#[derive(Debug, Args)]
pub struct DbbArgs {
    #[arg(long, value_enum)]
    pub form: FormArg,
    #[arg(long, default_value_t = 1.0)]
    pub hbar: f64,
    #[arg(long, default_value_t = 1.0)]
    pub mass: f64,
    #[arg(long, default_value_t = -1.5, allow_hyphen_values = true)]
    pub center_a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub width_a: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub k_a: f64,
    #[arg(long, default_value_t = 1.5, allow_hyphen_values = true)]
    pub center_b: f64,
    #[arg(long, default_value_t = 0.8)]
    pub width_b: f64,
    #[arg(long, default_value_t = -0.5, allow_hyphen_values = true)]
    pub k_b: f64,
    /// Evaluation time for --grid.
    #[arg(long, default_value_t = 0.4)]
    pub t: f64,
    /// N×N grid of (x1, x2) over [x-min, x-max].
    #[arg(long, conflicts_with = "trajectory")]
    pub grid: Option<usize>,
    #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
    pub x_min: f64,
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    pub x_max: f64,
    /// Integrate one trajectory pair instead of sampling a grid.
    #[arg(long, required_unless_present = "grid")]
    pub trajectory: bool,
    #[arg(long, default_value_t = -1.5, allow_hyphen_values = true)]
    pub x1: f64,
    #[arg(long, default_value_t = 1.5, allow_hyphen_values = true)]
    pub x2: f64,
    #[arg(long, default_value_t = 0.0)]
    pub t0: f64,
    #[arg(long, default_value_t = 2.0)]
    pub t1: f64,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
}

#[derive(Debug, Args)]
pub struct SpinArgs {
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub bx: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub by: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub bz: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub gyro: f64,
    #[arg(long)]
    pub steps: u64,
    #[arg(long)]
    pub dt: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub sx: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub sy: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub sz: f64,
}

/// A failed run, classified by exit status.
#[derive(Clone, Debug, PartialEq)]
pub struct Failure {
    pub code: i32,
    pub detail: String,
}

impl Failure {
    pub fn validation(detail: impl Into<String>) -> Self {
        Self { code: EXIT_VALIDATION, detail: detail.into() }
    }

    pub fn numerical(detail: impl Into<String>) -> Self {
        Self { code: EXIT_NUMERICAL, detail: detail.into() }
    }

    /// `error=<code> detail=<text>` on a single line.
    pub fn record(&self) -> String {
        let detail: String = self.detail.split_whitespace().collect::<Vec<_>>().join(" ");
        format!("error={} detail={}", self.code, detail)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidInput(_) | Error::DimensionMismatch { .. } => EXIT_VALIDATION,
            Error::NotHermitian { .. } | Error::UndefinedCorrelation => EXIT_NUMERICAL,
            Error::NodeSingularity { .. } => EXIT_NODE,
        };
        Failure { code, detail: e.to_string() }
    }
}

/// CSV text (possibly partial, see the module note) and the failure, if any.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub csv: Option<String>,
    pub failure: Option<Failure>,
}

impl Report {
    fn ok(csv: String) -> Self {
        Report { csv: Some(csv), failure: None }
    }

    fn failed(f: impl Into<Failure>) -> Self {
        Report { csv: None, failure: Some(f.into()) }
    }
}

/// `printf("%.17g")`: 17 significant digits, trailing zeros dropped.
pub fn fmt_g17(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-4..17).contains(&exp) {
        trim(&format!("{:.*}", (16 - exp) as usize, x))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim(mantissa), sign, exp.abs())
    }
}

struct Csv {
    text: String,
}

impl Csv {
    fn new(command: &str, params: &[(&str, String)], seed: Option<u64>, header: &[&str]) -> Self {
        let mut text = format!("# bell-lab {} command={}", env!("CARGO_PKG_VERSION"), command);
        for (k, v) in params {
            let _ = write!(text, " {k}={v}");
        }
        match seed {
            Some(s) => {
                let _ = write!(text, " seed={s} rng={RNG_ALGORITHM}");
            }
            None => text.push_str(" seed=none"),
        }
        text.push('\n');
        text.push_str(&header.join(","));
        text.push('\n');
        Csv { text }
    }

    fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }
}

fn g(x: f64) -> String {
    fmt_g17(x)
}

fn degrees(name: &str, d: f64) -> Result<Angle, Failure> {
    Angle::try_degrees(d).map_err(|_| Failure::validation(format!("{name} must be a finite angle in degrees")))
}

fn required(name: &str, v: Option<f64>) -> Result<f64, Failure> {
    v.ok_or_else(|| Failure::validation(format!("--{name} is required")))
}

fn chsh_cmd(args: &ChshArgs) -> Result<String, Failure> {
    if let Some(ChshScan::Scan { step, kind }) = args.scan {
        let kind = SetupKind::from(kind);
        let best = tsirelson_scan(kind, degrees("step", step)?)?;
        let st = best.settings;
        let mut csv = Csv::new(
            "chsh scan",
            &[("step", g(step)), ("kind", kind.name().into())],
            None,
            &["best_alpha", "best_alpha_prime", "best_beta", "best_beta_prime", "s_max"],
        );
        csv.row(&[g(st.alpha.deg()), g(st.alpha_prime.deg()), g(st.beta.deg()), g(st.beta_prime.deg()), g(best.s)]);
        return Ok(csv.text);
    }
    let kind = SetupKind::from(args.kind);
    let a = required("alpha", args.alpha)?;
    let ap = required("alpha-prime", args.alpha_prime)?;
    let b = required("beta", args.beta)?;
    let bp = required("beta-prime", args.beta_prime)?;
    let settings = ChshSettings::new(
        degrees("alpha", a)?,
        degrees("alpha-prime", ap)?,
        degrees("beta", b)?,
        degrees("beta-prime", bp)?,
        kind,
    );
    let value = chsh_value(&reference_state(kind), &settings)?;
    let mut csv = Csv::new(
        "chsh",
        &[("alpha", g(a)), ("alpha_prime", g(ap)), ("beta", g(b)), ("beta_prime", g(bp)), ("kind", kind.name().into())],
        None,
        &["alpha", "alpha_prime", "beta", "beta_prime", "kind", "s"],
    );
    csv.row(&[g(a), g(ap), g(b), g(bp), kind.name().into(), g(value.s)]);
    Ok(csv.text)
}

/// Worst identity residual over `trials` settings drawn uniformly from [0, 2π)⁴.
pub fn identity_max_residual(kind: SetupKind, trials: u64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || Angle::radians(rng.random_range(0.0..std::f64::consts::TAU));
    (0..trials)
        .map(|_| identity_residual(&ChshSettings::new(draw(), draw(), draw(), draw(), kind)))
        .fold(0.0, f64::max)
}

fn identity_cmd(args: &IdentityArgs) -> Report {
    if args.trials == 0 {
        return Report::failed(Failure::validation("--trials must be at least 1"));
    }
    let kind = SetupKind::from(args.kind);
    let worst = identity_max_residual(kind, args.trials, args.seed);
    let mut csv = Csv::new(
        "identity",
        &[("kind", kind.name().into()), ("trials", args.trials.to_string())],
        Some(args.seed),
        &["trials", "max_residual"],
    );
    csv.row(&[args.trials.to_string(), g(worst)]);
    let failure = (worst.is_nan() || worst >= IDENTITY_TOL)
        .then(|| Failure::numerical(format!("identity residual {worst:e} exceeds {IDENTITY_TOL:e}")));
    Report { csv: Some(csv.text), failure }
}

fn mermin_cmd(args: &MerminArgs) -> Result<String, Failure> {
    let plane = MeasurementPlane::from(args.plane);
    let state = ghz(args.n)?;
    let det = mermin_deterministic_max(args.n)?;
    let plane_name = match args.plane {
        PlaneArg::Xy => "xy",
        PlaneArg::Zy => "zy",
    };
    let (value, params) = if args.scan {
        let scan = mermin_scan(args.n, degrees("step", args.step)?, plane)?;
        (scan.value, vec![("n", args.n.to_string()), ("scan", "true".into()), ("step", g(args.step)), ("plane", plane_name.into())])
    } else {
        let settings = MerminSettings::shared(args.n, degrees("alpha", args.alpha)?, degrees("alpha-prime", args.alpha_prime)?, plane)?;
        (
            mermin_value_fast(&state, &settings)?,
            vec![
                ("n", args.n.to_string()),
                ("alpha", g(args.alpha)),
                ("alpha_prime", g(args.alpha_prime)),
                ("plane", plane_name.into()),
            ],
        )
    };
    let mut csv = Csv::new("mermin", &params, None, &["n", "f_value_or_max", "deterministic_max"]);
    csv.row(&[args.n.to_string(), g(value), g(det)]);
    Ok(csv.text)
}

fn lhv_cmd(args: &LhvArgs) -> Result<String, Failure> {
    if args.enumerate {
        let mut csv = Csv::new("lhv", &[("enumerate", "true".into())], None, &["max_s"]);
        csv.row(&[g(chsh_deterministic_max())]);
        return Ok(csv.text);
    }
    let (Some(ModelArg::Sign), Some(samples), Some(seed)) = (args.model, args.samples, args.seed) else {
        return Err(Failure::validation("--model, --samples and --seed are required unless --enumerate"));
    };
    let [a, ap, b, bp] = args.angles[..] else {
        return Err(Failure::validation("--angles takes exactly four values"));
    };
    let settings = ChshSettings::new(
        degrees("angles", a)?,
        degrees("angles", ap)?,
        degrees("angles", b)?,
        degrees("angles", bp)?,
        SetupKind::SpinHalf,
    );
    let est = simulate_chsh(&SignModel, &settings, samples, seed)?;
    let angles = [a, ap, b, bp].map(g).join(";");
    let mut csv = Csv::new(
        "lhv",
        &[("model", "sign".into()), ("samples", samples.to_string()), ("angles", angles)],
        Some(seed),
        &["s_estimate", "stderr"],
    );
    csv.row(&[g(est.s), g(est.stderr)]);
    Ok(csv.text)
}

fn oumandel_cmd(args: &OuMandelArgs) -> Result<String, Failure> {
    let bs = BeamSplitterSpec::lossless(args.tx, args.ty)?;
    let state = ou_mandel_state(&bs);
    let points: Vec<(f64, f64)> = match args.grid {
        Some(n) if n < 2 => return Err(Failure::validation("--grid needs at least 2 points")),
        Some(n) => {
            let axis: Vec<f64> = (0..n).map(|i| 180.0 * i as f64 / (n - 1) as f64).collect();
            axis.iter().flat_map(|&t1| axis.iter().map(move |&t2| (t1, t2))).collect()
        }
        None => vec![(required("theta1", args.theta1)?, required("theta2", args.theta2)?)],
    };
    let mut params = vec![("tx", g(args.tx)), ("ty", g(args.ty))];
    match args.grid {
        Some(n) => params.push(("grid", n.to_string())),
        None => {
            params.push(("theta1", g(points[0].0)));
            params.push(("theta2", g(points[0].1)));
        }
    }
    if args.correlation {
        params.push(("correlation", "true".into()));
        let mut csv = Csv::new("oumandel", &params, None, &["theta1", "theta2", "e_value"]);
        for &(t1, t2) in &points {
            let e = coincidence_correlation(&state, degrees("theta1", t1)?, degrees("theta2", t2)?)?;
            csv.row(&[g(t1), g(t2), g(e)]);
        }
        return Ok(csv.text);
    }
    let mut csv = Csv::new("oumandel", &params, None, &["theta1", "theta2", "p_numeric", "p_closed_form", "abs_diff"]);
    for &(t1, t2) in &points {
        let (a1, a2) = (degrees("theta1", t1)?, degrees("theta2", t2)?);
        let p = coincidence_probability(&state, a1, a2);
        let closed = coincidence_closed_form(&bs, a1, a2);
        csv.row(&[g(t1), g(t2), g(p), g(closed), g((p - closed).abs())]);
    }
    Ok(csv.text)
}

fn dbb_cmd(args: &DbbArgs) -> Report {
    let setup = || -> Result<(PhysicalConstants, TwoParticleWF), Failure> {
        let c = PhysicalConstants::new(args.hbar, args.mass, 1.0)?;
        let a = WavePacket::new(args.center_a, args.width_a, args.k_a, 0.0)?;
        let b = WavePacket::new(args.center_b, args.width_b, args.k_b, 0.0)?;
        Ok((c, TwoParticleWF::new(a, b, args.form.into(), &c)?))
    };
    let (c, wf) = match setup() {
        Ok(v) => v,
        Err(f) => return Report::failed(f),
    };
    let mut params = vec![
        ("form", wf.form().name().to_string()),
        ("hbar", g(args.hbar)),
        ("mass", g(args.mass)),
        ("center_a", g(args.center_a)),
        ("width_a", g(args.width_a)),
        ("k_a", g(args.k_a)),
        ("center_b", g(args.center_b)),
        ("width_b", g(args.width_b)),
        ("k_b", g(args.k_b)),
    ];
    if let Some(n) = args.grid {
        if n < 2 {
            return Report::failed(Failure::validation("--grid needs at least 2 points"));
        }
        if !(args.x_min.is_finite() && args.x_max.is_finite() && args.x_max > args.x_min) {
            return Report::failed(Failure::validation("need finite --x-min < --x-max"));
        }
        if !(args.t.is_finite() && args.t >= 0.0) {
            return Report::failed(Failure::validation("--t must be non-negative"));
        }
        params.extend([("t", g(args.t)), ("grid", n.to_string()), ("x_min", g(args.x_min)), ("x_max", g(args.x_max))]);
        let mut csv = Csv::new("dbb", &params, None, &["x1", "x2", "v1", "v2", "cross_coupling"]);
        let x = |i: usize| args.x_min + (args.x_max - args.x_min) * i as f64 / (n - 1) as f64;
        for i in 0..n {
            for j in 0..n {
                let (x1, x2) = (x(i), x(j));
                // nodes are reported as NaN rather than aborting the sweep
                let (v1, v2) = velocity_2p(&wf, &c, x1, x2, args.t).unwrap_or((f64::NAN, f64::NAN));
                let k = cross_coupling(&wf, &c, x1, x2, args.t).unwrap_or(f64::NAN);
                csv.row(&[g(x1), g(x2), g(v1), g(v2), g(k)]);
            }
        }
        return Report::ok(csv.text);
    }
    params.extend([
        ("trajectory", "true".into()),
        ("x1", g(args.x1)),
        ("x2", g(args.x2)),
        ("t0", g(args.t0)),
        ("t1", g(args.t1)),
        ("dt", g(args.dt)),
    ]);
    let (traj, failure) = match integrate_trajectory_2p(&wf, &c, (args.x1, args.x2), args.t0, args.t1, args.dt) {
        Ok(t) => (t, None),
        Err(h) if h.partial.times.is_empty() => return Report::failed(h.error),
        Err(h) => (h.partial, Some(Failure::from(h.error))),
    };
    let mut csv = Csv::new("dbb", &params, None, &["t", "x1", "x2"]);
    for (t, x) in traj.times.iter().zip(&traj.positions) {
        csv.row(&[g(*t), g(x[0]), g(x[1])]);
    }
    Report { csv: Some(csv.text), failure }
}

fn spin_cmd(args: &SpinArgs) -> Result<String, Failure> {
    if args.steps == 0 {
        return Err(Failure::validation("--steps must be at least 1"));
    }
    if !(args.dt.is_finite() && args.dt > 0.0) {
        return Err(Failure::validation("--dt must be positive"));
    }
    let c = PhysicalConstants::new(1.0, 1.0, args.gyro)?;
    let s0 = SpinState::new([args.sx, args.sy, args.sz])?;
    let b = [args.bx, args.by, args.bz];
    let hist = integrate_spin(&s0, &b, &c, args.steps as f64 * args.dt, args.dt)?;
    let params = [
        ("bx", g(args.bx)),
        ("by", g(args.by)),
        ("bz", g(args.bz)),
        ("gyro", g(args.gyro)),
        ("steps", args.steps.to_string()),
        ("dt", g(args.dt)),
        ("s0", [args.sx, args.sy, args.sz].map(g).join(";")),
    ];
    let mut csv = Csv::new("spin", &params, None, &["t", "sx", "sy", "sz", "norm_drift"]);
    let n0 = s0.norm();
    for (t, s) in hist.times.iter().zip(&hist.states) {
        let v = s.vector();
        csv.row(&[g(*t), g(v[0]), g(v[1]), g(v[2]), g(s.norm() - n0)]);
    }
    Ok(csv.text)
}

fn from_result(r: Result<String, Failure>) -> Report {
    match r {
        Ok(csv) => Report::ok(csv),
        Err(f) => Report::failed(f),
    }
}

pub fn run(cli: &Cli) -> Report {
    match &cli.command {
        Command::Chsh(a) => from_result(chsh_cmd(a)),
        Command::Identity(a) => identity_cmd(a),
        Command::Mermin(a) => from_result(mermin_cmd(a)),
        Command::Lhv(a) => from_result(lhv_cmd(a)),
        Command::Oumandel(a) => from_result(oumandel_cmd(a)),
        Command::Dbb(a) => dbb_cmd(a),
        Command::Spin(a) => from_result(spin_cmd(a)),
    }
}

/// Parse, run, write output and return the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return EXIT_OK;
        }
        Err(e) => {
            let msg = e.to_string();
            let detail: Vec<&str> = msg
                .lines()
                .take_while(|l| !l.starts_with("Usage:"))
                .map(|l| l.trim().trim_start_matches("error: "))
                .filter(|l| !l.is_empty())
                .collect();
            eprintln!("{}", Failure::validation(detail.join(" ")).record());
            return EXIT_VALIDATION;
        }
    };
    let report = run(&cli);
    if let Some(csv) = &report.csv {
        let written = match &cli.out {
            Some(path) => std::fs::write(path, csv).map_err(|e| format!("cannot write {}: {e}", path.display())),
            None => {
                use std::io::Write;
                std::io::stdout().lock().write_all(csv.as_bytes()).map_err(|e| format!("cannot write stdout: {e}"))
            }
        };
        if let Err(detail) = written {
            eprintln!("{}", Failure::validation(detail).record());
            return EXIT_VALIDATION;
        }
    }
    match report.failure {
        Some(f) => {
            eprintln!("{}", f.record());
            f.code
        }
        None => EXIT_OK,
    }
}
