//! Commuting hidden-variable baselines.
//!
//! Every model here assigns all four CHSH outcomes (or all 2n Mermin
//! outcomes) from one hidden value, which is what bounds |S| by 2.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chsh::ChshSettings;
use crate::error::{invalid, Result};
use crate::operator::Angle;

/// Identifier of the pseudorandom generator recorded in output metadata.
pub const RNG_ALGORITHM: &str = "chacha8";
pub const MAX_MERMIN_PARTICLES: usize = 12;

/// A dichotomic outcome, exactly ±1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Minus, Outcome::Plus];

    pub fn value(self) -> i64 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    /// sign(x) with sign(0) = +1.
    pub fn sign_of(x: f64) -> Outcome {
        if x >= 0.0 {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }

    pub fn flip(self) -> Outcome {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }
}

/// Simultaneous values for all four CHSH observables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DeterministicStrategy {
    pub a: Outcome,
    pub a_prime: Outcome,
    pub b: Outcome,
    pub b_prime: Outcome,
}

impl DeterministicStrategy {
    pub fn all() -> impl Iterator<Item = DeterministicStrategy> {
        Outcome::BOTH.into_iter().flat_map(|a| {
            Outcome::BOTH.into_iter().flat_map(move |a_prime| {
                Outcome::BOTH.into_iter().flat_map(move |b| {
                    Outcome::BOTH
                        .into_iter()
                        .map(move |b_prime| DeterministicStrategy { a, a_prime, b, b_prime })
                })
            })
        })
    }

    /// ab + a′b + ab′ − a′b′ = (a + a′)b + (a − a′)b′ ∈ {−2, 2}
    pub fn chsh_combination(&self) -> i64 {
        let (a, ap, b, bp) = (self.a.value(), self.a_prime.value(), self.b.value(), self.b_prime.value());
        a * b + ap * b + a * bp - ap * bp
    }
}

pub fn chsh_deterministic_max() -> f64 {
    DeterministicStrategy::all()
        .map(|s| s.chsh_combination())
        .max()
        .expect("16 strategies") as f64
}

pub fn chsh_deterministic_min() -> f64 {
    DeterministicStrategy::all()
        .map(|s| s.chsh_combination())
        .min()
        .expect("16 strategies") as f64
}

/// Gaussian-integer product Π(a_j + i a′_j), depth-first over all 4ⁿ assignments.
fn mermin_extremes(depth: usize, re: i64, im: i64, best: &mut i64) {
    if depth == 0 {
        *best = (*best).max(im);
        return;
    }
    for a in [-1i64, 1] {
        for ap in [-1i64, 1] {
            mermin_extremes(depth - 1, re * a - im * ap, re * ap + im * a, best);
        }
    }
}

/// max over ±1 assignments of Im Π_j (a_j + i a′_j), exact integer arithmetic.
pub fn mermin_deterministic_max(n: usize) -> Result<f64> {
    if !(1..=MAX_MERMIN_PARTICLES).contains(&n) {
        return Err(invalid(format!(
            "Mermin enumeration supports 1..={MAX_MERMIN_PARTICLES} particles, got {n}"
        )));
    }
    let mut best = i64::MIN;
    mermin_extremes(n, 1, 0, &mut best);
    Ok(best as f64)
}

/// Local response model: one hidden value per pair, each side's outcome a
/// function of its own setting and that value only.
pub trait HiddenVariableModel {
    type Lambda;

    fn name(&self) -> &'static str;
    fn sample(&self, rng: &mut ChaCha8Rng) -> Self::Lambda;
    fn alice(&self, setting: Angle, lambda: &Self::Lambda) -> Outcome;
    fn bob(&self, setting: Angle, lambda: &Self::Lambda) -> Outcome;

    /// All four outcomes read off the same hidden value.
    fn strategy(&self, settings: &ChshSettings, lambda: &Self::Lambda) -> DeterministicStrategy {
        DeterministicStrategy {
            a: self.alice(settings.alpha, lambda),
            a_prime: self.alice(settings.alpha_prime, lambda),
            b: self.bob(settings.beta, lambda),
            b_prime: self.bob(settings.beta_prime, lambda),
        }
    }
}

/// λ uniform on the circle; Alice answers sign cos(α − λ), Bob the negated
/// sign cos(β − λ). Its correlation is the saw-tooth −1 + 2|α − β|/π.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SignModel;

impl HiddenVariableModel for SignModel {
    type Lambda = f64;

    fn name(&self) -> &'static str {
        "sign"
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        rng.random_range(0.0..2.0 * PI)
    }

    fn alice(&self, setting: Angle, lambda: &f64) -> Outcome {
        Outcome::sign_of((setting.rad() - lambda).cos())
    }

    fn bob(&self, setting: Angle, lambda: &f64) -> Outcome {
        Outcome::sign_of((setting.rad() - lambda).cos()).flip()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonteCarloEstimate {
    pub s: f64,
    /// Standard error of the mean; NaN for a single sample.
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
}

/// Monte Carlo estimate of S, all four correlations evaluated on each λ.
pub fn simulate_chsh<M: HiddenVariableModel>(
    model: &M,
    settings: &ChshSettings,
    samples: u64,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if samples == 0 {
        return Err(invalid("at least one sample is required"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0i64;
    for _ in 0..samples {
        let lambda = model.sample(&mut rng);
        let value = model.strategy(settings, &lambda).chsh_combination();
        assert!(value == 2 || value == -2, "per-λ CHSH combination {value}");
        sum += value;
    }
    let n = samples as f64;
    let mean = sum as f64 / n;
    // every term is ±2, so Σx² = 4n
    let stderr = if samples > 1 {
        let var = (4.0 * n - n * mean * mean) / (n - 1.0);
        (var.max(0.0) / n).sqrt()
    } else {
        f64::NAN
    };
    Ok(MonteCarloEstimate {
        s: mean,
        stderr,
        samples,
        seed,
    })
}

/// Monte Carlo estimate of a single correlation ⟨AB⟩.
pub fn simulate_correlation<M: HiddenVariableModel>(
    model: &M,
    alpha: Angle,
    beta: Angle,
    samples: u64,
    seed: u64,
) -> Result<f64> {
    if samples == 0 {
        return Err(invalid("at least one sample is required"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sum: i64 = (0..samples)
        .map(|_| {
            let l = model.sample(&mut rng);
            model.alice(alpha, &l).value() * model.bob(beta, &l).value()
        })
        .sum();
    Ok(sum as f64 / samples as f64)
}
