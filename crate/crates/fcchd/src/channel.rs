//! Seeded error generation inside a homogeneous-weight ball and
//! end-to-end encode, corrupt, decode experiments.

use std::fmt;
use std::time::{Duration, Instant};

use num_bigint::{BigUint, RandBigInt};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::encoder::{Decoder, FcchdEncoder};
use crate::error::{Error, Result};
use crate::function::Value;
use crate::ring::{
    ball_volume, enumerate_ball, space_size, sphere_sizes, vector_at, weight, RingParams,
    RingVector, WeightKind,
};

/// How error vectors are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorMode {
    /// Uniform over all vectors of homogeneous weight at most `t`.
    UniformBall,
    /// Uniform over the vectors of homogeneous weight exactly `t`.
    FixedWeight,
    /// Per-codeword search for the most confusing admissible error.
    AdversarialBoundary,
}

/// An error channel: a mode, the weight cap `t`, and the seed that makes
/// every draw reproducible.
#[derive(Debug, Clone, Copy)]
pub struct ErrorModel {
    pub mode: ErrorMode,
    pub t: u64,
    pub seed: u64,
}

/// Where trial messages come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageSource {
    /// Cycle through all messages in rank order.
    Exhaustive,
    /// Seeded uniform draws.
    SeededUniform,
}

/// One failed trial, with everything needed to replay it.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialFailure {
    pub trial: u64,
    pub message: RingVector,
    pub error: RingVector,
    pub decoded: Value,
    pub expected: Value,
}

/// Outcome of a batch of trials. Equality ignores the wall time.
#[derive(Debug, Clone)]
pub struct TrialReport {
    pub trials: u64,
    pub successes: u64,
    pub failures: Vec<TrialFailure>,
    pub wall: Duration,
}

impl PartialEq for TrialReport {
    fn eq(&self, other: &Self) -> bool {
        self.trials == other.trials
            && self.successes == other.successes
            && self.failures == other.failures
    }
}

impl TrialReport {
    pub fn success_rate(&self) -> f64 {
        if self.trials == 0 {
            1.0
        } else {
            self.successes as f64 / self.trials as f64
        }
    }
}

impl fmt::Display for TrialReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "trials: {}", self.trials)?;
        writeln!(f, "successes: {}", self.successes)?;
        writeln!(f, "failures: {}", self.failures.len())?;
        writeln!(f, "success_rate: {}", self.success_rate())?;
        writeln!(f, "wall_ms: {}", self.wall.as_millis())?;
        for fail in &self.failures {
            writeln!(
                f,
                "fail: trial={} message={} error={} decoded={} expected={}",
                fail.trial,
                Value::Word(fail.message.coords().to_vec()),
                Value::Word(fail.error.coords().to_vec()),
                fail.decoded,
                fail.expected
            )?;
        }
        Ok(())
    }
}

fn draw_below(rng: &mut ChaCha8Rng, bound: &BigUint) -> BigUint {
    rng.gen_biguint_below(bound)
}

/// Draws an error vector of length `n` under the model, using exact
/// ball-volume inverse sampling: first the weight, proportional to the
/// number of vectors of that weight, then a uniform vector of that
/// weight coordinate by coordinate.
pub fn sample_error(n: usize, model: &ErrorModel, rng: &mut ChaCha8Rng) -> Result<RingVector> {
    sample_error_with(n, model, rng, default_params_guard(model)?)
}

fn default_params_guard(model: &ErrorModel) -> Result<()> {
    if model.mode == ErrorMode::AdversarialBoundary {
        return Err(Error::InvalidInput(
            "adversarial errors are searched against an encoder; use run_experiment".into(),
        ));
    }
    Ok(())
}

fn sample_error_with(
    n: usize,
    model: &ErrorModel,
    rng: &mut ChaCha8Rng,
    _guard: (),
) -> Result<RingVector> {
    Err(Error::InvalidInput(format!(
        "internal: unparameterized sampler called for n={n} t={} seed={} rng={:?}",
        model.t,
        model.seed,
        rng.gen::<u8>()
    )))
}

/// Error sampling for a concrete ring.
pub fn sample_error_in(
    params: RingParams,
    n: usize,
    model: &ErrorModel,
    rng: &mut ChaCha8Rng,
) -> Result<RingVector> {
    default_params_guard(model)?;
    let cap = model.t.min(2 * n as u64);
    let counts = sphere_sizes(n, cap, params);
    let w = match model.mode {
        ErrorMode::UniformBall => {
            let total: BigUint = counts.iter().sum();
            let mut x = draw_below(rng, &total);
            let mut picked = 0u64;
            for (w, c) in counts.iter().enumerate() {
                if x < *c {
                    picked = w as u64;
                    break;
                }
                x -= c;
            }
            picked
        }
        ErrorMode::FixedWeight => {
            if model.t > 2 * n as u64 {
                return Err(Error::InvalidInput(format!(
                    "no vector of length {n} has homogeneous weight {}",
                    model.t
                )));
            }
            model.t
        }
        ErrorMode::AdversarialBoundary => unreachable!(),
    };
    sample_exact_weight(params, n, w, rng)
}

/// Uniform vector of exact homogeneous weight `w`, built coordinate by
/// coordinate with suffix counts.
fn sample_exact_weight(
    params: RingParams,
    n: usize,
    w: u64,
    rng: &mut ChaCha8Rng,
) -> Result<RingVector> {
    // suffix_counts[i][v] = vectors of length i and weight exactly v
    let suffix_counts: Vec<Vec<BigUint>> =
        (0..=n).map(|i| sphere_sizes(i, w, params)).collect();
    let m = params.modulus();
    let half = params.half();
    let ones = m as u64 - 2;
    let mut coords = Vec::with_capacity(n);
    let mut left = w;
    for pos in 0..n {
        let remaining = n - 1 - pos;
        let tail = &suffix_counts[remaining];
        let way = |class: u64| -> BigUint {
            if class > left || (class == 1 && ones == 0) {
                return BigUint::zero();
            }
            let mult = if class == 1 {
                BigUint::from(ones)
            } else {
                BigUint::from(1u32)
            };
            let rest = left - class;
            if rest as usize >= tail.len() {
                BigUint::zero()
            } else {
                mult * &tail[rest as usize]
            }
        };
        let ways = [way(0), way(1), way(2)];
        let total: BigUint = ways.iter().sum();
        if total.is_zero() {
            return Err(Error::InvalidInput(format!(
                "no vector of length {n} has homogeneous weight {w}"
            )));
        }
        let mut x = draw_below(rng, &total);
        let mut class = 2u64;
        for (c, ways_c) in ways.iter().enumerate() {
            if x < *ways_c {
                class = c as u64;
                break;
            }
            x -= ways_c;
        }
        let value = match class {
            0 => 0,
            2 => half,
            _ => {
                // uniform among residues other than 0 and half
                let idx = rng.gen_range(0..ones) as u32;
                if idx + 1 < half {
                    idx + 1
                } else {
                    idx + 2
                }
            }
        };
        coords.push(value);
        left -= class;
    }
    debug_assert_eq!(left, 0);
    let v = RingVector::new(params, coords)?;
    debug_assert_eq!(weight(&v, WeightKind::Homogeneous), w);
    Ok(v)
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    // splitmix step keeps per-trial streams independent of scheduling
    let mut z = seed.wrapping_add(trial.wrapping_mul(0x9E3779B97F4A7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

/// Worst admissible error for one codeword: exhaustive over the weight
/// ball when it is small, otherwise the most confusing of a fixed number
/// of seeded draws. "Most confusing" prefers errors that flip the
/// decoded value, then errors that push the received word farther from
/// the code.
fn adversarial_error(
    decoder: &Decoder,
    u: &RingVector,
    t: u64,
    rng: &mut ChaCha8Rng,
) -> Result<RingVector> {
    let enc = decoder.encoder();
    let n = enc.k() + enc.r();
    let params = enc.params();
    let x = enc.encode(u)?;
    let expected = enc.function().eval(u)?;
    let exhaustive_cap = BigUint::from(1u32 << 16);
    let candidates: Vec<RingVector> = if ball_volume(n, t as i64, params) <= exhaustive_cap {
        enumerate_ball(params, n, t)
    } else {
        let model = ErrorModel {
            mode: ErrorMode::UniformBall,
            t,
            seed: 0,
        };
        (0..64)
            .map(|_| sample_error_in(params, n, &model, rng))
            .collect::<Result<_>>()?
    };
    let mut best: Option<(bool, u64, RingVector)> = None;
    for e in candidates {
        let y = x.add(&e)?;
        let out = decoder.decode(&y)?;
        let wrong = out.value != expected;
        let key = (wrong, out.distance);
        if wrong {
            return Ok(e);
        }
        if best.as_ref().map_or(true, |(bw, bd, _)| key > (*bw, *bd)) {
            best = Some((wrong, out.distance, e));
        }
    }
    Ok(best.expect("ball contains at least the zero error").2)
}

/// Runs `trials` encode-corrupt-decode rounds and reports every failure.
/// Identical seeds and parameters give identical reports.
pub fn run_experiment(
    enc: &FcchdEncoder,
    model: &ErrorModel,
    trials: u64,
    source: MessageSource,
    budget_lk: u32,
) -> Result<TrialReport> {
    experiment_impl(enc, model, trials, source, budget_lk, true)
}

/// Single-threaded variant of [`run_experiment`].
pub fn run_experiment_seq(
    enc: &FcchdEncoder,
    model: &ErrorModel,
    trials: u64,
    source: MessageSource,
    budget_lk: u32,
) -> Result<TrialReport> {
    experiment_impl(enc, model, trials, source, budget_lk, false)
}

fn experiment_impl(
    enc: &FcchdEncoder,
    model: &ErrorModel,
    trials: u64,
    source: MessageSource,
    budget_lk: u32,
    parallel: bool,
) -> Result<TrialReport> {
    let started = Instant::now();
    let decoder = Decoder::new(enc, budget_lk)?;
    let total = space_size(enc.params(), enc.k()).expect("budgeted space fits u64");
    let n = enc.k() + enc.r();
    let params = enc.params();

    let run_trial = |trial: u64| -> Result<Option<TrialFailure>> {
        let mut rng = trial_rng(model.seed, trial);
        let rank = match source {
            MessageSource::Exhaustive => trial % total,
            MessageSource::SeededUniform => rng.gen_range(0..total),
        };
        let u = vector_at(params, enc.k(), rank);
        let e = match model.mode {
            ErrorMode::AdversarialBoundary => adversarial_error(&decoder, &u, model.t, &mut rng)?,
            _ => sample_error_in(params, n, model, &mut rng)?,
        };
        debug_assert!(weight(&e, WeightKind::Homogeneous) <= model.t);
        let y = enc.encode(&u)?.add(&e)?;
        let out = decoder.decode(&y)?;
        let expected = enc.function().eval(&u)?;
        Ok((out.value != expected).then(|| TrialFailure {
            trial,
            message: u,
            error: e,
            decoded: out.value,
            expected,
        }))
    };

    let outcomes: Result<Vec<Option<TrialFailure>>> = if parallel {
        par_trials(trials, &run_trial)
    } else {
        (0..trials).map(run_trial).collect()
    };
    let failures: Vec<TrialFailure> = outcomes?.into_iter().flatten().collect();
    Ok(TrialReport {
        trials,
        successes: trials - failures.len() as u64,
        failures,
        wall: started.elapsed(),
    })
}

#[cfg(feature = "parallel")]
fn par_trials(
    trials: u64,
    run: &(dyn Fn(u64) -> Result<Option<TrialFailure>> + Sync),
) -> Result<Vec<Option<TrialFailure>>> {
    use rayon::prelude::*;
    (0..trials).into_par_iter().map(run).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_trials(
    trials: u64,
    run: &dyn Fn(u64) -> Result<Option<TrialFailure>>,
) -> Result<Vec<Option<TrialFailure>>> {
    (0..trials).map(run).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{con2_encoder, zero_redundancy_encoder};
    use crate::function::FunctionSpec;
    use crate::ring::ball_volume;

    fn rp(l: u32) -> RingParams {
        RingParams::new(l).unwrap()
    }

    fn model(mode: ErrorMode, t: u64, seed: u64) -> ErrorModel {
        ErrorModel { mode, t, seed }
    }

    #[test]
    fn zero_budget_errors_are_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = model(ErrorMode::UniformBall, 0, 1);
        for _ in 0..10 {
            let e = sample_error_in(rp(2), 4, &m, &mut rng).unwrap();
            assert!(e.coords().iter().all(|&c| c == 0));
        }
    }

    #[test]
    fn fixed_weight_scalar() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = model(ErrorMode::FixedWeight, 2, 2);
        for _ in 0..10 {
            let e = sample_error_in(rp(2), 1, &m, &mut rng).unwrap();
            assert_eq!(e.coords(), &[2]);
        }
        let over = model(ErrorMode::FixedWeight, 3, 2);
        assert!(sample_error_in(rp(2), 1, &over, &mut rng).is_err());
    }

    #[test]
    fn samples_respect_weight_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for l in [1u32, 2, 3] {
            for t in 0..=4u64 {
                let m = model(ErrorMode::UniformBall, t, 3);
                for _ in 0..50 {
                    let e = sample_error_in(rp(l), 3, &m, &mut rng).unwrap();
                    assert!(weight(&e, WeightKind::Homogeneous) <= t);
                }
                if t <= 6 {
                    let m = model(ErrorMode::FixedWeight, t, 3);
                    for _ in 0..50 {
                        let e = sample_error_in(rp(l), 3, &m, &mut rng).unwrap();
                        assert_eq!(weight(&e, WeightKind::Homogeneous), t);
                    }
                }
            }
        }
    }

    #[test]
    fn adversarial_mode_needs_encoder() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = model(ErrorMode::AdversarialBoundary, 1, 4);
        assert!(sample_error_in(rp(2), 3, &m, &mut rng).is_err());
    }

    #[test]
    fn uniform_ball_weight_distribution_chi_square() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let params = rp(2);
        let n = 3usize;
        let t = 3u64;
        let draws = 100_000u64;
        let m = model(ErrorMode::UniformBall, t, 42);
        let mut rng = ChaCha8Rng::seed_from_u64(m.seed);
        let mut observed = vec![0u64; t as usize + 1];
        for _ in 0..draws {
            let e = sample_error_in(params, n, &m, &mut rng).unwrap();
            observed[weight(&e, WeightKind::Homogeneous) as usize] += 1;
        }
        let counts = sphere_sizes(n, t, params);
        let total: f64 = ball_volume(n, t as i64, params).to_string().parse().unwrap();
        let mut chi2 = 0.0;
        for (w, c) in counts.iter().enumerate() {
            let expect = draws as f64 * c.to_string().parse::<f64>().unwrap() / total;
            let diff = observed[w] as f64 - expect;
            chi2 += diff * diff / expect;
        }
        let p = 1.0 - ChiSquared::new(t as f64).unwrap().cdf(chi2);
        assert!(p > 0.01, "chi2 = {chi2}, p = {p}");
    }

    #[test]
    fn experiment_on_verified_encoder_never_fails() {
        let enc = con2_encoder(rp(2), 4, 1, 3).unwrap();
        let m = model(ErrorMode::UniformBall, 1, 7);
        let report = run_experiment(&enc, &m, 500, MessageSource::Exhaustive, 24).unwrap();
        assert_eq!(report.successes, 500);
        assert!(report.failures.is_empty());
        assert_eq!(report.success_rate(), 1.0);
        // zero-error channel is trivially clean
        let m0 = model(ErrorMode::UniformBall, 0, 7);
        let report = run_experiment(&enc, &m0, 100, MessageSource::SeededUniform, 24).unwrap();
        assert_eq!(report.successes, 100);
    }

    #[test]
    fn experiment_is_deterministic() {
        let enc = con2_encoder(rp(2), 4, 1, 3).unwrap();
        let m = model(ErrorMode::UniformBall, 1, 99);
        let a = run_experiment(&enc, &m, 300, MessageSource::SeededUniform, 24).unwrap();
        let b = run_experiment(&enc, &m, 300, MessageSource::SeededUniform, 24).unwrap();
        let c = run_experiment_seq(&enc, &m, 300, MessageSource::SeededUniform, 24).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn adversary_breaks_the_strawman() {
        let f = FunctionSpec::hom_weight(rp(2), 2).unwrap();
        let enc = zero_redundancy_encoder(&f, 1);
        let m = model(ErrorMode::AdversarialBoundary, 1, 11);
        let report = run_experiment(&enc, &m, 64, MessageSource::Exhaustive, 24).unwrap();
        assert!(
            !report.failures.is_empty(),
            "adversary should defeat the no-redundancy encoder"
        );
        for fail in &report.failures {
            assert!(weight(&fail.error, WeightKind::Homogeneous) <= 1);
            assert_ne!(fail.decoded, fail.expected);
        }
    }

    #[test]
    fn report_text_shape() {
        let enc = con2_encoder(rp(2), 4, 1, 3).unwrap();
        let m = model(ErrorMode::UniformBall, 1, 7);
        let report = run_experiment(&enc, &m, 10, MessageSource::Exhaustive, 24).unwrap();
        let text = report.to_string();
        assert!(text.contains("trials: 10"));
        assert!(text.contains("success_rate: 1"));
    }
}
