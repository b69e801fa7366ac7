//! Systematic encoders `u -> (u, p(u))` protecting a function value
//! against homogeneous-weight errors, their exhaustive verifier, and the
//! nearest-neighbor function-value decoder.

use crate::error::{Error, Result};
use crate::function::{check_enum_budget, FunctionKind, FunctionSpec, Value};
use crate::matrix::function_distance_matrix;
use crate::ring::{
    hom_distance_at_least, hom_distance_slices, vector_at, vector_rank, weight, RingParams,
    RingVector, WeightKind,
};
use crate::search::{equal_distance_code, verify_irregular_code, IrregularCode};

/// Shifted modulo: maps `a >= 1` into `1..=b` with period `b`.
pub fn smod(a: u64, b: u64) -> Result<u64> {
    if a < 1 || b < 1 {
        return Err(Error::InvalidInput(format!(
            "smod needs a >= 1 and b >= 1, got a={a} b={b}"
        )));
    }
    Ok((a - 1) % b + 1)
}

/// Which construction produced an encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncoderKind {
    Con1,
    Con2,
    LocBin,
    Generic,
    Custom,
}

impl EncoderKind {
    pub fn tag(&self) -> &'static str {
        match self {
            EncoderKind::Con1 => "con1",
            EncoderKind::Con2 => "con2",
            EncoderKind::LocBin => "locbin",
            EncoderKind::Generic => "generic",
            EncoderKind::Custom => "custom",
        }
    }
}

/// How the redundancy vector is derived from a message.
#[derive(Debug, Clone)]
pub enum EncoderRule {
    /// Indexed by the message's homogeneous weight, periodically.
    WeightTable {
        words: Vec<RingVector>,
        period: usize,
    },
    /// One word per image position, indexed by the function value.
    ValueIndex { words: Vec<RingVector> },
    /// A 0/1 flag per message rank, repeated `copies` times.
    Indicator { flags: Vec<bool>, copies: usize },
    /// Fully explicit per-message table, indexed by rank.
    Table { map: Vec<RingVector> },
}

/// A systematic encoder with its function, error budget and redundancy
/// length. `encode(u)` is always the concatenation `(u, p(u))`.
#[derive(Debug, Clone)]
pub struct FcchdEncoder {
    f: FunctionSpec,
    t: u64,
    r: usize,
    kind: EncoderKind,
    rule: EncoderRule,
}

impl FcchdEncoder {
    pub fn function(&self) -> &FunctionSpec {
        &self.f
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn kind(&self) -> EncoderKind {
        self.kind
    }

    pub fn rule(&self) -> &EncoderRule {
        &self.rule
    }

    pub fn params(&self) -> RingParams {
        self.f.params()
    }

    pub fn k(&self) -> usize {
        self.f.k()
    }

    /// The redundancy vector `p(u)`.
    pub fn redundancy(&self, u: &RingVector) -> Result<RingVector> {
        if u.len() != self.k() || u.params() != self.params() {
            return Err(Error::ShapeMismatch(format!(
                "message of length {} over l={}, encoder wants length {} over l={}",
                u.len(),
                u.params().l(),
                self.k(),
                self.params().l()
            )));
        }
        Ok(match &self.rule {
            EncoderRule::WeightTable { words, period } => {
                let w = weight(u, WeightKind::Homogeneous);
                words[(smod(w + 1, *period as u64)? - 1) as usize].clone()
            }
            EncoderRule::ValueIndex { words } => {
                let z = self.f.eval(u)?;
                let idx = self
                    .f
                    .value_index(&z)
                    .expect("evaluated value belongs to the image");
                words[idx].clone()
            }
            EncoderRule::Indicator { flags, copies } => {
                let bit = flags[vector_rank(u) as usize] as u32;
                RingVector::new(self.params(), vec![bit; *copies])?
            }
            EncoderRule::Table { map } => map[vector_rank(u) as usize].clone(),
        })
    }

    /// `Enc(u) = (u, p(u))` of length `k + r`.
    pub fn encode(&self, u: &RingVector) -> Result<RingVector> {
        u.concat(&self.redundancy(u)?)
    }

    pub fn describe(&self) -> String {
        format!(
            "{} encoder for {} with t={} r={}",
            self.kind.tag(),
            self.f.describe(),
            self.t,
            self.r
        )
    }
}

/// Redundancy tables for the weight function; the period tables for
/// small `t` are fixed, larger `t` cycles any code of `2t+1` words at
/// pairwise distance `2t` (built on demand when none is supplied).
pub fn con1_encoder(
    params: RingParams,
    k: usize,
    t: u64,
    base_code: Option<IrregularCode>,
) -> Result<FcchdEncoder> {
    if params.l() < 2 {
        return Err(Error::InvalidInput(
            "the weight-table construction needs l >= 2".into(),
        ));
    }
    if t == 0 {
        return Err(Error::InvalidInput("error budget t must be positive".into()));
    }
    let f = FunctionSpec::hom_weight(params, k)?;
    let h = params.half();
    let mk = |rows: &[&[u32]]| -> Result<Vec<RingVector>> {
        rows.iter()
            .map(|row| RingVector::new(params, row.to_vec()))
            .collect()
    };
    let words = match t {
        1 => mk(&[&[0, 0], &[1, 1], &[h, 0]])?,
        2 => mk(&[
            &[0, 0, 0],
            &[h, h, 0],
            &[0, h, h],
            &[h, 0, h],
            &[0, 1, 0],
            &[h, h + 1, 0],
            &[0, h + 1, h],
            &[h, 1, h],
        ])?,
        3 => mk(&[
            &[0, 0, 0, 0, 0],
            &[1, 1, 1, 1, h],
            &[h, h, h, 0, 0],
            &[0, 0, h, h, 0],
            &[1, 1, h + 1, h + 1, h],
            &[h, h, 0, h, 0],
            &[h + 1, h + 1, h, h + 1, h],
        ])?,
        _ => {
            let words = 2 * t as usize + 1;
            let base = match base_code {
                Some(code) => {
                    if code.len() != words || code.params() != params {
                        return Err(Error::InvalidInput(format!(
                            "base code must have {words} words over l={}",
                            params.l()
                        )));
                    }
                    let d = crate::matrix::DistanceMatrix::constant(words, 2 * t);
                    let (ok, pair) = verify_irregular_code(&code, &d, false)?;
                    if !ok {
                        return Err(Error::InvalidInput(format!(
                            "base code pair {pair:?} is closer than {}",
                            2 * t
                        )));
                    }
                    code
                }
                None => equal_distance_code(words, 2 * t, params)?,
            };
            base.words().to_vec()
        }
    };
    let period = words.len();
    let r = words[0].len();
    Ok(FcchdEncoder {
        f,
        t,
        r,
        kind: EncoderKind::Con1,
        rule: EncoderRule::WeightTable { words, period },
    })
}

/// Redundancy tables for the quantized weight function, with redundancy
/// length exactly `t`; needs `step | 2k+1` and `step >= 2t+1`.
pub fn con2_encoder(params: RingParams, k: usize, t: u64, step: u64) -> Result<FcchdEncoder> {
    if params.l() < 2 {
        return Err(Error::InvalidInput(
            "the weight-table construction needs l >= 2".into(),
        ));
    }
    if t == 0 {
        return Err(Error::InvalidInput("error budget t must be positive".into()));
    }
    if step < 2 * t + 1 {
        return Err(Error::InvalidInput(format!(
            "step {step} must be at least 2t+1 = {}",
            2 * t + 1
        )));
    }
    let f = FunctionSpec::weight_distribution(params, k, step)?;
    let h = params.half();
    let tt = t as usize;
    let mut words = Vec::with_capacity(step as usize);
    for i in 1..=step as usize {
        let mut coords;
        if i <= tt + 1 {
            coords = vec![1u32; i - 1];
            coords.resize(tt, 0);
        } else if i <= 2 * tt + 1 {
            coords = vec![h; i - 1 - tt];
            coords.resize(tt, 1);
        } else {
            coords = vec![h; tt];
        }
        words.push(RingVector::new(params, coords)?);
    }
    Ok(FcchdEncoder {
        f,
        t,
        r: tt,
        kind: EncoderKind::Con2,
        rule: EncoderRule::WeightTable {
            words,
            period: step as usize,
        },
    })
}

/// Indicator construction for functions whose radius-`2t` function balls
/// hold at most two values: the redundancy repeats, `2t` times, whether
/// the message's value is the larger of its ball.
pub fn locbin_encoder(f: &FunctionSpec, t: u64, budget_lk: u32) -> Result<FcchdEncoder> {
    let (ok, witness) = f.is_locally_binary(2 * t, budget_lk)?;
    if !ok {
        return Err(Error::InvalidInput(format!(
            "{} is not {}-locally binary: message {:?} sees three values",
            f.describe(),
            2 * t,
            witness.expect("witness accompanies failure").coords()
        )));
    }
    let total = check_enum_budget(f.params(), f.k(), budget_lk)?;
    let patterns = crate::ring::enumerate_ball(f.params(), f.k(), 2 * t);
    let mut flags = Vec::with_capacity(total as usize);
    for rank in 0..total {
        let u = vector_at(f.params(), f.k(), rank);
        let zu = f.eval(&u)?;
        // the ball maximum under the image order
        let mut best = zu.clone();
        let mut best_idx = f.value_index(&zu).expect("value in image");
        for e in &patterns {
            let z = f.eval(&u.add(e)?)?;
            let idx = f.value_index(&z).expect("value in image");
            if idx > best_idx {
                best_idx = idx;
                best = z;
            }
        }
        flags.push(zu == best);
    }
    Ok(FcchdEncoder {
        f: f.clone(),
        t,
        r: 2 * t as usize,
        kind: EncoderKind::LocBin,
        rule: EncoderRule::Indicator {
            flags,
            copies: 2 * t as usize,
        },
    })
}

/// Wraps a code whose words meet the function-distance matrix row
/// requirements under the image order: messages with the same value
/// share the word at their value's position.
pub fn generic_encoder(
    f: &FunctionSpec,
    code: IrregularCode,
    t: u64,
    budget_lk: u32,
) -> Result<FcchdEncoder> {
    let d = function_distance_matrix(f, t, budget_lk)?;
    let (ok, pair) = verify_irregular_code(&code, &d, false)?;
    if !ok {
        let (i, j) = pair.expect("pair accompanies failure");
        return Err(Error::InvalidInput(format!(
            "code words {i} and {j} are closer than the requirement for values {} and {}",
            d.labels()[i],
            d.labels()[j]
        )));
    }
    Ok(FcchdEncoder {
        f: f.clone(),
        t,
        r: code.r(),
        kind: EncoderKind::Generic,
        rule: EncoderRule::ValueIndex {
            words: code.words().to_vec(),
        },
    })
}

/// The no-redundancy strawman: systematic, but protects nothing. Useful
/// as the negative control for verification and channel experiments.
pub fn zero_redundancy_encoder(f: &FunctionSpec, t: u64) -> FcchdEncoder {
    let words = vec![RingVector::zero(f.params(), 0); f.image().len()];
    FcchdEncoder {
        f: f.clone(),
        t,
        r: 0,
        kind: EncoderKind::Custom,
        rule: EncoderRule::ValueIndex { words },
    }
}

/// Message table plus redundancy-word interning, shared by the verifier
/// and decoder loops.
struct Flattened {
    k: usize,
    total: u64,
    coords: Vec<u32>,
    word_of: Vec<u32>,
    words: Vec<RingVector>,
}

impl Flattened {
    fn build(enc: &FcchdEncoder, budget_lk: u32) -> Result<Self> {
        let total = check_enum_budget(enc.params(), enc.k(), budget_lk)?;
        let k = enc.k();
        let mut coords = Vec::with_capacity(total as usize * k);
        let mut words: Vec<RingVector> = Vec::new();
        let mut word_of = Vec::with_capacity(total as usize);
        for rank in 0..total {
            let u = vector_at(enc.params(), k, rank);
            let p = enc.redundancy(&u)?;
            let id = match words.iter().position(|w| *w == p) {
                Some(id) => id,
                None => {
                    words.push(p);
                    words.len() - 1
                }
            };
            word_of.push(id as u32);
            coords.extend_from_slice(u.coords());
        }
        Ok(Flattened {
            k,
            total,
            coords,
            word_of,
            words,
        })
    }

    fn msg(&self, rank: u64) -> &[u32] {
        let at = rank as usize * self.k;
        &self.coords[at..at + self.k]
    }

    fn word_distances(&self, params: RingParams) -> Vec<u64> {
        let n = self.words.len();
        let mut table = vec![0u64; n * n];
        for i in 0..n {
            for j in 0..n {
                table[i * n + j] =
                    hom_distance_slices(self.words[i].coords(), self.words[j].coords(), params);
            }
        }
        table
    }
}

/// Exhaustively checks the defining separation: encodings of messages
/// with different function values must be at homogeneous distance at
/// least `2t+1`. Pairs inside one value class are skipped, and each
/// cross pair stops as soon as the running distance clears the bound.
pub fn verify_fcchd(
    enc: &FcchdEncoder,
    budget_lk: u32,
) -> Result<(bool, Option<(RingVector, RingVector)>)> {
    verify_impl(enc, budget_lk, true)
}

/// Single-threaded variant of [`verify_fcchd`], kept callable for
/// benchmarking against the parallel path.
pub fn verify_fcchd_seq(
    enc: &FcchdEncoder,
    budget_lk: u32,
) -> Result<(bool, Option<(RingVector, RingVector)>)> {
    verify_impl(enc, budget_lk, false)
}

fn verify_impl(
    enc: &FcchdEncoder,
    budget_lk: u32,
    parallel: bool,
) -> Result<(bool, Option<(RingVector, RingVector)>)> {
    let flat = Flattened::build(enc, budget_lk)?;
    let classes = enc.f.classes_by_rank(budget_lk)?;
    let word_dist = flat.word_distances(enc.params());
    let nwords = flat.words.len();
    let need = 2 * enc.t + 1;
    let params = enc.params();

    let pairs: Vec<(usize, usize)> = (0..classes.len())
        .flat_map(|a| (0..a).map(move |b| (b, a)))
        .collect();
    let check_pair = |&(a, b): &(usize, usize)| -> Option<(u64, u64)> {
        for &i in &classes[a] {
            let wi = flat.word_of[i as usize] as usize;
            let mi = flat.msg(i);
            for &j in &classes[b] {
                let wj = flat.word_of[j as usize] as usize;
                let red = word_dist[wi * nwords + wj];
                if red >= need {
                    continue;
                }
                if !hom_distance_at_least(mi, flat.msg(j), params, need - red) {
                    return Some((i, j));
                }
            }
        }
        None
    };

    let violation = if parallel {
        find_map_pairs(&pairs, &check_pair)
    } else {
        pairs.iter().find_map(check_pair)
    };
    Ok(match violation {
        Some((i, j)) => (
            false,
            Some((vector_at(params, flat.k, i), vector_at(params, flat.k, j))),
        ),
        None => (true, None),
    })
}

#[cfg(feature = "parallel")]
fn find_map_pairs(
    pairs: &[(usize, usize)],
    check: &(dyn Fn(&(usize, usize)) -> Option<(u64, u64)> + Sync),
) -> Option<(u64, u64)> {
    use rayon::prelude::*;
    pairs.par_iter().find_map_first(check)
}

#[cfg(not(feature = "parallel"))]
fn find_map_pairs(
    pairs: &[(usize, usize)],
    check: &dyn Fn(&(usize, usize)) -> Option<(u64, u64)>,
) -> Option<(u64, u64)> {
    pairs.iter().find_map(check)
}

/// What the decoder recovered.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub value: Value,
    /// Homogeneous distance from the received word to the nearest
    /// codeword; values above `t` mean the channel contract was broken
    /// and the result is best-effort.
    pub distance: u64,
    pub within_t: bool,
}

/// Nearest-neighbor decoding of the function value: scans all messages,
/// ties broken toward the lexicographically smaller message. For any
/// verified encoder and error weight at most `t` this recovers the value
/// of the sent message.
pub fn decode_function_value(
    y: &RingVector,
    enc: &FcchdEncoder,
    budget_lk: u32,
) -> Result<Decoded> {
    decode_impl(y, enc, budget_lk, true)
}

/// Single-threaded variant of [`decode_function_value`].
pub fn decode_function_value_seq(
    y: &RingVector,
    enc: &FcchdEncoder,
    budget_lk: u32,
) -> Result<Decoded> {
    decode_impl(y, enc, budget_lk, false)
}

fn decode_impl(y: &RingVector, enc: &FcchdEncoder, budget_lk: u32, parallel: bool) -> Result<Decoded> {
    Decoder::new(enc, budget_lk)?.decode_with(y, parallel)
}

/// Reusable decoding context: the flattened message table is built once
/// and shared across many received words (channel experiments decode
/// thousands of words against one encoder).
pub struct Decoder {
    enc: FcchdEncoder,
    flat: Flattened,
}

impl Decoder {
    pub fn new(enc: &FcchdEncoder, budget_lk: u32) -> Result<Self> {
        Ok(Decoder {
            enc: enc.clone(),
            flat: Flattened::build(enc, budget_lk)?,
        })
    }

    pub fn encoder(&self) -> &FcchdEncoder {
        &self.enc
    }

    pub fn decode(&self, y: &RingVector) -> Result<Decoded> {
        self.decode_with(y, false)
    }

    fn decode_with(&self, y: &RingVector, parallel: bool) -> Result<Decoded> {
        let (k, r) = (self.enc.k(), self.enc.r());
        if y.len() != k + r || y.params() != self.enc.params() {
            return Err(Error::ShapeMismatch(format!(
                "received word has length {}, encoder emits {}",
                y.len(),
                k + r
            )));
        }
        let params = self.enc.params();
        let y_msg = &y.coords()[..k];
        let y_red = &y.coords()[k..];
        let flat = &self.flat;
        let red_dist: Vec<u64> = flat
            .words
            .iter()
            .map(|w| hom_distance_slices(w.coords(), y_red, params))
            .collect();
        let score = |rank: u64| -> (u64, u64) {
            let d = hom_distance_slices(flat.msg(rank), y_msg, params)
                + red_dist[flat.word_of[rank as usize] as usize];
            (d, rank)
        };
        let (dist, best) = if parallel {
            min_score(flat.total, &score)
        } else {
            (0..flat.total).map(score).min().expect("nonempty space")
        };
        let u = vector_at(params, k, best);
        Ok(Decoded {
            value: self.enc.f.eval(&u)?,
            distance: dist,
            within_t: dist <= self.enc.t,
        })
    }
}

#[cfg(feature = "parallel")]
fn min_score(total: u64, score: &(dyn Fn(u64) -> (u64, u64) + Sync)) -> (u64, u64) {
    use rayon::prelude::*;
    (0..total)
        .into_par_iter()
        .map(score)
        .min()
        .expect("nonempty space")
}

#[cfg(not(feature = "parallel"))]
fn min_score(total: u64, score: &dyn Fn(u64) -> (u64, u64)) -> (u64, u64) {
    (0..total).map(score).min().expect("nonempty space")
}

/// Accelerated decoder for weight-table encoders: minimizes over weight
/// classes with a per-coordinate dynamic program instead of scanning
/// messages. Inside the error budget it agrees with
/// [`decode_function_value`]; beyond it, tie-breaking may differ.
pub fn decode_by_weight_class(y: &RingVector, enc: &FcchdEncoder) -> Result<Decoded> {
    let EncoderRule::WeightTable { words, period } = &enc.rule else {
        return Err(Error::InvalidInput(
            "the weight-class decoder only applies to weight-table encoders".into(),
        ));
    };
    let (k, r) = (enc.k(), enc.r());
    if y.len() != k + r || y.params() != enc.params() {
        return Err(Error::ShapeMismatch(format!(
            "received word has length {}, encoder emits {}",
            y.len(),
            k + r
        )));
    }
    let params = enc.params();
    let y_msg = &y.coords()[..k];
    let y_red = &y.coords()[k..];
    let m = params.modulus();
    let half = params.half();

    // cheapest way to give coordinate c scalar weight class 0, 1 or 2
    let class_cost = |yc: u32, class: u64| -> u64 {
        (0..m)
            .filter(|&u| crate::ring::homw(u, half) == class)
            .map(|u| crate::ring::homw((u + m - yc) & (m - 1), half))
            .min()
            .unwrap_or(u64::MAX)
    };
    let max_w = 2 * k as u64;
    let infinity = u64::MAX / 2;
    let mut dp = vec![infinity; max_w as usize + 1];
    dp[0] = 0;
    let mut filled = 0u64;
    for &yc in y_msg {
        let costs = [class_cost(yc, 0), class_cost(yc, 1), class_cost(yc, 2)];
        filled += 2;
        let mut next = vec![infinity; max_w as usize + 1];
        for w in 0..=filled.min(max_w) as usize {
            for (extra, &cost) in costs.iter().enumerate() {
                if cost >= infinity || w < extra {
                    continue;
                }
                let prev = dp[w - extra];
                if prev + cost < next[w] {
                    next[w] = prev + cost;
                }
            }
        }
        dp = next;
    }
    let red_dist: Vec<u64> = words
        .iter()
        .map(|w| hom_distance_slices(w.coords(), y_red, params))
        .collect();
    let (dist, best_w) = (0..=max_w)
        .filter(|&w| dp[w as usize] < infinity)
        .map(|w| {
            let word = (smod(w + 1, *period as u64).expect("period >= 1") - 1) as usize;
            (dp[w as usize] + red_dist[word], w)
        })
        .min()
        .expect("weight 0 is always reachable");
    let value = match enc.f.kind() {
        FunctionKind::HomWeight => Value::Int(best_w),
        FunctionKind::WeightDistribution { step } => Value::Int(best_w / step),
        _ => {
            return Err(Error::InvalidInput(
                "weight-table encoder with a non-weight function".into(),
            ))
        }
    };
    Ok(Decoded {
        value,
        distance: dist,
        within_t: dist <= enc.t,
    })
}

// --- descriptor text format -------------------------------------------------
//
//   l k t r
//   function <tag> [params]
//   builtin con1 | builtin con2 <step>      (or explicit mapping lines)
//   m_1 ... m_k -> p_1 ... p_r

/// Renders an encoder as a descriptor. Table-built encoders are written
/// out message by message, so they must be within the enumeration budget.
pub fn write_descriptor(enc: &FcchdEncoder, budget_lk: u32) -> Result<String> {
    let mut out = format!(
        "{} {} {} {}\n",
        enc.params().l(),
        enc.k(),
        enc.t,
        enc.r
    );
    let function_line = match enc.f.kind() {
        FunctionKind::Identity => "function identity".to_string(),
        FunctionKind::HomWeight => "function hom-weight".to_string(),
        FunctionKind::WeightDistribution { step } => format!("function weight-dist {step}"),
        FunctionKind::RtWeight => "function rt-weight".to_string(),
        FunctionKind::MinMax { w, s } => format!("function min-max {w} {s}"),
        FunctionKind::Lookup { .. } => {
            return Err(Error::InvalidInput(
                "lookup-backed encoders have no descriptor form; keep the lookup file".into(),
            ))
        }
    };
    out.push_str(&function_line);
    out.push('\n');
    match (enc.kind, enc.f.kind()) {
        (EncoderKind::Con1, _) if enc.t <= 3 => out.push_str("builtin con1\n"),
        (EncoderKind::Con2, FunctionKind::WeightDistribution { step }) => {
            out.push_str(&format!("builtin con2 {step}\n"))
        }
        _ => {
            let total = check_enum_budget(enc.params(), enc.k(), budget_lk)?;
            for rank in 0..total {
                let u = vector_at(enc.params(), enc.k(), rank);
                let p = enc.redundancy(&u)?;
                let msg: Vec<String> = u.coords().iter().map(|c| c.to_string()).collect();
                let red: Vec<String> = p.coords().iter().map(|c| c.to_string()).collect();
                out.push_str(&format!("{} -> {}\n", msg.join(" "), red.join(" ")));
            }
        }
    }
    Ok(out)
}

/// Parses a descriptor back into an encoder.
pub fn parse_descriptor(text: &str, budget_lk: u32) -> Result<FcchdEncoder> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty()).peekable();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty descriptor".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(Error::Parse(format!(
            "descriptor header must be `l k t r`, got {header:?}"
        )));
    }
    let l: u32 = fields[0].parse().map_err(|_| Error::Parse("bad l".into()))?;
    let k: usize = fields[1].parse().map_err(|_| Error::Parse("bad k".into()))?;
    let t: u64 = fields[2].parse().map_err(|_| Error::Parse("bad t".into()))?;
    let r: usize = fields[3].parse().map_err(|_| Error::Parse("bad r".into()))?;
    let params = RingParams::new(l)?;

    let mut function: Option<FunctionSpec> = None;
    if let Some(line) = lines.peek() {
        if let Some(rest) = line.trim().strip_prefix("function ") {
            function = Some(parse_function_line(rest.trim(), params, k, budget_lk)?);
            lines.next();
        }
    }
    if let Some(line) = lines.peek() {
        if let Some(rest) = line.trim().strip_prefix("builtin ") {
            let rest = rest.trim();
            let enc = if rest == "con1" {
                con1_encoder(params, k, t, None)?
            } else if let Some(step) = rest.strip_prefix("con2") {
                let step: u64 = step
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad con2 step in {rest:?}")))?;
                con2_encoder(params, k, t, step)?
            } else {
                return Err(Error::Parse(format!("unknown builtin {rest:?}")));
            };
            if enc.r != r {
                return Err(Error::Parse(format!(
                    "header says r={r} but the builtin has r={}",
                    enc.r
                )));
            }
            return Ok(enc);
        }
    }

    let f = function.ok_or_else(|| {
        Error::Parse("table descriptors need a `function <tag>` line to decode against".into())
    })?;
    let total = check_enum_budget(params, k, budget_lk)?;
    let mut map: Vec<Option<RingVector>> = vec![None; total as usize];
    for line in lines {
        let (lhs, rhs) = line
            .split_once("->")
            .ok_or_else(|| Error::Parse(format!("missing `->` in {line:?}")))?;
        let msg = RingVector::new(params, crate::function::parse_coords(lhs)?)?;
        if msg.len() != k {
            return Err(Error::Parse(format!("message {lhs:?} is not length {k}")));
        }
        let red = RingVector::new(params, crate::function::parse_coords(rhs)?)?;
        if red.len() != r {
            return Err(Error::Parse(format!("redundancy {rhs:?} is not length {r}")));
        }
        let slot = &mut map[vector_rank(&msg) as usize];
        if slot.is_some() {
            return Err(Error::Parse(format!("duplicate message {lhs:?}")));
        }
        *slot = Some(red);
    }
    let map: Vec<RingVector> = map
        .into_iter()
        .enumerate()
        .map(|(rank, slot)| {
            slot.ok_or_else(|| Error::Parse(format!("message rank {rank} missing from the table")))
        })
        .collect::<Result<_>>()?;
    Ok(FcchdEncoder {
        f,
        t,
        r,
        kind: EncoderKind::Custom,
        rule: EncoderRule::Table { map },
    })
}

fn parse_function_line(
    rest: &str,
    params: RingParams,
    k: usize,
    budget_lk: u32,
) -> Result<FunctionSpec> {
    let toks: Vec<&str> = rest.split_whitespace().collect();
    match toks.as_slice() {
        ["identity"] => FunctionSpec::identity(params, k, budget_lk),
        ["hom-weight"] => FunctionSpec::hom_weight(params, k),
        ["weight-dist", step] => {
            let step = step
                .parse()
                .map_err(|_| Error::Parse(format!("bad weight-dist step {step:?}")))?;
            FunctionSpec::weight_distribution(params, k, step)
        }
        ["rt-weight"] => FunctionSpec::rt_weight(params, k),
        ["min-max", w, s] => {
            let w = w.parse().map_err(|_| Error::Parse("bad min-max w".into()))?;
            let s = s.parse().map_err(|_| Error::Parse("bad min-max s".into()))?;
            let f = FunctionSpec::min_max(params, w, s, budget_lk)?;
            if f.k() != k {
                return Err(Error::Parse(format!(
                    "min-max w*s = {} does not match k = {k}",
                    f.k()
                )));
            }
            Ok(f)
        }
        _ => Err(Error::Parse(format!("unknown function line {rest:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{distance, enumerate_ball, enumerate_vectors};

    fn rp(l: u32) -> RingParams {
        RingParams::new(l).unwrap()
    }

    fn rv(l: u32, coords: &[u32]) -> RingVector {
        RingVector::new(rp(l), coords.to_vec()).unwrap()
    }

    #[test]
    fn smod_examples() {
        assert_eq!(smod(2, 5).unwrap(), 2);
        assert_eq!(smod(5, 5).unwrap(), 5);
        assert_eq!(smod(10, 8).unwrap(), 2);
        assert!(smod(0, 5).is_err());
        assert!(smod(3, 0).is_err());
    }

    #[test]
    fn con1_redundancy_table() {
        // t=1: weight 4 wraps to the second word
        let enc = con1_encoder(rp(2), 4, 1, None).unwrap();
        assert_eq!(enc.r(), 2);
        let u = rv(2, &[1, 1, 1, 1]); // weight 4
        assert_eq!(enc.redundancy(&u).unwrap(), rv(2, &[1, 1]));

        // t=2: weight 9 wraps to word 2 = (half, half, 0)
        let enc = con1_encoder(rp(2), 5, 2, None).unwrap();
        assert_eq!(enc.r(), 3);
        let u = rv(2, &[1, 1, 1, 2, 2]); // weight 7... adjust to 9
        assert_eq!(weight(&u, WeightKind::Homogeneous), 7);
        let u = rv(2, &[2, 2, 2, 2, 1]); // weight 9
        assert_eq!(weight(&u, WeightKind::Homogeneous), 9);
        assert_eq!(enc.redundancy(&u).unwrap(), rv(2, &[2, 2, 0]));

        // t=3: weight 0 takes the zero word of length 5
        let enc = con1_encoder(rp(2), 3, 3, None).unwrap();
        assert_eq!(enc.r(), 5);
        let u = rv(2, &[0, 0, 0]);
        assert_eq!(enc.redundancy(&u).unwrap(), rv(2, &[0, 0, 0, 0, 0]));

        assert!(con1_encoder(rp(1), 3, 1, None).is_err());
    }

    #[test]
    fn con1_systematic() {
        let enc = con1_encoder(rp(2), 3, 1, None).unwrap();
        for u in enumerate_vectors(rp(2), 3) {
            let c = enc.encode(&u).unwrap();
            assert_eq!(&c.coords()[..3], u.coords());
            assert_eq!(c.len(), 3 + enc.r());
        }
    }

    #[test]
    fn con1_large_t_uses_base_code() {
        let enc = con1_encoder(rp(2), 2, 4, None).unwrap();
        let EncoderRule::WeightTable { words, period } = enc.rule() else {
            panic!()
        };
        assert_eq!(*period, 9);
        for (i, a) in words.iter().enumerate() {
            for b in &words[..i] {
                assert!(distance(a, b, WeightKind::Homogeneous).unwrap() >= 8);
            }
        }
        // a bad supplied base code is rejected
        let close = IrregularCode::new(rp(2), 1, vec![rv(2, &[0]); 9]).unwrap();
        assert!(con1_encoder(rp(2), 2, 4, Some(close)).is_err());
    }

    #[test]
    fn con2_redundancy_table() {
        // t=2, step=5: words (0,0) (1,0) (1,1) (2,1) (2,2)
        let enc = con2_encoder(rp(2), 7, 2, 5).unwrap();
        assert_eq!(enc.r(), 2);
        let w7 = rv(2, &[1, 1, 1, 1, 1, 1, 1]); // weight 7 -> word 3 = (1,1)
        assert_eq!(enc.redundancy(&w7).unwrap(), rv(2, &[1, 1]));
        let w3 = rv(2, &[1, 1, 1, 0, 0, 0, 0]); // weight 3 -> word 4 = (2,1)
        assert_eq!(enc.redundancy(&w3).unwrap(), rv(2, &[2, 1]));

        // t=1, step=9: weight 4 -> word 5 in the constant tail
        let enc = con2_encoder(rp(2), 4, 1, 9).unwrap();
        assert_eq!(enc.r(), 1);
        let w4 = rv(2, &[1, 1, 1, 1]);
        assert_eq!(enc.redundancy(&w4).unwrap(), rv(2, &[2]));

        assert!(con2_encoder(rp(2), 7, 2, 4).is_err()); // 4 does not divide 15
        assert!(con2_encoder(rp(2), 7, 3, 5).is_err()); // 5 < 2t+1
    }

    #[test]
    fn verify_small_encoders() {
        let enc = con1_encoder(rp(2), 2, 1, None).unwrap();
        assert_eq!(verify_fcchd(&enc, 24).unwrap(), (true, None));
        assert_eq!(verify_fcchd_seq(&enc, 24).unwrap(), (true, None));

        let enc = con2_encoder(rp(2), 4, 1, 3).unwrap();
        assert_eq!(verify_fcchd(&enc, 24).unwrap().0, true);
    }

    #[test]
    fn strawman_fails_with_adjacent_pair() {
        let f = FunctionSpec::hom_weight(rp(2), 2).unwrap();
        let enc = zero_redundancy_encoder(&f, 1);
        let (ok, pair) = verify_fcchd(&enc, 24).unwrap();
        assert!(!ok);
        let (u1, u2) = pair.unwrap();
        let d = distance(&u1, &u2, WeightKind::Homogeneous).unwrap();
        assert!(d <= 2, "violating pair at distance {d}");
        assert_ne!(f.eval(&u1).unwrap(), f.eval(&u2).unwrap());
    }

    #[test]
    fn generic_encoder_from_verified_code() {
        let f = FunctionSpec::rt_weight(rp(2), 3).unwrap();
        let code = equal_distance_code(4, 2, rp(2)).unwrap();
        let enc = generic_encoder(&f, code, 1, 24).unwrap();
        assert_eq!(verify_fcchd(&enc, 24).unwrap().0, true);

        // words too close for the requirements are rejected
        let bad = IrregularCode::new(rp(2), 1, vec![rv(2, &[0]); 4]).unwrap();
        assert!(generic_encoder(&f, bad, 1, 24).is_err());
    }

    #[test]
    fn locbin_encoder_on_quantized_weight() {
        // step 5 >= 4t+1 at t=1, k=7 (2k+1 = 15)
        let f = FunctionSpec::weight_distribution(rp(2), 7, 5).unwrap();
        let enc = locbin_encoder(&f, 1, 24).unwrap();
        assert_eq!(enc.r(), 2);
        let (ok, _) = verify_fcchd(&enc, 24).unwrap();
        assert!(ok);
        // a boundary message whose ball already sees the larger value
        // encodes the zero flag
        let u = rv(2, &[1, 1, 1, 1, 0, 0, 0]); // weight 4, floor(4/5)=0; ball reaches 5
        assert_eq!(enc.redundancy(&u).unwrap(), rv(2, &[0, 0]));
        // far from any boundary the value is its ball's maximum
        let top = rv(2, &[2, 2, 2, 2, 2, 2, 2]); // weight 14, value 2
        assert_eq!(enc.redundancy(&top).unwrap(), rv(2, &[1, 1]));

        // the weight function itself is not 2-locally binary
        let f = FunctionSpec::hom_weight(rp(2), 2).unwrap();
        assert!(locbin_encoder(&f, 1, 24).is_err());
    }

    #[test]
    fn decode_round_trip_and_errors() {
        let enc = con2_encoder(rp(2), 4, 1, 3).unwrap();
        for u in enumerate_vectors(rp(2), 4) {
            let y = enc.encode(&u).unwrap();
            let out = decode_function_value(&y, &enc, 24).unwrap();
            assert_eq!(out.value, enc.function().eval(&u).unwrap());
            assert_eq!(out.distance, 0);
            assert!(out.within_t);
        }
        // all weight-1 errors stay decodable
        let u = rv(2, &[1, 3, 0, 2]);
        let truth = enc.function().eval(&u).unwrap();
        let x = enc.encode(&u).unwrap();
        for e in enumerate_ball(rp(2), 5, 1) {
            let y = x.add(&e).unwrap();
            let out = decode_function_value(&y, &enc, 24).unwrap();
            assert_eq!(out.value, truth);
            let seq = decode_function_value_seq(&y, &enc, 24).unwrap();
            assert_eq!(out, seq);
        }
    }

    #[test]
    fn weight_class_decoder_agrees() {
        let enc = con1_encoder(rp(2), 3, 1, None).unwrap();
        for u in enumerate_vectors(rp(2), 3) {
            let x = enc.encode(&u).unwrap();
            for e in enumerate_ball(rp(2), 5, 1) {
                let y = x.add(&e).unwrap();
                let exhaustive = decode_function_value(&y, &enc, 24).unwrap();
                let fast = decode_by_weight_class(&y, &enc).unwrap();
                assert_eq!(exhaustive.value, fast.value);
                assert_eq!(exhaustive.distance, fast.distance);
            }
        }
        let f = FunctionSpec::rt_weight(rp(2), 3).unwrap();
        let generic = zero_redundancy_encoder(&f, 1);
        let y = rv(2, &[0, 0, 0]);
        assert!(decode_by_weight_class(&y, &generic).is_err());
    }

    #[test]
    fn descriptor_round_trips() {
        let enc = con1_encoder(rp(2), 3, 1, None).unwrap();
        let text = write_descriptor(&enc, 24).unwrap();
        assert!(text.contains("builtin con1"));
        let back = parse_descriptor(&text, 24).unwrap();
        for u in enumerate_vectors(rp(2), 3) {
            assert_eq!(
                enc.encode(&u).unwrap(),
                back.encode(&u).unwrap()
            );
        }

        // locbin encoders serialize as explicit tables
        let f = FunctionSpec::weight_distribution(rp(2), 2, 5).unwrap();
        let enc = locbin_encoder(&f, 1, 24).unwrap();
        let text = write_descriptor(&enc, 24).unwrap();
        assert!(text.contains("->"));
        let back = parse_descriptor(&text, 24).unwrap();
        for u in enumerate_vectors(rp(2), 2) {
            assert_eq!(enc.encode(&u).unwrap(), back.encode(&u).unwrap());
        }
        assert_eq!(back.kind(), EncoderKind::Custom);

        assert!(parse_descriptor("2 2 1\n", 24).is_err());
        assert!(parse_descriptor("2 2 1 1\n0 0 -> 0\n", 24).is_err());
    }
}
