//! Evaluatable functions on `Z_{2^l}^k` with enumerable images and
//! preimage classes: identity, homogeneous weight, quantized weight
//! distribution, Rosenbloom-Tsfasman weight, block min-max, and
//! user-supplied lookup tables.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::ring::{
    self, ball_volume, enumerate_ball, space_size, vector_at, vector_rank, weight, RingParams,
    RingVector, WeightKind,
};

/// A function value. Equality and ordering agree with the mathematical
/// value; images are kept sorted under this ordering.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Int(u64),
    /// Min-max output `(argmin block, argmax block)`, 1-based.
    Pair(u32, u32),
    /// The message itself, for the identity function.
    Word(Vec<u32>),
    /// Opaque token from a lookup table.
    Token(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Pair(i, j) => write!(f, "({i},{j})"),
            Value::Word(cs) => {
                let rendered: Vec<String> = cs.iter().map(|c| c.to_string()).collect();
                write!(f, "{}", rendered.join(","))
            }
            Value::Token(s) => write!(f, "{s}"),
        }
    }
}

impl Value {
    /// Parses a value token: `(i,j)` pairs, bare integers, anything else
    /// as an opaque token.
    pub fn parse_token(s: &str) -> Value {
        let t = s.trim();
        if let Some(inner) = t.strip_prefix('(').and_then(|rest| rest.strip_suffix(')')) {
            let parts: Vec<&str> = inner.split(',').collect();
            if parts.len() == 2 {
                if let (Ok(i), Ok(j)) = (parts[0].trim().parse(), parts[1].trim().parse()) {
                    return Value::Pair(i, j);
                }
            }
        }
        if let Ok(n) = t.parse::<u64>() {
            return Value::Int(n);
        }
        Value::Token(t.to_string())
    }
}

/// Which function family a [`FunctionSpec`] evaluates.
#[derive(Debug, Clone)]
pub enum FunctionKind {
    Identity,
    HomWeight,
    /// `u -> floor(hom_weight(u) / step)` with `step` dividing `2k + 1`.
    WeightDistribution { step: u64 },
    RtWeight,
    /// Blockwise min-max over `w` blocks of length `s`.
    MinMax { w: usize, s: usize },
    /// Dense table indexed by message rank.
    Lookup { table: Vec<Value> },
}

impl FunctionKind {
    fn tag(&self) -> &'static str {
        match self {
            FunctionKind::Identity => "identity",
            FunctionKind::HomWeight => "hom-weight",
            FunctionKind::WeightDistribution { .. } => "weight-dist",
            FunctionKind::RtWeight => "rt-weight",
            FunctionKind::MinMax { .. } => "min-max",
            FunctionKind::Lookup { .. } => "lookup",
        }
    }
}

/// A total function on `Z_{2^l}^k` together with its eagerly enumerated
/// image, in the fixed order used for matrix rows and encoder tables.
#[derive(Debug, Clone)]
pub struct FunctionSpec {
    params: RingParams,
    k: usize,
    kind: FunctionKind,
    image: Vec<Value>,
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidInput("message length k must be positive".into()));
    }
    Ok(())
}

/// Fails unless `l*k <= budget_lk`; returns the space size on success.
pub fn check_enum_budget(params: RingParams, k: usize, budget_lk: u32) -> Result<u64> {
    let lk = params.l() as u64 * k as u64;
    if lk > budget_lk as u64 {
        return Err(Error::BudgetExceeded(format!(
            "enumerating Z_{{2^{}}}^{} needs l*k = {} > budget {}",
            params.l(),
            k,
            lk,
            budget_lk
        )));
    }
    Ok(space_size(params, k).expect("budgeted space fits in u64"))
}

impl FunctionSpec {
    pub fn identity(params: RingParams, k: usize, budget_lk: u32) -> Result<Self> {
        check_k(k)?;
        check_enum_budget(params, k, budget_lk)?;
        let image = ring::enumerate_vectors(params, k)
            .map(|u| Value::Word(u.coords().to_vec()))
            .collect();
        Ok(FunctionSpec {
            params,
            k,
            kind: FunctionKind::Identity,
            image,
        })
    }

    pub fn hom_weight(params: RingParams, k: usize) -> Result<Self> {
        check_k(k)?;
        let image = achievable_weights(params, k).map(Value::Int).collect();
        Ok(FunctionSpec {
            params,
            k,
            kind: FunctionKind::HomWeight,
            image,
        })
    }

    pub fn weight_distribution(params: RingParams, k: usize, step: u64) -> Result<Self> {
        check_k(k)?;
        if step == 0 || (2 * k as u64 + 1) % step != 0 {
            return Err(Error::InvalidInput(format!(
                "step {} must divide 2k+1 = {}",
                step,
                2 * k + 1
            )));
        }
        let mut image: Vec<Value> = achievable_weights(params, k)
            .map(|w| Value::Int(w / step))
            .collect();
        image.dedup();
        Ok(FunctionSpec {
            params,
            k,
            kind: FunctionKind::WeightDistribution { step },
            image,
        })
    }

    pub fn rt_weight(params: RingParams, k: usize) -> Result<Self> {
        check_k(k)?;
        let image = (0..=k as u64).map(Value::Int).collect();
        Ok(FunctionSpec {
            params,
            k,
            kind: FunctionKind::RtWeight,
            image,
        })
    }

    /// Block min-max on `w` blocks of length `s` (`k = w*s`). The block
    /// order is lexicographic with ties resolved toward the smaller
    /// index, so the minimum of equal blocks sits at the first index and
    /// the maximum at the last; values `(i,i)` never occur for `w >= 2`.
    ///
    /// The image is enumerated exactly when the instance is within
    /// budget; otherwise (for `l >= 2`) it is the full set of ordered
    /// pairs with distinct entries, each of which is realizable.
    pub fn min_max(params: RingParams, w: usize, s: usize, budget_lk: u32) -> Result<Self> {
        if w == 0 || s == 0 {
            return Err(Error::InvalidInput(
                "min-max needs w >= 1 blocks of length s >= 1".into(),
            ));
        }
        let k = w * s;
        let kind = FunctionKind::MinMax { w, s };
        let image = if w == 1 {
            vec![Value::Pair(1, 1)]
        } else if (params.l() as u64) * (k as u64) <= budget_lk as u64 {
            let mut vals: Vec<Value> = ring::enumerate_vectors(params, k)
                .map(|u| eval_min_max(&u, w, s))
                .collect();
            vals.sort();
            vals.dedup();
            vals
        } else if params.l() >= 2 {
            let mut vals = Vec::with_capacity(w * (w - 1));
            for i in 1..=w as u32 {
                for j in 1..=w as u32 {
                    if i != j {
                        vals.push(Value::Pair(i, j));
                    }
                }
            }
            vals
        } else {
            return Err(Error::BudgetExceeded(format!(
                "min-max image over Z_2^{k} must be enumerated; l*k exceeds budget {budget_lk}"
            )));
        };
        Ok(FunctionSpec {
            params,
            k,
            kind,
            image,
        })
    }

    /// Builds a lookup function from a complete list of `(message, value)`
    /// entries; every message of `Z_{2^l}^k` must appear exactly once.
    pub fn from_lookup(
        params: RingParams,
        k: usize,
        entries: Vec<(RingVector, Value)>,
    ) -> Result<Self> {
        check_k(k)?;
        let total = space_size(params, k).ok_or_else(|| {
            Error::InvalidInput("lookup table space exceeds u64 indexing".into())
        })? as usize;
        if entries.len() != total {
            return Err(Error::InvalidInput(format!(
                "lookup table has {} entries, expected {}",
                entries.len(),
                total
            )));
        }
        let mut table: Vec<Option<Value>> = vec![None; total];
        for (u, v) in entries {
            if u.len() != k || u.params() != params {
                return Err(Error::ShapeMismatch(format!(
                    "lookup message {:?} does not match l={} k={}",
                    u.coords(),
                    params.l(),
                    k
                )));
            }
            let slot = &mut table[vector_rank(&u) as usize];
            if slot.is_some() {
                return Err(Error::InvalidInput(format!(
                    "duplicate lookup message {:?}",
                    u.coords()
                )));
            }
            *slot = Some(v);
        }
        let table: Vec<Value> = table.into_iter().map(|v| v.unwrap()).collect();
        let mut image = table.clone();
        image.sort();
        image.dedup();
        Ok(FunctionSpec {
            params,
            k,
            kind: FunctionKind::Lookup { table },
            image,
        })
    }

    /// Parses the lookup-table text format: a `l k` header line, then one
    /// `m_1 ... m_k -> token` line per message, in any order.
    pub fn parse_lookup(text: &str, budget_lk: u32) -> Result<Self> {
        let mut lines = text.lines().filter(|line| !line.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty lookup table".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::Parse(format!(
                "lookup header must be `l k`, got {header:?}"
            )));
        }
        let l: u32 = fields[0]
            .parse()
            .map_err(|_| Error::Parse(format!("bad l in header {header:?}")))?;
        let k: usize = fields[1]
            .parse()
            .map_err(|_| Error::Parse(format!("bad k in header {header:?}")))?;
        let params = RingParams::new(l)?;
        check_k(k)?;
        check_enum_budget(params, k, budget_lk)?;
        let mut entries = Vec::new();
        for line in lines {
            let (lhs, rhs) = line
                .split_once("->")
                .ok_or_else(|| Error::Parse(format!("missing `->` in {line:?}")))?;
            let coords = parse_coords(lhs)?;
            if coords.len() != k {
                return Err(Error::Parse(format!(
                    "message {lhs:?} has {} coordinates, expected {k}",
                    coords.len()
                )));
            }
            entries.push((RingVector::new(params, coords)?, Value::parse_token(rhs)));
        }
        FunctionSpec::from_lookup(params, k, entries)
    }

    /// Renders any in-budget function in the lookup-table text format.
    pub fn write_lookup(&self, budget_lk: u32) -> Result<String> {
        check_enum_budget(self.params, self.k, budget_lk)?;
        let mut out = format!("{} {}\n", self.params.l(), self.k);
        for u in ring::enumerate_vectors(self.params, self.k) {
            let rendered: Vec<String> = u.coords().iter().map(|c| c.to_string()).collect();
            out.push_str(&format!(
                "{} -> {}\n",
                rendered.join(" "),
                self.eval(&u).expect("in-budget message evaluates")
            ));
        }
        Ok(out)
    }

    pub fn params(&self) -> RingParams {
        self.params
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn kind(&self) -> &FunctionKind {
        &self.kind
    }

    /// The image, in the fixed order used everywhere downstream.
    pub fn image(&self) -> &[Value] {
        &self.image
    }

    /// Position of a value in the image order.
    pub fn value_index(&self, z: &Value) -> Option<usize> {
        self.image.binary_search(z).ok().or_else(|| {
            // Lookup images are sorted too, but identity images are in
            // message order, which coincides with Word ordering.
            self.image.iter().position(|v| v == z)
        })
    }

    pub fn describe(&self) -> String {
        let base = match &self.kind {
            FunctionKind::WeightDistribution { step } => {
                format!("weight-dist(step={step})")
            }
            FunctionKind::MinMax { w, s } => format!("min-max(w={w},s={s})"),
            other => other.tag().to_string(),
        };
        format!("{base} on Z_{{2^{}}}^{}", self.params.l(), self.k)
    }

    /// Evaluates the function; the message must have length `k`.
    pub fn eval(&self, u: &RingVector) -> Result<Value> {
        if u.len() != self.k || u.params() != self.params {
            return Err(Error::ShapeMismatch(format!(
                "message has length {} over l={}, function wants length {} over l={}",
                u.len(),
                u.params().l(),
                self.k,
                self.params.l()
            )));
        }
        Ok(match &self.kind {
            FunctionKind::Identity => Value::Word(u.coords().to_vec()),
            FunctionKind::HomWeight => Value::Int(weight(u, WeightKind::Homogeneous)),
            FunctionKind::WeightDistribution { step } => {
                Value::Int(weight(u, WeightKind::Homogeneous) / step)
            }
            FunctionKind::RtWeight => Value::Int(weight(u, WeightKind::RosenbloomTsfasman)),
            FunctionKind::MinMax { w, s } => eval_min_max(u, *w, *s),
            FunctionKind::Lookup { table } => table[vector_rank(u) as usize].clone(),
        })
    }

    /// All messages mapping to `z`, in lexicographic order.
    pub fn preimage(&self, z: &Value, budget_lk: u32) -> Result<Vec<RingVector>> {
        if !self.image.contains(z) {
            return Err(Error::InvalidInput(format!(
                "value {z} is not in the image of {}",
                self.describe()
            )));
        }
        check_enum_budget(self.params, self.k, budget_lk)?;
        Ok(ring::enumerate_vectors(self.params, self.k)
            .filter(|u| self.eval(u).expect("enumerated message evaluates") == *z)
            .collect())
    }

    /// Message ranks grouped by image position; the concatenation of the
    /// classes is a partition of the whole space.
    pub fn classes_by_rank(&self, budget_lk: u32) -> Result<Vec<Vec<u64>>> {
        let total = check_enum_budget(self.params, self.k, budget_lk)?;
        let mut classes = vec![Vec::new(); self.image.len()];
        for rank in 0..total {
            let u = vector_at(self.params, self.k, rank);
            let z = self.eval(&u).expect("enumerated message evaluates");
            let idx = self
                .value_index(&z)
                .expect("evaluated value belongs to the image");
            classes[idx].push(rank);
        }
        Ok(classes)
    }

    /// Function values observed within homogeneous distance `rho` of `u`,
    /// sorted and deduplicated.
    pub fn function_ball(&self, u: &RingVector, rho: u64, budget_lk: u32) -> Result<Vec<Value>> {
        let vol = ball_volume(self.k, rho as i64, self.params);
        if vol > BigUint::from(1u64) << budget_lk {
            return Err(Error::BudgetExceeded(format!(
                "ball of radius {rho} in Z_{{2^{}}}^{} has {vol} points, over budget 2^{budget_lk}",
                self.params.l(),
                self.k
            )));
        }
        let mut values = Vec::new();
        for e in enumerate_ball(self.params, self.k, rho) {
            values.push(self.eval(&u.add(&e)?)?);
        }
        values.sort();
        values.dedup();
        Ok(values)
    }

    /// Checks whether every radius-`rho` function ball contains at most
    /// two values; on failure returns a witness message whose ball sees
    /// three or more.
    pub fn is_locally_binary(
        &self,
        rho: u64,
        budget_lk: u32,
    ) -> Result<(bool, Option<RingVector>)> {
        let total = check_enum_budget(self.params, self.k, budget_lk)?;
        let patterns = enumerate_ball(self.params, self.k, rho);
        let sees_three = |rank: u64| -> bool {
            let u = vector_at(self.params, self.k, rank);
            let mut seen: Vec<Value> = Vec::with_capacity(3);
            for e in &patterns {
                let z = self
                    .eval(&u.add(e).expect("shapes match"))
                    .expect("enumerated message evaluates");
                if !seen.contains(&z) {
                    seen.push(z);
                    if seen.len() > 2 {
                        return true;
                    }
                }
            }
            false
        };
        let witness = find_first_rank(total, &sees_three);
        match witness {
            Some(rank) => Ok((false, Some(vector_at(self.params, self.k, rank)))),
            None => Ok((true, None)),
        }
    }
}

#[cfg(feature = "parallel")]
fn find_first_rank(total: u64, pred: &(dyn Fn(u64) -> bool + Sync)) -> Option<u64> {
    use rayon::prelude::*;
    (0..total).into_par_iter().find_first(|&rank| pred(rank))
}

#[cfg(not(feature = "parallel"))]
fn find_first_rank(total: u64, pred: &dyn Fn(u64) -> bool) -> Option<u64> {
    (0..total).find(|&rank| pred(rank))
}

/// Homogeneous weights that actually occur on `Z_{2^l}^k`: all of
/// `0..=2k` for `l >= 2`, only the even ones for `l = 1`.
fn achievable_weights(params: RingParams, k: usize) -> impl Iterator<Item = u64> {
    let stride = if params.l() == 1 { 2 } else { 1 };
    (0..=2 * k as u64).step_by(stride)
}

fn eval_min_max(u: &RingVector, w: usize, s: usize) -> Value {
    let blocks: Vec<&[u32]> = u.coords().chunks(s).collect();
    debug_assert_eq!(blocks.len(), w);
    let mut amin = 0usize;
    let mut amax = 0usize;
    for i in 1..w {
        if blocks[i] < blocks[amin] {
            amin = i;
        }
        // ties move the maximum to the later block, matching the block
        // order that ranks equal blocks by ascending index
        if blocks[i] >= blocks[amax] {
            amax = i;
        }
    }
    Value::Pair(amin as u32 + 1, amax as u32 + 1)
}

pub(crate) fn parse_coords(s: &str) -> Result<Vec<u32>> {
    s.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|tok| !tok.is_empty())
        .map(|tok| {
            tok.parse::<u32>()
                .map_err(|_| Error::Parse(format!("bad residue {tok:?}")))
        })
        .collect()
}

/// Convenience: a `HashMap` from value to image position.
pub fn image_positions(f: &FunctionSpec) -> HashMap<Value, usize> {
    f.image()
        .iter()
        .enumerate()
        .map(|(i, v)| (v.clone(), i))
        .collect()
}
