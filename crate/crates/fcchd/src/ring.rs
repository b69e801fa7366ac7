//! Arithmetic over the residue ring `Z_{2^l}`: homogeneous, Hamming and
//! Rosenbloom-Tsfasman weights, the induced distances, and exact ball volumes.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Largest supported ring exponent.
pub const MAX_RING_EXPONENT: u32 = 16;

/// Parameters of the ring `Z_{2^l}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RingParams {
    l: u32,
}

impl RingParams {
    pub fn new(l: u32) -> Result<Self> {
        if l == 0 || l > MAX_RING_EXPONENT {
            return Err(Error::InvalidInput(format!(
                "ring exponent l must be in 1..={MAX_RING_EXPONENT}, got {l}"
            )));
        }
        Ok(RingParams { l })
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    /// `2^l`.
    pub fn modulus(&self) -> u32 {
        1 << self.l
    }

    /// The unique element of weight two, `2^(l-1)`.
    pub fn half(&self) -> u32 {
        1 << (self.l - 1)
    }

    fn mask(&self) -> u32 {
        self.modulus() - 1
    }
}

/// A fixed-length vector of residues modulo `2^l`.
///
/// Vectors are immutable once constructed; the search and verification
/// modules hash and compare them heavily.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RingVector {
    coords: Vec<u32>,
    params: RingParams,
}

impl RingVector {
    pub fn new(params: RingParams, coords: Vec<u32>) -> Result<Self> {
        let m = params.modulus();
        if let Some(&bad) = coords.iter().find(|&&c| c >= m) {
            return Err(Error::InvalidInput(format!(
                "coordinate {bad} is out of range for modulus {m}"
            )));
        }
        Ok(RingVector { coords, params })
    }

    pub fn zero(params: RingParams, n: usize) -> Self {
        RingVector {
            coords: vec![0; n],
            params,
        }
    }

    pub fn params(&self) -> RingParams {
        self.params
    }

    pub fn coords(&self) -> &[u32] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    fn check_shape(&self, other: &RingVector) -> Result<()> {
        if self.params != other.params {
            return Err(Error::ShapeMismatch(format!(
                "ring exponents differ: {} vs {}",
                self.params.l, other.params.l
            )));
        }
        if self.coords.len() != other.coords.len() {
            return Err(Error::ShapeMismatch(format!(
                "lengths differ: {} vs {}",
                self.coords.len(),
                other.coords.len()
            )));
        }
        Ok(())
    }

    /// Componentwise difference modulo `2^l`.
    pub fn sub(&self, other: &RingVector) -> Result<RingVector> {
        self.check_shape(other)?;
        let m = self.params.modulus();
        let mask = self.params.mask();
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(&a, &b)| (a + m - b) & mask)
            .collect();
        Ok(RingVector {
            coords,
            params: self.params,
        })
    }

    /// Componentwise sum modulo `2^l`.
    pub fn add(&self, other: &RingVector) -> Result<RingVector> {
        self.check_shape(other)?;
        let mask = self.params.mask();
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(&a, &b)| (a + b) & mask)
            .collect();
        Ok(RingVector {
            coords,
            params: self.params,
        })
    }

    /// Concatenation `(self, other)`; both halves must share the ring.
    pub fn concat(&self, other: &RingVector) -> Result<RingVector> {
        if self.params != other.params {
            return Err(Error::ShapeMismatch(format!(
                "ring exponents differ: {} vs {}",
                self.params.l, other.params.l
            )));
        }
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        Ok(RingVector {
            coords,
            params: self.params,
        })
    }
}

/// The weight functions supported on `Z_{2^l}` vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightKind {
    Homogeneous,
    Hamming,
    RosenbloomTsfasman,
}

/// Scalar homogeneous weight: 0 for zero, 2 for `2^(l-1)`, 1 otherwise.
///
/// For `l = 1` the only nonzero element is `2^(l-1) = 1`, so nonzero
/// scalars all weigh 2 and the weight image degenerates to `{0, 2}`.
pub fn hom_weight_scalar(x: u32, params: RingParams) -> Result<u64> {
    if x >= params.modulus() {
        return Err(Error::InvalidInput(format!(
            "residue {x} out of range for modulus {}",
            params.modulus()
        )));
    }
    Ok(homw(x, params.half()))
}

#[inline]
pub(crate) fn homw(x: u32, half: u32) -> u64 {
    if x == 0 {
        0
    } else if x == half {
        2
    } else {
        1
    }
}

/// Coordinate-sum (or, for Rosenbloom-Tsfasman, last-nonzero-index) weight.
pub fn weight(u: &RingVector, kind: WeightKind) -> u64 {
    let half = u.params.half();
    match kind {
        WeightKind::Homogeneous => u.coords.iter().map(|&c| homw(c, half)).sum(),
        WeightKind::Hamming => u.coords.iter().filter(|&&c| c != 0).count() as u64,
        WeightKind::RosenbloomTsfasman => u
            .coords
            .iter()
            .rposition(|&c| c != 0)
            .map_or(0, |i| i as u64 + 1),
    }
}

/// Distance induced by a weight: `weight(u - v)`.
pub fn distance(u: &RingVector, v: &RingVector, kind: WeightKind) -> Result<u64> {
    u.check_shape(v)?;
    match kind {
        WeightKind::Homogeneous => {
            Ok(hom_distance_slices(&u.coords, &v.coords, u.params))
        }
        _ => Ok(weight(&u.sub(v)?, kind)),
    }
}

#[inline]
pub(crate) fn hom_distance_slices(a: &[u32], b: &[u32], params: RingParams) -> u64 {
    let m = params.modulus();
    let mask = params.mask();
    let half = params.half();
    a.iter()
        .zip(b)
        .map(|(&x, &y)| homw((x + m - y) & mask, half))
        .sum()
}

/// Like `hom_distance_slices` but stops as soon as the running sum
/// reaches `cap`; the verifier only needs to know whether a pair is
/// below its requirement.
#[inline]
pub(crate) fn hom_distance_at_least(a: &[u32], b: &[u32], params: RingParams, cap: u64) -> bool {
    let m = params.modulus();
    let mask = params.mask();
    let half = params.half();
    let mut acc = 0u64;
    for (&x, &y) in a.iter().zip(b) {
        acc += homw((x + m - y) & mask, half);
        if acc >= cap {
            return true;
        }
    }
    acc >= cap
}

/// Counts of vectors in `Z_{2^l}^n` of each exact homogeneous weight
/// `0..=min(max_w, 2n)`, by dynamic programming over coordinates.
///
/// Per coordinate the weight multiset is `{0: 1 element, 1: 2^l - 2
/// elements, 2: 1 element}`; for `l = 1` the weight-1 class is empty.
pub fn sphere_sizes(n: usize, max_w: u64, params: RingParams) -> Vec<BigUint> {
    let cap = max_w.min(2 * n as u64) as usize;
    let ones = BigUint::from(params.modulus() - 2);
    let mut dp = vec![BigUint::zero(); cap + 1];
    dp[0] = BigUint::one();
    for _ in 0..n {
        let mut next = vec![BigUint::zero(); cap + 1];
        for w in 0..=cap {
            if dp[w].is_zero() {
                continue;
            }
            next[w] += &dp[w];
            if w + 1 <= cap {
                next[w + 1] += &dp[w] * &ones;
            }
            if w + 2 <= cap {
                next[w + 2] += &dp[w];
            }
        }
        dp = next;
    }
    dp
}

/// Exact number of vectors in `Z_{2^l}^r` of homogeneous weight at most `d`.
///
/// Negative radii count nothing, so requirement entries of zero stay
/// evaluatable as `ball_volume(r, entry - 1)`.
pub fn ball_volume(r: usize, d: i64, params: RingParams) -> BigUint {
    if d < 0 {
        return BigUint::zero();
    }
    sphere_sizes(r, d as u64, params).iter().sum()
}

/// Exponential-moment upper bound `(e^(lambda*rho) * L(lambda))^r` on the
/// size of the homogeneous ball of normalized radius `rho`, where
/// `L(lambda) = 1 + (2^l - 2) e^(-lambda) + e^(-2 lambda)`.
pub fn entropy_ball_bound(r: usize, rho: f64, lambda: f64, params: RingParams) -> Result<f64> {
    if lambda < 0.0 {
        return Err(Error::InvalidInput(format!(
            "lambda must be nonnegative, got {lambda}"
        )));
    }
    let m = params.modulus() as f64;
    let factor = (lambda * rho).exp()
        * (1.0 + (m - 2.0) * (-lambda).exp() + (-2.0 * lambda).exp());
    Ok(factor.powi(r as i32))
}

/// Number of vectors in `Z_{2^l}^n`, when it fits in a `u64`.
pub fn space_size(params: RingParams, n: usize) -> Option<u64> {
    let bits = params.l as u64 * n as u64;
    if bits >= 64 {
        None
    } else {
        Some(1u64 << bits)
    }
}

/// Vector with the given rank in lexicographic order (first coordinate
/// most significant).
pub fn vector_at(params: RingParams, n: usize, mut rank: u64) -> RingVector {
    let m = params.modulus() as u64;
    let mut coords = vec![0u32; n];
    for slot in coords.iter_mut().rev() {
        *slot = (rank % m) as u32;
        rank /= m;
    }
    RingVector {
        coords,
        params,
    }
}

/// Rank of a vector in the order used by `vector_at`.
pub fn vector_rank(u: &RingVector) -> u64 {
    let m = u.params.modulus() as u64;
    u.coords.iter().fold(0u64, |acc, &c| acc * m + c as u64)
}

/// Lexicographic iterator over all of `Z_{2^l}^n`. Panics if the space
/// does not fit in a `u64` rank; callers budget-check first.
pub fn enumerate_vectors(params: RingParams, n: usize) -> impl Iterator<Item = RingVector> {
    let total = space_size(params, n).expect("vector space too large to enumerate");
    (0..total).map(move |rank| vector_at(params, n, rank))
}

/// All vectors of `Z_{2^l}^n` with homogeneous weight at most `radius`,
/// in lexicographic order. The caller is responsible for budgeting; the
/// result has exactly `ball_volume(n, radius)` entries.
pub fn enumerate_ball(params: RingParams, n: usize, radius: u64) -> Vec<RingVector> {
    let half = params.half();
    let m = params.modulus();
    let mut out = Vec::new();
    let mut coords = vec![0u32; n];
    fn rec(
        coords: &mut Vec<u32>,
        pos: usize,
        left: u64,
        m: u32,
        half: u32,
        params: RingParams,
        out: &mut Vec<RingVector>,
    ) {
        if pos == coords.len() {
            out.push(RingVector {
                coords: coords.clone(),
                params,
            });
            return;
        }
        for c in 0..m {
            let w = homw(c, half);
            if w <= left {
                coords[pos] = c;
                rec(coords, pos + 1, left - w, m, half, params, out);
            }
        }
        coords[pos] = 0;
    }
    rec(&mut coords, 0, radius, m, half, params, &mut out);
    out
}
