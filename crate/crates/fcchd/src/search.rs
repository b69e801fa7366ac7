//! Construction and verification of codes with irregular pairwise
//! distance requirements: a greedy builder, the analytic length
//! sufficient for it, and an exact branch-and-bound solver for the
//! minimum length.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use num_bigint::BigUint;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::matrix::{check_permutation, DistanceMatrix};
use crate::ring::{ball_volume, vector_at, vector_rank, RingParams, RingVector};

/// An ordered list of codewords of common length `r`; the order matches
/// the rows of the matrix the code was built against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrregularCode {
    params: RingParams,
    r: usize,
    words: Vec<RingVector>,
}

impl IrregularCode {
    pub fn new(params: RingParams, r: usize, words: Vec<RingVector>) -> Result<Self> {
        for w in &words {
            if w.len() != r || w.params() != params {
                return Err(Error::ShapeMismatch(format!(
                    "codeword {:?} does not have length {r} over l={}",
                    w.coords(),
                    params.l()
                )));
            }
        }
        Ok(IrregularCode { params, r, words })
    }

    pub fn params(&self) -> RingParams {
        self.params
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[RingVector] {
        &self.words
    }

    /// Text form: a `l r M` header, then one codeword per line.
    pub fn write_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.params.l(), self.r, self.words.len());
        for w in &self.words {
            let row: Vec<String> = w.coords().iter().map(|c| c.to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty code file".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse(format!(
                "code header must be `l r M`, got {header:?}"
            )));
        }
        let l: u32 = fields[0]
            .parse()
            .map_err(|_| Error::Parse(format!("bad l in {header:?}")))?;
        let r: usize = fields[1]
            .parse()
            .map_err(|_| Error::Parse(format!("bad r in {header:?}")))?;
        let m: usize = fields[2]
            .parse()
            .map_err(|_| Error::Parse(format!("bad M in {header:?}")))?;
        let params = RingParams::new(l)?;
        let mut words = Vec::with_capacity(m);
        for _ in 0..m {
            // rows of a zero-length code are legitimately empty lines
            let line = lines.next().unwrap_or("");
            let coords = crate::function::parse_coords(line)?;
            words.push(RingVector::new(params, coords)?);
        }
        IrregularCode::new(params, r, words)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchStatus {
    Found,
    Exhausted,
    BudgetExceeded,
}

/// What a construction or search attempt produced.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub status: SearchStatus,
    pub code: Option<IrregularCode>,
    pub r_tried: usize,
    pub nodes_visited: u64,
}

/// How the greedy builder scans for the next codeword.
#[derive(Debug, Clone, Copy)]
pub enum Strategy {
    Lexicographic,
    /// Seeded sampling first, full lexicographic scan as fallback.
    SeededRandom { seed: u64, samples: u64 },
}

/// Caps shared by the iterative searches.
#[derive(Debug, Clone, Copy)]
pub struct SearchLimits {
    pub r_cap: usize,
    pub node_budget: Option<u64>,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            r_cap: 64,
            node_budget: None,
        }
    }
}

/// Progress hook: `(current r, nodes visited so far)`.
pub type ProgressFn = dyn Fn(usize, u64) + Sync;

/// Checks `d_h(p_i, p_j) >= D_ij` under the given codeword order, or,
/// with `try_permutations` (orders of at most 9 codewords), under some
/// order. Returns the first violating pair of the given order.
pub fn verify_irregular_code(
    code: &IrregularCode,
    d: &DistanceMatrix,
    try_permutations: bool,
) -> Result<(bool, Option<(usize, usize)>)> {
    let m = d.order();
    if code.len() != m {
        return Err(Error::ShapeMismatch(format!(
            "code has {} words, matrix order is {m}",
            code.len()
        )));
    }
    let params = code.params();
    let violation = |order: &[usize]| -> Option<(usize, usize)> {
        for i in 0..m {
            for j in 0..i {
                let req = d.get(i, j);
                if req == 0 {
                    continue;
                }
                let a = code.words[order[i]].coords();
                let b = code.words[order[j]].coords();
                if !crate::ring::hom_distance_at_least(a, b, params, req) {
                    return Some((j, i));
                }
            }
        }
        None
    };
    let identity: Vec<usize> = (0..m).collect();
    let given = violation(&identity);
    if given.is_none() {
        return Ok((true, None));
    }
    if !try_permutations {
        return Ok((false, given));
    }
    if m > 9 {
        return Err(Error::BudgetExceeded(format!(
            "order-existential verification caps at 9 codewords, got {m}"
        )));
    }
    let mut order = identity;
    let mut found = false;
    permute(&mut order, m, &mut |perm| {
        if violation(perm).is_none() {
            found = true;
            true
        } else {
            false
        }
    });
    if found {
        Ok((true, None))
    } else {
        Ok((false, given))
    }
}

/// Heap's algorithm; `visit` returns true to stop early.
fn permute(items: &mut [usize], n: usize, visit: &mut dyn FnMut(&[usize]) -> bool) -> bool {
    if n <= 1 {
        return visit(items);
    }
    for i in 0..n {
        if permute(items, n - 1, visit) {
            return true;
        }
        if i < n - 1 {
            if n % 2 == 0 {
                items.swap(i, n - 1);
            } else {
                items.swap(0, n - 1);
            }
        }
    }
    false
}

/// Greedy construction at fixed length `r`: rows are filled in `perm`
/// order, each with the first scanned vector far enough from all
/// previously placed rows.
pub fn greedy_construct(
    d: &DistanceMatrix,
    r: usize,
    perm: &[usize],
    strategy: Strategy,
    params: RingParams,
) -> Result<SearchOutcome> {
    let m = d.order();
    check_permutation(perm, m)?;
    let space = crate::ring::space_size(params, r).ok_or_else(|| {
        Error::BudgetExceeded(format!("greedy scan space 2^{} is unreasonable", params.l() as u64 * r as u64))
    })?;
    let mut placed: Vec<Option<RingVector>> = vec![None; m];
    let mut nodes = 0u64;
    for (step, &row) in perm.iter().enumerate() {
        let earlier = &perm[..step];
        let admissible = |cand: &RingVector, nodes: &mut u64| -> bool {
            *nodes += 1;
            earlier.iter().all(|&prev| {
                let req = d.get(row, prev);
                req == 0
                    || crate::ring::hom_distance_at_least(
                        cand.coords(),
                        placed[prev].as_ref().expect("placed earlier").coords(),
                        params,
                        req,
                    )
            })
        };
        let mut chosen = None;
        if let Strategy::SeededRandom { seed, samples } = strategy {
            use rand::{Rng, SeedableRng};
            let mut rng =
                rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ (step as u64).wrapping_mul(0x9E3779B97F4A7C15));
            for _ in 0..samples {
                let cand = vector_at(params, r, rng.gen_range(0..space));
                if admissible(&cand, &mut nodes) {
                    chosen = Some(cand);
                    break;
                }
            }
        }
        if chosen.is_none() {
            for rank in 0..space {
                let cand = vector_at(params, r, rank);
                if admissible(&cand, &mut nodes) {
                    chosen = Some(cand);
                    break;
                }
            }
        }
        match chosen {
            Some(cand) => placed[row] = Some(cand),
            None => {
                return Ok(SearchOutcome {
                    status: SearchStatus::Exhausted,
                    code: None,
                    r_tried: r,
                    nodes_visited: nodes,
                })
            }
        }
    }
    let words: Vec<RingVector> = placed.into_iter().map(|w| w.unwrap()).collect();
    Ok(SearchOutcome {
        status: SearchStatus::Found,
        code: Some(IrregularCode::new(params, r, words)?),
        r_tried: r,
        nodes_visited: nodes,
    })
}

/// Smallest length at which the volume condition
/// `2^(l r) > max_j sum_{i<j} V(r, D[perm_i][perm_j] - 1)` certifies the
/// greedy construction; `None` if it stays unsatisfied up to the cap.
pub fn analytic_min_length(
    d: &DistanceMatrix,
    perm: &[usize],
    params: RingParams,
) -> Result<Option<usize>> {
    let m = d.order();
    check_permutation(perm, m)?;
    let cap = generous_r_cap(m, d.max_entry());
    for r in 0..=cap {
        let space = BigUint::from(params.modulus()).pow(r as u32);
        let worst = (0..m)
            .map(|j| {
                (0..j)
                    .map(|i| {
                        let req = d.get(perm[i], perm[j]);
                        ball_volume(r, req as i64 - 1, params)
                    })
                    .sum::<BigUint>()
            })
            .max()
            .unwrap_or_else(BigUint::zero);
        if space > worst {
            return Ok(Some(r));
        }
    }
    Ok(None)
}

/// A length that provably satisfies the volume condition for any matrix
/// with the given order and maximum entry.
fn generous_r_cap(m: usize, max_entry: u64) -> usize {
    let m = m.max(1) as f64;
    let d = max_entry.max(1) as f64;
    (((m.ln() + d) / (1.0 - std::f64::consts::LN_2)).ceil() as usize) + 2
}

/// Result of [`greedy_min_length`]: the constructed outcome plus the
/// analytic sufficient length for the same permutation.
#[derive(Debug, Clone)]
pub struct GreedyMinLength {
    pub outcome: SearchOutcome,
    pub analytic_r: Option<usize>,
}

/// Increments `r` from the averaging lower bound until the greedy
/// construction succeeds.
pub fn greedy_min_length(
    d: &DistanceMatrix,
    perm: &[usize],
    strategy: Strategy,
    params: RingParams,
    limits: SearchLimits,
) -> Result<GreedyMinLength> {
    let analytic_r = analytic_min_length(d, perm, params)?;
    let mut nodes = 0u64;
    let start = crate::bounds::plotkin_lower(d) as usize;
    for r in start..=limits.r_cap {
        let outcome = greedy_construct(d, r, perm, strategy, params)?;
        nodes += outcome.nodes_visited;
        if outcome.status == SearchStatus::Found {
            return Ok(GreedyMinLength {
                outcome: SearchOutcome {
                    nodes_visited: nodes,
                    ..outcome
                },
                analytic_r,
            });
        }
        if let Some(budget) = limits.node_budget {
            if nodes > budget {
                return Ok(GreedyMinLength {
                    outcome: SearchOutcome {
                        status: SearchStatus::BudgetExceeded,
                        code: None,
                        r_tried: r,
                        nodes_visited: nodes,
                    },
                    analytic_r,
                });
            }
        }
    }
    Ok(GreedyMinLength {
        outcome: SearchOutcome {
            status: SearchStatus::BudgetExceeded,
            code: None,
            r_tried: limits.r_cap,
            nodes_visited: nodes,
        },
        analytic_r,
    })
}

/// Packed-codeword helper for the exact search: one `u64` per codeword,
/// `l` bits per coordinate, numeric order equal to lexicographic order.
struct Packed {
    l: u32,
    r: usize,
    mask: u64,
    modulus: u64,
    wtab: Vec<u8>,
}

impl Packed {
    fn new(params: RingParams, r: usize) -> Self {
        let modulus = params.modulus() as u64;
        let wtab = (0..params.modulus())
            .map(|x| crate::ring::homw(x, params.half()) as u8)
            .collect();
        Packed {
            l: params.l(),
            r,
            mask: modulus - 1,
            modulus,
            wtab,
        }
    }

    #[inline]
    fn dist(&self, a: u64, b: u64) -> u64 {
        let (mut x, mut y) = (a, b);
        let mut acc = 0u64;
        for _ in 0..self.r {
            let diff = ((x & self.mask) + self.modulus - (y & self.mask)) & self.mask;
            acc += self.wtab[diff as usize] as u64;
            x >>= self.l;
            y >>= self.l;
        }
        acc
    }

    #[inline]
    fn weight(&self, a: u64) -> u64 {
        self.dist(a, 0)
    }
}

enum Attempt {
    Found(Vec<u64>),
    Exhausted,
    Budget,
}

/// Exact minimum length for a requirement matrix, by depth-first search
/// over codeword assignments with the first codeword pinned to zero
/// (distances are translation invariant) and the second reduced to a
/// canonical form under coordinate permutation and per-coordinate unit
/// scaling. Candidates are tried by increasing weight, then
/// lexicographically, so found witnesses are deterministic.
pub fn exact_min_length(
    d: &DistanceMatrix,
    params: RingParams,
    limits: SearchLimits,
    progress: Option<&ProgressFn>,
) -> Result<SearchOutcome> {
    let m = d.order();
    if m == 0 {
        return Err(Error::InvalidInput("empty requirement matrix".into()));
    }
    let nodes = AtomicU64::new(0);
    if m == 1 {
        return Ok(SearchOutcome {
            status: SearchStatus::Found,
            code: Some(IrregularCode::new(params, 0, vec![RingVector::zero(params, 0)])?),
            r_tried: 0,
            nodes_visited: 0,
        });
    }
    let start = (crate::bounds::plotkin_lower(d) as usize).max(d.max_entry().div_ceil(2) as usize);
    for r in start..=limits.r_cap {
        if params.l() as u64 * r as u64 > 26 {
            return Err(Error::BudgetExceeded(format!(
                "exact search space 2^{} at r={r} is out of reach",
                params.l() as u64 * r as u64
            )));
        }
        if let Some(hook) = progress {
            hook(r, nodes.load(Ordering::Relaxed));
        }
        match attempt_length(d, params, r, &nodes, limits.node_budget) {
            Attempt::Found(packed) => {
                let words = packed
                    .iter()
                    .map(|&code| vector_at(params, r, code))
                    .collect();
                return Ok(SearchOutcome {
                    status: SearchStatus::Found,
                    code: Some(IrregularCode::new(params, r, words)?),
                    r_tried: r,
                    nodes_visited: nodes.into_inner(),
                });
            }
            Attempt::Exhausted => continue,
            Attempt::Budget => {
                return Ok(SearchOutcome {
                    status: SearchStatus::BudgetExceeded,
                    code: None,
                    r_tried: r,
                    nodes_visited: nodes.into_inner(),
                })
            }
        }
    }
    Ok(SearchOutcome {
        status: SearchStatus::BudgetExceeded,
        code: None,
        r_tried: limits.r_cap,
        nodes_visited: nodes.into_inner(),
    })
}

fn attempt_length(
    d: &DistanceMatrix,
    params: RingParams,
    r: usize,
    nodes: &AtomicU64,
    budget: Option<u64>,
) -> Attempt {
    let m = d.order();
    // a coordinate contributes at most 2, so any requirement above 2r is hopeless
    if d.max_entry() > 2 * r as u64 {
        return Attempt::Exhausted;
    }
    let packed = Packed::new(params, r);
    let space = 1u64 << (params.l() as u64 * r as u64);
    let mut candidates: Vec<u64> = (0..space).collect();
    candidates.sort_by_key(|&c| (packed.weight(c), c));
    let canonical = canonical_second_words(params, r, &packed);
    let req: Vec<Vec<u64>> = (0..m)
        .map(|i| (0..m).map(|j| d.get(i, j)).collect())
        .collect();

    let over_budget = AtomicBool::new(false);
    let count_node = |nodes: &AtomicU64| -> bool {
        let n = nodes.fetch_add(1, Ordering::Relaxed);
        if let Some(cap) = budget {
            if n >= cap {
                over_budget.store(true, Ordering::Relaxed);
                return false;
            }
        }
        true
    };

    let search_below = |second: u64| -> Option<Vec<u64>> {
        if !count_node(nodes) {
            return None;
        }
        if packed.weight(second) < req[1][0] {
            return None;
        }
        let mut assigned = vec![0u64, second];
        if m == 2 {
            return Some(assigned);
        }
        dfs(&mut assigned, m, &candidates, &packed, &req, nodes, &count_node)
            .then(|| assigned.clone())
    };

    let found = first_success(&canonical, &search_below);
    match found {
        Some(code) => Attempt::Found(code),
        None if over_budget.load(Ordering::Relaxed) => Attempt::Budget,
        None => Attempt::Exhausted,
    }
}

fn dfs(
    assigned: &mut Vec<u64>,
    m: usize,
    candidates: &[u64],
    packed: &Packed,
    req: &[Vec<u64>],
    nodes: &AtomicU64,
    count_node: &dyn Fn(&AtomicU64) -> bool,
) -> bool {
    let level = assigned.len();
    'next: for &cand in candidates {
        for (j, &prev) in assigned.iter().enumerate() {
            let need = req[level][j];
            if need != 0 && packed.dist(cand, prev) < need {
                continue 'next;
            }
        }
        if !count_node(nodes) {
            return false;
        }
        assigned.push(cand);
        if assigned.len() == m
            || dfs(assigned, m, candidates, packed, req, nodes, count_node)
        {
            return true;
        }
        assigned.pop();
    }
    false
}

/// Second codewords up to symmetry: coordinates sorted nondecreasing and
/// each a power of two or zero (the orbit representatives under unit
/// scaling), ordered by weight then value.
fn canonical_second_words(params: RingParams, r: usize, packed: &Packed) -> Vec<u64> {
    let mut reps: Vec<u64> = vec![0];
    reps.extend((0..params.l()).map(|j| 1u64 << j));
    let mut out = Vec::new();
    let mut stack = vec![0u64; r];
    fn rec(
        slot: usize,
        min_rep: usize,
        reps: &[u64],
        stack: &mut Vec<u64>,
        l: u32,
        r: usize,
        out: &mut Vec<u64>,
    ) {
        if slot == r {
            let mut code = 0u64;
            for &c in stack.iter() {
                code = (code << l) | c;
            }
            out.push(code);
            return;
        }
        for (idx, &rep) in reps.iter().enumerate().skip(min_rep) {
            stack[slot] = rep;
            rec(slot + 1, idx, reps, stack, l, r, out);
        }
    }
    rec(0, 0, &reps, &mut stack, params.l(), r, &mut out);
    out.sort_by_key(|&c| (packed.weight(c), c));
    out
}

#[cfg(feature = "parallel")]
fn first_success(
    canonical: &[u64],
    search: &(dyn Fn(u64) -> Option<Vec<u64>> + Sync),
) -> Option<Vec<u64>> {
    use rayon::prelude::*;
    canonical.par_iter().find_map_first(|&second| search(second))
}

#[cfg(not(feature = "parallel"))]
fn first_success(
    canonical: &[u64],
    search: &dyn Fn(u64) -> Option<Vec<u64>>,
) -> Option<Vec<u64>> {
    canonical.iter().find_map(|&second| search(second))
}

/// A code of `m` words with pairwise homogeneous distance at least
/// `dist`, built greedily; its length never exceeds the
/// exponential-moment ceiling for `(m, dist)`.
pub fn equal_distance_code(m: usize, dist: u64, params: RingParams) -> Result<IrregularCode> {
    if m == 0 {
        return Err(Error::InvalidInput("need at least one codeword".into()));
    }
    let d = DistanceMatrix::constant(m, dist);
    let perm: Vec<usize> = (0..m).collect();
    let cap = generous_r_cap(m, dist);
    let result = greedy_min_length(
        &d,
        &perm,
        Strategy::Lexicographic,
        params,
        SearchLimits {
            r_cap: cap,
            node_budget: None,
        },
    )?;
    result.outcome.code.ok_or_else(|| {
        Error::BudgetExceeded(format!(
            "greedy failed to reach an equal-distance code by r={cap}"
        ))
    })
}

/// Rank-based helper shared with tests: `vector_rank` of every codeword.
pub fn code_ranks(code: &IrregularCode) -> Vec<u64> {
    code.words().iter().map(vector_rank).collect()
}
