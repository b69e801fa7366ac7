//! Pairwise distance-requirement matrices: the message-indexed
//! requirement matrix, the image-indexed function-distance matrix, and
//! the representative-vector families that make the two coincide.

use crate::error::{Error, Result};
use crate::function::{FunctionKind, FunctionSpec, Value};
use crate::ring::{distance, hom_distance_slices, RingParams, RingVector, WeightKind};

/// A symmetric nonnegative-integer matrix of pairwise distance
/// requirements, with one label per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    order: usize,
    entries: Vec<u64>,
    labels: Vec<String>,
}

impl DistanceMatrix {
    pub fn new(order: usize, entries: Vec<u64>, labels: Vec<String>) -> Result<Self> {
        if entries.len() != order * order {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for order {}",
                entries.len(),
                order
            )));
        }
        if labels.len() != order {
            return Err(Error::ShapeMismatch(format!(
                "{} labels for order {}",
                labels.len(),
                order
            )));
        }
        let m = DistanceMatrix {
            order,
            entries,
            labels,
        };
        for i in 0..order {
            if m.get(i, i) != 0 {
                return Err(Error::InvalidInput(format!("nonzero diagonal at {i}")));
            }
            for j in 0..i {
                if m.get(i, j) != m.get(j, i) {
                    return Err(Error::InvalidInput(format!(
                        "asymmetric entries at ({i},{j})"
                    )));
                }
            }
        }
        Ok(m)
    }

    /// Constant requirement `d` off the diagonal.
    pub fn constant(order: usize, d: u64) -> Self {
        let mut entries = vec![d; order * order];
        for i in 0..order {
            entries[i * order + i] = 0;
        }
        DistanceMatrix {
            order,
            entries,
            labels: (1..=order).map(|i| format!("row{i}")).collect(),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.entries[i * self.order + j]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    pub fn max_entry(&self) -> u64 {
        self.entries.iter().copied().max().unwrap_or(0)
    }

    pub fn sum(&self) -> u128 {
        self.entries.iter().map(|&e| e as u128).sum()
    }

    pub fn is_constant(&self) -> Option<u64> {
        if self.order < 2 {
            return Some(0);
        }
        let d = self.get(0, 1);
        for i in 0..self.order {
            for j in 0..self.order {
                if i != j && self.get(i, j) != d {
                    return None;
                }
            }
        }
        Some(d)
    }

    /// Applies the same permutation to rows and columns (and labels).
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.order)?;
        let mut entries = vec![0u64; self.order * self.order];
        for i in 0..self.order {
            for j in 0..self.order {
                entries[i * self.order + j] = self.get(perm[i], perm[j]);
            }
        }
        Ok(DistanceMatrix {
            order: self.order,
            entries,
            labels: perm.iter().map(|&i| self.labels[i].clone()).collect(),
        })
    }

    /// Text form: one `# label` line per row, the order, then the rows.
    pub fn write_text(&self) -> String {
        let mut out = String::new();
        for label in &self.labels {
            out.push_str(&format!("# {label}\n"));
        }
        out.push_str(&format!("{}\n", self.order));
        for i in 0..self.order {
            let row: Vec<String> = (0..self.order).map(|j| self.get(i, j).to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut labels = Vec::new();
        let mut body = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                labels.push(rest.trim().to_string());
            } else {
                body.push(line);
            }
        }
        let order: usize = body
            .first()
            .ok_or_else(|| Error::Parse("empty matrix file".into()))?
            .parse()
            .map_err(|_| Error::Parse(format!("bad order line {:?}", body[0])))?;
        if body.len() != order + 1 {
            return Err(Error::Parse(format!(
                "expected {} rows, found {}",
                order,
                body.len() - 1
            )));
        }
        let mut entries = Vec::with_capacity(order * order);
        for row in &body[1..] {
            let vals: Vec<u64> = row
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<u64>()
                        .map_err(|_| Error::Parse(format!("bad entry {tok:?}")))
                })
                .collect::<Result<_>>()?;
            if vals.len() != order {
                return Err(Error::Parse(format!(
                    "row has {} entries, expected {order}",
                    vals.len()
                )));
            }
            entries.extend(vals);
        }
        if labels.is_empty() {
            labels = (1..=order).map(|i| format!("row{i}")).collect();
        }
        DistanceMatrix::new(order, entries, labels)
    }
}

pub(crate) fn check_permutation(perm: &[usize], order: usize) -> Result<()> {
    if perm.len() != order {
        return Err(Error::ShapeMismatch(format!(
            "permutation of length {} for order {}",
            perm.len(),
            order
        )));
    }
    let mut seen = vec![false; order];
    for &p in perm {
        if p >= order || seen[p] {
            return Err(Error::InvalidInput(format!("invalid permutation {perm:?}")));
        }
        seen[p] = true;
    }
    Ok(())
}

fn positive_part(x: i64) -> u64 {
    x.max(0) as u64
}

/// Requirement matrix over explicit messages: entry `(i,j)` is
/// `max(2t+1 - d_h(u_i, u_j), 0)` when the function values differ, else 0.
pub fn requirement_matrix(
    f: &FunctionSpec,
    t: u64,
    msgs: &[RingVector],
) -> Result<DistanceMatrix> {
    if t == 0 {
        return Err(Error::InvalidInput("error budget t must be positive".into()));
    }
    let m = msgs.len();
    for (i, u) in msgs.iter().enumerate() {
        for v in &msgs[..i] {
            if u == v {
                return Err(Error::InvalidInput(format!(
                    "duplicate message {:?}",
                    u.coords()
                )));
            }
        }
    }
    let values: Vec<Value> = msgs.iter().map(|u| f.eval(u)).collect::<Result<_>>()?;
    let mut entries = vec![0u64; m * m];
    for i in 0..m {
        for j in 0..i {
            let e = if values[i] != values[j] {
                let d = distance(&msgs[i], &msgs[j], WeightKind::Homogeneous)?;
                positive_part(2 * t as i64 + 1 - d as i64)
            } else {
                0
            };
            entries[i * m + j] = e;
            entries[j * m + i] = e;
        }
    }
    let labels = msgs
        .iter()
        .map(|u| Value::Word(u.coords().to_vec()).to_string())
        .collect();
    DistanceMatrix::new(m, entries, labels)
}

/// Minimum homogeneous distance between the preimage classes of two
/// values; zero when the values coincide.
///
/// Closed forms are used where the family admits one (`l >= 2`):
/// weight classes are `|i - j|` apart, quantized weight classes
/// `(b - a - 1)*step + 1`, last-nonzero-index classes exactly 1, and
/// identity classes are singleton distances. Everything else scans the
/// preimage classes with an early exit at the global minimum of 1.
pub fn function_distance(f: &FunctionSpec, z1: &Value, z2: &Value, budget_lk: u32) -> Result<u64> {
    for z in [z1, z2] {
        if !f.image().contains(z) {
            return Err(Error::InvalidInput(format!(
                "value {z} is not in the image of {}",
                f.describe()
            )));
        }
    }
    if z1 == z2 {
        return Ok(0);
    }
    if f.params().l() >= 2 {
        match (f.kind(), z1, z2) {
            (FunctionKind::HomWeight, Value::Int(a), Value::Int(b)) => {
                return Ok(a.abs_diff(*b));
            }
            (FunctionKind::WeightDistribution { step }, Value::Int(a), Value::Int(b)) => {
                let (lo, hi) = if a < b { (*a, *b) } else { (*b, *a) };
                return Ok((hi - lo - 1) * step + 1);
            }
            (FunctionKind::RtWeight, _, _) => return Ok(1),
            (FunctionKind::Identity, Value::Word(a), Value::Word(b)) => {
                let u = RingVector::new(f.params(), a.clone())?;
                let v = RingVector::new(f.params(), b.clone())?;
                return distance(&u, &v, WeightKind::Homogeneous);
            }
            _ => {}
        }
    }
    exhaustive_function_distance(f, z1, z2, budget_lk)
}

/// Preimage-scan distance, independent of the closed forms above.
pub fn exhaustive_function_distance(
    f: &FunctionSpec,
    z1: &Value,
    z2: &Value,
    budget_lk: u32,
) -> Result<u64> {
    if z1 == z2 {
        return Ok(0);
    }
    let params = f.params();
    let class1 = f.preimage(z1, budget_lk)?;
    let class2 = f.preimage(z2, budget_lk)?;
    let mut best = u64::MAX;
    'outer: for u in &class1 {
        for v in &class2 {
            let d = hom_distance_slices(u.coords(), v.coords(), params);
            if d < best {
                best = d;
                if best <= 1 {
                    // distinct classes are disjoint, so 1 is the floor
                    break 'outer;
                }
            }
        }
    }
    Ok(best)
}

/// Function-distance matrix over the image order: entry `(i,j)` is
/// `max(2t+1 - d_f(z_i, z_j), 0)` off the diagonal.
pub fn function_distance_matrix(
    f: &FunctionSpec,
    t: u64,
    budget_lk: u32,
) -> Result<DistanceMatrix> {
    if t == 0 {
        return Err(Error::InvalidInput("error budget t must be positive".into()));
    }
    let image = f.image();
    let e = image.len();
    let cells: Vec<(usize, usize)> = (0..e)
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .collect();
    let computed = map_cells(&cells, &|(i, j): &(usize, usize)| {
        function_distance(f, &image[*i], &image[*j], budget_lk)
    })?;
    let mut entries = vec![0u64; e * e];
    for (&(i, j), d) in cells.iter().zip(computed) {
        let entry = positive_part(2 * t as i64 + 1 - d as i64);
        entries[i * e + j] = entry;
        entries[j * e + i] = entry;
    }
    let labels = image.iter().map(|z| z.to_string()).collect();
    DistanceMatrix::new(e, entries, labels)
}

#[cfg(feature = "parallel")]
fn map_cells<T: Sync, U: Send>(
    cells: &[T],
    op: &(dyn Fn(&T) -> Result<U> + Sync),
) -> Result<Vec<U>> {
    use rayon::prelude::*;
    cells.par_iter().map(op).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_cells<T, U>(cells: &[T], op: &dyn Fn(&T) -> Result<U>) -> Result<Vec<U>> {
    cells.iter().map(op).collect()
}

/// One vector per homogeneous weight `0..=2k`, built as `m` ones followed
/// by `s` copies of `2^(l-1)` and zero padding, with `m` maximal subject
/// to `m + 2s = i` and `m + s <= k`. Pairwise distances equal the weight
/// differences, which is what makes the requirement matrix over these
/// vectors coincide with the function-distance matrix of the weight
/// function.
pub fn weight_representatives(k: usize, params: RingParams) -> Result<Vec<RingVector>> {
    if params.l() < 2 {
        return Err(Error::InvalidInput(
            "weight representatives need l >= 2; at l = 1 only even weights occur".into(),
        ));
    }
    if k == 0 {
        return Err(Error::InvalidInput("k must be positive".into()));
    }
    let half = params.half();
    let mut reps = Vec::with_capacity(2 * k + 1);
    for i in 0..=(2 * k) {
        let cap = i.min(2 * k - i);
        // largest m <= cap with the parity of i
        let m = cap - (cap % 2 != i % 2) as usize;
        let s = (i - m) / 2;
        let mut coords = vec![1u32; m];
        coords.extend(std::iter::repeat(half).take(s));
        coords.resize(k, 0);
        reps.push(RingVector::new(params, coords)?);
    }
    Ok(reps)
}

/// Representative messages for each min-max value `(i,j)`, `i != j`, in
/// lexicographic value order: block `i` is all zeros, block `j` ends in
/// `(1,1)`, every other block ends in `(0,1)`.
pub fn minmax_representatives(w: usize, s: usize, params: RingParams) -> Result<Vec<RingVector>> {
    if w < 3 || s < 2 || params.l() < 2 {
        return Err(Error::InvalidInput(format!(
            "min-max representatives need w >= 3, s >= 2, l >= 2; got w={w} s={s} l={}",
            params.l()
        )));
    }
    let mut reps = Vec::with_capacity(w * (w - 1));
    for i in 0..w {
        for j in 0..w {
            if i == j {
                continue;
            }
            let mut coords = Vec::with_capacity(w * s);
            for b in 0..w {
                let mut block = vec![0u32; s];
                if b == i {
                    // all zeros
                } else if b == j {
                    block[s - 2] = 1;
                    block[s - 1] = 1;
                } else {
                    block[s - 1] = 1;
                }
                coords.extend(block);
            }
            reps.push(RingVector::new(params, coords)?);
        }
    }
    Ok(reps)
}

/// True when the requirement matrix over the representatives equals the
/// function-distance matrix under the value correspondence, which
/// certifies that the function's optimal redundancy is attained by the
/// function-distance matrix.
pub fn check_equality_condition(
    f: &FunctionSpec,
    reps: &[RingVector],
    t: u64,
    budget_lk: u32,
) -> Result<bool> {
    let image = f.image();
    if reps.len() != image.len() {
        return Err(Error::InvalidInput(format!(
            "{} representatives for an image of size {}",
            reps.len(),
            image.len()
        )));
    }
    // map image position -> representative position, requiring full coverage
    let mut rep_for_value = vec![None; image.len()];
    for (ri, u) in reps.iter().enumerate() {
        let z = f.eval(u)?;
        let vi = f
            .value_index(&z)
            .ok_or_else(|| Error::InvalidInput(format!("value {z} outside the image")))?;
        if rep_for_value[vi].is_some() {
            return Err(Error::InvalidInput(format!(
                "two representatives share the value {z}"
            )));
        }
        rep_for_value[vi] = Some(ri);
    }
    let perm: Vec<usize> = rep_for_value.into_iter().map(|o| o.unwrap()).collect();
    let req = requirement_matrix(f, t, reps)?.permuted(&perm)?;
    let fun = function_distance_matrix(f, t, budget_lk)?;
    Ok(req.entries() == fun.entries())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{enumerate_vectors, weight};

    fn rp(l: u32) -> RingParams {
        RingParams::new(l).unwrap()
    }

    fn rv(l: u32, coords: &[u32]) -> RingVector {
        RingVector::new(rp(l), coords.to_vec()).unwrap()
    }

    #[test]
    fn requirement_matrix_identity_over_z4() {
        let f = FunctionSpec::identity(rp(2), 1, 24).unwrap();
        let msgs: Vec<RingVector> = enumerate_vectors(rp(2), 1).collect();
        let m = requirement_matrix(&f, 1, &msgs).unwrap();
        let expected = [
            [0, 2, 1, 2],
            [2, 0, 2, 1],
            [1, 2, 0, 2],
            [2, 1, 2, 0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(m.get(i, j), expected[i][j], "({i},{j})");
            }
        }
    }

    #[test]
    fn requirement_matrix_equal_values_and_duplicates() {
        let f = FunctionSpec::hom_weight(rp(2), 2).unwrap();
        // equal weights: all-zero requirements
        let msgs = vec![rv(2, &[1, 0]), rv(2, &[0, 1])];
        let m = requirement_matrix(&f, 3, &msgs).unwrap();
        assert_eq!(m.entries(), &[0, 0, 0, 0]);
        // adjacent weights at distance 1: off-diagonal 2t
        let msgs = vec![rv(2, &[0, 0]), rv(2, &[1, 0])];
        let m = requirement_matrix(&f, 5, &msgs).unwrap();
        assert_eq!(m.get(0, 1), 10);
        let dup = vec![rv(2, &[0, 0]), rv(2, &[0, 0])];
        assert!(requirement_matrix(&f, 1, &dup).is_err());
    }

    #[test]
    fn function_distances_closed_forms() {
        let f = FunctionSpec::hom_weight(rp(2), 3).unwrap();
        assert_eq!(
            function_distance(&f, &Value::Int(1), &Value::Int(4), 24).unwrap(),
            3
        );
        assert_eq!(
            function_distance(&f, &Value::Int(2), &Value::Int(2), 24).unwrap(),
            0
        );
        let f = FunctionSpec::rt_weight(rp(3), 5).unwrap();
        assert_eq!(
            function_distance(&f, &Value::Int(2), &Value::Int(5), 24).unwrap(),
            1
        );
    }

    #[test]
    fn closed_forms_match_exhaustive_scan() {
        for f in [
            FunctionSpec::hom_weight(rp(2), 2).unwrap(),
            FunctionSpec::hom_weight(rp(3), 2).unwrap(),
            FunctionSpec::rt_weight(rp(2), 3).unwrap(),
            FunctionSpec::weight_distribution(rp(2), 4, 3).unwrap(),
            FunctionSpec::identity(rp(2), 2, 24).unwrap(),
        ] {
            for z1 in f.image() {
                for z2 in f.image() {
                    assert_eq!(
                        function_distance(&f, z1, z2, 24).unwrap(),
                        exhaustive_function_distance(&f, z1, z2, 24).unwrap(),
                        "{} {z1} {z2}",
                        f.describe()
                    );
                }
            }
        }
    }

    #[test]
    fn golden_weight_function_matrix() {
        // 7x7 at k=3, t=2
        let f = FunctionSpec::hom_weight(rp(2), 3).unwrap();
        let m = function_distance_matrix(&f, 2, 24).unwrap();
        assert_eq!(m.order(), 7);
        let first_row: Vec<u64> = (0..7).map(|j| m.get(0, j)).collect();
        assert_eq!(first_row, vec![0, 4, 3, 2, 1, 0, 0]);
        for i in 0..7 {
            for j in 0..7 {
                let expect = if i == j {
                    0
                } else {
                    (5i64 - (i as i64 - j as i64).abs()).max(0) as u64
                };
                assert_eq!(m.get(i, j), expect);
            }
        }
    }

    #[test]
    fn rt_matrix_is_constant() {
        let f = FunctionSpec::rt_weight(rp(2), 4).unwrap();
        let m = function_distance_matrix(&f, 3, 24).unwrap();
        assert_eq!(m.order(), 5);
        assert_eq!(m.is_constant(), Some(6));
    }

    #[test]
    fn requirement_entries_dominated_by_function_entries() {
        // d_f(f(u), f(v)) <= d_h(u, v), so requirement entries can only
        // be larger after the clamp; check entrywise on a small case
        let f = FunctionSpec::hom_weight(rp(2), 2).unwrap();
        let t = 2;
        let msgs: Vec<RingVector> = enumerate_vectors(rp(2), 2).collect();
        let fun = function_distance_matrix(&f, t, 24).unwrap();
        for u in &msgs {
            for v in &msgs {
                let zu = f.eval(u).unwrap();
                let zv = f.eval(v).unwrap();
                if zu == zv {
                    continue;
                }
                let df = function_distance(&f, &zu, &zv, 24).unwrap();
                let dh = distance(u, v, WeightKind::Homogeneous).unwrap();
                assert!(df <= dh);
                let i = f.value_index(&zu).unwrap();
                let j = f.value_index(&zv).unwrap();
                let req = (2 * t as i64 + 1 - dh as i64).max(0) as u64;
                assert!(req <= fun.get(i, j));
            }
        }
    }

    #[test]
    fn weight_representatives_structure() {
        let reps = weight_representatives(3, rp(2)).unwrap();
        assert_eq!(reps.len(), 7);
        assert_eq!(reps[2].coords(), &[1, 1, 0]);
        assert_eq!(reps[6].coords(), &[2, 2, 2]);
        for (i, u) in reps.iter().enumerate() {
            assert_eq!(weight(u, WeightKind::Homogeneous), i as u64);
            for (j, v) in reps.iter().enumerate() {
                assert_eq!(
                    distance(u, v, WeightKind::Homogeneous).unwrap(),
                    (i as u64).abs_diff(j as u64)
                );
            }
        }
        assert!(weight_representatives(3, rp(1)).is_err());
    }

    #[test]
    fn minmax_representatives_structure() {
        let reps = minmax_representatives(3, 2, rp(2)).unwrap();
        assert_eq!(reps.len(), 6);
        let f = FunctionSpec::min_max(rp(2), 3, 2, 24).unwrap();
        // labels match evaluation, in image order
        for (rep, z) in reps.iter().zip(f.image()) {
            assert_eq!(&f.eval(rep).unwrap(), z);
        }
        assert_eq!(reps[0].coords(), &[0, 0, 1, 1, 0, 1]);
        // distance pattern: one shared index -> 2, none shared -> 4
        for (a, za) in reps.iter().zip(f.image()) {
            for (b, zb) in reps.iter().zip(f.image()) {
                if za == zb {
                    continue;
                }
                let (Value::Pair(i, j), Value::Pair(i2, j2)) = (za, zb) else {
                    panic!()
                };
                let d = distance(a, b, WeightKind::Homogeneous).unwrap();
                if i == i2 || j == j2 {
                    assert_eq!(d, 2, "{za} {zb}");
                } else {
                    assert_eq!(d, 4, "{za} {zb}");
                }
            }
        }
        // s > 2 keeps the leading block positions zero
        let reps = minmax_representatives(3, 4, rp(2)).unwrap();
        for rep in &reps {
            for block in rep.coords().chunks(4) {
                assert_eq!(&block[..2], &[0, 0]);
            }
        }
    }

    #[test]
    fn equality_condition() {
        let f = FunctionSpec::hom_weight(rp(2), 3).unwrap();
        let reps = weight_representatives(3, rp(2)).unwrap();
        assert!(check_equality_condition(&f, &reps, 2, 24).unwrap());

        // spreading the representatives farther apart breaks equality
        let f = FunctionSpec::hom_weight(rp(2), 2).unwrap();
        let spread = vec![
            rv(2, &[0, 0]),
            rv(2, &[1, 2]), // weight 3, distance 3 from zero
            rv(2, &[2, 0]),
            rv(2, &[1, 0]),
            rv(2, &[2, 2]),
        ];
        assert!(!check_equality_condition(&f, &spread, 2, 24).unwrap());
    }

    #[test]
    fn matrix_text_round_trip() {
        let f = FunctionSpec::hom_weight(rp(2), 3).unwrap();
        let m = function_distance_matrix(&f, 2, 24).unwrap();
        let text = m.write_text();
        let parsed = DistanceMatrix::parse_text(&text).unwrap();
        assert_eq!(parsed, m);
        assert!(DistanceMatrix::parse_text("2\n0 1\n").is_err());
        assert!(DistanceMatrix::parse_text("2\n0 1\n2 0\n").is_err());
        assert!(DistanceMatrix::parse_text("2\n1 1\n1 1\n").is_err());
    }
}
