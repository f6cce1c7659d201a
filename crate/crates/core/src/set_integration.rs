//! Aumann integrals and conditional-expectation sets of finite-valued
//! correspondences, Lyapunov mixing, and the gap/hemicontinuity diagnostics.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correspondence::{Correspondence, MeasurableMap, Selection};
use crate::error::{Error, Result};
use crate::measure_space::{format_rational, is_refinement, rational_to_f64, restrict, DiscreteSpace, Rational, SigmaPartition};
use crate::sequence_space::{Metric, TruncVector};
use crate::{DEDUP_TOL, MEMBER_TOL};

/// Seed for the random directions used to locate hull vertices.
pub const GAP_SEED: u64 = 0x5eed_c0de;

const INDEX_CELL: f64 = 1e-6;
// Cell walls sit at `(k - INDEX_SHIFT) * INDEX_CELL`, away from the dyadic
// values most coordinates take.
const INDEX_SHIFT: f64 = 0.381_966_011_250_105;

/// Grid hash for near-duplicate lookups. Only coordinates within `radius` of
/// a cell wall need the neighbouring cell, so lookups stay cheap as long as
/// `radius` is much smaller than the cell.
#[derive(Debug, Clone, Default)]
struct PointIndex {
    cells: HashMap<Vec<i64>, Vec<usize>>,
}

impl PointIndex {
    fn key(v: &TruncVector) -> Vec<i64> {
        v.coeffs().iter().map(|c| (c / INDEX_CELL + INDEX_SHIFT).floor() as i64).collect()
    }

    fn insert(&mut self, v: &TruncVector, id: usize) {
        self.cells.entry(Self::key(v)).or_default().push(id);
    }

    fn find(&self, points: &[TruncVector], v: &TruncVector, radius: f64) -> Option<usize> {
        let base = Self::key(v);
        let mut alternates = Vec::new();
        for (i, (&c, &k)) in v.coeffs().iter().zip(&base).enumerate() {
            let lo = (k as f64 - INDEX_SHIFT) * INDEX_CELL;
            if c - lo <= radius {
                alternates.push((i, k - 1));
            }
            if lo + INDEX_CELL - c <= radius {
                alternates.push((i, k + 1));
            }
        }
        let mut key = base.clone();
        let n = alternates.len().min(20);
        for mask in 0u32..(1 << n) {
            key.clone_from(&base);
            let mut clash = false;
            for (b, &(i, k)) in alternates[..n].iter().enumerate() {
                if mask >> b & 1 == 1 {
                    if key[i] != base[i] {
                        clash = true;
                        break;
                    }
                    key[i] = k;
                }
            }
            if clash {
                continue;
            }
            if let Some(ids) = self.cells.get(&key) {
                if let Some(&id) = ids.iter().find(|&&id| points[id].max_abs_diff(v) <= radius) {
                    return Some(id);
                }
            }
        }
        None
    }
}

/// A finite set of vectors, deduplicated at [`DEDUP_TOL`] and kept in
/// lexicographic order.
#[derive(Debug, Clone)]
pub struct PointCloudSet {
    dim: usize,
    points: Vec<TruncVector>,
    index: PointIndex,
}

struct Accumulator {
    points: Vec<TruncVector>,
    index: PointIndex,
}

impl Accumulator {
    fn new() -> Self {
        Accumulator { points: Vec::new(), index: PointIndex::default() }
    }

    fn push(&mut self, v: TruncVector) {
        if self.index.find(&self.points, &v, DEDUP_TOL).is_none() {
            self.index.insert(&v, self.points.len());
            self.points.push(v);
        }
    }
}

impl PointCloudSet {
    /// Keeps the first of any group of points within [`DEDUP_TOL`].
    pub fn from_points(dim: usize, points: impl IntoIterator<Item = TruncVector>) -> Result<Self> {
        let mut acc = Accumulator::new();
        for p in points {
            if p.dim() != dim {
                return Err(Error::Structural(format!("point of dimension {} in a {dim}-dimensional cloud", p.dim())));
            }
            acc.push(p);
        }
        if acc.points.is_empty() {
            return Err(Error::Precondition("empty point cloud".into()));
        }
        Ok(Self::finish(dim, acc.points))
    }

    fn finish(dim: usize, mut points: Vec<TruncVector>) -> Self {
        points.sort_by(|a, b| a.lex_cmp(b));
        let mut index = PointIndex::default();
        for (i, p) in points.iter().enumerate() {
            index.insert(p, i);
        }
        PointCloudSet { dim, points, index }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[TruncVector] {
        &self.points
    }

    /// Membership at [`MEMBER_TOL`] in every coordinate.
    pub fn contains(&self, v: &TruncVector) -> bool {
        v.dim() == self.dim && self.index.find(&self.points, v, MEMBER_TOL).is_some()
    }

    pub fn nearest_distance(&self, v: &TruncVector, metric: Metric) -> f64 {
        self.points
            .iter()
            .map(|p| metric.distance(p, v))
            .fold(f64::INFINITY, f64::min)
    }

    /// One point per line, comma-separated coefficients.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for p in &self.points {
            let row: Vec<String> = p.coeffs().iter().map(|c| format!("{c:?}")).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

impl PartialEq for PointCloudSet {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.len() == other.len()
            && self.points.iter().all(|p| other.index.find(&other.points, p, DEDUP_TOL).is_some())
    }
}

/// How a cloud is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CloudMode {
    /// Integrate every selection; bounded by the selection cap.
    #[default]
    Enumerate,
    /// Minkowski sum of the weighted per-block choice sets, pruning
    /// duplicates after every step; bounded by the cloud size.
    Minkowski,
}

/// `Σ_t mass(t) f(t)`.
pub fn integrate_selection(f: &MeasurableMap) -> TruncVector {
    let space = f.space();
    let mut acc = TruncVector::zeros(f.dim());
    for (t, v) in f.values().iter().enumerate() {
        acc.axpy(space.mass_f64(t), v);
    }
    acc
}

/// A function constant on the blocks of `alg`, stored one vector per block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockValues {
    pub alg: SigmaPartition,
    pub values: Vec<TruncVector>,
}

impl BlockValues {
    pub fn to_map(&self, space: Arc<DiscreteSpace>) -> Result<MeasurableMap> {
        MeasurableMap::from_blocks(space, self.alg.clone(), &self.values)
    }

    pub fn approx_eq(&self, other: &BlockValues, tol: f64) -> bool {
        self.alg == other.alg && self.values.iter().zip(&other.values).all(|(a, b)| a.approx_eq(b, tol))
    }
}

/// `E(f | g_alg)` blockwise: `Σ_{t∈B} mass(t) f(t) / mass(B)`.
pub fn conditional_expectation(f: &MeasurableMap, g_alg: &SigmaPartition) -> Result<BlockValues> {
    g_alg.check_space(f.space())?;
    let space = f.space();
    let values = g_alg
        .blocks()
        .iter()
        .map(|b| {
            let mass = space.mass_of(b);
            if mass.is_zero() {
                return Err(Error::DegenerateBlock(b.clone()));
            }
            let mut acc = TruncVector::zeros(f.dim());
            for &t in b {
                acc.axpy(rational_to_f64(&(space.mass(t) / &mass)), f.value(t));
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BlockValues { alg: g_alg.clone(), values })
}

/// Cloud of `Σ_i w_i c_i` over all choices `c_i ∈ choices[i]`.
fn weighted_cloud(dim: usize, choices: &[Vec<TruncVector>], weights: &[f64], cap: u64, mode: CloudMode) -> Result<PointCloudSet> {
    match mode {
        CloudMode::Enumerate => {
            let count = choices.iter().fold(BigUint::one(), |acc, c| acc * BigUint::from(c.len()));
            if count > BigUint::from(cap) {
                return Err(Error::Capacity { count, cap });
            }
            let mut acc = Accumulator::new();
            let mut odometer = vec![0usize; choices.len()];
            loop {
                let mut v = TruncVector::zeros(dim);
                for ((c, &i), &w) in choices.iter().zip(&odometer).zip(weights) {
                    v.axpy(w, &c[i]);
                }
                acc.push(v);
                let mut b = odometer.len();
                loop {
                    if b == 0 {
                        return Ok(PointCloudSet::finish(dim, acc.points));
                    }
                    b -= 1;
                    odometer[b] += 1;
                    if odometer[b] < choices[b].len() {
                        break;
                    }
                    odometer[b] = 0;
                }
            }
        }
        CloudMode::Minkowski => {
            // Blocks with identical weight and choice set are summed together
            // first; Minkowski addition is commutative, so the set is unchanged.
            let mut groups: Vec<(f64, &Vec<TruncVector>, usize)> = Vec::new();
            let mut group_of: HashMap<(u64, Vec<u64>), usize> = HashMap::new();
            for (c, &w) in choices.iter().zip(weights) {
                let key = (w.to_bits(), c.iter().flat_map(|v| v.coeffs().iter().map(|x| x.to_bits())).collect());
                match group_of.get(&key) {
                    Some(&g) => groups[g].2 += 1,
                    None => {
                        group_of.insert(key, groups.len());
                        groups.push((w, c, 1));
                    }
                }
            }
            let mut cloud = vec![TruncVector::zeros(dim)];
            for (w, set, reps) in groups {
                let scaled: Vec<TruncVector> = set.iter().map(|v| v.scaled(w)).collect();
                let mut part = vec![TruncVector::zeros(dim)];
                for _ in 0..reps {
                    part = minkowski(&part, &scaled, cap)?;
                }
                cloud = minkowski(&cloud, &part, cap)?;
            }
            Ok(PointCloudSet::finish(dim, cloud))
        }
    }
}

fn minkowski(a: &[TruncVector], b: &[TruncVector], cap: u64) -> Result<Vec<TruncVector>> {
    let mut acc = Accumulator::new();
    for p in a {
        for q in b {
            acc.push(p + q);
        }
        if acc.points.len() as u64 > cap {
            return Err(Error::Capacity { count: BigUint::from(acc.points.len()), cap });
        }
    }
    Ok(acc.points)
}

/// `{∫ f : f an alg-measurable selection of corr}`.
pub fn aumann_integral_set(corr: &Correspondence, alg: &SigmaPartition, cap: u64, mode: CloudMode) -> Result<PointCloudSet> {
    let choices = corr.block_choices(alg)?;
    let weights: Vec<f64> = alg.blocks().iter().map(|b| rational_to_f64(&corr.space().mass_of(b))).collect();
    weighted_cloud(corr.dim(), &choices, &weights, cap, mode)
}

/// All conditional expectations `E(f | g_alg)` of `t_alg`-measurable
/// selections. Selections decouple across `g_alg` blocks, so the set is the
/// product of one cloud per block; `cap` bounds each block's enumeration.
#[derive(Debug, Clone)]
pub struct ConditionalSet {
    g_alg: SigmaPartition,
    block_clouds: Vec<PointCloudSet>,
}

impl ConditionalSet {
    pub fn g_alg(&self) -> &SigmaPartition {
        &self.g_alg
    }

    pub fn block_clouds(&self) -> &[PointCloudSet] {
        &self.block_clouds
    }

    pub fn count(&self) -> BigUint {
        self.block_clouds.iter().fold(BigUint::one(), |acc, c| acc * BigUint::from(c.len()))
    }

    pub fn contains(&self, f: &BlockValues) -> bool {
        f.alg == self.g_alg && f.values.iter().zip(&self.block_clouds).all(|(v, c)| c.contains(v))
    }

    /// Members in lexicographic order of per-block point indices.
    pub fn iter(&self) -> impl Iterator<Item = BlockValues> + '_ {
        let sizes: Vec<usize> = self.block_clouds.iter().map(PointCloudSet::len).collect();
        let mut odometer = Some(vec![0usize; sizes.len()]);
        std::iter::from_fn(move || {
            let cur = odometer.take()?;
            let values = cur.iter().zip(&self.block_clouds).map(|(&i, c)| c.points[i].clone()).collect();
            let mut next = cur;
            for b in (0..next.len()).rev() {
                next[b] += 1;
                if next[b] < sizes[b] {
                    odometer = Some(next);
                    break;
                }
                next[b] = 0;
            }
            Some(BlockValues { alg: self.g_alg.clone(), values })
        })
    }
}

pub fn conditional_set(
    corr: &Correspondence,
    t_alg: &SigmaPartition,
    g_alg: &SigmaPartition,
    cap: u64,
    mode: CloudMode,
) -> Result<ConditionalSet> {
    if !is_refinement(t_alg, g_alg)? {
        return Err(Error::Precondition("t_alg does not refine g_alg".into()));
    }
    let choices = corr.block_choices(t_alg)?;
    let space = corr.space();
    let block_clouds = g_alg
        .blocks()
        .iter()
        .map(|b| {
            let members: std::collections::BTreeSet<usize> = b.iter().copied().collect();
            let r = restrict(space, t_alg, &members)?;
            let sub: Vec<usize> = r.blocks_in_parent_ids().iter().map(|blk| t_alg.block_of(blk[0])).collect();
            let mass_b = space.mass_of(b);
            let weights: Vec<f64> = sub
                .iter()
                .map(|&i| rational_to_f64(&(space.mass_of(t_alg.block(i)) / &mass_b)))
                .collect();
            let sub_choices: Vec<Vec<TruncVector>> = sub.iter().map(|&i| choices[i].clone()).collect();
            weighted_cloud(corr.dim(), &sub_choices, &weights, cap, mode)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConditionalSet { g_alg: g_alg.clone(), block_clouds })
}

/// Cuts `masses` (in order) into consecutive runs carrying exactly
/// `fractions[j]` of the total. Returns run boundaries.
fn split_runs(masses: &[Rational], fractions: &[Rational]) -> Option<Vec<usize>> {
    let total: Rational = masses.iter().cloned().sum();
    let mut bounds = vec![0];
    let mut i = 0;
    let mut acc = Rational::zero();
    let mut target = Rational::zero();
    for f in fractions {
        target += f * &total;
        while acc < target && i < masses.len() {
            acc += &masses[i];
            i += 1;
        }
        if acc != target {
            return None;
        }
        bounds.push(i);
    }
    (i == masses.len()).then_some(bounds)
}

/// A `t_alg`-measurable selection that follows `selections[j]` on a part of
/// every `f_alg` block carrying exactly `weights[j]` of the block's mass.
pub fn lyapunov_mix(
    selections: &[Selection],
    weights: &[Rational],
    f_alg: &SigmaPartition,
    t_alg: &SigmaPartition,
) -> Result<Selection> {
    if selections.is_empty() || selections.len() != weights.len() {
        return Err(Error::Precondition("need one weight per selection".into()));
    }
    if weights.iter().any(|w| w < &Rational::zero()) || weights.iter().cloned().sum::<Rational>() != Rational::one() {
        return Err(Error::Precondition("weights must be non-negative and sum to 1".into()));
    }
    let space = selections[0].space().clone();
    f_alg.check_space(&space)?;
    if !is_refinement(t_alg, f_alg)? {
        return Err(Error::Precondition("t_alg does not refine f_alg".into()));
    }
    for (j, s) in selections.iter().enumerate() {
        if s.space().masses() != space.masses() {
            return Err(Error::Structural(format!("selection {j} lives on a different space")));
        }
        for b in f_alg.blocks() {
            if b.iter().any(|&t| !s.value(t).approx_eq(s.value(b[0]), DEDUP_TOL)) {
                return Err(Error::Precondition(format!("selection {j} is not f_alg-measurable on block {b:?}")));
            }
        }
    }
    let mut values = vec![TruncVector::zeros(selections[0].dim()); space.len()];
    for b in f_alg.blocks() {
        let mut subs: Vec<usize> = b.iter().map(|&t| t_alg.block_of(t)).collect();
        subs.dedup();
        let masses: Vec<Rational> = subs.iter().map(|&i| space.mass_of(t_alg.block(i))).collect();
        let bounds = split_runs(&masses, weights).ok_or_else(|| Error::Divisibility {
            block: b.clone(),
            mass: format_rational(&space.mass_of(b)),
            parts: weights.len(),
        })?;
        for (j, w) in bounds.windows(2).enumerate() {
            for &i in &subs[w[0]..w[1]] {
                for &t in t_alg.block(i) {
                    values[t] = selections[j].value(t).clone();
                }
            }
        }
    }
    Ok(Selection::trusted(MeasurableMap::new(space, t_alg.clone(), values)?))
}

/// Hull vertices found as maximizers of seeded random linear functionals;
/// ties go to the lexicographically first point.
pub fn hull_vertices(cloud: &PointCloudSet, directions: usize, seed: u64) -> Vec<TruncVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut found: Vec<usize> = Vec::new();
    for _ in 0..directions.max(1) {
        let dir: Vec<f64> = (0..cloud.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut best = 0;
        let mut best_val = f64::NEG_INFINITY;
        for (i, p) in cloud.points.iter().enumerate() {
            let val: f64 = p.coeffs().iter().zip(&dir).map(|(a, b)| a * b).sum();
            if val > best_val {
                best = i;
                best_val = val;
            }
        }
        if !found.contains(&best) {
            found.push(best);
        }
    }
    found.sort_unstable();
    found.into_iter().map(|i| cloud.points[i].clone()).collect()
}

fn weyl_weights(sample: usize, n: usize) -> Vec<f64> {
    const PRIMES: [f64; 16] = [2., 3., 5., 7., 11., 13., 17., 19., 23., 29., 31., 37., 41., 43., 47., 53.];
    let raw: Vec<f64> = (0..n)
        .map(|i| {
            let alpha = PRIMES[i % 16].sqrt() * (1 + i / 16) as f64;
            let u = ((sample as f64 + 1.0) * alpha).fract();
            -(1.0 - u).ln()
        })
        .collect();
    let s: f64 = raw.iter().sum();
    if s > 0.0 {
        raw.iter().map(|x| x / s).collect()
    } else {
        vec![1.0 / n as f64; n]
    }
}

/// Convex combinations probed by [`convexity_gap`]: midpoints of every pair
/// of hull vertices, then `samples` low-discrepancy simplex weights.
pub fn gap_targets(cloud: &PointCloudSet, samples: usize) -> Vec<TruncVector> {
    let verts = hull_vertices(cloud, samples.max(4 * cloud.dim), GAP_SEED);
    let mut targets = Vec::new();
    for i in 0..verts.len() {
        for j in i + 1..verts.len() {
            targets.push((&verts[i] + &verts[j]).scaled(0.5));
        }
    }
    if verts.len() > 1 {
        for s in 0..samples {
            let w = weyl_weights(s, verts.len());
            let mut v = TruncVector::zeros(cloud.dim);
            for (wi, p) in w.iter().zip(&verts) {
                v.axpy(*wi, p);
            }
            targets.push(v);
        }
    }
    targets
}

/// Largest distance from a probed convex combination to the cloud.
pub fn convexity_gap(cloud: &PointCloudSet, samples: usize, metric: Metric) -> f64 {
    gap_against(cloud, &gap_targets(cloud, samples), metric)
}

/// [`convexity_gap`] with caller-chosen targets, e.g. the targets of a
/// coarser cloud with the same hull.
pub fn gap_against(cloud: &PointCloudSet, targets: &[TruncVector], metric: Metric) -> f64 {
    targets
        .par_iter()
        .map(|t| cloud.nearest_distance(t, metric))
        .reduce(|| 0.0, f64::max)
}

/// `σ(A, B) = max_{a∈A} min_{b∈B} dist(a, b)`.
pub fn hausdorff_semidistance(a: &PointCloudSet, b: &PointCloudSet, metric: Metric) -> f64 {
    a.points
        .par_iter()
        .map(|p| b.nearest_distance(p, metric))
        .reduce(|| 0.0, f64::max)
}

/// `σ(H(F_n), H(F))` per family member. Without `g_alg` the sets are Aumann
/// integrals; with it they are conditional sets, compared in the mean metric
/// `Σ_B mass(B) σ_B` (the product form makes this the exact semidistance).
pub fn uhc_diagnostic(
    family: &[Correspondence],
    limit: &Correspondence,
    t_alg: &SigmaPartition,
    g_alg: Option<&SigmaPartition>,
    cap: u64,
    mode: CloudMode,
    metric: Metric,
) -> Result<Vec<f64>> {
    for c in family {
        if c.space().masses() != limit.space().masses() || c.dim() != limit.dim() {
            return Err(Error::Structural("family member and limit differ in space or dimension".into()));
        }
    }
    match g_alg {
        None => {
            let lim = aumann_integral_set(limit, t_alg, cap, mode)?;
            family
                .iter()
                .map(|c| Ok(hausdorff_semidistance(&aumann_integral_set(c, t_alg, cap, mode)?, &lim, metric)))
                .collect()
        }
        Some(g) => {
            let lim = conditional_set(limit, t_alg, g, cap, mode)?;
            let masses: Vec<f64> = g.blocks().iter().map(|b| limit.space().mass_of_f64(b)).collect();
            family
                .iter()
                .map(|c| {
                    let cs = conditional_set(c, t_alg, g, cap, mode)?;
                    Ok(cs
                        .block_clouds
                        .iter()
                        .zip(&lim.block_clouds)
                        .zip(&masses)
                        .map(|((a, b), m)| m * hausdorff_semidistance(a, b, metric))
                        .sum())
                })
                .collect()
        }
    }
}

/// JSON gap report row.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GapRow {
    pub level: u32,
    pub gap: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correspondence::{build_counterexample, build_counterexample_on, enumerate_selections};
    use crate::dyadic::DyadicModel;
    use crate::measure_space::ratio;
    use crate::sequence_space::NormFlavor;

    const L2: Metric = Metric::Norm(NormFlavor::Euclid);

    fn v(c: &[f64]) -> TruncVector {
        TruncVector::new(c.to_vec())
    }

    fn space(n: usize) -> Arc<DiscreteSpace> {
        Arc::new(DiscreteSpace::uniform(n).unwrap())
    }

    #[test]
    fn integrate_examples() {
        let s = space(4);
        let c = MeasurableMap::new(s.clone(), SigmaPartition::trivial(4), vec![v(&[1.0, 2.0]); 4]).unwrap();
        assert_eq!(integrate_selection(&c), v(&[1.0, 2.0]));
        let half = MeasurableMap::new(s, SigmaPartition::singletons(4), vec![v(&[1.0]), v(&[1.0]), v(&[0.0]), v(&[0.0])]).unwrap();
        assert_eq!(integrate_selection(&half), v(&[0.5]));
        let b = build_counterexample(2, ratio(0, 1), 2, 2, 6).unwrap();
        let f1 = MeasurableMap::new(
            b.model.space().clone(),
            b.model.t_alg().clone(),
            b.f_list[0].cells().to_vec(),
        )
        .unwrap();
        assert!(integrate_selection(&f1).approx_eq(&TruncVector::basis(6, 0).unwrap(), 1e-15));
    }

    #[test]
    fn conditional_expectation_examples() {
        let s = space(4);
        let f = MeasurableMap::new(s.clone(), SigmaPartition::singletons(4), vec![v(&[1.0]), v(&[3.0]), v(&[2.0]), v(&[6.0])]).unwrap();
        let e = conditional_expectation(&f, &SigmaPartition::trivial(4)).unwrap();
        assert_eq!(e.values, vec![v(&[3.0])]);
        let g = SigmaPartition::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let e = conditional_expectation(&f, &g).unwrap();
        assert_eq!(e.values, vec![v(&[2.0]), v(&[4.0])]);
        let again = conditional_expectation(&e.to_map(s).unwrap(), &g).unwrap();
        assert_eq!(again, e);
    }

    #[test]
    fn aumann_examples() {
        let c = Correspondence::constant(space(2), vec![v(&[0.0]), v(&[1.0])]).unwrap();
        for mode in [CloudMode::Enumerate, CloudMode::Minkowski] {
            let cloud = aumann_integral_set(&c, &SigmaPartition::singletons(2), 100, mode).unwrap();
            assert_eq!(cloud.points(), &[v(&[0.0]), v(&[0.5]), v(&[1.0])]);
        }
        let one = Correspondence::constant(space(1), vec![v(&[2.0]), v(&[-1.0])]).unwrap();
        let cloud = aumann_integral_set(&one, &SigmaPartition::singletons(1), 10, CloudMode::Enumerate).unwrap();
        assert_eq!(cloud.points(), &[v(&[-1.0]), v(&[2.0])]);
    }

    #[test]
    fn aumann_capacity() {
        let c = Correspondence::constant(space(4), vec![v(&[0.0]), v(&[1.0])]).unwrap();
        assert!(matches!(
            aumann_integral_set(&c, &SigmaPartition::singletons(4), 15, CloudMode::Enumerate),
            Err(Error::Capacity { .. })
        ));
        assert_eq!(aumann_integral_set(&c, &SigmaPartition::singletons(4), 15, CloudMode::Minkowski).unwrap().len(), 5);
    }

    #[test]
    fn modes_agree_on_e1() {
        let b = build_counterexample(2, ratio(0, 1), 3, 2, 8).unwrap();
        let a = aumann_integral_set(&b.corr, b.model.t_alg(), 1_000_000, CloudMode::Enumerate).unwrap();
        let m = aumann_integral_set(&b.corr, b.model.t_alg(), 1_000_000, CloudMode::Minkowski).unwrap();
        assert_eq!(a, m);
    }

    #[test]
    fn e1_midpoint_absent_without_refinement() {
        let b = build_counterexample(2, ratio(0, 1), 7, 3, 16).unwrap();
        let cloud = aumann_integral_set(&b.corr, b.model.t_alg(), 10_000, CloudMode::Enumerate).unwrap();
        let mid = b.midpoint();
        assert!(!cloud.contains(&mid));
        assert!(cloud.nearest_distance(&mid, L2) > 1e-3);
    }

    #[test]
    fn conditional_set_reduction_and_single_valued() {
        let model = DyadicModel::new(ratio(0, 1), 2, 2).unwrap();
        let b = build_counterexample_on(&model, 1, 1, 2).unwrap();
        let triv = SigmaPartition::trivial(model.space().len());
        let cs = conditional_set(&b.corr, model.t_alg(), &triv, 100_000, CloudMode::Enumerate).unwrap();
        let a = aumann_integral_set(&b.corr, model.t_alg(), 100_000, CloudMode::Enumerate).unwrap();
        assert_eq!(cs.block_clouds()[0], a);

        let single = Correspondence::constant(space(4), vec![v(&[1.0])]).unwrap();
        let cs = conditional_set(&single, &SigmaPartition::singletons(4), &SigmaPartition::trivial(4), 10, CloudMode::Enumerate).unwrap();
        assert_eq!(cs.count(), BigUint::from(1u32));
    }

    #[test]
    fn conditional_set_rejects_unnested() {
        let c = Correspondence::constant(space(4), vec![v(&[0.0])]).unwrap();
        let t = SigmaPartition::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let g = SigmaPartition::new(4, vec![vec![0, 2], vec![1, 3]]).unwrap();
        assert!(conditional_set(&c, &t, &g, 10, CloudMode::Enumerate).is_err());
    }

    #[test]
    fn conditional_set_matches_brute_force() {
        let model = DyadicModel::new(ratio(1, 4), 1, 2).unwrap();
        let b = build_counterexample_on(&model, 1, 1, 2).unwrap();
        let cs = conditional_set(&b.corr, model.t_alg(), model.f_alg(), 1000, CloudMode::Enumerate).unwrap();
        let mut n = 0;
        for s in enumerate_selections(&b.corr, model.t_alg(), 1000).unwrap() {
            assert!(cs.contains(&conditional_expectation(&s, model.f_alg()).unwrap()));
            n += 1;
        }
        assert_eq!(n, 16);
        // 1 * 3 * 3 distinct conditional expectations
        assert_eq!(cs.count(), BigUint::from(9u32));
        assert_eq!(cs.iter().count(), 9);
    }

    #[test]
    fn lyapunov_examples() {
        let s = space(4);
        let f_alg = SigmaPartition::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let t_alg = SigmaPartition::singletons(4);
        let c = Correspondence::constant(s, vec![v(&[0.0]), v(&[1.0])]).unwrap();
        let s1 = Selection::new(&c, f_alg.clone(), vec![v(&[0.0]), v(&[0.0]), v(&[1.0]), v(&[1.0])]).unwrap();
        let s2 = Selection::new(&c, f_alg.clone(), vec![v(&[1.0]); 4]).unwrap();
        let g = lyapunov_mix(&[s1.clone(), s2.clone()], &[ratio(1, 1), ratio(0, 1)], &f_alg, &t_alg).unwrap();
        assert_eq!(g.values(), s1.values());
        let g = lyapunov_mix(&[s1.clone(), s2.clone()], &[ratio(1, 2), ratio(1, 2)], &f_alg, &t_alg).unwrap();
        let e = conditional_expectation(&g, &f_alg).unwrap();
        assert_eq!(e.values, vec![v(&[0.5]), v(&[1.0])]);
        assert!(matches!(
            lyapunov_mix(&[s1.clone(), s2.clone()], &[ratio(1, 3), ratio(2, 3)], &f_alg, &t_alg),
            Err(Error::Divisibility { .. })
        ));
        let rough = Selection::new(&c, t_alg.clone(), vec![v(&[0.0]), v(&[1.0]), v(&[1.0]), v(&[1.0])]).unwrap();
        assert!(matches!(
            lyapunov_mix(&[rough, s2], &[ratio(1, 2), ratio(1, 2)], &f_alg, &t_alg),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn lyapunov_on_e1_hits_midpoint() {
        let model = DyadicModel::new(ratio(0, 1), 3, 3).unwrap();
        let b = build_counterexample_on(&model, 2, 7, 16).unwrap();
        let n = model.space().len();
        let f = model.f_alg();
        let zero = Selection::new(&b.corr, f.clone(), vec![TruncVector::zeros(16); n]).unwrap();
        let mut sels = vec![zero];
        for fj in &b.f_list {
            let vals = (0..n).map(|a| fj.cell_value(model.cell_of(a).unwrap()).clone()).collect();
            sels.push(Selection::new(&b.corr, f.clone(), vals).unwrap());
        }
        let g = lyapunov_mix(&sels, &[ratio(1, 3), ratio(1, 3), ratio(1, 3)], f, model.t_alg()).unwrap();
        assert!(integrate_selection(&g).approx_eq(&b.midpoint(), 1e-12));
    }

    #[test]
    fn gap_examples() {
        let single = PointCloudSet::from_points(2, [v(&[1.0, 1.0])]).unwrap();
        assert_eq!(convexity_gap(&single, 32, L2), 0.0);
        let pair = PointCloudSet::from_points(2, [v(&[0.0, 0.0]), v(&[3.0, 4.0])]).unwrap();
        assert!((convexity_gap(&pair, 32, L2) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn semidistance_examples() {
        let a = PointCloudSet::from_points(1, [v(&[0.0])]).unwrap();
        let b = PointCloudSet::from_points(1, [v(&[0.0]), v(&[2.0])]).unwrap();
        assert_eq!(hausdorff_semidistance(&a, &a, L2), 0.0);
        assert_eq!(hausdorff_semidistance(&a, &b, L2), 0.0);
        assert_eq!(hausdorff_semidistance(&b, &a, L2), 2.0);
    }

    #[test]
    fn uhc_examples() {
        let s = space(2);
        let t = SigmaPartition::singletons(2);
        let base = Correspondence::constant(s.clone(), vec![v(&[0.0])]).unwrap();
        let fam: Vec<Correspondence> = (1..=4)
            .map(|n| Correspondence::constant(s.clone(), vec![v(&[0.0]), v(&[1.0 / n as f64])]).unwrap())
            .collect();
        let sig = uhc_diagnostic(&fam, &base, &t, None, 100, CloudMode::Enumerate, L2).unwrap();
        for (n, s) in sig.iter().enumerate() {
            assert!(*s <= 1.0 / (n + 1) as f64 + 1e-15);
        }
        let same = uhc_diagnostic(&[base.clone(), base.clone()], &base, &t, Some(&SigmaPartition::trivial(2)), 100, CloudMode::Enumerate, L2).unwrap();
        assert_eq!(same, vec![0.0, 0.0]);
    }

    #[test]
    fn dedup_keeps_first_and_sorts() {
        let c = PointCloudSet::from_points(1, [v(&[1.0]), v(&[0.0]), v(&[1.0 + 1e-13])]).unwrap();
        assert_eq!(c.points(), &[v(&[0.0]), v(&[1.0])]);
        assert!(c.contains(&v(&[1.0 + 5e-10])));
        assert!(!c.contains(&v(&[1.0 + 5e-9])));
        // straddling an index cell wall
        let w = INDEX_CELL * (3.0 - INDEX_SHIFT);
        let c = PointCloudSet::from_points(1, [v(&[w - 1e-13]), v(&[w + 1e-13])]).unwrap();
        assert_eq!(c.len(), 1);
    }
}
