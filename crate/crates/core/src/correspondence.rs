//! Finite-valued correspondences, measurable maps and selections, and the
//! Walsh-series counterexample correspondences.

use std::collections::BTreeMap;
use std::ops::Deref;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::dyadic::DyadicModel;
use crate::error::{Error, Result};
use crate::measure_space::{format_rational, rational_to_f64, DiscreteSpace, Rational, SigmaPartition};
use crate::sequence_space::{NormFlavor, TruncVector};
use crate::walsh::{required_level, walsh_integral, walsh_sign_cell, WalshIndex};
use crate::DEDUP_TOL;

fn contains_approx(set: &[TruncVector], v: &TruncVector) -> bool {
    set.iter().any(|w| w.approx_eq(v, DEDUP_TOL))
}

fn same_set(a: &[TruncVector], b: &[TruncVector]) -> bool {
    a.len() == b.len() && a.iter().all(|v| contains_approx(b, v))
}

/// A map from atoms to non-empty finite sets of vectors.
#[derive(Debug, Clone)]
pub struct Correspondence {
    space: Arc<DiscreteSpace>,
    dim: usize,
    values: Vec<Vec<TruncVector>>,
}

impl Correspondence {
    /// Value sets are deduplicated at [`DEDUP_TOL`], keeping first occurrences.
    pub fn new(space: Arc<DiscreteSpace>, values: Vec<Vec<TruncVector>>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::Structural(format!("{} value sets for {} atoms", values.len(), space.len())));
        }
        let dim = values
            .first()
            .and_then(|s| s.first())
            .map(TruncVector::dim)
            .ok_or_else(|| Error::Precondition("empty value set at atom 0".into()))?;
        let mut deduped = Vec::with_capacity(values.len());
        for (atom, set) in values.into_iter().enumerate() {
            if set.is_empty() {
                return Err(Error::Precondition(format!("empty value set at atom {atom}")));
            }
            let mut out: Vec<TruncVector> = Vec::with_capacity(set.len());
            for v in set {
                if v.dim() != dim {
                    return Err(Error::Structural(format!("atom {atom}: vector of dimension {} in a {dim}-dimensional correspondence", v.dim())));
                }
                if !v.is_finite() {
                    return Err(Error::Precondition(format!("atom {atom}: non-finite value")));
                }
                if !contains_approx(&out, &v) {
                    out.push(v);
                }
            }
            deduped.push(out);
        }
        Ok(Correspondence { space, dim, values: deduped })
    }

    pub fn constant(space: Arc<DiscreteSpace>, set: Vec<TruncVector>) -> Result<Self> {
        let values = vec![set; space.len()];
        Self::new(space, values)
    }

    pub fn space(&self) -> &Arc<DiscreteSpace> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value_set(&self, atom: usize) -> &[TruncVector] {
        &self.values[atom]
    }

    pub fn value_sets(&self) -> &[Vec<TruncVector>] {
        &self.values
    }

    /// `max_t max_{v ∈ F(t)} ‖v‖`.
    pub fn norm_bound(&self, flavor: NormFlavor) -> f64 {
        self.values
            .iter()
            .flatten()
            .map(|v| v.norm(flavor))
            .fold(0.0, f64::max)
    }

    /// True iff atoms sharing a block share their value set.
    pub fn check_measurable(&self, alg: &SigmaPartition) -> bool {
        alg.n_atoms() == self.space.len()
            && alg.blocks().iter().all(|b| {
                let first = &self.values[b[0]];
                b[1..].iter().all(|&a| same_set(first, &self.values[a]))
            })
    }

    /// Per block of `alg`, the values available at every atom of the block.
    pub fn block_choices(&self, alg: &SigmaPartition) -> Result<Vec<Vec<TruncVector>>> {
        alg.check_space(&self.space)?;
        alg.blocks()
            .iter()
            .map(|b| {
                let choices: Vec<TruncVector> = self.values[b[0]]
                    .iter()
                    .filter(|v| b[1..].iter().all(|&a| contains_approx(&self.values[a], v)))
                    .cloned()
                    .collect();
                if choices.is_empty() {
                    Err(Error::NoSelection { block: b.clone() })
                } else {
                    Ok(choices)
                }
            })
            .collect()
    }

    /// Number of `alg`-measurable selections.
    pub fn selection_count(&self, alg: &SigmaPartition) -> Result<BigUint> {
        Ok(self
            .block_choices(alg)?
            .iter()
            .fold(BigUint::one(), |acc, c| acc * BigUint::from(c.len())))
    }

    /// Value sets replaced by every mixture `Σ (c_i / r) v_i` with `Σ c_i = r`.
    pub fn convexified(&self, resolution: usize) -> Result<Correspondence> {
        if resolution == 0 {
            return Err(Error::Precondition("resolution must be positive".into()));
        }
        let values = self
            .values
            .iter()
            .map(|set| {
                let mut out = Vec::new();
                let mut counts = vec![0usize; set.len()];
                mixtures(set, resolution, 0, resolution, &mut counts, &mut out);
                out
            })
            .collect();
        Correspondence::new(self.space.clone(), values)
    }

    pub fn to_doc(&self) -> CorrespondenceDoc {
        CorrespondenceDoc(self.values.iter().cloned().enumerate().collect())
    }
}

fn mixtures(
    set: &[TruncVector],
    resolution: usize,
    i: usize,
    remaining: usize,
    counts: &mut Vec<usize>,
    out: &mut Vec<TruncVector>,
) {
    if i + 1 == set.len() {
        counts[i] = remaining;
        let mut v = TruncVector::zeros(set[0].dim());
        for (c, p) in counts.iter().zip(set) {
            if *c > 0 {
                v.axpy(*c as f64 / resolution as f64, p);
            }
        }
        out.push(v);
        return;
    }
    for c in 0..=remaining {
        counts[i] = c;
        mixtures(set, resolution, i + 1, remaining - c, counts, out);
    }
}

/// JSON form: `{"0": [[...], ...], "1": ...}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(transparent)]
pub struct CorrespondenceDoc(pub BTreeMap<usize, Vec<TruncVector>>);

impl CorrespondenceDoc {
    pub fn into_correspondence(self, space: Arc<DiscreteSpace>) -> Result<Correspondence> {
        let n = space.len();
        let mut values = vec![Vec::new(); n];
        for (atom, set) in self.0 {
            if atom >= n {
                return Err(Error::Structural(format!("atom {atom} outside the space")));
            }
            values[atom] = set;
        }
        Correspondence::new(space, values)
    }
}

/// A vector-valued map on atoms that is constant on the blocks of `alg`.
#[derive(Debug, Clone)]
pub struct MeasurableMap {
    space: Arc<DiscreteSpace>,
    alg: SigmaPartition,
    values: Vec<TruncVector>,
}

impl MeasurableMap {
    pub fn new(space: Arc<DiscreteSpace>, alg: SigmaPartition, values: Vec<TruncVector>) -> Result<Self> {
        alg.check_space(&space)?;
        if values.len() != space.len() {
            return Err(Error::Structural(format!("{} values for {} atoms", values.len(), space.len())));
        }
        let dim = values[0].dim();
        if values.iter().any(|v| v.dim() != dim) {
            return Err(Error::Structural("mixed dimensions".into()));
        }
        for b in alg.blocks() {
            let first = &values[b[0]];
            if let Some(&a) = b[1..].iter().find(|&&a| !values[a].approx_eq(first, DEDUP_TOL)) {
                return Err(Error::InvalidSelection(format!("not constant on block {b:?}: atom {a} differs from atom {}", b[0])));
            }
        }
        Ok(MeasurableMap { space, alg, values })
    }

    /// Map taking `block_values[i]` on block `i`.
    pub fn from_blocks(space: Arc<DiscreteSpace>, alg: SigmaPartition, block_values: &[TruncVector]) -> Result<Self> {
        alg.check_space(&space)?;
        if block_values.len() != alg.n_blocks() {
            return Err(Error::Structural(format!("{} values for {} blocks", block_values.len(), alg.n_blocks())));
        }
        let values = (0..space.len()).map(|a| block_values[alg.block_of(a)].clone()).collect();
        Ok(MeasurableMap { space, alg, values })
    }

    pub fn space(&self) -> &Arc<DiscreteSpace> {
        &self.space
    }

    pub fn alg(&self) -> &SigmaPartition {
        &self.alg
    }

    pub fn values(&self) -> &[TruncVector] {
        &self.values
    }

    pub fn value(&self, atom: usize) -> &TruncVector {
        &self.values[atom]
    }

    pub fn dim(&self) -> usize {
        self.values[0].dim()
    }
}

/// A measurable map whose values lie in a correspondence. Only constructible
/// through validating paths.
#[derive(Debug, Clone)]
pub struct Selection {
    map: MeasurableMap,
}

impl Selection {
    pub fn new(corr: &Correspondence, alg: SigmaPartition, choice: Vec<TruncVector>) -> Result<Self> {
        let map = MeasurableMap::new(corr.space.clone(), alg, choice)?;
        for (atom, v) in map.values.iter().enumerate() {
            if !contains_approx(corr.value_set(atom), v) {
                return Err(Error::InvalidSelection(format!("value at atom {atom} is not in F({atom})")));
            }
        }
        Ok(Selection { map })
    }

    /// Takes index `idx[t]` into `F(t)` at every atom.
    pub fn from_indices(corr: &Correspondence, alg: SigmaPartition, idx: &[usize]) -> Result<Self> {
        if idx.len() != corr.space.len() {
            return Err(Error::Structural(format!("{} indices for {} atoms", idx.len(), corr.space.len())));
        }
        let mut choice = Vec::with_capacity(idx.len());
        for (atom, &i) in idx.iter().enumerate() {
            let set = corr.value_set(atom);
            let v = set
                .get(i)
                .ok_or_else(|| Error::InvalidSelection(format!("index {i} out of range at atom {atom}")))?;
            choice.push(v.clone());
        }
        Self::new(corr, alg, choice)
    }

    /// Internal constructor for values already known to be valid members.
    pub(crate) fn trusted(map: MeasurableMap) -> Self {
        Selection { map }
    }

    pub fn map(&self) -> &MeasurableMap {
        &self.map
    }

    pub fn into_map(self) -> MeasurableMap {
        self.map
    }
}

impl Deref for Selection {
    type Target = MeasurableMap;
    fn deref(&self) -> &MeasurableMap {
        &self.map
    }
}

/// Iterator over every `alg`-measurable selection in lexicographic order of
/// per-block choice indices (block 0 most significant).
pub struct SelectionIter {
    space: Arc<DiscreteSpace>,
    alg: SigmaPartition,
    choices: Vec<Vec<TruncVector>>,
    odometer: Vec<usize>,
    done: bool,
}

impl SelectionIter {
    pub fn block_choices(&self) -> &[Vec<TruncVector>] {
        &self.choices
    }
}

impl Iterator for SelectionIter {
    type Item = Selection;

    fn next(&mut self) -> Option<Selection> {
        if self.done {
            return None;
        }
        let block_values: Vec<TruncVector> = self
            .odometer
            .iter()
            .zip(&self.choices)
            .map(|(&i, c)| c[i].clone())
            .collect();
        let values = (0..self.space.len()).map(|a| block_values[self.alg.block_of(a)].clone()).collect();
        let sel = Selection::trusted(MeasurableMap { space: self.space.clone(), alg: self.alg.clone(), values });
        self.done = true;
        for b in (0..self.odometer.len()).rev() {
            self.odometer[b] += 1;
            if self.odometer[b] < self.choices[b].len() {
                self.done = false;
                break;
            }
            self.odometer[b] = 0;
        }
        Some(sel)
    }
}

pub fn enumerate_selections(corr: &Correspondence, alg: &SigmaPartition, cap: u64) -> Result<SelectionIter> {
    let choices = corr.block_choices(alg)?;
    let count = choices.iter().fold(BigUint::one(), |acc, c| acc * BigUint::from(c.len()));
    if count > BigUint::from(cap) {
        return Err(Error::Capacity { count, cap });
    }
    Ok(SelectionIter {
        space: corr.space.clone(),
        alg: alg.clone(),
        odometer: vec![0; choices.len()],
        choices,
        done: false,
    })
}

/// A step function on `[0, 1]`: zero on `[0, γ]`, and on `(γ, 1]` constant
/// on the `2^level` cells of the affinely rescaled coordinate
/// `u = (l − γ)/(1 − γ)`.
#[derive(Debug, Clone)]
pub struct StepFunction {
    gamma: Rational,
    gamma_f64: f64,
    level: u32,
    cells: Vec<TruncVector>,
}

impl StepFunction {
    pub fn new(gamma: Rational, level: u32, cells: Vec<TruncVector>) -> Result<Self> {
        if cells.len() != 1usize << level {
            return Err(Error::Structural(format!("{} cells at level {level}", cells.len())));
        }
        let gamma_f64 = rational_to_f64(&gamma);
        Ok(StepFunction { gamma, gamma_f64, level, cells })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn gamma(&self) -> &Rational {
        &self.gamma
    }

    pub fn dim(&self) -> usize {
        self.cells[0].dim()
    }

    pub fn cell_value(&self, cell: usize) -> &TruncVector {
        &self.cells[cell]
    }

    pub fn cells(&self) -> &[TruncVector] {
        &self.cells
    }

    /// Evaluation snaps to the containing cell; `l = 1` falls in the last one.
    pub fn eval(&self, l: f64) -> TruncVector {
        if l <= self.gamma_f64 {
            return TruncVector::zeros(self.dim());
        }
        let u = (l - self.gamma_f64) / (1.0 - self.gamma_f64);
        let n = self.cells.len();
        let cell = ((u * n as f64).floor() as usize).min(n - 1);
        self.cells[cell].clone()
    }

    /// `∫_0^1 f dη` as a plain cell sum, `(1 − γ) 2^{-L} Σ_p f_p`.
    pub fn integral_by_cells(&self) -> TruncVector {
        let mut acc = TruncVector::zeros(self.dim());
        for c in &self.cells {
            acc.axpy(1.0, c);
        }
        acc.scaled((1.0 - self.gamma_f64) / self.cells.len() as f64)
    }
}

/// `Σ_{n=0}^{terms} x_{kn+j−1} 2^{-n} W_n((l−γ)/(1−γ))` on `(γ, 1]`, zero on
/// `[0, γ]`. Basis vectors have unit norm, so the normalizers are 1.
pub fn walsh_series(k: usize, j: usize, terms: u64, gamma: &Rational, level: u32, dim: usize) -> Result<StepFunction> {
    check_series(k, terms, level, dim)?;
    if j == 0 || j > k {
        return Err(Error::Precondition(format!("series index j = {j} outside 1..={k}")));
    }
    let cells = (0..1usize << level)
        .map(|p| {
            let mut coeffs = vec![0.0; dim];
            let mut w = 1.0;
            for n in 0..=terms {
                coeffs[k * n as usize + j - 1] = w * walsh_sign_cell(n, p, level) as f64;
                w *= 0.5;
            }
            TruncVector::new(coeffs)
        })
        .collect();
    StepFunction::new(gamma.clone(), level, cells)
}

fn check_series(k: usize, terms: u64, level: u32, dim: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Precondition("k must be at least 1".into()));
    }
    let need = k * (terms as usize + 1);
    if dim < need {
        return Err(Error::DimensionTooSmall { have: dim, need });
    }
    if required_level(terms) > level {
        return Err(Error::LevelTooCoarse { index: terms, level });
    }
    Ok(())
}

/// `∫_0^1` of [`walsh_series`] computed term by term from exact Walsh
/// integrals: coefficient `kn+j−1` is `2^{-n} (1 − γ) ∫_0^1 W_n`.
pub fn walsh_series_integral(k: usize, j: usize, terms: u64, gamma: &Rational, level: u32, dim: usize) -> Result<TruncVector> {
    check_series(k, terms, level, dim)?;
    let one_minus = Rational::one() - gamma;
    let mut coeffs = vec![0.0; dim];
    for n in 0..=terms {
        let integral = walsh_integral(WalshIndex(n), 0, 1usize << level, level)?;
        let weight = Rational::new(1.into(), num_bigint::BigInt::from(1u64) << n);
        coeffs[k * n as usize + j - 1] = rational_to_f64(&(integral * &one_minus * weight));
    }
    Ok(TruncVector::new(coeffs))
}

/// Correspondence `t ↦ {0, f_1(φ(t)), …, f_k(φ(t))}` on a dyadic model.
pub fn correspondence_from_steps(model: &DyadicModel, fs: &[StepFunction]) -> Result<Correspondence> {
    let dim = fs.first().map(StepFunction::dim).ok_or_else(|| Error::Precondition("no step functions".into()))?;
    if fs.iter().any(|f| f.level() != model.level()) {
        return Err(Error::Structural("step functions and model use different levels".into()));
    }
    let values = (0..model.space().len())
        .map(|a| {
            let mut set = vec![TruncVector::zeros(dim)];
            if let Some(c) = model.cell_of(a) {
                set.extend(fs.iter().map(|f| f.cell_value(c).clone()));
            }
            set
        })
        .collect();
    Correspondence::new(model.space().clone(), values)
}

/// The functions `f_1..f_k`, their integrals `e_j` and `F(t) = {0, f_j(φ(t))}`.
#[derive(Debug, Clone)]
pub struct CounterexampleBundle {
    pub k: usize,
    pub gamma: Rational,
    pub n_trunc: u64,
    pub level: u32,
    pub dim: usize,
    pub f_list: Vec<StepFunction>,
    pub e_list: Vec<TruncVector>,
    pub corr: Correspondence,
    pub model: DyadicModel,
}

/// Bundle on the coinciding model (one atom per cell).
pub fn build_counterexample(k: usize, gamma: Rational, n_trunc: u64, level: u32, dim: usize) -> Result<CounterexampleBundle> {
    let model = DyadicModel::coinciding(gamma, level)?;
    build_counterexample_on(&model, k, n_trunc, dim)
}

pub fn build_counterexample_on(model: &DyadicModel, k: usize, n_trunc: u64, dim: usize) -> Result<CounterexampleBundle> {
    let level = model.level();
    let gamma = model.gamma().clone();
    let f_list = build_psi_on(&gamma, k, n_trunc, level, dim)?;
    let e_list = (1..=k)
        .map(|j| walsh_series_integral(k, j, n_trunc, &gamma, level, dim))
        .collect::<Result<Vec<_>>>()?;
    let corr = correspondence_from_steps(model, &f_list)?;
    Ok(CounterexampleBundle { k, gamma, n_trunc, level, dim, f_list, e_list, corr, model: model.clone() })
}

/// The game's `ψ_1..ψ_k`; the same series as the bundle's `f_j`.
pub fn build_psi(k: usize, gamma: Rational, n_trunc: u64, level: u32, dim: usize) -> Result<Vec<StepFunction>> {
    build_psi_on(&gamma, k, n_trunc, level, dim)
}

fn build_psi_on(gamma: &Rational, k: usize, n_trunc: u64, level: u32, dim: usize) -> Result<Vec<StepFunction>> {
    (1..=k).map(|j| walsh_series(k, j, n_trunc, gamma, level, dim)).collect()
}

impl CounterexampleBundle {
    /// `(1/(k+1)) Σ_j e_j`.
    pub fn midpoint(&self) -> TruncVector {
        let mut m = TruncVector::zeros(self.dim);
        for e in &self.e_list {
            m.axpy(1.0 / (self.k as f64 + 1.0), e);
        }
        m
    }

    /// `F^m`: the same construction with the series cut after `m` terms.
    pub fn truncated_correspondence(&self, m: u64) -> Result<Correspondence> {
        if m > self.n_trunc {
            return Err(Error::Precondition(format!("truncation {m} beyond the bundle's {}", self.n_trunc)));
        }
        let fs = build_psi_on(&self.gamma, self.k, m, self.level, self.dim)?;
        correspondence_from_steps(&self.model, &fs)
    }

    pub fn export(&self) -> BundleDoc {
        BundleDoc {
            k: self.k,
            gamma: format_rational(&self.gamma),
            n: self.n_trunc,
            level: self.level,
            dim: self.dim,
            e_list: self.e_list.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BundleDoc {
    pub k: usize,
    pub gamma: String,
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "L")]
    pub level: u32,
    pub dim: usize,
    pub e_list: Vec<TruncVector>,
}

/// Count as `u64` when it fits; used for reporting.
pub fn count_to_u64(c: &BigUint) -> Option<u64> {
    c.to_u64()
}
