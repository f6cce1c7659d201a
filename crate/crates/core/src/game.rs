//! Large games whose payoffs depend on the player, the own action and a
//! societal aggregate: either the integral of the strategy profile or its
//! conditional expectation on the characteristic-type algebra.
//!
//! The counterexample game uses the Walsh-series functions `ψ_j`, the
//! aggregate target `ē = (e_1 + … + e_k)/(k+1)` and the payoff `G` built from
//! the oscillating penalty [`payoff_h`].

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correspondence::{build_counterexample_on, MeasurableMap, StepFunction};
use crate::dyadic::DyadicModel;
use crate::error::{Error, Result};
use crate::measure_space::{format_rational, independence_product_check, is_refinement, rational_to_f64, ratio, DiscreteSpace, Rational, SigmaPartition};
use crate::sequence_space::{NormFlavor, TruncVector};
use crate::set_integration::{conditional_expectation, BlockValues};
use crate::walsh::walsh_sums_i128;
use crate::{DEDUP_TOL, TIE_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Externality {
    /// `E(g | f_alg)` evaluated at the player.
    Conditional,
    /// `∫ g dλ`.
    #[default]
    Integral,
}

/// The societal summary of a profile.
#[derive(Debug, Clone, PartialEq)]
pub enum Aggregate {
    Integral(TruncVector),
    Conditional(BlockValues),
}

impl Aggregate {
    /// The value player `t` responds to.
    pub fn at(&self, t: usize) -> &TruncVector {
        match self {
            Aggregate::Integral(v) => v,
            Aggregate::Conditional(bv) => &bv.values[bv.alg.block_of(t)],
        }
    }

    fn combine(&self, other: &Aggregate, eta: f64) -> Aggregate {
        let mix = |a: &TruncVector, b: &TruncVector| &a.scaled(1.0 - eta) + &b.scaled(eta);
        match (self, other) {
            (Aggregate::Integral(a), Aggregate::Integral(b)) => Aggregate::Integral(mix(a, b)),
            (Aggregate::Conditional(a), Aggregate::Conditional(b)) => Aggregate::Conditional(BlockValues {
                alg: a.alg.clone(),
                values: a.values.iter().zip(&b.values).map(|(x, y)| mix(x, y)).collect(),
            }),
            _ => other.clone(),
        }
    }

    fn shift(&self, other: &Aggregate) -> f64 {
        match (self, other) {
            (Aggregate::Integral(a), Aggregate::Integral(b)) => a.max_abs_diff(b),
            (Aggregate::Conditional(a), Aggregate::Conditional(b)) => {
                a.values.iter().zip(&b.values).map(|(x, y)| x.max_abs_diff(y)).fold(0.0, f64::max)
            }
            _ => f64::INFINITY,
        }
    }

    pub fn to_doc(&self) -> AggregateDoc {
        match self {
            Aggregate::Integral(v) => AggregateDoc::Integral(v.clone()),
            Aggregate::Conditional(bv) => AggregateDoc::Conditional(bv.values.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AggregateDoc {
    Integral(TruncVector),
    Conditional(Vec<TruncVector>),
}

/// `payoff(t, a, aggregate)`.
pub type GenericPayoff = Arc<dyn Fn(usize, &TruncVector, &Aggregate) -> f64 + Send + Sync>;

/// `|α^i − α^j|` for the primitive `(k+1)`-th root of unity `α`.
pub fn alpha_distance(i: i64, j: i64, k: usize) -> f64 {
    2.0 * (std::f64::consts::PI * (i - j) as f64 / (k as f64 + 1.0)).sin().abs()
}

/// `α` as a planar pair `(cos, sin)`.
pub fn alpha(k: usize) -> (f64, f64) {
    let a = 2.0 * std::f64::consts::PI / (k as f64 + 1.0);
    (a.cos(), a.sin())
}

/// `(x_i + Σ_j x_j)/(k+1)`, the zero of the `i`-th product factor.
pub fn mixed_point(xs: &[TruncVector], i: usize) -> TruncVector {
    let k1 = xs.len() as f64 + 1.0;
    let mut m = xs[i].scaled(1.0 / k1);
    for x in xs {
        m.axpy(1.0 / k1, x);
    }
    m
}

/// The oscillating penalty `h(l, a, x_1..x_k, θ)`: zero when `θ = 0` or
/// `l ≤ γ`, otherwise
/// `θ|sin(π(l−γ)/θ)| (‖a‖ + |1 − α^q|) Π_i (‖a − m_i‖ + |α^i − α^q|)`
/// with `q = ⌊(l−γ)/θ⌋` and `m_i` the [`mixed_point`]s.
pub fn payoff_h(l: f64, a: &TruncVector, xs: &[TruncVector], theta: f64, gamma: f64, norm: NormFlavor) -> f64 {
    if theta == 0.0 || l <= gamma {
        return 0.0;
    }
    let k = xs.len();
    let ratio = (l - gamma) / theta;
    let q = (ratio.floor() % (k as f64 + 1.0)) as i64;
    let mut value = theta * (std::f64::consts::PI * ratio).sin().abs() * (a.norm(norm) + alpha_distance(0, q, k));
    for i in 0..k {
        let m = mixed_point(xs, i);
        value *= (a - &m).norm(norm) + alpha_distance(i as i64 + 1, q, k);
    }
    value
}

/// Parameters of the counterexample payoff.
#[derive(Debug, Clone)]
pub struct CounterexampleParams {
    pub k: usize,
    pub gamma: Rational,
    pub m_bound: f64,
    pub beta: f64,
    pub psi: Vec<StepFunction>,
    pub e_mean: TruncVector,
    pub model: DyadicModel,
    /// `ψ_1..ψ_k` at `φ(t)`, per atom.
    xs: Vec<Vec<TruncVector>>,
}

impl CounterexampleParams {
    pub fn xs(&self, t: usize) -> &[TruncVector] {
        &self.xs[t]
    }

    /// `θ = β ‖b − ē‖`.
    pub fn theta(&self, b: &TruncVector, norm: NormFlavor) -> f64 {
        self.beta * (b - &self.e_mean).norm(norm)
    }
}

#[derive(Clone)]
pub enum PayoffSpec {
    Generic(GenericPayoff),
    Counterexample(Box<CounterexampleParams>),
}

impl fmt::Debug for PayoffSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PayoffSpec::Generic(_) => f.write_str("Generic(..)"),
            PayoffSpec::Counterexample(p) => f.debug_tuple("Counterexample").field(p).finish(),
        }
    }
}

/// Pure strategy: an action index per atom.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StrategyProfile {
    pub play: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct LargeGame {
    space: Arc<DiscreteSpace>,
    f_alg: SigmaPartition,
    t_alg: SigmaPartition,
    actions: Vec<TruncVector>,
    payoff: PayoffSpec,
    externality: Externality,
    norm: NormFlavor,
}

impl LargeGame {
    /// Strategies must be `t_alg`-measurable; `t_alg` refines `f_alg`. The
    /// payoff is assumed constant across the atoms of a `t_alg` block.
    pub fn new(
        space: Arc<DiscreteSpace>,
        f_alg: SigmaPartition,
        t_alg: SigmaPartition,
        actions: Vec<TruncVector>,
        payoff: PayoffSpec,
        externality: Externality,
        norm: NormFlavor,
    ) -> Result<Self> {
        f_alg.check_space(&space)?;
        if !is_refinement(&t_alg, &f_alg)? {
            return Err(Error::Precondition("strategy algebra does not refine f_alg".into()));
        }
        let dim = actions.first().map(TruncVector::dim).ok_or_else(|| Error::Precondition("empty action set".into()))?;
        if actions.iter().any(|a| a.dim() != dim || !a.is_finite()) {
            return Err(Error::Structural("actions differ in dimension or are not finite".into()));
        }
        Ok(LargeGame { space, f_alg, t_alg, actions, payoff, externality, norm })
    }

    /// The counterexample game on `model`. Actions are `0`, then the mixed
    /// points of every cell in cell order, then `extra`, deduplicated.
    #[allow(clippy::too_many_arguments)]
    pub fn counterexample(
        model: &DyadicModel,
        k: usize,
        n_trunc: u64,
        dim: usize,
        t_alg: SigmaPartition,
        extra: Vec<TruncVector>,
        externality: Externality,
        norm: NormFlavor,
    ) -> Result<Self> {
        let bundle = build_counterexample_on(model, k, n_trunc, dim)?;
        let gamma = model.gamma().clone();
        let psi = bundle.f_list.clone();
        let mut actions = vec![TruncVector::zeros(dim)];
        let push = |v: TruncVector, actions: &mut Vec<TruncVector>| {
            if !actions.iter().any(|a| a.approx_eq(&v, DEDUP_TOL)) {
                actions.push(v);
            }
        };
        for p in 0..model.n_cells() {
            let xs: Vec<TruncVector> = psi.iter().map(|f| f.cell_value(p).clone()).collect();
            for i in 0..k {
                push(mixed_point(&xs, i), &mut actions);
            }
        }
        for v in extra {
            if v.dim() != dim {
                return Err(Error::Structural("extra action of wrong dimension".into()));
            }
            push(v, &mut actions);
        }
        let xs: Vec<Vec<TruncVector>> = (0..model.space().len())
            .map(|t| match model.cell_of(t) {
                Some(p) => psi.iter().map(|f| f.cell_value(p).clone()).collect(),
                None => vec![TruncVector::zeros(dim); k],
            })
            .collect();
        let one_minus = rational_to_f64(&(Rational::one() - &gamma));
        let m_bound = actions
            .iter()
            .chain(psi.iter().flat_map(|f| f.cells()))
            .map(|v| v.norm(norm))
            .fold(one_minus, f64::max);
        let params = CounterexampleParams {
            k,
            gamma,
            m_bound,
            beta: one_minus / (4.0 * m_bound),
            e_mean: bundle.midpoint(),
            psi,
            model: model.clone(),
            xs,
        };
        Self::new(
            model.space().clone(),
            model.f_alg().clone(),
            t_alg,
            actions,
            PayoffSpec::Counterexample(Box::new(params)),
            externality,
            norm,
        )
    }

    pub fn space(&self) -> &Arc<DiscreteSpace> {
        &self.space
    }

    pub fn f_alg(&self) -> &SigmaPartition {
        &self.f_alg
    }

    pub fn t_alg(&self) -> &SigmaPartition {
        &self.t_alg
    }

    pub fn actions(&self) -> &[TruncVector] {
        &self.actions
    }

    pub fn norm(&self) -> NormFlavor {
        self.norm
    }

    pub fn counterexample_params(&self) -> Option<&CounterexampleParams> {
        match &self.payoff {
            PayoffSpec::Counterexample(p) => Some(p),
            PayoffSpec::Generic(_) => None,
        }
    }

    /// `G(t)(a, b)` with `b` the aggregate seen by `t`.
    pub fn payoff(&self, t: usize, a: &TruncVector, agg: &Aggregate) -> f64 {
        match &self.payoff {
            PayoffSpec::Generic(f) => f(t, a, agg),
            PayoffSpec::Counterexample(p) => payoff_g(p, t, a, agg.at(t), self.norm),
        }
    }

    pub fn check_profile(&self, profile: &StrategyProfile) -> Result<()> {
        if profile.play.len() != self.space.len() {
            return Err(Error::Structural(format!("profile covers {} of {} atoms", profile.play.len(), self.space.len())));
        }
        if let Some(&a) = profile.play.iter().find(|&&a| a >= self.actions.len()) {
            return Err(Error::IndexOutOfRange { index: a, dim: self.actions.len() });
        }
        for b in self.t_alg.blocks() {
            if b.iter().any(|&t| profile.play[t] != profile.play[b[0]]) {
                return Err(Error::InvalidSelection(format!("profile is not constant on strategy block {b:?}")));
            }
        }
        Ok(())
    }

    pub fn aggregate(&self, profile: &StrategyProfile) -> Result<Aggregate> {
        self.check_profile(profile)?;
        let values = profile.play.iter().map(|&a| self.actions[a].clone()).collect();
        let map = MeasurableMap::new(self.space.clone(), self.t_alg.clone(), values)?;
        Ok(match self.externality {
            Externality::Integral => Aggregate::Integral(crate::set_integration::integrate_selection(&map)),
            Externality::Conditional => Aggregate::Conditional(conditional_expectation(&map, &self.f_alg)?),
        })
    }

    fn payoffs_at(&self, t: usize, agg: &Aggregate) -> Vec<f64> {
        self.actions.iter().map(|a| self.payoff(t, a, agg)).collect()
    }

    /// Every action within [`TIE_TOL`] of the best payoff, in index order.
    pub fn best_response(&self, t: usize, agg: &Aggregate) -> Vec<usize> {
        ties(&self.payoffs_at(t, agg))
    }

    /// Largest regret `max_a G(t)(a, b) − G(t)(g(t), b)` at the profile's
    /// own aggregate.
    pub fn residual(&self, profile: &StrategyProfile) -> Result<f64> {
        let agg = self.aggregate(profile)?;
        Ok(self.residual_at(profile, &agg))
    }

    fn residual_at(&self, profile: &StrategyProfile, agg: &Aggregate) -> f64 {
        self.t_alg
            .blocks()
            .par_iter()
            .map(|b| {
                let t = b[0];
                let pay = self.payoffs_at(t, agg);
                let best = pay.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                (best - pay[profile.play[t]]).max(0.0)
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Best responses to `agg`. Unique maximizers are played outright; tied
    /// strategy blocks inside an `f_alg` block cycle through their tie set
    /// in canonical order.
    pub fn best_response_profile(&self, agg: &Aggregate) -> StrategyProfile {
        let sets: Vec<Vec<usize>> = self.t_alg.blocks().par_iter().map(|b| self.best_response(b[0], agg)).collect();
        let mut play = vec![0; self.space.len()];
        for fb in self.f_alg.blocks() {
            let mut subs: Vec<usize> = fb.iter().map(|&t| self.t_alg.block_of(t)).collect();
            subs.dedup();
            let mut turn = 0;
            for s in subs {
                let set = &sets[s];
                let a = if set.len() == 1 {
                    set[0]
                } else {
                    turn += 1;
                    set[(turn - 1) % set.len()]
                };
                for &t in self.t_alg.block(s) {
                    play[t] = a;
                }
            }
        }
        StrategyProfile { play }
    }

    pub fn find_equilibrium(&self, opts: &SolveOptions) -> Result<(StrategyProfile, EquilibriumReport)> {
        match opts.mode {
            SolveMode::BrIterate => self.br_iterate(opts),
            SolveMode::Exhaustive => self.exhaustive(opts),
        }
    }

    fn br_iterate(&self, opts: &SolveOptions) -> Result<(StrategyProfile, EquilibriumReport)> {
        let mut agg = match &opts.start {
            Start::ActionZero => self.aggregate(&StrategyProfile { play: vec![0; self.space.len()] })?,
            Start::Aggregate(v) => match self.externality {
                Externality::Integral => Aggregate::Integral(v.clone()),
                Externality::Conditional => Aggregate::Conditional(BlockValues {
                    alg: self.f_alg.clone(),
                    values: vec![v.clone(); self.f_alg.n_blocks()],
                }),
            },
        };
        let mut best: Option<(f64, StrategyProfile, Aggregate)> = None;
        let mut trace = Vec::new();
        let mut iterations = 0;
        for it in 1..=opts.max_iter {
            iterations = it;
            let profile = self.best_response_profile(&agg);
            let new_agg = self.aggregate(&profile)?;
            let residual = self.residual_at(&profile, &new_agg);
            trace.push(TraceRow { iteration: it, residual, shift: agg.shift(&new_agg) });
            let improved = best.as_ref().is_none_or(|(r, _, _)| residual < *r);
            if improved {
                best = Some((residual, profile, new_agg.clone()));
            }
            if residual <= opts.tol {
                break;
            }
            agg = agg.combine(&new_agg, opts.damping);
        }
        let (residual, profile, agg) = best.expect("at least one iteration");
        let report = self.report(SolveMode::BrIterate, &profile, agg, residual, opts.tol, iterations, trace)?;
        Ok((profile, report))
    }

    fn exhaustive(&self, opts: &SolveOptions) -> Result<(StrategyProfile, EquilibriumReport)> {
        let blocks = self.t_alg.n_blocks();
        let n_act = self.actions.len() as u64;
        let count = BigUint::from(n_act).pow(blocks as u32);
        if count > BigUint::from(opts.cap) {
            return Err(Error::Capacity { count, cap: opts.cap });
        }
        let total = count.to_u64().expect("bounded by cap");
        let decode = |mut idx: u64| -> StrategyProfile {
            let mut per_block = vec![0usize; blocks];
            for b in (0..blocks).rev() {
                per_block[b] = (idx % n_act) as usize;
                idx /= n_act;
            }
            StrategyProfile { play: (0..self.space.len()).map(|t| per_block[self.t_alg.block_of(t)]).collect() }
        };
        let (residual, idx) = (0..total)
            .into_par_iter()
            .map(|i| {
                let p = decode(i);
                let agg = self.aggregate(&p).expect("decoded profiles are valid");
                (self.residual_at(&p, &agg), i)
            })
            .reduce(|| (f64::INFINITY, u64::MAX), |a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
        let profile = decode(idx);
        let agg = self.aggregate(&profile)?;
        let report = self.report(SolveMode::Exhaustive, &profile, agg, residual, opts.tol, total as usize, Vec::new())?;
        Ok((profile, report))
    }

    #[allow(clippy::too_many_arguments)]
    fn report(
        &self,
        mode: SolveMode,
        profile: &StrategyProfile,
        agg: Aggregate,
        residual: f64,
        tol: f64,
        iterations: usize,
        trace: Vec<TraceRow>,
    ) -> Result<EquilibriumReport> {
        let (distance_to_mean, theta, partition, lemma_bound) = match self.counterexample_params() {
            Some(p) => {
                let b = agg.at(p.model.t1_atoms().into_iter().next().unwrap_or(0)).clone();
                let dist = (&b - &p.e_mean).norm(self.norm);
                let theta = p.beta * dist;
                // finer meshes need too many intervals for the exact check
                let lemma = (theta > 1.0 / 4096.0)
                    .then(|| {
                        let d0 = Rational::from_float(theta)?;
                        let sys = IndicatorSystem::canonical(p.k, p.gamma.clone(), d0).ok()?;
                        lemma_bound_check(&sys, LEMMA_LEVEL).ok()
                    })
                    .flatten();
                (Some(dist), Some(theta), Some(self.verify_equilibrium_partition(profile)?), lemma)
            }
            None => (None, None, None, None),
        };
        Ok(EquilibriumReport {
            mode,
            converged: residual <= tol,
            iterations,
            residual,
            aggregate: agg.to_doc(),
            distance_to_mean,
            theta,
            exact_case2: theta.map(|t| t <= TIE_TOL),
            partition,
            lemma_bound,
            trace,
        })
    }

    /// Masses of `P_0 = {g = 0}` and `P_i = {g = m_i}` on `T₁`, and exact
    /// independence rows against every Walsh event `D_n`, `1 ≤ n < 2^L`.
    pub fn verify_equilibrium_partition(&self, profile: &StrategyProfile) -> Result<PartitionReport> {
        self.check_profile(profile)?;
        let p = self
            .counterexample_params()
            .ok_or_else(|| Error::Precondition("partition check needs the counterexample game".into()))?;
        let k = p.k;
        let mut parts: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); k + 1];
        for t in p.model.t1_atoms() {
            let a = &self.actions[profile.play[t]];
            let xs = p.xs(t);
            let label = if a.approx_eq(&TruncVector::zeros(a.dim()), DEDUP_TOL) {
                Some(0)
            } else {
                (0..k).find(|&i| a.approx_eq(&mixed_point(xs, i), DEDUP_TOL)).map(|i| i + 1)
            };
            match label {
                Some(i) => {
                    parts[i].insert(t);
                }
                None => return Ok(PartitionReport::not_applicable()),
            }
        }
        let space = &self.space;
        let t1 = p.model.t1_mass();
        let target = &t1 / Rational::from_integer(BigInt::from(k + 1));
        let masses: Vec<Rational> = parts.iter().map(|s| space.mass_of(s)).collect();
        let mut rows = Vec::new();
        for (i, s) in parts.iter().enumerate() {
            for n in 1..(1u64 << p.model.level()) {
                let d = p.model.walsh_event(n)?;
                let lhs = space.mass_of(s.intersection(&d)) * &t1;
                let rhs = space.mass_of(s) * space.mass_of(&d);
                let pass = independence_product_check(space, s, &d, &t1);
                rows.push(IndependenceRow { i, n, lhs: format_rational(&lhs), rhs: format_rational(&rhs), pass });
            }
        }
        Ok(PartitionReport {
            applicable: true,
            masses_exact: masses.iter().all(|m| m == &target),
            all_independent: rows.iter().all(|r| r.pass),
            masses: masses.iter().map(format_rational).collect(),
            rows,
        })
    }
}

/// `G(t)(a, b) = −h(φ(t), a, ψ(φ(t)), β‖b − ē‖) − ‖a‖ Π_i ‖a − m_i‖`.
pub fn payoff_g(p: &CounterexampleParams, t: usize, a: &TruncVector, b: &TruncVector, norm: NormFlavor) -> f64 {
    let xs = p.xs(t);
    let l = p.model.phi(t);
    let theta = p.theta(b, norm);
    let h = payoff_h(l, a, xs, theta, p.model.gamma_f64(), norm);
    let mut prod = a.norm(norm);
    for i in 0..p.k {
        prod *= (a - &mixed_point(xs, i)).norm(norm);
    }
    -h - prod
}

fn ties(pay: &[f64]) -> Vec<usize> {
    let best = pay.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (0..pay.len()).filter(|&i| best - pay[i] <= TIE_TOL).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SolveMode {
    #[default]
    BrIterate,
    Exhaustive,
}

/// Where best-response iteration starts.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Start {
    /// Aggregate of the profile playing action `0` everywhere.
    #[default]
    ActionZero,
    /// A given aggregate value (the same in every block).
    Aggregate(TruncVector),
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub mode: SolveMode,
    pub max_iter: usize,
    pub tol: f64,
    /// Largest number of profiles the exhaustive search may visit.
    pub cap: u64,
    pub start: Start,
    /// Weight of the new aggregate in each update; `1` is pure best response.
    pub damping: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { mode: SolveMode::BrIterate, max_iter: 50, tol: 1e-9, cap: 10_000_000, start: Start::ActionZero, damping: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub residual: f64,
    /// Largest coordinate change of the aggregate.
    pub shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceRow {
    pub i: usize,
    pub n: u64,
    pub lhs: String,
    pub rhs: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    /// False when some `T₁` player uses an action outside `{0, m_1..m_k}`.
    pub applicable: bool,
    pub masses: Vec<String>,
    pub masses_exact: bool,
    pub rows: Vec<IndependenceRow>,
    pub all_independent: bool,
}

impl PartitionReport {
    fn not_applicable() -> Self {
        PartitionReport { applicable: false, masses: Vec::new(), masses_exact: false, rows: Vec::new(), all_independent: false }
    }

    pub fn passes(&self) -> bool {
        self.applicable && self.masses_exact && self.all_independent
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub mode: SolveMode,
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
    pub aggregate: AggregateDoc,
    pub distance_to_mean: Option<f64>,
    pub theta: Option<f64>,
    /// `θ` small enough that every candidate action ties.
    pub exact_case2: Option<bool>,
    pub partition: Option<PartitionReport>,
    pub lemma_bound: Option<LemmaReport>,
    pub trace: Vec<TraceRow>,
}

/// Walsh indices `n < 2^LEMMA_LEVEL` enter the lemma sum.
pub const LEMMA_LEVEL: u32 = 10;

/// Disjoint `{0,1}` indicators `q_1..q_k` on `(γ, 1]`, each a finite union
/// of intervals with rational endpoints, at mesh `d_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSystem {
    pub k: usize,
    pub gamma: Rational,
    pub d0: Rational,
    pub supports: Vec<Vec<(Rational, Rational)>>,
}

impl IndicatorSystem {
    pub fn new(k: usize, gamma: Rational, d0: Rational, supports: Vec<Vec<(Rational, Rational)>>) -> Result<Self> {
        if supports.len() != k || k == 0 {
            return Err(Error::Precondition(format!("need k = {k} >= 1 indicator supports, got {}", supports.len())));
        }
        if !d0.is_positive() || gamma.is_negative() || gamma >= Rational::one() {
            return Err(Error::Precondition("need d_0 > 0 and gamma in [0, 1)".into()));
        }
        let mut all: Vec<(Rational, Rational)> = Vec::new();
        for s in &supports {
            for (a, b) in s {
                if a > b || a < &gamma || b > &Rational::one() {
                    return Err(Error::Precondition(format!("interval ({a}, {b}) outside (gamma, 1]")));
                }
                all.push((a.clone(), b.clone()));
            }
        }
        all.sort();
        for w in all.windows(2) {
            if w[1].0 < w[0].1 {
                return Err(Error::OverlappingSupports(format!("({}, {}) meets ({}, {})", w[0].0, w[0].1, w[1].0, w[1].1)));
            }
        }
        Ok(IndicatorSystem { k, gamma, d0, supports })
    }

    /// Mesh intervals `(γ + phase + m d_0, γ + phase + (m+1) d_0)` clipped to
    /// `(γ, 1]`; interval `m` goes to `q_{labels[m mod (k+1)]}`, label `0`
    /// meaning none. The canonical system has `phase = 0`, `labels[r] = r`.
    pub fn periodic(k: usize, gamma: Rational, d0: Rational, phase: Rational, labels: &[usize]) -> Result<Self> {
        if labels.len() != k + 1 || labels.iter().any(|&l| l > k) {
            return Err(Error::Precondition("labels must map k+1 residues into 0..=k".into()));
        }
        if !d0.is_positive() {
            return Err(Error::Precondition("d_0 must be positive".into()));
        }
        let one = Rational::one();
        let mut supports = vec![Vec::new(); k];
        // first interval index whose right end exceeds γ
        let mut m = -((&phase / &d0).ceil().to_integer());
        loop {
            let a = &gamma + &phase + &d0 * Rational::from_integer(m.clone());
            if a >= one {
                break;
            }
            let b = &a + &d0;
            let lo = if a < gamma { gamma.clone() } else { a };
            let hi = if b > one { one.clone() } else { b };
            let r = m.mod_floor(&BigInt::from(k + 1)).to_usize().expect("small residue");
            if labels[r] > 0 && lo < hi {
                supports[labels[r] - 1].push((lo, hi));
            }
            m += 1;
        }
        Self::new(k, gamma, d0, supports)
    }

    pub fn canonical(k: usize, gamma: Rational, d0: Rational) -> Result<Self> {
        let labels: Vec<usize> = (0..=k).collect();
        Self::periodic(k, gamma, d0, Rational::zero(), &labels)
    }

    /// Random `k ∈ 1..=4`, `γ ∈ {0, 1/4, 1/3, 1/2}`, phase a multiple of
    /// `d_0/8` below `(k+1) d_0`, and a random residue permutation.
    pub fn random<R: Rng>(rng: &mut R, d0: Rational) -> Result<Self> {
        let k = rng.gen_range(1..=4);
        let gamma = [ratio(0, 1), ratio(1, 4), ratio(1, 3), ratio(1, 2)][rng.gen_range(0..4)].clone();
        let steps = rng.gen_range(0..8 * (k as i64 + 1));
        let phase = &d0 * ratio(steps, 8);
        let mut labels: Vec<usize> = (0..=k).collect();
        for i in (1..labels.len()).rev() {
            let j = rng.gen_range(0..=i);
            labels.swap(i, j);
        }
        Self::periodic(k, gamma, d0, phase, &labels)
    }

    /// True unless some label is unused, in which case the `n = 0` term no
    /// longer cancels.
    pub fn covers_all_residues(&self) -> bool {
        self.supports.iter().all(|s| !s.is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    /// Largest weighted sum over `i = 1..k`.
    pub sum: f64,
    pub bound: f64,
    /// Exact comparison `sum < 4 d_0`.
    pub pass: bool,
    pub degenerate: bool,
}

/// `max_i Σ_{n<2^level} 2^{-n} |∫_γ^1 [q_i + Σ_j q_j − 1] W_n((l−γ)/(1−γ)) dl|`
/// against `4 d_0`, computed exactly.
pub fn lemma_bound_check(sys: &IndicatorSystem, level: u32) -> Result<LemmaReport> {
    if level > 16 {
        return Err(Error::Precondition(format!("level {level} is too fine")));
    }
    let cells = 1usize << level;
    let one_minus = Rational::one() - &sys.gamma;
    let cell_edge = |p: usize| &sys.gamma + &one_minus * Rational::new(BigInt::from(p), BigInt::from(cells));

    // Common denominator of every breakpoint.
    let mut den = BigInt::one();
    let mut note = |r: &Rational| den = den.lcm(r.denom());
    note(&cell_edge(1));
    note(&sys.gamma);
    for s in &sys.supports {
        for (a, b) in s {
            note(a);
            note(b);
        }
    }
    let scaled = |r: &Rational| -> Result<i128> {
        (r * Rational::from_integer(den.clone()))
            .to_integer()
            .to_i128()
            .ok_or_else(|| Error::Precondition("breakpoints too fine for exact integration".into()))
    };
    // den clears γ and (1−γ)/cells, so every edge is an integer step from γ
    let base = scaled(&sys.gamma)?;
    let step = scaled(&cell_edge(1))? - base;
    let edges: Vec<i128> = (0..=cells as i128).map(|p| base + p * step).collect();
    let intervals: Vec<Vec<(i128, i128)>> = sys
        .supports
        .iter()
        .map(|s| s.iter().map(|(a, b)| Ok((scaled(a)?, scaled(b)?))).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;

    // Per-cell overlap length of each indicator, in units of 1/den.
    let overlap = |ivs: &[(i128, i128)]| -> Vec<i128> {
        let mut out = vec![0i128; cells];
        for &(a, b) in ivs {
            let first = edges.partition_point(|&e| e <= a).saturating_sub(1);
            for p in first..cells {
                if edges[p] >= b {
                    break;
                }
                out[p] += b.min(edges[p + 1]) - a.max(edges[p]);
            }
        }
        out
    };
    let per_q: Vec<Vec<i128>> = intervals.iter().map(|ivs| overlap(ivs)).collect();
    let widths: Vec<i128> = edges.windows(2).map(|w| w[1] - w[0]).collect();
    let covered: Vec<i128> = (0..cells).map(|p| per_q.iter().map(|q| q[p]).sum()).collect();

    let n_terms = cells as u32;
    let scale = BigInt::from(1) << (n_terms - 1);
    let mut best: Option<BigInt> = None;
    for q in &per_q {
        let integrand: Vec<i128> = (0..cells).map(|p| q[p] + covered[p] - widths[p]).collect();
        let sums = walsh_sums_i128(&integrand)?;
        let mut acc = BigInt::zero();
        for (n, s) in sums.iter().enumerate() {
            acc += BigInt::from(s.unsigned_abs()) << (n_terms - 1 - n as u32);
        }
        if best.as_ref().is_none_or(|b| &acc > b) {
            best = Some(acc);
        }
    }
    let best = best.expect("k >= 1");
    // sum = best / (den 2^{cells-1}); compare with 4 d_0
    let bound = Rational::from_integer(BigInt::from(4)) * &sys.d0;
    let sum = Rational::new(best, den * scale);
    Ok(LemmaReport {
        sum: rational_to_f64(&sum),
        bound: rational_to_f64(&bound),
        pass: sum < bound,
        degenerate: !sys.covers_all_residues(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const L2: NormFlavor = NormFlavor::Euclid;

    fn v(c: &[f64]) -> TruncVector {
        TruncVector::new(c.to_vec())
    }

    /// Independent scalar evaluation of `h` written from the formula.
    fn h_reference(l: f64, a: &[f64], xs: &[&[f64]], theta: f64, gamma: f64) -> f64 {
        if theta == 0.0 || l <= gamma {
            return 0.0;
        }
        let k = xs.len();
        let q = ((l - gamma) / theta).floor() as i64;
        let root = |e: i64| {
            let ang = 2.0 * std::f64::consts::PI * e as f64 / (k + 1) as f64;
            (ang.cos(), ang.sin())
        };
        let dist = |u: (f64, f64), w: (f64, f64)| ((u.0 - w.0).powi(2) + (u.1 - w.1).powi(2)).sqrt();
        let norm = |x: &[f64]| x.iter().map(|c| c * c).sum::<f64>().sqrt();
        let d = a.len();
        let mut total = vec![0.0; d];
        for x in xs {
            for c in 0..d {
                total[c] += x[c];
            }
        }
        let mut val = theta * ((l - gamma) / theta * std::f64::consts::PI).sin().abs() * (norm(a) + dist(root(0), root(q)));
        for (i, x) in xs.iter().enumerate() {
            let diff: Vec<f64> = (0..d).map(|c| a[c] - x[c] / (k + 1) as f64 - total[c] / (k + 1) as f64).collect();
            val *= norm(&diff) + dist(root(i as i64 + 1), root(q));
        }
        val
    }

    #[test]
    fn h_examples() {
        let xs = vec![v(&[1.0, 0.0]), v(&[0.0, 1.0])];
        assert_eq!(payoff_h(0.3, &v(&[0.2, 0.1]), &xs, 0.0, 0.0, L2), 0.0);
        assert_eq!(payoff_h(0.1, &v(&[0.2, 0.1]), &xs, 0.5, 0.2, L2), 0.0);
        let ours = payoff_h(0.3, &v(&[0.0, 0.0]), &xs, 0.25, 0.0, L2);
        let theirs = h_reference(0.3, &[0.0, 0.0], &[&[1.0, 0.0], &[0.0, 1.0]], 0.25, 0.0);
        assert!((ours - theirs).abs() < 1e-12, "{ours} vs {theirs}");
        assert!(ours > 0.0);
        for (l, th, a) in [(0.77, 0.013, [0.3, -0.4]), (0.5, 0.2, [1.0, 1.0]), (0.91, 0.07, [0.0, 0.5])] {
            let ours = payoff_h(l, &v(&a), &xs, th, 0.1, L2);
            let theirs = h_reference(l, &a, &[&[1.0, 0.0], &[0.0, 1.0]], th, 0.1);
            assert!((ours - theirs).abs() < 1e-12);
        }
    }

    #[test]
    fn alpha_distances() {
        assert!((alpha_distance(1, 0, 1) - 2.0).abs() < 1e-15);
        assert!((alpha_distance(1, 0, 2) - 3f64.sqrt()).abs() < 1e-15);
        let (c, s) = alpha(3);
        assert!(c.abs() < 1e-15 && (s - 1.0).abs() < 1e-15);
    }

    fn game(level: u32, r: usize, coinciding: bool) -> LargeGame {
        let model = DyadicModel::new(ratio(0, 1), level, r).unwrap();
        let t_alg = if coinciding { model.f_alg().clone() } else { model.t_alg().clone() };
        LargeGame::counterexample(&model, 2, 3, 8, t_alg, vec![], Externality::Integral, L2).unwrap()
    }

    #[test]
    fn g_examples_at_theta_zero() {
        let g = game(2, 3, false);
        let p = g.counterexample_params().unwrap().clone();
        let b = Aggregate::Integral(p.e_mean.clone());
        for t in 0..g.space().len() {
            assert_eq!(g.payoff(t, &TruncVector::zeros(8), &b), 0.0);
            for i in 0..2 {
                assert!(g.payoff(t, &mixed_point(p.xs(t), i), &b).abs() < 1e-15);
            }
            assert!(g.payoff(t, &v(&[0.1; 8]), &b) < 0.0);
            assert_eq!(g.best_response(t, &b).len(), 3);
        }
        assert!((p.beta - 1.0 / (4.0 * p.m_bound)).abs() < 1e-15);
    }

    #[test]
    fn atomic_players_respond_with_zero() {
        let model = DyadicModel::new(ratio(1, 4), 2, 1).unwrap();
        let g = LargeGame::counterexample(&model, 2, 3, 8, model.t_alg().clone(), vec![], Externality::Integral, L2).unwrap();
        let t2 = model.t2_atom().unwrap();
        for b in [TruncVector::zeros(8), g.counterexample_params().unwrap().e_mean.clone()] {
            assert_eq!(g.best_response(t2, &Aggregate::Integral(b)), vec![0]);
        }
    }

    #[test]
    fn case1_residue_zero_cell_plays_zero() {
        let g = game(3, 1, false);
        let p = g.counterexample_params().unwrap();
        // θ = β‖b − ē‖ large enough that the first cell lies in residue 0
        let b = Aggregate::Integral(TruncVector::zeros(8));
        let theta = p.theta(b.at(0), L2);
        assert!(p.model.phi(0) < theta);
        assert_eq!(g.best_response(0, &b), vec![0]);
    }

    #[test]
    fn equilibrium_from_mean_aggregate_is_balanced() {
        let g = game(3, 3, false);
        let e = g.counterexample_params().unwrap().e_mean.clone();
        let opts = SolveOptions { start: Start::Aggregate(e), ..SolveOptions::default() };
        let (profile, report) = g.find_equilibrium(&opts).unwrap();
        assert!(report.converged);
        assert!(report.distance_to_mean.unwrap() < 1e-9);
        let part = g.verify_equilibrium_partition(&profile).unwrap();
        assert!(part.passes());
        assert_eq!(part.masses, vec!["1/3", "1/3", "1/3"]);
    }

    #[test]
    fn unbalanced_profile_fails_independence() {
        let g = game(3, 3, false);
        let p = g.counterexample_params().unwrap();
        let n = g.space().len();
        // cells 0..3 play zero, cells 4..7 split between the mixed points
        let play = (0..n)
            .map(|t| {
                let c = p.model.cell_of(t).unwrap();
                let target = if c < 4 { TruncVector::zeros(8) } else { mixed_point(p.xs(t), t % 2) };
                g.actions().iter().position(|a| a.approx_eq(&target, 1e-12)).unwrap()
            })
            .collect();
        let report = g.verify_equilibrium_partition(&StrategyProfile { play }).unwrap();
        assert!(report.applicable);
        assert!(!report.all_independent);
    }

    #[test]
    fn partition_check_flags_foreign_actions() {
        let model = DyadicModel::new(ratio(0, 1), 1, 1).unwrap();
        let g = LargeGame::counterexample(&model, 1, 1, 2, model.t_alg().clone(), vec![v(&[5.0, 5.0])], Externality::Integral, L2).unwrap();
        let last = g.actions().len() - 1;
        let report = g.verify_equilibrium_partition(&StrategyProfile { play: vec![last, 0] }).unwrap();
        assert!(!report.applicable);
    }

    #[test]
    fn single_player_exhaustive() {
        let s = Arc::new(DiscreteSpace::uniform(1).unwrap());
        let pay: GenericPayoff = Arc::new(|_, a, _| -(a.coeffs()[0] - 0.6).abs());
        let g = LargeGame::new(
            s,
            SigmaPartition::trivial(1),
            SigmaPartition::trivial(1),
            vec![v(&[0.0]), v(&[0.5]), v(&[1.0])],
            PayoffSpec::Generic(pay),
            Externality::Integral,
            L2,
        )
        .unwrap();
        let opts = SolveOptions { mode: SolveMode::Exhaustive, ..SolveOptions::default() };
        let (p, r) = g.find_equilibrium(&opts).unwrap();
        assert_eq!(p.play, vec![1]);
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn exhaustive_capacity() {
        let g = game(2, 1, true);
        let opts = SolveOptions { mode: SolveMode::Exhaustive, cap: 100, ..SolveOptions::default() };
        assert!(matches!(g.find_equilibrium(&opts), Err(Error::Capacity { .. })));
    }

    #[test]
    fn lemma_examples() {
        let sys = IndicatorSystem::canonical(2, ratio(0, 1), ratio(1, 8)).unwrap();
        let r = lemma_bound_check(&sys, 6).unwrap();
        assert!(r.pass && r.sum < 0.5);
        let empty = IndicatorSystem::new(2, ratio(0, 1), ratio(1, 8), vec![vec![], vec![]]).unwrap();
        let r = lemma_bound_check(&empty, 6).unwrap();
        assert_eq!(r.sum, 1.0);
        assert!(r.degenerate && !r.pass);
        let overlap = IndicatorSystem::new(2, ratio(0, 1), ratio(1, 8), vec![vec![(ratio(0, 1), ratio(1, 4))], vec![(ratio(1, 8), ratio(3, 8))]]);
        assert!(matches!(overlap, Err(Error::OverlappingSupports(_))));
    }

    #[test]
    fn lemma_random_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let sys = IndicatorSystem::random(&mut rng, ratio(1, 16)).unwrap();
            assert!(lemma_bound_check(&sys, 8).unwrap().pass);
        }
    }

    #[test]
    fn periodic_supports_tile_the_interval() {
        let sys = IndicatorSystem::periodic(1, ratio(1, 4), ratio(1, 8), ratio(1, 16), &[1, 0]).unwrap();
        let total: Rational = sys.supports[0].iter().map(|(a, b)| b - a).sum();
        // the clipped interval (1/4, 5/16) has residue 1 and is unlabelled
        assert_eq!(sys.supports[0][0], (ratio(5, 16), ratio(7, 16)));
        assert_eq!(total, ratio(3, 8));
    }
}
