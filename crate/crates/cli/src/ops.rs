use std::collections::BTreeMap;

use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use corrint::correspondence::{
    build_counterexample, build_counterexample_on, count_to_u64, enumerate_selections, Correspondence, CounterexampleBundle,
    MeasurableMap, Selection,
};
use corrint::dyadic::DyadicModel;
use corrint::game::{lemma_bound_check, Externality, IndicatorSystem, LargeGame, SolveMode, SolveOptions, Start};
use corrint::measure_space::{format_rational, parse_rational, ratio, rational_to_f64, DiscreteSpace, Rational, SigmaPartition};
use corrint::rcd::{kernel_mix, kernels_equal, rcd_of_selection, TransitionKernel};
use corrint::sequence_space::TruncVector;
use corrint::set_integration::{
    aumann_integral_set, conditional_expectation, conditional_set, gap_against, gap_targets, integrate_selection, lyapunov_mix,
    uhc_diagnostic, CloudMode,
};
use corrint::walsh::walsh_sign_cell;

use crate::scenario::{AlgebraChoice, Scenario};
use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Operation {
    Walsh(WalshOp),
    Integrals(IntegralsOp),
    Necessity(NecessityOp),
    Lyapunov(LyapunovOp),
    Convexity(ConvexityOp),
    Tower(TowerOp),
    Uhc(UhcOp),
    Game(GameOp),
    Lemma(LemmaOp),
    Rcd(RcdOp),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalshOp {
    #[serde(default = "eight", rename = "L")]
    pub level: u32,
    /// Indices `m, n < max_index` are paired.
    #[serde(default = "sixteen")]
    pub max_index: u64,
}

fn eight() -> u32 {
    8
}

fn sixteen() -> u64 {
    16
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegralsOp {
    #[serde(default = "default_gammas")]
    pub gammas: Vec<String>,
}

fn default_gammas() -> Vec<String> {
    vec!["0".into(), "1/4".into()]
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NecessityOp {
    #[serde(default)]
    pub mode: Mode,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Mode {
    #[default]
    Enumerate,
    Minkowski,
}

impl From<Mode> for CloudMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Enumerate => CloudMode::Enumerate,
            Mode::Minkowski => CloudMode::Minkowski,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovOp {}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvexityOp {
    /// Refinement exponents `m`; each cell is split into `2^m` atoms.
    #[serde(default = "default_exponents")]
    pub exponents: Vec<u32>,
    #[serde(default = "sixty_four")]
    pub samples: usize,
    #[serde(default = "milli")]
    pub threshold: f64,
}

fn default_exponents() -> Vec<u32> {
    (1..=6).collect()
}

fn sixty_four() -> usize {
    64
}

fn milli() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TowerOp {
    #[serde(default = "two_hundred")]
    pub trials: usize,
    #[serde(default = "eight_atoms")]
    pub max_atoms: usize,
}

fn two_hundred() -> usize {
    200
}

fn eight_atoms() -> usize {
    8
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UhcOp {
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "micro")]
    pub threshold: f64,
}

fn micro() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StartChoice {
    /// Every player starts on action `0`.
    #[default]
    Zero,
    /// The aggregate starts at `(e_1 + … + e_k)/(k+1)`.
    Mean,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameOp {
    #[serde(default)]
    pub mode: SolveMode,
    #[serde(default)]
    pub start: StartChoice,
    #[serde(default = "fifty")]
    pub max_iter: usize,
    #[serde(default = "unit")]
    pub damping: f64,
    #[serde(default)]
    pub externality: Externality,
    #[serde(default)]
    pub extra_actions: Vec<Vec<f64>>,
}

fn fifty() -> usize {
    50
}

fn unit() -> f64 {
    1.0
}

impl Default for GameOp {
    fn default() -> Self {
        GameOp {
            mode: SolveMode::BrIterate,
            start: StartChoice::Zero,
            max_iter: 50,
            damping: 1.0,
            externality: Externality::Integral,
            extra_actions: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaOp {
    /// Meshes `d_0 = 2^{-e}`.
    #[serde(default = "lemma_exponents")]
    pub exponents: Vec<u32>,
    #[serde(default = "thousand")]
    pub trials: usize,
    #[serde(default = "ten", rename = "L")]
    pub level: u32,
}

fn lemma_exponents() -> Vec<u32> {
    (3..=8).collect()
}

fn thousand() -> usize {
    1000
}

fn ten() -> u32 {
    10
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RcdOp {
    #[serde(default = "four")]
    pub atoms_per_block: usize,
    /// Mixing weights are multiples of `1/resolution`.
    #[serde(default = "four")]
    pub resolution: usize,
}

fn four() -> usize {
    4
}

/// Columns and rows of a numeric series, written as CSV on request.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r
                .iter()
                .map(|&x| if x.fract() == 0.0 && x.abs() < 1e15 { format!("{}", x as i64) } else { format!("{x:e}") })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

pub struct Outcome {
    pub result: Value,
    pub verdicts: BTreeMap<String, bool>,
    pub series: Option<Series>,
}

fn verdicts<const N: usize>(items: [(&str, bool); N]) -> BTreeMap<String, bool> {
    items.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn monotone(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] <= w[0] + 1e-15)
}

impl Operation {
    pub fn name(&self) -> &'static str {
        match self {
            Operation::Walsh(_) => "walsh",
            Operation::Integrals(_) => "integrals",
            Operation::Necessity(_) => "necessity",
            Operation::Lyapunov(_) => "lyapunov",
            Operation::Convexity(_) => "convexity",
            Operation::Tower(_) => "tower",
            Operation::Uhc(_) => "uhc",
            Operation::Game(_) => "game",
            Operation::Lemma(_) => "lemma",
            Operation::Rcd(_) => "rcd",
        }
    }

    pub fn verdict_names(&self) -> &'static [&'static str] {
        match self {
            Operation::Walsh(_) => &["orthonormal"],
            Operation::Integrals(_) => &["norm_e1", "e_formula"],
            Operation::Necessity(_) => &["midpoint_absent"],
            Operation::Lyapunov(_) => &["exact", "integral", "member"],
            Operation::Convexity(_) => &["monotone", "below_threshold"],
            Operation::Tower(_) => &["tower", "barycenter"],
            Operation::Uhc(_) => &["monotone", "vanishes_at_parity"],
            Operation::Game(_) => &["converged", "at_mean", "partition", "exact_case2"],
            Operation::Lemma(_) => &["canonical", "random"],
            Operation::Rcd(_) => &["realized", "brute_force"],
        }
    }

    pub fn run(&self, sc: &Scenario) -> Result<Outcome, CliError> {
        match self {
            Operation::Walsh(op) => walsh(op),
            Operation::Integrals(op) => integrals(op, sc),
            Operation::Necessity(op) => necessity(op, sc),
            Operation::Lyapunov(_) => lyapunov(sc),
            Operation::Convexity(op) => convexity(op, sc),
            Operation::Tower(op) => tower(op, sc),
            Operation::Uhc(op) => uhc(op, sc),
            Operation::Game(op) => game(op, sc),
            Operation::Lemma(op) => lemma(op, sc),
            Operation::Rcd(op) => rcd(op, sc),
        }
    }
}

fn model(sc: &Scenario, refinement: usize) -> Result<DyadicModel, CliError> {
    Ok(DyadicModel::new(sc.gamma()?, sc.space.level, refinement)?)
}

fn strategy_alg(sc: &Scenario, m: &DyadicModel) -> SigmaPartition {
    match sc.algebra {
        AlgebraChoice::Atoms => m.t_alg().clone(),
        AlgebraChoice::Coincide => m.f_alg().clone(),
    }
}

fn bundle(sc: &Scenario, m: &DyadicModel) -> Result<CounterexampleBundle, CliError> {
    Ok(build_counterexample_on(m, sc.construction.k, sc.construction.n_trunc, sc.dim())?)
}

fn walsh(op: &WalshOp) -> Result<Outcome, CliError> {
    if op.level > 20 || op.max_index > 1 << op.level {
        return Err(CliError::Invalid(format!("walsh: need max_index <= 2^L and L <= 20, got {} and {}", op.max_index, op.level)));
    }
    let cells = 1usize << op.level;
    let mut bad = Vec::new();
    for m in 0..op.max_index {
        for n in 0..op.max_index {
            let s: i64 = (0..cells).map(|p| (walsh_sign_cell(m, p, op.level) * walsh_sign_cell(n, p, op.level)) as i64).sum();
            let want = if m == n { cells as i64 } else { 0 };
            if s != want {
                bad.push((m, n, s));
            }
        }
    }
    Ok(Outcome {
        result: json!({ "L": op.level, "pairs": op.max_index * op.max_index, "failures": bad }),
        verdicts: verdicts([("orthonormal", bad.is_empty())]),
        series: None,
    })
}

fn integrals(op: &IntegralsOp, sc: &Scenario) -> Result<Outcome, CliError> {
    let (k, n) = (sc.construction.k, sc.construction.n_trunc);
    let mut rows = Vec::new();
    let (mut norm_ok, mut formula_ok) = (true, true);
    for g in &op.gammas {
        let gamma = parse_rational(g)?;
        let one_minus = rational_to_f64(&(Rational::one() - &gamma));
        let b = build_counterexample(k, gamma, n, sc.space.level, sc.dim())?;
        let norm_err = (b.e_list[0].norm(sc.workspace.norm) - one_minus).abs();
        let formula_err = (1..=k)
            .map(|j| b.e_list[j - 1].max_abs_diff(&TruncVector::basis(sc.dim(), j - 1).expect("dim fits").scaled(one_minus)))
            .fold(0.0, f64::max);
        norm_ok &= norm_err <= sc.tolerances.exact;
        formula_ok &= formula_err <= sc.tolerances.exact;
        rows.push(json!({ "gamma": g, "e": b.e_list, "norm_e1_error": norm_err, "formula_error": formula_err }));
    }
    Ok(Outcome {
        result: json!({ "k": k, "N": n, "rows": rows }),
        verdicts: verdicts([("norm_e1", norm_ok), ("e_formula", formula_ok)]),
        series: None,
    })
}

fn necessity(op: &NecessityOp, sc: &Scenario) -> Result<Outcome, CliError> {
    let m = model(sc, sc.space.refinement)?;
    let b = bundle(sc, &m)?;
    let alg = strategy_alg(sc, &m);
    let count = b.corr.selection_count(&alg)?;
    let cloud = aumann_integral_set(&b.corr, &alg, sc.cap, op.mode.into())?;
    let mid = b.midpoint();
    let member = cloud.contains(&mid);
    let distance = cloud.nearest_distance(&mid, sc.workspace().metric());
    Ok(Outcome {
        result: json!({
            "selections": count.to_string(),
            "cloud_size": cloud.len(),
            "midpoint": mid,
            "midpoint_member": member,
            "distance": distance,
        }),
        verdicts: verdicts([("midpoint_absent", !member)]),
        series: None,
    })
}

/// Cell-constant selections `0, f_1, …, f_k`.
fn e1_selections(b: &CounterexampleBundle, m: &DyadicModel) -> Result<Vec<Selection>, CliError> {
    let n = m.space().len();
    let value = |t: usize, f: Option<usize>| match (m.cell_of(t), f) {
        (Some(p), Some(j)) => b.f_list[j].cell_value(p).clone(),
        _ => TruncVector::zeros(b.dim),
    };
    let mut out = Vec::new();
    for f in std::iter::once(None).chain((0..b.k).map(Some)) {
        let vals = (0..n).map(|t| value(t, f)).collect();
        out.push(Selection::new(&b.corr, m.f_alg().clone(), vals)?);
    }
    Ok(out)
}

fn lyapunov(sc: &Scenario) -> Result<Outcome, CliError> {
    let m = model(sc, sc.space.refinement)?;
    let b = bundle(sc, &m)?;
    let k = b.k;
    let sels = e1_selections(&b, &m)?;
    let weights = vec![ratio(1, k as i64 + 1); k + 1];
    let t_alg = strategy_alg(sc, &m);
    let g = lyapunov_mix(&sels, &weights, m.f_alg(), &t_alg)?;
    let eg = conditional_expectation(&g, m.f_alg())?;
    let mut err: f64 = 0.0;
    for (blk, got) in m.f_alg().blocks().iter().zip(&eg.values) {
        let mut want = TruncVector::zeros(b.dim);
        for s in &sels {
            want.axpy(1.0 / (k as f64 + 1.0), s.value(blk[0]));
        }
        err = err.max(got.max_abs_diff(&want));
    }
    let part_masses: Vec<String> = (0..=k)
        .map(|j| {
            let atoms: Vec<usize> = (0..m.space().len()).filter(|&t| m.cell_of(t).is_some() && g.value(t) == sels[j].value(t)).collect();
            format_rational(&m.space().mass_of(&atoms))
        })
        .collect();
    let integral_err = integrate_selection(&g).max_abs_diff(&b.midpoint());
    let cs = conditional_set(&b.corr, &t_alg, m.f_alg(), sc.cap, CloudMode::Enumerate)?;
    let member = cs.contains(&eg);
    Ok(Outcome {
        result: json!({
            "atoms": m.space().len(),
            "conditional_error": err,
            "integral_error": integral_err,
            "part_masses": part_masses,
            "conditional_set_size": cs.count().to_string(),
        }),
        verdicts: verdicts([
            ("exact", err <= sc.tolerances.exact),
            ("integral", integral_err <= sc.tolerances.exact),
            ("member", member),
        ]),
        series: None,
    })
}

fn convexity(op: &ConvexityOp, sc: &Scenario) -> Result<Outcome, CliError> {
    let mut targets = None;
    let mut rows = Vec::new();
    for &e in &op.exponents {
        if e > 12 {
            return Err(CliError::Invalid(format!("convexity: exponent {e} too large")));
        }
        let m = model(sc, 1 << e)?;
        let b = bundle(sc, &m)?;
        let cloud = aumann_integral_set(&b.corr, m.t_alg(), sc.cap, CloudMode::Minkowski)?;
        // the hull does not move with the refinement, so the coarsest
        // level's probes serve every level
        let t = targets.get_or_insert_with(|| gap_targets(&cloud, op.samples));
        let gap = gap_against(&cloud, t, sc.workspace().metric());
        rows.push(vec![e as f64, (1u64 << e) as f64, cloud.len() as f64, gap]);
    }
    let gaps: Vec<f64> = rows.iter().map(|r| r[3]).collect();
    let last = gaps.last().copied().unwrap_or(f64::INFINITY);
    Ok(Outcome {
        result: json!({ "exponents": op.exponents, "gaps": gaps, "targets": targets.map_or(0, |t| t.len()) }),
        verdicts: verdicts([("monotone", monotone(&gaps)), ("below_threshold", last < op.threshold)]),
        series: Some(Series { header: vec!["m", "refinement", "cloud_size", "gap"], rows }),
    })
}

fn tower(op: &TowerOp, sc: &Scenario) -> Result<Outcome, CliError> {
    if op.max_atoms < 2 {
        return Err(CliError::Invalid("tower: max_atoms must be at least 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    let (mut tower_err, mut bary_err): (f64, f64) = (0.0, 0.0);
    for _ in 0..op.trials {
        let (space, fine, coarse, f) = random_instance(&mut rng, op.max_atoms)?;
        let ef = conditional_expectation(&f, &fine)?;
        let efg = conditional_expectation(&ef.to_map(space.clone())?, &coarse)?;
        let eg = conditional_expectation(&f, &coarse)?;
        for (a, b) in efg.values.iter().zip(&eg.values) {
            tower_err = tower_err.max(a.max_abs_diff(b));
        }
        let bary = rcd_of_selection(&f, &coarse)?.barycenter();
        for (a, b) in bary.iter().zip(&eg.values) {
            bary_err = bary_err.max(a.max_abs_diff(b));
        }
    }
    Ok(Outcome {
        result: json!({ "trials": op.trials, "tower_error": tower_err, "barycenter_error": bary_err }),
        verdicts: verdicts([("tower", tower_err <= sc.tolerances.exact), ("barycenter", bary_err <= sc.tolerances.exact)]),
        series: None,
    })
}

type Instance = (std::sync::Arc<DiscreteSpace>, SigmaPartition, SigmaPartition, MeasurableMap);

/// A space with integer-weighted atoms, a fine algebra, a coarser one and
/// an atom-wise map into `R^3`.
fn random_instance(rng: &mut ChaCha8Rng, max_atoms: usize) -> Result<Instance, CliError> {
    let n = rng.gen_range(2..=max_atoms);
    let w: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=9)).collect();
    let total: i64 = w.iter().sum();
    let space = std::sync::Arc::new(DiscreteSpace::new(w.iter().map(|&x| ratio(x, total)).collect(), None)?);
    let fine_labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
    let coarse_labels: Vec<usize> = fine_labels.iter().map(|l| l % 3).collect();
    let values = (0..n).map(|_| TruncVector::new((0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())).collect();
    let f = MeasurableMap::new(space.clone(), SigmaPartition::singletons(n), values)?;
    Ok((space, SigmaPartition::from_labels(&fine_labels), SigmaPartition::from_labels(&coarse_labels), f))
}

fn uhc(op: &UhcOp, sc: &Scenario) -> Result<Outcome, CliError> {
    let m = model(sc, sc.space.refinement)?;
    let b = bundle(sc, &m)?;
    let alg = strategy_alg(sc, &m);
    let family: Vec<Correspondence> = (0..=b.n_trunc).map(|i| b.truncated_correspondence(i)).collect::<corrint::Result<_>>()?;
    let sig = uhc_diagnostic(&family, &b.corr, &alg, None, sc.cap, op.mode.into(), sc.workspace().metric())?;
    let rows = sig.iter().enumerate().map(|(i, s)| vec![i as f64, *s]).collect();
    let last = sig.last().copied().unwrap_or(f64::INFINITY);
    Ok(Outcome {
        result: json!({ "N": b.n_trunc, "semidistance": sig }),
        verdicts: verdicts([("monotone", monotone(&sig)), ("vanishes_at_parity", last < op.threshold)]),
        series: Some(Series { header: vec!["m", "semidistance"], rows }),
    })
}

fn game(op: &GameOp, sc: &Scenario) -> Result<Outcome, CliError> {
    let m = model(sc, sc.space.refinement)?;
    let extra = op.extra_actions.iter().map(|v| TruncVector::new(v.clone())).collect();
    let g = LargeGame::counterexample(
        &m,
        sc.construction.k,
        sc.construction.n_trunc,
        sc.dim(),
        strategy_alg(sc, &m),
        extra,
        op.externality,
        sc.workspace.norm,
    )?;
    let start = match op.start {
        StartChoice::Zero => Start::ActionZero,
        StartChoice::Mean => Start::Aggregate(g.counterexample_params().expect("counterexample game").e_mean.clone()),
    };
    let opts = SolveOptions { mode: op.mode, max_iter: op.max_iter, tol: sc.tolerances.solver, cap: sc.cap, start, damping: op.damping };
    let (profile, report) = g.find_equilibrium(&opts)?;
    let at_mean = report.distance_to_mean.is_some_and(|d| d <= sc.tolerances.solver);
    let partition = report.partition.as_ref().is_some_and(|p| p.passes());
    let rows = report.trace.iter().map(|r| vec![r.iteration as f64, r.residual, r.shift]).collect();
    let v = verdicts([
        ("converged", report.converged),
        ("at_mean", at_mean),
        ("partition", partition),
        ("exact_case2", report.exact_case2 == Some(true)),
    ]);
    Ok(Outcome {
        result: json!({ "actions": g.actions().len(), "profile": profile.play, "report": report }),
        verdicts: v,
        series: Some(Series { header: vec!["iteration", "residual", "shift"], rows }),
    })
}

fn lemma(op: &LemmaOp, sc: &Scenario) -> Result<Outcome, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    let gamma = sc.gamma()?;
    let (mut canonical_ok, mut random_ok) = (true, true);
    let mut rows = Vec::new();
    let mut degenerate = 0usize;
    for &e in &op.exponents {
        let d0 = Rational::new(1.into(), num_bigint::BigInt::from(1u64) << e);
        let canon = lemma_bound_check(&IndicatorSystem::canonical(sc.construction.k, gamma.clone(), d0.clone())?, op.level)?;
        canonical_ok &= canon.pass;
        let mut worst: f64 = 0.0;
        let mut failures = 0usize;
        for _ in 0..op.trials {
            let sys = IndicatorSystem::random(&mut rng, d0.clone())?;
            let r = lemma_bound_check(&sys, op.level)?;
            worst = worst.max(r.sum / r.bound);
            degenerate += r.degenerate as usize;
            failures += !r.pass as usize;
        }
        random_ok &= failures == 0;
        rows.push(vec![rational_to_f64(&d0), canon.sum, canon.bound, worst, failures as f64]);
    }
    Ok(Outcome {
        result: json!({
            "trials_per_mesh": op.trials,
            "degenerate": degenerate,
            "rows": rows,
        }),
        verdicts: verdicts([("canonical", canonical_ok), ("random", random_ok)]),
        series: Some(Series { header: vec!["d0", "canonical_sum", "bound", "worst_random_ratio", "failures"], rows }),
    })
}

fn rcd(op: &RcdOp, sc: &Scenario) -> Result<Outcome, CliError> {
    let per = op.atoms_per_block;
    if per == 0 || op.resolution == 0 || !per.is_multiple_of(op.resolution) || per > 8 {
        return Err(CliError::Invalid("rcd: atoms_per_block must be a multiple of resolution and at most 8".into()));
    }
    let n = 2 * per;
    let space = std::sync::Arc::new(DiscreteSpace::uniform(n)?);
    let f_alg = SigmaPartition::from_labels(&(0..n).map(|t| t / per).collect::<Vec<_>>());
    let t_alg = SigmaPartition::singletons(n);
    let vals = [TruncVector::new(vec![1.0, 0.0]), TruncVector::new(vec![0.0, 1.0])];
    let corr = Correspondence::constant(space, vals.to_vec())?;
    let coarse: Vec<Selection> = enumerate_selections(&corr, &f_alg, 16)?.collect();
    let every: Vec<TransitionKernel> = enumerate_selections(&corr, &t_alg, sc.cap)?
        .map(|s| rcd_of_selection(&s, &f_alg))
        .collect::<corrint::Result<_>>()?;
    let (mut realized, mut brute, mut checked) = (true, true, 0usize);
    for s1 in &coarse {
        for s2 in &coarse {
            let (k1, k2) = (rcd_of_selection(s1, &f_alg)?, rcd_of_selection(s2, &f_alg)?);
            for i in 0..=op.resolution {
                let alpha = ratio(i as i64, op.resolution as i64);
                let target = kernel_mix(&k1, &k2, &alpha)?;
                let g = lyapunov_mix(&[s1.clone(), s2.clone()], &[alpha.clone(), Rational::one() - &alpha], &f_alg, &t_alg)?;
                realized &= kernels_equal(&rcd_of_selection(&g, &f_alg)?, &target);
                brute &= every.iter().any(|k| kernels_equal(k, &target));
                checked += 1;
            }
        }
    }
    Ok(Outcome {
        result: json!({
            "atoms": n,
            "mixtures": checked,
            "selections_enumerated": count_to_u64(&corr.selection_count(&t_alg)?),
        }),
        verdicts: verdicts([("realized", realized), ("brute_force", brute)]),
        series: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_prints_integers_plainly() {
        let s = Series { header: vec!["m", "gap"], rows: vec![vec![3.0, 0.125], vec![4.0, 1e-20]] };
        assert_eq!(s.to_csv(), "m,gap\n3,1.25e-1\n4,1e-20\n");
    }
}
