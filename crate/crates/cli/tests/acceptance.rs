//! Acceptance run: one line per criterion, each checked at its stated
//! tolerance and time budget against an oracle written here.
//!
//! Three criteria are known to fail on their stated desk instances; see
//! `KNOWN_RED`. For those the run asserts the failure mechanism instead, so
//! an unexpected pass or a different failure both stop the run.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use corrint::correspondence::{build_counterexample, build_counterexample_on, enumerate_selections, Correspondence, MeasurableMap, Selection};
use corrint::dyadic::DyadicModel;
use corrint::game::{
    lemma_bound_check, Externality, IndicatorSystem, LargeGame, SolveMode, SolveOptions, Start, StrategyProfile,
};
use corrint::measure_space::{ratio, rational_to_f64, DiscreteSpace, Rational, SigmaPartition};
use corrint::rcd::{kernel_mix, kernels_equal, rcd_of_selection, TransitionKernel};
use corrint::sequence_space::{Metric, NormFlavor, TruncVector};
use corrint::set_integration::{
    aumann_integral_set, conditional_expectation, conditional_set, gap_against, gap_targets, lyapunov_mix, uhc_diagnostic,
    CloudMode,
};
use corrint::walsh::walsh_sign_cell;

const L2: Metric = Metric::Norm(NormFlavor::Euclid);

/// Criteria whose stated instance does not have the stated property.
const KNOWN_RED: [usize; 3] = [7, 8, 9];

struct Line {
    id: usize,
    title: &'static str,
    pass: bool,
    secs: f64,
    detail: String,
}

fn timed(id: usize, title: &'static str, budget: f64, f: impl FnOnce() -> (bool, String)) -> Line {
    let t = Instant::now();
    let (ok, detail) = f();
    let secs = t.elapsed().as_secs_f64();
    let within = secs < budget;
    let detail = if within { detail } else { format!("{detail}; over budget {budget} s") };
    Line { id, title, pass: ok && within, secs, detail }
}

fn zero() -> Rational {
    ratio(0, 1)
}

fn mean_of(vs: &[TruncVector], weights: &[f64]) -> TruncVector {
    let mut acc = TruncVector::zeros(vs[0].dim());
    for (v, w) in vs.iter().zip(weights) {
        acc.axpy(*w, v);
    }
    acc
}

/// Sign of the `n`-th Paley-ordered Walsh function at the midpoint of cell
/// `p`, from the Rademacher product: digit `i` of the midpoint is bit
/// `L - i` of `p`.
fn walsh_oracle(n: u64, p: usize, level: u32) -> i64 {
    let mut s = 1;
    for i in 0..level {
        if (n >> i) & 1 == 1 && (p >> (level - 1 - i)) & 1 == 1 {
            s = -s;
        }
    }
    s
}

fn c1() -> Line {
    timed(1, "Walsh orthogonality, L = 8, m, n < 16", 1.0, || {
        let level = 8;
        let cells = 1usize << level;
        let mut worst = 0i64;
        let mut sign_mismatch = 0;
        for m in 0..16u64 {
            for p in 0..cells {
                if walsh_sign_cell(m, p, level) as i64 != walsh_oracle(m, p, level) {
                    sign_mismatch += 1;
                }
            }
            for n in 0..16u64 {
                let s: i64 = (0..cells).map(|p| (walsh_sign_cell(m, p, level) * walsh_sign_cell(n, p, level)) as i64).sum();
                let want = if m == n { cells as i64 } else { 0 };
                worst = worst.max((s - want).abs());
            }
        }
        (worst == 0 && sign_mismatch == 0, format!("max |sum - delta*2^L| = {worst}, sign mismatches {sign_mismatch}"))
    })
}

fn c2() -> Line {
    timed(2, "counterexample integrals, k = 2, N = 2, L = 5", 1.0, || {
        let mut err: f64 = 0.0;
        for gamma in [zero(), ratio(1, 4)] {
            let one_minus = rational_to_f64(&(Rational::one() - &gamma));
            let b = build_counterexample(2, gamma, 2, 5, 6).unwrap();
            err = err.max((b.e_list[0].norm(NormFlavor::Euclid) - one_minus).abs());
            for j in 0..2 {
                let want = TruncVector::basis(6, j).unwrap().scaled(one_minus);
                err = err.max(b.e_list[j].max_abs_diff(&want));
                err = err.max(b.f_list[j].integral_by_cells().max_abs_diff(&want));
            }
        }
        (err <= 1e-12, format!("max error {err:.1e} over gamma in {{0, 1/4}}"))
    })
}

/// Integrals of all `prod |choices|` cell-by-cell selections, cells of equal
/// mass `1 / choices.len()`.
fn all_cell_integrals(choices: &[Vec<TruncVector>]) -> Vec<TruncVector> {
    let w = 1.0 / choices.len() as f64;
    let mut out = vec![TruncVector::zeros(choices[0][0].dim())];
    for set in choices {
        out = out
            .iter()
            .flat_map(|acc| set.iter().map(move |v| { let mut a = acc.clone(); a.axpy(w, v); a }))
            .collect();
    }
    out
}

fn e1_choices(b: &corrint::correspondence::CounterexampleBundle, cells: usize) -> Vec<Vec<TruncVector>> {
    (0..cells)
        .map(|p| std::iter::once(TruncVector::zeros(b.dim)).chain(b.f_list.iter().map(|f| f.cell_value(p).clone())).collect())
        .collect()
}

fn c3() -> Line {
    timed(3, "necessity shadow, coinciding algebras, 3^8 selections", 10.0, || {
        let b = build_counterexample(2, zero(), 7, 3, 16).unwrap();
        let mid = b.midpoint();
        let oracle = all_cell_integrals(&e1_choices(&b, 8));
        let delta = oracle.iter().map(|v| L2.distance(v, &mid)).fold(f64::INFINITY, f64::min);
        let cloud = aumann_integral_set(&b.corr, b.model.t_alg(), 10_000, CloudMode::Enumerate).unwrap();
        let lib = cloud.nearest_distance(&mid, L2);
        let ok = oracle.len() == 6561 && !cloud.contains(&mid) && delta > 1e-9 && lib >= delta - 1e-12;
        (ok, format!("delta* = {delta:.6} (oracle over {}), library distance {lib:.6}", oracle.len()))
    })
}

fn c4() -> Line {
    timed(4, "Lyapunov exactness, 3 atoms per cell", 10.0, || {
        let model = DyadicModel::new(zero(), 3, 3).unwrap();
        let b = build_counterexample_on(&model, 2, 7, 16).unwrap();
        let n = model.space().len();
        let f = model.f_alg();
        let per_cell = |j: Option<usize>| -> Vec<TruncVector> {
            (0..n)
                .map(|t| match (model.cell_of(t), j) {
                    (Some(p), Some(j)) => b.f_list[j].cell_value(p).clone(),
                    _ => TruncVector::zeros(16),
                })
                .collect()
        };
        let sels: Vec<Selection> =
            [None, Some(0), Some(1)].into_iter().map(|j| Selection::new(&b.corr, f.clone(), per_cell(j)).unwrap()).collect();
        let third = ratio(1, 3);
        let g = lyapunov_mix(&sels, &[third.clone(), third.clone(), third.clone()], f, model.t_alg()).unwrap();
        let eg = conditional_expectation(&g, f).unwrap();
        let mut err: f64 = 0.0;
        let mut masses_exact = true;
        let mut brute_member = true;
        for (blk, got) in f.blocks().iter().zip(&eg.values) {
            let vals: Vec<TruncVector> = sels.iter().map(|s| s.value(blk[0]).clone()).collect();
            err = err.max(got.max_abs_diff(&mean_of(&vals, &[1.0 / 3.0; 3])));
            let block_mass = model.space().mass_of(blk);
            for v in &vals {
                let part: Vec<usize> = blk.iter().copied().filter(|&t| g.value(t) == v).collect();
                masses_exact &= model.space().mass_of(&part) == &block_mass * &third;
            }
            // some atom-wise choice from the block's value set averages to the target
            let set = b.corr.value_set(blk[0]);
            let choices: Vec<Vec<TruncVector>> = blk.iter().map(|_| set.to_vec()).collect();
            brute_member &= all_cell_integrals(&choices).iter().any(|v| v.approx_eq(got, 1e-9));
        }
        let lib_member = conditional_set(&b.corr, model.t_alg(), f, 1_000_000, CloudMode::Enumerate).unwrap().contains(&eg);
        let ok = err <= 1e-12 && masses_exact && brute_member && lib_member;
        (ok, format!("max error {err:.1e}, part masses exact {masses_exact}, brute-force member {brute_member}"))
    })
}

fn c5() -> Line {
    timed(5, "convexification decay, refinement 2^m, m = 1..6", 60.0, || {
        let mut gaps = Vec::new();
        let mut sizes_ok = true;
        let mut targets = None;
        for m in 1..=6u32 {
            let r = 1usize << m;
            let model = DyadicModel::new(zero(), 4, r).unwrap();
            let b = build_counterexample_on(&model, 1, 1, 2).unwrap();
            let cloud = aumann_integral_set(&b.corr, model.t_alg(), 10_000_000, CloudMode::Minkowski).unwrap();
            // f_1 takes two independent values on 8 cells each: a (8r+1)^2 lattice
            sizes_ok &= cloud.len() == (8 * r + 1) * (8 * r + 1);
            let t = targets.get_or_insert_with(|| gap_targets(&cloud, 64));
            gaps.push(gap_against(&cloud, t, L2));
        }
        let monotone = gaps.windows(2).all(|w| w[1] <= w[0]);
        let last = *gaps.last().unwrap();
        let shown: Vec<String> = gaps.iter().map(|g| format!("{g:.2e}")).collect();
        (monotone && last < 1e-3 && sizes_ok, format!("gaps [{}]", shown.join(", ")))
    })
}

fn c6() -> Line {
    timed(6, "tower and barycenter identities, 200 instances", 5.0, || {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut err: f64 = 0.0;
        for _ in 0..200 {
            let n = rng.gen_range(2..=10);
            let w: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=9)).collect();
            let total: i64 = w.iter().sum();
            let space = Arc::new(DiscreteSpace::new(w.iter().map(|&x| ratio(x, total)).collect(), None).unwrap());
            let fine: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let coarse: Vec<usize> = fine.iter().map(|l| l % 3).collect();
            let vals: Vec<TruncVector> = (0..n).map(|_| TruncVector::new((0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())).collect();
            let f = MeasurableMap::new(space.clone(), SigmaPartition::singletons(n), vals.clone()).unwrap();
            let (fa, ga) = (SigmaPartition::from_labels(&fine), SigmaPartition::from_labels(&coarse));
            let ef = conditional_expectation(&f, &fa).unwrap();
            let efg = conditional_expectation(&ef.to_map(space.clone()).unwrap(), &ga).unwrap();
            let eg = conditional_expectation(&f, &ga).unwrap();
            let bary = rcd_of_selection(&f, &ga).unwrap().barycenter();
            for (i, blk) in ga.blocks().iter().enumerate() {
                let mass: f64 = blk.iter().map(|&t| space.mass_f64(t)).sum();
                let direct = mean_of(&blk.iter().map(|&t| vals[t].clone()).collect::<Vec<_>>(), &blk.iter().map(|&t| space.mass_f64(t) / mass).collect::<Vec<_>>());
                err = err.max(efg.values[i].max_abs_diff(&eg.values[i]));
                err = err.max(bary[i].max_abs_diff(&eg.values[i]));
                err = err.max(direct.max_abs_diff(&eg.values[i]));
            }
        }
        (err <= 1e-12, format!("max error {err:.1e}"))
    })
}

fn c7() -> Line {
    timed(7, "u.h.c. semidistance along F^m -> F, m = 0..7", 30.0, || {
        let b = build_counterexample(2, zero(), 7, 3, 16).unwrap();
        let family: Vec<Correspondence> = (0..=7).map(|m| b.truncated_correspondence(m).unwrap()).collect();
        let t = b.model.t_alg();
        let norm = uhc_diagnostic(&family, &b.corr, t, None, 10_000, CloudMode::Enumerate, L2).unwrap();
        let weak = uhc_diagnostic(&family, &b.corr, t, None, 10_000, CloudMode::Enumerate, Metric::RhoW).unwrap();
        // oracle: brute-force integrals of every member, semidistance by full scan
        let lim_pts = all_cell_integrals(&(0..8).map(|p| b.corr.value_set(p).to_vec()).collect::<Vec<_>>());
        let mut oracle_err: f64 = 0.0;
        for (m, c) in family.iter().enumerate() {
            let pts = all_cell_integrals(&(0..8).map(|p| c.value_set(p).to_vec()).collect::<Vec<_>>());
            let sigma = pts
                .iter()
                .map(|a| lim_pts.iter().map(|x| L2.distance(a, x)).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max);
            oracle_err = oracle_err.max((sigma - norm[m]).abs());
        }
        let mono = |s: &[f64]| s.windows(2).all(|w| w[1] <= w[0]);
        let (norm_ok, weak_ok) = (mono(&norm) && norm[7] < 1e-6, mono(&weak) && weak[7] < 1e-6);
        let show = |s: &[f64]| s.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(", ");
        let red_as_analyzed = !norm_ok && weak_ok && oracle_err <= 1e-12 && norm[2] > norm[1];
        let detail = format!(
            "norm [{}] monotone {}; weak [{}] monotone {}; oracle agreement {oracle_err:.1e}; expected failure mechanism {}",
            show(&norm),
            mono(&norm),
            show(&weak),
            mono(&weak),
            red_as_analyzed
        );
        (norm_ok && weak_ok, detail)
    })
}

fn counterexample_game(level: u32, refinement: usize, n_trunc: u64, coincide: bool) -> (DyadicModel, LargeGame) {
    let model = DyadicModel::new(zero(), level, refinement).unwrap();
    let t_alg = if coincide { model.f_alg().clone() } else { model.t_alg().clone() };
    let dim = 2 * (n_trunc as usize + 1);
    let g = LargeGame::counterexample(&model, 2, n_trunc, dim, t_alg, Vec::new(), Externality::Integral, NormFlavor::Euclid).unwrap();
    (model, g)
}

fn c8() -> Line {
    timed(8, "game equilibrium by best-response iteration, 3 atoms per cell", 30.0, || {
        let (model, g) = counterexample_game(3, 3, 7, false);
        let p = g.counterexample_params().unwrap();
        let (prof, rep) = g.find_equilibrium(&SolveOptions::default()).unwrap();
        let part = g.verify_equilibrium_partition(&prof).unwrap();
        let dist = rep.distance_to_mean.unwrap();
        let ok = rep.converged && rep.residual < 1e-9 && dist <= 1e-9 && part.passes();

        // Mechanism: at θ > 0 every atom of a cell has the same unique best
        // response, so each iterate is cell-constant and its aggregate is at
        // least the oracle distance δ from ē; the iteration can never arrive.
        let cells = model.n_cells();
        let choices: Vec<Vec<TruncVector>> = (0..cells)
            .map(|c| {
                let atom = model.space().len() - cells * model.refinement() + c * model.refinement();
                let xs = p.xs(atom);
                std::iter::once(TruncVector::zeros(xs[0].dim())).chain((0..2).map(|i| corrint::game::mixed_point(xs, i))).collect()
            })
            .collect();
        let delta = all_cell_integrals(&choices).iter().map(|v| L2.distance(v, &p.e_mean)).fold(f64::INFINITY, f64::min);
        let mut agg = g.aggregate(&StrategyProfile { play: vec![0; model.space().len()] }).unwrap();
        let mut min_seen = f64::INFINITY;
        for _ in 0..50 {
            let prof = g.best_response_profile(&agg);
            agg = g.aggregate(&prof).unwrap();
            min_seen = min_seen.min(L2.distance(agg.at(0), &p.e_mean));
        }
        let seeded = SolveOptions { start: Start::Aggregate(p.e_mean.clone()), ..SolveOptions::default() };
        let (sp, srep) = g.find_equilibrium(&seeded).unwrap();
        let fixed_point = srep.converged && g.verify_equilibrium_partition(&sp).unwrap().passes();
        let red_as_analyzed = delta > 1e-3 && min_seen >= delta - 1e-12 && fixed_point;
        let detail = format!(
            "from the zero profile: residual {:.3e} after {} iterations, distance to mean {dist:.3e}, masses {:?}; \
             iterates stay >= delta = {delta:.4} (closest {min_seen:.4}); seeded at the mean: fixed point with masses {:?}; \
             expected failure mechanism {red_as_analyzed}",
            rep.residual,
            rep.iterations,
            part.masses,
            srep.partition.as_ref().map(|q| q.masses.clone()).unwrap_or_default(),
        );
        (ok, detail)
    })
}

/// `G(t)(a, b)` written out from the formula, independent of the library's
/// evaluation.
fn payoff_oracle(phi: f64, xs: &[TruncVector], a: &TruncVector, b: &TruncVector, e_mean: &TruncVector, beta: f64) -> f64 {
    let k = xs.len();
    let nrm = |v: &TruncVector| v.norm(NormFlavor::Euclid);
    let sum = mean_of(xs, &vec![1.0; k]);
    let ms: Vec<TruncVector> = xs.iter().map(|x| (x + &sum).scaled(1.0 / (k as f64 + 1.0))).collect();
    let root_gap = |i: usize, j: usize| 2.0 * (std::f64::consts::PI * (i as f64 - j as f64) / (k as f64 + 1.0)).sin().abs();
    let theta = beta * nrm(&(b - e_mean));
    let h = if theta == 0.0 || phi <= 0.0 {
        0.0
    } else {
        let q = ((phi / theta).floor() as usize) % (k + 1);
        let mut r = theta * (std::f64::consts::PI * phi / theta).sin().abs() * (nrm(a) + root_gap(0, q));
        for (i, m) in ms.iter().enumerate() {
            r *= nrm(&(a - m)) + root_gap(i + 1, q);
        }
        r
    };
    let pen = ms.iter().fold(nrm(a), |acc, m| acc * nrm(&(a - m)));
    -h - pen
}

fn c9() -> Line {
    timed(9, "game non-existence, coinciding algebras, 4 blocks, exhaustive", 120.0, || {
        let (model, g) = counterexample_game(2, 1, 3, true);
        let p = g.counterexample_params().unwrap();
        let opts = SolveOptions { mode: SolveMode::Exhaustive, ..SolveOptions::default() };
        let (prof, rep) = g.find_equilibrium(&opts).unwrap();
        let acts = g.actions();
        let n = model.space().len();
        let mut rho = f64::INFINITY;
        let mut argmin = Vec::new();
        let total = acts.len().pow(n as u32);
        for code in 0..total {
            let play: Vec<usize> = (0..n).map(|t| (code / acts.len().pow((n - 1 - t) as u32)) % acts.len()).collect();
            let b = mean_of(&play.iter().map(|&i| acts[i].clone()).collect::<Vec<_>>(), &vec![1.0 / n as f64; n]);
            let mut res: f64 = 0.0;
            for t in 0..n {
                let pay: Vec<f64> = acts.iter().map(|a| payoff_oracle(model.phi(t), p.xs(t), a, &b, &p.e_mean, p.beta)).collect();
                let best = pay.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                res = res.max(best - pay[play[t]]);
            }
            if res < rho {
                rho = res;
                argmin = play;
            }
        }
        let certified = rep.residual >= rho - 1e-15 && rho > 1e-9;
        // Mechanism: with four characteristic types the residue pattern of
        // the sampled φ can reproduce its own aggregate, so an exact
        // equilibrium exists.
        let red_as_analyzed = rho == 0.0 && rep.residual == 0.0 && prof.play == argmin;
        let detail = format!(
            "rho* = {rho:.3e} over {total} profiles (oracle), library minimum {:.3e} at {:?}, masses {:?}; expected failure mechanism {red_as_analyzed}",
            rep.residual,
            prof.play,
            rep.partition.as_ref().map(|q| q.masses.clone()).unwrap_or_default()
        );
        (certified, detail)
    })
}

fn c10() -> Line {
    timed(10, "weighted Walsh sum < 4 d0, d0 = 2^-3..2^-8", 30.0, || {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut failures = 0;
        let mut worst: f64 = 0.0;
        let mut canonical_ok = true;
        for e in 3..=8u32 {
            let d0 = ratio(1, 1 << e);
            canonical_ok &= lemma_bound_check(&IndicatorSystem::canonical(2, zero(), d0.clone()).unwrap(), 10).unwrap().pass;
            for _ in 0..1000 {
                let r = lemma_bound_check(&IndicatorSystem::random(&mut rng, d0.clone()).unwrap(), 10).unwrap();
                failures += !r.pass as usize;
                worst = worst.max(r.sum / r.bound);
            }
        }
        (canonical_ok && failures == 0, format!("6000 random systems, {failures} failures, worst sum / bound {worst:.4}"))
    })
}

fn c11() -> Line {
    timed(11, "RCD convexity, 2 blocks x 4 atoms, weights k/4", 5.0, || {
        let n = 8;
        let space = Arc::new(DiscreteSpace::uniform(n).unwrap());
        let f_alg = SigmaPartition::from_labels(&[0, 0, 0, 0, 1, 1, 1, 1]);
        let t_alg = SigmaPartition::singletons(n);
        let corr = Correspondence::constant(space, vec![TruncVector::new(vec![1.0, 0.0]), TruncVector::new(vec![0.0, 1.0])]).unwrap();
        let coarse: Vec<Selection> = enumerate_selections(&corr, &f_alg, 16).unwrap().collect();
        let every: Vec<TransitionKernel> =
            enumerate_selections(&corr, &t_alg, 256).unwrap().map(|s| rcd_of_selection(&s, &f_alg).unwrap()).collect();
        let (mut realized, mut brute, mut count) = (true, true, 0);
        for s1 in &coarse {
            for s2 in &coarse {
                let (k1, k2) = (rcd_of_selection(s1, &f_alg).unwrap(), rcd_of_selection(s2, &f_alg).unwrap());
                for i in 0..=4 {
                    let alpha = ratio(i, 4);
                    let target = kernel_mix(&k1, &k2, &alpha).unwrap();
                    let g = lyapunov_mix(&[s1.clone(), s2.clone()], &[alpha.clone(), Rational::one() - &alpha], &f_alg, &t_alg).unwrap();
                    realized &= kernels_equal(&rcd_of_selection(&g, &f_alg).unwrap(), &target);
                    brute &= every.iter().any(|k| kernels_equal(k, &target));
                    count += 1;
                }
            }
        }
        (realized && brute, format!("{count} mixtures, constructed {realized}, among {} brute-force kernels {brute}", every.len()))
    })
}

fn files_in(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .map(|rd| rd.filter_map(|e| e.ok()).map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())).collect())
        .unwrap_or_default();
    out.sort();
    out
}

fn c12() -> Line {
    timed(12, "determinism of every bundled scenario", 300.0, || {
        let scenarios = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios");
        let base = std::env::temp_dir().join(format!("corrint-acceptance-{}", std::process::id()));
        let mut runs = Vec::new();
        for (tag, threads) in [("a", "1"), ("b", "4")] {
            let (out, plot) = (base.join(tag).join("reports"), base.join(tag).join("plots"));
            let status = Command::new(env!("CARGO_BIN_EXE_corrint"))
                .env("CORRINT_THREADS", threads)
                .arg("--emit-plot-data")
                .arg(&plot)
                .arg("run")
                .arg(&scenarios)
                .arg("--out")
                .arg(&out)
                .output()
                .unwrap();
            runs.push((status.status.code(), files_in(&out), files_in(&plot)));
        }
        let _ = std::fs::remove_dir_all(&base);
        let n_scen = std::fs::read_dir(&scenarios).unwrap().count();
        let same = runs[0] == runs[1];
        let complete = runs[0].1.len() == n_scen;
        (same && complete, format!("{} reports and {} series byte-identical across runs with 1 and 4 threads: {same}", runs[0].1.len(), runs[0].2.len()))
    })
}

fn main() {
    // `cargo test` passes harness flags; a name filter other than ours skips the run
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return;
    }
    let checks: [fn() -> Line; 12] = [c1, c2, c3, c4, c5, c6, c7, c8, c9, c10, c11, c12];
    let mut unexpected = Vec::new();
    let mut passed = 0;
    for check in checks {
        let line = check();
        let verdict = if line.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {verdict} ({:.2} s) {}: {}", line.id, line.secs, line.title, line.detail);
        passed += line.pass as usize;
        let red = KNOWN_RED.contains(&line.id);
        let as_analyzed = !red || line.detail.ends_with("expected failure mechanism true");
        if line.pass == red || !as_analyzed {
            unexpected.push(line.id);
        }
    }
    println!("acceptance: {passed}/12 pass; known red {:?}", KNOWN_RED);
    if !unexpected.is_empty() {
        eprintln!("acceptance: unexpected outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
}
