//! Regular conditional distributions of selections as finite transition
//! kernels: one discrete distribution per block of the conditioning algebra.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::correspondence::MeasurableMap;
use crate::error::{Error, Result};
use crate::measure_space::{format_rational, parse_rational, rational_to_f64, Rational, SigmaPartition};
use crate::sequence_space::TruncVector;
use crate::DEDUP_TOL;

#[derive(Debug, Clone, PartialEq)]
pub struct KernelBlock {
    pub atoms: Vec<usize>,
    pub mass: Rational,
    /// Support points in lexicographic order with their exact weights.
    pub support: Vec<(TruncVector, Rational)>,
}

impl KernelBlock {
    pub fn barycenter(&self) -> TruncVector {
        let mut acc = TruncVector::zeros(self.support[0].0.dim());
        for (v, w) in &self.support {
            acc.axpy(rational_to_f64(w), v);
        }
        acc
    }

    fn weight_at(&self, v: &TruncVector) -> Rational {
        self.support
            .iter()
            .find(|(x, _)| x.approx_eq(v, DEDUP_TOL))
            .map(|(_, w)| w.clone())
            .unwrap_or_else(Rational::zero)
    }
}

/// Adds weight to a support list, merging points within [`DEDUP_TOL`];
/// zero weights are dropped.
fn add_mass(support: &mut Vec<(TruncVector, Rational)>, v: &TruncVector, w: Rational) {
    if w.is_zero() {
        return;
    }
    match support.iter_mut().find(|(x, _)| x.approx_eq(v, DEDUP_TOL)) {
        Some((_, acc)) => *acc += w,
        None => support.push((v.clone(), w)),
    }
}

fn canonical(mut support: Vec<(TruncVector, Rational)>) -> Vec<(TruncVector, Rational)> {
    support.sort_by(|a, b| a.0.lex_cmp(&b.0));
    support
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel {
    blocks: Vec<KernelBlock>,
}

impl TransitionKernel {
    pub fn new(blocks: Vec<KernelBlock>) -> Result<Self> {
        for (i, b) in blocks.iter().enumerate() {
            if b.support.is_empty() {
                return Err(Error::Precondition(format!("block {i} has empty support")));
            }
            if b.support.iter().any(|(_, w)| w < &Rational::zero()) {
                return Err(Error::Precondition(format!("block {i} has a negative weight")));
            }
            let total: Rational = b.support.iter().map(|(_, w)| w.clone()).sum();
            if !total.is_one() {
                return Err(Error::Precondition(format!("block {i} weights sum to {total}")));
            }
        }
        Ok(TransitionKernel { blocks })
    }

    pub fn blocks(&self) -> &[KernelBlock] {
        &self.blocks
    }

    /// Blockwise barycenters `∫ x φ(B, dx)`.
    pub fn barycenter(&self) -> Vec<TruncVector> {
        self.blocks.iter().map(KernelBlock::barycenter).collect()
    }

    fn same_blocks(&self, other: &TransitionKernel) -> bool {
        self.blocks.len() == other.blocks.len()
            && self.blocks.iter().zip(&other.blocks).all(|(a, b)| a.atoms == b.atoms && a.mass == b.mass)
    }

    /// True iff every block puts exactly one atom of weight 1.
    pub fn is_point_mass(&self) -> bool {
        self.blocks.iter().all(|b| b.support.len() == 1)
    }

    pub fn to_docs(&self) -> Vec<KernelDoc> {
        self.blocks
            .iter()
            .enumerate()
            .map(|(i, b)| KernelDoc {
                block: i,
                support: b.support.iter().map(|(v, _)| v.clone()).collect(),
                weights: b.support.iter().map(|(_, w)| format_rational(w)).collect(),
            })
            .collect()
    }
}

/// `λ^{f|𝒢}`: per block, the distribution of `f` under `mass(t)/mass(B)`.
pub fn rcd_of_selection(f: &MeasurableMap, g_alg: &SigmaPartition) -> Result<TransitionKernel> {
    g_alg.check_space(f.space())?;
    let space = f.space();
    let blocks = g_alg
        .blocks()
        .iter()
        .map(|b| {
            let mass = space.mass_of(b);
            if mass.is_zero() {
                return Err(Error::DegenerateBlock(b.clone()));
            }
            let mut support = Vec::new();
            for &t in b {
                add_mass(&mut support, f.value(t), space.mass(t) / &mass);
            }
            Ok(KernelBlock { atoms: b.clone(), mass, support: canonical(support) })
        })
        .collect::<Result<Vec<_>>>()?;
    TransitionKernel::new(blocks)
}

/// `α k1 + (1 − α) k2`, blockwise.
pub fn kernel_mix(k1: &TransitionKernel, k2: &TransitionKernel, alpha: &Rational) -> Result<TransitionKernel> {
    if !k1.same_blocks(k2) {
        return Err(Error::Structural("kernels have different block structures".into()));
    }
    if alpha < &Rational::zero() || alpha > &Rational::one() {
        return Err(Error::Precondition(format!("mixing weight {alpha} outside [0, 1]")));
    }
    let beta = Rational::one() - alpha;
    let blocks = k1
        .blocks
        .iter()
        .zip(&k2.blocks)
        .map(|(a, b)| {
            let mut support = Vec::new();
            for (v, w) in &a.support {
                add_mass(&mut support, v, w * alpha);
            }
            for (v, w) in &b.support {
                add_mass(&mut support, v, w * &beta);
            }
            KernelBlock { atoms: a.atoms.clone(), mass: a.mass.clone(), support: canonical(support) }
        })
        .collect();
    TransitionKernel::new(blocks)
}

/// Exact equality: same blocks, same support points (at [`DEDUP_TOL`]) and
/// identical rational weights.
pub fn kernels_equal(k1: &TransitionKernel, k2: &TransitionKernel) -> bool {
    k1.same_blocks(k2)
        && k1.blocks.iter().zip(&k2.blocks).all(|(a, b)| {
            a.support.len() == b.support.len() && a.support.iter().all(|(v, w)| &b.weight_at(v) == w)
        })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelDistance {
    pub value: f64,
    /// Number of test functions, the constant included.
    pub family_size: usize,
    /// The kernels differ but no test function tells them apart.
    pub separation_failure: bool,
}

/// Largest gap of `Σ_B mass(B) ∫ c dφ(B)` over the test functions
/// `1_B · clip(x_m*, ±clip)` and the constant `1`.
pub fn kernel_distance(k1: &TransitionKernel, k2: &TransitionKernel, clip: f64) -> Result<KernelDistance> {
    if !k1.same_blocks(k2) {
        return Err(Error::Structural("kernels have different block structures".into()));
    }
    let dim = k1.blocks.first().map(|b| b.support[0].0.dim()).unwrap_or(0);
    let integral = |b: &KernelBlock, m: usize| -> f64 {
        b.support
            .iter()
            .map(|(v, w)| rational_to_f64(w) * v.coeffs()[m].clamp(-clip, clip))
            .sum::<f64>()
            * rational_to_f64(&b.mass)
    };
    let mut value: f64 = 0.0;
    for (a, b) in k1.blocks.iter().zip(&k2.blocks) {
        for m in 0..dim {
            value = value.max((integral(a, m) - integral(b, m)).abs());
        }
    }
    Ok(KernelDistance {
        value,
        family_size: k1.blocks.len() * dim + 1,
        separation_failure: value == 0.0 && !kernels_equal(k1, k2),
    })
}

/// JSON form of one kernel block.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct KernelDoc {
    pub block: usize,
    pub support: Vec<TruncVector>,
    pub weights: Vec<String>,
}

impl KernelDoc {
    pub fn weights(&self) -> Result<Vec<Rational>> {
        self.weights.iter().map(|w| parse_rational(w)).collect()
    }
}
