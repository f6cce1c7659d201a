//! Finite probability spaces with exact rational masses, sigma-algebras as
//! partitions of atoms, nowhere equivalence and independent supplements.
//!
//! Every sigma-algebra on a finite set is generated by a partition, so a
//! [`SigmaPartition`] is all we need. Masses stay exact ([`Rational`]); the
//! cached `f64` copies only feed floating-point integration.

use std::collections::BTreeSet;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Builds `p/q` as an exact rational.
pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Parses `"p/q"` or `"p"`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let r = Rational::from_str(s.trim()).map_err(|e| Error::Parse(format!("rational {s:?}: {e}")))?;
    Ok(r)
}

/// `"p/q"`, or `"p"` for integers.
pub fn format_rational(r: &Rational) -> String {
    r.to_string()
}

/// Serde adapter storing a [`Rational`] as a `"p/q"` string.
pub mod rational_string {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

/// A finite atomic probability space. Atom ids are `0..len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSpace {
    masses: Vec<Rational>,
    masses_f64: Vec<f64>,
    label: Option<String>,
}

impl DiscreteSpace {
    pub fn new(masses: Vec<Rational>, label: Option<String>) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::InvalidSpace("no atoms".into()));
        }
        if let Some((i, m)) = masses.iter().enumerate().find(|(_, m)| !m.is_positive()) {
            return Err(Error::InvalidSpace(format!("atom {i} has non-positive mass {m}")));
        }
        let total: Rational = masses.iter().cloned().sum();
        if !total.is_one() {
            return Err(Error::InvalidSpace(format!("masses sum to {total}, not 1")));
        }
        let masses_f64 = masses.iter().map(rational_to_f64).collect();
        Ok(DiscreteSpace { masses, masses_f64, label })
    }

    /// `n` atoms of mass `1/n`.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSpace("no atoms".into()));
        }
        Self::new(vec![ratio(1, n as i64); n], None)
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn mass(&self, atom: usize) -> &Rational {
        &self.masses[atom]
    }

    pub fn mass_f64(&self, atom: usize) -> f64 {
        self.masses_f64[atom]
    }

    pub fn masses(&self) -> &[Rational] {
        &self.masses
    }

    pub fn mass_of<'a>(&self, atoms: impl IntoIterator<Item = &'a usize>) -> Rational {
        atoms.into_iter().map(|&a| self.masses[a].clone()).sum()
    }

    pub fn mass_of_f64<'a>(&self, atoms: impl IntoIterator<Item = &'a usize>) -> f64 {
        atoms.into_iter().map(|&a| self.masses_f64[a]).sum()
    }
}

/// A sigma-algebra on a finite space, stored as its generating partition.
///
/// Blocks are sorted internally and ordered by their smallest atom.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SigmaPartition {
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
}

impl SigmaPartition {
    pub fn new(n_atoms: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut blocks: Vec<Vec<usize>> = blocks
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b
            })
            .collect();
        if let Some(b) = blocks.iter().find(|b| b.is_empty()) {
            return Err(Error::Structural(format!("empty block {b:?}")));
        }
        blocks.sort_by_key(|b| b[0]);
        let mut block_of = vec![usize::MAX; n_atoms];
        for (bi, block) in blocks.iter().enumerate() {
            for w in block.windows(2) {
                if w[0] == w[1] {
                    return Err(Error::Structural(format!("atom {} repeated in a block", w[0])));
                }
            }
            for &a in block {
                if a >= n_atoms {
                    return Err(Error::Structural(format!("atom {a} outside 0..{n_atoms}")));
                }
                if block_of[a] != usize::MAX {
                    return Err(Error::Structural(format!("atom {a} lies in two blocks")));
                }
                block_of[a] = bi;
            }
        }
        if let Some(a) = block_of.iter().position(|&b| b == usize::MAX) {
            return Err(Error::Structural(format!("atom {a} not covered")));
        }
        Ok(SigmaPartition { blocks, block_of })
    }

    /// The trivial algebra `{T, ∅}`.
    pub fn trivial(n_atoms: usize) -> Self {
        Self::new(n_atoms, vec![(0..n_atoms).collect()]).expect("trivial partition")
    }

    /// The discrete algebra: every atom its own block.
    pub fn singletons(n_atoms: usize) -> Self {
        Self::new(n_atoms, (0..n_atoms).map(|a| vec![a]).collect()).expect("singleton partition")
    }

    /// Partition given by a label per atom; blocks are the label classes.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for (a, &l) in labels.iter().enumerate() {
            groups.entry(l).or_default().push(a);
        }
        Self::new(labels.len(), groups.into_values().collect()).expect("label partition")
    }

    pub fn n_atoms(&self) -> usize {
        self.block_of.len()
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, i: usize) -> &[usize] {
        &self.blocks[i]
    }

    pub fn block_of(&self, atom: usize) -> usize {
        self.block_of[atom]
    }

    fn check_universe(&self, other: &SigmaPartition) -> Result<()> {
        if self.n_atoms() != other.n_atoms() {
            return Err(Error::Structural(format!(
                "partitions over {} and {} atoms",
                self.n_atoms(),
                other.n_atoms()
            )));
        }
        Ok(())
    }

    pub fn check_space(&self, space: &DiscreteSpace) -> Result<()> {
        if self.n_atoms() != space.len() {
            return Err(Error::Structural(format!(
                "partition over {} atoms, space has {}",
                self.n_atoms(),
                space.len()
            )));
        }
        Ok(())
    }

    /// Coarsest common refinement.
    pub fn join(&self, other: &SigmaPartition) -> Result<SigmaPartition> {
        self.check_universe(other)?;
        let mut groups: std::collections::BTreeMap<(usize, usize), Vec<usize>> = Default::default();
        for a in 0..self.n_atoms() {
            groups.entry((self.block_of[a], other.block_of[a])).or_default().push(a);
        }
        SigmaPartition::new(self.n_atoms(), groups.into_values().collect())
    }
}

/// True iff every block of `fine` sits inside a block of `coarse`.
pub fn is_refinement(fine: &SigmaPartition, coarse: &SigmaPartition) -> Result<bool> {
    fine.check_universe(coarse)?;
    Ok(fine.blocks.iter().all(|b| {
        let target = coarse.block_of[b[0]];
        b.iter().all(|&a| coarse.block_of[a] == target)
    }))
}

/// Discrete nowhere equivalence: every `f_alg` block (all have positive mass
/// here) contains at least two `t_alg` blocks.
pub fn is_nowhere_equivalent(t_alg: &SigmaPartition, f_alg: &SigmaPartition) -> Result<bool> {
    if !is_refinement(t_alg, f_alg)? {
        return Err(Error::Precondition("t_alg does not refine f_alg".into()));
    }
    let mut counts = vec![0usize; f_alg.n_blocks()];
    for b in &t_alg.blocks {
        counts[f_alg.block_of[b[0]]] += 1;
    }
    Ok(counts.iter().all(|&c| c >= 2))
}

/// `n` equal-mass parts, each meeting every block of the reference algebra in
/// exactly `1/n` of the block's mass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupplementPartition {
    pub parts: Vec<Vec<usize>>,
    pub n: usize,
}

/// Splits every block into `n` consecutive runs of equal mass (atoms in
/// canonical order) and collects run `j` of every block into part `j`.
pub fn build_independent_supplement(
    space: &DiscreteSpace,
    f_alg: &SigmaPartition,
    n: usize,
) -> Result<SupplementPartition> {
    f_alg.check_space(space)?;
    if n < 2 {
        return Err(Error::Precondition(format!("supplement needs n >= 2, got {n}")));
    }
    let mut parts = vec![Vec::new(); n];
    for block in f_alg.blocks() {
        let runs = split_consecutive(space, block, &vec![ratio(1, n as i64); n])?;
        for (j, run) in runs.into_iter().enumerate() {
            parts[j].extend(run);
        }
    }
    for p in &mut parts {
        p.sort_unstable();
    }
    Ok(SupplementPartition { parts, n })
}

/// Cuts `atoms` (in the given order) into consecutive runs whose masses are
/// exactly `fractions[j] * mass(atoms)`. Zero fractions give empty runs.
pub(crate) fn split_consecutive(
    space: &DiscreteSpace,
    atoms: &[usize],
    fractions: &[Rational],
) -> Result<Vec<Vec<usize>>> {
    let total = space.mass_of(atoms);
    let mut runs = Vec::with_capacity(fractions.len());
    let mut it = atoms.iter().peekable();
    let mut target = Rational::zero();
    let mut acc = Rational::zero();
    for frac in fractions {
        target += frac * &total;
        let mut run = Vec::new();
        while acc < target {
            match it.next() {
                Some(&a) => {
                    acc += space.mass(a);
                    run.push(a);
                }
                None => break,
            }
        }
        if acc != target {
            return Err(Error::Divisibility {
                block: atoms.to_vec(),
                mass: format_rational(&total),
                parts: fractions.len(),
            });
        }
        runs.push(run);
    }
    if it.peek().is_some() {
        return Err(Error::Precondition("fractions do not sum to 1".into()));
    }
    Ok(runs)
}

/// Exact test of `mass(s ∩ d) * total = mass(s) * mass(d)`.
pub fn independence_product_check(
    space: &DiscreteSpace,
    s: &BTreeSet<usize>,
    d: &BTreeSet<usize>,
    total_mass: &Rational,
) -> bool {
    let inter = space.mass_of(s.intersection(d));
    inter * total_mass == space.mass_of(s) * space.mass_of(d)
}

/// The restricted space on `d`, with atoms renumbered in increasing order of
/// their original ids.
#[derive(Debug, Clone)]
pub struct Restriction {
    pub space: DiscreteSpace,
    pub alg: SigmaPartition,
    /// `original[new_id]` is the atom id in the parent space.
    pub original: Vec<usize>,
}

impl Restriction {
    /// Trace blocks expressed with the parent's atom ids.
    pub fn blocks_in_parent_ids(&self) -> Vec<Vec<usize>> {
        self.alg
            .blocks()
            .iter()
            .map(|b| b.iter().map(|&a| self.original[a]).collect())
            .collect()
    }
}

pub fn restrict(space: &DiscreteSpace, alg: &SigmaPartition, d: &BTreeSet<usize>) -> Result<Restriction> {
    alg.check_space(space)?;
    if let Some(&a) = d.iter().find(|&&a| a >= space.len()) {
        return Err(Error::Structural(format!("atom {a} outside the space")));
    }
    let total = space.mass_of(d);
    if total.is_zero() {
        return Err(Error::EmptyRestriction);
    }
    let original: Vec<usize> = d.iter().copied().collect();
    let mut new_id = vec![usize::MAX; space.len()];
    for (i, &a) in original.iter().enumerate() {
        new_id[a] = i;
    }
    let masses = original.iter().map(|&a| space.mass(a) / &total).collect();
    let blocks: Vec<Vec<usize>> = alg
        .blocks()
        .iter()
        .map(|b| b.iter().filter(|&&a| new_id[a] != usize::MAX).map(|&a| new_id[a]).collect::<Vec<_>>())
        .filter(|b: &Vec<usize>| !b.is_empty())
        .collect();
    let space = DiscreteSpace::new(masses, space.label.clone())?;
    let alg = SigmaPartition::new(original.len(), blocks)?;
    Ok(Restriction { space, alg, original })
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AtomDoc {
    pub id: usize,
    #[serde(with = "rational_string")]
    pub mass: Rational,
}

/// JSON form of a space with one partition:
/// `{"atoms":[{"id":0,"mass":"1/8"},...],"blocks":[[0,1],[2,3]]}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SpaceDoc {
    pub atoms: Vec<AtomDoc>,
    pub blocks: Vec<Vec<usize>>,
}

impl SpaceDoc {
    pub fn from_parts(space: &DiscreteSpace, alg: &SigmaPartition) -> Self {
        SpaceDoc {
            atoms: space
                .masses()
                .iter()
                .enumerate()
                .map(|(id, m)| AtomDoc { id, mass: m.clone() })
                .collect(),
            blocks: alg.blocks().to_vec(),
        }
    }

    pub fn into_parts(self) -> Result<(DiscreteSpace, SigmaPartition)> {
        for (i, a) in self.atoms.iter().enumerate() {
            if a.id != i {
                return Err(Error::InvalidSpace(format!("atom ids must be contiguous from 0; found {} at position {i}", a.id)));
            }
        }
        let n = self.atoms.len();
        let space = DiscreteSpace::new(self.atoms.into_iter().map(|a| a.mass).collect(), None)?;
        let alg = SigmaPartition::new(n, self.blocks)?;
        Ok((space, alg))
    }
}
