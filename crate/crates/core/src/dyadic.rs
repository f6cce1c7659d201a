//! Dyadic model of a space `T = T₁ ∪ T₂` with `λ(T₁) = 1 − γ`.
//!
//! `T₁` is `2^level` characteristic cells, each an `f_alg` block split into
//! `refinement` equal atoms (the finer `t_alg`). The atomic part `T₂` is a
//! single atom of mass `γ`, present only when `γ > 0`, and always atom `0`.
//! Cell `p` is mapped onto `γ + (1 − γ)[p/2^L, (p+1)/2^L)`; the map `φ` sends
//! every atom of the cell to that subinterval's midpoint and `T₂` to `γ/2`.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::measure_space::{rational_to_f64, ratio, DiscreteSpace, Rational, SigmaPartition};
use crate::walsh::{walsh_set, WalshIndex};

#[derive(Debug, Clone)]
pub struct DyadicModel {
    gamma: Rational,
    level: u32,
    refinement: usize,
    space: Arc<DiscreteSpace>,
    f_alg: SigmaPartition,
    t_alg: SigmaPartition,
    t2_atom: Option<usize>,
    cell_of_atom: Vec<Option<usize>>,
    phi: Vec<f64>,
}

impl DyadicModel {
    pub fn new(gamma: Rational, level: u32, refinement: usize) -> Result<Self> {
        if gamma.is_negative() || gamma >= Rational::one() {
            return Err(Error::InvalidSpace(format!("gamma must lie in [0, 1), got {gamma}")));
        }
        if refinement == 0 {
            return Err(Error::InvalidSpace("refinement must be at least 1".into()));
        }
        if level > 24 {
            return Err(Error::InvalidSpace(format!("level {level} is too fine")));
        }
        let cells = 1usize << level;
        let one_minus = Rational::one() - &gamma;
        let atom_mass = &one_minus / Rational::from_integer(((cells * refinement) as i64).into());

        let mut masses = Vec::with_capacity(cells * refinement + 1);
        let mut cell_of_atom = Vec::with_capacity(cells * refinement + 1);
        let mut phi = Vec::with_capacity(cells * refinement + 1);
        let mut f_blocks = Vec::with_capacity(cells + 1);
        let t2_atom = if gamma.is_zero() {
            None
        } else {
            masses.push(gamma.clone());
            cell_of_atom.push(None);
            phi.push(rational_to_f64(&(&gamma / ratio(2, 1))));
            f_blocks.push(vec![0]);
            Some(0)
        };
        for p in 0..cells {
            let mid = &gamma + &one_minus * ratio(2 * p as i64 + 1, 2 * cells as i64);
            let mid = rational_to_f64(&mid);
            let start = masses.len();
            for _ in 0..refinement {
                masses.push(atom_mass.clone());
                cell_of_atom.push(Some(p));
                phi.push(mid);
            }
            f_blocks.push((start..masses.len()).collect());
        }
        let n = masses.len();
        let space = Arc::new(DiscreteSpace::new(masses, Some(format!("dyadic(gamma={gamma}, L={level}, r={refinement})")))?);
        let f_alg = SigmaPartition::new(n, f_blocks)?;
        let t_alg = SigmaPartition::singletons(n);
        Ok(DyadicModel { gamma, level, refinement, space, f_alg, t_alg, t2_atom, cell_of_atom, phi })
    }

    /// One atom per cell: `t_alg` and `f_alg` coincide.
    pub fn coinciding(gamma: Rational, level: u32) -> Result<Self> {
        Self::new(gamma, level, 1)
    }

    pub fn gamma(&self) -> &Rational {
        &self.gamma
    }

    pub fn gamma_f64(&self) -> f64 {
        rational_to_f64(&self.gamma)
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn n_cells(&self) -> usize {
        1 << self.level
    }

    pub fn refinement(&self) -> usize {
        self.refinement
    }

    pub fn space(&self) -> &Arc<DiscreteSpace> {
        &self.space
    }

    /// Characteristic-type algebra: one block per cell, plus `T₂`.
    pub fn f_alg(&self) -> &SigmaPartition {
        &self.f_alg
    }

    /// Strategy / selection algebra: singletons.
    pub fn t_alg(&self) -> &SigmaPartition {
        &self.t_alg
    }

    pub fn t2_atom(&self) -> Option<usize> {
        self.t2_atom
    }

    pub fn cell_of(&self, atom: usize) -> Option<usize> {
        self.cell_of_atom[atom]
    }

    pub fn phi(&self, atom: usize) -> f64 {
        self.phi[atom]
    }

    pub fn t1_atoms(&self) -> BTreeSet<usize> {
        (0..self.space.len()).filter(|&a| self.cell_of_atom[a].is_some()).collect()
    }

    pub fn t1_mass(&self) -> Rational {
        Rational::one() - &self.gamma
    }

    /// `D_n = φ^{-1}({l ∈ (γ,1] : W_n((l−γ)/(1−γ)) = 1})`.
    pub fn walsh_event(&self, n: u64) -> Result<BTreeSet<usize>> {
        let cells: BTreeSet<usize> = walsh_set(WalshIndex(n), self.level)?.into_iter().collect();
        Ok((0..self.space.len())
            .filter(|&a| self.cell_of_atom[a].is_some_and(|c| cells.contains(&c)))
            .collect())
    }
}
