//! Seeded generators of structured instances with known structural bounds.
//!
//! Every generator separates continuous variables (a positive square
//! coefficient, so neither hidden-binary test applies) from binary variables
//! (every term has degree at most one in them, plus a nonpositive square in
//! the quadratic case).
//!
//! * `path-blocks`: continuous `p_1..p_m` alternating with binary
//!   `z_1..z_{m-1}` on a path (`p_i = 2(i-1)`, `z_i = 2i-1`), couplings
//!   `p_i z_i` and `z_i p_{i+1}`.
//! * `tree-backbone`: blocks `C_r` of `block_size` continuous variables, each
//!   fully coupled internally and to a binary neighborhood `N_r` of
//!   `nbr_size` nodes. `N_0` is fresh; for `r ≥ 1` a parent `r' < r` is drawn
//!   and `N_r` takes `⌈nbr_size/2⌉` nodes of `N_{r'}` plus `⌊nbr_size/2⌋`
//!   fresh ones. Binaries inside each `N_r` are fully coupled. The sets
//!   `C_r ∪ N_r` form a clique tree, so the treewidth is at most
//!   `block_size + nbr_size - 1`.
//! * `random-sparse`: the `tree-backbone` skeleton with each coupling kept
//!   with probability one half, except a path through every block.
//!
//! Stream `r + 1` of the seed drives block `r`; stream 0 drives the tree
//! shape.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::Bounds;
use crate::poly::{int, Monomial, Polynomial, Rational};
use crate::rng::SplitMix64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenKind {
    PathBlocks,
    TreeBackbone,
    RandomSparse,
}

impl FromStr for GenKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "path-blocks" => Ok(GenKind::PathBlocks),
            "tree-backbone" => Ok(GenKind::TreeBackbone),
            "random-sparse" => Ok(GenKind::RandomSparse),
            _ => Err(Error::InvalidArgument(format!("unknown generator kind {s:?}"))),
        }
    }
}

impl fmt::Display for GenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GenKind::PathBlocks => "path-blocks",
            GenKind::TreeBackbone => "tree-backbone",
            GenKind::RandomSparse => "random-sparse",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenSpec {
    pub kind: GenKind,
    /// Number of continuous blocks.
    pub m: usize,
    /// Ignored by `path-blocks` (always 1).
    pub block_size: usize,
    /// Ignored by `path-blocks` (always 2).
    pub nbr_size: usize,
    /// 2 or 3.
    pub degree: u32,
    pub seed: u64,
    /// Coefficients are integers in `[-coef_range, coef_range]`.
    pub coef_range: i64,
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.into()));
        if self.m == 0 {
            return bad("m must be positive");
        }
        if !(2..=3).contains(&self.degree) {
            return bad("degree must be 2 or 3");
        }
        if self.coef_range < 1 {
            return bad("coef_range must be at least 1");
        }
        if self.kind != GenKind::PathBlocks && self.block_size == 0 {
            return bad("block_size must be positive");
        }
        Ok(())
    }

    fn effective_sizes(&self) -> (usize, usize) {
        match self.kind {
            GenKind::PathBlocks => (1, if self.m == 1 { 0 } else { 2 }),
            _ => (self.block_size, self.nbr_size),
        }
    }

    /// Number of variables of the generated instance.
    pub fn num_vars(&self) -> usize {
        match self.kind {
            GenKind::PathBlocks => 2 * self.m - 1,
            _ => {
                let k = self.nbr_size;
                self.m * self.block_size + k + (self.m - 1) * (k / 2)
            }
        }
    }

    /// Treewidth bound implied by the construction: on the interaction graph
    /// for degree 2, on the incidence graph for degree 3.
    pub fn width_bound(&self) -> usize {
        let (b, k) = self.effective_sizes();
        match self.kind {
            GenKind::PathBlocks => 1,
            // every clique C_r ∪ N_r of the clique tree; incidence graph
            // bags add at most one edge node to a primal bag
            _ => (b + k).saturating_sub(1) + usize::from(self.degree >= 3),
        }
    }

    /// Bounds under which the generated instance passes the assumption check.
    pub fn bounds(&self) -> Bounds {
        let (b, k) = self.effective_sizes();
        let w = self.width_bound();
        Bounds {
            tw_max: w,
            itw_max: w,
            block_max: b,
            nbr_max: k,
        }
    }
}

struct Builder {
    n: usize,
    terms: BTreeMap<Monomial, Rational>,
    range: i64,
}

impl Builder {
    fn fresh(&mut self) -> usize {
        self.n += 1;
        self.n - 1
    }

    fn add(&mut self, m: Monomial, c: i64) {
        if c != 0 {
            *self.terms.entry(m).or_insert_with(|| int(0)) += int(c);
        }
    }

    fn nonzero(&self, rng: &mut SplitMix64) -> i64 {
        let c = rng.range(1, self.range);
        if rng.chance(1, 2) {
            -c
        } else {
            c
        }
    }

    /// Square (and cube) terms making `v` continuous.
    fn continuous(&mut self, rng: &mut SplitMix64, v: usize, degree: u32) {
        let c2 = rng.range(1, self.range);
        self.add(Monomial::pow(v, 2), c2);
        if degree >= 3 {
            let c3 = rng.range(0, self.range);
            self.add(Monomial::pow(v, 3), c3);
        }
        let c1 = rng.range(-self.range, self.range);
        self.add(Monomial::var(v), c1);
    }

    /// Nonpositive square (degree 2 only) and a linear term.
    fn binary(&mut self, rng: &mut SplitMix64, v: usize, degree: u32) {
        if degree == 2 {
            let c = rng.range(-self.range, 0);
            self.add(Monomial::pow(v, 2), c);
        }
        let c1 = rng.range(-self.range, self.range);
        self.add(Monomial::var(v), c1);
    }

    /// Coupling of continuous `c` and binary `z`; for degree 3 also `c² z`.
    fn cont_bin(&mut self, rng: &mut SplitMix64, c: usize, z: usize, degree: u32) {
        let k = self.nonzero(rng);
        self.add(Monomial::from_pairs([(c, 1), (z, 1)]), k);
        if degree >= 3 && rng.chance(1, 2) {
            let k = self.nonzero(rng);
            self.add(Monomial::from_pairs([(c, 2), (z, 1)]), k);
        }
    }

    fn cont_cont(&mut self, rng: &mut SplitMix64, a: usize, b: usize, degree: u32) {
        let k = self.nonzero(rng);
        self.add(Monomial::from_pairs([(a, 1), (b, 1)]), k);
        if degree >= 3 && rng.chance(1, 2) {
            let k = self.nonzero(rng);
            self.add(Monomial::from_pairs([(a, 2), (b, 1)]), k);
        }
    }
}

pub fn generate(spec: &GenSpec) -> Result<Polynomial> {
    spec.validate()?;
    let mut b = Builder {
        n: 0,
        terms: BTreeMap::new(),
        range: spec.coef_range,
    };
    let d = spec.degree;
    match spec.kind {
        GenKind::PathBlocks => {
            let m = spec.m;
            for i in 0..m {
                let mut rng = SplitMix64::stream(spec.seed, i as u64 + 1);
                let p = 2 * i;
                b.continuous(&mut rng, p, d);
                if i + 1 < m {
                    let z = 2 * i + 1;
                    b.binary(&mut rng, z, d);
                    b.cont_bin(&mut rng, p, z, d);
                    b.cont_bin(&mut rng, 2 * i + 2, z, d);
                }
            }
            b.n = 2 * m - 1;
        }
        GenKind::TreeBackbone | GenKind::RandomSparse => {
            let sparse = spec.kind == GenKind::RandomSparse;
            let k = spec.nbr_size;
            let mut shape = SplitMix64::stream(spec.seed, 0);
            let mut nbrs: Vec<Vec<usize>> = Vec::with_capacity(spec.m);
            for r in 0..spec.m {
                let mut rng = SplitMix64::stream(spec.seed, r as u64 + 1);
                let mut nr: Vec<usize> = if r == 0 {
                    Vec::new()
                } else {
                    let parent = shape.below(r as u64) as usize;
                    shape.sample(&nbrs[parent], k.div_ceil(2))
                };
                let fresh_count = if r == 0 { k } else { k / 2 };
                let fresh: Vec<usize> = (0..fresh_count).map(|_| b.fresh()).collect();
                for &z in &fresh {
                    b.binary(&mut rng, z, d);
                }
                nr.extend(fresh);
                nr.sort_unstable();
                let cont: Vec<usize> = (0..spec.block_size).map(|_| b.fresh()).collect();
                for &c in &cont {
                    b.continuous(&mut rng, c, d);
                }
                for (x, &ci) in cont.iter().enumerate() {
                    for (y, &cj) in cont.iter().enumerate().skip(x + 1) {
                        if !sparse || y == x + 1 || rng.chance(1, 2) {
                            b.cont_cont(&mut rng, ci, cj, d);
                        }
                    }
                    for &z in &nr {
                        if !sparse || rng.chance(1, 2) {
                            b.cont_bin(&mut rng, ci, z, d);
                        }
                    }
                }
                for (x, &zi) in nr.iter().enumerate() {
                    for &zj in &nr[x + 1..] {
                        if !sparse || rng.chance(1, 2) {
                            let c = b.nonzero(&mut rng);
                            b.add(Monomial::from_pairs([(zi, 1), (zj, 1)]), c);
                        }
                    }
                }
                nbrs.push(nr);
            }
        }
    }
    Polynomial::from_terms(b.n, b.terms)
}
