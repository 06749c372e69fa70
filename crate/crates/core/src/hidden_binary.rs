//! Detection of hidden binary variables: coordinates for which some global
//! minimizer over the box lies in `{0, 1}`.
//!
//! Three sufficient conditions are checked, each leaving a certificate that can
//! be re-verified by a coefficient sign scan:
//!
//! * `quadratic_diag`: for quadratics, the coefficient of `x_i²` is `≤ 0`;
//! * `concave_coeffs`: writing `f = Σ_m a_m(x_{-i}) x_i^m`, every `a_m` with
//!   `m ≥ 2` has only nonpositive coefficients;
//! * `chord_dominance`: `f - (1-x_i) f(x_{-i},0) - x_i f(x_{-i},1)` equals
//!   `x_i (1 - x_i) H_i` with `H_i` having only nonnegative coefficients.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{Polynomial, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    QuadraticDiag,
    ConcaveCoeffs,
    ChordDominance,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Witness {
    /// `q_ii`
    Diagonal(Rational),
    /// `(m, a_m)` for every `m ≥ 2` with `a_m ≠ 0`
    PowerCoefficients(Vec<(u32, Polynomial)>),
    /// `H_i`
    ChordQuotient(Polynomial),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BinaryCertificate {
    pub variable: usize,
    pub rule: Rule,
    pub witness: Witness,
}

impl BinaryCertificate {
    /// Re-runs the sign scan on the stored witness.
    pub fn verify(&self) -> bool {
        match (&self.rule, &self.witness) {
            (Rule::QuadraticDiag, Witness::Diagonal(q)) => !q.is_positive(),
            (Rule::ConcaveCoeffs, Witness::PowerCoefficients(a)) => a.iter().all(|(m, p)| {
                *m >= 2 && !p.mentions(self.variable) && p.terms().all(|(_, c)| !c.is_positive())
            }),
            (Rule::ChordDominance, Witness::ChordQuotient(h)) => {
                h.terms().all(|(_, c)| !c.is_negative())
            }
            _ => false,
        }
    }
}

/// Result of a detection pass.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    pub vminus: BTreeSet<usize>,
    pub vplus: BTreeSet<usize>,
    pub certificates: BTreeMap<usize, BinaryCertificate>,
}

/// Quadratic rule: `i` is hidden binary iff `q_ii ≤ 0`.
pub fn detect_quadratic(p: &Polynomial) -> Result<Partition> {
    let d = p.degree();
    if d > 2 {
        return Err(Error::DegreeTooHigh { max: 2, got: d });
    }
    let mut out = Partition {
        vminus: BTreeSet::new(),
        vplus: BTreeSet::new(),
        certificates: BTreeMap::new(),
    };
    for i in 0..p.nvars() {
        let q = p.diagonal(i);
        if q.is_positive() {
            out.vplus.insert(i);
        } else {
            out.vminus.insert(i);
            out.certificates.insert(
                i,
                BinaryCertificate {
                    variable: i,
                    rule: Rule::QuadraticDiag,
                    witness: Witness::Diagonal(q),
                },
            );
        }
    }
    Ok(out)
}

/// Power-coefficient test for one variable.
pub fn concave_coeffs_certificate(p: &Polynomial, i: usize) -> Result<Option<BinaryCertificate>> {
    let local = p.filter_terms(|m| m.exponent(i) >= 2);
    let a = local.collect_in_variable(i)?;
    let ok = a
        .iter()
        .all(|am| am.terms().all(|(_, c)| !c.is_positive()));
    Ok(ok.then_some(BinaryCertificate {
        variable: i,
        rule: Rule::ConcaveCoeffs,
        witness: Witness::PowerCoefficients(
            a.into_iter()
                .enumerate()
                .skip(2)
                .filter(|(_, am)| !am.is_zero())
                .map(|(m, am)| (m as u32, am))
                .collect(),
        ),
    }))
}

/// Chord test for one variable.
pub fn chord_dominance_certificate(p: &Polynomial, i: usize) -> Result<Option<BinaryCertificate>> {
    // terms without x_i cancel in the chord deficit
    let local = p.filter_terms(|m| m.exponent(i) > 0);
    let cd = local.chord_deficit(i)?;
    let ok = cd.h.terms().all(|(_, c)| !c.is_negative());
    Ok(ok.then_some(BinaryCertificate {
        variable: i,
        rule: Rule::ChordDominance,
        witness: Witness::ChordQuotient(cd.h),
    }))
}

/// General-degree rule: the power-coefficient test, then the chord test.
pub fn detect_general(p: &Polynomial) -> Result<Partition> {
    let mut out = Partition {
        vminus: BTreeSet::new(),
        vplus: BTreeSet::new(),
        certificates: BTreeMap::new(),
    };
    for i in 0..p.nvars() {
        let cert = match concave_coeffs_certificate(p, i)? {
            Some(c) => Some(c),
            None => chord_dominance_certificate(p, i)?,
        };
        match cert {
            Some(c) => {
                out.vminus.insert(i);
                out.certificates.insert(i, c);
            }
            None => {
                out.vplus.insert(i);
            }
        }
    }
    Ok(out)
}

/// [`detect_quadratic`] for degree at most two, [`detect_general`] otherwise.
pub fn detect(p: &Polynomial) -> Result<Partition> {
    if p.degree() <= 2 {
        detect_quadratic(p)
    } else {
        detect_general(p)
    }
}
