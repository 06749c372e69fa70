//! Exact sparse multivariate polynomials with rational coefficients.
//!
//! Variables are 0-based. A [`Polynomial`] is kept in canonical form after
//! every operation: no zero coefficients are stored and no monomial carries a
//! zero exponent.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::mobius_transform;

pub type Rational = BigRational;

/// Largest arity accepted by [`multilinear_from_table`].
pub const DEFAULT_TABLE_ARITY_CAP: usize = 24;

pub fn rat(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

/// Parses `"<int>"` or `"<int>/<int>"` into a reduced rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::BadRational(s.to_string());
    let t = s.trim();
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let num = BigInt::from_str(num).map_err(|_| bad())?;
    let den = BigInt::from_str(den).map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(BigRational::new(num, den))
}

/// `"p"` for integers, `"p/q"` otherwise.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(if r.is_negative() {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    })
}

/// A power product `x_{i1}^{e1} ⋯ x_{ik}^{ek}` stored as `(variable, exponent)`
/// pairs sorted by variable with every exponent positive.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial(Vec<(usize, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(i: usize) -> Self {
        Monomial(vec![(i, 1)])
    }

    pub fn pow(i: usize, e: u32) -> Self {
        if e == 0 {
            Self::one()
        } else {
            Monomial(vec![(i, e)])
        }
    }

    /// Builds a monomial from arbitrary pairs, summing repeated variables and
    /// dropping zero exponents.
    pub fn from_pairs<I: IntoIterator<Item = (usize, u32)>>(pairs: I) -> Self {
        let mut m: BTreeMap<usize, u32> = BTreeMap::new();
        for (v, e) in pairs {
            *m.entry(v).or_default() += e;
        }
        Monomial(m.into_iter().filter(|&(_, e)| e > 0).collect())
    }

    pub fn exps(&self) -> &[(usize, u32)] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn exponent(&self, i: usize) -> u32 {
        self.0
            .binary_search_by_key(&i, |&(v, _)| v)
            .map(|k| self.0[k].1)
            .unwrap_or(0)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|&(v, _)| v)
    }

    pub fn support_len(&self) -> usize {
        self.0.len()
    }

    pub fn max_var(&self) -> Option<usize> {
        self.0.last().map(|&(v, _)| v)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial::from_pairs(self.0.iter().chain(other.0.iter()).copied())
    }

    /// Splits off variable `i`: returns the remaining monomial and the
    /// exponent `i` carried.
    pub fn split_var(&self, i: usize) -> (Monomial, u32) {
        let e = self.exponent(i);
        let rest = self.0.iter().copied().filter(|&(v, _)| v != i).collect();
        (Monomial(rest), e)
    }

    /// Replaces every positive exponent by one (`z^k = z` on binaries).
    pub fn multilinear(&self) -> Monomial {
        Monomial(self.0.iter().map(|&(v, _)| (v, 1)).collect())
    }

    pub fn map_vars(&self, f: impl Fn(usize) -> usize) -> Monomial {
        Monomial::from_pairs(self.0.iter().map(|&(v, e)| (f(v), e)))
    }

    /// Graded lexicographic comparison of exponent vectors: lower total degree
    /// first, then the vector with the larger exponent at the first differing
    /// variable comes first.
    pub fn grlex_cmp(&self, other: &Monomial) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| {
            let (mut a, mut b) = (self.0.iter().peekable(), other.0.iter().peekable());
            loop {
                match (a.peek(), b.peek()) {
                    (None, None) => return Ordering::Equal,
                    (Some(_), None) => return Ordering::Less,
                    (None, Some(_)) => return Ordering::Greater,
                    (Some(&&(va, ea)), Some(&&(vb, eb))) => {
                        if va != vb {
                            // the side mentioning the smaller variable has the
                            // larger exponent there
                            return va.cmp(&vb);
                        }
                        if ea != eb {
                            return eb.cmp(&ea);
                        }
                        a.next();
                        b.next();
                    }
                }
            }
        })
    }

    pub fn eval(&self, x: &[Rational]) -> Rational {
        let mut acc = Rational::one();
        for &(v, e) in &self.0 {
            if x[v].is_zero() {
                return Rational::zero();
            }
            acc *= num_traits::pow(x[v].clone(), e as usize);
        }
        acc
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .map(|&(v, e)| x[v].powi(e as i32))
            .product()
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (k, &(v, e)) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, "*")?;
            }
            if e == 1 {
                write!(f, "x{v}")?;
            } else {
                write!(f, "x{v}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Sparse polynomial over `nvars` variables with rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Monomial, Rational>,
}

/// A point of the unit box, exact or floating point.
#[derive(Clone, Debug, PartialEq)]
pub enum Point {
    Exact(Vec<Rational>),
    Float(Vec<f64>),
}

/// A polynomial value matching the mode of the point it came from.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Exact(Rational),
    Float(f64),
}

impl Value {
    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(r) => rational_to_f64(r),
            Value::Float(x) => *x,
        }
    }
}

impl Point {
    /// Checks every coordinate lies in `[0, 1]`.
    pub fn exact(coords: Vec<Rational>) -> Result<Self> {
        let zero = Rational::zero();
        let one = Rational::one();
        if let Some(k) = coords.iter().position(|c| *c < zero || *c > one) {
            return Err(Error::InvalidArgument(format!(
                "coordinate {k} = {} lies outside [0,1]",
                format_rational(&coords[k])
            )));
        }
        Ok(Point::Exact(coords))
    }

    pub fn float(coords: Vec<f64>) -> Result<Self> {
        if let Some(k) = coords.iter().position(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::InvalidArgument(format!(
                "coordinate {k} = {} lies outside [0,1]",
                coords[k]
            )));
        }
        Ok(Point::Float(coords))
    }

    pub fn len(&self) -> usize {
        match self {
            Point::Exact(c) => c.len(),
            Point::Float(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coord_f64(&self, i: usize) -> f64 {
        match self {
            Point::Exact(c) => rational_to_f64(&c[i]),
            Point::Float(c) => c[i],
        }
    }
}

/// Output of [`Polynomial::quadratic_parts`]: `p = xᵀQx + cᵀx + c0`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticParts {
    pub q: Vec<Vec<Rational>>,
    pub c: Vec<Rational>,
    pub c0: Rational,
}

/// Output of [`Polynomial::chord_deficit`].
#[derive(Clone, Debug, PartialEq)]
pub struct ChordDeficit {
    /// `f(x) - (1 - x_i) f(x_{-i}, 0) - x_i f(x_{-i}, 1)`
    pub delta: Polynomial,
    /// Quotient with `x_i (1 - x_i) · h = delta`.
    pub h: Polynomial,
    pub divisible: bool,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn var(nvars: usize, i: usize) -> Result<Self> {
        Self::from_terms(nvars, [(Monomial::var(i), Rational::one())])
    }

    /// Collects terms, summing duplicates and validating variable indices.
    pub fn from_terms<I: IntoIterator<Item = (Monomial, Rational)>>(
        nvars: usize,
        terms: I,
    ) -> Result<Self> {
        let mut p = Self::zero(nvars);
        for (m, c) in terms {
            if let Some(v) = m.max_var() {
                if v >= nvars {
                    return Err(Error::IndexOutOfRange { index: v, nvars });
                }
            }
            p.add_term(m, c);
        }
        Ok(p)
    }

    pub(crate) fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Same terms viewed in a space of `nvars` variables.
    pub fn with_nvars(&self, nvars: usize) -> Result<Self> {
        Self::from_terms(nvars, self.terms.clone())
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn into_terms(self) -> impl Iterator<Item = (Monomial, Rational)> {
        self.terms.into_iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    /// Maximum total degree; zero for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn degree_in(&self, i: usize) -> u32 {
        self.terms.keys().map(|m| m.exponent(i)).max().unwrap_or(0)
    }

    pub fn mentions(&self, i: usize) -> bool {
        self.terms.keys().any(|m| m.exponent(i) > 0)
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut p = self.clone();
        p.nvars = p.nvars.max(other.nvars);
        for (m, c) in &other.terms {
            p.add_term(m.clone(), c.clone());
        }
        p
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Polynomial {
        self.scale(&-Rational::one())
    }

    pub fn scale(&self, s: &Rational) -> Polynomial {
        let mut p = Self::zero(self.nvars);
        for (m, c) in &self.terms {
            p.add_term(m.clone(), c * s);
        }
        p
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut p = Self::zero(self.nvars.max(other.nvars));
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                p.add_term(ma.mul(mb), ca * cb);
            }
        }
        p
    }

    /// Keeps only the terms selected by `keep`.
    pub fn filter_terms(&self, keep: impl Fn(&Monomial) -> bool) -> Polynomial {
        Polynomial {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| keep(m))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Renames variables through `map`, landing in a space of `nvars`.
    pub fn map_vars(&self, nvars: usize, map: impl Fn(usize) -> usize) -> Result<Polynomial> {
        Self::from_terms(
            nvars,
            self.terms.iter().map(|(m, c)| (m.map_vars(&map), c.clone())),
        )
    }

    /// Rewrites every `x^k` to `x`, which is value-preserving on binary points.
    pub fn multilinearize(&self) -> Polynomial {
        let mut p = Self::zero(self.nvars);
        for (m, c) in &self.terms {
            p.add_term(m.multilinear(), c.clone());
        }
        p
    }

    /// Exact evaluation at a rational point.
    pub fn evaluate(&self, x: &[Rational]) -> Result<Rational> {
        if x.len() != self.nvars {
            return Err(Error::DimensionMismatch {
                expected: self.nvars,
                got: x.len(),
            });
        }
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let v = m.eval(x);
            if !v.is_zero() {
                acc += c * v;
            }
        }
        Ok(acc)
    }

    pub fn evaluate_f64(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.nvars {
            return Err(Error::DimensionMismatch {
                expected: self.nvars,
                got: x.len(),
            });
        }
        Ok(self
            .terms
            .iter()
            .map(|(m, c)| rational_to_f64(c) * m.eval_f64(x))
            .sum())
    }

    pub fn evaluate_point(&self, x: &Point) -> Result<Value> {
        match x {
            Point::Exact(c) => self.evaluate(c).map(Value::Exact),
            Point::Float(c) => self.evaluate_f64(c).map(Value::Float),
        }
    }

    /// Fixes the given variables to constants. The result has the same
    /// `nvars` but no longer mentions any fixed variable.
    pub fn substitute(&self, fixings: &BTreeMap<usize, Rational>) -> Result<Polynomial> {
        if let Some((&v, _)) = fixings.iter().find(|(&v, _)| v >= self.nvars) {
            return Err(Error::IndexOutOfRange {
                index: v,
                nvars: self.nvars,
            });
        }
        if fixings.is_empty() {
            return Ok(self.clone());
        }
        let mut p = Self::zero(self.nvars);
        for (m, c) in &self.terms {
            let mut coef = c.clone();
            let mut rest = Vec::with_capacity(m.0.len());
            for &(v, e) in &m.0 {
                match fixings.get(&v) {
                    Some(val) => {
                        if val.is_zero() {
                            coef = Rational::zero();
                            break;
                        }
                        if !val.is_one() {
                            coef *= num_traits::pow(val.clone(), e as usize);
                        }
                    }
                    None => rest.push((v, e)),
                }
            }
            p.add_term(Monomial(rest), coef);
        }
        Ok(p)
    }

    /// Writes `p = Σ_m a_m · x_i^m`; entry `m` of the result is `a_m`, a
    /// polynomial not mentioning `x_i`. The vector has `degree_in(i) + 1`
    /// entries.
    pub fn collect_in_variable(&self, i: usize) -> Result<Vec<Polynomial>> {
        if i >= self.nvars {
            return Err(Error::IndexOutOfRange {
                index: i,
                nvars: self.nvars,
            });
        }
        let d = self.degree_in(i) as usize;
        let mut out = vec![Self::zero(self.nvars); d + 1];
        for (m, c) in &self.terms {
            let (rest, e) = m.split_var(i);
            out[e as usize].add_term(rest, c.clone());
        }
        Ok(out)
    }

    /// Computes `Δ_i = f - (1 - x_i) f(x_{-i},0) - x_i f(x_{-i},1)` and divides it
    /// by `x_i (1 - x_i)` as a polynomial in `x_i`.
    pub fn chord_deficit(&self, i: usize) -> Result<ChordDeficit> {
        let coeffs = self.collect_in_variable(i)?;
        let n = self.nvars;
        let xi = Self::var(n, i)?;
        let one = Self::constant(n, Rational::one());

        let at0 = coeffs[0].clone();
        let mut at1 = Self::zero(n);
        for a in &coeffs {
            at1 = at1.add(a);
        }
        let delta = self
            .sub(&one.sub(&xi).mul(&at0))
            .sub(&xi.mul(&at1));

        // delta = Σ_m b_m x_i^m with b_0 = 0; divide by x_i then by (1 - x_i):
        // with c_m = b_{m+1}, the quotient coefficients are prefix sums
        // h_m = c_0 + … + c_m and the remainder is Σ_m c_m.
        let b = delta.collect_in_variable(i)?;
        let mut divisible = b[0].is_zero();
        let c: Vec<Polynomial> = b.into_iter().skip(1).collect();
        let mut h = Self::zero(n);
        let mut prefix = Self::zero(n);
        for (m, cm) in c.iter().enumerate() {
            prefix = prefix.add(cm);
            if m + 1 < c.len() {
                h = h.add(&prefix.mul(&Self::from_terms(
                    n,
                    [(Monomial::pow(i, m as u32), Rational::one())],
                )?));
            }
        }
        if !prefix.is_zero() {
            divisible = false;
        }
        if !divisible {
            return Err(Error::Internal(format!(
                "chord deficit in x{i} is not divisible by x{i}(1-x{i})"
            )));
        }
        Ok(ChordDeficit {
            delta,
            h,
            divisible,
        })
    }

    /// Splits a polynomial of degree at most two into `xᵀQx + cᵀx + c0` with
    /// symmetric `Q`.
    pub fn quadratic_parts(&self) -> Result<QuadraticParts> {
        let d = self.degree();
        if d > 2 {
            return Err(Error::DegreeTooHigh { max: 2, got: d });
        }
        let n = self.nvars;
        let mut q = vec![vec![Rational::zero(); n]; n];
        let mut c = vec![Rational::zero(); n];
        let mut c0 = Rational::zero();
        let half = rat(1, 2);
        for (m, coef) in &self.terms {
            match m.exps() {
                [] => c0 = coef.clone(),
                [(i, 1)] => c[*i] = coef.clone(),
                [(i, 2)] => q[*i][*i] = coef.clone(),
                [(i, 1), (j, 1)] => {
                    q[*i][*j] = coef * &half;
                    q[*j][*i] = coef * &half;
                }
                _ => unreachable!("degree checked above"),
            }
        }
        Ok(QuadraticParts { q, c, c0 })
    }

    /// Coefficient of `x_i^2`.
    pub fn diagonal(&self, i: usize) -> Rational {
        self.coefficient(&Monomial::pow(i, 2))
    }

    /// Bit length of the coefficient and exponent encoding.
    pub fn input_bits(&self) -> u64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                c.numer().bits()
                    + c.denom().bits()
                    + 1
                    + m.0
                        .iter()
                        .map(|&(v, e)| {
                            (usize::BITS - v.leading_zeros()) as u64
                                + (u32::BITS - e.leading_zeros()) as u64
                        })
                        .sum::<u64>()
            })
            .sum()
    }

    /// Parses the JSON instance document.
    pub fn from_json(text: &str) -> Result<Polynomial> {
        let doc: InstanceDoc = serde_json::from_str(text)?;
        doc.into_polynomial()
    }

    /// Serializes to the JSON instance document with terms in graded
    /// lexicographic order.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&InstanceDoc::from(self)).expect("instance serializes")
    }

    /// Terms sorted in graded lexicographic order.
    pub fn sorted_terms(&self) -> Vec<(&Monomial, &Rational)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_by(|a, b| a.0.grlex_cmp(b.0));
        v
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.sorted_terms().into_iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            if m.is_one() {
                write!(f, "{}", format_rational(c))?;
            } else {
                write!(f, "({})*{}", format_rational(c), m)?;
            }
        }
        Ok(())
    }
}

/// Unique multilinear polynomial in `m` variables agreeing with `table` on
/// `{0,1}^m`. Entry `table[mask]` is the value at the point whose coordinate
/// `j` is bit `j` of `mask`.
pub fn multilinear_from_table(m: usize, table: &[Rational]) -> Result<Polynomial> {
    multilinear_from_table_capped(m, table, DEFAULT_TABLE_ARITY_CAP)
}

pub fn multilinear_from_table_capped(
    m: usize,
    table: &[Rational],
    cap: usize,
) -> Result<Polynomial> {
    if m > cap {
        return Err(Error::CapExceeded {
            what: "table arity",
            actual: m,
            cap,
        });
    }
    let size = 1usize << m;
    if table.len() < size {
        return Err(Error::MissingEntry(table.len()));
    }
    let mut coef = table[..size].to_vec();
    mobius_transform(&mut coef);
    let terms = coef.into_iter().enumerate().map(|(mask, c)| {
        (
            Monomial((0..m).filter(|j| mask >> j & 1 == 1).map(|j| (j, 1)).collect()),
            c,
        )
    });
    Polynomial::from_terms(m, terms)
}

/// Serialized form of an instance.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc {
    pub n: usize,
    pub terms: Vec<TermDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDoc {
    pub coef: String,
    pub exps: Vec<(i64, i64)>,
}

impl InstanceDoc {
    pub fn into_polynomial(self) -> Result<Polynomial> {
        let n = self.n;
        let mut p = Polynomial::zero(n);
        for (k, t) in self.terms.into_iter().enumerate() {
            let term_err = |msg: String| Error::Term { term: k, msg };
            let coef = parse_rational(&t.coef)
                .map_err(|_| term_err(format!("coefficient {:?} is not a rational", t.coef)))?;
            let mut pairs = Vec::with_capacity(t.exps.len());
            for (v, e) in t.exps {
                if v < 0 || v as u64 >= n as u64 {
                    return Err(term_err(format!(
                        "variable index {v} out of range for n = {n}"
                    )));
                }
                if e < 0 {
                    return Err(term_err(format!("negative exponent {e} on x{v}")));
                }
                let e = u32::try_from(e)
                    .map_err(|_| term_err(format!("exponent {e} on x{v} is too large")))?;
                pairs.push((v as usize, e));
            }
            p.add_term(Monomial::from_pairs(pairs), coef);
        }
        Ok(p)
    }
}

impl From<&Polynomial> for InstanceDoc {
    fn from(p: &Polynomial) -> Self {
        InstanceDoc {
            n: p.nvars,
            terms: p
                .sorted_terms()
                .into_iter()
                .map(|(m, c)| TermDoc {
                    coef: format_rational(c),
                    exps: m.0.iter().map(|&(v, e)| (v as i64, e as i64)).collect(),
                })
                .collect(),
        }
    }
}
