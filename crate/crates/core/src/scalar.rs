//! Value types shared by the binary solvers and the subset transforms.

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

/// Relative tolerance under which two floating-point objective values are
/// considered tied by the dynamic program.
pub const FLOAT_TIE_RTOL: f64 = 1e-12;

/// Ordered additive values the dynamic program and the Möbius transform
/// operate on. Implemented for exact rationals, machine integers and floats.
pub trait Scalar: Clone + Send + Sync + std::fmt::Debug {
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn add_ref(&mut self, other: &Self);
    fn sub_ref(&mut self, other: &Self);

    /// `true` when `self` is strictly smaller than `other` beyond the tie
    /// tolerance of the type (exact types have none).
    fn better_than(&self, other: &Self) -> bool;

    fn to_f64(&self) -> f64;

    fn sum<'a, I: IntoIterator<Item = &'a Self>>(items: I) -> Self
    where
        Self: 'a,
    {
        let mut acc = Self::zero();
        for x in items {
            acc.add_ref(x);
        }
        acc
    }
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add_ref(&mut self, other: &Self) {
        *self += other;
    }
    fn sub_ref(&mut self, other: &Self) {
        *self -= other;
    }
    fn better_than(&self, other: &Self) -> bool {
        self < other
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or_else(|| {
            if self.is_negative() {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            }
        })
    }
}

impl Scalar for i64 {
    fn zero() -> Self {
        0
    }
    fn is_zero(&self) -> bool {
        *self == 0
    }
    fn add_ref(&mut self, other: &Self) {
        *self += *other;
    }
    fn sub_ref(&mut self, other: &Self) {
        *self -= *other;
    }
    fn better_than(&self, other: &Self) -> bool {
        self < other
    }
    fn to_f64(&self) -> f64 {
        *self as f64
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn add_ref(&mut self, other: &Self) {
        *self += *other;
    }
    fn sub_ref(&mut self, other: &Self) {
        *self -= *other;
    }
    fn better_than(&self, other: &Self) -> bool {
        let scale = 1f64.max(self.abs()).max(other.abs());
        *self < *other - FLOAT_TIE_RTOL * scale
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

/// In-place subset-sum (zeta) transform: afterwards `a[S] = Σ_{T ⊆ S} a[T]`.
///
/// `a.len()` must be a power of two; bit `j` of an index is membership of
/// element `j`.
pub fn zeta_transform<T: Scalar>(a: &mut [T]) {
    debug_assert!(a.len().is_power_of_two());
    let mut bit = 1;
    while bit < a.len() {
        for mask in 0..a.len() {
            if mask & bit != 0 {
                let (lo, hi) = a.split_at_mut(mask);
                hi[0].add_ref(&lo[mask ^ bit]);
            }
        }
        bit <<= 1;
    }
}

/// In-place Möbius transform, the inverse of [`zeta_transform`]:
/// afterwards `a[S] = Σ_{T ⊆ S} (-1)^{|S∖T|} a_old[T]`.
pub fn mobius_transform<T: Scalar>(a: &mut [T]) {
    debug_assert!(a.len().is_power_of_two());
    let mut bit = 1;
    while bit < a.len() {
        for mask in 0..a.len() {
            if mask & bit != 0 {
                let (lo, hi) = a.split_at_mut(mask);
                hi[0].sub_ref(&lo[mask ^ bit]);
            }
        }
        bit <<= 1;
    }
}
