//! Geometry of the hypercubic lattice Z^d.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::mix64;
use crate::scalar::Real;

/// A point of Z^d in lattice units.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Site(Vec<i32>);

impl Site {
    pub fn new(coords: Vec<i32>) -> Self {
        debug_assert!(!coords.is_empty(), "a site needs d >= 1 coordinates");
        Site(coords)
    }

    pub fn origin(d: usize) -> Self {
        Site(vec![0; d])
    }

    /// `sign * e_axis`.
    pub fn unit(d: usize, axis: usize, sign: i32) -> Self {
        let mut c = vec![0; d];
        c[axis] = sign;
        Site(c)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i32] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<i32> {
        self.0
    }

    pub fn is_origin(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn norm1(&self) -> i64 {
        norm1(&self.0)
    }

    pub fn sq(&self) -> i64 {
        sq(&self.0)
    }

    /// The 2d nearest neighbours, axis ascending, minus before plus.
    pub fn neighbors(&self) -> Vec<Site> {
        let mut out = Vec::with_capacity(2 * self.dim());
        for axis in 0..self.dim() {
            for step in [-1, 1] {
                let mut c = self.0.clone();
                c[axis] += step;
                out.push(Site(c));
            }
        }
        out
    }

    pub fn add(&self, other: &Site) -> Site {
        debug_assert_eq!(self.dim(), other.dim());
        Site(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Site) -> Site {
        debug_assert_eq!(self.dim(), other.dim());
        Site(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn neg(&self) -> Site {
        Site(self.0.iter().map(|a| -a).collect())
    }

    pub fn hash64(&self) -> u64 {
        site_hash(&self.0)
    }
}

impl fmt::Debug for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<i32>> for Site {
    fn from(v: Vec<i32>) -> Self {
        Site::new(v)
    }
}

/// An unordered nearest-neighbour pair, stored with the lexicographically
/// smaller endpoint first.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct Bond {
    a: Site,
    b: Site,
}

impl Bond {
    pub fn new(x: Site, y: Site) -> Result<Self> {
        if x.dim() != y.dim() {
            return Err(invalid("bond endpoints have different dimensions"));
        }
        if norm1_diff(x.coords(), y.coords()) != 1 {
            return Err(invalid(format!("{x:?} and {y:?} are not nearest neighbours")));
        }
        Ok(if x <= y { Bond { a: x, b: y } } else { Bond { a: y, b: x } })
    }

    pub fn a(&self) -> &Site {
        &self.a
    }

    pub fn b(&self) -> &Site {
        &self.b
    }

    /// Axis along which the bond points.
    pub fn axis(&self) -> usize {
        self.a
            .coords()
            .iter()
            .zip(self.b.coords())
            .position(|(x, y)| x != y)
            .expect("bond endpoints differ")
    }

    pub fn contains(&self, s: &Site) -> bool {
        &self.a == s || &self.b == s
    }
}

/// A wavevector, in radians per lattice unit.
#[derive(Clone, Debug, PartialEq)]
pub struct Wavevector<T>(pub Vec<T>);

impl<T: Real> Wavevector<T> {
    pub fn zero(d: usize) -> Self {
        Wavevector(vec![T::zero(); d])
    }

    /// `k e_axis`.
    pub fn along_axis(d: usize, axis: usize, k: T) -> Self {
        let mut v = vec![T::zero(); d];
        v[axis] = k;
        Wavevector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn sq(&self) -> T {
        self.0.iter().fold(T::zero(), |s, &k| s + k * k)
    }

    pub fn components(&self) -> &[T] {
        &self.0
    }

    pub fn in_brillouin_zone(&self) -> bool {
        self.0.iter().all(|k| k.abs() <= T::PI())
    }
}

/// Random-walk transform `(1/d) sum_j cos k_j`.
pub fn dhat<T: Real>(k: &[T]) -> T {
    assert!(!k.is_empty(), "dhat needs d >= 1");
    let s = k.iter().fold(T::zero(), |s, &kj| s + kj.cos());
    s / T::from_usize_lossy(k.len())
}

pub fn norm1(x: &[i32]) -> i64 {
    x.iter().map(|&c| (c as i64).abs()).sum()
}

pub fn sq(x: &[i32]) -> i64 {
    x.iter().map(|&c| (c as i64) * (c as i64)).sum()
}

fn norm1_diff(x: &[i32], y: &[i32]) -> i64 {
    x.iter().zip(y).map(|(a, b)| (*a as i64 - *b as i64).abs()).sum()
}

/// Per-coordinate contribution to [`site_hash`].
#[inline]
pub fn coord_term(axis: usize, value: i32) -> u64 {
    mix64(((axis as u64) << 32) | value as u32 as u64)
}

/// Fixed, seedless site hash: a sum of independent per-coordinate terms, so
/// the hash of a neighbour is an O(1) update of the hash of a site.
#[inline]
pub fn site_hash(coords: &[i32]) -> u64 {
    coords
        .iter()
        .enumerate()
        .fold(0u64, |h, (a, &v)| h.wrapping_add(coord_term(a, v)))
}

/// Hash of `coords + step * e_axis` given the hash of `coords`.
#[inline]
pub fn shifted_hash(hash: u64, coords: &[i32], axis: usize, step: i32) -> u64 {
    let v = coords[axis];
    hash.wrapping_sub(coord_term(axis, v))
        .wrapping_add(coord_term(axis, v + step))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(v: &[i32]) -> Site {
        Site::new(v.to_vec())
    }

    #[test]
    fn neighbors_in_canonical_order() {
        assert_eq!(s(&[0]).neighbors(), vec![s(&[-1]), s(&[1])]);
        assert_eq!(
            s(&[0, 0]).neighbors(),
            vec![s(&[-1, 0]), s(&[1, 0]), s(&[0, -1]), s(&[0, 1])]
        );
        let nb = s(&[1, 1, 1]).neighbors();
        assert_eq!(nb.len(), 6);
        for y in &nb {
            assert_eq!(norm1_diff(y.coords(), &[1, 1, 1]), 1);
        }
    }

    #[test]
    fn norms() {
        assert_eq!((s(&[0, 0, 0]).norm1(), s(&[0, 0, 0]).sq()), (0, 0));
        assert_eq!((s(&[1, -2, 0]).norm1(), s(&[1, -2, 0]).sq()), (3, 5));
        assert_eq!((s(&[2, 2]).norm1(), s(&[2, 2]).sq()), (4, 8));
    }

    #[test]
    fn dhat_special_points() {
        let pi = std::f64::consts::PI;
        assert_eq!(dhat(&[0.0; 5]), 1.0);
        assert!((dhat(&[pi; 4]) + 1.0).abs() < 1e-15);
        assert!(dhat(&[pi / 2.0; 3]).abs() < 1e-15);
        assert!((dhat(&[0.0f32, 0.0]) - 1.0).abs() < 1e-7);
    }

    #[test]
    fn bond_canonical_order_and_validation() {
        let b = Bond::new(s(&[1, 0]), s(&[0, 0])).unwrap();
        assert_eq!(b.a(), &s(&[0, 0]));
        assert_eq!(b.axis(), 0);
        assert!(Bond::new(s(&[0, 0]), s(&[1, 1])).is_err());
        assert!(Bond::new(s(&[0, 0]), s(&[0, 0])).is_err());
    }

    #[test]
    fn shifted_hash_matches_recompute() {
        let c = [3, -7, 11, 0];
        let h = site_hash(&c);
        for axis in 0..4 {
            for step in [-1, 1] {
                let mut y = c;
                y[axis] += step;
                assert_eq!(shifted_hash(h, &c, axis, step), site_hash(&y));
            }
        }
    }

    proptest! {
        #[test]
        fn dhat_even_and_bounded(k in prop::collection::vec(-10.0f64..10.0, 1..12)) {
            let neg: Vec<f64> = k.iter().map(|x| -x).collect();
            prop_assert!((dhat(&k) - dhat(&neg)).abs() < 1e-15);
            prop_assert!(dhat(&k).abs() <= 1.0);
        }

        #[test]
        fn neighbors_distinct_at_distance_one(x in prop::collection::vec(-100i32..100, 1..10)) {
            let site = Site::new(x.clone());
            let nb = site.neighbors();
            prop_assert_eq!(nb.len(), 2 * x.len());
            let set: std::collections::HashSet<_> = nb.iter().cloned().collect();
            prop_assert_eq!(set.len(), nb.len());
            for y in &nb {
                prop_assert_eq!(norm1_diff(y.coords(), &x), 1);
            }
        }
    }
}
