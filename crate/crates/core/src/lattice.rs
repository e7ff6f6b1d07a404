//! Integer lattice points of `Z^d` for small `d`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{LabError, Result};

/// Largest supported lattice dimension.
pub const MAX_DIM: usize = 4;

/// A point of `Z^d`, stored inline so it is `Copy` and cheap to hash.
///
/// Unused trailing coordinates are always zero, so derived equality and
/// hashing only see the meaningful prefix plus the dimension tag.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct LatticePoint {
    coords: [i64; MAX_DIM],
    dim: u8,
}

impl LatticePoint {
    pub fn new(coords: &[i64]) -> Result<Self> {
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(LabError::InvalidConfig(format!(
                "lattice dimension must be in 1..={MAX_DIM}, got {}",
                coords.len()
            )));
        }
        let mut c = [0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Ok(Self {
            coords: c,
            dim: coords.len() as u8,
        })
    }

    /// Builds a point from a slice whose length is already known to be valid.
    pub(crate) fn from_slice(coords: &[i64]) -> Self {
        debug_assert!(!coords.is_empty() && coords.len() <= MAX_DIM);
        let mut c = [0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Self {
            coords: c,
            dim: coords.len() as u8,
        }
    }

    pub fn origin(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension out of range");
        Self {
            coords: [0; MAX_DIM],
            dim: dim as u8,
        }
    }

    /// The unit vector `sign * e_axis`.
    pub fn unit(dim: usize, axis: usize, sign: i64) -> Self {
        let mut p = Self::origin(dim);
        p.coords[axis] = sign;
        p
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn coords(&self) -> &[i64] {
        &self.coords[..self.dim as usize]
    }

    #[inline]
    pub fn coord(&self, axis: usize) -> i64 {
        self.coords[axis]
    }

    pub fn is_origin(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.coords().iter().map(|&c| (c as f64) * (c as f64)).sum()
    }

    /// Euclidean norm `|x|`.
    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_l1(&self) -> i64 {
        self.coords().iter().map(|c| c.abs()).sum()
    }

    #[inline]
    pub fn norm_inf(&self) -> i64 {
        self.coords().iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    pub fn dist(&self, other: &Self) -> f64 {
        (*self - *other).norm()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coords().iter().map(|&c| c as f64).collect()
    }

    /// Whether the point lies in `[-n, n]^d`.
    #[inline]
    pub fn in_box(&self, n: i64) -> bool {
        self.norm_inf() <= n
    }

    /// Canonical ordering of an unordered pair: lexicographically smaller first.
    #[inline]
    pub fn canonical_pair(a: Self, b: Self) -> (Self, Self) {
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// All points of the cube `[-r, r]^d` around `self`, in lexicographic order.
    pub fn cube_around(&self, r: i64) -> Vec<LatticePoint> {
        let d = self.dim();
        let side = (2 * r + 1) as usize;
        let total = side.pow(d as u32);
        let mut out = Vec::with_capacity(total);
        let mut offset = vec![-r; d];
        for _ in 0..total {
            let mut p = *self;
            for (axis, o) in offset.iter().enumerate() {
                p.coords[axis] += o;
            }
            out.push(p);
            for axis in (0..d).rev() {
                offset[axis] += 1;
                if offset[axis] <= r {
                    break;
                }
                offset[axis] = -r;
            }
        }
        out
    }

    /// Points `y` with `|y - self| < r` (open Euclidean ball).
    pub fn open_ball(&self, r: f64) -> Vec<LatticePoint> {
        let reach = r.ceil() as i64;
        let r2 = r * r;
        self.cube_around(reach)
            .into_iter()
            .filter(|y| (*y - *self).norm_sq() < r2)
            .collect()
    }

    /// Points `y` with `|y - self| <= r` (closed Euclidean ball).
    pub fn closed_ball(&self, r: f64) -> Vec<LatticePoint> {
        let reach = r.floor() as i64;
        let r2 = r * r;
        self.cube_around(reach)
            .into_iter()
            .filter(|y| (*y - *self).norm_sq() <= r2)
            .collect()
    }
}

impl PartialOrd for LatticePoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LatticePoint {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dim
            .cmp(&other.dim)
            .then_with(|| self.coords().cmp(other.coords()))
    }
}

impl Add for LatticePoint {
    type Output = LatticePoint;

    #[inline]
    fn add(mut self, rhs: Self) -> Self {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..MAX_DIM {
            self.coords[i] += rhs.coords[i];
        }
        self
    }
}

impl Sub for LatticePoint {
    type Output = LatticePoint;

    #[inline]
    fn sub(mut self, rhs: Self) -> Self {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..MAX_DIM {
            self.coords[i] -= rhs.coords[i];
        }
        self
    }
}

impl Neg for LatticePoint {
    type Output = LatticePoint;

    fn neg(mut self) -> Self {
        for c in self.coords.iter_mut() {
            *c = -*c;
        }
        self
    }
}

impl fmt::Debug for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl Serialize for LatticePoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coords().serialize(s)
    }
}

impl<'de> Deserialize<'de> for LatticePoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<i64>::deserialize(d)?;
        LatticePoint::new(&v).map_err(serde::de::Error::custom)
    }
}
