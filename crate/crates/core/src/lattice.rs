//! Points, windows, annuli and adjacency on Z^d.

use std::borrow::Borrow;
use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Largest admissible coordinate magnitude. Anything larger is treated as an
/// overflow hazard and rejected.
pub const COORD_BOUND: i64 = 1 << 40;

pub type Coords = SmallVec<[i64; 4]>;

/// A point of Z^d. Ordering is lexicographic on coordinates.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct LatticePoint(Coords);

impl LatticePoint {
    pub fn new(coords: &[i64]) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidArgument("a lattice point needs d >= 1 coordinates".into()));
        }
        for &c in coords {
            check_coord(c)?;
        }
        Ok(LatticePoint(Coords::from_slice(coords)))
    }

    /// Builds a point without the magnitude check. Callers guarantee the bound.
    pub(crate) fn from_coords_unchecked(coords: Coords) -> Self {
        LatticePoint(coords)
    }

    pub fn origin(dim: usize) -> Self {
        LatticePoint(smallvec::smallvec![0; dim])
    }

    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut c: Coords = smallvec::smallvec![0; dim];
        c[axis] = 1;
        LatticePoint(c)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub(crate) fn coords_mut(&mut self) -> &mut Coords {
        &mut self.0
    }

    pub fn norm_inf(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    pub fn norm_1(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).sum()
    }

    pub fn norm(&self, norm: Norm) -> i64 {
        match norm {
            Norm::LInf => self.norm_inf(),
            Norm::L1 => self.norm_1(),
        }
    }

    /// `self + offset`, rejecting results outside the coordinate bound.
    pub fn offset(&self, offset: &[i64]) -> Result<Self> {
        same_dim(self.dim(), offset.len())?;
        let mut c = self.0.clone();
        for (a, &b) in c.iter_mut().zip(offset) {
            *a += b;
            check_coord(*a)?;
        }
        Ok(LatticePoint(c))
    }

    pub fn sub(&self, other: &LatticePoint) -> Result<Coords> {
        same_dim(self.dim(), other.dim())?;
        Ok(self.0.iter().zip(other.0.iter()).map(|(a, b)| a - b).collect())
    }

    pub fn dist_inf(&self, other: &LatticePoint) -> i64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a - b).abs()).max().unwrap_or(0)
    }

    pub fn dist_1(&self, other: &LatticePoint) -> i64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a - b).abs()).sum()
    }

    pub fn dist(&self, other: &LatticePoint, norm: Norm) -> i64 {
        match norm {
            Norm::LInf => self.dist_inf(other),
            Norm::L1 => self.dist_1(other),
        }
    }

    pub fn scaled(&self, factor: i64) -> Result<Self> {
        let mut c = self.0.clone();
        for a in c.iter_mut() {
            *a = a.checked_mul(factor).ok_or(Error::CoordinateOverflow { value: i64::MAX })?;
            check_coord(*a)?;
        }
        Ok(LatticePoint(c))
    }
}

impl Borrow<[i64]> for LatticePoint {
    fn borrow(&self) -> &[i64] {
        &self.0
    }
}

impl TryFrom<Vec<i64>> for LatticePoint {
    type Error = Error;
    fn try_from(v: Vec<i64>) -> Result<Self> {
        LatticePoint::new(&v)
    }
}

impl From<LatticePoint> for Vec<i64> {
    fn from(p: LatticePoint) -> Vec<i64> {
        p.0.into_vec()
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
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

pub(crate) fn check_coord(c: i64) -> Result<()> {
    if c.abs() > COORD_BOUND {
        Err(Error::CoordinateOverflow { value: c })
    } else {
        Ok(())
    }
}

pub(crate) fn same_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        Err(Error::DimensionMismatch { expected, got })
    } else {
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    #[serde(alias = "linf", alias = "inf", alias = "max")]
    LInf,
    #[serde(alias = "l1")]
    L1,
}

/// A closed ball `{x : |x - center| <= radius}` in either norm.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub center: LatticePoint,
    pub radius: i64,
    pub norm: Norm,
}

impl Window {
    pub fn new(center: LatticePoint, radius: i64, norm: Norm) -> Result<Self> {
        if radius < 0 {
            return Err(Error::InvalidArgument(format!("window radius {radius} is negative")));
        }
        for &c in center.coords() {
            check_coord(c.abs() + radius)?;
        }
        Ok(Window { center, radius, norm })
    }

    /// Centered l-infinity box, the common case.
    pub fn cube(dim: usize, radius: i64) -> Result<Self> {
        Window::new(LatticePoint::origin(dim), radius, Norm::LInf)
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn contains(&self, p: &LatticePoint) -> bool {
        p.dim() == self.dim() && p.dist(&self.center, self.norm) <= self.radius
    }

    pub fn contains_coords(&self, p: &[i64]) -> bool {
        if p.len() != self.dim() {
            return false;
        }
        let it = p.iter().zip(self.center.coords()).map(|(a, b)| (a - b).abs());
        match self.norm {
            Norm::LInf => it.max().unwrap_or(0) <= self.radius,
            Norm::L1 => it.sum::<i64>() <= self.radius,
        }
    }

    /// Sites in lexicographic order.
    pub fn sites(&self) -> Vec<LatticePoint> {
        enumerate_region(self)
    }

    pub fn len(&self) -> usize {
        match self.norm {
            Norm::LInf => (2 * self.radius as usize + 1).pow(self.dim() as u32),
            Norm::L1 => self.sites().len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Side length of the bounding box.
    pub fn side(&self) -> i64 {
        2 * self.radius + 1
    }

    /// Position of `p` in the lexicographic enumeration. Constant time for
    /// l-infinity windows.
    pub fn index_of(&self, p: &[i64]) -> Option<usize> {
        if !self.contains_coords(p) {
            return None;
        }
        match self.norm {
            Norm::LInf => Some(self.box_index(p)),
            Norm::L1 => {
                let sites = self.sites();
                sites.binary_search_by(|s| s.coords().cmp(p)).ok()
            }
        }
    }

    pub(crate) fn box_index(&self, p: &[i64]) -> usize {
        let side = self.side();
        let mut idx = 0i64;
        for (a, c) in p.iter().zip(self.center.coords()) {
            idx = idx * side + (a - c + self.radius);
        }
        idx as usize
    }
}

/// `{x : inner < |x - center|_inf <= outer}`; `A = B(center, inner)` is its hole.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annulus {
    pub center: LatticePoint,
    pub inner: i64,
    pub outer: i64,
}

impl Annulus {
    pub fn new(center: LatticePoint, inner: i64, outer: i64) -> Result<Self> {
        if inner < 1 {
            return Err(Error::InvalidArgument(format!("annulus inner radius {inner} must be positive")));
        }
        if inner >= outer {
            return Err(Error::InvalidArgument(format!(
                "annulus needs inner < outer, got {inner} >= {outer}"
            )));
        }
        for &c in center.coords() {
            check_coord(c.abs() + outer + 1)?;
        }
        Ok(Annulus { center, inner, outer })
    }

    pub fn contains(&self, p: &LatticePoint) -> bool {
        let r = p.dist_inf(&self.center);
        r > self.inner && r <= self.outer
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConnectivityMode {
    /// Nearest neighbours, `|x - y|_1 = 1`.
    Nearest,
    /// `*`-adjacency, `|x - y|_inf = 1`.
    Star,
}

impl ConnectivityMode {
    pub fn adjacent(self, a: &LatticePoint, b: &LatticePoint) -> bool {
        match self {
            ConnectivityMode::Nearest => a.dist_1(b) == 1,
            ConnectivityMode::Star => a.dist_inf(b) == 1,
        }
    }
}

/// Lexicographic iterator over the integer box `[lo, hi]` (inclusive).
pub struct BoxIter {
    lo: Coords,
    hi: Coords,
    cur: Option<Coords>,
}

impl BoxIter {
    pub fn new(lo: &[i64], hi: &[i64]) -> Self {
        let empty = lo.iter().zip(hi).any(|(a, b)| a > b) || lo.is_empty();
        BoxIter {
            lo: Coords::from_slice(lo),
            hi: Coords::from_slice(hi),
            cur: if empty { None } else { Some(Coords::from_slice(lo)) },
        }
    }

    pub fn centered(center: &[i64], radius: i64) -> Self {
        let lo: Coords = center.iter().map(|c| c - radius).collect();
        let hi: Coords = center.iter().map(|c| c + radius).collect();
        BoxIter::new(&lo, &hi)
    }
}

impl Iterator for BoxIter {
    type Item = Coords;

    fn next(&mut self) -> Option<Coords> {
        let out = self.cur.clone()?;
        let cur = self.cur.as_mut().unwrap();
        let mut axis = cur.len();
        loop {
            if axis == 0 {
                self.cur = None;
                break;
            }
            axis -= 1;
            if cur[axis] < self.hi[axis] {
                cur[axis] += 1;
                break;
            }
            cur[axis] = self.lo[axis];
        }
        Some(out)
    }
}

/// All sites of `w` in lexicographic order.
pub fn enumerate_region(w: &Window) -> Vec<LatticePoint> {
    BoxIter::centered(w.center.coords(), w.radius)
        .filter(|c| w.contains_coords(c))
        .map(LatticePoint::from_coords_unchecked)
        .collect()
}

/// Sites at l-infinity distance exactly `radius` from `center`, lexicographic.
pub fn enumerate_sphere(center: &LatticePoint, radius: i64) -> Result<Vec<LatticePoint>> {
    if radius < 0 {
        return Err(Error::InvalidArgument(format!("sphere radius {radius} is negative")));
    }
    for &c in center.coords() {
        check_coord(c.abs() + radius)?;
    }
    Ok(BoxIter::centered(center.coords(), radius)
        .filter(|c| c.iter().zip(center.coords()).any(|(a, b)| (a - b).abs() == radius))
        .map(LatticePoint::from_coords_unchecked)
        .collect())
}

/// Neighbour offsets in lexicographic order.
pub fn neighbor_offsets(dim: usize, mode: ConnectivityMode) -> Vec<Coords> {
    let zero: Coords = smallvec::smallvec![0; dim];
    let lo: Coords = smallvec::smallvec![-1; dim];
    let hi: Coords = smallvec::smallvec![1; dim];
    BoxIter::new(&lo, &hi)
        .filter(|o| *o != zero)
        .filter(|o| match mode {
            ConnectivityMode::Star => true,
            ConnectivityMode::Nearest => o.iter().map(|c| c.abs()).sum::<i64>() == 1,
        })
        .collect()
}

/// Neighbours of `p` in lexicographic order.
pub fn neighbors(p: &LatticePoint, mode: ConnectivityMode) -> Result<Vec<LatticePoint>> {
    neighbor_offsets(p.dim(), mode).iter().map(|o| p.offset(o)).collect()
}

/// True when consecutive points are adjacent under `mode`.
pub fn validate_path(path: &[LatticePoint], mode: ConnectivityMode) -> Result<bool> {
    let first = path.first().ok_or(Error::Empty("path"))?;
    for p in path {
        same_dim(first.dim(), p.dim())?;
    }
    Ok(path.windows(2).all(|w| mode.adjacent(&w[0], &w[1])))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(c: &[i64]) -> LatticePoint {
        LatticePoint::new(c).unwrap()
    }

    #[test]
    fn cube_counts_and_order() {
        let w = Window::cube(3, 1).unwrap();
        let s = w.sites();
        assert_eq!(s.len(), 27);
        assert_eq!(s[0], pt(&[-1, -1, -1]));
        assert_eq!(s[26], pt(&[1, 1, 1]));
        assert!(s.windows(2).all(|p| p[0] < p[1]));
        for (i, p) in s.iter().enumerate() {
            assert_eq!(w.index_of(p.coords()), Some(i));
        }
    }

    #[test]
    fn l1_ball_counts() {
        let w = Window::new(LatticePoint::origin(3), 2, Norm::L1).unwrap();
        assert_eq!(w.sites().len(), 25);
        let p = pt(&[0, 1, -1]);
        let idx = w.index_of(p.coords()).unwrap();
        assert_eq!(w.sites()[idx], p);
        assert_eq!(w.index_of(&[2, 1, 0]), None);
    }

    #[test]
    fn neighbour_counts() {
        assert_eq!(neighbor_offsets(3, ConnectivityMode::Nearest).len(), 6);
        assert_eq!(neighbor_offsets(3, ConnectivityMode::Star).len(), 26);
        assert_eq!(neighbor_offsets(2, ConnectivityMode::Star).len(), 8);
    }

    #[test]
    fn sphere_counts() {
        let s = enumerate_sphere(&LatticePoint::origin(3), 2).unwrap();
        assert_eq!(s.len(), 125 - 27);
        assert_eq!(enumerate_sphere(&LatticePoint::origin(2), 0).unwrap().len(), 1);
    }

    #[test]
    fn path_validation() {
        let star = vec![pt(&[0, 0]), pt(&[1, 1]), pt(&[2, 1])];
        assert!(validate_path(&star, ConnectivityMode::Star).unwrap());
        assert!(!validate_path(&star, ConnectivityMode::Nearest).unwrap());
        assert!(validate_path(&[], ConnectivityMode::Star).is_err());
        assert!(validate_path(&[pt(&[0]), pt(&[0, 1])], ConnectivityMode::Star).is_err());
    }

    #[test]
    fn overflow_guard() {
        assert!(LatticePoint::new(&[COORD_BOUND + 1]).is_err());
        assert!(pt(&[COORD_BOUND]).offset(&[1]).is_err());
    }

    #[test]
    fn annulus_validation() {
        let c = LatticePoint::origin(3);
        assert!(Annulus::new(c.clone(), 3, 3).is_err());
        assert!(Annulus::new(c.clone(), 0, 3).is_err());
        let a = Annulus::new(c, 2, 4).unwrap();
        assert!(a.contains(&pt(&[3, 0, 0])));
        assert!(!a.contains(&pt(&[2, 2, 2])));
    }

    #[test]
    fn point_json_roundtrip() {
        let p = pt(&[3, -4, 5]);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, "[3,-4,5]");
        let q: LatticePoint = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
    }
}
