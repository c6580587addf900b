//! Regularized multinomial coefficients on the signed Pascal lattice.
//!
//! The value at `(x₁, …, x_n)` is
//! `lim_{h→0⁺} Γ(Σxᵢ + 1 + h) / Π Γ(xᵢ + 1 + h)`, evaluated exactly by pole
//! counting. On the integer lattice the non-zero values fill `n + 1`
//! hyper-pyramids: the non-negative orthant and, for every axis `i`, the
//! region `xᵢ ≤ −1`, `xⱼ ≥ 0 (j ≠ i)`, `Σx ≤ −1`.

use std::collections::{BTreeMap, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::gamma::{gamma_ratio, log_gamma_signed, nearest_integer, HLimitValue};
use crate::summation::CompensatedSum;

/// Maximum number of entries [`generate_layer`] will materialise.
pub const DEFAULT_LAYER_CAP: u128 = 10_000_000;

/// Maximum number of lattice points a region scan will visit.
pub const DEFAULT_SCAN_CAP: u128 = 20_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("lattice points need at least 2 coordinates, got {0}")]
    DimensionTooSmall(usize),
    #[error("coordinate {index} is not finite")]
    NonFiniteCoordinate { index: usize },
    #[error("coordinate {index} = {value} is not > -1; use point_value")]
    CoordinateAtPole { index: usize, value: f64 },
    #[error("the coefficient diverges at this point")]
    Divergent,
    #[error("a participating value is divergent")]
    DivergentInvolved,
    #[error("{requested} entries exceed the cap of {cap}")]
    TooLarge { requested: u128, cap: u128 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// A point of n-dimensional Pascal space.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct LatticePoint(Vec<f64>);

impl LatticePoint {
    pub fn new(coords: Vec<f64>) -> Result<Self, LatticeError> {
        if coords.len() < 2 {
            return Err(LatticeError::DimensionTooSmall(coords.len()));
        }
        if let Some(index) = coords.iter().position(|c| !c.is_finite()) {
            return Err(LatticeError::NonFiniteCoordinate { index });
        }
        Ok(Self(coords))
    }

    pub fn from_integers(coords: &[i64]) -> Result<Self, LatticeError> {
        Self::new(coords.iter().map(|&c| c as f64).collect())
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Integer coordinates, if every coordinate is one.
    pub fn integer_coords(&self) -> Option<Vec<i64>> {
        self.0.iter().map(|&c| nearest_integer(c)).collect()
    }

    /// The point `self − e_axis`.
    pub fn decrement(&self, axis: usize) -> Self {
        let mut coords = self.0.clone();
        coords[axis] -= 1.0;
        Self(coords)
    }

    fn sum(&self) -> f64 {
        self.0.iter().copied().collect::<CompensatedSum>().value()
    }
}

/// Tri-state value of a regularized Gamma ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value")]
pub enum RegularizedValue {
    Finite(f64),
    ZeroByPoles,
    Divergent,
}

impl RegularizedValue {
    /// The numeric value, with `ZeroByPoles` read as `0`.
    pub fn value(&self) -> Option<f64> {
        match *self {
            Self::Finite(v) => Some(v),
            Self::ZeroByPoles => Some(0.0),
            Self::Divergent => None,
        }
    }

    pub fn is_finite_nonzero(&self) -> bool {
        matches!(*self, Self::Finite(v) if v != 0.0)
    }
}

impl From<HLimitValue> for RegularizedValue {
    fn from(v: HLimitValue) -> Self {
        match v.order() {
            0 => Self::Finite(v.mantissa()),
            o if o < 0 => Self::ZeroByPoles,
            _ => Self::Divergent,
        }
    }
}

/// Which hyper-pyramid an integer point belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "region", content = "axis")]
pub enum RegionTag {
    Nonnegative,
    NegativePyramid(usize),
    ZeroSet,
    OffLattice,
}

fn shifted_arguments(p: &LatticePoint) -> (f64, Vec<f64>) {
    (p.sum() + 1.0, p.coords().iter().map(|x| x + 1.0).collect())
}

/// Leading `h → 0⁺` behaviour of the multinomial ratio at `p`.
pub fn point_limit(p: &LatticePoint) -> HLimitValue {
    let (numerator, denominator) = shifted_arguments(p);
    gamma_ratio(&[numerator], &denominator)
}

/// Regularized multinomial coefficient at any point of the lattice.
pub fn point_value(p: &LatticePoint) -> RegularizedValue {
    point_limit(p).into()
}

fn exact_multinomial(parts: &[u64]) -> Option<u128> {
    let mut total: u64 = 0;
    let mut acc: u128 = 1;
    for &part in parts {
        for j in 1..=part {
            total = total.checked_add(1)?;
            // acc · total / j stays integral: acc·C(total, j) built incrementally.
            acc = acc.checked_mul(u128::from(total))? / u128::from(j);
        }
    }
    Some(acc)
}

/// `(Σxᵢ)! / Π xᵢ!` for points with every coordinate `> −1`.
///
/// Non-negative integer points are computed in exact integer arithmetic.
pub fn multinomial_coefficient(p: &LatticePoint) -> Result<f64, LatticeError> {
    if let Some((index, &value)) = p.coords().iter().enumerate().find(|(_, &x)| x <= -1.0) {
        return Err(LatticeError::CoordinateAtPole { index, value });
    }
    if let Some(ints) = p.integer_coords() {
        if ints.iter().all(|&c| c >= 0) {
            let parts: Vec<u64> = ints.iter().map(|&c| c as u64).collect();
            if let Some(exact) = exact_multinomial(&parts) {
                return Ok(exact as f64);
            }
        }
    }
    match point_value(p) {
        RegularizedValue::Finite(v) => Ok(v),
        RegularizedValue::ZeroByPoles => Ok(0.0),
        RegularizedValue::Divergent => Err(LatticeError::Divergent),
    }
}

/// `f(p) − Σᵢ f(p − eᵢ)`; zero wherever the construction law holds.
pub fn recurrence_residual(p: &LatticePoint) -> Result<f64, LatticeError> {
    let centre = point_value(p).value().ok_or(LatticeError::DivergentInvolved)?;
    let mut acc = CompensatedSum::new();
    acc.add(centre);
    for axis in 0..p.dim() {
        let parent = point_value(&p.decrement(axis)).value().ok_or(LatticeError::DivergentInvolved)?;
        acc.add(-parent);
    }
    Ok(acc.value())
}

/// Classifies an integer point into its hyper-pyramid.
pub fn classify_region(p: &LatticePoint) -> RegionTag {
    let Some(ints) = p.integer_coords() else {
        return RegionTag::OffLattice;
    };
    classify_integer(&ints)
}

fn classify_integer(coords: &[i64]) -> RegionTag {
    if coords.iter().all(|&c| c >= 0) {
        return RegionTag::Nonnegative;
    }
    let value = LatticePoint::from_integers(coords).map(|p| point_value(&p));
    match value {
        Ok(v) if v.is_finite_nonzero() => {
            let mut negative = coords.iter().enumerate().filter(|(_, &c)| c <= -1);
            match (negative.next(), negative.next()) {
                (Some((axis, _)), None) => RegionTag::NegativePyramid(axis),
                // Unreachable by pole counting: a finite non-zero value
                // needs exactly one denominator pole.
                _ => RegionTag::ZeroSet,
            }
        }
        _ => RegionTag::ZeroSet,
    }
}

/// One layer `Σcᵢ = n` of the dim-dimensional Pascal pyramid.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerTable {
    n: u32,
    dim: usize,
    entries: BTreeMap<Vec<u32>, f64>,
}

impl LayerTable {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, composition: &[u32]) -> Option<f64> {
        self.entries.get(composition).copied()
    }

    /// Entries in lexicographic composition order.
    pub fn entries(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.entries.iter().map(|(k, &v)| (k.as_slice(), v))
    }

    pub fn sum(&self) -> f64 {
        self.entries.values().copied().collect::<CompensatedSum>().value()
    }

    /// Largest `|entry − Σ parents|` against the previous layer.
    pub fn construction_residual(&self, previous: &LayerTable) -> f64 {
        let mut worst: f64 = 0.0;
        for (composition, &value) in &self.entries {
            let mut parents = CompensatedSum::new();
            for axis in 0..composition.len() {
                if composition[axis] == 0 {
                    continue;
                }
                let mut parent = composition.clone();
                parent[axis] -= 1;
                parents.add(previous.get(&parent).unwrap_or(0.0));
            }
            worst = worst.max((value - parents.value()).abs());
        }
        worst
    }
}

/// Number of compositions of `n` into `dim` non-negative parts, `C(n+dim−1, dim−1)`.
pub fn composition_count(dim: usize, n: u32) -> u128 {
    if dim == 0 {
        return u128::from(n == 0);
    }
    let mut acc: u128 = 1;
    let top = u128::from(n) + dim as u128 - 1;
    for j in 1..dim as u128 {
        acc = match acc.checked_mul(top - (dim as u128 - 1) + j) {
            Some(v) => v / j,
            None => return u128::MAX,
        };
    }
    acc
}

fn push_compositions(dim: usize, remaining: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if prefix.len() + 1 == dim {
        prefix.push(remaining);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for part in 0..=remaining {
        prefix.push(part);
        push_compositions(dim, remaining - part, prefix, out);
        prefix.pop();
    }
}

/// All compositions of `n` into `dim` parts, lexicographically ascending.
pub fn compositions(dim: usize, n: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    if dim > 0 {
        push_compositions(dim, n, &mut Vec::with_capacity(dim), &mut out);
    }
    out
}

pub fn generate_layer(dim: usize, n: u32) -> Result<LayerTable, LatticeError> {
    generate_layer_with_cap(dim, n, DEFAULT_LAYER_CAP)
}

pub fn generate_layer_with_cap(dim: usize, n: u32, cap: u128) -> Result<LayerTable, LatticeError> {
    if dim < 2 {
        return Err(LatticeError::DimensionTooSmall(dim));
    }
    let requested = composition_count(dim, n);
    if requested > cap {
        return Err(LatticeError::TooLarge { requested, cap });
    }
    let mut entries = BTreeMap::new();
    for composition in compositions(dim, n) {
        let point = LatticePoint::new(composition.iter().map(|&c| f64::from(c)).collect())?;
        let value = multinomial_coefficient(&point)?;
        entries.insert(composition, value);
    }
    Ok(LayerTable { n, dim, entries })
}

/// Neighbourhood rule for counting hyper-pyramid components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Adjacency {
    /// Points differing by ±1 in one coordinate.
    UnitStep,
    /// Unit steps that do not cross a Gamma pole hyperplane
    /// (`xᵢ = −1/2` or `Σx = −1/2`).
    PoleCell,
}

/// Region tags over the cube `[−window, window]^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionScan {
    dim: usize,
    window: i64,
    tags: Vec<RegionTag>,
}

impl RegionScan {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn window(&self) -> i64 {
        self.window
    }

    fn side(&self) -> usize {
        (2 * self.window + 1) as usize
    }

    fn coords_of(&self, mut index: usize) -> Vec<i64> {
        let side = self.side();
        let mut coords = vec![0; self.dim];
        for c in coords.iter_mut() {
            *c = (index % side) as i64 - self.window;
            index /= side;
        }
        coords
    }

    /// Points in row-major lexicographic order (first coordinate slowest).
    pub fn points(&self) -> impl Iterator<Item = (Vec<i64>, RegionTag)> + '_ {
        let side = self.side();
        let total = self.tags.len();
        (0..total).map(move |rank| {
            // rank enumerates lexicographically; convert to storage index.
            let mut rest = rank;
            let mut coords = vec![0i64; self.dim];
            for c in coords.iter_mut().rev() {
                *c = (rest % side) as i64 - self.window;
                rest /= side;
            }
            let index = self.index_of(&coords);
            (coords, self.tags[index])
        })
    }

    fn index_of(&self, coords: &[i64]) -> usize {
        let side = self.side();
        coords.iter().rev().fold(0, |acc, &c| acc * side + (c + self.window) as usize)
    }

    pub fn count(&self, predicate: impl Fn(RegionTag) -> bool) -> usize {
        self.tags.iter().filter(|&&t| predicate(t)).count()
    }

    /// Connected components of the finite non-zero points.
    pub fn components(&self, adjacency: Adjacency) -> usize {
        let side = self.side();
        let live = |t: RegionTag| matches!(t, RegionTag::Nonnegative | RegionTag::NegativePyramid(_));
        let mut seen = vec![false; self.tags.len()];
        let mut components = 0;
        let mut queue = VecDeque::new();
        for start in 0..self.tags.len() {
            if seen[start] || !live(self.tags[start]) {
                continue;
            }
            components += 1;
            seen[start] = true;
            queue.push_back(start);
            while let Some(index) = queue.pop_front() {
                let coords = self.coords_of(index);
                let mut stride = 1;
                for axis in 0..self.dim {
                    for step in [-1i64, 1] {
                        let moved = coords[axis] + step;
                        if moved.abs() > self.window {
                            continue;
                        }
                        let neighbour = (index as i64 + step * stride as i64) as usize;
                        if seen[neighbour] || !live(self.tags[neighbour]) {
                            continue;
                        }
                        if adjacency == Adjacency::PoleCell {
                            let mut other = coords.clone();
                            other[axis] = moved;
                            if pole_signature(&coords) != pole_signature(&other) {
                                continue;
                            }
                        }
                        seen[neighbour] = true;
                        queue.push_back(neighbour);
                    }
                    stride *= side;
                }
            }
        }
        components
    }
}

/// Bit i set when coordinate i sits on a denominator pole; bit dim for the numerator.
fn pole_signature(coords: &[i64]) -> u64 {
    let mut signature = 0u64;
    for (i, &c) in coords.iter().enumerate() {
        if c <= -1 {
            signature |= 1 << i;
        }
    }
    if coords.iter().sum::<i64>() <= -1 {
        signature |= 1 << coords.len();
    }
    signature
}

pub fn scan_regions(dim: usize, window: i64) -> Result<RegionScan, LatticeError> {
    if dim < 2 {
        return Err(LatticeError::DimensionTooSmall(dim));
    }
    if window < 0 {
        return Err(LatticeError::InvalidArgument(format!("window must be non-negative, got {window}")));
    }
    let side = (2 * window + 1) as u128;
    let requested = side.checked_pow(dim as u32).unwrap_or(u128::MAX);
    if requested > DEFAULT_SCAN_CAP {
        return Err(LatticeError::TooLarge { requested, cap: DEFAULT_SCAN_CAP });
    }
    let mut scan = RegionScan { dim, window, tags: Vec::with_capacity(requested as usize) };
    for index in 0..requested as usize {
        let coords = scan.coords_of(index);
        scan.tags.push(classify_integer(&coords));
    }
    Ok(scan)
}

/// Number of hyper-pyramids visible in `[−window, window]^dim`.
pub fn region_component_count(dim: usize, window: i64) -> Result<usize, LatticeError> {
    region_component_count_with(dim, window, Adjacency::PoleCell)
}

pub fn region_component_count_with(dim: usize, window: i64, adjacency: Adjacency) -> Result<usize, LatticeError> {
    if !(2..=5).contains(&dim) {
        return Err(LatticeError::InvalidArgument(format!("dim must be in [2, 5], got {dim}")));
    }
    if window < dim as i64 + 2 {
        return Err(LatticeError::InvalidArgument(format!("window must be at least dim + 2 = {}", dim + 2)));
    }
    Ok(scan_regions(dim, window)?.components(adjacency))
}

/// Direct evaluation of the Gamma quotient at a small positive shift `h`.
///
/// A numeric cross-check of [`point_value`]; it carries `O(h)` error and
/// returns `None` where a shifted argument still lands on a pole.
pub fn small_h_estimate(p: &LatticePoint, h: f64) -> Option<f64> {
    let (numerator, denominator) = shifted_arguments(p);
    let mut acc = log_gamma_signed(numerator + h).ok()?;
    for x in denominator {
        acc = acc.quotient(log_gamma_signed(x + h).ok()?).ok()?;
    }
    Some(acc.value())
}
