//! Points and subsets of the grid `[t]^n`.
//!
//! Coordinates are 1-based everywhere in the public API, so `x.get(1)` is the
//! first coordinate and every value lies in `1..=t`. Points are packed into a
//! [`PointCode`] by a mixed-radix codec with coordinate 1 as the most
//! significant digit; the codec order therefore coincides with lexicographic
//! order on points.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `t^n` for which a [`GridSet`] builds a dense membership bitmap.
pub const BITMAP_LIMIT: u64 = 1 << 24;

/// Maximum number of bits a point code may use.
const CODEC_BITS: u32 = 62;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridParams {
    pub t: u32,
    pub n: usize,
}

impl GridParams {
    pub fn new(t: u32, n: usize) -> Result<Self> {
        if t == 0 || n == 0 {
            return Err(Error::InvalidParams { t, n });
        }
        Ok(Self { t, n })
    }

    /// Exists-equal default side length `t = 4n`.
    pub fn exists_equal(n: usize) -> Result<Self> {
        let t = u32::try_from(4 * n).map_err(|_| Error::InvalidParams { t: 0, n })?;
        Self::new(t, n)
    }

    /// `t^n`, if it fits in 128 bits.
    pub fn size(&self) -> Option<u128> {
        let n = u32::try_from(self.n).ok()?;
        (self.t as u128).checked_pow(n)
    }

    /// Whether points of this grid fit the 62-bit codec.
    pub fn codec_fits(&self) -> bool {
        let bits_per_coord = u32::BITS - (self.t - 1).leading_zeros();
        (self.n as u64) * (bits_per_coord as u64) <= CODEC_BITS as u64
    }

    /// `t^n` as a `u64`, or an error when points do not fit the codec.
    pub fn check_codec(&self) -> Result<u64> {
        if !self.codec_fits() {
            return Err(Error::CodecOverflow { t: self.t, n: self.n });
        }
        Ok(self.size().expect("codec guard implies t^n < 2^62") as u64)
    }

    /// Codec weight of coordinate `i` (1-based): `t^(n-i)`.
    pub(crate) fn stride(&self, i: usize) -> u64 {
        (self.t as u64).pow((self.n - i) as u32)
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.n {
            return Err(Error::CoordinateIndex { index: i, n: self.n });
        }
        Ok(())
    }

    pub fn validate(&self, x: &GridPoint) -> Result<()> {
        if x.dim() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: x.dim() });
        }
        for (idx, &v) in x.0.iter().enumerate() {
            if v == 0 || v > self.t {
                return Err(Error::CoordinateOutOfRange { index: idx + 1, value: v, t: self.t });
            }
        }
        Ok(())
    }

    /// All points of the grid in codec (lexicographic) order.
    pub fn points(&self) -> Result<impl Iterator<Item = GridPoint> + '_> {
        let size = self.check_codec()?;
        Ok((0..size).map(move |c| decode_unchecked(self, c)))
    }
}

impl fmt::Display for GridParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]^{}", self.t, self.n)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GridPoint(Vec<u32>);

impl GridPoint {
    pub fn new(coords: Vec<u32>) -> Self {
        Self(coords)
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1; n])
    }

    pub fn coords(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Coordinate `i`, 1-based.
    pub fn get(&self, i: usize) -> u32 {
        self.0[i - 1]
    }

    pub fn set(&mut self, i: usize, v: u32) {
        self.0[i - 1] = v;
    }

    pub fn into_coords(self) -> Vec<u32> {
        self.0
    }
}

impl From<Vec<u32>> for GridPoint {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}

impl fmt::Display for GridPoint {
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

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointCode(pub u64);

/// A sorted, duplicate-free set of 1-based coordinate indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoordSet(Vec<usize>);

impl CoordSet {
    pub fn new(mut indices: Vec<usize>, n: usize) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if let Some(&bad) = indices.iter().find(|&&i| i == 0 || i > n) {
            return Err(Error::CoordinateIndex { index: bad, n });
        }
        Ok(Self(indices))
    }

    /// `{1, ..., n}`.
    pub fn full(n: usize) -> Self {
        Self((1..=n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn max(&self) -> Option<usize> {
        self.0.last().copied()
    }
}

fn check_dims(x: &GridPoint, y: &GridPoint) -> Result<()> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), got: y.dim() });
    }
    Ok(())
}

/// Number of coordinates on which `x` and `y` agree.
pub fn match_count(x: &GridPoint, y: &GridPoint) -> Result<usize> {
    check_dims(x, y)?;
    Ok(x.0.iter().zip(&y.0).filter(|(a, b)| a == b).count())
}

pub fn hamming_distance(x: &GridPoint, y: &GridPoint) -> Result<usize> {
    Ok(x.dim() - match_count(x, y)?)
}

/// Agreements of `x` and `y` restricted to the coordinates in `coords`.
/// Both points must have dimension at least `coords.max()`.
pub fn match_on(x: &GridPoint, y: &GridPoint, coords: &CoordSet) -> usize {
    coords.0.iter().filter(|&&i| x.0[i - 1] == y.0[i - 1]).count()
}

/// `EE(x, y)`: 1 iff some coordinate agrees.
pub fn exists_equal(x: &GridPoint, y: &GridPoint) -> Result<bool> {
    check_dims(x, y)?;
    Ok(x.0.iter().zip(&y.0).any(|(a, b)| a == b))
}

pub fn encode(params: &GridParams, x: &GridPoint) -> Result<PointCode> {
    params.check_codec()?;
    params.validate(x)?;
    Ok(PointCode(encode_unchecked(params, x)))
}

pub fn decode(params: &GridParams, code: PointCode) -> Result<GridPoint> {
    let size = params.check_codec()?;
    if code.0 >= size {
        return Err(Error::CodeOutOfRange { code: code.0, size });
    }
    Ok(decode_unchecked(params, code.0))
}

pub(crate) fn encode_unchecked(params: &GridParams, x: &GridPoint) -> u64 {
    let t = params.t as u64;
    x.0.iter().fold(0u64, |acc, &c| acc * t + (c as u64 - 1))
}

pub(crate) fn decode_unchecked(params: &GridParams, mut code: u64) -> GridPoint {
    let t = params.t as u64;
    let mut coords = vec![0u32; params.n];
    for slot in coords.iter_mut().rev() {
        *slot = (code % t) as u32 + 1;
        code /= t;
    }
    GridPoint(coords)
}

/// Value of coordinate `i` (1-based) inside a code.
#[inline]
pub(crate) fn digit(params: &GridParams, code: u64, i: usize) -> u32 {
    ((code / params.stride(i)) % params.t as u64) as u32 + 1
}

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = acc * (n - j) as u128 / (j + 1) as u128;
    }
    acc
}

/// Closed-form size of `B_{I,M}(x)`:
/// `sum_{j=M}^{|I|} C(|I|, j) (t-1)^(|I|-j) t^(n-|I|)`.
pub fn ball_count(params: &GridParams, coords_len: usize, threshold: usize) -> Result<u128> {
    if threshold > coords_len {
        return Err(Error::ThresholdTooLarge { threshold, len: coords_len });
    }
    if coords_len > params.n {
        return Err(Error::CoordinateIndex { index: coords_len, n: params.n });
    }
    let t = params.t as u128;
    let overflow = || Error::CodecOverflow { t: params.t, n: params.n };
    let free = t.checked_pow((params.n - coords_len) as u32).ok_or_else(overflow)?;
    let mut total: u128 = 0;
    for j in threshold..=coords_len {
        let miss = (t - 1).checked_pow((coords_len - j) as u32).ok_or_else(overflow)?;
        let term = binomial(coords_len as u64, j as u64)
            .checked_mul(miss)
            .and_then(|v| v.checked_mul(free))
            .ok_or_else(overflow)?;
        total = total.checked_add(term).ok_or_else(overflow)?;
    }
    Ok(total)
}

fn check_ball_args(params: &GridParams, x: &GridPoint, coords: &CoordSet, threshold: usize) -> Result<()> {
    params.validate(x)?;
    if let Some(m) = coords.max() {
        params.check_index(m)?;
    }
    if threshold > coords.len() {
        return Err(Error::ThresholdTooLarge { threshold, len: coords.len() });
    }
    Ok(())
}

/// Streams every `y` with `Match(x_I, y_I) >= M`, each exactly once.
///
/// Walks coordinates in order and branches on match / non-match for the
/// coordinates in `I`, pruning as soon as the threshold becomes unreachable,
/// so the cost is proportional to the ball size rather than `t^n`.
pub fn for_each_ball_member<F: FnMut(&GridPoint)>(
    params: &GridParams,
    x: &GridPoint,
    coords: &CoordSet,
    threshold: usize,
    mut visit: F,
) -> Result<()> {
    check_ball_args(params, x, coords, threshold)?;
    let in_set: Vec<bool> = (1..=params.n).map(|i| coords.contains(i)).collect();
    let mut y = x.clone();
    ball_rec(params, x, &in_set, threshold, 0, 0, coords.len(), &mut y, &mut visit);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn ball_rec<F: FnMut(&GridPoint)>(
    params: &GridParams,
    x: &GridPoint,
    in_set: &[bool],
    threshold: usize,
    pos: usize,
    matched: usize,
    remaining: usize,
    y: &mut GridPoint,
    visit: &mut F,
) {
    if matched + remaining < threshold {
        return;
    }
    if pos == params.n {
        visit(y);
        return;
    }
    let xv = x.0[pos];
    if in_set[pos] {
        y.0[pos] = xv;
        ball_rec(params, x, in_set, threshold, pos + 1, matched + 1, remaining - 1, y, visit);
        for v in (1..=params.t).filter(|&v| v != xv) {
            y.0[pos] = v;
            ball_rec(params, x, in_set, threshold, pos + 1, matched, remaining - 1, y, visit);
        }
    } else {
        for v in 1..=params.t {
            y.0[pos] = v;
            ball_rec(params, x, in_set, threshold, pos + 1, matched, remaining, y, visit);
        }
    }
    y.0[pos] = xv;
}

/// Materialized `B_{I,M}(x)`.
pub fn ball_members(params: &GridParams, x: &GridPoint, coords: &CoordSet, threshold: usize) -> Result<GridSet> {
    params.check_codec()?;
    let mut codes = Vec::new();
    for_each_ball_member(params, x, coords, threshold, |y| codes.push(encode_unchecked(params, y)))?;
    Ok(GridSet::from_codes_unchecked(*params, codes))
}

pub fn uniform_point<R: Rng + ?Sized>(params: &GridParams, rng: &mut R) -> GridPoint {
    GridPoint((0..params.n).map(|_| rng.random_range(1..=params.t)).collect())
}

/// Finite subset of `[t]^n`, stored as sorted point codes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GridSet {
    params: GridParams,
    codes: Vec<u64>,
}

impl GridSet {
    pub fn empty(params: GridParams) -> Result<Self> {
        params.check_codec()?;
        Ok(Self { params, codes: Vec::new() })
    }

    pub fn full(params: GridParams) -> Result<Self> {
        let size = params.check_codec()?;
        Ok(Self { params, codes: (0..size).collect() })
    }

    pub fn from_points<I>(params: GridParams, points: I) -> Result<Self>
    where
        I: IntoIterator<Item = GridPoint>,
    {
        params.check_codec()?;
        let mut codes = Vec::new();
        for p in points {
            params.validate(&p)?;
            codes.push(encode_unchecked(&params, &p));
        }
        Ok(Self::from_codes_unchecked(params, codes))
    }

    /// Convenience for tests and literals: each inner slice is one point.
    pub fn from_coords(params: GridParams, points: &[&[u32]]) -> Result<Self> {
        Self::from_points(params, points.iter().map(|c| GridPoint(c.to_vec())))
    }

    pub fn from_codes(params: GridParams, codes: Vec<u64>) -> Result<Self> {
        let size = params.check_codec()?;
        if let Some(&bad) = codes.iter().find(|&&c| c >= size) {
            return Err(Error::CodeOutOfRange { code: bad, size });
        }
        Ok(Self::from_codes_unchecked(params, codes))
    }

    pub(crate) fn from_codes_unchecked(params: GridParams, mut codes: Vec<u64>) -> Self {
        codes.sort_unstable();
        codes.dedup();
        Self { params, codes }
    }

    /// The box `[b_1] x ... x [b_n]`.
    pub fn product_box(params: GridParams, sides: &[u32]) -> Result<Self> {
        params.check_codec()?;
        let corner = GridPoint(sides.to_vec());
        params.validate(&corner)?;
        let mut codes = Vec::new();
        let mut cur = GridPoint::ones(params.n);
        loop {
            codes.push(encode_unchecked(&params, &cur));
            // odometer increment, last coordinate fastest
            let mut pos = params.n;
            loop {
                if pos == 0 {
                    return Ok(Self::from_codes_unchecked(params, codes));
                }
                pos -= 1;
                if cur.0[pos] < sides[pos] {
                    cur.0[pos] += 1;
                    break;
                }
                cur.0[pos] = 1;
            }
        }
    }

    pub fn params(&self) -> &GridParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn codes(&self) -> &[u64] {
        &self.codes
    }

    pub fn contains_code(&self, code: u64) -> bool {
        self.codes.binary_search(&code).is_ok()
    }

    pub fn contains(&self, x: &GridPoint) -> bool {
        self.params.validate(x).is_ok() && self.contains_code(encode_unchecked(&self.params, x))
    }

    pub fn iter(&self) -> impl Iterator<Item = GridPoint> + '_ {
        self.codes.iter().map(|&c| decode_unchecked(&self.params, c))
    }

    pub fn is_subset(&self, other: &GridSet) -> bool {
        self.codes.iter().all(|&c| other.contains_code(c))
    }

    /// Density `|K| / t^n`.
    pub fn measure(&self) -> f64 {
        self.codes.len() as f64 / self.params.size().expect("codec-sized grid") as f64
    }

    /// O(1) membership: a dense bitmap when `t^n <= 2^24`, otherwise a
    /// binary search over the sorted codes.
    pub fn membership(&self) -> Membership<'_> {
        let size = self.params.size().expect("codec-sized grid") as u64;
        if size <= BITMAP_LIMIT {
            let mut words = vec![0u64; size.div_ceil(64) as usize];
            for &c in &self.codes {
                words[(c / 64) as usize] |= 1 << (c % 64);
            }
            Membership::Bitmap(words)
        } else {
            Membership::Sorted(&self.codes)
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.iter()
                .map(|p| serde_json::Value::from(p.into_coords()))
                .collect(),
        )
    }

    pub fn from_json(params: GridParams, value: &serde_json::Value) -> Result<Self> {
        let points: Vec<GridPoint> = serde_json::from_value(value.clone())
            .map_err(|e| Error::InvalidParameter(format!("grid set JSON: {e}")))?;
        Self::from_points(params, points)
    }
}

pub enum Membership<'a> {
    Bitmap(Vec<u64>),
    Sorted(&'a [u64]),
}

impl Membership<'_> {
    #[inline]
    pub fn contains(&self, code: u64) -> bool {
        match self {
            Membership::Bitmap(words) => words[(code / 64) as usize] >> (code % 64) & 1 == 1,
            Membership::Sorted(codes) => codes.binary_search(&code).is_ok(),
        }
    }
}

impl Serialize for GridSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = serializer.serialize_seq(Some(self.len()))?;
        for p in self.iter() {
            seq.serialize_element(&p)?;
        }
        seq.end()
    }
}
