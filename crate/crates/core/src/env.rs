//! Bernoulli obstacle environments on the box `[-L, L]^d`, their 1-D gap
//! decomposition, and gap-length sampling.
//!
//! Occupancy of a site is a pure function of `(seed, coordinates)` so a box
//! of radius `L` is the restriction of any larger box generated with the same
//! seed.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Binomial, Distribution, Geometric, Normal, Poisson};
use rayon::prelude::*;

use crate::error::{param, Error, Result};
use crate::numeric::{site_hash, unit_f64};

/// A lattice point; its length is the dimension.
pub type Site = Vec<i64>;

#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    dim: usize,
    radius: usize,
    density: f64,
    seed: u64,
    occupancy: Vec<bool>,
}

fn check_density(density: f64) -> Result<()> {
    if !(0.0..1.0).contains(&density) {
        return Err(param(format!(
            "density must satisfy 0 <= p < 1, got {density}"
        )));
    }
    Ok(())
}

fn box_len(dim: usize, radius: usize) -> Result<usize> {
    let side = 2 * radius + 1;
    let mut n: usize = 1;
    for _ in 0..dim {
        n = n
            .checked_mul(side)
            .ok_or_else(|| param("box too large to index"))?;
    }
    Ok(n)
}

/// Draws an environment on `[-radius, radius]^dim`. Each site is an obstacle
/// independently with probability `density`, keyed on `(seed, site)`.
pub fn sample_environment(
    dim: usize,
    radius: usize,
    density: f64,
    seed: u64,
) -> Result<Environment> {
    if dim == 0 {
        return Err(param("dimension must be at least 1"));
    }
    check_density(density)?;
    let len = box_len(dim, radius)?;
    let shape = BoxShape { dim, radius };
    let occupancy = (0..len)
        .into_par_iter()
        .map(|i| {
            let coords = shape.coords(i);
            unit_f64(site_hash(seed, &coords)) < density
        })
        .collect();
    Ok(Environment {
        dim,
        radius,
        density,
        seed,
        occupancy,
    })
}

/// Index arithmetic for the box `[-radius, radius]^dim` in row-major order,
/// first coordinate most significant.
#[derive(Debug, Clone, Copy)]
pub(crate) struct BoxShape {
    pub dim: usize,
    pub radius: usize,
}

impl BoxShape {
    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn coords(&self, mut index: usize) -> Site {
        let side = self.side();
        let mut c = vec![0i64; self.dim];
        for axis in (0..self.dim).rev() {
            c[axis] = (index % side) as i64 - self.radius as i64;
            index /= side;
        }
        c
    }

    pub fn index(&self, coords: &[i64]) -> Option<usize> {
        if coords.len() != self.dim {
            return None;
        }
        let r = self.radius as i64;
        let side = self.side();
        let mut idx = 0usize;
        for &c in coords {
            if c < -r || c > r {
                return None;
            }
            idx = idx * side + (c + r) as usize;
        }
        Some(idx)
    }

    /// Indices of in-box nearest neighbours, and whether any neighbour fell
    /// outside the box.
    pub fn neighbours(&self, index: usize, out: &mut Vec<usize>) -> bool {
        out.clear();
        let side = self.side();
        let mut stride = 1usize;
        let mut clipped = false;
        let mut rest = index;
        for _ in 0..self.dim {
            let pos = rest % side;
            rest /= side;
            if pos > 0 {
                out.push(index - stride);
            } else {
                clipped = true;
            }
            if pos + 1 < side {
                out.push(index + stride);
            } else {
                clipped = true;
            }
            stride *= side;
        }
        clipped
    }
}

impl Environment {
    /// Wraps an explicit occupancy vector (row-major over the box).
    pub fn from_occupancy(
        dim: usize,
        radius: usize,
        density: f64,
        seed: u64,
        occupancy: Vec<bool>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(param("dimension must be at least 1"));
        }
        check_density(density)?;
        let len = box_len(dim, radius)?;
        if occupancy.len() != len {
            return Err(param(format!(
                "occupancy has {} entries, box needs {len}",
                occupancy.len()
            )));
        }
        Ok(Self {
            dim,
            radius,
            density,
            seed,
            occupancy,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn density(&self) -> f64 {
        self.density
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupancy
    }

    pub fn len(&self) -> usize {
        self.occupancy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupancy.is_empty()
    }

    pub(crate) fn shape(&self) -> BoxShape {
        BoxShape {
            dim: self.dim,
            radius: self.radius,
        }
    }

    pub fn contains(&self, site: &[i64]) -> bool {
        self.shape().index(site).is_some()
    }

    pub fn index_of(&self, site: &[i64]) -> Option<usize> {
        self.shape().index(site)
    }

    pub fn site_of(&self, index: usize) -> Site {
        self.shape().coords(index)
    }

    /// `None` outside the box.
    pub fn is_obstacle(&self, site: &[i64]) -> Option<bool> {
        self.index_of(site).map(|i| self.occupancy[i])
    }

    pub fn obstacle_count(&self) -> usize {
        self.occupancy.iter().filter(|&&b| b).count()
    }

    /// Text form: a header line `dim radius density seed`, then the occupancy
    /// bits packed MSB-first into bytes (zero padded), as lowercase hex.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{} {} {} {}\n",
            self.dim, self.radius, self.density, self.seed
        );
        let mut byte = 0u8;
        for (i, &bit) in self.occupancy.iter().enumerate() {
            if bit {
                byte |= 0x80 >> (i % 8);
            }
            if i % 8 == 7 {
                let _ = write!(out, "{byte:02x}");
                byte = 0;
            }
        }
        if !self.occupancy.len().is_multiple_of(8) {
            let _ = write!(out, "{byte:02x}");
        }
        out.push('\n');
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("missing header line".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::Parse(format!(
                "header needs `dim radius density seed`, got {header:?}"
            )));
        }
        let perr = |what: &str| Error::Parse(format!("bad {what} in header {header:?}"));
        let dim: usize = fields[0].parse().map_err(|_| perr("dim"))?;
        let radius: usize = fields[1].parse().map_err(|_| perr("radius"))?;
        let density: f64 = fields[2].parse().map_err(|_| perr("density"))?;
        let seed: u64 = fields[3].parse().map_err(|_| perr("seed"))?;
        let hex = lines.next().unwrap_or("").trim();
        let len = box_len(dim, radius)?;
        if hex.len() != len.div_ceil(8) * 2 {
            return Err(Error::Parse(format!(
                "expected {} hex digits for {len} sites, found {}",
                len.div_ceil(8) * 2,
                hex.len()
            )));
        }
        let bytes = (0..hex.len())
            .step_by(2)
            .map(|i| u8::from_str_radix(&hex[i..i + 2], 16))
            .collect::<std::result::Result<Vec<u8>, _>>()
            .map_err(|e| Error::Parse(format!("bad hex: {e}")))?;
        let occupancy = (0..len)
            .map(|i| bytes[i / 8] & (0x80 >> (i % 8)) != 0)
            .collect();
        Self::from_occupancy(dim, radius, density, seed, occupancy)
    }
}

/// A maximal obstacle-free run `[left, right]` (empty when `length == 0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interval {
    pub left: i64,
    pub right: i64,
    pub length: usize,
    /// The run reaches the lower end of the box, so the obstacle bounding it
    /// there is unknown.
    pub truncated_left: bool,
    pub truncated_right: bool,
}

impl Interval {
    pub fn is_truncated(&self) -> bool {
        self.truncated_left || self.truncated_right
    }

    pub fn contains(&self, x: i64) -> bool {
        self.length > 0 && self.left <= x && x <= self.right
    }
}

/// 1-D obstacle positions and the gaps between them.
#[derive(Debug, Clone, PartialEq)]
pub struct GapStructure {
    pub obstacle_positions: Vec<i64>,
    pub intervals: Vec<Interval>,
    pub origin_gap_index: Option<usize>,
    pub box_left: i64,
    pub box_right: i64,
    /// Position of `y_0`, the first obstacle at a nonnegative site.
    origin_obstacle: Option<usize>,
}

pub fn gap_structure(env: &Environment) -> Result<GapStructure> {
    if env.dim() != 1 {
        return Err(Error::Dimension {
            expected: 1,
            found: env.dim(),
        });
    }
    Ok(GapStructure::from_occupancy(
        -(env.radius() as i64),
        env.occupancy(),
    ))
}

impl GapStructure {
    /// Decomposes the 1-D occupancy of `[offset, offset + occ.len() - 1]`.
    pub fn from_occupancy(offset: i64, occ: &[bool]) -> Self {
        let box_left = offset;
        let box_right = offset + occ.len() as i64 - 1;
        let obstacle_positions: Vec<i64> = occ
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| offset + i as i64)
            .collect();
        let mut intervals = Vec::with_capacity(obstacle_positions.len() + 1);
        if obstacle_positions.is_empty() {
            if !occ.is_empty() {
                intervals.push(Interval {
                    left: box_left,
                    right: box_right,
                    length: occ.len(),
                    truncated_left: true,
                    truncated_right: true,
                });
            }
        } else {
            let first = obstacle_positions[0];
            if first > box_left {
                intervals.push(Interval {
                    left: box_left,
                    right: first - 1,
                    length: (first - box_left) as usize,
                    truncated_left: true,
                    truncated_right: false,
                });
            }
            for w in obstacle_positions.windows(2) {
                intervals.push(Interval {
                    left: w[0] + 1,
                    right: w[1] - 1,
                    length: (w[1] - w[0] - 1) as usize,
                    truncated_left: false,
                    truncated_right: false,
                });
            }
            let last = *obstacle_positions.last().unwrap();
            if last < box_right {
                intervals.push(Interval {
                    left: last + 1,
                    right: box_right,
                    length: (box_right - last) as usize,
                    truncated_left: false,
                    truncated_right: true,
                });
            }
        }
        let origin_gap_index = intervals.iter().position(|iv| iv.contains(0));
        let origin_obstacle = obstacle_positions.iter().position(|&y| y >= 0);
        Self {
            obstacle_positions,
            intervals,
            origin_gap_index,
            box_left,
            box_right,
            origin_obstacle,
        }
    }

    /// Lengths of gaps bounded by obstacles on both sides.
    pub fn interior_lengths(&self) -> impl Iterator<Item = usize> + '_ {
        self.intervals
            .iter()
            .filter(|iv| !iv.is_truncated())
            .map(|iv| iv.length)
    }

    pub fn interval_containing(&self, x: i64) -> Option<&Interval> {
        // intervals are sorted by `left`
        let idx = self.intervals.partition_point(|iv| iv.left <= x);
        if idx == 0 {
            return None;
        }
        let iv = &self.intervals[idx - 1];
        iv.contains(x).then_some(iv)
    }

    /// `y_k`, obstacles enumerated from the first one at a nonnegative site.
    pub fn obstacle(&self, k: i64) -> Option<i64> {
        let base = self.origin_obstacle? as i64;
        let i = base + k;
        if i < 0 || i >= self.obstacle_positions.len() as i64 {
            return None;
        }
        Some(self.obstacle_positions[i as usize])
    }

    /// `I_k = (y_{k-1}, y_k)`, the gap ending at the k-th obstacle.
    pub fn indexed_gap(&self, k: i64) -> Option<Interval> {
        let lo = self.obstacle(k - 1)?;
        let hi = self.obstacle(k)?;
        Some(Interval {
            left: lo + 1,
            right: hi - 1,
            length: (hi - lo - 1) as usize,
            truncated_left: false,
            truncated_right: false,
        })
    }
}

/// `n` i.i.d. gap lengths with `P(l = k) = p (1-p)^k`.
pub fn sample_gap_lengths<R: Rng + ?Sized>(
    n: usize,
    density: f64,
    rng: &mut R,
) -> Result<Vec<u64>> {
    if n == 0 {
        return Err(param("need at least one gap"));
    }
    if !(density > 0.0 && density < 1.0) {
        return Err(param(format!(
            "gap sampling needs 0 < p < 1, got {density}"
        )));
    }
    let geo = Geometric::new(density).map_err(|e| param(e.to_string()))?;
    Ok((0..n).map(|_| geo.sample(rng)).collect())
}

/// How binomial counts are drawn in [`stratified_gap_histogram_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinomialMode {
    /// Exact when `n <= 1e9` and `n * min(q, 1-q) <= 1e6`; Poisson when
    /// `n > 1e9` and the mean is at most 10; normal with continuity
    /// correction otherwise.
    Auto,
    Exact,
    Poisson,
    Normal,
}

pub const EXACT_MAX_N: u64 = 1_000_000_000;
pub const EXACT_MAX_MEAN: f64 = 1.0e6;
pub const POISSON_MAX_MEAN: f64 = 10.0;

pub fn sample_binomial<R: Rng + ?Sized>(n: u64, prob: f64, mode: BinomialMode, rng: &mut R) -> u64 {
    if n == 0 || prob <= 0.0 {
        return 0;
    }
    if prob >= 1.0 {
        return n;
    }
    let small = prob.min(1.0 - prob);
    let mean_small = n as f64 * small;
    let mode = match mode {
        BinomialMode::Auto => {
            if n <= EXACT_MAX_N && mean_small <= EXACT_MAX_MEAN {
                BinomialMode::Exact
            } else if n > EXACT_MAX_N && mean_small <= POISSON_MAX_MEAN {
                BinomialMode::Poisson
            } else {
                BinomialMode::Normal
            }
        }
        m => m,
    };
    match mode {
        BinomialMode::Exact => Binomial::new(n, prob).expect("valid binomial").sample(rng),
        BinomialMode::Poisson => {
            // approximate the rarer outcome, then map back
            let k = if mean_small > 0.0 {
                Poisson::new(mean_small).expect("valid poisson").sample(rng) as u64
            } else {
                0
            };
            let k = k.min(n);
            if prob <= 0.5 {
                k
            } else {
                n - k
            }
        }
        BinomialMode::Normal => {
            let mean = n as f64 * prob;
            let sd = (n as f64 * prob * (1.0 - prob)).sqrt();
            let x: f64 = Normal::new(mean, sd).expect("valid normal").sample(rng);
            // continuity correction: round to the nearest integer
            (x + 0.5).floor().clamp(0.0, n as f64) as u64
        }
        BinomialMode::Auto => unreachable!(),
    }
}

/// Counts per gap length for `n` i.i.d. geometric gaps, without drawing
/// each gap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GapHistogram {
    pub n: u64,
    pub l_min: u64,
    /// Nonzero counts for lengths `>= l_min`.
    pub counts: BTreeMap<u64, u64>,
    /// Number of gaps shorter than `l_min`.
    pub below_min: u64,
}

impl GapHistogram {
    pub fn total(&self) -> u64 {
        self.below_min + self.counts.values().sum::<u64>()
    }
}

pub fn stratified_gap_histogram<R: Rng + ?Sized>(
    n: u64,
    density: f64,
    l_min: u64,
    rng: &mut R,
) -> Result<GapHistogram> {
    stratified_gap_histogram_with(n, density, l_min, BinomialMode::Auto, rng)
}

/// Multinomial histogram drawn by sequential conditional binomials. The
/// geometric law is memoryless, so among gaps of length `>= k` the count of
/// length exactly `k` is `Binomial(remaining, p)`.
pub fn stratified_gap_histogram_with<R: Rng + ?Sized>(
    n: u64,
    density: f64,
    l_min: u64,
    mode: BinomialMode,
    rng: &mut R,
) -> Result<GapHistogram> {
    if n > (1u64 << 63) {
        return Err(param(format!("gap count {n} exceeds 2^63")));
    }
    if !(density > 0.0 && density < 1.0) {
        return Err(param(format!(
            "gap sampling needs 0 < p < 1, got {density}"
        )));
    }
    let q = 1.0 - density;
    let tail_prob = if l_min == 0 {
        1.0
    } else {
        (l_min as f64 * q.ln()).exp()
    };
    let mut remaining = sample_binomial(n, tail_prob, mode, rng);
    let below_min = n - remaining;
    let mut counts = BTreeMap::new();
    let mut l = l_min;
    while remaining > 0 {
        let c = sample_binomial(remaining, density, mode, rng);
        if c > 0 {
            counts.insert(l, c);
        }
        remaining -= c;
        l += 1;
    }
    Ok(GapHistogram {
        n,
        l_min,
        counts,
        below_min,
    })
}

/// Connected obstacle-free component of a site, or the marker for an
/// obstacle site.
#[derive(Debug, Clone, PartialEq)]
pub enum Component {
    Obstacle,
    Free {
        sites: Vec<Site>,
        /// Some site of the component lies on the box boundary, so the true
        /// component may continue outside.
        touches_boundary: bool,
    },
}

impl Component {
    pub fn len(&self) -> usize {
        match self {
            Component::Obstacle => 0,
            Component::Free { sites, .. } => sites.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn free_component(env: &Environment, site: &[i64]) -> Result<Component> {
    let start = env
        .index_of(site)
        .ok_or_else(|| Error::Domain(format!("site {site:?} outside the box")))?;
    if env.occupancy[start] {
        return Ok(Component::Obstacle);
    }
    let (indices, touches_boundary) = component_indices(env, start, &mut vec![false; env.len()]);
    let mut sites: Vec<Site> = indices.into_iter().map(|i| env.site_of(i)).collect();
    sites.sort();
    Ok(Component::Free {
        sites,
        touches_boundary,
    })
}

/// BFS from `start` over free sites; `seen` is shared so callers can label
/// every component in one pass.
pub(crate) fn component_indices(
    env: &Environment,
    start: usize,
    seen: &mut [bool],
) -> (Vec<usize>, bool) {
    let shape = env.shape();
    let mut out = Vec::new();
    let mut touches = false;
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    let mut nb = Vec::with_capacity(2 * env.dim());
    while let Some(i) = queue.pop_front() {
        out.push(i);
        if shape.neighbours(i, &mut nb) {
            touches = true;
        }
        for &j in &nb {
            if !seen[j] && !env.occupancy[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    out.sort_unstable();
    (out, touches)
}
