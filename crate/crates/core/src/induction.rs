//! First-return maps of IETs, T-cuts, the induced-map dichotomy, the fine
//! partition whose induced discontinuities are all T-cuts, and Rohlin towers.
//!
//! Everything here is exact: cell endpoints of induced maps are found by
//! pulling the cut points (ambient breakpoints and the ends of the base
//! interval) backwards until they land in the base, never by sampling.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::exact::ExactScalar;
use crate::iet::{Iet, IetError, Interval, ScalarText};

pub const DEFAULT_RETURN_CAP: usize = 10_000_000;
pub const DEFAULT_KMAX: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InductionError {
    #[error("return-time cap {cap} exceeded from {point} (raise the cap)")]
    ReturnCap { point: String, cap: usize },
    #[error("point {0} is not in the base interval")]
    NotInBase(String),
    #[error("{0} is not a discontinuity of the induced map")]
    NotInducedDiscontinuity(String),
    #[error("induced map has {count} discontinuities, more than the bound {bound}")]
    DiscontinuityBound { count: usize, bound: usize },
    #[error("map is periodic: T^{period}({point}) = {point}")]
    Periodic { point: String, period: usize },
    #[error("map has no discontinuities")]
    NoDiscontinuities,
    #[error("Kmax = {kmax} reached with mesh {best_mesh} > epsilon")]
    MeshNotReached { kmax: usize, best_mesh: f64 },
    #[error("epsilon must be positive")]
    BadEpsilon,
    #[error("no T-cut found although the induced map is not the identity")]
    MissingTCut,
    #[error(transparent)]
    Iet(#[from] IetError),
}

pub type Result<T> = std::result::Result<T, InductionError>;

/// `h_{Δ,T}(x)`: least `n ≥ 1` with `Tⁿ x ∈ Δ`.
pub fn first_return_time(t: &Iet, base: &Interval, x: &ExactScalar, cap: usize) -> Result<usize> {
    if !base.contains(x) {
        return Err(InductionError::NotInBase(x.to_string()));
    }
    let mut cur = x.clone();
    for n in 1..=cap {
        cur = t.apply_unchecked(&cur);
        if base.contains(&cur) {
            return Ok(n);
        }
    }
    Err(InductionError::ReturnCap { point: x.to_string(), cap })
}

/// Orbit segment `x, T x, …, T^h x` up to and including the first return.
fn return_orbit(t: &Iet, base: &Interval, x: &ExactScalar, cap: usize) -> Result<Vec<ExactScalar>> {
    let mut orbit = vec![x.clone()];
    let mut cur = x.clone();
    for _ in 0..cap {
        cur = t.apply_unchecked(&cur);
        let back = base.contains(&cur);
        orbit.push(cur.clone());
        if back {
            return Ok(orbit);
        }
    }
    Err(InductionError::ReturnCap { point: x.to_string(), cap })
}

/// Left-limit analogue of the first return: iterates `y ↦ lim_{z→y⁻} T z`
/// until a left neighbourhood of the iterate lies in `Δ`. Returns
/// `(lim_{x→y⁻} T_Δ x, lim_{x→y⁻} h_{Δ,T}(x))` and the left-limit orbit.
pub fn induced_left_limit(
    t: &Iet,
    base: &Interval,
    y: &ExactScalar,
    cap: usize,
) -> Result<(ExactScalar, usize, Vec<ExactScalar>)> {
    if !base.contains_left_of(y) {
        return Err(InductionError::NotInBase(y.to_string()));
    }
    let mut orbit = vec![y.clone()];
    let mut cur = y.clone();
    for n in 1..=cap {
        cur = t.left_limit_unchecked(&cur);
        orbit.push(cur.clone());
        if base.contains_left_of(&cur) {
            return Ok((cur, n, orbit));
        }
    }
    Err(InductionError::ReturnCap { point: y.to_string(), cap })
}

/// One continuity cell of an induced map: constant return time, translation
/// and itinerary.
#[derive(Clone, Debug, PartialEq)]
pub struct InducedCell {
    pub interval: Interval,
    pub return_time: usize,
    pub translation: ExactScalar,
    /// Ambient cell index of `T^i x` for `0 ≤ i < return_time`.
    pub itinerary: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InducedIet {
    pub base: Interval,
    pub cells: Vec<InducedCell>,
}

impl InducedIet {
    fn cell_index(&self, x: &ExactScalar) -> Option<usize> {
        if !self.base.contains(x) {
            return None;
        }
        Some(self.cells.partition_point(|c| &c.interval.left <= x) - 1)
    }

    pub fn apply(&self, x: &ExactScalar) -> Option<ExactScalar> {
        self.cell_index(x).map(|i| x + &self.cells[i].translation)
    }

    pub fn return_time(&self, x: &ExactScalar) -> Option<usize> {
        self.cell_index(x).map(|i| self.cells[i].return_time)
    }

    /// Interior junctions where the induced map jumps.
    pub fn discontinuities(&self) -> Vec<ExactScalar> {
        self.cells
            .windows(2)
            .filter(|w| w[0].translation != w[1].translation)
            .map(|w| w[1].interval.left.clone())
            .collect()
    }

    pub fn is_identity(&self) -> bool {
        self.cells.iter().all(|c| c.translation.is_zero())
    }

    /// Conjugates the induced map by the affine map `Δ → [0, 1)` and returns
    /// it as an IET with adjacent equal-translation cells merged.
    pub fn rescaled(&self, radicand: u64) -> Result<Iet> {
        let len = self.base.length();
        let mut bps = vec![ExactScalar::zero()];
        let mut trs: Vec<ExactScalar> = Vec::new();
        for (k, c) in self.cells.iter().enumerate() {
            let tr = &c.translation / &len;
            if k > 0 {
                if trs.last() == Some(&tr) {
                    continue;
                }
                bps.push(&(&c.interval.left - &self.base.left) / &len);
            }
            trs.push(tr);
        }
        bps.push(ExactScalar::one());
        Ok(Iet::with_radicand(radicand, bps, trs)?)
    }
}

/// Computes the first-return map of `t` on `base`.
pub fn induce(t: &Iet, base: &Interval, cap: usize) -> Result<InducedIet> {
    let one = ExactScalar::one();
    let mut starts: BTreeSet<ExactScalar> = BTreeSet::new();
    starts.insert(base.left.clone());

    // ambient interior breakpoints: the itinerary changes where T^i x crosses one
    for c in &t.breakpoints()[1..t.num_cells()] {
        if base.contains(c) {
            starts.insert(c.clone());
        } else if let Some(x) = first_backward_landing(t, base, c, cap)? {
            starts.insert(x);
        }
    }
    // entering or leaving the base: T^i x crossing its ends
    for c in [&base.left, &base.right] {
        if c.is_zero() || c == &one {
            continue;
        }
        if let Some(x) = first_backward_landing(t, base, c, cap)? {
            starts.insert(x);
        }
    }

    let starts: Vec<ExactScalar> = starts.into_iter().collect();
    let mut cells: Vec<InducedCell> = Vec::with_capacity(starts.len());
    for (k, left) in starts.iter().enumerate() {
        let right = starts.get(k + 1).unwrap_or(&base.right).clone();
        let orbit = return_orbit(t, base, left, cap)?;
        let h = orbit.len() - 1;
        let itinerary: Vec<usize> = orbit[..h].iter().map(|p| t.cell_of(p)).collect();
        let translation = &orbit[h] - left;
        let cell =
            InducedCell { interval: Interval { left: left.clone(), right }, return_time: h, translation, itinerary };
        match cells.last_mut() {
            Some(prev) if prev.itinerary == cell.itinerary => prev.interval.right = cell.interval.right,
            _ => cells.push(cell),
        }
    }

    let induced = InducedIet { base: base.clone(), cells };
    let count = induced.discontinuities().len();
    let bound = t.discontinuities().len() + 2;
    if count > bound {
        return Err(InductionError::DiscontinuityBound { count, bound });
    }
    Ok(induced)
}

/// `T^{-j} c` for the least `j ≥ 1` with the preimage in `base`.
fn first_backward_landing(t: &Iet, base: &Interval, c: &ExactScalar, cap: usize) -> Result<Option<ExactScalar>> {
    let mut cur = c.clone();
    for _ in 0..cap {
        cur = t.inverse_unchecked(&cur);
        if base.contains(&cur) {
            return Ok(Some(cur));
        }
        if &cur == c {
            // periodic orbit that never enters the base
            return Ok(None);
        }
    }
    Err(InductionError::ReturnCap { point: c.to_string(), cap })
}

/// Which alternatives of the induced-discontinuity classification hold at a
/// discontinuity `α` of `T_Δ`, with witnesses.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscontinuityClass {
    pub point: ExactScalar,
    pub return_time: usize,
    /// `T^i α ∉ Δ` for `0 < i < h`.
    pub avoids_base: bool,
    /// Indices `i < h` with `T^i α` an ambient discontinuity.
    pub hits_discontinuity: Vec<usize>,
    /// `T^h α` equals the left end of `Δ`.
    pub returns_to_left_end: bool,
    /// Indices `0 < i < h` with `lim_{x→α⁻} T^i x` equal to the right end of `Δ`.
    pub left_limit_hits_right_end: Vec<usize>,
}

impl DiscontinuityClass {
    pub fn c1(&self) -> bool {
        !self.hits_discontinuity.is_empty()
    }
    pub fn c2(&self) -> bool {
        self.returns_to_left_end
    }
    pub fn c3(&self) -> bool {
        !self.left_limit_hits_right_end.is_empty()
    }
}

pub fn classify_discontinuity(t: &Iet, base: &Interval, alpha: &ExactScalar, cap: usize) -> Result<DiscontinuityClass> {
    if !base.contains(alpha) || alpha == &base.left {
        return Err(InductionError::NotInducedDiscontinuity(alpha.to_string()));
    }
    let orbit = return_orbit(t, base, alpha, cap)?;
    let h = orbit.len() - 1;
    let (left_value, _, _) = induced_left_limit(t, base, alpha, cap)?;
    if left_value == orbit[h] {
        return Err(InductionError::NotInducedDiscontinuity(alpha.to_string()));
    }
    let avoids_base = orbit[1..h].iter().all(|p| !base.contains(p));
    let hits_discontinuity = (0..h).filter(|&i| t.is_discontinuity(&orbit[i])).collect();
    let returns_to_left_end = orbit[h] == base.left;
    let mut left_limit_hits_right_end = Vec::new();
    let mut cur = alpha.clone();
    for i in 1..h {
        cur = t.left_limit_unchecked(&cur);
        if cur == base.right {
            left_limit_hits_right_end.push(i);
        }
    }
    Ok(DiscontinuityClass {
        point: alpha.clone(),
        return_time: h,
        avoids_base,
        hits_discontinuity,
        returns_to_left_end,
        left_limit_hits_right_end,
    })
}

/// Least `i < h_{Δ,T}(x)` with `T^i x` a discontinuity of `T`, if any.
pub fn is_tcut(t: &Iet, base: &Interval, x: &ExactScalar, cap: usize) -> Result<Option<usize>> {
    if !base.contains(x) {
        return Err(InductionError::NotInBase(x.to_string()));
    }
    let orbit = return_orbit(t, base, x, cap)?;
    let h = orbit.len() - 1;
    Ok((0..h).find(|&i| t.is_discontinuity(&orbit[i])))
}

/// Outcome of the induced-map dichotomy on an interval.
#[derive(Clone, Debug, PartialEq)]
pub enum Dichotomy {
    /// A point of the base whose orbit meets a discontinuity at step `index`
    /// before returning.
    TCut { point: ExactScalar, index: usize },
    /// Every cell of the induced map has translation zero.
    Identity { cells: usize },
}

pub fn dichotomy(t: &Iet, base: &Interval, cap: usize) -> Result<Dichotomy> {
    let induced = induce(t, base, cap)?;
    if induced.is_identity() {
        return Ok(Dichotomy::Identity { cells: induced.cells.len() });
    }
    for cell in &induced.cells {
        if let Some(index) = is_tcut(t, base, &cell.interval.left, cap)? {
            return Ok(Dichotomy::TCut { point: cell.interval.left.clone(), index });
        }
    }
    Err(InductionError::MissingTCut)
}

/// Points `0 = y_0 < … < y_M = 1` with their largest gap.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    pub points: Vec<ExactScalar>,
    pub mesh: ExactScalar,
}

impl Partition {
    pub fn cells(&self) -> impl Iterator<Item = Interval> + '_ {
        self.points.windows(2).map(|w| Interval { left: w[0].clone(), right: w[1].clone() })
    }
}

/// Certificate for one discontinuity of an induced cell map.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscontinuityCertificate {
    pub point: ExactScalar,
    /// Least `i` with `T^i y` an ambient discontinuity before returning.
    pub tcut_index: Option<usize>,
}

/// Extra certificate for the discontinuity `y` whose induced left limit is
/// the right end of the cell.
#[derive(Clone, Debug, PartialEq)]
pub struct RightEndCertificate {
    pub point: ExactScalar,
    /// `i = lim_{x→y⁻} h_{Δ,T}(x)`.
    pub left_return_time: usize,
    /// Every `r < i` with `T^r y` an ambient discontinuity.
    pub witnesses: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellCertificate {
    pub cell: Interval,
    pub discontinuities: Vec<DiscontinuityCertificate>,
    pub right_end: Option<RightEndCertificate>,
}

impl CellCertificate {
    pub fn passes(&self) -> bool {
        self.discontinuities.iter().all(|d| d.tcut_index.is_some())
            && self.right_end.as_ref().is_none_or(|r| !r.witnesses.is_empty())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TCutPartition {
    /// Number of forward iterates of the discontinuities used.
    pub k: usize,
    pub partition: Partition,
    pub certificates: Vec<CellCertificate>,
}

impl TCutPartition {
    pub fn all_certified(&self) -> bool {
        self.certificates.iter().all(CellCertificate::passes)
    }
}

/// Builds the partition `{Tⁿ d_j : 1 ≤ n ≤ K} ∪ {0, 1}` for the least
/// `K ≤ kmax` with mesh at most `eps`, and certifies every cell.
pub fn tcut_partition(t: &Iet, eps: &ExactScalar, kmax: usize, cap: usize) -> Result<TCutPartition> {
    if eps.signum() <= 0 {
        return Err(InductionError::BadEpsilon);
    }
    let discs = t.discontinuities();
    if discs.is_empty() {
        return Err(InductionError::NoDiscontinuities);
    }
    if let Some((p, period)) = t.detect_periodicity(kmax) {
        return Err(InductionError::Periodic { point: p.to_string(), period });
    }

    let mut points: BTreeSet<ExactScalar> = [ExactScalar::zero(), ExactScalar::one()].into();
    let mut gaps: BTreeMap<ExactScalar, usize> = BTreeMap::new();
    gaps.insert(ExactScalar::one(), 1);
    let mut current = discs;
    let mut found = None;
    for k in 1..=kmax {
        for p in current.iter_mut() {
            *p = t.apply_unchecked(p);
            if points.contains(p) {
                continue;
            }
            let p: &ExactScalar = p;
            let lo = points.range(..p.clone()).next_back().expect("0 is present").clone();
            let hi = points.range(p.clone()..).next().expect("1 is present").clone();
            remove_gap(&mut gaps, &hi - &lo);
            *gaps.entry(p - &lo).or_insert(0) += 1;
            *gaps.entry(&hi - p).or_insert(0) += 1;
            points.insert(p.clone());
        }
        let mesh = gaps.keys().next_back().expect("non-empty").clone();
        if &mesh <= eps {
            found = Some((k, mesh));
            break;
        }
    }
    let Some((k, mesh)) = found else {
        let best = gaps.keys().next_back().map(|m| m.to_f64()).unwrap_or(1.0);
        return Err(InductionError::MeshNotReached { kmax, best_mesh: best });
    };

    let partition = Partition { points: points.into_iter().collect(), mesh };
    let certificates = partition.cells().map(|cell| certify_cell(t, &cell, cap)).collect::<Result<Vec<_>>>()?;
    Ok(TCutPartition { k, partition, certificates })
}

fn remove_gap(gaps: &mut BTreeMap<ExactScalar, usize>, g: ExactScalar) {
    if let Some(c) = gaps.get_mut(&g) {
        *c -= 1;
        if *c == 0 {
            gaps.remove(&g);
        }
    }
}

/// Certifies that every discontinuity of the induced map on `cell` is a
/// T-cut, and attaches the right-end certificate where it applies.
pub fn certify_cell(t: &Iet, cell: &Interval, cap: usize) -> Result<CellCertificate> {
    let induced = induce(t, cell, cap)?;
    let mut discontinuities = Vec::new();
    let mut right_end = None;
    for y in induced.discontinuities() {
        let tcut_index = is_tcut(t, cell, &y, cap)?;
        let (left_value, left_time, left_orbit) = induced_left_limit(t, cell, &y, cap)?;
        if left_value == cell.right {
            // left_orbit[r] = lim_{x→y⁻} T^r x; T is continuous from the right,
            // so the iterates of y itself are what the witness speaks about.
            let _ = left_orbit;
            let orbit = return_orbit(t, cell, &y, cap)?;
            let witnesses = (0..left_time.min(orbit.len())).filter(|&r| t.is_discontinuity(&orbit[r])).collect();
            right_end = Some(RightEndCertificate { point: y.clone(), left_return_time: left_time, witnesses });
        }
        discontinuities.push(DiscontinuityCertificate { point: y, tcut_index });
    }
    Ok(CellCertificate { cell: cell.clone(), discontinuities, right_end })
}

/// Which end of a floor meets a singularity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FloorEnd {
    Left,
    Right,
}

/// `T^level a = y_s` (left end) or `lim_{x→b⁻} T^level x = y_s` (right end).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EndpointHit {
    pub level: usize,
    pub singularity: usize,
    pub end: FloorEnd,
}

/// A Rohlin tower over a continuity cell of an induced map.
#[derive(Clone, Debug, PartialEq)]
pub struct Tower {
    pub base: Interval,
    pub height: usize,
    /// `T^i [a, b)` for `0 ≤ i < height`.
    pub floors: Vec<Interval>,
    /// `T^h [a, b)`.
    pub top_image: Interval,
    /// Floors are pairwise disjoint.
    pub disjoint_floors: bool,
    /// No floor interior contains a singularity.
    pub interiors_avoid_singularities: bool,
    /// Every floor end that coincides with a singularity.
    pub endpoint_hits: Vec<EndpointHit>,
    /// `T^h [a, b)` lies inside the inducing interval.
    pub returns_inside: bool,
}

impl Tower {
    pub fn width(&self) -> ExactScalar {
        self.base.length()
    }

    pub fn has_endpoint_hit(&self) -> bool {
        !self.endpoint_hits.is_empty()
    }

    /// Floor translations `s_i` with `T^i x = x + s_i` on the base.
    pub fn floor_shifts(&self) -> Vec<ExactScalar> {
        self.floors.iter().map(|f| &f.left - &self.base.left).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TowerSet {
    pub inducing: Interval,
    pub towers: Vec<Tower>,
    /// Some tower has width at least `|I| / (D + 1)`.
    pub wide_tower_exists: bool,
}

/// Towers over the continuity cells of the map induced on `inducing`.
pub fn towers(t: &Iet, inducing: &Interval, singularities: &[ExactScalar], cap: usize) -> Result<TowerSet> {
    let induced = induce(t, inducing, cap)?;
    if induced.is_identity() {
        let p = &inducing.left;
        return Err(InductionError::Periodic { point: p.to_string(), period: induced.cells[0].return_time });
    }
    let towers: Vec<Tower> = induced.cells.iter().map(|c| build_tower(t, inducing, c, singularities)).collect();
    let threshold = &inducing.length() / &ExactScalar::from_int(singularities.len() as i64 + 1);
    let wide_tower_exists = towers.iter().any(|tw| tw.width() >= threshold);
    Ok(TowerSet { inducing: inducing.clone(), towers, wide_tower_exists })
}

fn build_tower(t: &Iet, inducing: &Interval, cell: &InducedCell, singularities: &[ExactScalar]) -> Tower {
    let base = cell.interval.clone();
    let mut shift = ExactScalar::zero();
    let mut floors = Vec::with_capacity(cell.return_time);
    for &c in &cell.itinerary {
        floors.push(Interval { left: &base.left + &shift, right: &base.right + &shift });
        shift = &shift + &t.translations()[c];
    }
    let top_image = Interval { left: &base.left + &shift, right: &base.right + &shift };

    let mut sorted: Vec<&Interval> = floors.iter().collect();
    sorted.sort_by(|a, b| a.left.cmp(&b.left));
    let disjoint_floors = sorted.windows(2).all(|w| w[0].right <= w[1].left);

    let interiors_avoid_singularities =
        floors.iter().all(|f| singularities.iter().all(|y| !(&f.left < y && y < &f.right)));

    let mut endpoint_hits = Vec::new();
    for (level, f) in floors.iter().enumerate() {
        for (s, y) in singularities.iter().enumerate() {
            if &f.left == y {
                endpoint_hits.push(EndpointHit { level, singularity: s, end: FloorEnd::Left });
            }
            if &f.right == y {
                endpoint_hits.push(EndpointHit { level, singularity: s, end: FloorEnd::Right });
            }
        }
    }
    let returns_inside = inducing.left <= top_image.left && top_image.right <= inducing.right;
    Tower {
        height: cell.return_time,
        base,
        floors,
        top_image,
        disjoint_floors,
        interiors_avoid_singularities,
        endpoint_hits,
        returns_inside,
    }
}

/// Structured-text view of a certified partition.
#[derive(Clone, Debug, Serialize)]
pub struct PartitionReport {
    pub k: usize,
    pub mesh: ScalarText,
    pub mesh_approx: f64,
    pub points: Vec<ScalarText>,
    pub all_certified: bool,
    pub cells: Vec<CellReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CellReport {
    pub index: usize,
    pub left: ScalarText,
    pub right: ScalarText,
    pub discontinuities: Vec<ScalarText>,
    /// `-1` marks a discontinuity without a T-cut witness.
    pub tcut_indices: Vec<i64>,
    pub right_end_point: Option<ScalarText>,
    pub right_end_left_return_time: Option<usize>,
    pub right_end_witnesses: Vec<usize>,
    pub passes: bool,
}

impl TCutPartition {
    pub fn report(&self) -> PartitionReport {
        PartitionReport {
            k: self.k,
            mesh: ScalarText::from(&self.partition.mesh),
            mesh_approx: self.partition.mesh.to_f64(),
            points: self.partition.points.iter().map(ScalarText::from).collect(),
            all_certified: self.all_certified(),
            cells: self
                .certificates
                .iter()
                .enumerate()
                .map(|(index, c)| CellReport {
                    index,
                    left: ScalarText::from(&c.cell.left),
                    right: ScalarText::from(&c.cell.right),
                    discontinuities: c.discontinuities.iter().map(|d| ScalarText::from(&d.point)).collect(),
                    tcut_indices: c.discontinuities.iter().map(|d| d.tcut_index.map_or(-1, |i| i as i64)).collect(),
                    right_end_point: c.right_end.as_ref().map(|r| ScalarText::from(&r.point)),
                    right_end_left_return_time: c.right_end.as_ref().map(|r| r.left_return_time),
                    right_end_witnesses: c.right_end.as_ref().map(|r| r.witnesses.clone()).unwrap_or_default(),
                    passes: c.passes(),
                })
                .collect(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.report()).expect("partition report serializes")
    }
}
