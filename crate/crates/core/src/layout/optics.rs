//! OPTICS ordering of text-pixel centroids and the flat cluster extraction
//! used to group detected characters into utterances.

use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::LayoutError;
use crate::corpus::BBox;

/// Centroid of a detected text element, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        libm::sqrt(dx * dx + dy * dy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    /// Reachability radius in pixels; also the extraction threshold.
    pub eps: f64,
    /// Points (including the point itself) needed within `eps` for a core point.
    pub min_pts: usize,
    /// Boxes whose shorter side is below this are dropped.
    pub min_box: u32,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            eps: 12.0,
            min_pts: 3,
            min_box: 8,
        }
    }
}

impl ClusterParams {
    pub fn validate(&self) -> Result<(), LayoutError> {
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(LayoutError::InvalidParams(
                "eps must be a positive finite number",
            ));
        }
        if self.min_pts == 0 {
            return Err(LayoutError::InvalidParams("min_pts must be at least 1"));
        }
        Ok(())
    }
}

/// The reachability plot: processing order plus per-point distances.
/// `None` stands for an undefined distance.
#[derive(Debug, Clone, PartialEq)]
pub struct OpticsOrdering {
    pub order: Vec<usize>,
    pub reachability: Vec<Option<f64>>,
    pub core_distance: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Clustering {
    /// Point indices per cluster, each sorted ascending.
    pub clusters: Vec<Vec<usize>>,
    /// Unclustered point indices, ascending.
    pub noise: Vec<usize>,
}

/// Uniform grid with cell side `eps`; a radius query inspects 3x3 cells.
struct Grid {
    cell: f64,
    cells: BTreeMap<(i64, i64), Vec<usize>>,
}

impl Grid {
    fn new(points: &[Point2], cell: f64) -> Self {
        let mut cells: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(p, cell)).or_default().push(i);
        }
        Self { cell, cells }
    }

    fn key(p: &Point2, cell: f64) -> (i64, i64) {
        (
            libm::floor(p.x / cell) as i64,
            libm::floor(p.y / cell) as i64,
        )
    }

    /// `(index, distance)` for every point within `eps` of `points[i]`,
    /// including `i` itself.
    fn neighbors(&self, points: &[Point2], i: usize, eps: f64, out: &mut Vec<(usize, f64)>) {
        out.clear();
        let (cx, cy) = Self::key(&points[i], self.cell);
        for gx in cx - 1..=cx + 1 {
            for gy in cy - 1..=cy + 1 {
                if let Some(members) = self.cells.get(&(gx, gy)) {
                    for &j in members {
                        let d = points[i].distance(&points[j]);
                        if d <= eps {
                            out.push((j, d));
                        }
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Seed {
    reach: f64,
    index: usize,
}

// Min-heap on (reach, index).
impl Ord for Seed {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .reach
            .total_cmp(&self.reach)
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Seed {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Seed {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Seed {}

fn check_points(points: &[Point2]) -> Result<(), LayoutError> {
    for (i, p) in points.iter().enumerate() {
        if !(p.x.is_finite() && p.y.is_finite()) || p.x < 0.0 || p.y < 0.0 {
            return Err(LayoutError::InvalidPoint(i));
        }
    }
    Ok(())
}

/// Computes the OPTICS reachability ordering. Ties in the seed list are
/// broken by the lower point index, so the result depends only on the input.
pub fn optics_ordering(
    points: &[Point2],
    params: &ClusterParams,
) -> Result<OpticsOrdering, LayoutError> {
    params.validate()?;
    check_points(points)?;
    let n = points.len();
    let grid = Grid::new(points, params.eps);
    let mut scratch = Vec::new();

    let mut core_distance = vec![None; n];
    let mut dists = Vec::new();
    for (i, core) in core_distance.iter_mut().enumerate() {
        grid.neighbors(points, i, params.eps, &mut scratch);
        if scratch.len() >= params.min_pts {
            dists.clear();
            dists.extend(scratch.iter().map(|&(_, d)| d));
            dists.sort_by(f64::total_cmp);
            *core = Some(dists[params.min_pts - 1]);
        }
    }

    let mut reachability: Vec<Option<f64>> = vec![None; n];
    let mut processed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut seeds = BinaryHeap::new();

    for start in 0..n {
        if processed[start] {
            continue;
        }
        processed[start] = true;
        order.push(start);
        let Some(_) = core_distance[start] else {
            continue;
        };

        expand(
            points,
            &grid,
            params.eps,
            start,
            &core_distance,
            &processed,
            &mut reachability,
            &mut seeds,
            &mut scratch,
        );
        while let Some(Seed { reach, index }) = seeds.pop() {
            if processed[index] || reachability[index] != Some(reach) {
                continue;
            }
            processed[index] = true;
            order.push(index);
            if core_distance[index].is_some() {
                expand(
                    points,
                    &grid,
                    params.eps,
                    index,
                    &core_distance,
                    &processed,
                    &mut reachability,
                    &mut seeds,
                    &mut scratch,
                );
            }
        }
    }

    Ok(OpticsOrdering {
        order,
        reachability,
        core_distance,
    })
}

#[allow(clippy::too_many_arguments)]
fn expand(
    points: &[Point2],
    grid: &Grid,
    eps: f64,
    center: usize,
    core_distance: &[Option<f64>],
    processed: &[bool],
    reachability: &mut [Option<f64>],
    seeds: &mut BinaryHeap<Seed>,
    scratch: &mut Vec<(usize, f64)>,
) {
    let core = core_distance[center].expect("expand is only called on core points");
    grid.neighbors(points, center, eps, scratch);
    for &(o, d) in scratch.iter() {
        if processed[o] {
            continue;
        }
        let reach = if core > d { core } else { d };
        if reachability[o].is_none_or(|r| reach < r) {
            reachability[o] = Some(reach);
            seeds.push(Seed { reach, index: o });
        }
    }
}

/// Flat clusters at reachability threshold `eps`.
///
/// Core points are labelled by a DBSCAN-style sweep over the reachability
/// plot. A non-core point joins the cluster of the core point that reaches
/// it with the smallest reachability distance (lowest index on ties), or is
/// noise if no core point lies within `eps`. Clusters that end up with fewer
/// than `min_pts` members are dissolved into noise.
pub fn optics_cluster(
    points: &[Point2],
    params: &ClusterParams,
) -> Result<Clustering, LayoutError> {
    let ordering = optics_ordering(points, params)?;
    let n = points.len();
    let eps = params.eps;

    let mut label: Vec<Option<usize>> = vec![None; n];
    let mut next = 0usize;
    let mut current = None;
    for &p in &ordering.order {
        let reached = ordering.reachability[p].is_some_and(|r| r <= eps);
        if !reached {
            current = if ordering.core_distance[p].is_some() {
                next += 1;
                Some(next - 1)
            } else {
                None
            };
        }
        if ordering.core_distance[p].is_some() {
            label[p] = current;
        }
    }

    let grid = Grid::new(points, eps);
    let mut scratch = Vec::new();
    for o in 0..n {
        if ordering.core_distance[o].is_some() {
            continue;
        }
        grid.neighbors(points, o, eps, &mut scratch);
        let best = scratch
            .iter()
            .filter_map(|&(c, d)| {
                let core = ordering.core_distance[c]?;
                Some((if core > d { core } else { d }, c))
            })
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        label[o] = best.and_then(|(_, c)| label[c]);
    }

    let mut clusters = vec![Vec::new(); next];
    let mut noise = Vec::new();
    for (i, l) in label.iter().enumerate() {
        match l {
            Some(c) => clusters[*c].push(i),
            None => noise.push(i),
        }
    }
    let (kept, dissolved): (Vec<_>, Vec<_>) = clusters
        .into_iter()
        .partition(|c| c.len() >= params.min_pts);
    noise.extend(dissolved.into_iter().flatten());
    noise.sort_unstable();
    Ok(Clustering {
        clusters: kept,
        noise,
    })
}

/// Axis-aligned hull of each cluster, dropping boxes too small to hold text.
pub fn cluster_boxes(
    clusters: &[Vec<usize>],
    points: &[Point2],
    params: &ClusterParams,
) -> Vec<BBox> {
    clusters
        .iter()
        .filter_map(|members| {
            let mut it = members.iter().map(|&i| points[i]);
            let first = it.next()?;
            let (mut x0, mut y0, mut x1, mut y1) = (first.x, first.y, first.x, first.y);
            for p in it {
                x0 = x0.min(p.x);
                y0 = y0.min(p.y);
                x1 = x1.max(p.x);
                y1 = y1.max(p.y);
            }
            let x = libm::floor(x0) as u32;
            let y = libm::floor(y0) as u32;
            let w = (libm::ceil(x1) as u32).saturating_sub(x);
            let h = (libm::ceil(y1) as u32).saturating_sub(y);
            let bbox = BBox::new(x, y, w, h);
            (!bbox.is_empty() && w >= params.min_box && h >= params.min_box).then_some(bbox)
        })
        .collect()
}
