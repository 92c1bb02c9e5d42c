//! Reading-order estimation for right-to-left manga pages.
//!
//! Panels are ordered by a recursive XY-cut: horizontal gaps split the page
//! into tiers read top to bottom, vertical gaps split a tier into columns read
//! right to left. Inside a panel, regions are sorted by center, right to left
//! and then top to bottom.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::corpus::{BBox, Page};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderedRegions {
    /// Region ids in estimated reading order.
    pub order: Vec<String>,
    /// Set when some group of panels admitted no cut and was center-sorted.
    pub fallback: bool,
}

/// Orders `boxes` by recursive XY-cut. `tie` supplies a stable key used when
/// centers coincide. Returns the order and whether the fallback was needed.
pub fn xy_cut_order<K: Ord>(boxes: &[BBox], tie: impl Fn(usize) -> K) -> (Vec<usize>, bool) {
    let mut out = Vec::with_capacity(boxes.len());
    let mut fallback = false;
    let items: Vec<usize> = (0..boxes.len()).collect();
    cut(boxes, items, &tie, &mut out, &mut fallback);
    (out, fallback)
}

fn cut<K: Ord>(
    boxes: &[BBox],
    items: Vec<usize>,
    tie: &impl Fn(usize) -> K,
    out: &mut Vec<usize>,
    fallback: &mut bool,
) {
    if items.len() <= 1 {
        out.extend(items);
        return;
    }
    let rows = split_by_gaps(boxes, &items, |b| (b.y, b.bottom()));
    if rows.len() > 1 {
        for row in rows {
            cut(boxes, row, tie, out, fallback);
        }
        return;
    }
    let mut cols = split_by_gaps(boxes, &items, |b| (b.x, b.right()));
    if cols.len() > 1 {
        cols.reverse();
        for col in cols {
            cut(boxes, col, tie, out, fallback);
        }
        return;
    }
    *fallback = true;
    let mut items = items;
    items.sort_by(|&a, &b| center_cmp(&boxes[a], &boxes[b]).then_with(|| tie(a).cmp(&tie(b))));
    out.extend(items);
}

/// Groups items whose projections `[lo, hi)` overlap, in ascending order.
/// Boxes that merely touch are separable.
fn split_by_gaps(
    boxes: &[BBox],
    items: &[usize],
    span: impl Fn(&BBox) -> (u32, u32),
) -> Vec<Vec<usize>> {
    let mut sorted: Vec<usize> = items.to_vec();
    sorted.sort_by_key(|&i| (span(&boxes[i]).0, i));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut reach = 0u32;
    for i in sorted {
        let (lo, hi) = span(&boxes[i]);
        match groups.last_mut() {
            Some(g) if lo < reach => {
                g.push(i);
                reach = reach.max(hi);
            }
            _ => {
                groups.push(alloc::vec![i]);
                reach = hi;
            }
        }
    }
    groups
}

/// Right to left, then top to bottom, by center.
fn center_cmp(a: &BBox, b: &BBox) -> Ordering {
    let (ax, ay) = a.center();
    let (bx, by) = b.center();
    bx.total_cmp(&ax).then(ay.total_cmp(&by))
}

/// Index of the panel a region belongs to: the smallest panel containing its
/// center, else the panel it overlaps most, else the nearest by center.
fn assign_panel(panels: &[BBox], region: &BBox) -> usize {
    let (cx, cy) = region.center();
    if let Some((i, _)) = panels
        .iter()
        .enumerate()
        .filter(|(_, p)| p.contains_point(cx, cy))
        .min_by_key(|(i, p)| (p.area(), *i))
    {
        return i;
    }
    if let Some((i, _)) = panels
        .iter()
        .enumerate()
        .map(|(i, p)| (i, p.intersection_area(region)))
        .filter(|&(_, a)| a > 0)
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
    {
        return i;
    }
    panels
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let (px, py) = p.center();
            ((px - cx) * (px - cx) + (py - cy) * (py - cy), i)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map_or(0, |(_, i)| i)
}

/// Estimates the reading order of every region on `page`. A page without
/// panel annotations is treated as a single full-page panel.
pub fn estimate_reading_order(page: &Page) -> OrderedRegions {
    let full = [BBox::new(0, 0, page.width.max(1), page.height.max(1))];
    let panel_boxes: Vec<BBox> = if page.panels.is_empty() {
        full.to_vec()
    } else {
        page.panels.iter().map(|p| p.bbox).collect()
    };
    let (panel_order, fallback) = if page.panels.is_empty() {
        (alloc::vec![0], false)
    } else {
        xy_cut_order(&panel_boxes, |i| page.panels[i].id.as_str())
    };

    let mut per_panel: Vec<Vec<usize>> = alloc::vec![Vec::new(); panel_boxes.len()];
    for (ri, region) in page.regions.iter().enumerate() {
        per_panel[assign_panel(&panel_boxes, &region.bbox)].push(ri);
    }

    let mut order = Vec::with_capacity(page.regions.len());
    for p in panel_order {
        let members = &mut per_panel[p];
        members.sort_by(|&a, &b| {
            let (ra, rb) = (&page.regions[a], &page.regions[b]);
            center_cmp(&ra.bbox, &rb.bbox).then_with(|| ra.id.cmp(&rb.id))
        });
        order.extend(members.iter().map(|&ri| page.regions[ri].id.clone()));
    }
    OrderedRegions { order, fallback }
}

/// Fraction of regions whose estimated position differs from their
/// annotated `reading_index`. Zero for an empty page.
pub fn order_disagreement(page: &Page, estimate: &OrderedRegions) -> f64 {
    if page.regions.is_empty() {
        return 0.0;
    }
    let wrong = estimate
        .order
        .iter()
        .enumerate()
        .filter(|(pos, id)| page.region(id).is_none_or(|r| r.reading_index != *pos))
        .count();
    wrong as f64 / page.regions.len() as f64
}
