//! Independent reference implementations used by the property tests and
//! the acceptance suite. They favour directness over speed.

#![allow(dead_code)]

use mangatl_core::corpus::{BBox, Page, Panel, RegionKind, TextRegion};
use mangatl_core::layout::Point2;
use rand::rngs::StdRng;
use rand::RngExt;

// ---------------------------------------------------------------- ChrF

fn grams(chars: &[char], n: usize) -> Vec<String> {
    if chars.len() < n {
        return Vec::new();
    }
    (0..=chars.len() - n)
        .map(|i| chars[i..i + n].iter().collect())
        .collect()
}

/// ChrF from an explicit list of every n-gram occurrence. `None` when the
/// reference is empty.
pub fn chrf_oracle(
    hyp: &str,
    reference: &str,
    max_n: usize,
    beta: f64,
    strip: bool,
) -> Option<f64> {
    let prep = |s: &str| -> Vec<char> {
        s.chars()
            .filter(|c| !(strip && c.is_whitespace()))
            .collect()
    };
    let (h, r) = (prep(hyp), prep(reference));
    if r.is_empty() {
        return None;
    }
    let (mut p_sum, mut r_sum, mut orders) = (0.0, 0.0, 0);
    for n in 1..=max_n {
        let hg = grams(&h, n);
        let rg = grams(&r, n);
        if hg.is_empty() || rg.is_empty() {
            continue;
        }
        let mut distinct = hg.clone();
        distinct.sort();
        distinct.dedup();
        let matched: usize = distinct
            .iter()
            .map(|g| {
                let in_h = hg.iter().filter(|x| *x == g).count();
                let in_r = rg.iter().filter(|x| *x == g).count();
                in_h.min(in_r)
            })
            .sum();
        p_sum += matched as f64 / hg.len() as f64;
        r_sum += matched as f64 / rg.len() as f64;
        orders += 1;
    }
    if orders == 0 {
        return Some(0.0);
    }
    let (p, rc) = (p_sum / orders as f64, r_sum / orders as f64);
    if p + rc == 0.0 {
        return Some(0.0);
    }
    let b2 = beta * beta;
    Some(100.0 * (1.0 + b2) * p * rc / (b2 * p + rc))
}

// -------------------------------------------------------------- OPTICS

/// Cluster assignment straight from the definitions over all pairs:
/// core points (at least `min_pts` points within `eps`, itself included)
/// connected by `eps` links form clusters; a non-core point within `eps`
/// of a core point joins the core point with the smallest
/// `max(core_distance, distance)`, lowest index on ties; clusters smaller
/// than `min_pts` become noise. Returned in canonical form.
pub fn optics_oracle(points: &[Point2], eps: f64, min_pts: usize) -> (Vec<Vec<usize>>, Vec<usize>) {
    let n = points.len();
    let d = |i: usize, j: usize| points[i].distance(&points[j]);
    let core_dist: Vec<Option<f64>> = (0..n)
        .map(|i| {
            let mut within: Vec<f64> = (0..n).map(|j| d(i, j)).filter(|&x| x <= eps).collect();
            if within.len() < min_pts {
                return None;
            }
            within.sort_by(f64::total_cmp);
            Some(within[min_pts - 1])
        })
        .collect();

    // union-find over core points
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if core_dist[i].is_some() && core_dist[j].is_some() && d(i, j) <= eps {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut root: Vec<Option<usize>> = (0..n)
        .map(|i| core_dist[i].map(|_| find(&mut parent, i)))
        .collect();
    for o in 0..n {
        if core_dist[o].is_some() {
            continue;
        }
        let mut best: Option<(f64, usize)> = None;
        for (c, cd) in core_dist.iter().enumerate() {
            let (Some(cd), dist) = (*cd, d(o, c)) else {
                continue;
            };
            if dist > eps {
                continue;
            }
            let reach = cd.max(dist);
            if best.is_none_or(|(b, bc)| reach < b || (reach == b && c < bc)) {
                best = Some((reach, c));
            }
        }
        root[o] = best.and_then(|(_, c)| root[c]);
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    let mut noise = Vec::new();
    for (i, r) in root.iter().enumerate() {
        match r {
            Some(r) => groups.entry(*r).or_default().push(i),
            None => noise.push(i),
        }
    }
    let mut clusters = Vec::new();
    for (_, g) in groups {
        if g.len() >= min_pts {
            clusters.push(g);
        } else {
            noise.extend(g);
        }
    }
    canonical(clusters, noise)
}

pub fn canonical(
    mut clusters: Vec<Vec<usize>>,
    mut noise: Vec<usize>,
) -> (Vec<Vec<usize>>, Vec<usize>) {
    for c in &mut clusters {
        c.sort_unstable();
    }
    clusters.sort();
    noise.sort_unstable();
    (clusters, noise)
}

/// Hull of each cluster, kept when both sides reach `min_box`.
pub fn boxes_oracle(clusters: &[Vec<usize>], points: &[Point2], min_box: u32) -> Vec<BBox> {
    clusters
        .iter()
        .filter(|c| !c.is_empty())
        .filter_map(|c| {
            let x0 = c
                .iter()
                .map(|&i| points[i].x)
                .fold(f64::INFINITY, f64::min)
                .floor() as u32;
            let y0 = c
                .iter()
                .map(|&i| points[i].y)
                .fold(f64::INFINITY, f64::min)
                .floor() as u32;
            let x1 = c.iter().map(|&i| points[i].x).fold(0.0, f64::max).ceil() as u32;
            let y1 = c.iter().map(|&i| points[i].y).fold(0.0, f64::max).ceil() as u32;
            let (w, h) = (x1 - x0, y1 - y0);
            (w > 0 && h > 0 && w >= min_box && h >= min_box).then_some(BBox { x: x0, y: y0, w, h })
        })
        .collect()
}

// -------------------------------------------------------- reading order

/// A page whose panels follow a guillotine layout together with the order
/// implied by construction: horizontal splits read top then bottom,
/// vertical splits right then left, and inside each panel regions placed
/// on a diagonal from the top right.
pub struct SyntheticPage {
    pub page: Page,
    pub expected: Vec<String>,
}

const GUTTER: u32 = 6;
const MIN_PANEL: u32 = 48;

#[derive(Clone, Copy)]
struct Rect {
    x0: u32,
    y0: u32,
    x1: u32,
    y1: u32,
}

enum Node {
    Leaf(Rect),
    Horizontal(Box<Node>, Box<Node>, Rect),
    Vertical(Box<Node>, Box<Node>, Rect),
}

fn grow(rng: &mut StdRng, r: Rect, depth: u32) -> Node {
    let (w, h) = (r.x1 - r.x0, r.y1 - r.y0);
    let can_h = h >= 2 * MIN_PANEL + GUTTER;
    let can_v = w >= 2 * MIN_PANEL + GUTTER;
    if depth == 0 || (!can_h && !can_v) || rng.random_bool(0.25) {
        return Node::Leaf(r);
    }
    let horizontal = if can_h && can_v {
        rng.random_bool(0.5)
    } else {
        can_h
    };
    if horizontal {
        let s = rng.random_range(r.y0 + MIN_PANEL..=r.y1 - MIN_PANEL - GUTTER);
        let top = Rect { y1: s, ..r };
        let bottom = Rect {
            y0: s + GUTTER,
            ..r
        };
        Node::Horizontal(
            Box::new(grow(rng, top, depth - 1)),
            Box::new(grow(rng, bottom, depth - 1)),
            r,
        )
    } else {
        let s = rng.random_range(r.x0 + MIN_PANEL..=r.x1 - MIN_PANEL - GUTTER);
        let left = Rect { x1: s, ..r };
        let right = Rect {
            x0: s + GUTTER,
            ..r
        };
        Node::Vertical(
            Box::new(grow(rng, right, depth - 1)),
            Box::new(grow(rng, left, depth - 1)),
            r,
        )
    }
}

fn leaves(node: &Node, out: &mut Vec<Rect>) {
    match node {
        Node::Leaf(r) => out.push(*r),
        Node::Horizontal(a, b, _) | Node::Vertical(a, b, _) => {
            leaves(a, out);
            leaves(b, out);
        }
    }
}

/// A split is unambiguous when no straight line of the other direction
/// crosses its whole extent without entering a panel: otherwise the page
/// also decomposes the other way. Lines run along pixel boundaries, so
/// panels that only touch do not block one.
fn unambiguous(node: &Node) -> bool {
    let mut panels = Vec::new();
    leaves(node, &mut panels);
    match node {
        Node::Leaf(_) => true,
        Node::Horizontal(a, b, r) => {
            let free_column =
                (r.x0 + 1..r.x1).any(|x| panels.iter().all(|p| x <= p.x0 || x >= p.x1));
            !free_column && unambiguous(a) && unambiguous(b)
        }
        Node::Vertical(a, b, r) => {
            let free_row = (r.y0 + 1..r.y1).any(|y| panels.iter().all(|p| y <= p.y0 || y >= p.y1));
            !free_row && unambiguous(a) && unambiguous(b)
        }
    }
}

/// Random guillotine page of `width`x`height` with up to `depth` levels of
/// splits and 1..=3 regions per panel.
pub fn synthetic_page(rng: &mut StdRng, width: u32, height: u32, depth: u32) -> SyntheticPage {
    let node = loop {
        let n = grow(
            rng,
            Rect {
                x0: 0,
                y0: 0,
                x1: width,
                y1: height,
            },
            depth,
        );
        if unambiguous(&n) {
            break n;
        }
    };
    let mut rects = Vec::new();
    leaves(&node, &mut rects);
    build_page(rng, &rects)
}

/// Page from panels listed in reading order.
pub fn page_from_panels(
    rng: &mut StdRng,
    rects_in_order: &[(u32, u32, u32, u32)],
) -> SyntheticPage {
    let rects: Vec<Rect> = rects_in_order
        .iter()
        .map(|&(x, y, w, h)| Rect {
            x0: x,
            y0: y,
            x1: x + w,
            y1: y + h,
        })
        .collect();
    build_page(rng, &rects)
}

fn build_page(rng: &mut StdRng, rects: &[Rect]) -> SyntheticPage {
    let width = rects.iter().map(|r| r.x1).max().unwrap_or(1);
    let height = rects.iter().map(|r| r.y1).max().unwrap_or(1);
    let mut panels = Vec::new();
    let mut regions = Vec::new();
    let mut expected = Vec::new();
    for (pi, r) in rects.iter().enumerate() {
        panels.push(Panel {
            id: format!("panel{pi}"),
            bbox: BBox::new(r.x0, r.y0, r.x1 - r.x0, r.y1 - r.y0),
        });
        let k = rng.random_range(1..=3u32);
        let (w, h) = (r.x1 - r.x0, r.y1 - r.y0);
        for i in 0..k {
            // Diagonal from the top right keeps centers strictly ordered.
            let cx = r.x1 - (i + 1) * w / (k + 1);
            let cy = r.y0 + (i + 1) * h / (k + 1);
            let id = format!("p{pi}r{i}");
            regions.push((id.clone(), BBox::new(cx - 3, cy - 3, 6, 6)));
            expected.push(id);
        }
    }
    // Shuffle storage order so the estimator cannot lean on it.
    let mut shuffled: Vec<usize> = (0..regions.len()).collect();
    for i in (1..shuffled.len()).rev() {
        let j = rng.random_range(0..=i);
        shuffled.swap(i, j);
    }
    let regions = shuffled
        .iter()
        .map(|&i| {
            let (id, bbox) = regions[i].clone();
            TextRegion {
                reading_index: expected.iter().position(|e| *e == id).unwrap(),
                id,
                bbox,
                kind: RegionKind::SpeechBubble,
                source_text: "テキスト".into(),
                translations: Default::default(),
            }
        })
        .collect();
    let mut panel_order: Vec<usize> = (0..panels.len()).collect();
    panel_order.reverse();
    let panels = panel_order.into_iter().map(|i| panels[i].clone()).collect();
    SyntheticPage {
        page: Page {
            index: 0,
            image_path: "synthetic.png".into(),
            width,
            height,
            panels,
            regions,
        },
        expected,
    }
}

/// Layout name and panel rectangles `(x, y, w, h)`.
pub type NamedLayout = (&'static str, Vec<(u32, u32, u32, u32)>);

/// The named layouts: vertical stacks, a 2x2 grid and nested cuts, each
/// with panels listed in their reading order.
pub fn named_layouts() -> Vec<NamedLayout> {
    vec![
        (
            "vertical stack of 2",
            vec![(0, 0, 200, 100), (0, 110, 200, 100)],
        ),
        (
            "vertical stack of 4",
            vec![
                (0, 0, 200, 60),
                (0, 70, 200, 60),
                (0, 140, 200, 60),
                (0, 210, 200, 60),
            ],
        ),
        (
            "2x2 grid",
            vec![
                (110, 0, 100, 100),
                (0, 0, 100, 100),
                (110, 110, 100, 100),
                (0, 110, 100, 100),
            ],
        ),
        (
            "tall right column beside a stack",
            vec![(110, 0, 100, 210), (0, 0, 100, 100), (0, 110, 100, 100)],
        ),
        (
            "tier of three over a wide panel",
            vec![
                (140, 0, 60, 100),
                (70, 0, 60, 100),
                (0, 0, 60, 100),
                (0, 110, 200, 90),
            ],
        ),
        (
            "nested cuts",
            vec![
                (0, 0, 300, 80),
                (160, 90, 140, 200),
                (80, 90, 70, 95),
                (0, 90, 70, 95),
                (0, 195, 150, 95),
                (160, 300, 140, 80),
                (0, 300, 150, 80),
            ],
        ),
    ]
}
