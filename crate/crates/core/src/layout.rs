//! Sub-window boundary detection and code-region cropping.
//!
//! Per frame, Canny edges feed a Hough transform restricted to near-axis
//! angles, giving horizontal and vertical boundary segments. Segments are
//! clustered into a line catalog, frames are clustered by which catalog lines
//! they show (their line vector), and each layout cluster keeps only the lines
//! most of its frames agree on. Rectangles bounded by those lines are the
//! sub-windows; the largest is taken as the code editor.

use std::collections::BTreeMap;

use image::GrayImage;
use imageproc::edges::canny;
use imageproc::filter::gaussian_blur_f32;
use imageproc::gradients::{horizontal_sobel, vertical_sobel};
use serde::{Deserialize, Serialize};

use crate::dbscan::{dbscan, groups};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub const fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Self { x, y, w, h }
    }

    pub fn area(&self) -> u64 {
        u64::from(self.w) * u64::from(self.h)
    }

    pub fn right(&self) -> u32 {
        self.x + self.w
    }

    pub fn bottom(&self) -> u32 {
        self.y + self.h
    }

    pub fn intersection_area(&self, o: &Rect) -> u64 {
        let w = self.right().min(o.right()).saturating_sub(self.x.max(o.x));
        let h = self.bottom().min(o.bottom()).saturating_sub(self.y.max(o.y));
        u64::from(w) * u64::from(h)
    }

    /// `self` lies inside `outer` with more than `margin` pixels to spare on
    /// every side.
    pub fn strictly_inside(&self, outer: &Rect, margin: u32) -> bool {
        self.x > outer.x + margin
            && self.y > outer.y + margin
            && self.right() + margin < outer.right()
            && self.bottom() + margin < outer.bottom()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LayoutConfig {
    pub canny_low: f32,
    pub canny_high: f32,
    /// Hough accumulator threshold (votes).
    pub hough_threshold: u32,
    pub min_line_length: u32,
    pub max_line_gap: u32,
    /// Accepted deviation from an axis, in whole degrees.
    pub angle_tolerance_deg: u32,
    /// Parallel segments closer than this are merged after detection.
    pub duplicate_px: u32,
    pub line_eps_px: f64,
    pub overlap_min: f64,
    pub layout_eps: f64,
    pub rect_slack_px: u32,
    /// Rectangles thinner than this are not sub-windows.
    pub min_rect_side_px: u32,
    pub min_region_frac: f64,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            canny_low: 50.0,
            canny_high: 150.0,
            hough_threshold: 50,
            min_line_length: 60,
            max_line_gap: 5,
            angle_tolerance_deg: 2,
            duplicate_px: 3,
            line_eps_px: 10.0,
            overlap_min: 0.3,
            layout_eps: 0.2,
            rect_slack_px: 10,
            min_rect_side_px: 20,
            min_region_frac: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Horizontal,
    Vertical,
}

/// Axis-aligned segment. `position` is y for horizontal and x for vertical
/// segments; `[start, end)` is the extent along the line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BoundarySegment {
    pub orientation: Orientation,
    pub position: u32,
    pub start: u32,
    pub end: u32,
}

impl BoundarySegment {
    pub fn horizontal(y: u32, start: u32, end: u32) -> Self {
        Self {
            orientation: Orientation::Horizontal,
            position: y,
            start,
            end,
        }
    }

    pub fn vertical(x: u32, start: u32, end: u32) -> Self {
        Self {
            orientation: Orientation::Vertical,
            position: x,
            start,
            end,
        }
    }

    pub fn length(&self) -> u32 {
        self.end - self.start
    }

    pub fn overlap(&self, o: &BoundarySegment) -> u32 {
        self.end.min(o.end).saturating_sub(self.start.max(o.start))
    }

    /// Whether the segment covers `[from, to]` up to `slack` at both ends.
    pub fn spans(&self, from: u32, to: u32, slack: u32) -> bool {
        self.start <= from + slack && self.end + slack >= to
    }
}

/// Per-pixel edge masks split by the direction of the edge.
struct EdgeMasks {
    w: u32,
    h: u32,
    /// edge pixels whose gradient is mostly vertical (horizontal edges)
    horiz: Vec<bool>,
    vert: Vec<bool>,
}

fn edge_masks(gray: &GrayImage, cfg: &LayoutConfig) -> EdgeMasks {
    let (w, h) = gray.dimensions();
    let edges = canny(gray, cfg.canny_low, cfg.canny_high);
    // gradient direction on the same smoothed image Canny works on
    let blurred = gaussian_blur_f32(gray, 1.4);
    let gx = horizontal_sobel(&blurred);
    let gy = vertical_sobel(&blurred);
    let n = (w * h) as usize;
    let mut horiz = vec![false; n];
    let mut vert = vec![false; n];
    for (i, e) in edges.as_raw().iter().enumerate() {
        if *e == 0 {
            continue;
        }
        let (dx, dy) = (gx.as_raw()[i].unsigned_abs(), gy.as_raw()[i].unsigned_abs());
        if dy > dx {
            horiz[i] = true;
        } else if dx > dy {
            vert[i] = true;
        }
    }
    EdgeMasks { w, h, horiz, vert }
}

/// Near-axis Hough over one mask. Lines are parameterised by their angle
/// offset from the axis and their intercept at the middle of the frame; the
/// caller maps `(u, v)` to pixels so one routine serves both orientations
/// (`u` runs along the line, `v` across it).
fn hough_axis(
    mask: &mut [bool],
    len_u: u32,
    len_v: u32,
    index: impl Fn(u32, u32) -> usize,
    cfg: &LayoutConfig,
) -> Vec<(u32, u32, u32)> {
    let tol = cfg.angle_tolerance_deg as i32;
    let slopes: Vec<f64> = (-tol..=tol).map(|d| f64::from(d).to_radians().tan()).collect();
    let centre = f64::from(len_u) / 2.0;
    let margin = (centre * slopes.last().copied().unwrap_or(0.0).abs()).ceil() as i64 + 1;
    let rows = len_v as i64 + 2 * margin;
    let intercept = |u: u32, v: u32, slope: f64| -> i64 {
        (f64::from(v) - (f64::from(u) - centre) * slope).round() as i64 + margin
    };

    let mut votes = vec![vec![0u32; rows as usize]; slopes.len()];
    for u in 0..len_u {
        for v in 0..len_v {
            if mask[index(u, v)] {
                for (a, &s) in slopes.iter().enumerate() {
                    votes[a][intercept(u, v, s) as usize] += 1;
                }
            }
        }
    }
    let mut cells: Vec<(u32, usize, i64)> = Vec::new();
    for (a, row) in votes.iter().enumerate() {
        for (b, &n) in row.iter().enumerate() {
            if n >= cfg.hough_threshold {
                cells.push((n, a, b as i64));
            }
        }
    }
    // most votes first; among equals prefer the exact axis, then position
    let axis = tol as usize;
    cells.sort_by_key(|&(n, a, b)| (std::cmp::Reverse(n), a.abs_diff(axis), a, b));

    let mut found = Vec::new();
    for (_, a, b) in cells {
        let slope = slopes[a];
        let v_at = |u: u32| -> Option<u32> {
            let v = (b - margin) as f64 + (f64::from(u) - centre) * slope;
            let v = v.round();
            (v >= 0.0 && v < f64::from(len_v)).then_some(v as u32)
        };
        let exact = |mask: &[bool], u: u32| v_at(u).is_some_and(|v| mask[index(u, v)]);
        // the walk tolerates one pixel of wobble across the line, which
        // nearby text can push a Canny edge by
        let on = |mask: &[bool], u: u32| {
            v_at(u).is_some_and(|v| {
                (v.saturating_sub(1)..=(v + 1).min(len_v - 1)).any(|vv| mask[index(u, vv)])
            })
        };
        // the cell's original votes may have been consumed by earlier lines
        let live = (0..len_u).filter(|&u| exact(mask, u)).count() as u32;
        if live < cfg.hough_threshold {
            continue;
        }
        let mut runs = Vec::new();
        let mut run: Option<(u32, u32)> = None;
        for u in 0..len_u {
            if !on(mask, u) {
                continue;
            }
            run = match run {
                Some((s, last)) if u - last - 1 <= cfg.max_line_gap => Some((s, u)),
                Some(done) => {
                    runs.push(done);
                    Some((u, u))
                }
                None => Some((u, u)),
            };
        }
        runs.extend(run);
        for (s, last) in runs {
            let end = last + 1;
            if end - s < cfg.min_line_length {
                continue;
            }
            for u in s..end {
                if let Some(v) = v_at(u) {
                    for dv in [-1i64, 0, 1] {
                        let vv = i64::from(v) + dv;
                        if vv >= 0 && vv < i64::from(len_v) {
                            mask[index(u, vv as u32)] = false;
                        }
                    }
                }
            }
            let mid = v_at((s + end) / 2).unwrap_or(0);
            found.push((mid, s, end));
        }
    }
    found
}

/// Merges parallel segments that are within `px` of each other and overlap,
/// e.g. the two edges Canny finds on either side of a thin drawn line.
fn merge_duplicates(mut segs: Vec<BoundarySegment>, px: u32) -> Vec<BoundarySegment> {
    loop {
        segs.sort();
        let mut merged = false;
        'outer: for i in 0..segs.len() {
            for j in i + 1..segs.len() {
                let (a, b) = (segs[i], segs[j]);
                if a.orientation == b.orientation
                    && a.position.abs_diff(b.position) <= px
                    && a.overlap(&b) > 0
                {
                    let (la, lb) = (u64::from(a.length()), u64::from(b.length()));
                    let pos = (u64::from(a.position) * la + u64::from(b.position) * lb + (la + lb) / 2) / (la + lb);
                    segs[i] = BoundarySegment {
                        orientation: a.orientation,
                        position: pos as u32,
                        start: a.start.min(b.start),
                        end: a.end.max(b.end),
                    };
                    segs.remove(j);
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            return segs;
        }
    }
}

/// Axis-aligned boundary segments of at least `min_line_length` pixels.
pub fn detect_segments(gray: &GrayImage, cfg: &LayoutConfig) -> Vec<BoundarySegment> {
    let (w, h) = gray.dimensions();
    if w < 3 || h < 3 {
        return Vec::new();
    }
    let mut masks = edge_masks(gray, cfg);
    let (mw, mh) = (masks.w, masks.h);
    let mut segs = Vec::new();
    for (y, s, e) in hough_axis(&mut masks.horiz, mw, mh, |u, v| (v * mw + u) as usize, cfg) {
        segs.push(BoundarySegment::horizontal(y, s, e));
    }
    for (x, s, e) in hough_axis(&mut masks.vert, mh, mw, |u, v| (u * mw + v) as usize, cfg) {
        segs.push(BoundarySegment::vertical(x, s, e));
    }
    merge_duplicates(segs, cfg.duplicate_px)
}

/// Ordered catalog of representative lines (horizontals first).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineCatalog {
    pub lines: Vec<BoundarySegment>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusteredSegments {
    pub catalog: LineCatalog,
    /// Catalog index of each input segment.
    pub assignment: Vec<usize>,
}

/// Clustering distance between two segments: positional gap when they are
/// parallel and overlap enough, otherwise infinite.
pub fn segment_distance(a: &BoundarySegment, b: &BoundarySegment, overlap_min: f64) -> f64 {
    if a.orientation != b.orientation {
        return f64::INFINITY;
    }
    let need = overlap_min * f64::from(a.length().min(b.length()));
    if f64::from(a.overlap(b)) >= need {
        f64::from(a.position.abs_diff(b.position))
    } else {
        f64::INFINITY
    }
}

/// Representative preference: longest, then lowest position, then earliest.
fn representative_key(s: &BoundarySegment) -> (std::cmp::Reverse<u32>, u32, u32, u32) {
    (std::cmp::Reverse(s.length()), s.position, s.start, s.end)
}

/// DBSCAN (minPts 1) over segments; every cluster is represented by its
/// longest member.
pub fn cluster_segments(segments: &[BoundarySegment], eps: f64, overlap_min: f64) -> ClusteredSegments {
    let labels = dbscan(segments.len(), eps, 1, |i, j| {
        segment_distance(&segments[i], &segments[j], overlap_min)
    });
    let clusters = groups(&labels);
    let mut reps: Vec<(BoundarySegment, Vec<usize>)> = clusters
        .into_iter()
        .map(|members| {
            let rep = *members
                .iter()
                .map(|&i| &segments[i])
                .min_by_key(|s| representative_key(s))
                .expect("clusters are nonempty");
            (rep, members)
        })
        .collect();
    reps.sort_by_key(|(rep, _)| *rep);
    let mut assignment = vec![0; segments.len()];
    for (k, (_, members)) in reps.iter().enumerate() {
        for &i in members {
            assignment[i] = k;
        }
    }
    ClusteredSegments {
        catalog: LineCatalog {
            lines: reps.into_iter().map(|(r, _)| r).collect(),
        },
        assignment,
    }
}

/// Frame `t` with its detected segments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameLines {
    pub t: u32,
    pub segments: Vec<BoundarySegment>,
}

/// One window layout shared by a group of frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutCluster {
    pub id: usize,
    pub members: Vec<u32>,
    pub majority: Vec<BoundarySegment>,
    pub sub_windows: Vec<Rect>,
    pub code_region: Option<Rect>,
}

/// Body of `regions.json`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Regions {
    pub frame_dims: (u32, u32),
    pub catalog: LineCatalog,
    /// Line vector of every frame, as catalog indices present.
    pub line_vectors: BTreeMap<u32, Vec<usize>>,
    pub clusters: Vec<LayoutCluster>,
}

impl Regions {
    pub fn cluster_of(&self, t: u32) -> Option<&LayoutCluster> {
        self.clusters.iter().find(|c| c.members.contains(&t))
    }

    pub fn code_region(&self, t: u32) -> Option<Rect> {
        self.cluster_of(t).and_then(|c| c.code_region)
    }
}

pub fn hamming_fraction(a: &[bool], b: &[bool]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.iter().zip(b).filter(|(x, y)| x != y).count() as f64 / a.len() as f64
}

/// Groups frames by window layout and keeps, per group, the catalog lines
/// present in more than half of its frames.
pub fn cluster_layouts(frames: &[FrameLines], frame_dims: (u32, u32), cfg: &LayoutConfig) -> Regions {
    let all: Vec<BoundarySegment> = frames.iter().flat_map(|f| f.segments.iter().copied()).collect();
    let clustered = cluster_segments(&all, cfg.line_eps_px, cfg.overlap_min);
    let m = clustered.catalog.lines.len();

    let mut vectors = vec![vec![false; m]; frames.len()];
    let mut k = 0;
    for (fi, f) in frames.iter().enumerate() {
        for _ in &f.segments {
            vectors[fi][clustered.assignment[k]] = true;
            k += 1;
        }
    }
    let labels = dbscan(frames.len(), cfg.layout_eps, 1, |a, b| hamming_fraction(&vectors[a], &vectors[b]));

    let clusters = groups(&labels)
        .into_iter()
        .enumerate()
        .map(|(id, members)| {
            let majority: Vec<BoundarySegment> = (0..m)
                .filter(|&l| {
                    let present = members.iter().filter(|&&f| vectors[f][l]).count();
                    2 * present > members.len()
                })
                .map(|l| clustered.catalog.lines[l])
                .collect();
            let (sub_windows, code_region) = detect_code_region(&majority, frame_dims, cfg);
            LayoutCluster {
                id,
                members: members.iter().map(|&f| frames[f].t).collect(),
                majority,
                sub_windows,
                code_region,
            }
        })
        .collect();

    Regions {
        frame_dims,
        line_vectors: frames
            .iter()
            .zip(&vectors)
            .map(|(f, v)| (f.t, (0..m).filter(|&l| v[l]).collect()))
            .collect(),
        catalog: clustered.catalog,
        clusters,
    }
}

/// Catalog lines plus the four frame borders, with lines hugging a border
/// dropped (the border already bounds that side).
fn bounded_lines(lines: &[BoundarySegment], (w, h): (u32, u32), slack: u32) -> (Vec<BoundarySegment>, Vec<BoundarySegment>) {
    let mut hs = vec![BoundarySegment::horizontal(0, 0, w), BoundarySegment::horizontal(h, 0, w)];
    let mut vs = vec![BoundarySegment::vertical(0, 0, h), BoundarySegment::vertical(w, 0, h)];
    for l in lines {
        match l.orientation {
            Orientation::Horizontal if l.position > slack && l.position + slack < h => hs.push(*l),
            Orientation::Vertical if l.position > slack && l.position + slack < w => vs.push(*l),
            _ => {}
        }
    }
    hs.sort();
    vs.sort();
    (hs, vs)
}

/// Every rectangle whose four bounding lines reach its corners (within the
/// slack), excluding slivers thinner than the minimum side.
pub fn candidate_rectangles(lines: &[BoundarySegment], dims: (u32, u32), cfg: &LayoutConfig) -> Vec<Rect> {
    let slack = cfg.rect_slack_px;
    let (hs, vs) = bounded_lines(lines, dims, slack);
    let mut out = Vec::new();
    for (i, top) in hs.iter().enumerate() {
        for bottom in &hs[i + 1..] {
            if bottom.position < top.position + cfg.min_rect_side_px {
                continue;
            }
            for (j, left) in vs.iter().enumerate() {
                if !left.spans(top.position, bottom.position, slack) {
                    continue;
                }
                for right in &vs[j + 1..] {
                    if right.position < left.position + cfg.min_rect_side_px {
                        continue;
                    }
                    if right.spans(top.position, bottom.position, slack)
                        && top.spans(left.position, right.position, slack)
                        && bottom.spans(left.position, right.position, slack)
                    {
                        out.push(Rect::new(
                            left.position,
                            top.position,
                            right.position - left.position,
                            bottom.position - top.position,
                        ));
                    }
                }
            }
        }
    }
    out.sort_by_key(|r| (r.area(), *r));
    out.dedup();
    out
}

/// Keeps the smallest of overlapping rectangles, greedily by area.
pub fn smallest_disjoint(candidates: &[Rect]) -> Vec<Rect> {
    let mut sorted = candidates.to_vec();
    sorted.sort_by_key(|r| (r.area(), *r));
    let mut kept: Vec<Rect> = Vec::new();
    for r in sorted {
        if kept.iter().all(|k| k.intersection_area(&r) == 0) {
            kept.push(r);
        }
    }
    kept
}

/// Sub-windows bounded by the catalog lines and the frame borders, and the
/// largest of them as the code region when it covers enough of the frame.
pub fn detect_code_region(
    majority: &[BoundarySegment],
    dims: (u32, u32),
    cfg: &LayoutConfig,
) -> (Vec<Rect>, Option<Rect>) {
    let kept = smallest_disjoint(&candidate_rectangles(majority, dims, cfg));
    let frame_area = u64::from(dims.0) * u64::from(dims.1);
    let code = kept
        .iter()
        .max_by_key(|r| (r.area(), std::cmp::Reverse(**r)))
        .copied()
        .filter(|r| r.area() as f64 >= cfg.min_region_frac * frame_area as f64);
    let mut sub_windows = kept;
    sub_windows.sort_by_key(|r| (r.y, r.x));
    (sub_windows, code)
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Luma;

    fn white(w: u32, h: u32) -> GrayImage {
        GrayImage::from_pixel(w, h, Luma([255]))
    }

    fn draw_hline(img: &mut GrayImage, y: u32, x0: u32, x1: u32, thick: u32) {
        for yy in y..y + thick {
            for x in x0..x1 {
                img.put_pixel(x, yy, Luma([0]));
            }
        }
    }

    fn draw_vline(img: &mut GrayImage, x: u32, y0: u32, y1: u32, thick: u32) {
        for xx in x..x + thick {
            for y in y0..y1 {
                img.put_pixel(xx, y, Luma([0]));
            }
        }
    }

    #[test]
    fn rectangle_outline_gives_four_segments() {
        let mut img = white(640, 480);
        // 400x300 outline with its top-left corner at (100, 80)
        draw_hline(&mut img, 80, 100, 500, 2);
        draw_hline(&mut img, 378, 100, 500, 2);
        draw_vline(&mut img, 100, 80, 380, 2);
        draw_vline(&mut img, 498, 80, 380, 2);
        let segs = detect_segments(&img, &LayoutConfig::default());
        let hs: Vec<_> = segs.iter().filter(|s| s.orientation == Orientation::Horizontal).collect();
        let vs: Vec<_> = segs.iter().filter(|s| s.orientation == Orientation::Vertical).collect();
        assert_eq!((hs.len(), vs.len()), (2, 2), "{segs:?}");
        assert!(hs[0].position.abs_diff(80) <= 2 && hs[1].position.abs_diff(379) <= 2, "{hs:?}");
        assert!(vs[0].position.abs_diff(100) <= 2 && vs[1].position.abs_diff(499) <= 2, "{vs:?}");
        for s in &segs {
            assert!(s.length() >= 290, "{s:?}");
        }
    }

    #[test]
    fn uniform_image_has_no_segments() {
        assert!(detect_segments(&white(300, 200), &LayoutConfig::default()).is_empty());
    }

    #[test]
    fn short_stub_is_dropped() {
        let mut img = white(300, 200);
        draw_hline(&mut img, 100, 50, 100, 2);
        draw_hline(&mut img, 150, 50, 200, 2);
        let segs = detect_segments(&img, &LayoutConfig::default());
        assert_eq!(segs.len(), 1, "{segs:?}");
        assert!(segs[0].position.abs_diff(150) <= 2);
    }

    #[test]
    fn close_pair_collapses_to_longer() {
        let segs = [
            BoundarySegment::horizontal(10, 0, 1200),
            BoundarySegment::horizontal(12, 0, 1280),
            BoundarySegment::horizontal(100, 0, 1280),
        ];
        let c = cluster_segments(&segs, 10.0, 0.3);
        assert_eq!(c.catalog.lines, vec![segs[1], segs[2]]);
        assert_eq!(c.assignment, vec![0, 0, 1]);
    }

    #[test]
    fn disjoint_spans_stay_apart() {
        let segs = [BoundarySegment::horizontal(50, 0, 100), BoundarySegment::horizontal(50, 500, 700)];
        assert_eq!(cluster_segments(&segs, 10.0, 0.3).catalog.lines.len(), 2);
        let one = [BoundarySegment::vertical(5, 0, 90)];
        assert_eq!(cluster_segments(&one, 10.0, 0.3).catalog.lines, one.to_vec());
    }

    #[test]
    fn cross_lines_make_four_cells() {
        let lines = [BoundarySegment::horizontal(100, 0, 1280), BoundarySegment::vertical(200, 0, 720)];
        let (subs, code) = detect_code_region(&lines, (1280, 720), &LayoutConfig::default());
        assert_eq!(
            subs,
            vec![
                Rect::new(0, 0, 200, 100),
                Rect::new(200, 0, 1080, 100),
                Rect::new(0, 100, 200, 620),
                Rect::new(200, 100, 1080, 620)
            ]
        );
        assert_eq!(code, Some(Rect::new(200, 100, 1080, 620)));
    }

    #[test]
    fn empty_catalog_is_full_frame() {
        let (subs, code) = detect_code_region(&[], (640, 480), &LayoutConfig::default());
        assert_eq!(subs, vec![Rect::new(0, 0, 640, 480)]);
        assert_eq!(code, Some(Rect::new(0, 0, 640, 480)));
    }

    #[test]
    fn nested_split_keeps_inner_rectangles() {
        // outer box 100..500 x 100..400, split by a horizontal at 250
        let lines = [
            BoundarySegment::horizontal(100, 100, 500),
            BoundarySegment::horizontal(400, 100, 500),
            BoundarySegment::vertical(100, 100, 400),
            BoundarySegment::vertical(500, 100, 400),
            BoundarySegment::horizontal(250, 100, 500),
        ];
        let (subs, _) = detect_code_region(&lines, (640, 480), &LayoutConfig::default());
        assert!(subs.contains(&Rect::new(100, 100, 400, 150)));
        assert!(subs.contains(&Rect::new(100, 250, 400, 150)));
        assert!(!subs.contains(&Rect::new(100, 100, 400, 300)));
    }

    #[test]
    fn small_region_is_absent() {
        // a 60x60 box is the largest kept rectangle... after the frame pieces
        // are consumed by smaller ones; use a frame barely larger than it
        let lines = [
            BoundarySegment::horizontal(20, 0, 100),
            BoundarySegment::vertical(20, 0, 100),
        ];
        let cfg = LayoutConfig {
            min_region_frac: 0.9,
            ..Default::default()
        };
        let (_, code) = detect_code_region(&lines, (100, 100), &cfg);
        assert_eq!(code, None);
    }

    #[test]
    fn majority_drops_rare_lines() {
        // 10 frames share 8 lines, each adds one unique short line
        let shared: Vec<BoundarySegment> = (0..4)
            .map(|i| BoundarySegment::horizontal(100 + 100 * i, 0, 1280))
            .chain((0..4).map(|i| BoundarySegment::vertical(150 + 250 * i, 0, 720)))
            .collect();
        let frames: Vec<FrameLines> = (0..10)
            .map(|t| {
                let mut segs = shared.clone();
                segs.push(BoundarySegment::horizontal(150, 100 * t, 100 * t + 60));
                FrameLines { t, segments: segs }
            })
            .collect();
        let regions = cluster_layouts(&frames, (1280, 720), &LayoutConfig::default());
        assert_eq!(regions.catalog.lines.len(), 18);
        assert_eq!(regions.clusters.len(), 1);
        let mut majority = regions.clusters[0].majority.clone();
        majority.sort();
        let mut expected = shared.clone();
        expected.sort();
        assert_eq!(majority, expected);
    }

    #[test]
    fn identical_frames_form_one_cluster() {
        let segs = vec![BoundarySegment::horizontal(300, 0, 640)];
        let frames = vec![
            FrameLines { t: 0, segments: segs.clone() },
            FrameLines { t: 1, segments: segs },
        ];
        let regions = cluster_layouts(&frames, (640, 480), &LayoutConfig::default());
        assert_eq!(regions.clusters.len(), 1);
        assert_eq!(regions.clusters[0].members, vec![0, 1]);
        assert_eq!(regions.code_region(1), Some(Rect::new(0, 0, 640, 300)));
    }
}
