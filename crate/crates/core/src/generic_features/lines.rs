//! Straight line segments from a Hough accumulator and the static/dynamic
//! line statistics built on them.

use serde::{Deserialize, Serialize};

use super::raster::Plane;
use super::segmentation::color_gradient;
use super::PreprocessedImage;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LineConfig {
    /// Edge threshold as a percentile (0..100) of gradient magnitude.
    pub edge_percentile: f64,
    /// Lines within this many degrees of horizontal or vertical are static.
    pub static_tolerance_deg: f64,
    pub min_votes: u32,
    pub min_length: f64,
    pub max_gap: usize,
    pub max_lines: usize,
}

impl Default for LineConfig {
    fn default() -> Self {
        Self {
            edge_percentile: 90.0,
            static_tolerance_deg: 10.0,
            min_votes: 30,
            min_length: 20.0,
            max_gap: 3,
            max_lines: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Segment {
    pub fn length(&self) -> f64 {
        (self.x1 - self.x0).hypot(self.y1 - self.y0)
    }

    /// Undirected orientation in `[0, 180)` degrees, 0 = horizontal.
    pub fn orientation(&self) -> f64 {
        let a = (self.y1 - self.y0).atan2(self.x1 - self.x0).to_degrees().rem_euclid(180.0);
        if a >= 180.0 {
            0.0
        } else {
            a
        }
    }

    /// Angle to the horizontal axis folded into `[0, 90]`.
    pub fn absolute_angle(&self) -> f64 {
        let a = self.orientation();
        if a > 90.0 {
            180.0 - a
        } else {
            a
        }
    }
}

/// Nearest-rank percentile of `values` (p in 0..=100).
pub fn percentile(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((p / 100.0) * v.len() as f64).ceil() as usize;
    v[rank.clamp(1, v.len()) - 1]
}

/// Binary edge map: magnitude at or above the percentile and strictly positive.
pub fn edge_map(value: &Plane<f64>, percentile_p: f64) -> Plane<bool> {
    let g = color_gradient(std::slice::from_ref(value));
    let t = percentile(&g.data, percentile_p);
    g.map(|m| m > 0.0 && m >= t)
}

const THETA_STEPS: usize = 180;

struct Accumulator {
    rho_offset: isize,
    rho_bins: usize,
    cos: Vec<f64>,
    sin: Vec<f64>,
    votes: Vec<u32>,
}

impl Accumulator {
    fn new(w: usize, h: usize) -> Self {
        let diag = ((w * w + h * h) as f64).sqrt().ceil() as isize;
        let (sin, cos) = (0..THETA_STEPS)
            .map(|t| (t as f64).to_radians().sin_cos())
            .unzip();
        Self {
            rho_offset: diag,
            rho_bins: (2 * diag + 1) as usize,
            cos,
            sin,
            votes: vec![0; THETA_STEPS * (2 * diag + 1) as usize],
        }
    }

    fn rho_bin(&self, t: usize, x: usize, y: usize) -> usize {
        let r = x as f64 * self.cos[t] + y as f64 * self.sin[t];
        (r.round() as isize + self.rho_offset) as usize
    }

    fn vote(&mut self, x: usize, y: usize, delta: i32) {
        for t in 0..THETA_STEPS {
            let i = t * self.rho_bins + self.rho_bin(t, x, y);
            self.votes[i] = self.votes[i].saturating_add_signed(delta);
        }
    }

    /// Strongest cell; ties go to the lowest angle then the lowest rho.
    fn peak(&self) -> (usize, usize, u32) {
        let mut best = (0, 0, 0);
        for (i, &v) in self.votes.iter().enumerate() {
            if v > best.2 {
                best = (i / self.rho_bins, i % self.rho_bins, v);
            }
        }
        best
    }
}

/// Deterministic progressive Hough extraction: repeatedly take the strongest
/// accumulator cell, walk along its line, keep the longest run of edge
/// pixels with gaps of at most `max_gap`, and remove the pixels it covers.
pub fn detect_segments(edges: &Plane<bool>, cfg: &LineConfig) -> Vec<Segment> {
    let (w, h) = (edges.width, edges.height);
    let mut remaining = edges.clone();
    let mut acc = Accumulator::new(w, h);
    for y in 0..h {
        for x in 0..w {
            if remaining.get(x, y) {
                acc.vote(x, y, 1);
            }
        }
    }
    let diag = acc.rho_offset as f64;
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < cfg.max_lines && attempts < 8 * cfg.max_lines.max(1) {
        attempts += 1;
        let (t, rb, votes) = acc.peak();
        if votes < cfg.min_votes.max(1) {
            break;
        }
        let rho = rb as f64 - diag;
        let (c, s) = (acc.cos[t], acc.sin[t]);
        let (fx, fy) = (rho * c, rho * s);
        let (dx, dy) = (-s, c);

        // pixels visited along the line, in order
        let mut trail: Vec<((usize, usize), bool)> = Vec::new();
        let steps = (2.0 * diag) as isize;
        for k in -steps..=steps {
            let x = (fx + k as f64 * dx).round();
            let y = (fy + k as f64 * dy).round();
            if x < 0.0 || y < 0.0 || x >= w as f64 || y >= h as f64 {
                continue;
            }
            let p = (x as usize, y as usize);
            if trail.last().is_some_and(|q| q.0 == p) {
                continue;
            }
            trail.push((p, remaining.get(p.0, p.1)));
        }

        let mut best: Option<(usize, usize)> = None;
        let mut run_start: Option<usize> = None;
        let mut last_hit = 0;
        for (i, &(_, hit)) in trail.iter().enumerate() {
            if hit {
                match run_start {
                    Some(_) if i - last_hit <= cfg.max_gap + 1 => {}
                    _ => run_start = Some(i),
                }
                last_hit = i;
                let r = (run_start.unwrap(), i);
                if best.is_none_or(|b| r.1 - r.0 > b.1 - b.0) {
                    best = Some(r);
                }
            }
        }

        let Some((a, b)) = best else {
            acc.votes[t * acc.rho_bins + rb] = 0;
            continue;
        };
        let (p0, p1) = (trail[a].0, trail[b].0);
        let seg = Segment {
            x0: p0.0 as f64,
            y0: p0.1 as f64,
            x1: p1.0 as f64,
            y1: p1.1 as f64,
        };
        if seg.length() < cfg.min_length {
            // this cell cannot yield a long enough segment
            acc.votes[t * acc.rho_bins + rb] = 0;
            continue;
        }
        // clear a band one pixel wide on each side of the segment
        for &(cell, _) in &trail[a..=b] {
            for (ox, oy) in [(0isize, 0isize), (1, 0), (-1, 0), (0, 1), (0, -1)] {
                let (x, y) = (cell.0 as isize + ox, cell.1 as isize + oy);
                if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
                    continue;
                }
                let (x, y) = (x as usize, y as usize);
                if remaining.get(x, y) {
                    remaining.set(x, y, false);
                    acc.vote(x, y, -1);
                }
            }
        }
        out.push(seg);
    }
    out
}

/// Mean absolute angle, mean pairwise relative angle, total length over the
/// image diagonal. All zero for an empty set.
pub fn line_stats(lines: &[Segment], diagonal: f64) -> [f64; 3] {
    if lines.is_empty() {
        return [0.0; 3];
    }
    let n = lines.len() as f64;
    let abs_mean = lines.iter().map(Segment::absolute_angle).sum::<f64>() / n;
    let mut rel = 0.0;
    let mut pairs = 0usize;
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            let d = (lines[i].orientation() - lines[j].orientation()).abs();
            rel += d.min(180.0 - d);
            pairs += 1;
        }
    }
    let rel_mean = if pairs == 0 { 0.0 } else { rel / pairs as f64 };
    let length = lines.iter().map(Segment::length).sum::<f64>() / diagonal;
    [abs_mean, rel_mean, length]
}

/// f84..f89: statistics of static lines then of dynamic lines.
pub fn dynamics_lines(p: &PreprocessedImage, cfg: &LineConfig) -> [f64; 6] {
    let v = p.hsv.map(|px| px[2]);
    let edges = edge_map(&v, cfg.edge_percentile);
    let lines = detect_segments(&edges, cfg);
    let (stat, dynamic): (Vec<Segment>, Vec<Segment>) = lines.into_iter().partition(|l| {
        let a = l.absolute_angle();
        a <= cfg.static_tolerance_deg || a >= 90.0 - cfg.static_tolerance_deg
    });
    let diag = (v.width as f64).hypot(v.height as f64);
    let s = line_stats(&stat, diag);
    let d = line_stats(&dynamic, diag);
    [s[0], s[1], s[2], d[0], d[1], d[2]]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draw(w: usize, h: usize, on: impl Fn(usize, usize) -> bool) -> Plane<f64> {
        Plane::from_fn(w, h, |x, y| if on(x, y) { 1.0 } else { 0.0 })
    }

    #[test]
    fn percentile_nearest_rank() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(percentile(&v, 90.0), 9.0);
        assert_eq!(percentile(&v, 100.0), 10.0);
        assert_eq!(percentile(&v, 0.0), 1.0);
    }

    #[test]
    fn angles_fold() {
        let s = Segment {
            x0: 0.0,
            y0: 0.0,
            x1: -10.0,
            y1: 10.0,
        };
        assert!((s.orientation() - 135.0).abs() < 1e-12);
        assert!((s.absolute_angle() - 45.0).abs() < 1e-12);
    }

    #[test]
    fn blank_has_no_edges() {
        let e = edge_map(&Plane::filled(64, 64, 0.5), 90.0);
        assert!(e.data.iter().all(|&b| !b));
        assert!(detect_segments(&e, &LineConfig::default()).is_empty());
    }

    #[test]
    fn horizontal_bar_gives_horizontal_segments() {
        let img = draw(128, 128, |x, y| (20..108).contains(&x) && (62..66).contains(&y));
        let segs = detect_segments(&edge_map(&img, 90.0), &LineConfig::default());
        assert!(!segs.is_empty());
        for s in &segs {
            assert!(s.absolute_angle() <= 10.0 || s.absolute_angle() >= 80.0, "{s:?}");
        }
        assert!(segs.iter().any(|s| s.absolute_angle() < 1.0 && s.length() > 60.0));
    }

    #[test]
    fn diagonal_bar_is_near_45() {
        let img = draw(128, 128, |x, y| (20..108).contains(&x) && (x as isize - y as isize).abs() <= 2);
        let segs = detect_segments(&edge_map(&img, 90.0), &LineConfig::default());
        let long: Vec<_> = segs.iter().filter(|s| s.length() > 40.0).collect();
        assert!(!long.is_empty());
        for s in long {
            assert!((s.absolute_angle() - 45.0).abs() <= 3.0, "{s:?}");
        }
    }

    #[test]
    fn stats_of_two_lines() {
        let a = Segment {
            x0: 0.0,
            y0: 0.0,
            x1: 10.0,
            y1: 0.0,
        };
        let b = Segment {
            x0: 0.0,
            y0: 0.0,
            x1: 0.0,
            y1: 10.0,
        };
        let s = line_stats(&[a, b], 20.0);
        assert!((s[0] - 45.0).abs() < 1e-12);
        assert!((s[1] - 90.0).abs() < 1e-12);
        assert!((s[2] - 1.0).abs() < 1e-12);
    }
}
