//! Connected regions of the color clustering, and a one-level waterfall
//! (marker watershed followed by a saliency merge) for the segment count.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::color::circular_mean_deg;
use super::raster::{neighbors4, Plane};
use super::PreprocessedImage;

/// 4-connected components of equal labels. Component ids are assigned in
/// scan order starting at 0; returns the id plane and the area of each id.
pub fn connected_components<L: Copy + PartialEq>(labels: &Plane<L>) -> (Plane<u32>, Vec<usize>) {
    let (w, h) = (labels.width, labels.height);
    let mut comp = Plane::filled(w, h, u32::MAX);
    let mut areas = Vec::new();
    let mut stack = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if comp.get(x, y) != u32::MAX {
                continue;
            }
            let id = areas.len() as u32;
            let label = labels.get(x, y);
            let mut area = 0;
            comp.set(x, y, id);
            stack.push((x, y));
            while let Some((cx, cy)) = stack.pop() {
                area += 1;
                for (nx, ny) in neighbors4(cx, cy, w, h) {
                    if comp.get(nx, ny) == u32::MAX && labels.get(nx, ny) == label {
                        comp.set(nx, ny, id);
                        stack.push((nx, ny));
                    }
                }
            }
            areas.push(area);
        }
    }
    (comp, areas)
}

pub const TOP_REGIONS: usize = 5;

/// f28..f48: count of regions covering at least 1% of the image, then mean
/// (H, S, V) of each of the five largest regions, then their area ratios.
pub fn region_features(p: &PreprocessedImage) -> [f64; 21] {
    let (comp, areas) = connected_components(&p.kmeans_labels);
    let total = comp.data.len();
    let mut out = [0.0; 21];
    out[0] = areas.iter().filter(|&&a| a * 100 >= total).count() as f64;

    let mut order: Vec<usize> = (0..areas.len()).collect();
    // stable: equal areas keep scan order
    order.sort_by_key(|&i| Reverse(areas[i]));
    let top = &order[..order.len().min(TOP_REGIONS)];

    // per region: cos/sin hue sums, S sum, V sum
    let mut acc = vec![[0.0f64; 4]; areas.len()];
    for (&c, hsv) in comp.data.iter().zip(&p.hsv.data) {
        let a = &mut acc[c as usize];
        let h = hsv[0].to_radians();
        a[0] += h.cos();
        a[1] += h.sin();
        a[2] += hsv[1];
        a[3] += hsv[2];
    }
    for (rank, &id) in top.iter().enumerate() {
        let n = areas[id] as f64;
        let a = acc[id];
        out[1 + 3 * rank] = circular_mean_deg(a[0], a[1]);
        out[2 + 3 * rank] = a[2] / n;
        out[3 + 3 * rank] = a[3] / n;
        out[16 + rank] = n / total as f64;
    }
    out
}

/// Sobel gradient magnitude of several channels combined in quadrature.
pub fn color_gradient(channels: &[Plane<f64>]) -> Plane<f64> {
    let (w, h) = (channels[0].width, channels[0].height);
    Plane::from_fn(w, h, |x, y| {
        let (x, y) = (x as isize, y as isize);
        channels
            .iter()
            .map(|c| {
                let g = |dx: isize, dy: isize| c.get_clamped(x + dx, y + dy);
                // paired differences so flat areas give exactly zero
                let gx = (g(1, -1) - g(-1, -1)) + 2.0 * (g(1, 0) - g(-1, 0)) + (g(1, 1) - g(-1, 1));
                let gy = (g(-1, 1) - g(-1, -1)) + 2.0 * (g(0, 1) - g(0, -1)) + (g(1, 1) - g(1, -1));
                gx * gx + gy * gy
            })
            .sum::<f64>()
            .sqrt()
    })
}

pub const GRADIENT_LEVELS: u16 = 256;

/// Rescales to integer levels `0..GRADIENT_LEVELS` relative to the maximum.
pub fn quantize_gradient(g: &Plane<f64>) -> Plane<u16> {
    let max = g.data.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return g.map(|_| 0);
    }
    let top = f64::from(GRADIENT_LEVELS - 1);
    g.map(|v| (v / max * top).floor().min(top) as u16)
}

/// Marker watershed by priority flooding from the regional minima. Every
/// pixel receives a basin id (no watershed lines); ids start at 0.
pub fn watershed(q: &Plane<u16>) -> (Plane<u32>, usize) {
    let (w, h) = (q.width, q.height);
    let (plateaus, n_plateaus) = connected_components(q);
    let mut is_min = vec![true; n_plateaus.len()];
    for y in 0..h {
        for x in 0..w {
            let v = q.get(x, y);
            for (nx, ny) in neighbors4(x, y, w, h) {
                if q.get(nx, ny) < v {
                    is_min[plateaus.get(x, y) as usize] = false;
                }
            }
        }
    }
    let mut marker_id = vec![u32::MAX; n_plateaus.len()];
    let mut next = 0u32;
    let mut labels = Plane::filled(w, h, u32::MAX);
    for i in 0..w * h {
        let p = plateaus.data[i] as usize;
        if is_min[p] {
            if marker_id[p] == u32::MAX {
                marker_id[p] = next;
                next += 1;
            }
            labels.data[i] = marker_id[p];
        }
    }

    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let mut queued = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            if labels.get(x, y) == u32::MAX {
                continue;
            }
            for (nx, ny) in neighbors4(x, y, w, h) {
                let j = ny * w + nx;
                if labels.data[j] == u32::MAX && !queued[j] {
                    queued[j] = true;
                    heap.push(Reverse((q.data[j], seq, j, labels.get(x, y))));
                    seq += 1;
                }
            }
        }
    }
    while let Some(Reverse((_, _, j, label))) = heap.pop() {
        labels.data[j] = label;
        let (x, y) = (j % w, j / w);
        for (nx, ny) in neighbors4(x, y, w, h) {
            let k = ny * w + nx;
            if labels.data[k] == u32::MAX && !queued[k] {
                queued[k] = true;
                heap.push(Reverse((q.data[k], seq, k, label)));
                seq += 1;
            }
        }
    }
    (labels, next as usize)
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Lowest pass value (max of the two gradient levels) along the border of
/// each adjacent basin pair, sorted by pair.
pub fn boundary_saliency(labels: &Plane<u32>, q: &Plane<u16>) -> Vec<((u32, u32), u16)> {
    let mut edges = std::collections::BTreeMap::new();
    let (w, h) = (labels.width, labels.height);
    for y in 0..h {
        for x in 0..w {
            let a = labels.get(x, y);
            for (nx, ny) in [(x + 1, y), (x, y + 1)] {
                if nx >= w || ny >= h {
                    continue;
                }
                let b = labels.get(nx, ny);
                if a == b {
                    continue;
                }
                let pass = q.get(x, y).max(q.get(nx, ny));
                let e = edges.entry((a.min(b), a.max(b))).or_insert(pass);
                *e = (*e).min(pass);
            }
        }
    }
    edges.into_iter().collect()
}

/// One waterfall level: basins whose shared boundary saliency is strictly
/// below the median saliency are merged. Returns segment ids starting at 1.
pub fn waterfall(q: &Plane<u16>) -> Plane<u32> {
    let (basins, n) = watershed(q);
    let edges = boundary_saliency(&basins, q);
    let mut parent: Vec<usize> = (0..n).collect();
    if !edges.is_empty() {
        let mut s: Vec<f64> = edges.iter().map(|e| f64::from(e.1)).collect();
        s.sort_by(f64::total_cmp);
        let m = s.len();
        let median = if m % 2 == 1 {
            s[m / 2]
        } else {
            (s[m / 2 - 1] + s[m / 2]) / 2.0
        };
        for &((a, b), sal) in &edges {
            if f64::from(sal) < median {
                let (ra, rb) = (find(&mut parent, a as usize), find(&mut parent, b as usize));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut remap = vec![0u32; n];
    let mut next = 0;
    let mut out = basins.clone();
    for v in out.data.iter_mut() {
        let r = find(&mut parent, *v as usize);
        if remap[r] == 0 {
            next += 1;
            remap[r] = next;
        }
        *v = remap[r];
    }
    out
}

/// Gradient input for the waterfall: V, S and the hue vector scaled by S.
pub fn segmentation_gradient(hsv: &Plane<[f64; 3]>) -> Plane<u16> {
    let v = hsv.map(|p| p[2]);
    let s = hsv.map(|p| p[1]);
    let hc = hsv.map(|p| p[1] * p[0].to_radians().cos());
    let hs = hsv.map(|p| p[1] * p[0].to_radians().sin());
    quantize_gradient(&color_gradient(&[v, s, hc, hs]))
}

/// f90: number of waterfall segments.
pub fn level_of_detail(p: &PreprocessedImage) -> f64 {
    let mut ids: Vec<u32> = p.waterfall_segments.data.clone();
    ids.sort_unstable();
    ids.dedup();
    ids.len() as f64
}
