//! Boolean site masks on a box, padded by one closed layer so that neighbor
//! steps are plain index offsets.

use std::collections::VecDeque;

use crate::field::FieldSample;
use crate::lattice::{BoxRegion, Site};

pub const UNREACHED: u32 = u32::MAX;

#[derive(Clone, Debug)]
pub struct OpenGrid {
    window: BoxRegion,
    shape: Vec<usize>,
    strides: Vec<usize>,
    offsets: Vec<isize>,
    open: Vec<bool>,
}

impl OpenGrid {
    fn closed(window: &BoxRegion) -> Self {
        let d = window.dim();
        let shape: Vec<usize> = (0..d).map(|i| window.side(i) + 2).collect();
        let mut strides = vec![1usize; d];
        for i in (0..d - 1).rev() {
            strides[i] = strides[i + 1] * shape[i + 1];
        }
        let offsets = strides.iter().flat_map(|&s| [s as isize, -(s as isize)]).collect();
        let len = shape.iter().product();
        OpenGrid {
            window: window.clone(),
            shape,
            strides,
            offsets,
            open: vec![false; len],
        }
    }

    /// Open sites are those of `window` where `f` holds.
    pub fn from_fn(window: &BoxRegion, f: impl Fn(&Site) -> bool) -> Self {
        let mut g = Self::closed(window);
        for x in window.iter() {
            let i = g.index(&x).unwrap();
            g.open[i] = f(&x);
        }
        g
    }

    /// `{field >= h} ∩ window`; window sites outside the field's domain are
    /// closed.
    pub fn level_set(field: &FieldSample, h: f64, window: &BoxRegion) -> Self {
        let mut g = Self::closed(window);
        let Some(fb) = field.region() else {
            for x in window.iter() {
                let i = g.index(&x).unwrap();
                g.open[i] = field.get(&x).is_some_and(|v| v >= h);
            }
            return g;
        };
        if fb == window {
            let idx: Vec<usize> = g.interior().collect();
            for (i, v) in idx.into_iter().zip(&field.values) {
                g.open[i] = *v >= h;
            }
            return g;
        }
        let d = window.dim();
        let last = d - 1;
        let row_len = window.side(last);
        let rows = window.len() / row_len;
        let lo = window.lower().coords();
        let mut c: Vec<i64> = lo.to_vec();
        for r in 0..rows {
            let mut rem = r;
            for i in (0..last).rev() {
                let s = window.side(i);
                c[i] = lo[i] + (rem % s) as i64;
                rem /= s;
            }
            c[last] = lo[last];
            let start = g.index(&Site::new(c.iter().copied())).unwrap();
            let fl = fb.lower().coords();
            let fu = fb.upper().coords();
            if (0..last).any(|i| c[i] < fl[i] || c[i] > fu[i]) {
                continue;
            }
            for t in 0..row_len {
                let y = lo[last] + t as i64;
                if y < fl[last] || y > fu[last] {
                    continue;
                }
                c[last] = y;
                let fi = fb.index_of(&Site::new(c.iter().copied()));
                if let Some(fi) = fi {
                    g.open[start + t] = field.values[fi] >= h;
                }
            }
        }
        g
    }

    pub fn window(&self) -> &BoxRegion {
        &self.window
    }

    pub fn dim(&self) -> usize {
        self.window.dim()
    }

    pub fn padded_len(&self) -> usize {
        self.open.len()
    }

    pub fn offsets(&self) -> &[isize] {
        &self.offsets
    }

    pub fn index(&self, x: &Site) -> Option<usize> {
        if !self.window.contains(x) {
            return None;
        }
        let lo = self.window.lower().coords();
        Some(
            (0..self.dim())
                .map(|i| (x.coords()[i] - lo[i] + 1) as usize * self.strides[i])
                .sum(),
        )
    }

    pub fn site(&self, mut idx: usize) -> Site {
        let lo = self.window.lower().coords();
        let mut c = vec![0i64; self.dim()];
        for i in 0..self.dim() {
            c[i] = lo[i] + (idx / self.strides[i]) as i64 - 1;
            idx %= self.strides[i];
        }
        Site::new(c)
    }

    /// Per-axis coordinate of a padded index, relative to the window's
    /// lower corner.
    pub fn rel_coord(&self, idx: usize, axis: usize) -> i64 {
        ((idx / self.strides[axis]) % self.shape[axis]) as i64 - 1
    }

    pub fn is_open(&self, idx: usize) -> bool {
        self.open[idx]
    }

    pub fn is_open_site(&self, x: &Site) -> bool {
        self.index(x).is_some_and(|i| self.open[i])
    }

    pub fn set_open(&mut self, idx: usize, v: bool) {
        self.open[idx] = v;
    }

    pub fn open_mask(&self) -> &[bool] {
        &self.open
    }

    /// Padded indices of the window's sites, in row-major order.
    pub fn interior(&self) -> impl Iterator<Item = usize> + '_ {
        let d = self.dim();
        let row_len = self.window.side(d - 1);
        let rows = self.window.len() / row_len;
        (0..rows).flat_map(move |r| {
            let mut rem = r;
            let mut start = self.strides[d - 1];
            for i in (0..d - 1).rev() {
                let s = self.window.side(i);
                start += (rem % s + 1) * self.strides[i];
                rem /= s;
            }
            start..start + row_len
        })
    }

    /// Breadth-first distances from `sources` through open sites, stopping
    /// beyond `max_depth`. Unreached sites hold [`UNREACHED`].
    pub fn bfs(&self, sources: &[usize], max_depth: u32, dist: &mut Vec<u32>) {
        dist.clear();
        dist.resize(self.open.len(), UNREACHED);
        let mut frontier: Vec<usize> = Vec::new();
        for &s in sources {
            if self.open[s] && dist[s] == UNREACHED {
                dist[s] = 0;
                frontier.push(s);
            }
        }
        let mut next = Vec::new();
        let mut depth = 0;
        while !frontier.is_empty() && depth < max_depth {
            depth += 1;
            for &v in &frontier {
                for &o in &self.offsets {
                    let w = (v as isize + o) as usize;
                    if self.open[w] && dist[w] == UNREACHED {
                        dist[w] = depth;
                        next.push(w);
                    }
                }
            }
            std::mem::swap(&mut frontier, &mut next);
            next.clear();
        }
    }

    /// Shortest open path length between two padded indices.
    pub fn distance(&self, a: usize, b: usize) -> Option<u32> {
        if !self.open[a] || !self.open[b] {
            return None;
        }
        if a == b {
            return Some(0);
        }
        bidirectional(self, a, b)
    }

    /// Single-source BFS returning the distance to `b` (reference path for
    /// the bidirectional search).
    pub fn distance_unidirectional(&self, a: usize, b: usize) -> Option<u32> {
        if !self.open[a] || !self.open[b] {
            return None;
        }
        let mut dist = vec![UNREACHED; self.open.len()];
        let mut q = VecDeque::new();
        dist[a] = 0;
        q.push_back(a);
        while let Some(v) = q.pop_front() {
            if v == b {
                return Some(dist[v]);
            }
            for &o in &self.offsets {
                let w = (v as isize + o) as usize;
                if self.open[w] && dist[w] == UNREACHED {
                    dist[w] = dist[v] + 1;
                    q.push_back(w);
                }
            }
        }
        None
    }
}

fn bidirectional(g: &OpenGrid, a: usize, b: usize) -> Option<u32> {
    let n = g.padded_len();
    let mut dist = [vec![UNREACHED; n], vec![UNREACHED; n]];
    let mut front = [vec![a], vec![b]];
    let mut depth = [0u32, 0u32];
    dist[0][a] = 0;
    dist[1][b] = 0;
    let mut next = Vec::new();
    loop {
        if front[0].is_empty() || front[1].is_empty() {
            return None;
        }
        let side = if front[0].len() <= front[1].len() { 0 } else { 1 };
        let other = 1 - side;
        depth[side] += 1;
        let mut best = UNREACHED;
        for &v in &front[side] {
            for &o in g.offsets() {
                let w = (v as isize + o) as usize;
                if !g.open[w] {
                    continue;
                }
                if dist[other][w] != UNREACHED {
                    best = best.min(depth[side] + dist[other][w]);
                }
                if dist[side][w] == UNREACHED {
                    dist[side][w] = depth[side];
                    next.push(w);
                }
            }
        }
        if best != UNREACHED {
            return Some(best);
        }
        std::mem::swap(&mut front[side], &mut next);
        next.clear();
    }
}

/// Result of a thresholded eccentricity search over a set of sites.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpreadBound {
    /// Some pair is disconnected.
    Disconnected,
    /// A pair at distance `lower > threshold` was found.
    Exceeds { lower: u32 },
    /// Every pair is within `upper <= threshold`.
    Within { upper: u32 },
}

/// Decides whether all pairs of `targets` are joined by open paths of
/// length at most `threshold`. With `threshold == u32::MAX` the search runs
/// to the end and `Within::upper` is the exact maximum. Also returns the
/// number of searches performed.
///
/// Uses the iFUB bound: with a hub `u`, any pair whose members are both
/// within `r` of `u` is within `2r`; targets are scanned in decreasing
/// distance from `u` until this bound settles the question.
pub fn max_pair_distance(g: &OpenGrid, targets: &[usize], threshold: u32) -> (SpreadBound, u32) {
    let mut bfs_count = 0;
    if targets.len() <= 1 {
        return (SpreadBound::Within { upper: 0 }, 0);
    }
    let mut dist = Vec::new();
    // double sweep for a central hub
    g.bfs(&[targets[0]], u32::MAX, &mut dist);
    bfs_count += 1;
    if targets.iter().any(|&t| dist[t] == UNREACHED) {
        return (SpreadBound::Disconnected, bfs_count);
    }
    let far = *targets.iter().max_by_key(|&&t| dist[t]).unwrap();
    let mut lower = dist[far];
    if lower > threshold {
        return (SpreadBound::Exceeds { lower }, bfs_count);
    }
    g.bfs(&[far], u32::MAX, &mut dist);
    bfs_count += 1;
    let far2 = *targets.iter().max_by_key(|&&t| dist[t]).unwrap();
    lower = lower.max(dist[far2]);
    if lower > threshold {
        return (SpreadBound::Exceeds { lower }, bfs_count);
    }
    // hub: approximate center, the minimizer of the largest distance to the
    // sweep sources so far; each new source is the target farthest from it
    let mut cover = dist.clone();
    let mut total: Vec<u64> = dist.iter().map(|&x| x as u64).collect();
    let mut sweep = Vec::new();
    g.bfs(&[far2], u32::MAX, &mut sweep);
    bfs_count += 1;
    let absorb = |cover: &mut Vec<u32>, total: &mut Vec<u64>, sweep: &[u32]| {
        for ((c, t), &f) in cover.iter_mut().zip(total.iter_mut()).zip(sweep) {
            *c = (*c).max(f);
            *t += f as u64;
        }
    };
    absorb(&mut cover, &mut total, &sweep);
    let mut hub = far2;
    let mut best_ecc = u32::MAX;
    for _ in 0..4 * g.dim() {
        // ties broken by total distance, which favors central sites
        let cand = (0..cover.len())
            .filter(|&v| g.open[v] && cover[v] != UNREACHED)
            .min_by_key(|&v| (cover[v], total[v]))
            .unwrap();
        g.bfs(&[cand], u32::MAX, &mut dist);
        bfs_count += 1;
        let (ecc, next) = targets.iter().map(|&t| (dist[t], t)).max().unwrap();
        lower = lower.max(ecc);
        if lower > threshold {
            return (SpreadBound::Exceeds { lower }, bfs_count);
        }
        if ecc < best_ecc {
            best_ecc = ecc;
            hub = cand;
        }
        if 2 * best_ecc as u64 <= lower as u64 + 1 {
            break;
        }
        g.bfs(&[next], u32::MAX, &mut sweep);
        bfs_count += 1;
        absorb(&mut cover, &mut total, &sweep);
        let e2 = targets.iter().map(|&t| sweep[t]).max().unwrap();
        lower = lower.max(e2);
        if lower > threshold {
            return (SpreadBound::Exceeds { lower }, bfs_count);
        }
    }
    g.bfs(&[hub], u32::MAX, &mut dist);
    bfs_count += 1;
    let mut order: Vec<(u32, usize)> = targets.iter().map(|&t| (dist[t], t)).collect();
    order.sort_unstable_by(|a, b| b.cmp(a));
    let ecc_hub = order[0].0;
    lower = lower.max(ecc_hub);
    let exact = threshold == u32::MAX;
    let mut tdist = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let level = order[i].0;
        // unprocessed targets all lie within `level` of the hub
        if lower as u64 >= 2 * level as u64 {
            return (SpreadBound::Within { upper: lower }, bfs_count);
        }
        if !exact && 2 * level as u64 <= threshold as u64 {
            return (SpreadBound::Within { upper: 2 * level }, bfs_count);
        }
        while i < order.len() && order[i].0 == level {
            g.bfs(&[order[i].1], u32::MAX, &mut tdist);
            bfs_count += 1;
            let ecc = targets.iter().map(|&t| tdist[t]).max().unwrap();
            lower = lower.max(ecc);
            if lower > threshold {
                return (SpreadBound::Exceeds { lower }, bfs_count);
            }
            i += 1;
        }
    }
    (SpreadBound::Within { upper: lower }, bfs_count)
}
