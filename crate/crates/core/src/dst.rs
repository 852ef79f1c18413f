//! Orthonormal type-I discrete sine transform on row-major arrays.
//!
//! The DST-I diagonalizes the Dirichlet Laplacian of a path, so tensor
//! products of it diagonalize `2d I - A` on a box. It is its own inverse in
//! the orthonormal normalization used here.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::ops::Range;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// One-dimensional orthonormal DST-I of length `m`.
#[derive(Clone)]
pub struct Dst1 {
    m: usize,
    fft: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl Dst1 {
    pub fn new(planner: &mut FftPlanner<f64>, m: usize) -> Self {
        assert!(m >= 1);
        Dst1 {
            m,
            fft: planner.plan_fft_forward(2 * (m + 1)),
            scale: (2.0 / (m + 1) as f64).sqrt(),
        }
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Transforms two lines at once: the odd extensions of `a` and `b` are
    /// packed as real and imaginary parts of one complex FFT.
    pub fn apply_pair(&self, a: &mut [f64], b: &mut [f64], buf: &mut Vec<Complex<f64>>) {
        let m = self.m;
        let n = 2 * (m + 1);
        buf.clear();
        buf.resize(n, Complex::new(0.0, 0.0));
        for j in 0..m {
            buf[j + 1] = Complex::new(a[j], b[j]);
            buf[n - 1 - j] = Complex::new(-a[j], -b[j]);
        }
        self.fft.process(buf);
        // FFT of an odd real sequence x is -2i S(x)
        let s = 0.5 * self.scale;
        for k in 0..m {
            let y = buf[k + 1];
            a[k] = -y.im * s;
            b[k] = y.re * s;
        }
    }

    pub fn apply(&self, a: &mut [f64], buf: &mut Vec<Complex<f64>>) {
        let mut scratch = vec![0.0; self.m];
        self.apply_pair(a, &mut scratch, buf);
    }
}

/// Plans keyed by length, shared by all axes of equal size.
pub struct DstPlanner {
    fft: FftPlanner<f64>,
    plans: HashMap<usize, Dst1>,
}

impl Default for DstPlanner {
    fn default() -> Self {
        DstPlanner {
            fft: FftPlanner::new(),
            plans: HashMap::new(),
        }
    }
}

impl DstPlanner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn plan(&mut self, m: usize) -> Dst1 {
        let fft = &mut self.fft;
        self.plans.entry(m).or_insert_with(|| Dst1::new(fft, m)).clone()
    }

    pub fn plans_for(&mut self, shape: &[usize]) -> Vec<Dst1> {
        shape.iter().map(|&m| self.plan(m)).collect()
    }
}

/// Eigenvalues `2(1 - cos(π k/(m+1)))`, `k = 1..=m`, of the path Laplacian.
pub fn path_eigenvalues(m: usize) -> Vec<f64> {
    (1..=m)
        .map(|k| 2.0 * (1.0 - (PI * k as f64 / (m + 1) as f64).cos()))
        .collect()
}

/// DST-I along `axis` of a row-major array of shape `shape`, keeping only
/// output indices in `keep` along that axis. Returns the new array; its
/// shape is `shape` with `shape[axis]` replaced by `keep.len()`.
pub fn transform_axis(data: &[f64], shape: &[usize], axis: usize, keep: Range<usize>, plan: &Dst1) -> Vec<f64> {
    let m = shape[axis];
    assert_eq!(plan.len(), m);
    assert!(keep.end <= m && keep.start < keep.end);
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let kept = keep.len();
    let mut out = vec![0.0; outer * kept * inner];
    let mut a = vec![0.0; m];
    let mut b = vec![0.0; m];
    let mut buf = Vec::with_capacity(2 * (m + 1));
    let lines: Vec<(usize, usize)> = (0..outer).flat_map(|o| (0..inner).map(move |i| (o, i))).collect();
    for pair in lines.chunks(2) {
        let (o0, i0) = pair[0];
        for j in 0..m {
            a[j] = data[(o0 * m + j) * inner + i0];
        }
        if let Some(&(o1, i1)) = pair.get(1) {
            for j in 0..m {
                b[j] = data[(o1 * m + j) * inner + i1];
            }
        } else {
            b.iter_mut().for_each(|v| *v = 0.0);
        }
        plan.apply_pair(&mut a, &mut b, &mut buf);
        for (t, k) in keep.clone().enumerate() {
            out[(o0 * kept + t) * inner + i0] = a[k];
        }
        if let Some(&(o1, i1)) = pair.get(1) {
            for (t, k) in keep.clone().enumerate() {
                out[(o1 * kept + t) * inner + i1] = b[k];
            }
        }
    }
    out
}

/// Full separable DST-I over every axis, restricted on output to `keep`;
/// `plans[i]` must have length `shape[i]`.
pub fn transform(data: Vec<f64>, shape: &[usize], keep: &[Range<usize>], plans: &[Dst1]) -> Vec<f64> {
    let mut cur = data;
    let mut cur_shape = shape.to_vec();
    for axis in 0..shape.len() {
        cur = transform_axis(&cur, &cur_shape, axis, keep[axis].clone(), &plans[axis]);
        cur_shape[axis] = keep[axis].len();
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(x: &[f64]) -> Vec<f64> {
        let m = x.len();
        let s = (2.0 / (m + 1) as f64).sqrt();
        (1..=m)
            .map(|k| {
                s * (1..=m)
                    .map(|j| x[j - 1] * (PI * (j * k) as f64 / (m + 1) as f64).sin())
                    .sum::<f64>()
            })
            .collect()
    }

    #[test]
    fn matches_naive_sum_and_is_involutive() {
        let mut p = DstPlanner::new();
        for m in [1usize, 2, 5, 16, 33] {
            let x: Vec<f64> = (0..m).map(|i| ((i * 37 + 11) % 17) as f64 - 8.0).collect();
            let plan = p.plan(m);
            let mut a = x.clone();
            let mut buf = Vec::new();
            plan.apply(&mut a, &mut buf);
            for (u, v) in a.iter().zip(naive(&x)) {
                assert!((u - v).abs() < 1e-12);
            }
            plan.apply(&mut a, &mut buf);
            for (u, v) in a.iter().zip(&x) {
                assert!((u - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn restricted_transform_equals_slice_of_full() {
        let shape = [4usize, 5, 3];
        let n: usize = shape.iter().product();
        let x: Vec<f64> = (0..n).map(|i| ((i * 13) % 7) as f64).collect();
        let plans = DstPlanner::new().plans_for(&shape);
        let full = transform(x.clone(), &shape, &[0..4, 0..5, 0..3], &plans);
        let part = transform(x, &shape, &[1..3, 2..5, 0..2], &plans);
        let mut t = 0;
        for i in 1..3 {
            for j in 2..5 {
                for k in 0..2 {
                    assert!((part[t] - full[(i * 5 + j) * 3 + k]).abs() < 1e-12);
                    t += 1;
                }
            }
        }
    }
}
