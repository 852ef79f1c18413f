#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};

use gffperc::{BoxRegion, Site};
use nalgebra::DMatrix;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Running first and second moments of a vector stream.
pub struct Moments {
    pub n: usize,
    sum: Vec<f64>,
    cross: DMatrix<f64>,
}

impl Moments {
    pub fn new(p: usize) -> Self {
        Moments {
            n: 0,
            sum: vec![0.0; p],
            cross: DMatrix::zeros(p, p),
        }
    }

    pub fn push(&mut self, x: &[f64]) {
        self.n += 1;
        for (s, v) in self.sum.iter_mut().zip(x) {
            *s += v;
        }
        for (i, xi) in x.iter().enumerate() {
            for (j, xj) in x.iter().enumerate().skip(i) {
                self.cross[(i, j)] += xi * xj;
            }
        }
    }

    /// Unbiased covariance.
    pub fn covariance(&self) -> DMatrix<f64> {
        let p = self.sum.len();
        let n = self.n as f64;
        let mut c = DMatrix::zeros(p, p);
        for i in 0..p {
            for j in i..p {
                let v = (self.cross[(i, j)] - self.sum[i] * self.sum[j] / n) / (n - 1.0);
                c[(i, j)] = v;
                c[(j, i)] = v;
            }
        }
        c
    }
}

/// Sample covariance of a few fixed coordinates against all others, without
/// the full `p × p` accumulator.
pub struct RowMoments {
    pub n: usize,
    rows: Vec<usize>,
    sum: Vec<f64>,
    sq: Vec<f64>,
    cross: Vec<Vec<f64>>,
}

impl RowMoments {
    pub fn new(p: usize, rows: Vec<usize>) -> Self {
        let k = rows.len();
        RowMoments {
            n: 0,
            rows,
            sum: vec![0.0; p],
            sq: vec![0.0; p],
            cross: vec![vec![0.0; p]; k],
        }
    }

    pub fn push(&mut self, x: &[f64]) {
        self.n += 1;
        for (i, v) in x.iter().enumerate() {
            self.sum[i] += v;
            self.sq[i] += v * v;
        }
        for (r, &i) in self.rows.iter().enumerate() {
            let xi = x[i];
            for (c, v) in self.cross[r].iter_mut().zip(x) {
                *c += xi * v;
            }
        }
    }

    pub fn var(&self, i: usize) -> f64 {
        let n = self.n as f64;
        (self.sq[i] - self.sum[i] * self.sum[i] / n) / (n - 1.0)
    }

    /// `cov(x_{rows[r]}, x_j)`.
    pub fn cov(&self, r: usize, j: usize) -> f64 {
        let n = self.n as f64;
        let i = self.rows[r];
        (self.cross[r][j] - self.sum[i] * self.sum[j] / n) / (n - 1.0)
    }
}

/// Standard error of a Gaussian sample covariance with true entries
/// `σ_xx, σ_yy, σ_xy`.
pub fn cov_se(sxx: f64, syy: f64, sxy: f64, n: usize) -> f64 {
    ((sxx * syy + sxy * sxy) / n as f64).sqrt()
}

/// Largest `|empirical - truth| / se` over all entries `i <= j`.
pub fn max_entry_z(emp: &DMatrix<f64>, truth: &DMatrix<f64>, n: usize) -> (f64, usize) {
    let p = emp.nrows();
    let mut worst = 0.0f64;
    let mut over = 0;
    for i in 0..p {
        for j in i..p {
            let se = cov_se(truth[(i, i)], truth[(j, j)], truth[(i, j)], n);
            let z = (emp[(i, j)] - truth[(i, j)]).abs() / se;
            if z > 4.0 {
                over += 1;
            }
            worst = worst.max(z);
        }
    }
    (worst, over)
}

fn log_det(m: &DMatrix<f64>) -> f64 {
    let c = nalgebra::Cholesky::new(m.clone()).expect("covariance is positive definite");
    2.0 * c.l().diagonal().iter().map(|x| x.ln()).sum::<f64>()
}

/// Box's M test of equal covariance matrices for two Gaussian samples;
/// returns `(statistic, df, p-value)`.
pub fn box_m_test(s1: &DMatrix<f64>, n1: usize, s2: &DMatrix<f64>, n2: usize) -> (f64, f64, f64) {
    let p = s1.nrows() as f64;
    let (a, b) = ((n1 - 1) as f64, (n2 - 1) as f64);
    let pooled = (s1 * a + s2 * b) / (a + b);
    let m = (a + b) * log_det(&pooled) - a * log_det(s1) - b * log_det(s2);
    let c = (1.0 / a + 1.0 / b - 1.0 / (a + b)) * (2.0 * p * p + 3.0 * p - 1.0) / (6.0 * (p + 1.0));
    let stat = m * (1.0 - c);
    let df = p * (p + 1.0) / 2.0;
    let pval = 1.0 - ChiSquared::new(df).unwrap().cdf(stat);
    (stat, df, pval)
}

/// `g_{B_M}(0, 0)` in `d = 3` by conjugate gradients on `(I - P) u = δ_0`,
/// written against a plain cube array.
pub fn box_green_cg(m: usize) -> f64 {
    let s = 2 * m + 1;
    let idx = |x: usize, y: usize, z: usize| (x * s + y) * s + z;
    let apply = |u: &[f64], out: &mut [f64]| {
        for x in 0..s {
            for y in 0..s {
                for z in 0..s {
                    let mut nb = 0.0;
                    if x > 0 {
                        nb += u[idx(x - 1, y, z)];
                    }
                    if x + 1 < s {
                        nb += u[idx(x + 1, y, z)];
                    }
                    if y > 0 {
                        nb += u[idx(x, y - 1, z)];
                    }
                    if y + 1 < s {
                        nb += u[idx(x, y + 1, z)];
                    }
                    if z > 0 {
                        nb += u[idx(x, y, z - 1)];
                    }
                    if z + 1 < s {
                        nb += u[idx(x, y, z + 1)];
                    }
                    out[idx(x, y, z)] = u[idx(x, y, z)] - nb / 6.0;
                }
            }
        }
    };
    let n = s * s * s;
    let mut u = vec![0.0; n];
    let mut r = vec![0.0; n];
    r[idx(m, m, m)] = 1.0;
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr: f64 = 1.0;
    for _ in 0..100 * s {
        apply(&p, &mut ap);
        let alpha = rr / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
        for i in 0..n {
            u[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr2: f64 = r.iter().map(|x| x * x).sum();
        if rr2.sqrt() < 1e-14 {
            break;
        }
        let beta = rr2 / rr;
        rr = rr2;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    u[idx(m, m, m)]
}

/// Two Richardson steps on `g_{B_M}`, `g_{B_{2M}}`, `g_{B_{4M}}` assuming
/// an expansion in powers of `1/M`.
pub fn richardson2(g: [f64; 3]) -> f64 {
    let r1a = 2.0 * g[1] - g[0];
    let r1b = 2.0 * g[2] - g[1];
    (4.0 * r1b - r1a) / 3.0
}

/// Unit-weight shortest path on the explicit graph of open sites.
pub fn oracle_distance(open: &dyn Fn(&Site) -> bool, window: &BoxRegion, a: &Site, b: &Site) -> Option<u32> {
    let sites: Vec<Site> = window.iter().filter(|x| open(x)).collect();
    let mut adj: HashMap<Site, Vec<Site>> = HashMap::new();
    for x in &sites {
        let nb = x.neighbors().filter(|y| window.contains(y) && open(y)).collect();
        adj.insert(x.clone(), nb);
    }
    if !adj.contains_key(a) || !adj.contains_key(b) {
        return None;
    }
    let mut dist: HashMap<Site, u32> = HashMap::from([(a.clone(), 0)]);
    let mut q = VecDeque::from([a.clone()]);
    while let Some(x) = q.pop_front() {
        let dx = dist[&x];
        if &x == b {
            return Some(dx);
        }
        for y in &adj[&x] {
            if !dist.contains_key(y) {
                dist.insert(y.clone(), dx + 1);
                q.push_back(y.clone());
            }
        }
    }
    None
}
