//! Independent reference implementations used as test oracles. Each one is
//! written the slow, obvious way and shares no code with the library beyond
//! the image container.

#![allow(dead_code)]

use centrog::GrayImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize, max: u8) -> GrayImage {
    let px = (0..w * h).map(|_| rng.random_range(0..=max)).collect();
    GrayImage::new(w, h, px).unwrap()
}

/// Census codes built as a bit string, neighbours in reading order.
pub fn census_codes(img: &GrayImage) -> Vec<u8> {
    let mut out = Vec::new();
    for y in 1..img.height() - 1 {
        for x in 1..img.width() - 1 {
            let centre = img.get(x, y);
            let mut bits = String::new();
            for ny in y - 1..=y + 1 {
                for nx in x - 1..=x + 1 {
                    if (nx, ny) == (x, y) {
                        continue;
                    }
                    bits.push(if centre >= img.get(nx, ny) { '1' } else { '0' });
                }
            }
            out.push(u8::from_str_radix(&bits, 2).unwrap());
        }
    }
    out
}

/// Plain HOG: every (cell, bin) accumulates every gradient pixel weighted by
/// triangular kernels in x, y and circular orientation distance.
pub struct RefHog {
    pub cell: usize,
    pub block: usize,
    pub stride: usize,
    pub bins: usize,
    pub signed: bool,
    pub eps: f64,
}

impl Default for RefHog {
    fn default() -> Self {
        RefHog {
            cell: 8,
            block: 2,
            stride: 1,
            bins: 9,
            signed: false,
            eps: 1e-5,
        }
    }
}

impl RefHog {
    pub fn cells(&self, img: &GrayImage) -> (usize, usize, Vec<f64>) {
        let (w, h) = (img.width(), img.height());
        let (ncx, ncy) = (w / self.cell, h / self.cell);
        let range = if self.signed { 360.0 } else { 180.0 };
        let bw = range / self.bins as f64;
        let cs = self.cell as f64;
        let mut votes = Vec::new();
        for y in 1..h - 1 {
            for x in 1..w - 1 {
                let gx = img.get(x + 1, y) as f64 - img.get(x - 1, y) as f64;
                let gy = img.get(x, y + 1) as f64 - img.get(x, y - 1) as f64;
                let mag = (gx * gx + gy * gy).sqrt();
                if mag == 0.0 {
                    continue;
                }
                let mut a = gy.atan2(gx).to_degrees();
                while a < 0.0 {
                    a += range;
                }
                while a >= range {
                    a -= range;
                }
                votes.push((x as f64 + 0.5, y as f64 + 0.5, mag, a));
            }
        }
        let mut hist = vec![0.0; ncx * ncy * self.bins];
        for cy in 0..ncy {
            for cx in 0..ncx {
                let (ccx, ccy) = ((cx as f64 + 0.5) * cs, (cy as f64 + 0.5) * cs);
                for k in 0..self.bins {
                    let centre = k as f64 * bw;
                    let mut acc = 0.0;
                    for &(px, py, mag, a) in &votes {
                        let wx = (1.0 - (px - ccx).abs() / cs).max(0.0);
                        let wy = (1.0 - (py - ccy).abs() / cs).max(0.0);
                        let d = (a - centre).abs();
                        let d = d.min(range - d);
                        let wo = (1.0 - d / bw).max(0.0);
                        acc += mag * wx * wy * wo;
                    }
                    hist[(cy * ncx + cx) * self.bins + k] = acc;
                }
            }
        }
        (ncx, ncy, hist)
    }

    pub fn descriptor(&self, img: &GrayImage) -> Vec<f64> {
        let (ncx, ncy, hist) = self.cells(img);
        let mut out = Vec::new();
        let mut by = 0;
        while by + self.block <= ncy {
            let mut bx = 0;
            while bx + self.block <= ncx {
                let mut v = Vec::new();
                for cy in by..by + self.block {
                    for cx in bx..bx + self.block {
                        let i = (cy * ncx + cx) * self.bins;
                        v.extend_from_slice(&hist[i..i + self.bins]);
                    }
                }
                let norm = (v.iter().map(|a| a * a).sum::<f64>() + self.eps * self.eps).sqrt();
                out.extend(v.iter().map(|a| a / norm));
                bx += self.stride;
            }
            by += self.stride;
        }
        out
    }
}

/// Fraction of (positive, negative) pairs ranked correctly, ties counting
/// one half.
pub fn mann_whitney(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if !labels[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// Optimal value of the linear soft-margin SVM, found by minimising the
/// dual `0.5 a'Qa - sum(a)` over `{0 <= a <= C, y'a = 0}` with accelerated
/// projected gradient. Returns `(primal optimum, alpha)`.
pub fn dual_qp(x: &[Vec<f64>], y: &[f64], c: f64) -> (f64, Vec<f64>) {
    let n = x.len();
    let q: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| y[i] * y[j] * x[i].iter().zip(&x[j]).map(|(a, b)| a * b).sum::<f64>())
                .collect()
        })
        .collect();
    let lip: f64 = (0..n).map(|i| q[i][i]).sum::<f64>().max(1e-12);
    let obj = |a: &[f64]| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += 0.5 * a[i] * q[i][j] * a[j];
            }
            s -= a[i];
        }
        s
    };
    let grad = |a: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| (0..n).map(|j| q[i][j] * a[j]).sum::<f64>() - 1.0)
            .collect()
    };
    let project = |v: &[f64]| -> Vec<f64> {
        let at = |lam: f64| -> Vec<f64> {
            v.iter().zip(y).map(|(vi, yi)| (vi - lam * yi).clamp(0.0, c)).collect()
        };
        let balance = |a: &[f64]| a.iter().zip(y).map(|(ai, yi)| ai * yi).sum::<f64>();
        let span = v.iter().fold(c, |m, vi| m.max(vi.abs())) + 1.0;
        let (mut lo, mut hi) = (-span, span);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if balance(&at(mid)) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        at(0.5 * (lo + hi))
    };

    let mut a = vec![0.0; n];
    let mut z = a.clone();
    let mut t = 1.0f64;
    let mut best = obj(&a);
    for _ in 0..2_000_000 {
        let g = grad(&z);
        let step: Vec<f64> = z.iter().zip(&g).map(|(zi, gi)| zi - gi / lip).collect();
        let next = project(&step);
        let f = obj(&next);
        if f > best {
            if t == 1.0 {
                // a plain projected step no longer descends
                break;
            }
            // adaptive restart
            t = 1.0;
            z = a.clone();
            continue;
        }
        let moved = next.iter().zip(&a).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        z = next
            .iter()
            .zip(&a)
            .map(|(p, q)| p + (t - 1.0) / t_next * (p - q))
            .collect();
        a = next;
        t = t_next;
        best = f;
        if moved < 1e-13 * (1.0 + a.iter().fold(0.0f64, |m, v| m.max(v.abs()))) {
            break;
        }
    }
    (-best, a)
}

/// Random separable 2-D problem: points in the unit square on either side of
/// a random line, none closer to it than `gap`.
pub fn separable_problem(rng: &mut ChaCha8Rng, n: usize, gap: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
    loop {
        let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let (nx, ny) = (theta.cos(), theta.sin());
        let off: f64 = rng.random_range(-0.3..0.3);
        let mut x = Vec::new();
        let mut y = Vec::new();
        while x.len() < n {
            let p = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let d = p[0] * nx + p[1] * ny - off;
            if d.abs() >= gap {
                x.push(p.to_vec());
                y.push(d.signum());
            }
        }
        if y.iter().any(|&v| v > 0.0) && y.iter().any(|&v| v < 0.0) {
            return (x, y);
        }
    }
}
