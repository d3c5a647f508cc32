use std::f64::consts::PI;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{precondition, Result};
use crate::rng::StreamRng;

/// Equal bins on `[0, 1]`. Bin `k` is `[k/b, (k+1)/b)`, the last one closed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(precondition("need at least one bin"));
        }
        let edges = (0..=bins).map(|k| k as f64 / bins as f64).collect();
        Ok(Self { edges, counts: vec![0; bins] })
    }

    pub fn from_samples(samples: &[f64], bins: usize) -> Result<Self> {
        let mut h = Self::new(bins)?;
        for &x in samples {
            h.add(x);
        }
        Ok(h)
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn bin_of(&self, x: f64) -> usize {
        let b = self.bins();
        ((x.clamp(0.0, 1.0) * b as f64) as usize).min(b - 1)
    }

    pub fn add(&mut self, x: f64) {
        let k = self.bin_of(x);
        self.counts[k] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn count_at(&self, x: f64) -> u64 {
        self.counts[self.bin_of(x)]
    }

    /// Expected count per bin for uniformly spread samples.
    pub fn uniform_baseline(&self) -> f64 {
        self.total() as f64 / self.bins() as f64
    }

    /// Histogram of `1 - x`: the same counts in reversed bin order.
    pub fn mirrored(&self) -> Self {
        let mut counts = self.counts.clone();
        counts.reverse();
        Self { edges: self.edges.clone(), counts }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin_lo,bin_hi,count\n");
        for (k, c) in self.counts.iter().enumerate() {
            let _ = writeln!(s, "{},{},{}", self.edges[k], self.edges[k + 1], c);
        }
        s
    }

    /// A bar chart as a standalone SVG document.
    pub fn to_svg(&self, title: &str) -> String {
        let (w, h, pad) = (640.0, 360.0, 40.0);
        let top = self.counts.iter().copied().max().unwrap_or(0).max(1) as f64;
        let bw = (w - 2.0 * pad) / self.bins() as f64;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
        );
        let _ = writeln!(s, "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>");
        let _ = writeln!(s, "<text x=\"{}\" y=\"20\" font-size=\"14\" text-anchor=\"middle\">{}</text>", w / 2.0, escape(title));
        for (k, &c) in self.counts.iter().enumerate() {
            let bh = (h - 2.0 * pad) * c as f64 / top;
            let _ = writeln!(
                s,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"steelblue\"/>",
                pad + k as f64 * bw,
                h - pad - bh,
                bw,
                bh
            );
        }
        let _ = writeln!(s, "<line x1=\"{pad}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>", h - pad, w - pad);
        for (x, label) in [(0.0, "0"), (0.25, "0.25"), (0.5, "0.5"), (0.75, "0.75"), (1.0, "1")] {
            let _ = writeln!(
                s,
                "<text x=\"{:.2}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{label}</text>",
                pad + x * (w - 2.0 * pad),
                h - pad + 15.0
            );
        }
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" font-size=\"11\">max {}</text>", pad, pad - 5.0, top);
        s.push_str("</svg>\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// CDF of `cos^2(theta)` for uniform `theta`: `(2/pi) asin(sqrt x)`.
pub fn arcsine_cdf(x: f64) -> f64 {
    2.0 / PI * x.clamp(0.0, 1.0).sqrt().asin()
}

/// Kolmogorov-Smirnov distance between the empirical CDF and `cdf`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(k, &x)| {
            let f = cdf(x);
            (f - k as f64 / n).abs().max(((k + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cos2Reference {
    pub histogram: Histogram,
    pub ks: f64,
}

pub fn cos2_reference(n_samples: usize, bins: usize, rng: &mut StreamRng) -> Result<Cos2Reference> {
    let samples: Vec<f64> = (0..n_samples).map(|_| (2.0 * PI * rng.uniform()).cos().powi(2)).collect();
    Ok(Cos2Reference { histogram: Histogram::from_samples(&samples, bins)?, ks: ks_distance(&samples, arcsine_cdf) })
}
