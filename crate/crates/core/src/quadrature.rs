// Copyright 2026 The thermocorr Authors
// SPDX-License-Identifier: Apache-2.0

//! Adaptive Gauss–Kronrod quadrature for vector-valued complex integrands.
//!
//! All components share one subdivision, so quadratic forms built from the
//! integrand keep their sign structure at the discrete level.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerances and windows for every numerical integral in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Principal-value window half-width is `min(|ω| + m·w, 2m·w)` with `m` this
    /// multiplier and `w` the spectral width scale.
    pub window_multiplier: f64,
    /// Smooth spectra are truncated to `|Ω| ≤ cutoff_multiplier · max(ω_c, 1/β)`.
    pub cutoff_multiplier: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            rel_tol: 1e-8,
            max_subdivisions: 200_000,
            window_multiplier: 5.0,
            cutoff_multiplier: 40.0,
        }
    }
}

impl QuadratureConfig {
    /// Tighter tolerances for cancellation-prone combinations.
    pub fn tight() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            ..Self::default()
        }
    }

    pub fn with_tolerances(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol >= 0.0 && self.max_subdivisions > 0) {
            return Err(Error::Validation(format!(
                "invalid quadrature tolerances abs={} rel={}",
                self.abs_tol, self.rel_tol
            )));
        }
        if !(self.window_multiplier > 0.0 && self.cutoff_multiplier > 0.0) {
            return Err(Error::Validation("quadrature multipliers must be positive".into()));
        }
        Ok(())
    }
}

// 21-point Kronrod nodes on [0, 1] half of [-1, 1]; odd indices are Gauss nodes.
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077600567981860,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

/// The 21 nodes and Kronrod weights mapped to `[a, b]`.
pub fn kronrod_rule(a: f64, b: f64) -> [(f64, f64); 21] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = [(0.0, 0.0); 21];
    for i in 0..10 {
        out[2 * i] = (c - h * XGK[i], h * WGK[i]);
        out[2 * i + 1] = (c + h * XGK[i], h * WGK[i]);
    }
    out[20] = (c, h * WGK[10]);
    out
}

struct Segment {
    a: f64,
    b: f64,
    err: f64,
    value: Vec<Complex64>,
    errs: Vec<f64>,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn gk21<F>(f: &mut F, a: f64, b: f64, n: usize, buf: &mut [Complex64]) -> Segment
where
    F: FnMut(f64, &mut [Complex64]),
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kron = vec![Complex64::new(0.0, 0.0); n];
    let mut gauss = vec![Complex64::new(0.0, 0.0); n];
    f(c, buf);
    for k in 0..n {
        kron[k] += buf[k] * WGK[10];
    }
    for i in 0..10 {
        let dx = h * XGK[i];
        for x in [c - dx, c + dx] {
            f(x, buf);
            for k in 0..n {
                kron[k] += buf[k] * WGK[i];
                if i % 2 == 1 {
                    gauss[k] += buf[k] * WG[i / 2];
                }
            }
        }
    }
    let mut errs = vec![0.0; n];
    let mut err = 0.0f64;
    for k in 0..n {
        kron[k] *= h;
        gauss[k] *= h;
        let e = (kron[k] - gauss[k]).norm();
        let e = if e.is_finite() { e } else { f64::INFINITY };
        errs[k] = e;
        err = err.max(e);
    }
    Segment {
        a,
        b,
        err,
        value: kron,
        errs,
    }
}

/// Integrate an `n`-component complex integrand over `[lo, hi]`.
///
/// `breakpoints` inside the interval split it before adaptation; `max_panel`
/// bounds the initial panel width (useful for oscillatory integrands).
/// Convergence requires, for every component, the summed error estimate to be
/// below `max(abs_tol, rel_tol·|I_k|)`.
pub fn integrate_vec<F>(
    mut f: F,
    lo: f64,
    hi: f64,
    n: usize,
    breakpoints: &[f64],
    max_panel: Option<f64>,
    cfg: &QuadratureConfig,
) -> Result<Vec<Complex64>>
where
    F: FnMut(f64, &mut [Complex64]),
{
    let zero = Complex64::new(0.0, 0.0);
    if hi <= lo || n == 0 {
        return Ok(vec![zero; n]);
    }
    let mut pts: Vec<f64> = vec![lo, hi];
    pts.extend(breakpoints.iter().copied().filter(|&x| x > lo && x < hi));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut edges = Vec::with_capacity(pts.len());
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let pieces = match max_panel {
            Some(p) if p > 0.0 => (((b - a) / p).ceil() as usize).clamp(1, 1_000_000),
            _ => 1,
        };
        for j in 0..pieces {
            let x0 = a + (b - a) * j as f64 / pieces as f64;
            let x1 = if j + 1 == pieces { b } else { a + (b - a) * (j + 1) as f64 / pieces as f64 };
            edges.push((x0, x1));
        }
    }

    let mut buf = vec![zero; n];
    let mut heap = BinaryHeap::with_capacity(edges.len() * 2);
    let mut done: Vec<Segment> = Vec::new();
    for &(a, b) in &edges {
        heap.push(gk21(&mut f, a, b, n, &mut buf));
    }
    let budget = cfg.max_subdivisions.max(edges.len() + 1);
    let mut count = edges.len();
    loop {
        let mut total = vec![zero; n];
        let mut errs = vec![0.0f64; n];
        for s in heap.iter().chain(done.iter()) {
            for k in 0..n {
                total[k] += s.value[k];
                errs[k] += s.errs[k];
            }
        }
        let mut worst_ratio = 0.0f64;
        let mut worst = (0.0, 0.0);
        for k in 0..n {
            let target = cfg.abs_tol.max(cfg.rel_tol * total[k].norm());
            let ratio = errs[k] / target;
            if !(ratio <= worst_ratio) {
                worst_ratio = ratio;
                worst = (errs[k], target);
            }
        }
        if worst_ratio <= 1.0 {
            return Ok(total);
        }
        if count >= budget || heap.is_empty() {
            return Err(Error::Quadrature {
                achieved: worst.0,
                requested: worst.1,
            });
        }
        // Refine a batch of the worst segments before re-summing.
        let batch = (heap.len() / 8).clamp(1, 256);
        for _ in 0..batch {
            let Some(seg) = heap.pop() else { break };
            let mid = 0.5 * (seg.a + seg.b);
            if !(mid > seg.a && mid < seg.b) || (seg.b - seg.a) < 1e-13 * seg.a.abs().max(seg.b.abs()) {
                done.push(seg);
                continue;
            }
            heap.push(gk21(&mut f, seg.a, mid, n, &mut buf));
            heap.push(gk21(&mut f, mid, seg.b, n, &mut buf));
            count += 1;
        }
    }
}

/// Scalar real integral.
pub fn integrate<F>(
    mut f: F,
    lo: f64,
    hi: f64,
    breakpoints: &[f64],
    cfg: &QuadratureConfig,
) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let v = integrate_vec(
        |x, out| out[0] = Complex64::new(f(x), 0.0),
        lo,
        hi,
        1,
        breakpoints,
        None,
        cfg,
    )?;
    Ok(v[0].re)
}

/// Scalar complex integral.
pub fn integrate_complex<F>(
    mut f: F,
    lo: f64,
    hi: f64,
    breakpoints: &[f64],
    max_panel: Option<f64>,
    cfg: &QuadratureConfig,
) -> Result<Complex64>
where
    F: FnMut(f64) -> Complex64,
{
    let v = integrate_vec(|x, out| out[0] = f(x), lo, hi, 1, breakpoints, max_panel, cfg)?;
    Ok(v[0])
}

/// Fixed composite 21-point rule with `panels` equal panels (no error control).
pub fn composite_fixed<F>(mut f: F, lo: f64, hi: f64, panels: usize) -> Complex64
where
    F: FnMut(f64) -> Complex64,
{
    let mut acc = Complex64::new(0.0, 0.0);
    let p = panels.max(1);
    for j in 0..p {
        let a = lo + (hi - lo) * j as f64 / p as f64;
        let b = lo + (hi - lo) * (j + 1) as f64 / p as f64;
        for (x, w) in kronrod_rule(a, b) {
            acc += f(x) * w;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let cfg = QuadratureConfig::default();
        let v = integrate(|x| x.powi(7) - 3.0 * x * x, -1.0, 2.0, &[], &cfg).unwrap();
        let exact = (2f64.powi(8) - 1.0) / 8.0 - (8.0 + 1.0);
        assert!((v - exact).abs() < 1e-13);
    }

    #[test]
    fn kink_with_breakpoint() {
        let cfg = QuadratureConfig::with_tolerances(1e-13, 1e-13);
        let v = integrate(|x| x.abs().sqrt(), -1.0, 1.0, &[0.0], &cfg).unwrap();
        assert!((v - 4.0 / 3.0).abs() < 1e-11);
    }

    #[test]
    fn oscillatory_complex() {
        let cfg = QuadratureConfig::with_tolerances(1e-12, 1e-12);
        let t = 50.0;
        let v = integrate_complex(|x| Complex64::new(0.0, x * t).exp(), 0.0, 3.0, &[], Some(0.5), &cfg)
            .unwrap();
        let exact = (Complex64::new(0.0, 3.0 * t).exp() - 1.0) / Complex64::new(0.0, t);
        assert!((v - exact).norm() < 1e-11);
    }

    #[test]
    fn budget_exhaustion_reports_error() {
        let cfg = QuadratureConfig {
            max_subdivisions: 3,
            ..QuadratureConfig::with_tolerances(1e-15, 0.0)
        };
        let r = integrate(|x| (1.0 / x).sin(), 1e-3, 1.0, &[], &cfg);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }

    #[test]
    fn vector_components_share_subdivision() {
        let cfg = QuadratureConfig::default();
        let v = integrate_vec(
            |x, out| {
                out[0] = Complex64::new(x.exp(), 0.0);
                out[1] = Complex64::new(0.0, x.cos());
            },
            0.0,
            1.0,
            2,
            &[],
            None,
            &cfg,
        )
        .unwrap();
        assert!((v[0].re - (1f64.exp() - 1.0)).abs() < 1e-12);
        assert!((v[1].im - 1f64.sin()).abs() < 1e-12);
    }
}
