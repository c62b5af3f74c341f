//! Straight-line reference implementations used as test oracles. Nothing here
//! calls into the library's geometry or component code.
#![allow(dead_code)]

use std::collections::VecDeque;

use clore_core::raster::{BinaryMask, Dims};
use rand::Rng;

pub type R4 = (usize, usize, usize, usize);

pub struct Grid {
    pub h: usize,
    pub w: usize,
    pub v: Vec<bool>,
}

impl Grid {
    pub fn from_mask(m: &BinaryMask) -> Self {
        Grid {
            h: m.height(),
            w: m.width(),
            v: m.as_slice().to_vec(),
        }
    }

    pub fn at(&self, y: usize, x: usize) -> bool {
        self.v[y * self.w + x]
    }

    pub fn any(&self) -> bool {
        self.v.iter().any(|&b| b)
    }
}

pub fn bbox_of(pixels: &[(usize, usize)]) -> Option<R4> {
    if pixels.is_empty() {
        return None;
    }
    let y1 = pixels.iter().map(|p| p.0).min().unwrap();
    let y2 = pixels.iter().map(|p| p.0).max().unwrap() + 1;
    let x1 = pixels.iter().map(|p| p.1).min().unwrap();
    let x2 = pixels.iter().map(|p| p.1).max().unwrap() + 1;
    Some((y1, y2, x1, x2))
}

pub fn grid_bbox(g: &Grid) -> Option<R4> {
    let mut px = Vec::new();
    for y in 0..g.h {
        for x in 0..g.w {
            if g.at(y, x) {
                px.push((y, x));
            }
        }
    }
    bbox_of(&px)
}

pub fn area(r: R4) -> usize {
    (r.1 - r.0) * (r.3 - r.2)
}

/// 4-connected components by breadth-first search, ordered by
/// (bbox.y1, bbox.x1) and then by discovery order.
pub fn components4(g: &Grid) -> Vec<Vec<(usize, usize)>> {
    let mut seen = vec![false; g.h * g.w];
    let mut out: Vec<Vec<(usize, usize)>> = Vec::new();
    for y in 0..g.h {
        for x in 0..g.w {
            if !g.at(y, x) || seen[y * g.w + x] {
                continue;
            }
            let mut comp = Vec::new();
            let mut q = VecDeque::new();
            q.push_back((y, x));
            seen[y * g.w + x] = true;
            while let Some((cy, cx)) = q.pop_front() {
                comp.push((cy, cx));
                let mut nb = Vec::new();
                if cy > 0 {
                    nb.push((cy - 1, cx));
                }
                if cy + 1 < g.h {
                    nb.push((cy + 1, cx));
                }
                if cx > 0 {
                    nb.push((cy, cx - 1));
                }
                if cx + 1 < g.w {
                    nb.push((cy, cx + 1));
                }
                for (ny, nx) in nb {
                    if g.at(ny, nx) && !seen[ny * g.w + nx] {
                        seen[ny * g.w + nx] = true;
                        q.push_back((ny, nx));
                    }
                }
            }
            out.push(comp);
        }
    }
    let mut keyed: Vec<(usize, usize, usize, Vec<(usize, usize)>)> = out
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            let b = bbox_of(&c).unwrap();
            (b.0, b.2, i, c)
        })
        .collect();
    keyed.sort_by_key(|k| (k.0, k.1, k.2));
    keyed.into_iter().map(|k| k.3).collect()
}

pub fn xor(a: &Grid, b: &Grid) -> Grid {
    Grid {
        h: a.h,
        w: a.w,
        v: a.v.iter().zip(&b.v).map(|(p, q)| p != q).collect(),
    }
}

fn floor_div(a: i64, b: i64) -> i64 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn ceil_div(a: i64, b: i64) -> i64 {
    -floor_div(-a, b)
}

/// Scale a span about its center by `k / 10`, rounding outward, in exact
/// integer arithmetic.
fn scale_span_tenths(lo: usize, hi: usize, k: i64) -> (i64, i64) {
    let (lo, hi) = (lo as i64, hi as i64);
    let len = hi - lo;
    // center ± len*k/20, everything over 20
    let a = floor_div(10 * (lo + hi) - len * k, 20);
    let b = ceil_div(10 * (lo + hi) + len * k, 20);
    (a, b)
}

/// Expand by `k / 10` (k ≥ 10) and intersect with `clip`; an empty
/// intersection becomes the clip pixel nearest the expanded center.
pub fn expand_tenths(r: R4, k: i64, clip: R4) -> R4 {
    let (y1, y2) = scale_span_tenths(r.0, r.1, k);
    let (x1, x2) = scale_span_tenths(r.2, r.3, k);
    let iy1 = y1.max(clip.0 as i64);
    let iy2 = y2.min(clip.1 as i64);
    let ix1 = x1.max(clip.2 as i64);
    let ix2 = x2.min(clip.3 as i64);
    if iy1 < iy2 && ix1 < ix2 {
        return (iy1 as usize, iy2 as usize, ix1 as usize, ix2 as usize);
    }
    let cy = floor_div(y1 + y2, 2).clamp(clip.0 as i64, clip.1 as i64 - 1) as usize;
    let cx = floor_div(x1 + x2, 2).clamp(clip.2 as i64, clip.3 as i64 - 1) as usize;
    (cy, cy + 1, cx, cx + 1)
}

/// Square of side round(0.4·l) starting half a side above/left of the
/// click, clipped to the image.
pub fn click_square(click: (usize, usize), l: usize, h: usize, w: usize) -> R4 {
    // round(0.4 l) = floor((4l + 5) / 10)
    let side = ((4 * l as i64 + 5) / 10).max(1);
    let y1 = click.0 as i64 - side / 2;
    let x1 = click.1 as i64 - side / 2;
    let y2 = y1 + side;
    let x2 = x1 + side;
    (
        y1.max(0) as usize,
        y2.min(h as i64) as usize,
        x1.max(0) as usize,
        x2.min(w as i64) as usize,
    )
}

/// Local Patch selection written directly from the pseudocode.
pub fn local_patch_oracle(mc: &Grid, mp: &Grid, rg: R4, click: (usize, usize), gamma_tenths: i64) -> R4 {
    let (h, w) = (mc.h, mc.w);
    let rg_long = (rg.1 - rg.0).max(rg.3 - rg.2);
    let b: R4;
    if !mp.any() {
        b = match grid_bbox(mc) {
            Some(bb) => bb,
            None => click_square(click, rg_long, h, w),
        };
    } else {
        let d = xor(mc, mp);
        let comps = components4(&d);
        if comps.is_empty() {
            b = match grid_bbox(mc) {
                Some(bb) => bb,
                None => click_square(click, rg_long, h, w),
            };
        } else {
            let mut chosen: Option<&Vec<(usize, usize)>> = None;
            for c in &comps {
                if c.contains(&click) {
                    chosen = Some(c);
                }
            }
            if chosen.is_none() {
                let mut best = &comps[0];
                for c in &comps {
                    if c.len() > best.len() {
                        best = c;
                    }
                }
                chosen = Some(best);
            }
            let bd = bbox_of(chosen.unwrap()).unwrap();
            let bo = grid_bbox(mc).unwrap_or(rg);
            // ‖B_d‖ / ‖B_o‖ < 1/3
            if 3 * area(bd) < area(bo) {
                let l = (bo.1 - bo.0).max(bo.3 - bo.2);
                b = click_square(click, l, h, w);
            } else {
                b = bd;
            }
        }
    }
    expand_tenths(b, gamma_tenths, rg)
}

/// Selective merge by pixel enumeration.
pub fn merge_oracle(mr: &Grid, mp: &Grid, click: (usize, usize)) -> Vec<bool> {
    if !mp.any() {
        return mr.v.clone();
    }
    let d = xor(mr, mp);
    let comps = components4(&d);
    let Some(c) = comps.iter().find(|c| c.contains(&click)) else {
        return mr.v.clone();
    };
    let mut out = mp.v.clone();
    for &(y, x) in c {
        out[y * mp.w + x] = mr.at(y, x);
    }
    out
}

/// Random mask made of a few rectangles and ellipses.
pub fn random_blobs<R: Rng>(rng: &mut R, d: Dims, max_shapes: usize) -> BinaryMask {
    let n = rng.random_range(0..=max_shapes);
    let shapes: Vec<(bool, f64, f64, f64, f64)> = (0..n)
        .map(|_| {
            (
                rng.random_bool(0.5),
                rng.random_range(0.0..d.height as f64),
                rng.random_range(0.0..d.width as f64),
                rng.random_range(1.0..(d.height as f64 / 2.0).max(1.5)),
                rng.random_range(1.0..(d.width as f64 / 2.0).max(1.5)),
            )
        })
        .collect();
    BinaryMask::from_fn(d, |y, x| {
        shapes.iter().any(|&(ellipse, cy, cx, ry, rx)| {
            let (dy, dx) = (y as f64 - cy, x as f64 - cx);
            if ellipse {
                (dy / ry).powi(2) + (dx / rx).powi(2) <= 1.0
            } else {
                dy.abs() <= ry && dx.abs() <= rx
            }
        })
    })
}

/// Flip a few random blobs of `base`.
pub fn perturb<R: Rng>(rng: &mut R, base: &BinaryMask) -> BinaryMask {
    let d = base.dims();
    let edits = random_blobs(rng, Dims::new(d.height, d.width), 3);
    let scale = rng.random_range(0.2..1.0);
    let keep: Vec<bool> = (0..d.len()).map(|_| rng.random_bool(scale)).collect();
    BinaryMask::from_fn(d, |y, x| {
        let i = y * d.width + x;
        let flip = edits.get(y, x) && keep[i];
        base.get(y, x) != flip
    })
}

pub fn random_dims<R: Rng>(rng: &mut R, lo: usize, hi: usize) -> Dims {
    Dims::new(rng.random_range(lo..=hi), rng.random_range(lo..=hi))
}

/// Focal loss with a fixed normalizer, as a plain sum.
pub fn nfl_fixed_m(p: &[f64], g: &[bool], m: f64, alpha: f64, gamma: f64, eps: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..p.len() {
        let pt = if g[i] { p[i] } else { 1.0 - p[i] };
        let beta = (1.0 - pt).powf(gamma);
        total += -alpha * beta * m * (pt + eps).min(1.0).ln();
    }
    total / p.len() as f64
}
