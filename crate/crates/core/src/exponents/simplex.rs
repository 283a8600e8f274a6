//! Deterministic minimization over products of probability simplices.
//!
//! A point is the concatenation of `blocks` distributions of `s` entries
//! each. The search evaluates every grid point with denominator `g`, then
//! runs a pattern search around the incumbent, halving the step whenever no
//! neighbour improves, until the step drops below `min_step`.

use rayon::prelude::*;

#[derive(Clone, Copy, Debug)]
pub struct SimplexGrid {
    pub s: usize,
    pub blocks: usize,
    pub g: usize,
    pub refine: bool,
    pub min_step: f64,
}

impl SimplexGrid {
    /// Grid sizes that keep the first pass near 3·10⁵ evaluations.
    pub fn default_for(s: usize, blocks: usize) -> Self {
        let g = match (s, blocks) {
            (2, 1) => 512,
            (3, 1) => 64,
            (2, 2) => 512,
            (3, 2) => 32,
            (4, 1) => 32,
            (_, 1) => 16,
            _ => 8,
        };
        Self {
            s,
            blocks,
            g,
            refine: true,
            min_step: if s == 2 { 1e-9 } else { 1e-7 },
        }
    }

    pub fn with_g(mut self, g: usize) -> Self {
        self.g = g;
        self
    }

    pub fn unrefined(mut self) -> Self {
        self.refine = false;
        self
    }

    pub fn dim(&self) -> usize {
        self.s * self.blocks
    }
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub value: f64,
    pub point: Vec<f64>,
    /// Final step of the search; `1/g` when refinement is off.
    pub step: f64,
}

/// All compositions of `g` into `s` nonnegative parts, lexicographic.
pub fn compositions(g: usize, s: usize) -> Vec<Vec<usize>> {
    fn rec(left: usize, slots: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for v in 0..=left {
            cur.push(v);
            rec(left - v, slots - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(g, s, &mut Vec::with_capacity(s), &mut out);
    out
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Strictly better, or equal with a smaller index (fixed reduction order).
fn better(a: (f64, usize), b: (f64, usize)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

pub fn minimize<F>(grid: &SimplexGrid, f: &F, extra: &[Vec<f64>]) -> Minimum
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let SimplexGrid { s, blocks, g, .. } = *grid;
    let comps = compositions(g, s);
    let per_block: Vec<Vec<f64>> = comps
        .iter()
        .map(|c| c.iter().map(|&v| v as f64 / g as f64).collect())
        .collect();
    let total = per_block.len().pow(blocks as u32);
    let point_at = |mut idx: usize| -> Vec<f64> {
        let mut p = Vec::with_capacity(s * blocks);
        let mut parts = vec![0; blocks];
        for b in (0..blocks).rev() {
            parts[b] = idx % per_block.len();
            idx /= per_block.len();
        }
        for &i in &parts {
            p.extend_from_slice(&per_block[i]);
        }
        p
    };
    let eval = |i: usize| (sanitize(f(&point_at(i))), i);
    let init = (f64::INFINITY, usize::MAX);
    let reduce = |a: (f64, usize), b: (f64, usize)| if better(b, a) { b } else { a };
    let (mut best_v, best_i) = if total > 50_000 {
        (0..total).into_par_iter().map(eval).reduce(|| init, reduce)
    } else {
        (0..total).map(eval).fold(init, reduce)
    };
    let mut best = point_at(best_i);
    for x in extra {
        debug_assert_eq!(x.len(), s * blocks);
        let v = sanitize(f(x));
        if v < best_v {
            best_v = v;
            best = x.clone();
        }
    }
    let mut step = 1.0 / g as f64;
    if grid.refine && best_v.is_finite() {
        let (v, p, h) = pattern_search(grid, f, best, best_v, step);
        best_v = v;
        best = p;
        step = h;
    }
    Minimum {
        value: best_v,
        point: best,
        step,
    }
}

/// Offsets in `{−1,0,1}` on the free coordinates (all but the last entry of
/// each block), excluding the all-zero move.
fn moves(s: usize, blocks: usize) -> Vec<Vec<i8>> {
    let free = (s - 1) * blocks;
    let count = 3usize.pow(free as u32);
    (0..count)
        .filter(|&c| c != (count - 1) / 2)
        .map(|mut c| {
            let mut m = vec![0i8; free];
            for slot in m.iter_mut() {
                *slot = (c % 3) as i8 - 1;
                c /= 3;
            }
            m
        })
        .collect()
}

fn pattern_search<F>(
    grid: &SimplexGrid,
    f: &F,
    mut best: Vec<f64>,
    mut best_v: f64,
    mut h: f64,
) -> (f64, Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let (s, blocks) = (grid.s, grid.blocks);
    let mvs = moves(s, blocks);
    let mut cand = vec![0.0; s * blocks];
    let mut budget = 200_000usize;
    while h >= grid.min_step && budget > 0 {
        let mut improved = false;
        let mut next_v = best_v;
        let mut next = None;
        for m in &mvs {
            budget = budget.saturating_sub(1);
            if !shifted(&best, m, h, s, blocks, &mut cand) {
                continue;
            }
            let v = sanitize(f(&cand));
            if v < next_v {
                next_v = v;
                next = Some(cand.clone());
            }
        }
        if let Some(p) = next {
            best = p;
            best_v = next_v;
            improved = true;
        }
        if !improved {
            h /= 2.0;
        }
    }
    (best_v, best, h)
}

/// Writes `base + h·m` into `out`, fixing each block's last entry so the
/// block sums to one. Returns false outside the simplex.
fn shifted(base: &[f64], m: &[i8], h: f64, s: usize, blocks: usize, out: &mut [f64]) -> bool {
    for b in 0..blocks {
        let mut acc = 0.0;
        for i in 0..s - 1 {
            let v = base[b * s + i] + h * m[b * (s - 1) + i] as f64;
            if v < 0.0 {
                return false;
            }
            out[b * s + i] = v;
            acc += v;
        }
        let last = 1.0 - acc;
        if last < -1e-15 {
            return false;
        }
        out[b * s + s - 1] = last.max(0.0);
    }
    true
}
