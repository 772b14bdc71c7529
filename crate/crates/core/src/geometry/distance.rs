use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::geometry::{Buf, GridDomain, Lattice, MetricChart};
use crate::numeric::dist;

/// Geodesic distance from one source point, sampled at cell centers.
#[derive(Clone, Debug)]
pub struct DistanceField {
    chart: MetricChart,
    lattice: Lattice,
    values: Vec<f64>,
    source: Vec<f64>,
    near: f64,
}

impl DistanceField {
    pub fn source(&self) -> &[f64] {
        &self.source
    }
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }
    /// Distance at each cell center; `INFINITY` where never reached.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Distance at an arbitrary point by multilinear interpolation; NaN when
    /// no surrounding center was reached.
    pub fn at(&self, x: &[f64]) -> f64 {
        if dist(x, &self.source) <= self.near {
            return self.chart.segment_length_refined(&self.source, x, 8);
        }
        if !self.lattice.contains(x) {
            return f64::NAN;
        }
        let n = self.lattice.dim();
        let res = self.lattice.resolution();
        let strides = self.lattice.strides();
        let mut u = Buf::from_elem(0.0, n);
        self.lattice.center_coords(x, &mut u);
        let mut base = [0usize; 8];
        let mut frac = [0.0f64; 8];
        for k in 0..n {
            if res[k] == 1 {
                base[k] = 0;
                frac[k] = 0.0;
                continue;
            }
            let i = u[k].floor().clamp(0.0, (res[k] - 2) as f64);
            base[k] = i as usize;
            frac[k] = (u[k] - i).clamp(0.0, 1.0);
        }
        let mut acc = 0.0;
        let mut wsum = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut idx = 0;
            let mut skip = false;
            for k in 0..n {
                let bit = (corner >> k) & 1;
                if bit == 1 && res[k] == 1 {
                    skip = true;
                    break;
                }
                w *= if bit == 1 { frac[k] } else { 1.0 - frac[k] };
                idx += (base[k] + bit) * strides[k];
            }
            if skip || w == 0.0 {
                continue;
            }
            let v = self.values[idx];
            if v.is_finite() {
                acc += w * v;
                wsum += w;
            }
        }
        if wsum > 1e-9 {
            acc / wsum
        } else {
            f64::NAN
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    t: f64,
    idx: usize,
}
impl Eq for Entry {}
impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.t.total_cmp(&self.t).then(other.idx.cmp(&self.idx))
    }
}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Full distance field from `source` over the grid.
pub fn distance_field(grid: &GridDomain, source: &[f64]) -> Result<DistanceField> {
    march(grid, source, &[])
}

/// Numerical geodesic distance on `grid` (no closed-form shortcut). Marching
/// stops once the cells around `y` are settled.
pub fn geodesic_distance_on(grid: &GridDomain, x: &[f64], y: &[f64]) -> Result<f64> {
    let chart = grid.chart();
    chart.check_point(y)?;
    if x == y {
        chart.check_point(x)?;
        return Ok(0.0);
    }
    let lattice = grid.lattice();
    let cell = lattice
        .locate(y)
        .ok_or_else(|| Error::Domain(format!("point {y:?} is outside the grid")))?;
    let mut targets = vec![cell];
    targets.extend(interpolation_corners(lattice, y));
    let active = active_cells(grid);
    targets.retain(|&c| active[c]);
    targets.sort_unstable();
    targets.dedup();
    let field = march(grid, x, &targets)?;
    if !field.values[cell].is_finite() {
        return Err(Error::Unreachable);
    }
    let d = field.at(y);
    if d.is_finite() {
        Ok(d)
    } else {
        Err(Error::Unreachable)
    }
}

/// Geodesic distance `d(x, y)`, closed form for Euclidean, Poincaré and
/// stereographic charts, otherwise marched on a default-resolution grid.
pub fn geodesic_distance(x: &[f64], y: &[f64], chart: &MetricChart) -> Result<f64> {
    chart.check_point(x)?;
    chart.check_point(y)?;
    if let Some(d) = chart.analytic_distance(x, y) {
        return Ok(d);
    }
    let grid = GridDomain::with_default_resolution(chart)?;
    geodesic_distance_on(&grid, x, y)
}

fn interpolation_corners(lattice: &Lattice, y: &[f64]) -> Vec<usize> {
    let n = lattice.dim();
    let res = lattice.resolution();
    let mut u = vec![0.0; n];
    lattice.center_coords(y, &mut u);
    let base: Vec<usize> = (0..n)
        .map(|k| {
            if res[k] == 1 {
                0
            } else {
                u[k].floor().clamp(0.0, (res[k] - 2) as f64) as usize
            }
        })
        .collect();
    let mut out = Vec::with_capacity(1 << n);
    let mut m = vec![0usize; n];
    for corner in 0..(1usize << n) {
        for k in 0..n {
            m[k] = (base[k] + ((corner >> k) & 1)).min(res[k] - 1);
        }
        out.push(lattice.flat_index(&m));
    }
    out
}

fn active_cells(grid: &GridDomain) -> Vec<bool> {
    let lattice = grid.lattice();
    let chart = grid.chart();
    let mut c = vec![0.0; lattice.dim()];
    (0..lattice.num_cells())
        .map(|idx| {
            lattice.center(idx, &mut c);
            chart.contains(&c)
        })
        .collect()
}

fn march(grid: &GridDomain, source: &[f64], targets: &[usize]) -> Result<DistanceField> {
    let chart = grid.chart();
    let lattice = grid.lattice();
    if !chart.contains(source) {
        return Err(Error::Domain(format!("source {source:?} lies outside the chart or on a blocked cell")));
    }
    let src_cell = lattice
        .locate(source)
        .ok_or_else(|| Error::Domain(format!("source {source:?} is outside the grid")))?;
    let n = lattice.dim();
    let active = active_cells(grid);
    let cells = lattice.num_cells();
    let mut values = vec![f64::INFINITY; cells];
    let mut done = vec![false; cells];
    let mut fixed = vec![false; cells];
    let mut heap = BinaryHeap::new();

    // straight segments are accurate inside a few cells of the source
    let radius = 4usize;
    let mut sm = vec![0usize; n];
    lattice.multi_index(src_cell, &mut sm);
    let res = lattice.resolution();
    let lo: Vec<usize> = sm.iter().map(|&i| i.saturating_sub(radius)).collect();
    let hi: Vec<usize> = (0..n).map(|k| (sm[k] + radius).min(res[k] - 1)).collect();
    let mut m = lo.clone();
    let mut c = vec![0.0; n];
    loop {
        let idx = lattice.flat_index(&m);
        if active[idx] {
            lattice.center(idx, &mut c);
            let t = chart.segment_length_refined(source, &c, 8);
            if t.is_finite() {
                values[idx] = t;
                fixed[idx] = true;
                heap.push(Entry { t, idx });
            }
        }
        let mut k = n;
        loop {
            if k == 0 {
                break;
            }
            k -= 1;
            if m[k] < hi[k] {
                m[k] += 1;
                break;
            }
            m[k] = lo[k];
        }
        if m == lo {
            break;
        }
    }
    let near = radius as f64 * lattice.min_spacing();

    let mut pending = targets.len();
    let mut is_target = vec![false; if targets.is_empty() { 0 } else { cells }];
    for &t in targets {
        is_target[t] = true;
    }

    let isotropic = chart.is_isotropic();
    let stencil = if isotropic { Vec::new() } else { wide_stencil(n) };
    let strides = lattice.strides().to_vec();
    let h = lattice.spacing().to_vec();
    let mut mi = vec![0usize; n];
    let mut cj = vec![0.0; n];

    while let Some(Entry { t, idx }) = heap.pop() {
        if done[idx] || t > values[idx] {
            continue;
        }
        done[idx] = true;
        if !is_target.is_empty() && is_target[idx] {
            pending -= 1;
            if pending == 0 {
                break;
            }
        }
        lattice.multi_index(idx, &mut mi);
        if isotropic {
            for k in 0..n {
                for dir in [-1i64, 1] {
                    let j = mi[k] as i64 + dir;
                    if j < 0 || j >= res[k] as i64 {
                        continue;
                    }
                    let nb = (idx as i64 + dir * strides[k] as i64) as usize;
                    if done[nb] || fixed[nb] || !active[nb] {
                        continue;
                    }
                    lattice.center(nb, &mut cj);
                    let lambda = chart.conformal_factor(&cj).unwrap_or(f64::NAN);
                    if !(lambda.is_finite() && lambda > 0.0) {
                        continue;
                    }
                    let tn = eikonal_update(nb, lambda, lattice, &values, &done, &h);
                    if tn < values[nb] {
                        values[nb] = tn;
                        heap.push(Entry { t: tn, idx: nb });
                    }
                }
            }
        } else {
            lattice.center(idx, &mut c);
            'offsets: for off in &stencil {
                let mut nb = 0usize;
                for k in 0..n {
                    let j = mi[k] as i64 + off[k] as i64;
                    if j < 0 || j >= res[k] as i64 {
                        continue 'offsets;
                    }
                    nb += j as usize * strides[k];
                }
                if done[nb] || fixed[nb] || !active[nb] {
                    continue;
                }
                lattice.center(nb, &mut cj);
                let pieces = off.iter().map(|v| v.unsigned_abs() as usize).max().unwrap_or(1);
                let w = chart.segment_length_refined(&c, &cj, pieces);
                if !w.is_finite() {
                    continue;
                }
                let tn = t + w;
                if tn < values[nb] {
                    values[nb] = tn;
                    heap.push(Entry { t: tn, idx: nb });
                }
            }
        }
    }

    Ok(DistanceField {
        chart: chart.clone(),
        lattice: lattice.clone(),
        values,
        source: source.to_vec(),
        near,
    })
}

/// Second-order upwind solve of `|∇T| = λ` at `idx`, dropping to first order
/// where the second upwind neighbour is unavailable.
fn eikonal_update(idx: usize, lambda: f64, lattice: &Lattice, values: &[f64], done: &[bool], h: &[f64]) -> f64 {
    let n = lattice.dim();
    let res = lattice.resolution();
    let strides = lattice.strides();
    let mut terms: Buf = Buf::new();
    let mut coefs: Buf = Buf::new();
    let mut rem = idx;
    for k in 0..n {
        let i = rem / strides[k];
        rem %= strides[k];
        let mut best: Option<(f64, f64)> = None;
        for dir in [-1i64, 1] {
            let j1 = i as i64 + dir;
            if j1 < 0 || j1 >= res[k] as i64 {
                continue;
            }
            let n1 = (idx as i64 + dir * strides[k] as i64) as usize;
            if !done[n1] {
                continue;
            }
            let t1 = values[n1];
            let j2 = j1 + dir;
            let mut cand = (1.0 / h[k], t1);
            if j2 >= 0 && j2 < res[k] as i64 {
                let n2 = (n1 as i64 + dir * strides[k] as i64) as usize;
                if done[n2] && values[n2] <= t1 {
                    cand = (1.5 / h[k], (4.0 * t1 - values[n2]) / 3.0);
                }
            }
            match best {
                Some((_, m)) if m <= cand.1 => {}
                _ => best = Some(cand),
            }
        }
        if let Some((a, m)) = best {
            coefs.push(a);
            terms.push(m);
        }
    }
    let mut order: SmallVecIdx = (0..terms.len()).collect();
    order.sort_by(|&a, &b| terms[a].total_cmp(&terms[b]));
    let mut t = f64::INFINITY;
    let (mut sa, mut sb, mut sc) = (0.0, 0.0, 0.0);
    for (used, &k) in order.iter().enumerate() {
        let (a2, m) = (coefs[k] * coefs[k], terms[k]);
        if used > 0 && t <= m {
            break;
        }
        sa += a2;
        sb += a2 * m;
        sc += a2 * m * m;
        let disc = sb * sb - sa * (sc - lambda * lambda);
        if disc < 0.0 {
            break;
        }
        t = (sb + disc.sqrt()) / sa;
    }
    t
}

type SmallVecIdx = smallvec::SmallVec<[usize; 4]>;

/// Primitive integer offsets of max-norm at most 3 (plane) or 2 (higher).
fn wide_stencil(n: usize) -> Vec<Vec<i32>> {
    let k: i32 = if n <= 2 { 3 } else { 2 };
    let mut out = Vec::new();
    let mut v = vec![-k; n];
    loop {
        if v.iter().any(|&x| x != 0) && gcd_all(&v) == 1 {
            out.push(v.clone());
        }
        let mut d = 0;
        while d < n {
            if v[d] < k {
                v[d] += 1;
                break;
            }
            v[d] = -k;
            d += 1;
        }
        if d == n {
            break;
        }
    }
    out
}

fn gcd_all(v: &[i32]) -> i32 {
    fn gcd(a: i32, b: i32) -> i32 {
        if b == 0 {
            a.abs()
        } else {
            gcd(b, a % b)
        }
    }
    v.iter().fold(0, |g, &x| gcd(g, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::geometry::{BoxDomain, ConformalFactor, MetricKind, TensorGrid};
    use std::sync::Arc;

    fn sampled_poincare() -> MetricChart {
        let f = Expr::parse("2/(1-x^2-y^2)", 2).unwrap();
        MetricChart::new(
            2,
            BoxDomain::cube(2, 0.9),
            MetricKind::Conformal(ConformalFactor::Expression(f)),
            2.0,
        )
        .unwrap()
    }

    #[test]
    fn euclidean_marching_matches_straight_lines() {
        let chart = MetricChart::euclidean(2, 2.0);
        let grid = GridDomain::uniform(&chart, 128).unwrap();
        let d = geodesic_distance_on(&grid, &[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!((d - 1.0).abs() < 5e-3, "{d}");
        let d = geodesic_distance_on(&grid, &[-1.0, -1.0], &[1.0, 0.5]).unwrap();
        assert!((d - 2.5).abs() / 2.5 < 5e-3, "{d}");
    }

    #[test]
    fn marched_poincare_distance_is_log_three() {
        let chart = sampled_poincare();
        let grid = GridDomain::uniform(&chart, 256).unwrap();
        let d = geodesic_distance_on(&grid, &[0.0, 0.0], &[0.5, 0.0]).unwrap();
        assert!((d - 3f64.ln()).abs() / 3f64.ln() < 1e-2, "{d}");
    }

    #[test]
    fn identical_points_are_at_distance_zero() {
        let chart = MetricChart::euclidean(2, 1.0);
        assert_eq!(geodesic_distance(&[0.3, 0.1], &[0.3, 0.1], &chart).unwrap(), 0.0);
    }

    #[test]
    fn disconnected_components_are_unreachable() {
        let l = Lattice::new(&[0.0, 0.0], &[1.0, 1.0], &[32, 32]).unwrap();
        let g = TensorGrid::from_fn(l, |x, g| {
            if (0.45..0.55).contains(&x[0]) {
                g.fill(f64::NAN)
            } else {
                g.copy_from_slice(&[1.0, 0.0, 0.0, 1.0])
            }
        })
        .unwrap();
        let chart = MetricChart::new(
            2,
            BoxDomain::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap(),
            MetricKind::GeneralGrid(Arc::new(g)),
            1.0,
        )
        .unwrap();
        let grid = GridDomain::uniform(&chart, 32).unwrap();
        let r = geodesic_distance_on(&grid, &[0.2, 0.5], &[0.8, 0.5]);
        assert!(matches!(r, Err(Error::Unreachable)), "{r:?}");
        let ok = geodesic_distance_on(&grid, &[0.2, 0.2], &[0.2, 0.8]).unwrap();
        assert!((ok - 0.6).abs() < 1e-2, "{ok}");
    }

    #[test]
    fn anisotropic_constant_metric_distance() {
        // g = diag(4, 1): d((0,0),(a,b)) = sqrt(4a² + b²)
        let l = Lattice::new(&[-1.0, -1.0], &[1.0, 1.0], &[8, 8]).unwrap();
        let g = TensorGrid::from_fn(l, |_, g| g.copy_from_slice(&[4.0, 0.0, 0.0, 1.0])).unwrap();
        let chart = MetricChart::new(2, BoxDomain::cube(2, 1.0), MetricKind::GeneralGrid(Arc::new(g)), 1.0).unwrap();
        let grid = GridDomain::uniform(&chart, 96).unwrap();
        let d = geodesic_distance_on(&grid, &[0.0, 0.0], &[0.6, 0.3]).unwrap();
        let exact = (4.0f64 * 0.36 + 0.09).sqrt();
        assert!((d - exact).abs() / exact < 2e-2, "{d} vs {exact}");
    }

    #[test]
    fn wide_stencil_sizes() {
        assert_eq!(wide_stencil(2).len(), 32);
        assert!(wide_stencil(3).iter().all(|v| gcd_all(v) == 1));
    }
}
