//! Small numerical kernels shared by every module: deterministic summation,
//! Gauss–Legendre panels and sphere measures.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Pairwise (cascade) summation. The reduction tree depends only on the
/// slice length, so results are reproducible regardless of threading.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Surface area of the unit sphere S^{n-1} in R^n (so `omega(2) = 2π`, `omega(3) = 4π`).
pub fn unit_sphere_area(n: usize) -> f64 {
    assert!(n >= 1);
    // omega_{k} = 2π/(k-1) * omega_{k-2} in terms of the ambient dimension k.
    match n {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI / (n as f64 - 2.0) * unit_sphere_area(n - 2),
    }
}

/// Volume of the unit ball in R^n.
pub fn unit_ball_volume(n: usize) -> f64 {
    unit_sphere_area(n) / n as f64
}

/// Gauss–Legendre rule of the given order on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let n = order as f64;
        for i in 0..order.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(order, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Shared 16-point rule.
    pub fn default_rule() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(16))
    }

    /// Integrates `f` over [a, b] with one application of the rule.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Composite Gauss–Legendre on `panels` equal subintervals of [a, b].
pub fn integrate<F: FnMut(f64) -> f64>(a: f64, b: f64, panels: usize, mut f: F) -> f64 {
    let rule = GaussLegendre::default_rule();
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let parts: Vec<f64> = (0..panels)
        .map(|k| {
            let lo = a + k as f64 * h;
            rule.integrate(lo, lo + h, &mut f)
        })
        .collect();
    pairwise_sum(&parts)
}

/// Composite Gauss–Legendre on panels equally spaced in `log t` over [a, b],
/// for radial integrands that vary on every scale. Requires `0 < a < b`.
pub fn integrate_log<F: FnMut(f64) -> f64>(a: f64, b: f64, panels: usize, mut f: F) -> f64 {
    assert!(a > 0.0 && b > a, "integrate_log needs 0 < a < b");
    let (la, lb) = (a.ln(), b.ln());
    integrate(la, lb, panels, |u| {
        let t = u.exp();
        f(t) * t
    })
}

/// Panel count giving roughly `per_decade` panels per factor of ten.
pub fn log_panels(a: f64, b: f64, per_decade: usize) -> usize {
    let decades = (b / a).log10().abs();
    ((decades * per_decade as f64).ceil() as usize).max(per_decade.min(4)).max(1)
}

/// Fast `x^p` for the exponents that dominate the solver (1, 2, 3, 1/2, 3/2).
#[derive(Debug, Clone, Copy)]
pub enum Power {
    One,
    Square,
    Cube,
    Sqrt,
    ThreeHalves,
    General(f64),
}

impl Power {
    pub fn new(p: f64) -> Self {
        const EPS: f64 = 1e-15;
        if (p - 1.0).abs() < EPS {
            Power::One
        } else if (p - 2.0).abs() < EPS {
            Power::Square
        } else if (p - 3.0).abs() < EPS {
            Power::Cube
        } else if (p - 0.5).abs() < EPS {
            Power::Sqrt
        } else if (p - 1.5).abs() < EPS {
            Power::ThreeHalves
        } else {
            Power::General(p)
        }
    }

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Power::One => x,
            Power::Square => x * x,
            Power::Cube => x * x * x,
            Power::Sqrt => x.sqrt(),
            Power::ThreeHalves => x * x.sqrt(),
            Power::General(p) => x.powf(p),
        }
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return 0.0;
    }
    let mx = xs[..n].iter().sum::<f64>() / n as f64;
    let my = ys[..n].iter().sum::<f64>() / n as f64;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for i in 0..n {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Geometric ladder `start, start*ratio, ...` with `rungs` entries.
pub fn geometric_ladder(start: f64, ratio: f64, rungs: usize) -> Vec<f64> {
    (0..rungs).map(|k| start * ratio.powi(k as i32)).collect()
}

#[inline]
pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[inline]
pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
