use crate::error::{ensure, Result};
use crate::numeric::unit_sphere_area;

fn check(n: usize, p: f64, r1: f64, r2: f64) -> Result<()> {
    ensure!(n >= 2, Precondition, "ring oracle needs n >= 2, got {n}");
    if !(p > 1.0 && p.is_finite()) {
        return Err(crate::Error::UnsupportedExponent(p));
    }
    ensure!(
        r1 > 0.0 && r2 > r1 && r2.is_finite(),
        Precondition,
        "ring needs 0 < r1 < r2, got r1 = {r1}, r2 = {r2}"
    );
    Ok(())
}

/// Exponent `a = (1 - n) / (p - 1)` of the extremal radial density `r^a / J`.
pub fn extremal_exponent(n: usize, p: f64) -> f64 {
    (1.0 - n as f64) / (p - 1.0)
}

/// `J = ∫_{r1}^{r2} r^a dr` in closed form.
pub fn extremal_normalizer(n: usize, p: f64, r1: f64, r2: f64) -> Result<f64> {
    check(n, p, r1, r2)?;
    let a = extremal_exponent(n, p);
    Ok(if (a + 1.0).abs() < 1e-12 {
        (r2 / r1).ln()
    } else {
        (r2.powf(a + 1.0) - r1.powf(a + 1.0)) / (a + 1.0)
    })
}

/// Extremal density `ρ(r) = r^a / J` of the spherical ring `r1 < |x| < r2`.
pub fn extremal_density(n: usize, p: f64, r1: f64, r2: f64) -> Result<impl Fn(f64) -> f64> {
    let j = extremal_normalizer(n, p, r1, r2)?;
    let a = extremal_exponent(n, p);
    Ok(move |r: f64| r.powf(a) / j)
}

/// `M_p` of the curves joining the boundary spheres of a Euclidean ring:
/// `ω_{n-1} log(r2/r1)^{1-n}` when `p = n`, else `ω_{n-1} J^{1-p}`.
pub fn annulus_modulus_oracle(n: usize, p: f64, r1: f64, r2: f64) -> Result<f64> {
    check(n, p, r1, r2)?;
    let omega = unit_sphere_area(n);
    if (p - n as f64).abs() < 1e-12 {
        return Ok(omega * (r2 / r1).ln().powf(1.0 - n as f64));
    }
    Ok(omega * extremal_normalizer(n, p, r1, r2)?.powf(1.0 - p))
}
