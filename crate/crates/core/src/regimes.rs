//! Uniqueness thresholds, contraction certificates and spectral-independence
//! bound right-hand sides.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::gibbs::{GibbsSpec, ModelKind};
use crate::tsaw::{recursion_h, recursion_log, ExtReal};

/// λ_c(k) = k^k/(k−1)^{k+1}, evaluated in log space.
pub fn lambda_c(k: f64) -> Result<f64> {
    if !(k > 1.0) || !k.is_finite() {
        return domain(format!("lambda_c needs k > 1 (got {k})"));
    }
    Ok((k * k.ln() - (k + 1.0) * (k - 1.0).ln()).exp())
}

/// The z > 1 with λ_c(z) = λ, by bisection on (1, 10^6].
pub fn delta_c(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return domain(format!("delta_c needs lambda > 0 (got {lambda})"));
    }
    let (mut lo, mut hi) = (1.0f64, 1e6f64);
    if lambda_c(hi)? > lambda {
        return Err(crate::Error::Convergence(format!(
            "lambda {lambda} is below lambda_c(1e6); no root in the search range"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        // λ_c is decreasing: too large a value means the root lies above mid
        if lambda_c(mid)? > lambda {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }
}

/// U_Ising(z, δ) = [(z−1+δ)/(z+1−δ), (z+1−δ)/(z−1+δ)].
pub fn ising_uniqueness_interval(z: f64, delta: f64) -> Result<Interval> {
    if !(z > 1.0) || !(delta > 0.0 && delta < 1.0) {
        return domain(format!("need z > 1 and 0 < delta < 1 (got z={z}, delta={delta})"));
    }
    Ok(Interval {
        lo: (z - 1.0 + delta) / (z + 1.0 - delta),
        hi: (z + 1.0 - delta) / (z - 1.0 + delta),
    })
}

/// sup |h| over the log-ratios attainable on a tree with maximum degree
/// `max_degree`. For β > 0 this is the global maximum at e^x = √(γ/β); for
/// β = 0, |h| is increasing and the largest attainable log-ratio is used.
pub fn sup_abs_h(spec: &GibbsSpec, max_degree: usize) -> f64 {
    let (b, g, l) = (spec.beta(), spec.gamma(), spec.lambda());
    if b * g == 1.0 {
        return 0.0;
    }
    if b > 0.0 {
        let r = (b * g).sqrt();
        return (1.0 - r).abs() / (1.0 + r);
    }
    let d = if g < 1.0 { max_degree.saturating_sub(1) } else { 0 };
    let x = l.ln() - d as f64 * g.ln();
    recursion_h(spec, ExtReal::Finite(x)).abs()
}

/// Grid maximum of |h| over `points` evenly spaced x in [lo, hi].
pub fn sup_abs_h_grid(spec: &GibbsSpec, lo: f64, hi: f64, points: usize) -> f64 {
    let steps = points.max(2) - 1;
    (0..=steps)
        .map(|i| lo + (hi - lo) * i as f64 / steps as f64)
        .map(|x| recursion_h(spec, ExtReal::Finite(x)).abs())
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Threshold {
    Scalar(f64),
    Interval(Interval),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeVerdict {
    pub in_regime: bool,
    /// `None` when every parameter value qualifies.
    pub threshold: Option<Threshold>,
    /// Nonnegative exactly when `in_regime`.
    pub margin: f64,
    pub bound_rhs: Option<f64>,
    /// The quantity compared against the threshold.
    pub statistic: f64,
    pub criterion: String,
}

/// δ-contraction: sup |h| ≤ δ.
pub fn check_delta_contraction(spec: &GibbsSpec, max_degree: usize, delta: f64) -> Result<RegimeVerdict> {
    if max_degree < 2 {
        return domain(format!("delta-contraction check needs max degree >= 2 (got {max_degree})"));
    }
    let sup = sup_abs_h(spec, max_degree);
    let margin = delta - sup;
    Ok(RegimeVerdict {
        in_regime: margin >= 0.0,
        threshold: Some(Threshold::Scalar(delta)),
        margin,
        bound_rhs: None,
        statistic: sup,
        criterion: "delta_contraction".into(),
    })
}

/// χ(y) = √(e^y/(1+e^y)).
pub fn hc_potential_chi(y: f64) -> f64 {
    (1.0 / (1.0 + (-y).exp())).sqrt()
}

/// ψ(y) = ½·√(1/(y(1+y))) for y > 0.
pub fn hc_potential_psi(y: f64) -> Result<f64> {
    if !(y > 0.0) {
        return domain(format!("psi needs y > 0 (got {y})"));
    }
    Ok(0.5 * (1.0 / (y * (1.0 + y))).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialParams {
    pub s: f64,
    pub delta: f64,
    pub c: f64,
}

/// (s, 1/Δc(λ), λ/(1+λ)) with 1/s = 1 − ((Δc−1)/2)·ln(1 + 1/(Δc−1)).
pub fn hc_potential_params(lambda: f64) -> Result<PotentialParams> {
    let dc = delta_c(lambda)?;
    let t = dc - 1.0;
    let inv_s = 1.0 - 0.5 * t * (1.0 / t).ln_1p();
    Ok(PotentialParams {
        s: 1.0 / inv_s,
        delta: 1.0 / dc,
        c: lambda / (1.0 + lambda),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PotentialReport {
    /// max over samples of LHS − RHS; ≤ 0 means no violation.
    pub worst_violation: f64,
    /// max of χ(y₂)|h(y₁)|/χ(y₁).
    pub boundedness_max: f64,
    pub samples: usize,
    pub d_max: usize,
    pub seed: u64,
}

/// Samples the potential contraction inequality for the hard-core recursion.
/// d is uniform on 1..=d_max, each y_j uniform on [ln λ − 40, ln λ], each m_j
/// unit exponential.
pub fn verify_potential_contraction(
    spec: &GibbsSpec,
    params: &PotentialParams,
    d_max: usize,
    samples: usize,
    seed: u64,
) -> Result<PotentialReport> {
    if spec.kind() != ModelKind::HardCore {
        return domain("potential certificate is defined for the hard-core model");
    }
    if samples == 0 || d_max == 0 {
        return domain("need samples >= 1 and d_max >= 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hi = spec.lambda().ln();
    let lo = hi - 40.0;
    let h = |y: f64| recursion_h(spec, ExtReal::Finite(y)).abs();
    let rate = params.delta.powf(1.0 / params.s);
    let mut worst = f64::NEG_INFINITY;
    let mut bounded = h(hi);
    let mut ys = Vec::with_capacity(d_max);
    let mut ext = Vec::with_capacity(d_max);
    for _ in 0..samples {
        let d = rng.random_range(1..=d_max);
        ys.clear();
        ext.clear();
        let mut sum = 0.0;
        let mut norm_s = 0.0;
        for _ in 0..d {
            let y = rng.random_range(lo..=hi);
            let m: f64 = -(1.0 - rng.random::<f64>()).ln();
            sum += h(y) / hc_potential_chi(y) * m;
            norm_s += m.powf(params.s);
            ys.push(y);
            ext.push(ExtReal::Finite(y));
        }
        let top = recursion_log(spec, &ext).as_f64();
        let lhs = hc_potential_chi(top) * sum;
        let rhs = rate * norm_s.powf(1.0 / params.s);
        worst = worst.max(lhs - rhs);
        let (y1, y2) = (ys[0], rng.random_range(lo..=hi));
        bounded = bounded.max(hc_potential_chi(y2) * h(y1) / hc_potential_chi(y1));
    }
    Ok(PotentialReport {
        worst_violation: worst,
        boundedness_max: bounded,
        samples,
        d_max,
        seed,
    })
}

/// Which spectral-independence bound to evaluate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SiBound {
    /// δ-contraction with δ = (1−ε)/ϱ: ρ(I) ≤ 1/ε.
    Contraction { epsilon: f64 },
    /// (s,δ,c)-potential: ρ(I) ≤ 1 + ζ(1−(1−ε)^s)^{-1}(Δ/ϱ)^{1−1/s}.
    Potential {
        epsilon: f64,
        zeta: f64,
        s: f64,
        max_degree: f64,
        rho: f64,
    },
}

pub fn si_bound_rhs(kind: SiBound) -> Result<f64> {
    let eps_ok = |e: f64| e > 0.0 && e < 1.0;
    match kind {
        SiBound::Contraction { epsilon } => {
            if !eps_ok(epsilon) {
                return domain(format!("need 0 < epsilon < 1 (got {epsilon})"));
            }
            Ok(1.0 / epsilon)
        }
        SiBound::Potential {
            epsilon,
            zeta,
            s,
            max_degree,
            rho,
        } => {
            if !eps_ok(epsilon) || !(rho > 1.0) || !(s >= 1.0) || !(zeta > 0.0) || !(max_degree > 1.0) {
                return domain("need 0<epsilon<1, rho>1, s>=1, zeta>0, max_degree>1");
            }
            let amplification = 1.0 / (1.0 - (1.0 - epsilon).powf(s));
            Ok(1.0 + zeta * amplification * (max_degree / rho).powf(1.0 - 1.0 / s))
        }
    }
}

/// Verdict for the supplied parameters against a spectral quantity ϱ
/// (adjacency radius, non-backtracking root norm or connective constant).
/// Hard-core uses λ < λ_c(ϱ), Ising uses β inside the open uniqueness
/// interval, and other parameters use sup|h| < 1/ϱ.
pub fn regime_verdict(spec: &GibbsSpec, rho: f64, max_degree: usize, criterion: &str) -> Result<RegimeVerdict> {
    let criterion = criterion.to_string();
    if !(rho > 1.0) {
        return Ok(RegimeVerdict {
            in_regime: true,
            threshold: None,
            margin: f64::INFINITY,
            bound_rhs: None,
            statistic: rho,
            criterion,
        });
    }
    let dmax = max_degree as f64;
    match spec.kind() {
        ModelKind::HardCore => {
            let lc = lambda_c(rho)?;
            let lambda = spec.lambda();
            let margin = lc - lambda;
            let bound_rhs = if margin > 0.0 && dmax > 1.0 {
                let p = hc_potential_params(lambda)?;
                si_bound_rhs(SiBound::Potential {
                    epsilon: 1.0 - lambda / lc,
                    zeta: p.c * rho,
                    s: p.s,
                    max_degree: dmax,
                    rho,
                })
                .ok()
            } else {
                None
            };
            Ok(RegimeVerdict {
                in_regime: margin > 0.0,
                threshold: Some(Threshold::Scalar(lc)),
                margin,
                bound_rhs,
                statistic: lambda,
                criterion,
            })
        }
        ModelKind::Ising => {
            let beta = spec.beta();
            let interval = Interval {
                lo: (rho - 1.0) / (rho + 1.0),
                hi: (rho + 1.0) / (rho - 1.0),
            };
            let margin = (beta - interval.lo).min(interval.hi - beta);
            let eps = 1.0 - rho * sup_abs_h(spec, max_degree);
            Ok(RegimeVerdict {
                in_regime: margin > 0.0,
                threshold: Some(Threshold::Interval(interval)),
                margin,
                bound_rhs: si_bound_rhs(SiBound::Contraction { epsilon: eps }).ok(),
                statistic: beta,
                criterion,
            })
        }
        ModelKind::General => {
            let sup = sup_abs_h(spec, max_degree);
            let margin = 1.0 / rho - sup;
            Ok(RegimeVerdict {
                in_regime: margin > 0.0,
                threshold: Some(Threshold::Scalar(1.0 / rho)),
                margin,
                bound_rhs: si_bound_rhs(SiBound::Contraction {
                    epsilon: 1.0 - rho * sup,
                })
                .ok(),
                statistic: sup,
                criterion,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_c_examples() {
        assert!((lambda_c(2.0).unwrap() - 4.0).abs() < 1e-12);
        assert!((lambda_c(3.0).unwrap() - 27.0 / 16.0).abs() < 1e-12);
        assert!(lambda_c(2.0).unwrap() > lambda_c(3.0).unwrap());
        assert!(lambda_c(1.0).is_err());
        let grid: Vec<f64> = (0..=80).map(|i| lambda_c(2.0 + 0.1 * i as f64).unwrap()).collect();
        assert!(grid.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn delta_c_examples() {
        assert!((delta_c(4.0).unwrap() - 2.0).abs() < 1e-10);
        assert!((delta_c(27.0 / 16.0).unwrap() - 3.0).abs() < 1e-9);
        for z in [2.0, 2.5, 5.0] {
            assert!((delta_c(lambda_c(z).unwrap()).unwrap() - z).abs() < 1e-9);
        }
        assert!(delta_c(0.0).is_err());
    }

    #[test]
    fn ising_interval_examples() {
        let u = ising_uniqueness_interval(2.0, 1e-12).unwrap();
        assert!((u.lo - 1.0 / 3.0).abs() < 1e-9 && (u.hi - 3.0).abs() < 1e-9);
        let u = ising_uniqueness_interval(3.7, 0.3).unwrap();
        assert!((u.lo * u.hi - 1.0).abs() < 1e-12);
        let wide = ising_uniqueness_interval(2.0, 0.2).unwrap();
        let narrow = ising_uniqueness_interval(3.0, 0.2).unwrap();
        assert!(narrow.is_subset_of(&wide));
        assert!(ising_uniqueness_interval(1.0, 0.5).is_err());
        assert!(ising_uniqueness_interval(2.0, 1.0).is_err());
    }

    #[test]
    fn contraction_examples() {
        let v = check_delta_contraction(&GibbsSpec::ising(1.0, 0.7).unwrap(), 3, 0.01).unwrap();
        assert!(v.in_regime && v.statistic == 0.0);
        let beta = 0.4;
        let d = (1.0f64 - beta).abs() / (1.0 + beta);
        let v = check_delta_contraction(&GibbsSpec::ising(beta, 1.0).unwrap(), 3, d).unwrap();
        assert_eq!(v.margin, 0.0);
        assert!(v.in_regime);
        assert!(check_delta_contraction(&GibbsSpec::ising(beta, 1.0).unwrap(), 1, d).is_err());
    }

    #[test]
    fn closed_form_sup_matches_grid() {
        let specs = [
            GibbsSpec::ising(0.3, 1.0).unwrap(),
            GibbsSpec::ising(2.5, 0.2).unwrap(),
            GibbsSpec::new(0.2, 3.0, 1.4).unwrap(),
            GibbsSpec::new(0.5, 0.8, 0.6).unwrap(),
        ];
        for s in specs {
            let closed = sup_abs_h(&s, 4);
            let grid = sup_abs_h_grid(&s, -40.0, 40.0, 10_000);
            assert!(grid <= closed + 1e-12);
            assert!(closed - grid < 1e-4, "{closed} vs {grid}");
        }
        let hc = GibbsSpec::hard_core(1.5).unwrap();
        assert!((sup_abs_h(&hc, 3) - 1.5 / 2.5).abs() < 1e-15);
    }

    #[test]
    fn ising_sup_inside_uniqueness_interval() {
        for r in [1.5, 2.0, 3.0, 5.5] {
            for eps in [0.1, 0.2, 0.5, 0.9] {
                let u = ising_uniqueness_interval(r, eps).unwrap();
                for i in 0..=20 {
                    let beta = u.lo + (u.hi - u.lo) * i as f64 / 20.0;
                    let s = GibbsSpec::ising(beta, 1.0).unwrap();
                    assert!(sup_abs_h(&s, 3) <= (1.0 - eps) / r + 1e-12);
                }
            }
        }
    }

    #[test]
    fn potential_function_examples() {
        assert!((hc_potential_chi(0.0) - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((hc_potential_chi(60.0) - 1.0).abs() < 1e-12);
        assert!((hc_potential_psi(1.0).unwrap() - 1.0 / (2.0 * 2f64.sqrt())).abs() < 1e-15);
        assert!(hc_potential_psi(0.0).is_err());
        let p = hc_potential_params(4.0).unwrap();
        assert!((1.0 / p.s - (1.0 - 0.5 * 2f64.ln())).abs() < 1e-9);
        assert!((p.delta - 0.5).abs() < 1e-10);
        assert!((p.c - 0.8).abs() < 1e-15);
        for l in [0.01, 0.5, 1.0, 10.0, 100.0] {
            assert!(hc_potential_params(l).unwrap().s >= 1.0);
        }
    }

    #[test]
    fn potential_contraction_holds() {
        let lc3 = lambda_c(3.0).unwrap();
        for l in [0.5, 1.0, 2.0, 0.9 * lc3] {
            let spec = GibbsSpec::hard_core(l).unwrap();
            let p = hc_potential_params(l).unwrap();
            let r = verify_potential_contraction(&spec, &p, 6, 2000, 7).unwrap();
            assert!(r.worst_violation <= 1e-9, "lambda {l}: {}", r.worst_violation);
            assert!(r.boundedness_max <= l / (1.0 + l) + 1e-9);
        }
        let ising = GibbsSpec::ising(0.5, 1.0).unwrap();
        let p = hc_potential_params(1.0).unwrap();
        assert!(verify_potential_contraction(&ising, &p, 3, 10, 0).is_err());
    }

    #[test]
    fn si_bound_examples() {
        assert_eq!(si_bound_rhs(SiBound::Contraction { epsilon: 0.5 }).unwrap(), 2.0);
        let (eps, zeta) = (0.3, 1.7);
        let v = si_bound_rhs(SiBound::Potential {
            epsilon: eps,
            zeta,
            s: 1.0,
            max_degree: 4.0,
            rho: 2.0,
        })
        .unwrap();
        assert!((v - (1.0 + zeta / eps)).abs() < 1e-12);
        assert!(si_bound_rhs(SiBound::Contraction { epsilon: 0.9 }).unwrap() < 2.0);
        assert!(si_bound_rhs(SiBound::Contraction { epsilon: 1.0 }).is_err());
    }

    #[test]
    fn verdict_examples() {
        let v = regime_verdict(&GibbsSpec::hard_core(0.9).unwrap(), 2.0, 2, "adjacency").unwrap();
        assert!(v.in_regime);
        assert_eq!(v.threshold, Some(Threshold::Scalar(lambda_c(2.0).unwrap())));
        let v = regime_verdict(&GibbsSpec::ising(1.0, 2.0).unwrap(), 7.0, 8, "adjacency").unwrap();
        assert!(v.in_regime);
        let v = regime_verdict(&GibbsSpec::hard_core(5.0).unwrap(), 2.0, 2, "adjacency").unwrap();
        assert!(!v.in_regime && v.margin < 0.0);
        let v = regime_verdict(&GibbsSpec::hard_core(50.0).unwrap(), 1.0, 1, "adjacency").unwrap();
        assert!(v.in_regime && v.threshold.is_none());
    }
}
