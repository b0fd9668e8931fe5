//! Closed-form evaluation of the capacity bounds and their auxiliary
//! quantities: the per-model capacity bounds, the per-cell route maxima, the
//! Chernoff tails, the balls-in-urns concentration bound, and the
//! noise-limited upper-bound proxy.
//!
//! All logarithms are natural except inside the rate function, which carries
//! its own `log 2` conversion. The characteristic constants of the scheme
//! prefactors (676, 2700, 338, 648) are fixed by the constructions and are
//! not tightened here.

// Validation uses negated comparisons so NaN parameters fail closed.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::channel::{gamma_min, ChannelParams, FadingModel};
use crate::error::{Error, Result};
use crate::traffic::{Model, NetworkInstance, Role};
use crate::{ln2, real, Real};

/// The case split of the asymmetric and hybrid bounds diverges at `d = 1/2`;
/// evaluation is refused inside this guard band.
pub const REGIME_GUARD: f64 = 0.05;

fn check_regime<T: Real>(d: T) -> Result<()> {
    let d = d.to_f64().unwrap_or(f64::NAN);
    if !(0.0 < d && d < 1.0) {
        return Err(Error::invalid(format!("exponent d must lie in (0, 1), got {d}")));
    }
    // small slack so |d - 1/2| = guard itself stays admissible in floating point
    if (d - 0.5).abs() + 1e-12 < REGIME_GUARD {
        return Err(Error::RegimeBoundary { d, guard: REGIME_GUARD });
    }
    Ok(())
}

fn check_d<T: Real>(d: T) -> Result<()> {
    let d = d.to_f64().unwrap_or(f64::NAN);
    if !(0.0 < d && d < 1.0) {
        return Err(Error::invalid(format!("exponent d must lie in (0, 1), got {d}")));
    }
    Ok(())
}

fn check_n<T: Real>(n: T) -> Result<()> {
    if !(n > T::one()) {
        return Err(Error::invalid("bound evaluation needs n > 1"));
    }
    Ok(())
}

/// Evaluated lower/upper bound values for one `(model, n, d, params)` tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport<T> {
    pub model: Model,
    pub n: T,
    pub d: T,
    pub lower: T,
    pub upper: Option<T>,
    /// Named intermediate values (gamma_min, r_max, prefactors).
    pub components: BTreeMap<String, T>,
}

impl<T: Real> BoundReport<T> {
    fn push(&mut self, name: &str, value: T) {
        self.components.insert(name.to_string(), value);
    }

    /// One CSV row: `model,n,d,lower,upper,<components sorted by name>`.
    pub fn csv_row(&self) -> String {
        let mut fields = vec![
            self.model.to_string(),
            format!("{}", self.n),
            format!("{}", self.d),
            format!("{}", self.lower),
            self.upper.map(|u| format!("{u}")).unwrap_or_default(),
        ];
        fields.extend(self.components.values().map(|v| format!("{v}")));
        fields.join(",")
    }

    pub fn csv_header(&self) -> String {
        let mut fields = vec!["model", "n", "d", "lower", "upper"];
        fields.extend(self.components.keys().map(|k| k.as_str()));
        fields.join(",")
    }
}

/// Common prefactor of the constructive lower bounds:
/// `[(3a-6)/(3a-5)] * W q f_m 5^{-a/2} / (denom * Gamma * ln 2)`.
fn scheme_prefactor<T: Real>(denom: f64, model: &FadingModel<T>, p: &ChannelParams<T>) -> T {
    let a = p.alpha;
    let three = real::<T>(3.0);
    let bracket = (three * a - real(6.0)) / (three * a - real(5.0));
    bracket * p.w * model.q * model.f_m * real::<T>(5.0).powf(-a / real(2.0))
        / (real::<T>(denom) * p.gamma_gap * ln2())
}

/// Noise-limited upper bound shared by the asymmetric and cluster models:
/// `(4 a W / ln 2) n^d ln n`.
fn noise_limited_upper<T: Real>(n: T, d: T, p: &ChannelParams<T>) -> T {
    real::<T>(4.0) * p.alpha * p.w / ln2() * n.powf(d) * n.ln()
}

/// Asymmetric networks: both capacity bounds.
pub fn asymmetric_bounds<T: Real>(
    n: T,
    d: T,
    params: &ChannelParams<T>,
    model: &FadingModel<T>,
) -> Result<BoundReport<T>> {
    check_n(n)?;
    check_regime(d)?;
    let pref = scheme_prefactor(676.0, model, params);
    let branch = if d > real(0.5) {
        real::<T>(2.0) / real(27.0) * n.sqrt() / n.ln().powf(real(1.5))
    } else {
        (T::one() - real::<T>(2.0) * d) / real(5.0) * n.powf(d) / n.ln()
    };
    let mut report = BoundReport {
        model: Model::Asymmetric,
        n,
        d,
        lower: pref * branch,
        upper: Some(noise_limited_upper(n, d, params)),
        components: BTreeMap::new(),
    };
    report.push("prefactor", pref);
    report.push("gamma_min", gamma_min(n, model, params)?);
    report.push("r_max", asymmetric_route_cap(n, d)?);
    Ok(report)
}

/// Multicast networks: the constructive lower bound.
pub fn multicast_lower<T: Real>(
    n: T,
    d: T,
    params: &ChannelParams<T>,
    model: &FadingModel<T>,
) -> Result<T> {
    check_n(n)?;
    check_d(d)?;
    let pref = scheme_prefactor(2700.0, model, params);
    let half = real::<T>(0.5);
    Ok(pref * n.powf((d + T::one()) * half) / n.ln().powf(T::one() + d * half))
}

/// Cluster networks: both capacity bounds.
pub fn cluster_bounds<T: Real>(
    n: T,
    d: T,
    params: &ChannelParams<T>,
    model: &FadingModel<T>,
) -> Result<BoundReport<T>> {
    check_n(n)?;
    check_d(d)?;
    let pref = scheme_prefactor(338.0, model, params);
    let lower = pref * n.powf(d) / (n.ln() * n.ln());
    let mut report = BoundReport {
        model: Model::Cluster,
        n,
        d,
        lower,
        upper: Some(noise_limited_upper(n, d, params)),
        components: BTreeMap::new(),
    };
    report.push("prefactor", pref);
    report.push("gamma_min", gamma_min(n, model, params)?);
    Ok(report)
}

/// Hybrid networks: the two lower bounds (infrastructure-routed, ad hoc).
pub fn hybrid_lowers<T: Real>(
    n: T,
    d: T,
    params: &ChannelParams<T>,
    model: &FadingModel<T>,
) -> Result<(T, T)> {
    check_n(n)?;
    check_d(d)?;
    let infra = cluster_bounds(n, d, params, model)?.lower / real(2.0);
    let a = params.alpha;
    let three = real::<T>(3.0);
    let bracket = real::<T>(10.0).powf(-(a + three) / real(2.0)) / real(648.0)
        * ((three * a - real(6.0)) / (three * a - real(5.0)))
        * (params.w * model.q * model.f_m / params.gamma_gap);
    let adhoc = bracket * n.sqrt() / n.ln().powf(real(1.5));
    Ok((infra, adhoc))
}

/// Uniform w.h.p. bound on routes crossing any cell in the asymmetric scheme.
pub fn asymmetric_route_cap<T: Real>(n: T, d: T) -> Result<T> {
    check_n(n)?;
    check_regime(d)?;
    Ok(if d > real(0.5) {
        real::<T>(13.5) * (n * n.ln()).sqrt()
    } else {
        real::<T>(5.0) / (T::one() - real::<T>(2.0) * d) * n.powf(T::one() - d)
    })
}

/// The multicast analogue: `4 (n ln n)^{(1+d)/2}`.
pub fn multicast_route_cap<T: Real>(n: T, d: T) -> Result<T> {
    check_n(n)?;
    check_d(d)?;
    Ok(real::<T>(4.0) * (n * n.ln()).powf((T::one() + d) / real(2.0)))
}

/// `f(eps) = (1 + eps) ln(1 + eps) - eps`, the exponent of the upper Chernoff
/// tail.
pub fn chernoff_f<T: Real>(eps: T) -> T {
    (T::one() + eps) * (T::one() + eps).ln() - eps
}

/// Chernoff tails for a binomial with `k` trials and success probability `p`:
/// `(P[X < (1-eps) k p] bound, P[X > (1+eps) k p] bound)`.
pub fn chernoff_tails<T: Real>(k: T, p: T, eps: T) -> Result<(T, T)> {
    if !(k >= T::one()) {
        return Err(Error::invalid("Chernoff bound needs k >= 1"));
    }
    if !(p > T::zero() && p <= T::one()) {
        return Err(Error::invalid("Chernoff bound needs p in (0, 1]"));
    }
    if !(eps > T::zero()) {
        return Err(Error::invalid("Chernoff bound needs eps > 0"));
    }
    let kp = k * p;
    let lower = (-kp * eps * eps / real(2.0)).exp();
    let upper = (-kp * chernoff_f(eps)).exp();
    Ok((lower, upper))
}

/// Balls-in-urns concentration: `P[all urns within (1 +- eps) n/m] >=
/// 1 - 2m exp(-delta n/m)` with `delta = min(eps^2/2, f(eps))`.
///
/// The union-bound chain forces the smaller exponent, hence `min`; the
/// bound may be negative (vacuous) for small `n/m`.
pub fn urn_concentration_bound<T: Real>(n: usize, m: usize, eps: T) -> Result<T> {
    if n < 1 || m < 1 {
        return Err(Error::invalid("urn_concentration_bound needs n, m >= 1"));
    }
    if !(eps > T::zero()) {
        return Err(Error::invalid("urn_concentration_bound needs eps > 0"));
    }
    let delta = (eps * eps / real(2.0)).min(chernoff_f(eps));
    let ratio = real::<T>(n as f64) / real(m as f64);
    Ok(T::one() - real::<T>(2.0) * real::<T>(m as f64) * (-delta * ratio).exp())
}

/// The pre-simplification noise-limited throughput proxy and the d_min tail
/// bound it rests on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpperProxy<T> {
    /// Minimum distance over all source-destination pairs.
    pub d_min: T,
    /// `T(n) = m W log2(1 + K P0 d_min^{-a} (3/q) ln n / (eta Gamma))`.
    pub t_n: T,
}

/// Evaluates the proxy on an asymmetric or cluster instance. Requires
/// `eta > 0` (the argument is noise-limited).
pub fn upper_proxy_asymmetric<T: Real>(inst: &NetworkInstance<T>) -> Result<UpperProxy<T>> {
    if !(inst.params.eta > T::zero()) {
        return Err(Error::NoiselessUpperBound);
    }
    let (src_role, dst_role) = match inst.model {
        Model::Asymmetric => (Role::Source, Role::Destination),
        Model::Cluster => (Role::Client, Role::ClusterHead),
        m => {
            return Err(Error::invalid(format!(
                "upper proxy applies to asymmetric or cluster instances, got {m}"
            )))
        }
    };
    let sources: Vec<usize> = inst.nodes_with_role(src_role).collect();
    let sinks: Vec<usize> = inst.nodes_with_role(dst_role).collect();
    let mut d_min = T::infinity();
    for &i in &sources {
        for &j in &sinks {
            let d = inst.positions[i].distance(&inst.positions[j]);
            if d < d_min {
                d_min = d;
            }
        }
    }
    let p = &inst.params;
    let n = real::<T>(inst.n as f64);
    let numer = p.k * p.p0 * d_min.powf(-p.alpha) * (real::<T>(3.0) / inst.fading.model.q) * n.ln();
    let m = real::<T>(inst.m as f64);
    let t_n = m * p.w * (T::one() + numer / (p.eta * p.gamma_gap)).ln() / ln2();
    Ok(UpperProxy { d_min, t_n })
}

/// The d_min tail bound of the upper-bound argument: `P[d_min <= x] <= n m pi x^2`.
pub fn min_distance_tail<T: Real>(n: usize, m: usize, x: T) -> T {
    real::<T>(n as f64) * real::<T>(m as f64) * real::<T>(std::f64::consts::PI) * x * x
}

/// Finds the exponent at which the two hybrid lower bounds cross at a fixed
/// `n`, by bisection over `d`. Below the crossover the ad hoc form dominates.
pub fn hybrid_crossover_d<T: Real>(
    n: T,
    params: &ChannelParams<T>,
    model: &FadingModel<T>,
) -> Result<T> {
    check_n(n)?;
    let diff = |d: T| -> Result<T> {
        let (infra, adhoc) = hybrid_lowers(n, d, params, model)?;
        Ok(infra - adhoc)
    };
    let mut lo = real::<T>(1e-6);
    let mut hi = T::one() - real::<T>(1e-6);
    if diff(lo)? > T::zero() || diff(hi)? < T::zero() {
        return Err(Error::invalid("hybrid bounds do not cross inside (0, 1)"));
    }
    for _ in 0..200 {
        let mid = (lo + hi) / real(2.0);
        if diff(mid)? < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) / real(2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_model() -> FadingModel<f64> {
        FadingModel::trivial()
    }

    fn unit_params(alpha: f64) -> ChannelParams<f64> {
        ChannelParams::new(1.0, alpha, 1e-6, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn asymmetric_bounds_match_stepwise_evaluation() {
        // (6/7) * (0.04 / (676 ln 2)) * (0.1) * (10 / ln 1e4)
        let r = asymmetric_bounds(1e4, 0.25, &unit_params(4.0), &unit_model()).unwrap();
        assert_relative_eq!(r.lower, 7.944_477_962_729_456e-6, max_relative = 1e-12);
        assert_relative_eq!(r.upper.unwrap(), 2_126.033_980_727_912, max_relative = 1e-12);

        // doubling W doubles both bounds
        let mut p2 = unit_params(4.0);
        p2.w = 2.0;
        let r2 = asymmetric_bounds(1e4, 0.25, &p2, &unit_model()).unwrap();
        assert_relative_eq!(r2.lower, 2.0 * r.lower, max_relative = 1e-14);
        assert_relative_eq!(r2.upper.unwrap(), 2.0 * r.upper.unwrap(), max_relative = 1e-14);
    }

    #[test]
    fn regime_guard_is_enforced() {
        let p = unit_params(4.0);
        let m = unit_model();
        assert!(matches!(
            asymmetric_bounds(1e4, 0.5, &p, &m),
            Err(Error::RegimeBoundary { .. })
        ));
        assert!(asymmetric_bounds(1e4, 0.46, &p, &m).is_err());
        assert!(asymmetric_bounds(1e4, 0.45, &p, &m).is_ok());
        assert!(asymmetric_bounds(1e4, 0.55, &p, &m).is_ok());
        assert!(asymmetric_route_cap(1e4, 0.52).is_err());
        assert!(asymmetric_bounds(1e4, 1.2, &p, &m).is_err());
    }

    #[test]
    fn multicast_lower_scaling_properties() {
        let p = unit_params(4.0);
        let m = unit_model();
        let v = multicast_lower(1e4, 0.25, &p, &m).unwrap();
        assert_relative_eq!(v, 4.765_558_843_783_756e-4, max_relative = 1e-12);
        let mut p2 = p;
        p2.w = 2.0;
        assert_relative_eq!(multicast_lower(1e4, 0.25, &p2, &m).unwrap(), 2.0 * v, max_relative = 1e-14);
        // antitone in the SINR gap
        let mut pg = p;
        let mut prev = v;
        for gap in [2.0, 4.0, 8.0] {
            pg.gamma_gap = gap;
            let vg = multicast_lower(1e4, 0.25, &pg, &m).unwrap();
            assert!(vg < prev);
            prev = vg;
        }
    }

    #[test]
    fn cluster_and_hybrid_relations() {
        let p = unit_params(4.0);
        let m = unit_model();
        let r = cluster_bounds(1e4, 0.5, &p, &m).unwrap();
        assert!(r.lower <= r.upper.unwrap());
        let (infra, _adhoc) = hybrid_lowers(1e4, 0.5, &p, &m).unwrap();
        assert_relative_eq!(infra, r.lower / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn rmax_pinned_values() {
        assert_relative_eq!(
            asymmetric_route_cap(1e4, 0.75).unwrap(),
            4_097.053_249_339_895,
            max_relative = 1e-12
        );
        assert_relative_eq!(asymmetric_route_cap(1e4, 0.25).unwrap(), 1e4, max_relative = 1e-12);
        assert_relative_eq!(
            multicast_route_cap(1e4, 0.5).unwrap(),
            21_147.875_809_212,
            max_relative = 1e-12
        );
        // quadrupling n at d = 0.75 roughly doubles r_max (sqrt law, log drift)
        let a = asymmetric_route_cap(1e4, 0.75).unwrap();
        let b = asymmetric_route_cap(4e4, 0.75).unwrap();
        assert!(b / a > 2.0 && b / a < 2.2, "ratio {}", b / a);
        // tree_route_cap monotone in d, and d -> 1 recovers 4 n ln n
        assert!(multicast_route_cap(1e4, 0.6).unwrap() > multicast_route_cap(1e4, 0.4).unwrap());
    }

    #[test]
    fn chernoff_values() {
        assert_relative_eq!(
            chernoff_f(1.0_f64),
            2.0 * std::f64::consts::LN_2 - 1.0,
            max_relative = 1e-14
        );
        let (lo, hi) = chernoff_tails(16.0, 0.5, 0.5).unwrap();
        assert_relative_eq!(lo, (-1.0_f64).exp(), max_relative = 1e-13);
        assert_relative_eq!(hi, (-8.0 * chernoff_f(0.5_f64)).exp(), max_relative = 1e-13);
        // eps -> 0: both bounds -> 1
        let (lo, hi) = chernoff_tails(16.0, 0.5, 1e-9).unwrap();
        assert!(lo > 0.999_999 && hi > 0.999_999);
        assert!(chernoff_tails(0.5, 0.5, 0.5).is_err());
        assert!(chernoff_tails(2.0, 0.0, 0.5).is_err());
    }

    #[test]
    fn urn_concentration_bound_values() {
        // delta(0.5) = min(0.125, f(0.5)) = 0.10819766...; 2m exp(-108.2)
        // underflows against 1 in double precision
        let b = urn_concentration_bound(100_000, 100, 0.5_f64).unwrap();
        assert!(b >= 1.0 - 1e-12, "bound {b}");
        let vacuous = urn_concentration_bound(1000, 100, 0.5_f64).unwrap();
        assert_relative_eq!(vacuous, -66.784_987_350_928_26, max_relative = 1e-10);
        // m = 1: single urn, bound = 1 - 2 exp(-delta n)
        let single = urn_concentration_bound(50, 1, 0.5_f64).unwrap();
        assert_relative_eq!(
            single,
            1.0 - 2.0 * (-0.108_197_662_162_246_58_f64 * 50.0).exp(),
            max_relative = 1e-10
        );
    }

    #[test]
    fn lower_below_upper_on_grid() {
        let m = unit_model();
        for alpha in [3.0, 4.0] {
            let p = unit_params(alpha);
            for d in [0.25, 0.75] {
                for exp in 2..=6 {
                    let n = 10f64.powi(exp);
                    let r1 = asymmetric_bounds(n, d, &p, &m).unwrap();
                    assert!(r1.lower <= r1.upper.unwrap());
                    let r3 = cluster_bounds(n, d, &p, &m).unwrap();
                    assert!(r3.lower <= r3.upper.unwrap());
                }
            }
        }
    }

    #[test]
    fn min_distance_tail_value() {
        assert_relative_eq!(
            min_distance_tail(2, 1, 0.1_f64),
            0.062_831_853_071_795_87,
            max_relative = 1e-12
        );
    }

    #[test]
    fn upper_proxy_on_hand_fixture() {
        use crate::channel::PairFading;
        use crate::geometry::Point;
        use crate::traffic::Role;

        // two sources and one destination at chosen spots: d_min is the
        // smaller of the two source-destination distances (0.3 < 0.5)
        let mk = |eta: f64, spread: f64| NetworkInstance {
            model: Model::Asymmetric,
            d: 0.25,
            n: 2,
            m: 1,
            seed: 0,
            positions: vec![
                Point { x: -0.2, y: 0.0 },
                Point { x: 0.5 * spread - 0.2, y: 0.0 },
                Point { x: 0.3 * spread - 0.2, y: 0.0 },
            ],
            roles: vec![Role::Source, Role::Source, Role::Destination],
            demands: vec![],
            fading: PairFading::new(0, unit_model()),
            params: ChannelParams::new(1.0, 4.0, eta, 1.0, 1.0, 1.0).unwrap(),
        };

        let proxy = upper_proxy_asymmetric(&mk(1e-6, 1.0)).unwrap();
        assert_relative_eq!(proxy.d_min, 0.2, max_relative = 1e-12);

        // shrinking all distances raises the proxy; growing them lowers it
        let tight = upper_proxy_asymmetric(&mk(1e-6, 0.5)).unwrap();
        let loose = upper_proxy_asymmetric(&mk(1e-6, 1.5)).unwrap();
        assert!(tight.t_n > proxy.t_n && proxy.t_n > loose.t_n);

        // the noise-limited argument needs eta > 0
        assert!(matches!(
            upper_proxy_asymmetric(&mk(0.0, 1.0)),
            Err(Error::NoiselessUpperBound)
        ));
    }

    #[test]
    fn hybrid_crossover_bisection() {
        let p = unit_params(4.0);
        let m = unit_model();
        let d_star = hybrid_crossover_d(1e6, &p, &m).unwrap();
        // independent bisection oracle for this n pins d* ~ 0.2212
        assert_relative_eq!(d_star, 0.221_220_104_888_295_3, max_relative = 1e-6);
        // structure: ad hoc dominates below, infrastructure above
        let (i_lo, a_lo) = hybrid_lowers(1e6, d_star - 0.05, &p, &m).unwrap();
        let (i_hi, a_hi) = hybrid_lowers(1e6, d_star + 0.05, &p, &m).unwrap();
        assert!(a_lo > i_lo);
        assert!(i_hi > a_hi);
    }

    #[test]
    fn csv_row_shape() {
        let r = asymmetric_bounds(1e4, 0.25, &unit_params(4.0), &unit_model()).unwrap();
        let header = r.csv_header();
        let row = r.csv_row();
        assert_eq!(header.split(',').count(), row.split(',').count());
        assert!(header.starts_with("model,n,d,lower,upper"));
    }
}
