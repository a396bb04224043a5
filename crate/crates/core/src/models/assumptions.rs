//! Sampling-based estimates of the constants in the structural conditions.
//!
//! Every tuple `(t, x, y, mu, nu)` is drawn from its own counter-based stream,
//! so a report depends only on the model, the sampler settings and the seed.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::CoefficientModel;
use crate::error::{Error, Result};
use crate::measures::{norm, norm_sq, wasserstein_p, weighted_variation_2, ParticleEnsemble};
use crate::rng::{Purpose, StreamFamily};

/// Checkable structural conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    /// Continuity probe: change at step `h / 100` against change at `h`.
    A1,
    /// Local weak monotonicity with the weighted variation distance.
    A2,
    /// Monotonicity with a `phi(x, y)` correction and `W_2` in the measure.
    A2Triple,
    /// Weak coercivity.
    A3,
    /// Growth of drift and diffusion.
    A4,
}

impl Condition {
    pub fn id(self) -> &'static str {
        match self {
            Condition::A1 => "A1",
            Condition::A2 => "A2",
            Condition::A2Triple => "A2'''",
            Condition::A3 => "A3",
            Condition::A4 => "A4",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A1" => Ok(Condition::A1),
            "A2" => Ok(Condition::A2),
            "A2'''" | "A2ppp" | "A2-triple" => Ok(Condition::A2Triple),
            "A3" => Ok(Condition::A3),
            "A4" => Ok(Condition::A4),
            other => Err(Error::UnknownCondition(other.to_string())),
        }
    }
}

/// Where and how tuples are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    /// Radius levels `R`; `x` and `y` are drawn from the ball of radius `R`.
    pub radii: Vec<f64>,
    pub points_per_radius: usize,
    /// Atoms per sampled measure.
    pub ensemble_size: usize,
    /// Atoms are drawn from the ball of this radius.
    pub measure_radius: f64,
    /// Probability that `nu = mu`; otherwise `nu` is `mu` with one atom moved.
    pub same_measure_fraction: f64,
    /// Standard deviation of the atom move.
    pub perturbation: f64,
    /// Probability that `y` is drawn close to `x` rather than independently.
    pub near_diagonal_fraction: f64,
    /// Times are drawn uniformly from `[0, horizon]`.
    pub horizon: f64,
    /// Global constant `C` multiplying the moment terms.
    pub moment_constant: f64,
    /// Required constants above this value count as violations.
    pub cap: f64,
    /// Base step of the continuity probe.
    pub probe_step: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            radii: vec![1.0, 2.0, 5.0, 10.0],
            points_per_radius: 256,
            ensemble_size: 16,
            measure_radius: 1.0,
            same_measure_fraction: 0.5,
            perturbation: 0.1,
            near_diagonal_fraction: 0.5,
            horizon: 1.0,
            moment_constant: 1.0,
            cap: 100.0,
            probe_step: 1e-4,
        }
    }
}

impl SamplerConfig {
    fn validate(&self) -> Result<()> {
        if self.radii.is_empty() || self.radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::param("radii", "need at least one positive finite radius"));
        }
        if self.points_per_radius == 0 || self.ensemble_size == 0 {
            return Err(Error::param("points_per_radius/ensemble_size", "must be positive"));
        }
        for (name, p) in [
            ("same_measure_fraction", self.same_measure_fraction),
            ("near_diagonal_fraction", self.near_diagonal_fraction),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::param(name, "must lie in [0, 1]"));
            }
        }
        if !(self.cap > 0.0) || !(self.probe_step > 0.0) || !(self.measure_radius >= 0.0) {
            return Err(Error::param("cap/probe_step/measure_radius", "must be positive"));
        }
        Ok(())
    }
}

/// A sampled tuple at which no constant within the cap works.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub radius: f64,
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub required: f64,
}

/// Empirical constant at one radius level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusEstimate {
    pub radius: f64,
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub condition: Condition,
    pub samples: usize,
    /// Smallest constant consistent with every sample; infinite when
    /// violations were found.
    pub worst_constant: f64,
    pub per_radius: Vec<RadiusEstimate>,
    pub violations: Vec<Witness>,
}

struct Tuple {
    t: f64,
    x: Vec<f64>,
    y: Vec<f64>,
    mu: ParticleEnsemble,
    nu: ParticleEnsemble,
}

fn ball_point(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let len = norm(&v).max(f64::MIN_POSITIVE);
    let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
    v.iter_mut().for_each(|c| *c *= r / len);
    v
}

fn clamp_to_ball(v: &mut [f64], radius: f64) {
    let len = norm(v);
    if len > radius {
        v.iter_mut().for_each(|c| *c *= radius / len);
    }
}

fn draw_tuple(rng: &mut ChaCha8Rng, dim: usize, radius: f64, cfg: &SamplerConfig) -> Tuple {
    let t = cfg.horizon * rng.random::<f64>();
    let x = ball_point(rng, dim, radius);
    let y = if rng.random::<f64>() < cfg.near_diagonal_fraction {
        let scale = 0.05 * radius;
        let mut y: Vec<f64> = x
            .iter()
            .map(|xi| xi + scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
        clamp_to_ball(&mut y, radius);
        y
    } else {
        ball_point(rng, dim, radius)
    };
    let mut atoms = Vec::with_capacity(cfg.ensemble_size * dim);
    for _ in 0..cfg.ensemble_size {
        atoms.extend(ball_point(rng, dim, cfg.measure_radius));
    }
    let mu = ParticleEnsemble::uniform(dim, atoms.clone()).expect("sampled atoms are finite");
    let nu = if rng.random::<f64>() < cfg.same_measure_fraction {
        mu.clone()
    } else {
        let k = rng.random_range(0..cfg.ensemble_size);
        for c in &mut atoms[k * dim..(k + 1) * dim] {
            *c += cfg.perturbation * rng.sample::<f64, _>(StandardNormal);
        }
        ParticleEnsemble::uniform(dim, atoms).expect("sampled atoms are finite")
    };
    Tuple { t, x, y, mu, nu }
}

fn abs_moment(mu: &ParticleEnsemble, k: f64) -> f64 {
    mu.atoms().map(|(w, x)| w * norm(x).powf(k)).sum()
}

fn diff_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

fn dot_diff(a: &[f64], b: &[f64], x: &[f64], y: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(x.iter().zip(y))
        .map(|((p, q), (xi, yi))| (p - q) * (xi - yi))
        .sum()
}

/// Ratio `lhs / scale` clipped at zero. A vanishing scale with a positive
/// left side needs an infinite constant.
fn required(lhs: f64, scale: f64) -> f64 {
    if lhs.is_nan() || scale.is_nan() {
        f64::INFINITY
    } else if lhs <= 0.0 {
        0.0
    } else if scale <= 0.0 {
        if lhs <= 1e-12 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        lhs / scale
    }
}

fn monotone_lhs(model: &CoefficientModel, tp: &Tuple) -> f64 {
    let fx = model.frame(&tp.mu);
    let fy = model.frame(&tp.nu);
    let (bx, sx) = model.eval(tp.t, &tp.x, &fx);
    let (by, sy) = model.eval(tp.t, &tp.y, &fy);
    2.0 * dot_diff(&bx, &by, &tp.x, &tp.y) + diff_sq(&sx, &sy)
}

fn evaluate(model: &CoefficientModel, cond: Condition, tp: &Tuple, cfg: &SamplerConfig) -> Result<f64> {
    let kappa = model.kappa();
    let c = cfg.moment_constant;
    Ok(match cond {
        Condition::A1 => continuity_ratio(model, tp, cfg),
        Condition::A2 => {
            let lhs = monotone_lhs(model, tp);
            let gap = diff_sq(&tp.x, &tp.y) + weighted_variation_2(&tp.mu, &tp.nu)?;
            let moments = c * (abs_moment(&tp.mu, kappa) + abs_moment(&tp.nu, kappa));
            (required(lhs, gap) - moments).max(0.0)
        }
        Condition::A2Triple => {
            let lhs = monotone_lhs(model, tp);
            let mk = abs_moment(&tp.mu, kappa) + abs_moment(&tp.nu, kappa);
            // Largest admissible phi: C (1 + |x|^kappa + |y|^kappa).
            let phi_room = 1.0 + norm(&tp.x).powf(kappa) + norm(&tp.y).powf(kappa);
            let w2 = wasserstein_p(&tp.mu, &tp.nu, 2.0)?;
            let scale = (1.0 + phi_room + mk) * diff_sq(&tp.x, &tp.y) + (1.0 + mk) * w2 * w2;
            required(lhs, scale)
        }
        Condition::A3 => {
            let frame = model.frame(&tp.mu);
            let (b, s) = model.eval(tp.t, &tp.x, &frame);
            let lhs = 2.0 * b.iter().zip(&tp.x).map(|(p, q)| p * q).sum::<f64>() + norm_sq(&s);
            required(lhs, 1.0 + norm_sq(&tp.x) + abs_moment(&tp.mu, 2.0))
        }
        Condition::A4 => {
            let frame = model.frame(&tp.mu);
            let (b, s) = model.eval(tp.t, &tp.x, &frame);
            let drift = required(
                norm_sq(&b),
                1.0 + norm(&tp.x).powf(kappa) + abs_moment(&tp.mu, kappa),
            );
            let diffusion = required(norm_sq(&s), 1.0 + norm_sq(&tp.x) + abs_moment(&tp.mu, 2.0));
            drift.max(diffusion)
        }
    })
}

/// Change of the coefficients at step `h / 100` relative to the change at `h`,
/// moving `x` towards `y` and `mu` towards `nu` together. Continuous
/// coefficients give ratios near `0.01`; a jump gives ratios near one.
fn continuity_ratio(model: &CoefficientModel, tp: &Tuple, cfg: &SamplerConfig) -> f64 {
    let dim = model.dim();
    let dir_len = norm(&tp.x.iter().zip(&tp.y).map(|(a, b)| b - a).collect::<Vec<_>>());
    let unit: Vec<f64> = if dir_len > 0.0 {
        tp.x.iter().zip(&tp.y).map(|(a, b)| (b - a) / dir_len).collect()
    } else {
        let mut e = vec![0.0; dim];
        e[0] = 1.0;
        e
    };
    let coeffs = |h: f64| {
        let x: Vec<f64> = tp.x.iter().zip(&unit).map(|(a, u)| a + h * u).collect();
        let atoms: Vec<f64> = tp
            .mu
            .states()
            .iter()
            .zip(tp.nu.states())
            .map(|(a, b)| a + h * (b - a))
            .collect();
        let mu = ParticleEnsemble::uniform(dim, atoms).expect("interpolated atoms are finite");
        let (mut b, s) = model.eval(tp.t, &x, &model.frame(&mu));
        b.extend(s);
        b
    };
    let base = coeffs(0.0);
    let big = diff_sq(&coeffs(cfg.probe_step), &base).sqrt();
    let small = diff_sq(&coeffs(cfg.probe_step / 100.0), &base).sqrt();
    let floor = 1e-12 * (1.0 + norm(&base));
    if !small.is_finite() || !big.is_finite() {
        f64::INFINITY
    } else if small <= floor {
        0.0
    } else {
        small / big.max(floor)
    }
}

/// Empirical constant for `condition` on `model`.
///
/// For [`Condition::A1`] the constant is the largest small-to-large change
/// ratio and the cap is `0.5`; for the other conditions it is the smallest
/// constant satisfying the inequality on every tuple, estimated per radius.
pub fn check_assumption(
    model: &CoefficientModel,
    condition: Condition,
    cfg: &SamplerConfig,
    seed: u64,
) -> Result<AssumptionReport> {
    cfg.validate()?;
    let family = StreamFamily::new(seed, Purpose::Assumption);
    let per = cfg.points_per_radius;
    let total = per * cfg.radii.len();
    let cap = if condition == Condition::A1 { 0.5 } else { cfg.cap };
    let outcomes = (0..total)
        .into_par_iter()
        .map(|i| {
            let radius = cfg.radii[i / per];
            let mut rng = family.stream(i as u64);
            let tp = draw_tuple(&mut rng, model.dim(), radius, cfg);
            let value = evaluate(model, condition, &tp, cfg)?;
            Ok((radius, tp, value))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut per_radius: Vec<RadiusEstimate> = cfg
        .radii
        .iter()
        .map(|&radius| RadiusEstimate { radius, constant: 0.0 })
        .collect();
    let mut violations = Vec::new();
    let mut worst = 0.0f64;
    for (i, (radius, tp, value)) in outcomes.into_iter().enumerate() {
        let slot = &mut per_radius[i / per];
        slot.constant = slot.constant.max(value);
        worst = worst.max(value);
        if !(value <= cap) {
            violations.push(Witness {
                radius,
                t: tp.t,
                x: tp.x,
                y: tp.y,
                required: value,
            });
        }
    }
    if !violations.is_empty() {
        worst = f64::INFINITY;
    }
    Ok(AssumptionReport {
        condition,
        samples: total,
        worst_constant: worst,
        per_radius,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{model_cubic, model_linear_meanfield};

    #[test]
    fn condition_ids_round_trip() {
        for c in [
            Condition::A1,
            Condition::A2,
            Condition::A2Triple,
            Condition::A3,
            Condition::A4,
        ] {
            assert_eq!(c.id().parse::<Condition>().unwrap(), c);
        }
        assert!(matches!(
            "A5".parse::<Condition>(),
            Err(Error::UnknownCondition(_))
        ));
    }

    #[test]
    fn linear_coercivity_within_hand_bound() {
        let (a, c, s) = (0.5, -0.7, 0.4);
        let model = model_linear_meanfield(a, c, s);
        let r = check_assumption(&model, Condition::A3, &SamplerConfig::default(), 1).unwrap();
        assert!(r.violations.is_empty());
        assert!(r.worst_constant <= a.abs() + c.abs() + s * s + 1.0);
    }

    #[test]
    fn cubic_passes_growth_and_coercivity() {
        let model = model_cubic(2.0).unwrap();
        for cond in [Condition::A1, Condition::A2, Condition::A3, Condition::A4] {
            let r = check_assumption(&model, cond, &SamplerConfig::default(), 9).unwrap();
            assert!(r.violations.is_empty(), "{cond}: {:?}", r.per_radius);
            assert!(r.worst_constant.is_finite());
        }
    }

    #[test]
    fn report_is_seed_deterministic() {
        let model = model_cubic(1.0).unwrap();
        let cfg = SamplerConfig {
            points_per_radius: 32,
            ..SamplerConfig::default()
        };
        let a = check_assumption(&model, Condition::A2Triple, &cfg, 4).unwrap();
        let b = check_assumption(&model, Condition::A2Triple, &cfg, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_sampler_rejected() {
        let model = model_cubic(1.0).unwrap();
        let cfg = SamplerConfig {
            radii: vec![],
            ..SamplerConfig::default()
        };
        assert!(check_assumption(&model, Condition::A3, &cfg, 0).is_err());
    }

    struct FlippedCubic;

    impl crate::models::Kernel for FlippedCubic {
        fn drift(&self, _t: f64, x: &[f64], mu: &crate::models::Frame, out: &mut [f64]) {
            out[0] = x[0].powi(3) * mu.summary()[0];
        }

        fn diffusion(&self, _t: f64, x: &[f64], _mu: &crate::models::Frame, out: &mut [f64]) {
            out[0] = x[0];
        }
    }

    #[test]
    fn sign_flipped_cubic_breaks_monotonicity() {
        use crate::models::{MeasureDependence, Statistic};
        let flipped = CoefficientModel::custom(
            "flipped_cubic",
            1,
            1,
            12.0,
            MeasureDependence::Summary(vec![Statistic::AbsMoment(2.0)]),
            std::sync::Arc::new(FlippedCubic),
        );
        let r = check_assumption(&flipped, Condition::A2, &SamplerConfig::default(), 3).unwrap();
        assert!(!r.violations.is_empty());
        assert!(r.worst_constant.is_infinite());
        let k: Vec<f64> = r.per_radius.iter().map(|e| e.constant).collect();
        assert!(k.windows(2).all(|w| w[0] < w[1]), "{k:?}");
    }
}
