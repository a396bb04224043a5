//! Monte-Carlo estimates of small-noise event probabilities.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ode::limit_ode;
use crate::error::{BlowUpSite, Error, Result};
use crate::measures::{Path, ParticleEnsemble, TimeGrid};
use crate::models::{CoefficientModel, Frame};
use crate::rng::{GaussianStream, Purpose, StreamFamily, UniformStream};
use crate::solvers::euler_update;

/// Fewest trials accepted per noise level.
pub const MIN_TRIALS: usize = 10_000;

/// Path events measured against the zero-noise limit `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Event {
    /// `sup_t |X(t) - y(t)| >= delta`.
    BallExit { delta: f64 },
    /// `sup_t (X_c(t) - y_c(t)) >= delta` for one component `c`.
    LevelExceed { delta: f64, component: usize },
}

impl Event {
    fn delta(&self) -> f64 {
        match *self {
            Event::BallExit { delta } | Event::LevelExceed { delta, .. } => delta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmallNoiseExperiment {
    pub grid: TimeGrid,
    pub epsilons: Vec<f64>,
    /// Trials per noise level: one entry for all levels or one per level.
    pub trials: Vec<usize>,
    pub event: Event,
    pub seed: u64,
    /// Account for crossings between grid points with the Brownian-bridge
    /// crossing probability of the local Gaussian increment. Exact for
    /// additive noise; only applied to one-dimensional ball exits and to
    /// level events.
    #[serde(default = "yes")]
    pub bridge_correction: bool,
}

fn yes() -> bool {
    true
}

impl SmallNoiseExperiment {
    fn trials_at(&self, i: usize) -> usize {
        if self.trials.len() == 1 {
            self.trials[0]
        } else {
            self.trials[i]
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.epsilons.is_empty() || self.epsilons.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(Error::param("epsilons", "need at least one positive noise level"));
        }
        if self.trials.len() != 1 && self.trials.len() != self.epsilons.len() {
            return Err(Error::param("trials", "give one count or one per noise level"));
        }
        if let Some(t) = self.trials.iter().find(|t| **t < MIN_TRIALS) {
            return Err(Error::param("trials", format!("{t} < {MIN_TRIALS}")));
        }
        if self.trials.iter().any(|t| *t as u64 >= 1 << 40) || self.epsilons.len() >= 1 << 20 {
            return Err(Error::Overflow("trial index"));
        }
        let delta = self.event.delta();
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::param("delta", "must be finite and nonnegative"));
        }
        if let Event::LevelExceed { component, .. } = self.event {
            if component >= dim {
                return Err(Error::param("component", format!("{component} >= dimension {dim}")));
            }
        }
        Ok(())
    }
}

/// One noise level of a [`RateEstimate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub epsilon: f64,
    pub trials: usize,
    pub hits: usize,
    pub p_hat: f64,
    /// Binomial standard error `sqrt(p (1 - p) / n)`.
    pub se: f64,
    /// `epsilon * ln p_hat`; absent when no trial hit.
    pub eps_log_p: Option<f64>,
    /// One-sided 95% Clopper-Pearson bound `1 - 0.05^{1/n}` for censored rows.
    pub upper_bound: Option<f64>,
}

impl RateRow {
    fn new(epsilon: f64, trials: usize, hits: usize) -> Self {
        let n = trials as f64;
        let p = hits as f64 / n;
        let censored = hits == 0;
        RateRow {
            epsilon,
            trials,
            hits,
            p_hat: p,
            se: (p * (1.0 - p) / n).sqrt(),
            eps_log_p: (!censored).then(|| epsilon * p.ln()),
            upper_bound: censored.then(|| 1.0 - 0.05f64.powf(1.0 / n)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateEstimate {
    pub rows: Vec<RateRow>,
    /// Analytic value of `lim epsilon ln p`, when known.
    pub reference_rate: Option<f64>,
}

impl RateEstimate {
    pub fn with_reference(mut self, rate: f64) -> Self {
        self.reference_rate = Some(rate);
        self
    }

    /// CSV with columns `epsilon,p_hat,se,eps_log_p`. Censored rows carry
    /// `<=bound` in the probability and rate columns.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["epsilon", "p_hat", "se", "eps_log_p"])?;
        for r in &self.rows {
            let (p, rate) = match r.upper_bound {
                Some(b) => (format!("<={b}"), format!("<={}", r.epsilon * b.ln())),
                None => (r.p_hat.to_string(), r.eps_log_p.unwrap_or(f64::NAN).to_string()),
            };
            w.write_record([r.epsilon.to_string(), p, r.se.to_string(), rate])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Gnuplot script plotting `epsilon ln p_hat` from `csv_name`.
    pub fn gnuplot_script(&self, csv_name: &str) -> String {
        let mut s = String::from(
            "set datafile separator ','\nset key left top\nset logscale x\n\
             set xlabel 'epsilon'\nset ylabel 'epsilon log p'\n",
        );
        s.push_str(&format!(
            "plot '{csv_name}' using 1:4 every ::1 with linespoints title 'estimate'"
        ));
        if let Some(r) = self.reference_rate {
            s.push_str(&format!(", {r} with lines title 'rate'"));
        }
        s.push('\n');
        s
    }
}

struct Detector<'a> {
    event: Event,
    limit: &'a Path,
    bridge: bool,
    h: f64,
    noise_dim: usize,
}

impl Detector<'_> {
    fn deviation(&self, x: &[f64], k: usize) -> f64 {
        let y = self.limit.at(k);
        match self.event {
            Event::BallExit { .. } => x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
            Event::LevelExceed { component, .. } => x[component] - y[component],
        }
    }

    fn at_start(&self, x: &[f64]) -> bool {
        self.deviation(x, 0) >= self.event.delta()
    }

    /// Whether the event fired on `(t_{k-1}, t_k]`.
    fn crossed(&self, k: usize, prev: &[f64], next: &[f64], sigma: &[f64], u: f64) -> bool {
        let delta = self.event.delta();
        let d1 = self.deviation(next, k);
        if d1 >= delta {
            return true;
        }
        if !self.bridge {
            return false;
        }
        let m = self.noise_dim;
        let var = |c: usize| sigma[c * m..(c + 1) * m].iter().map(|s| s * s).sum::<f64>() * self.h;
        let p = match self.event {
            Event::BallExit { .. } if next.len() == 1 => {
                let d0 = prev[0] - self.limit.at(k - 1)[0];
                let d1 = next[0] - self.limit.at(k)[0];
                crossing(delta - d0, delta - d1, var(0)) + crossing(delta + d0, delta + d1, var(0))
            }
            Event::BallExit { .. } => 0.0,
            Event::LevelExceed { component, .. } => {
                let d0 = self.deviation(prev, k - 1);
                crossing(delta - d0, delta - d1, var(component))
            }
        };
        u < p
    }
}

/// Probability that a Brownian bridge with variance `var` over the step
/// reaches a barrier at distances `a`, `b` from its endpoints.
fn crossing(a: f64, b: f64, var: f64) -> f64 {
    if var <= 0.0 {
        0.0
    } else {
        (-2.0 * a * b / var).exp()
    }
}

struct Scratch {
    b: Vec<f64>,
    sigma: Vec<f64>,
    dw: Vec<f64>,
    prev: Vec<f64>,
}

impl Scratch {
    fn new(d: usize, m: usize) -> Self {
        Scratch {
            b: vec![0.0; d],
            sigma: vec![0.0; d * m],
            dw: vec![0.0; m],
            prev: vec![0.0; d],
        }
    }
}

struct Streams {
    gauss: GaussianStream,
    bridge: UniformStream,
}

/// One Euler step followed by the event check; returns whether it fired.
#[allow(clippy::too_many_arguments)]
fn step_trial(
    model: &CoefficientModel,
    frame: &Frame,
    det: &Detector,
    k: usize,
    t: f64,
    x: &mut [f64],
    streams: &mut Streams,
    s: &mut Scratch,
) -> bool {
    let h = det.h;
    model.drift(t, x, frame, &mut s.b);
    model.diffusion(t, x, frame, &mut s.sigma);
    streams.gauss.next_step(&mut s.dw);
    let sqrt_h = h.sqrt();
    s.dw.iter_mut().for_each(|z| *z *= sqrt_h);
    s.prev.copy_from_slice(x);
    euler_update(x, &s.b, &s.sigma, &s.dw, h);
    let u = streams.bridge.next_step();
    det.crossed(k + 1, &s.prev, x, &s.sigma, u)
}

fn blow_up(time: f64, particle: usize) -> Error {
    Error::BlowUp {
        time,
        site: BlowUpSite::Particle(particle),
    }
}

/// Estimates `P(event)` for `dX = b dt + sqrt(eps) sigma dW`, `X(0) = x0`,
/// at each noise level. Trials are the particles of one interacting system,
/// so the measure argument is the empirical law of the noisy system itself.
/// Models without measure dependence are simulated one trial at a time.
pub fn small_noise_experiment(
    model: &CoefficientModel,
    x0: &[f64],
    exp: &SmallNoiseExperiment,
) -> Result<RateEstimate> {
    let d = model.dim();
    if x0.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: x0.len(),
        });
    }
    exp.validate(d)?;
    let limit = limit_ode(model, x0, exp.grid)?;
    let gauss = StreamFamily::new(exp.seed, Purpose::Increment);
    let bridge = StreamFamily::new(exp.seed, Purpose::Bridge);
    let mut rows = Vec::with_capacity(exp.epsilons.len());
    for (level, &eps) in exp.epsilons.iter().enumerate() {
        let noisy = model.with_noise_factor(eps.sqrt());
        let trials = exp.trials_at(level);
        let det = Detector {
            event: exp.event,
            limit: &limit,
            bridge: exp.bridge_correction,
            h: exp.grid.step(),
            noise_dim: model.noise_dim(),
        };
        let base = (level as u64) << 40;
        let open = |i: usize| Streams {
            gauss: GaussianStream::new(&gauss, base | i as u64, model.noise_dim(), 0),
            bridge: UniformStream::new(&bridge, base | i as u64, 0),
        };
        let hits = if let Some(frame) = noisy.independent_frame() {
            independent_hits(&noisy, &frame, &det, x0, trials, &open)?
        } else {
            lockstep_hits(&noisy, &det, x0, trials, &open)?
        };
        rows.push(RateRow::new(eps, trials, hits));
    }
    Ok(RateEstimate {
        rows,
        reference_rate: None,
    })
}

fn independent_hits(
    model: &CoefficientModel,
    frame: &Frame,
    det: &Detector,
    x0: &[f64],
    trials: usize,
    open: &(dyn Fn(usize) -> Streams + Sync),
) -> Result<usize> {
    if det.at_start(x0) {
        return Ok(trials);
    }
    let grid = *det.limit.grid();
    let (d, m) = (model.dim(), model.noise_dim());
    let outcomes: Vec<Result<bool>> = (0..trials)
        .into_par_iter()
        .map_init(
            || (Scratch::new(d, m), vec![0.0; d]),
            |(s, x), i| {
                x.copy_from_slice(x0);
                let mut streams = open(i);
                for k in 0..grid.intervals() {
                    let fired = step_trial(model, frame, det, k, grid.point(k), x, &mut streams, s);
                    if x.iter().any(|v| !v.is_finite()) {
                        return Err(blow_up(grid.point(k + 1), i));
                    }
                    if fired {
                        return Ok(true);
                    }
                }
                Ok(false)
            },
        )
        .collect();
    let mut hits = 0;
    for o in outcomes {
        hits += o? as usize;
    }
    Ok(hits)
}

fn lockstep_hits(
    model: &CoefficientModel,
    det: &Detector,
    x0: &[f64],
    trials: usize,
    open: &(dyn Fn(usize) -> Streams + Sync),
) -> Result<usize> {
    let grid = *det.limit.grid();
    let (d, m) = (model.dim(), model.noise_dim());
    let mut states: Vec<f64> = x0.iter().copied().cycle().take(trials * d).collect();
    let start = det.at_start(x0);
    let mut fired = vec![start; trials];
    let mut streams: Vec<Streams> = (0..trials).into_par_iter().map(open).collect();
    for k in 0..grid.intervals() {
        let t = grid.point(k);
        let frame = model.frame(&ParticleEnsemble::uniform(d, states.clone())?);
        states
            .par_chunks_mut(d)
            .zip(streams.par_iter_mut())
            .zip(fired.par_iter_mut())
            .for_each_init(
                || Scratch::new(d, m),
                |s, ((x, st), f)| {
                    let hit = step_trial(model, &frame, det, k, t, x, st, s);
                    *f |= hit;
                },
            );
        if let Some(pos) = states.iter().position(|v| !v.is_finite()) {
            return Err(blow_up(grid.point(k + 1), pos / d));
        }
    }
    Ok(fired.iter().filter(|f| **f).count())
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::models::{Kernel, MeasureDependence};

    struct Brownian;

    impl Kernel for Brownian {
        fn drift(&self, _t: f64, _x: &[f64], _mu: &Frame, out: &mut [f64]) {
            out[0] = 0.0;
        }
        fn diffusion(&self, _t: f64, _x: &[f64], _mu: &Frame, out: &mut [f64]) {
            out[0] = 1.0;
        }
    }

    fn brownian(dependence: MeasureDependence) -> CoefficientModel {
        CoefficientModel::custom("bm", 1, 1, 2.0, dependence, Arc::new(Brownian))
    }

    fn experiment(event: Event, eps: f64) -> SmallNoiseExperiment {
        SmallNoiseExperiment {
            grid: TimeGrid::new(1.0, 50).unwrap(),
            epsilons: vec![eps],
            trials: vec![MIN_TRIALS],
            event,
            seed: 11,
            bridge_correction: true,
        }
    }

    #[test]
    fn zero_radius_always_fires() {
        let model = brownian(MeasureDependence::None);
        for event in [
            Event::BallExit { delta: 0.0 },
            Event::LevelExceed {
                delta: 0.0,
                component: 0,
            },
        ] {
            let r = small_noise_experiment(&model, &[0.0], &experiment(event, 0.1)).unwrap();
            assert_eq!(r.rows[0].p_hat, 1.0);
        }
    }

    #[test]
    fn streaming_and_lockstep_agree_for_measure_free_models() {
        let event = Event::LevelExceed {
            delta: 0.5,
            component: 0,
        };
        let a = small_noise_experiment(&brownian(MeasureDependence::None), &[0.0], &experiment(event, 0.1)).unwrap();
        let b = small_noise_experiment(&brownian(MeasureDependence::Atoms), &[0.0], &experiment(event, 0.1)).unwrap();
        assert_eq!(a.rows, b.rows);
        assert!(a.rows[0].hits > 0);
    }

    #[test]
    fn censored_rows() {
        let event = Event::BallExit { delta: 50.0 };
        let r = small_noise_experiment(&brownian(MeasureDependence::None), &[0.0], &experiment(event, 0.01)).unwrap();
        let row = &r.rows[0];
        assert_eq!(row.hits, 0);
        assert_eq!(row.eps_log_p, None);
        let bound = row.upper_bound.unwrap();
        assert!((bound - (1.0 - 0.05f64.powf(1e-4))).abs() < 1e-15);
        let mut csv = Vec::new();
        r.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("epsilon,p_hat,se,eps_log_p\n0.01,<="));
    }

    #[test]
    fn rejects_bad_setup() {
        let model = brownian(MeasureDependence::None);
        let mut e = experiment(Event::BallExit { delta: 0.5 }, 0.1);
        e.trials = vec![100];
        assert!(small_noise_experiment(&model, &[0.0], &e).is_err());
        let e = experiment(
            Event::LevelExceed {
                delta: 0.5,
                component: 1,
            },
            0.1,
        );
        assert!(small_noise_experiment(&model, &[0.0], &e).is_err());
        let e = experiment(Event::BallExit { delta: 0.5 }, -0.1);
        assert!(small_noise_experiment(&model, &[0.0], &e).is_err());
    }

    #[test]
    fn gnuplot_mentions_csv_and_reference() {
        let r = RateEstimate {
            rows: vec![],
            reference_rate: None,
        }
        .with_reference(-0.125);
        let script = r.gnuplot_script("rates.csv");
        assert!(script.contains("'rates.csv'") && script.contains("-0.125"));
    }
}
