//! One runner per experiment kind. Every runner writes CSV tables into the
//! output directory and returns the run metadata of the particle runs it
//! performed.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use mvlab::galerkin::{energy_report, spde_solve, SineBasis, SpdeConfig};
use mvlab::ldp::{small_noise_experiment, SmallNoiseExperiment};
use mvlab::measures::dump::{write_paths_binary, write_paths_csv};
use mvlab::measures::{PathEnsemble, TimeGrid};
use mvlab::models::{check_assumption, CoefficientModel, Condition};
use mvlab::solvers::{
    euler_frozen_measure, holder_increment_stats, interacting_particles, loglog_slope, InitialCondition,
    RunMetadata, Scheme, SolverConfig,
};

use crate::config::{ExperimentConfig, ExperimentKind, OutputFormat, SimulateSection, SolverSection};
use crate::error::CliError;

/// Output directory and the files written so far.
pub struct Outputs {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Self {
        Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }

    pub fn into_files(self) -> Vec<PathBuf> {
        self.files
    }

    fn write_with(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> Result<(), CliError>,
    ) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        body(&mut w)?;
        w.flush().map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
        self.files.push(path);
        Ok(())
    }

    pub fn text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        self.write_with(name, |w| Ok(w.write_all(text.as_bytes())?))
    }

    fn csv(
        &mut self,
        name: &str,
        header: &[&str],
        rows: impl IntoIterator<Item = Vec<String>>,
    ) -> Result<(), CliError> {
        self.write_with(name, |w| {
            let mut c = csv::Writer::from_writer(w);
            c.write_record(header).map_err(csv_err)?;
            for row in rows {
                c.write_record(&row).map_err(csv_err)?;
            }
            c.flush()?;
            Ok(())
        })
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::from(mvlab::Error::from(e))
}

fn require<'a, T>(section: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    section
        .as_ref()
        .ok_or_else(|| CliError::config(format!("missing [{name}] section")))
}

fn model(cfg: &ExperimentConfig) -> Result<CoefficientModel, CliError> {
    Ok(require(&cfg.model, "model")?.build()?)
}

fn solver(cfg: &ExperimentConfig) -> Result<(SolverConfig, &SolverSection), CliError> {
    let s = require(&cfg.solver, "solver")?;
    let grid = TimeGrid::new(s.horizon, s.intervals)?;
    let mut solver = SolverConfig::new(grid, s.particles, cfg.seed)
        .with_inner_steps(s.inner_steps)
        .with_law_mode(s.law_mode)
        .with_subsample(s.subsample);
    if let Some(m) = s.law_size {
        solver.law_size = m;
    }
    solver.threads = cfg.threads;
    solver.validate()?;
    Ok((solver, s))
}

fn initial(cfg: &ExperimentConfig) -> Result<&InitialCondition, CliError> {
    require(&cfg.initial, "initial")
}

fn run_scheme(
    model: &CoefficientModel,
    solver: &SolverConfig,
    init: &InitialCondition,
    scheme: Scheme,
) -> Result<PathEnsemble, CliError> {
    Ok(match scheme {
        Scheme::FrozenMeasure => euler_frozen_measure(model, solver, init)?.1,
        Scheme::Interacting => interacting_particles(model, solver, init)?,
    })
}

fn f(v: f64) -> String {
    v.to_string()
}

/// Run metadata of the particle runs `cfg` will perform.
pub fn planned_runs(cfg: &ExperimentConfig) -> Result<Vec<RunMetadata>, CliError> {
    Ok(match cfg.experiment {
        ExperimentKind::Simulate | ExperimentKind::Holder => {
            let scheme = match cfg.experiment {
                ExperimentKind::Simulate => cfg.simulate.clone().unwrap_or_default().scheme,
                _ => require(&cfg.holder, "holder")?.scheme,
            };
            let (solver, _) = solver(cfg)?;
            vec![RunMetadata::new(&model(cfg)?, &solver, scheme)]
        }
        ExperimentKind::ChaosCompare => {
            let model = model(cfg)?;
            let (frozen, interacting) = chaos_configs(cfg)?;
            vec![
                RunMetadata::new(&model, &frozen, Scheme::FrozenMeasure),
                RunMetadata::new(&model, &interacting, Scheme::Interacting),
            ]
        }
        _ => Vec::new(),
    })
}

pub fn execute(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<(), CliError> {
    match cfg.experiment {
        ExperimentKind::Simulate => simulate(cfg, out),
        ExperimentKind::ChaosCompare => chaos_compare(cfg, out),
        ExperimentKind::Assumptions => assumptions(cfg, out),
        ExperimentKind::Ldp => ldp(cfg, out),
        ExperimentKind::Spde => spde(cfg, out),
        ExperimentKind::Holder => holder(cfg, out),
    }
}

fn stats_rows(paths: &PathEnsemble) -> Vec<Vec<String>> {
    let grid = paths.grid();
    let stats: Vec<_> = (0..paths.dim()).map(|c| paths.component_stats(c)).collect();
    let mut rows = Vec::new();
    for k in 0..grid.len() {
        for (c, s) in stats.iter().enumerate() {
            rows.push(vec![f(grid.point(k)), c.to_string(), f(s[k].0), f(s[k].1)]);
        }
    }
    rows
}

fn simulate(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<(), CliError> {
    let section = cfg.simulate.clone().unwrap_or_else(SimulateSection::default);
    let model = model(cfg)?;
    let (solver, _) = solver(cfg)?;
    let paths = run_scheme(&model, &solver, initial(cfg)?, section.scheme)?;
    out.csv("stats.csv", &["time", "component", "mean", "se"], stats_rows(&paths))?;
    if section.write_paths {
        if matches!(section.format, OutputFormat::Csv | OutputFormat::Both) {
            out.write_with("paths.csv", |w| Ok(write_paths_csv(&paths, w)?))?;
        }
        if matches!(section.format, OutputFormat::Binary | OutputFormat::Both) {
            out.write_with("paths.bin", |w| Ok(write_paths_binary(&paths, w)?))?;
        }
    }
    if cfg.plot {
        out.text(
            "stats.gp",
            "set datafile separator ','\nset xlabel 't'\nset ylabel 'mean'\n\
             plot 'stats.csv' using 1:($2==0?$3:1/0) every ::1 with lines title 'component 0'\n",
        )?;
    }
    Ok(())
}

fn chaos_configs(cfg: &ExperimentConfig) -> Result<(SolverConfig, SolverConfig), CliError> {
    let (frozen, s) = solver(cfg)?;
    let chaos = require(&cfg.chaos, "chaos")?;
    let seed = chaos.interacting_seed.unwrap_or(cfg.seed.wrapping_add(1));
    let fine = frozen.grid.refine(s.inner_steps)?;
    let mut interacting = SolverConfig::new(fine, s.particles, seed);
    interacting.threads = cfg.threads;
    Ok((frozen, interacting))
}

fn grid_index(grid: &TimeGrid, t: f64) -> Result<usize, CliError> {
    let k = (t / grid.step()).round();
    if !(k >= 0.0 && k as usize <= grid.intervals() && (k * grid.step() - t).abs() <= 1e-9 * grid.horizon()) {
        return Err(CliError::config(format!("time {t} is not a point of the solver grid")));
    }
    Ok(k as usize)
}

fn chaos_compare(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<(), CliError> {
    let model = model(cfg)?;
    let init = initial(cfg)?;
    let (frozen_cfg, interacting_cfg) = chaos_configs(cfg)?;
    let chaos = require(&cfg.chaos, "chaos")?;
    let indices = chaos
        .times
        .iter()
        .map(|&t| grid_index(&frozen_cfg.grid, t))
        .collect::<Result<Vec<_>, _>>()?;
    let (_, frozen) = euler_frozen_measure(&model, &frozen_cfg, init)?;
    let interacting = interacting_particles(&model, &interacting_cfg, init)?;
    let inner = frozen_cfg.inner_steps;
    let mut rows = Vec::new();
    for c in 0..model.dim() {
        let a = frozen.component_stats(c);
        let b = interacting.component_stats(c);
        for &k in &indices {
            let (ma, sa) = a[k];
            let (mb, sb) = b[k * inner];
            let se = (sa * sa + sb * sb).sqrt();
            let z = if se > 0.0 { (ma - mb).abs() / se } else { 0.0 };
            rows.push(vec![f(frozen_cfg.grid.point(k)), c.to_string(), f(ma), f(sa), f(mb), f(sb), f(z)]);
        }
    }
    out.csv(
        "chaos.csv",
        &["time", "component", "frozen_mean", "frozen_se", "interacting_mean", "interacting_se", "z"],
        rows,
    )
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn assumptions(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<(), CliError> {
    let model = model(cfg)?;
    let section = require(&cfg.assumptions, "assumptions")?;
    if section.conditions.is_empty() {
        return Err(CliError::config("assumptions.conditions is empty"));
    }
    let conditions = section
        .conditions
        .iter()
        .map(|s| Condition::from_str(s))
        .collect::<Result<Vec<_>, _>>()?;
    let (mut summary, mut radii, mut witnesses) = (Vec::new(), Vec::new(), Vec::new());
    for condition in conditions {
        let report = check_assumption(&model, condition, &section.sampler, cfg.seed)?;
        let id = condition.id().to_string();
        summary.push(vec![
            id.clone(),
            report.samples.to_string(),
            f(report.worst_constant),
            report.violations.len().to_string(),
        ]);
        for r in &report.per_radius {
            radii.push(vec![id.clone(), f(r.radius), f(r.constant)]);
        }
        for w in &report.violations {
            witnesses.push(vec![id.clone(), f(w.radius), f(w.t), join(&w.x), join(&w.y), f(w.required)]);
        }
    }
    out.csv("assumptions.csv", &["condition", "samples", "worst_constant", "violations"], summary)?;
    out.csv("radii.csv", &["condition", "radius", "constant"], radii)?;
    out.csv("violations.csv", &["condition", "radius", "t", "x", "y", "required"], witnesses)
}

fn ldp(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<(), CliError> {
    let model = model(cfg)?;
    let s = require(&cfg.ldp, "ldp")?;
    let exp = SmallNoiseExperiment {
        grid: TimeGrid::new(s.horizon, s.intervals)?,
        epsilons: s.epsilons.clone(),
        trials: s.trials.clone(),
        event: s.event,
        seed: cfg.seed,
        bridge_correction: s.bridge_correction,
    };
    let mut estimate = small_noise_experiment(&model, &s.x0, &exp)?;
    if let Some(rate) = s.reference_rate {
        estimate = estimate.with_reference(rate);
    }
    out.write_with("rate.csv", |w| Ok(estimate.write_csv(w)?))?;
    if cfg.plot {
        out.text("rate.gp", &estimate.gnuplot_script("rate.csv"))?;
    }
    Ok(())
}

fn spde(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<(), CliError> {
    let s = require(&cfg.spde, "spde")?;
    let grid = TimeGrid::new(s.horizon, s.intervals)?;
    let mut spde_cfg = SpdeConfig::new(s.modes, s.r, s.fields, grid, cfg.seed).with_record_every(s.record_every);
    spde_cfg.noise_weights = s.noise_weights.clone();
    let run = spde_solve(&spde_cfg, &s.init)?;
    out.write_with("coeffs.csv", |w| Ok(run.write_coeff_csv(w)?))?;
    let report = energy_report(&run, s.energy_p)?;
    let mut rows: Vec<Vec<String>> = report
        .per_field
        .iter()
        .enumerate()
        .map(|(i, e)| vec![i.to_string(), f(e.sup_h_sq), f(e.lr_integral), f(e.sup_h_p)])
        .collect();
    let m = report.mean;
    rows.push(vec!["mean".into(), f(m.sup_h_sq), f(m.lr_integral), f(m.sup_h_p)]);
    out.csv("energy.csv", &["field", "sup_h_sq", "lr_integral", "sup_h_p"], rows)?;
    if !s.snapshots.is_empty() {
        let times = run.times();
        let frames: Vec<usize> = s
            .snapshots
            .iter()
            .map(|&t| {
                (0..times.len())
                    .min_by(|&a, &b| (times[a] - t).abs().total_cmp(&(times[b] - t).abs()))
                    .expect("at least the initial frame is recorded")
            })
            .collect();
        let basis = SineBasis::for_exponent(s.modes, s.r)?;
        out.write_with("physical.csv", |w| Ok(run.write_physical_csv(&basis, &frames, w)?))?;
    }
    Ok(())
}

fn holder(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<(), CliError> {
    let section = require(&cfg.holder, "holder")?;
    let model = model(cfg)?;
    let (solver, _) = solver(cfg)?;
    let paths = run_scheme(&model, &solver, initial(cfg)?, section.scheme)?;
    let step = solver.grid.step();
    let lags: Vec<f64> = section.lag_steps.iter().map(|&l| l as f64 * step).collect();
    let stats = holder_increment_stats(&paths, section.q, &lags)?;
    let slope = loglog_slope(&stats)?;
    out.csv(
        "holder.csv",
        &["lag", "mean", "samples"],
        stats.iter().map(|s| vec![f(s.lag), f(s.mean), s.samples.to_string()]),
    )?;
    out.csv("holder_fit.csv", &["q", "slope"], [vec![f(section.q), f(slope)]])?;
    if cfg.plot {
        out.text(
            "holder.gp",
            "set datafile separator ','\nset logscale xy\nset xlabel 'lag'\nset ylabel 'E|dX|^q'\n\
             plot 'holder.csv' using 1:2 every ::1 with linespoints title 'increments'\n",
        )?;
    }
    Ok(())
}
