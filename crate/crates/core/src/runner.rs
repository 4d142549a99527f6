//! Executes a [`RunConfig`]: builds the model, runs the study and writes
//! probes, SIFs, VTK snapshots and the convergence log.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use crate::config::{RunConfig, StudySpec};
use crate::dof::ThmState;
use crate::error::Result;
use crate::fracture::{compute_sifs, growth_step, kink_angle, normalized_sif, DomainOptions, GrowthSettings, SifResult};
use crate::levelset::CrackGeometry;
use crate::model::Model;
use crate::output::{write_vtk, Probe, ProbeCsv, SifCsv};
use crate::solver::{auxiliary_sweep, ConvergenceLog, GrowthDecision, Solver, SweepPlan};

#[derive(Debug, Clone)]
pub struct TipRecord {
    pub t: f64,
    pub crack: usize,
    pub tip: usize,
    pub sif: SifResult,
    pub theta_c: f64,
    /// NaN unless `output.sif_theta0` is set.
    pub f_i: f64,
}

pub struct RunOutcome {
    pub model: Model,
    /// Output states (one per output instant or sweep value).
    pub states: Vec<ThmState>,
    /// Crack geometry after each sweep value (sweeps only).
    pub crack_history: Vec<Vec<CrackGeometry>>,
    pub tips: Vec<TipRecord>,
    pub stopped: Option<String>,
    pub files: Vec<PathBuf>,
}

/// Where and what to write. `dir = None` keeps everything in memory.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub dir: Option<PathBuf>,
    /// Collect SIFs at every output even without `output.sif_csv`.
    pub sifs: bool,
}

struct Writers {
    probes: Option<ProbeCsv>,
    sif: Option<SifCsv>,
    vtk_every: usize,
    dir: Option<PathBuf>,
    count: usize,
    files: Vec<PathBuf>,
    want_sifs: bool,
    domain: DomainOptions,
    tips: Vec<TipRecord>,
    theta0: Option<f64>,
}

impl Writers {
    fn on_output(&mut self, model: &Model, state: &ThmState) -> Result<()> {
        if let Some(p) = self.probes.as_mut() {
            p.row(model, state)?;
        }
        if self.want_sifs {
            for (ci, c) in model.spec.cracks.iter().enumerate() {
                for tip in 0..2 {
                    if !c.tip_active[tip] {
                        continue;
                    }
                    let sif = compute_sifs(model, state, ci, tip, &self.domain)?;
                    let theta_c = kink_angle(sif.k_i, sif.k_ii);
                    let f_i = match self.theta0 {
                        Some(th) => {
                            let m = model.material(model.locator.locate(model.mesh(), c.tip(tip).0).map_or(0, |l| l.0));
                            normalized_sif(sif.k_i, m.e, m.nu, m.alpha_lin(), th, c.length())?
                        }
                        None => f64::NAN,
                    };
                    if let Some(w) = self.sif.as_mut() {
                        w.row(state.t, ci, tip, &sif, f_i, theta_c)?;
                    }
                    self.tips.push(TipRecord {
                        t: state.t,
                        crack: ci,
                        tip,
                        sif,
                        theta_c,
                        f_i,
                    });
                }
            }
        }
        if let Some(dir) = &self.dir {
            if self.vtk_every > 0 && self.count % self.vtk_every == 0 {
                let path = dir.join(format!("state_{:04}.vtk", self.count));
                write_vtk(model, state, &path)?;
                self.files.push(path);
            }
        }
        self.count += 1;
        Ok(())
    }
}

pub fn run(cfg: &RunConfig, opts: &RunOptions) -> Result<RunOutcome> {
    let spec = cfg.model_spec()?;
    let mut model = Model::new(spec)?;
    let settings = cfg.solver.settings();
    let probes: Vec<Probe> = cfg
        .probes
        .iter()
        .map(|p| Probe::from_spec(&model, p))
        .collect::<Result<_>>()?;
    let mut files = Vec::new();
    let mut log = ConvergenceLog::default();
    let (probe_csv, sif_csv) = match &opts.dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let pc = dir.join(&cfg.output.csv);
            files.push(pc.clone());
            let probes = ProbeCsv::create(&model, probes, &pc)?;
            let sc = match &cfg.output.sif_csv {
                Some(name) => {
                    let p = dir.join(name);
                    files.push(p.clone());
                    Some(SifCsv::create(&p)?)
                }
                None => None,
            };
            let lp = dir.join(&cfg.output.log);
            files.push(lp.clone());
            log = ConvergenceLog::new(Box::new(BufWriter::new(File::create(lp)?)));
            (Some(probes), sc)
        }
        None => (None, None),
    };
    let want_sifs = opts.sifs || sif_csv.is_some();
    let mut w = Writers {
        probes: probe_csv,
        sif: sif_csv,
        vtk_every: cfg.output.vtk_every,
        dir: opts.dir.clone(),
        count: 0,
        files: Vec::new(),
        want_sifs,
        domain: cfg.sif.domain(),
        tips: Vec::new(),
        theta0: cfg.output.sif_theta0.map(|q| q.0),
    };
    let mut crack_history = Vec::new();
    let mut stopped = None;
    let states = match &cfg.study {
        StudySpec::Stationary { t } => {
            let mut solver = Solver::new(&model, settings)?;
            solver.log = log;
            let (s, _) = solver.solve_stationary(None, t.0)?;
            w.on_output(&model, &s)?;
            vec![s]
        }
        StudySpec::Transient { .. } => {
            let times = cfg.study.output_times();
            let mut solver = Solver::new(&model, settings)?;
            solver.log = log;
            let m = &model;
            let initial = m.initial_state();
            solver.solve_transient(initial, &times, |s| w.on_output(m, s))?
        }
        StudySpec::Sweep {
            parameter,
            values,
            growth,
        } => {
            let plan = SweepPlan {
                parameter: parameter.clone(),
                values: values.iter().map(|q| q.0).collect(),
            };
            let gs = growth.as_ref().map(|g| GrowthSettings {
                delta_a: g.delta_a.0,
                r_eval: g.r_eval.map(|q| q.0),
                f_t: g.f_t.map(|q| q.0),
                domain: cfg.sif.domain(),
            });
            let max_growth = growth.as_ref().map_or(0, |g| g.max_per_step);
            let result = auxiliary_sweep(
                &mut model,
                &plan,
                &settings,
                max_growth,
                |m, v| m.spec.temperature = Some(v),
                |m, s, _| match &gs {
                    Some(g) => Ok(growth_step(m, s, g)?.0),
                    None => Ok(GrowthDecision::Keep),
                },
                |m, step| {
                    let mut s = step.state.clone();
                    s.t = step.value;
                    w.on_output(m, &s)
                },
            )?;
            stopped = result.stopped;
            let mut states = Vec::new();
            for step in result.steps {
                let mut s = step.state;
                s.t = step.value;
                crack_history.push(step.cracks);
                states.push(s);
            }
            states
        }
    };
    files.extend(w.files);
    Ok(RunOutcome {
        model,
        states,
        crack_history,
        tips: w.tips,
        stopped,
        files,
    })
}

/// Runs a configuration file, writing into `dir` (or the configured
/// output directory).
pub fn run_file(path: &Path, dir: Option<&Path>) -> Result<RunOutcome> {
    let cfg = crate::config::load_config(path)?;
    let dir = dir.map(Path::to_path_buf).unwrap_or_else(|| cfg.output.dir.clone());
    run(
        &cfg,
        &RunOptions {
            dir: Some(dir),
            sifs: false,
        },
    )
}
