//! Monolithic Newton solver with backward-Euler or generalized-α time
//! stepping, and the quasi-static parameter sweep driver.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_convection, assemble_linear, assemble_neumann, has_convection, LinearOperators};
use crate::contact::{active_set, contact_residual_and_jacobian, has_contact};
use crate::dof::{Field, ThmState};
use crate::error::{Error, Result};
use crate::levelset::CrackGeometry;
use crate::model::Model;
use crate::sparse::SparseLu;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scheme {
    BackwardEuler,
    GeneralizedAlpha { rho_inf: f64 },
}

impl Default for Scheme {
    fn default() -> Self {
        Scheme::BackwardEuler
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    pub scheme: Scheme,
    /// Nominal time step (s).
    pub dt: f64,
    /// Smallest step allowed by halving.
    pub dt_min: f64,
    pub newton_tol_rel: f64,
    /// Absolute residual floors for momentum (N), mass (m³/s) and energy (W).
    pub newton_tol_abs: [f64; 3],
    pub max_newton: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            scheme: Scheme::BackwardEuler,
            dt: 1.0,
            dt_min: 1e-6,
            newton_tol_rel: 1e-8,
            newton_tol_abs: [1e-10, 1e-22, 1e-12],
            max_newton: 30,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.dt > 0.0) {
            errs.push("solver.dt must be > 0".to_string());
        }
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt) {
            errs.push("solver.dt_min must be in (0, dt]".to_string());
        }
        if !(self.newton_tol_rel > 0.0) || self.newton_tol_abs.iter().any(|v| !(*v > 0.0)) {
            errs.push("solver tolerances must be > 0".to_string());
        }
        if self.max_newton == 0 {
            errs.push("solver.max_newton must be >= 1".to_string());
        }
        if let Scheme::GeneralizedAlpha { rho_inf } = self.scheme {
            if !(0.0..=1.0).contains(&rho_inf) {
                errs.push("solver.scheme.rho_inf must lie in [0, 1]".to_string());
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }
}

/// Generalized-α parameters for first-order systems: (α_m, α_f, γ).
pub fn alpha_parameters(rho_inf: f64) -> (f64, f64, f64) {
    let am = 0.5 * (3.0 - rho_inf) / (1.0 + rho_inf);
    let af = 1.0 / (1.0 + rho_inf);
    (am, af, 0.5 + am - af)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NewtonReport {
    pub iterations: usize,
    /// Residual norms per iteration for momentum, mass and energy rows.
    pub history: Vec<[f64; 3]>,
}

/// JSON-lines sink for Newton iterations.
#[derive(Default)]
pub struct ConvergenceLog {
    sink: Option<Box<dyn Write + Send>>,
}

impl ConvergenceLog {
    pub fn new(sink: Box<dyn Write + Send>) -> ConvergenceLog {
        ConvergenceLog { sink: Some(sink) }
    }

    fn record(&mut self, step: usize, t: f64, iter: usize, res: [f64; 3]) {
        if let Some(w) = self.sink.as_mut() {
            let line = serde_json::json!({
                "step": step, "t": t, "iter": iter,
                "momentum": res[0], "mass": res[1], "energy": res[2],
            });
            let _ = writeln!(w, "{line}");
        }
    }
}

/// Holds operators and factorization for one model topology.
pub struct Solver<'m> {
    pub model: &'m Model,
    pub settings: SolverSettings,
    ops: LinearOperators,
    /// |K|, used to size the residual of cancelling internal forces.
    k_abs: Vec<f64>,
    group: Vec<u8>,
    lu: SparseLu,
    lu_key: Option<(f64, f64)>,
    nonlinear: bool,
    pub log: ConvergenceLog,
    step: usize,
}

fn group_of(f: Field) -> u8 {
    match f {
        Field::Ux | Field::Uy => 0,
        Field::P => 1,
        Field::T => 2,
    }
}

impl<'m> Solver<'m> {
    pub fn new(model: &'m Model, settings: SolverSettings) -> Result<Solver<'m>> {
        settings.validate()?;
        let ops = assemble_linear(model);
        let group = (0..model.dofs.total_dofs)
            .map(|d| group_of(model.dofs.field_of(d)))
            .collect();
        let k_abs = ops.k.iter().map(|v| v.abs()).collect();
        Ok(Solver {
            model,
            settings,
            k_abs,
            ops,
            group,
            lu: SparseLu::new(),
            lu_key: None,
            nonlinear: has_convection(model) || has_contact(model),
            log: ConvergenceLog::default(),
            step: 0,
        })
    }

    pub fn operators(&self) -> &LinearOperators {
        &self.ops
    }

    fn norms(&self, v: &[f64], fixed: &[bool]) -> [f64; 3] {
        let mut s = [0.0; 3];
        for (i, x) in v.iter().enumerate() {
            if !fixed[i] {
                s[self.group[i] as usize] += x * x;
            }
        }
        s.map(f64::sqrt)
    }

    fn nonlinear_terms(&self, x: &[f64], jac: bool) -> (Vec<f64>, Option<Vec<f64>>) {
        let n = x.len();
        let nnz = self.model.pattern.nnz();
        let mut r = vec![0.0; n];
        let mut j = jac.then(|| vec![0.0; nnz]);
        if has_convection(self.model) {
            let (rc, jc) = assemble_convection(self.model, x, jac);
            r.iter_mut().zip(&rc).for_each(|(a, b)| *a += b);
            if let (Some(j), Some(jc)) = (j.as_mut(), jc) {
                j.iter_mut().zip(&jc).for_each(|(a, b)| *a += b);
            }
        }
        if has_contact(self.model) {
            let (rc, jc) = contact_residual_and_jacobian(self.model, x, jac);
            r.iter_mut().zip(&rc).for_each(|(a, b)| *a += b);
            if let (Some(j), Some(jc)) = (j.as_mut(), jc) {
                j.iter_mut().zip(&jc).for_each(|(a, b)| *a += b);
            }
        }
        (r, j)
    }

    /// Solves  a·C·(x − x_ref) + c_rate + b_eval(K x_e + N(x_e)) = F  for
    /// x, where x_e = x_prev + b·(x − x_prev) is the evaluation point.
    ///
    /// `a` is ∂ẋ_stage/∂x, `b` is ∂x_e/∂x, `rate` returns the stage rate
    /// for a trial x.
    #[allow(clippy::too_many_arguments)]
    fn newton(
        &mut self,
        x0: Vec<f64>,
        fixed: &[bool],
        a: f64,
        b: f64,
        x_prev: &[f64],
        rate: &dyn Fn(&[f64]) -> Vec<f64>,
        load: &[f64],
        t: f64,
    ) -> Result<(Vec<f64>, NewtonReport)> {
        let model = self.model;
        let pat = model.pattern.clone();
        let n = model.dofs.total_dofs;
        let mut x = x0;
        let mut report = NewtonReport::default();
        let mut scale0: Option<[f64; 3]> = None;
        let mut last_active: Option<Vec<bool>> = None;
        let mut kx = vec![0.0; n];
        let mut kxa = vec![0.0; n];
        let mut cv = vec![0.0; n];
        for iter in 0..=self.settings.max_newton {
            let xe: Vec<f64> = if b == 1.0 {
                x.clone()
            } else {
                x_prev.iter().zip(&x).map(|(p, c)| p + b * (c - p)).collect()
            };
            pat.mul(&self.ops.k, &xe, &mut kx);
            let (nl, jnl) = if self.nonlinear {
                self.nonlinear_terms(&xe, true)
            } else {
                (vec![0.0; n], None)
            };
            let mut r = vec![0.0; n];
            let mut internal = vec![0.0; n];
            if a != 0.0 {
                let v = rate(&x);
                pat.mul(&self.ops.c, &v, &mut cv);
            }
            for i in 0..n {
                internal[i] = kx[i] + nl[i];
                r[i] = internal[i] - load[i] + if a != 0.0 { cv[i] } else { 0.0 };
                if fixed[i] {
                    r[i] = 0.0;
                }
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonConvergence(format!(
                    "non-finite residual at t = {t}, iteration {iter}"
                )));
            }
            let rn = self.norms(&r, fixed);
            report.history.push(rn);
            self.log.record(self.step, t, iter, rn);
            let xa: Vec<f64> = xe.iter().map(|v| v.abs()).collect();
            pat.mul(&self.k_abs, &xa, &mut kxa);
            let ni = self.norms(&internal, fixed);
            let na = self.norms(&kxa, fixed);
            let nf = self.norms(load, fixed);
            let nc = if a != 0.0 { self.norms(&cv, fixed) } else { [0.0; 3] };
            let s0 = *scale0.get_or_insert(rn);
            let converged = (0..3).all(|g| {
                let scale = s0[g].max(ni[g]).max(nf[g]).max(nc[g]).max(na[g]);
                rn[g] <= self.settings.newton_tol_rel * scale || rn[g] <= self.settings.newton_tol_abs[g]
            });
            let active = if has_contact(model) {
                Some(active_set(model, &xe))
            } else {
                None
            };
            let active_changed = iter > 0 && active != last_active;
            if converged && !(active_changed && iter < self.settings.max_newton) {
                report.iterations = iter;
                return Ok((x, report));
            }
            if iter == self.settings.max_newton {
                break;
            }
            last_active = active;
            // Jacobian
            let key = (a, b);
            // Convection alone is mildly nonlinear: keep a stale Jacobian
            // while it still contracts the residual well.
            let contracting = match report.history.len() {
                0 | 1 => true,
                k => {
                    let (a1, a0) = (report.history[k - 1], report.history[k - 2]);
                    (0..3).all(|g| a1[g] <= 0.25 * a0[g] || a1[g] <= self.settings.newton_tol_abs[g])
                }
            };
            let frozen_ok = !has_contact(model) && contracting;
            let reuse = self.lu_key == Some(key) && self.lu.is_factored() && (!self.nonlinear || frozen_ok);
            if !reuse {
                let mut jv: Vec<f64> = (0..pat.nnz())
                    .map(|k| a * self.ops.c[k] + b * self.ops.k[k])
                    .collect();
                if let Some(j) = jnl {
                    jv.iter_mut().zip(&j).for_each(|(v, w)| *v += b * w);
                }
                pat.mask_identity(&mut jv, fixed);
                self.lu.factor(&pat, &jv)?;
                self.lu_key = Some(key);
            }
            let mut dx: Vec<f64> = r.iter().map(|v| -v).collect();
            self.lu.solve(&mut dx)?;
            for i in 0..n {
                if !fixed[i] {
                    x[i] += dx[i];
                }
            }
        }
        Err(Error::NonConvergence(format!(
            "Newton did not converge at t = {t}; residual history (momentum, mass, energy): {:?}",
            report.history
        )))
    }

    fn fixed_and_values(&self, t: f64) -> Result<(Vec<bool>, Vec<(usize, f64)>)> {
        let cons = self.model.constraints(t)?;
        let mut fixed = vec![false; self.model.dofs.total_dofs];
        for &(d, _) in &cons {
            fixed[d] = true;
        }
        Ok((fixed, cons))
    }

    /// Steady state at time t (loads and Dirichlet data evaluated at t).
    pub fn solve_stationary(&mut self, guess: Option<&ThmState>, t: f64) -> Result<(ThmState, NewtonReport)> {
        let (fixed, cons) = self.fixed_and_values(t)?;
        let mut x = guess.map_or_else(|| self.model.initial_state().x, |s| s.x.clone());
        for &(d, v) in &cons {
            x[d] = v;
        }
        let mut load = assemble_neumann(self.model, t)?;
        load.iter_mut().zip(&self.ops.f).for_each(|(a, b)| *a += b);
        let prev = x.clone();
        let (x, rep) = self.newton(x, &fixed, 0.0, 1.0, &prev, &|_| Vec::new(), &load, t)?;
        self.step += 1;
        Ok((ThmState { x, t }, rep))
    }

    /// One time step from (x_n, v_n) at t_n to t_n + dt. Returns the new
    /// state and rate.
    pub fn step(
        &mut self,
        xn: &ThmState,
        vn: &[f64],
        dt: f64,
    ) -> Result<(ThmState, Vec<f64>, NewtonReport)> {
        let t1 = xn.t + dt;
        let (fixed, cons) = self.fixed_and_values(t1)?;
        let mut x = xn.x.clone();
        for &(d, v) in &cons {
            x[d] = v;
        }
        let result = match self.settings.scheme {
            Scheme::BackwardEuler => {
                let mut load = assemble_neumann(self.model, t1)?;
                load.iter_mut().zip(&self.ops.f).for_each(|(a, b)| *a += b);
                let xr = xn.x.clone();
                let rate = move |x: &[f64]| -> Vec<f64> {
                    x.iter().zip(&xr).map(|(a, b)| (a - b) / dt).collect()
                };
                let (x, rep) = self.newton(x, &fixed, 1.0 / dt, 1.0, &xn.x, &rate, &load, t1)?;
                let v: Vec<f64> = x.iter().zip(&xn.x).map(|(a, b)| (a - b) / dt).collect();
                (x, v, rep)
            }
            Scheme::GeneralizedAlpha { rho_inf } => {
                let (am, af, gamma) = alpha_parameters(rho_inf);
                let tf = xn.t + af * dt;
                let mut load = assemble_neumann(self.model, tf)?;
                load.iter_mut().zip(&self.ops.f).for_each(|(a, b)| *a += b);
                let xr = xn.x.clone();
                let vr = vn.to_vec();
                let v1 = move |x: &[f64]| -> Vec<f64> {
                    (0..x.len())
                        .map(|i| (x[i] - xr[i] - dt * vr[i]) / (gamma * dt) + vr[i])
                        .collect()
                };
                let vr2 = vn.to_vec();
                let v1c = v1.clone();
                let rate = move |x: &[f64]| -> Vec<f64> {
                    let v = v1c(x);
                    (0..x.len()).map(|i| vr2[i] + am * (v[i] - vr2[i])).collect()
                };
                let (x, rep) =
                    self.newton(x, &fixed, am / (gamma * dt), af, &xn.x, &rate, &load, tf)?;
                let v = v1(&x);
                (x, v, rep)
            }
        };
        self.step += 1;
        let (x, v, rep) = result;
        Ok((ThmState { x, t: t1 }, v, rep))
    }

    /// Integrates to each of `output_times` (increasing), halving the step
    /// on Newton failure. `on_output` sees every output state.
    pub fn solve_transient(
        &mut self,
        initial: ThmState,
        output_times: &[f64],
        mut on_output: impl FnMut(&ThmState) -> Result<()>,
    ) -> Result<Vec<ThmState>> {
        if output_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("output times must increase".into()));
        }
        let mut state = initial;
        let mut v = vec![0.0; state.x.len()];
        let mut out = Vec::new();
        let mut dt = self.settings.dt;
        for &target in output_times {
            while state.t < target - 1e-12 * target.abs().max(1.0) {
                let h = dt.min(target - state.t);
                match self.step(&state, &v, h) {
                    Ok((s, vn, _)) => {
                        state = s;
                        v = vn;
                        if dt < self.settings.dt {
                            dt = (2.0 * dt).min(self.settings.dt);
                        }
                    }
                    Err(Error::NonConvergence(msg)) | Err(Error::LinearSolver(msg)) => {
                        dt *= 0.5;
                        if dt < self.settings.dt_min {
                            return Err(Error::NonConvergence(format!(
                                "time step underflow at t = {}: {msg}",
                                state.t
                            )));
                        }
                    }
                    Err(e) => return Err(e),
                }
            }
            state.t = target;
            on_output(&state)?;
            out.push(state.clone());
        }
        Ok(out)
    }
}

/// Convenience wrapper for a single steady solve.
pub fn solve_stationary(model: &Model, settings: &SolverSettings) -> Result<ThmState> {
    let mut s = Solver::new(model, settings.clone())?;
    Ok(s.solve_stationary(None, 0.0)?.0)
}

/// Convenience wrapper for a transient run from the model's initial state.
pub fn solve_transient(model: &Model, settings: &SolverSettings, output_times: &[f64]) -> Result<Vec<ThmState>> {
    let mut s = Solver::new(model, settings.clone())?;
    s.solve_transient(model.initial_state(), output_times, |_| Ok(()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub parameter: String,
    pub values: Vec<f64>,
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        let inc = self.values.windows(2).all(|w| w[1] > w[0]);
        let dec = self.values.windows(2).all(|w| w[1] < w[0]);
        if inc || dec {
            Ok(())
        } else {
            Err(Error::config(format!(
                "sweep '{}' must be monotone",
                self.parameter
            )))
        }
    }
}

pub enum GrowthDecision {
    Keep,
    Grow(Vec<CrackGeometry>),
    Stop(String),
}

#[derive(Debug, Clone)]
pub struct SweepStep {
    pub value: f64,
    pub state: ThmState,
    pub cracks: Vec<CrackGeometry>,
    pub grown: usize,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub steps: Vec<SweepStep>,
    pub stopped: Option<String>,
}

/// Stationary solves over a parameter sweep. After each solve the growth
/// hook may extend cracks; the model is then rebuilt (standard DOFs carry
/// over, enriched DOFs restart at zero) and the increment is solved again,
/// up to `max_growth_per_step` times. `on_accept` sees each accepted step
/// with the model it was solved on.
pub fn auxiliary_sweep(
    model: &mut Model,
    plan: &SweepPlan,
    settings: &SolverSettings,
    max_growth_per_step: usize,
    mut set_parameter: impl FnMut(&mut Model, f64),
    mut growth_hook: impl FnMut(&Model, &ThmState, f64) -> Result<GrowthDecision>,
    mut on_accept: impl FnMut(&Model, &SweepStep) -> Result<()>,
) -> Result<SweepResult> {
    plan.validate()?;
    let mut steps = Vec::new();
    let mut state: Option<ThmState> = None;
    for &value in &plan.values {
        set_parameter(model, value);
        let mut grown = 0;
        loop {
            let mut solver = Solver::new(model, settings.clone())?;
            let (s, _) = solver.solve_stationary(state.as_ref(), 0.0)?;
            drop(solver);
            let decision = if grown < max_growth_per_step {
                growth_hook(model, &s, value)?
            } else {
                GrowthDecision::Keep
            };
            match decision {
                GrowthDecision::Keep => {
                    let step = SweepStep {
                        value,
                        state: s.clone(),
                        cracks: model.spec.cracks.clone(),
                        grown,
                    };
                    on_accept(model, &step)?;
                    steps.push(step);
                    state = Some(s);
                    break;
                }
                GrowthDecision::Grow(cracks) => {
                    let old_dofs = model.dofs.clone();
                    model.spec.cracks = cracks;
                    model.rebuild()?;
                    state = Some(model.transfer_state(&s, &old_dofs));
                    grown += 1;
                }
                GrowthDecision::Stop(msg) => {
                    let step = SweepStep {
                        value,
                        state: s,
                        cracks: model.spec.cracks.clone(),
                        grown,
                    };
                    on_accept(model, &step)?;
                    steps.push(step);
                    return Ok(SweepResult {
                        steps,
                        stopped: Some(msg),
                    });
                }
            }
        }
    }
    Ok(SweepResult {
        steps,
        stopped: None,
    })
}
