//! Gauss-Newton and Levenberg-Marquardt over the sparse normal equations.
//!
//! Every step solves for a tangent increment `Δx` in the column layout of an
//! [`Ordering`] and applies it with `x ⊕ Δx`; the input [`Variables`] are
//! never modified.

use std::fmt;

use log::{debug, info};
use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{default_ordering, FactorGraph, Ordering, Variables};
use crate::sparse::{amd_ordering, assemble_normal, linearize, pcg_solve, SparseMatrix, SymbolicCholesky};

/// Floor applied to `diag(JᵀJ)` before it scales the LM damping.
pub const DAMPING_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Algorithm {
    GaussNewton,
    LevenbergMarquardt,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LinearSolverKind {
    Cholesky,
    Pcg,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerParams {
    pub algorithm: Algorithm,
    pub solver: LinearSolverKind,
    /// Upper bound on accepted iterations.
    pub max_iterations: usize,
    pub relative_tolerance: f64,
    pub gradient_tolerance: f64,
    pub initial_lambda: f64,
    pub lambda_increase: f64,
    pub lambda_decrease: f64,
    pub min_lambda: f64,
    pub max_lambda: f64,
    /// Run exactly `max_iterations` accepted iterations with the convergence
    /// tests disabled.
    pub fixed_iterations: bool,
    pub pcg_tolerance: f64,
    pub pcg_max_iterations: usize,
}

impl Default for OptimizerParams {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::LevenbergMarquardt,
            solver: LinearSolverKind::Cholesky,
            max_iterations: 100,
            relative_tolerance: 1e-6,
            gradient_tolerance: 1e-9,
            initial_lambda: 1e-5,
            lambda_increase: 10.0,
            lambda_decrease: 0.1,
            min_lambda: 1e-10,
            max_lambda: 1e10,
            fixed_iterations: false,
            pcg_tolerance: 1e-10,
            pcg_max_iterations: 10_000,
        }
    }
}

impl OptimizerParams {
    pub fn gauss_newton() -> Self {
        Self {
            algorithm: Algorithm::GaussNewton,
            ..Self::default()
        }
    }

    pub fn levenberg_marquardt() -> Self {
        Self::default()
    }

    /// The fixed-iteration protocol: `n` accepted LM iterations, no early exit.
    pub fn fixed(n: usize) -> Self {
        Self {
            max_iterations: n,
            fixed_iterations: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("relative_tolerance", self.relative_tolerance),
            ("gradient_tolerance", self.gradient_tolerance),
            ("initial_lambda", self.initial_lambda),
            ("min_lambda", self.min_lambda),
            ("max_lambda", self.max_lambda),
            ("pcg_tolerance", self.pcg_tolerance),
        ];
        for (name, v) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.min_lambda > self.max_lambda {
            return Err(Error::InvalidParameter("min_lambda exceeds max_lambda".into()));
        }
        let inc = self.lambda_increase;
        let dec = self.lambda_decrease;
        if inc.is_nan() || inc <= 1.0 || dec.is_nan() || dec <= 0.0 || dec >= 1.0 {
            return Err(Error::InvalidParameter(
                "lambda_increase must be > 1 and lambda_decrease in (0, 1)".into(),
            ));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OptimizationStatus {
    Success,
    MaxIterations,
    RankDeficiency,
    InvalidInput,
    LambdaLimit,
}

impl OptimizationStatus {
    pub fn name(self) -> &'static str {
        match self {
            Self::Success => "SUCCESS",
            Self::MaxIterations => "MAX_ITERATIONS",
            Self::RankDeficiency => "RANK_DEFICIENCY",
            Self::InvalidInput => "INVALID_INPUT",
            Self::LambdaLimit => "LAMBDA_LIMIT",
        }
    }
}

impl fmt::Display for OptimizationStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One attempted step. Rejected LM attempts share the iteration index of the
/// accepted step that eventually follows them.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub cost_before: f64,
    pub cost_after: f64,
    pub lambda: Option<f64>,
    pub step_norm: f64,
    /// `‖HΔx − rhs‖∞ / ‖rhs‖∞` of the linear solve.
    pub linear_residual: f64,
    pub accepted: bool,
}

#[derive(Clone, Debug)]
pub struct OptimizationResult {
    pub values: Variables,
    pub status: OptimizationStatus,
    pub records: Vec<IterationRecord>,
    pub initial_cost: f64,
    pub final_cost: f64,
    /// Detail for non-success statuses.
    pub message: Option<String>,
}

impl OptimizationResult {
    pub fn iterations(&self) -> usize {
        self.records.iter().filter(|r| r.accepted).count()
    }

    pub fn rejections(&self) -> usize {
        self.records.iter().filter(|r| !r.accepted).count()
    }
}

/// Solves `H x = rhs`. Keeps the Cholesky symbolic analysis and fill-reducing
/// permutation while the pattern of `H` stays the same.
#[derive(Clone, Debug)]
pub struct LinearSolver {
    kind: LinearSolverKind,
    symbolic: Option<SymbolicCholesky>,
    analyses: usize,
    pcg_tolerance: f64,
    pcg_max_iterations: usize,
}

impl LinearSolver {
    pub fn new(kind: LinearSolverKind) -> Self {
        let defaults = OptimizerParams::default();
        Self {
            kind,
            symbolic: None,
            analyses: 0,
            pcg_tolerance: defaults.pcg_tolerance,
            pcg_max_iterations: defaults.pcg_max_iterations,
        }
    }

    pub fn from_params(params: &OptimizerParams) -> Self {
        Self {
            pcg_tolerance: params.pcg_tolerance,
            pcg_max_iterations: params.pcg_max_iterations,
            ..Self::new(params.solver)
        }
    }

    pub fn kind(&self) -> LinearSolverKind {
        self.kind
    }

    /// Number of symbolic analyses performed so far.
    pub fn analyses(&self) -> usize {
        self.analyses
    }

    /// Returns the solution and its relative residual. Indefinite matrices
    /// are reported with the variable owning the failing column.
    pub fn solve(
        &mut self,
        h: &SparseMatrix,
        rhs: &DVector<f64>,
        ordering: &Ordering,
    ) -> Result<(DVector<f64>, f64)> {
        let x = match self.kind {
            LinearSolverKind::Cholesky => {
                if !self.symbolic.as_ref().is_some_and(|s| s.matches(h)) {
                    let perm = amd_ordering(h, &ordering.block_ranges());
                    self.symbolic = Some(SymbolicCholesky::analyze(h, perm)?);
                    self.analyses += 1;
                }
                let symbolic = self.symbolic.as_ref().expect("analysis just stored");
                let factor = symbolic.factor(h).map_err(|e| attach_key(e, ordering))?;
                factor.solve(rhs)
            }
            LinearSolverKind::Pcg => {
                pcg_solve(h, rhs, self.pcg_tolerance, self.pcg_max_iterations, &ordering.block_ranges())
                    .map_err(|e| attach_key(e, ordering))?
                    .x
            }
        };
        let scale = rhs.amax();
        let residual = if scale > 0.0 {
            (h.mul_vec(&x) - rhs).amax() / scale
        } else {
            0.0
        };
        Ok((x, residual))
    }
}

fn attach_key(err: Error, ordering: &Ordering) -> Error {
    match err {
        Error::NotPositiveDefinite { column, key: None } => Error::NotPositiveDefinite {
            column,
            key: ordering.key_of_column(column),
        },
        other => other,
    }
}

/// Normal equations at a linearization point, with the cost there.
#[derive(Clone, Debug)]
pub struct NormalEquations {
    pub h: SparseMatrix,
    pub g: DVector<f64>,
    pub cost: f64,
}

impl NormalEquations {
    pub fn at(graph: &FactorGraph, values: &Variables, ordering: &Ordering) -> Result<Self> {
        let sys = linearize(graph, values, ordering)?;
        let (h, g) = assemble_normal(&sys.jacobian, &sys.rhs);
        // whitened ‖b‖² equals the robust cost only without kernels
        let cost = graph.total_cost(values)?;
        Ok(Self { h, g, cost })
    }

    pub fn gradient_norm(&self) -> f64 {
        self.g.amax()
    }
}

/// `H + λ·diag(max(H_ii, floor))`, same pattern as `H`.
pub fn damped(h: &SparseMatrix, lambda: f64) -> SparseMatrix {
    let mut out = h.clone();
    if lambda == 0.0 {
        return out;
    }
    for c in 0..h.ncols() {
        if let Some(p) = h.position(c, c) {
            out.values_mut()[p] += lambda * h.values()[p].max(DAMPING_FLOOR);
        }
    }
    out
}

/// Solves `(H + λD)Δx = −g`. The returned step is applied as `x ⊕ Δx`.
pub fn damped_step(
    normal: &NormalEquations,
    lambda: f64,
    ordering: &Ordering,
    solver: &mut LinearSolver,
) -> Result<(DVector<f64>, f64)> {
    solver.solve(&damped(&normal.h, lambda), &-&normal.g, ordering)
}

/// Undamped step minimizing `‖JΔx + b‖²`, with that predicted cost
/// (before any robust reweighting).
pub fn gauss_newton_step(
    graph: &FactorGraph,
    values: &Variables,
    ordering: &Ordering,
    solver: &mut LinearSolver,
) -> Result<(DVector<f64>, f64)> {
    let sys = linearize(graph, values, ordering)?;
    let (h, g) = assemble_normal(&sys.jacobian, &sys.rhs);
    let (dx, _) = solver.solve(&h, &-g, ordering)?;
    let predicted = (sys.jacobian.mul_vec(&dx) + &sys.rhs).norm_squared();
    Ok((dx, predicted))
}

/// Damping state carried between LM steps. The linearization is kept after a
/// rejection so the retry only re-solves.
#[derive(Clone, Debug)]
pub struct LmState {
    pub lambda: f64,
    normal: Option<NormalEquations>,
}

impl LmState {
    pub fn new(lambda: f64) -> Self {
        Self { lambda, normal: None }
    }

    /// Linearization cached for the current point, if any.
    pub fn normal(&self) -> Option<&NormalEquations> {
        self.normal.as_ref()
    }
}

#[derive(Clone, Debug)]
pub struct LmStepOutcome {
    pub accepted: bool,
    /// New values on acceptance, otherwise an unchanged copy of the input.
    pub values: Variables,
    /// λ after the update.
    pub lambda: f64,
    pub record: IterationRecord,
}

/// One damped attempt. On acceptance λ shrinks and the linearization is
/// dropped; on rejection λ grows and the linearization is kept. A damped
/// matrix that still fails to factor counts as a rejection.
pub fn lm_step(
    state: &mut LmState,
    graph: &FactorGraph,
    values: &Variables,
    ordering: &Ordering,
    solver: &mut LinearSolver,
    params: &OptimizerParams,
) -> Result<LmStepOutcome> {
    if state.normal.is_none() {
        state.normal = Some(NormalEquations::at(graph, values, ordering)?);
    }
    let normal = state.normal.as_ref().expect("linearized above");
    let cost = normal.cost;
    let lambda = state.lambda;
    let attempt = match damped_step(normal, lambda, ordering, solver) {
        Ok(step) => Some(step),
        Err(Error::NotPositiveDefinite { .. } | Error::NotConverged { .. }) => None,
        Err(e) => return Err(e),
    };
    let (candidate, new_cost, step_norm, residual) = match attempt {
        Some((dx, residual)) => {
            let candidate = values.retract(ordering, &dx)?;
            let new_cost = graph.total_cost(&candidate)?;
            (Some(candidate), new_cost, dx.norm(), residual)
        }
        None => (None, f64::INFINITY, f64::NAN, f64::NAN),
    };
    let accepted = candidate.is_some() && new_cost < cost;
    let record = IterationRecord {
        iteration: 0,
        cost_before: cost,
        cost_after: new_cost,
        lambda: Some(lambda),
        step_norm,
        linear_residual: residual,
        accepted,
    };
    let values = if accepted {
        state.normal = None;
        state.lambda = (lambda * params.lambda_decrease).max(params.min_lambda);
        candidate.expect("accepted steps have values")
    } else {
        state.lambda = lambda * params.lambda_increase;
        values.clone()
    };
    Ok(LmStepOutcome {
        accepted,
        values,
        lambda: state.lambda,
        record,
    })
}

/// Runs the configured algorithm from `init` with the sorted-key ordering.
pub fn optimize(graph: &FactorGraph, init: &Variables, params: &OptimizerParams) -> OptimizationResult {
    let invalid = |message: String| OptimizationResult {
        values: init.clone(),
        status: OptimizationStatus::InvalidInput,
        records: Vec::new(),
        initial_cost: f64::NAN,
        final_cost: f64::NAN,
        message: Some(message),
    };
    if let Err(e) = params.validate() {
        return invalid(e.to_string());
    }
    let ordering = match default_ordering(graph, init) {
        Ok(o) => o,
        Err(e) => return invalid(e.to_string()),
    };
    let initial_cost = match graph.total_cost(init) {
        Ok(c) => c,
        Err(e) => return invalid(e.to_string()),
    };
    let mut run = Run {
        graph,
        params,
        ordering,
        solver: LinearSolver::from_params(params),
        values: init.clone(),
        records: Vec::new(),
        cost: initial_cost,
    };
    let outcome = match params.algorithm {
        Algorithm::GaussNewton => run.gauss_newton(),
        Algorithm::LevenbergMarquardt => run.levenberg_marquardt(),
    };
    let (status, message) = match outcome {
        Ok(status) => (status, None),
        Err(e @ Error::NotPositiveDefinite { .. }) | Err(e @ Error::NotConverged { .. }) => {
            (OptimizationStatus::RankDeficiency, Some(e.to_string()))
        }
        Err(e) => (OptimizationStatus::InvalidInput, Some(e.to_string())),
    };
    info!(
        "{status} after {} iterations, cost {:e} -> {:e}",
        run.records.iter().filter(|r| r.accepted).count(),
        initial_cost,
        run.cost
    );
    OptimizationResult {
        values: run.values,
        status,
        records: run.records,
        initial_cost,
        final_cost: run.cost,
        message,
    }
}

struct Run<'a> {
    graph: &'a FactorGraph,
    params: &'a OptimizerParams,
    ordering: Ordering,
    solver: LinearSolver,
    values: Variables,
    records: Vec<IterationRecord>,
    cost: f64,
}

impl Run<'_> {
    fn converged_at_start(&mut self, normal: &NormalEquations, iteration: usize) -> bool {
        if self.params.fixed_iterations || normal.gradient_norm() >= self.params.gradient_tolerance {
            return false;
        }
        if iteration == 1 {
            // already optimal: report one zero step
            self.records.push(IterationRecord {
                iteration,
                cost_before: self.cost,
                cost_after: self.cost,
                lambda: None,
                step_norm: 0.0,
                linear_residual: 0.0,
                accepted: true,
            });
        }
        true
    }

    fn small_decrease(&self, before: f64, after: f64) -> bool {
        !self.params.fixed_iterations
            && (after == 0.0 || (before - after).abs() <= self.params.relative_tolerance * before)
    }

    fn gauss_newton(&mut self) -> Result<OptimizationStatus> {
        for iteration in 1..=self.params.max_iterations {
            let normal = NormalEquations::at(self.graph, &self.values, &self.ordering)?;
            if self.converged_at_start(&normal, iteration) {
                return Ok(OptimizationStatus::Success);
            }
            let (dx, residual) = damped_step(&normal, 0.0, &self.ordering, &mut self.solver)?;
            let next = self.values.retract(&self.ordering, &dx)?;
            let after = self.graph.total_cost(&next)?;
            debug!("gn {iteration}: cost {:e} -> {after:e}, |dx| {:e}", normal.cost, dx.norm());
            self.records.push(IterationRecord {
                iteration,
                cost_before: normal.cost,
                cost_after: after,
                lambda: None,
                step_norm: dx.norm(),
                linear_residual: residual,
                accepted: true,
            });
            self.values = next;
            self.cost = after;
            if self.small_decrease(normal.cost, after) {
                return Ok(OptimizationStatus::Success);
            }
        }
        Ok(OptimizationStatus::MaxIterations)
    }

    fn levenberg_marquardt(&mut self) -> Result<OptimizationStatus> {
        let mut state = LmState::new(self.params.initial_lambda);
        let mut iteration = 1;
        while iteration <= self.params.max_iterations {
            if state.normal.is_none() {
                let normal = NormalEquations::at(self.graph, &self.values, &self.ordering)?;
                if self.converged_at_start(&normal, iteration) {
                    return Ok(OptimizationStatus::Success);
                }
                state.normal = Some(normal);
            }
            let out = lm_step(
                &mut state,
                self.graph,
                &self.values,
                &self.ordering,
                &mut self.solver,
                self.params,
            )?;
            let mut record = out.record;
            record.iteration = iteration;
            debug!(
                "lm {iteration}: lambda {:e}, cost {:e} -> {:e}, {}",
                record.lambda.unwrap_or(0.0),
                record.cost_before,
                record.cost_after,
                if record.accepted { "accepted" } else { "rejected" }
            );
            let (before, after) = (record.cost_before, record.cost_after);
            self.records.push(record);
            if out.accepted {
                self.values = out.values;
                self.cost = after;
                if self.small_decrease(before, after) {
                    return Ok(OptimizationStatus::Success);
                }
                iteration += 1;
            } else if state.lambda > self.params.max_lambda {
                return Ok(OptimizationStatus::LambdaLimit);
            }
        }
        Ok(OptimizationStatus::MaxIterations)
    }
}
