//! Basis pursuit denoising (the Lagrangian LASSO):
//!
//! ```text
//!     minimize  tau * ||x||_1 + 1/2 * ||A x - y||_2^2
//! ```
//!
//! solved from scratch by tracing the solution path in the relaxation
//! parameter: start at `tau_0 = ||A'y||_inf`, where the solution is the zero
//! vector, and hop from critical point to critical point while `tau`
//! decreases to its target, updating the support by one element per hop.
//!
//! The optimality conditions characterize a solution `x` with support `G` and
//! sign sequence `z`:
//!
//! ```text
//!     A_G'  (A x - y) = -tau * z          (equality on the support)
//!     ||A_Gc'(A x - y)||_inf < tau        (strict bound off the support)
//! ```
//!
//! so on its support the solution is the soft-threshold-like quantity
//! `x_G = (A_G'A_G)^-1 (A_G'y - tau z)`.

use crate::error::{Result, SolverError};
use crate::homotopy::{
    min_activation_step_growing_bound, min_activation_step_shrinking_bound,
    min_shrink_step_signed, ActiveSet, SensingMatrix, StepEvent, StepKind, RATIO_TOL,
};
use crate::linalg::{axpy, norm_inf, DenseMatrix};

/// Refresh the incrementally maintained correlation vector after this many
/// steps to bound drift.
pub(crate) const CORR_REFRESH_INTERVAL: usize = 50;

/// Iteration budget: `20 n` homotopy steps.
pub(crate) fn iteration_limit(n: usize) -> usize {
    20 * n.max(1)
}

/// A BPDN solution along with everything needed to resume a homotopy from
/// it: the active set with its updatable Gram factor and the cached residual
/// correlation vector `A'(Ax - y)`.
#[derive(Debug, Clone)]
pub struct BpdnState {
    pub(crate) x: Vec<f64>,
    pub(crate) tau: f64,
    pub(crate) active: ActiveSet,
    pub(crate) corr: Vec<f64>,
}

impl BpdnState {
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn active(&self) -> &ActiveSet {
        &self.active
    }

    /// Cached residual correlations `A'(Ax - y)`.
    pub fn correlations(&self) -> &[f64] {
        &self.corr
    }

    pub fn support(&self) -> &[usize] {
        self.active.indices()
    }

    /// Rebuilds a state from a bare solution vector, refactorizing its
    /// support. Entries of `x` that are exactly zero stay off the support.
    pub fn from_solution(a: &DenseMatrix, y: &[f64], tau: f64, x: Vec<f64>) -> Result<Self> {
        if x.len() != a.cols() || y.len() != a.rows() {
            return Err(SolverError::dim("solution/matrix dimensions disagree"));
        }
        let indices: Vec<usize> = (0..x.len()).filter(|&j| x[j] != 0.0).collect();
        let signs: Vec<f64> = indices.iter().map(|&j| x[j].signum()).collect();
        let active = ActiveSet::from_support(a, &indices, &signs)?;
        let residual = residual(a, &x, y);
        let corr = a.apply_t(&residual);
        Ok(BpdnState {
            x,
            tau,
            active,
            corr,
        })
    }

    /// Cheap consistency test of the cached optimality data, used to reject
    /// stale warm starts without touching the full Gram operator. Verifies
    /// the cached correlations against `A'(Ax - y)` on a few probe columns,
    /// then checks both optimality conditions on the cache.
    pub(crate) fn check_consistent(&self, a: &DenseMatrix, y: &[f64], tau: f64) -> Result<()> {
        let n = self.x.len();
        if (self.tau - tau).abs() > 1e-12 * tau.max(1.0) {
            return Err(SolverError::StaleWarmStart);
        }
        let r = residual(a, &self.x, y);
        let probes = [0, n / 2, n - 1];
        for &j in probes.iter() {
            let fresh = a.col_dot(j, &r);
            if (fresh - self.corr[j]).abs() > 1e-7 * (1.0 + norm_inf(&self.corr)) {
                return Err(SolverError::StaleWarmStart);
            }
        }
        let tol = 1e-8 * tau;
        for (pos, &j) in self.active.indices().iter().enumerate() {
            let z = self.active.signs()[pos];
            if self.x[j] != 0.0 && self.x[j].signum() != z {
                return Err(SolverError::StaleWarmStart);
            }
            if (self.corr[j] + tau * z).abs() > tol.max(1e-10) {
                return Err(SolverError::StaleWarmStart);
            }
        }
        for j in 0..n {
            if !self.active.contains(j) && self.corr[j].abs() > tau * (1.0 + 1e-8) {
                return Err(SolverError::StaleWarmStart);
            }
        }
        Ok(())
    }
}

/// Optimality-condition certificate for a candidate BPDN solution.
#[derive(Debug, Clone, Copy)]
pub struct KktReport {
    /// `||A_G'(Ax - y) + tau z||_inf` over the support.
    pub support_violation: f64,
    /// `||A_Gc'(Ax - y)||_inf` off the support.
    pub off_support: f64,
    pub pass: bool,
}

/// Checks the two BPDN optimality conditions for an arbitrary vector.
/// The support is taken to be the exactly nonzero entries of `x`.
pub fn bpdn_kkt(a: &DenseMatrix, y: &[f64], tau: f64, x: &[f64]) -> KktReport {
    let r = residual(a, x, y);
    let corr = a.apply_t(&r);
    let mut support_violation: f64 = 0.0;
    let mut off_support: f64 = 0.0;
    for (j, &xj) in x.iter().enumerate() {
        if xj != 0.0 {
            support_violation = support_violation.max((corr[j] + tau * xj.signum()).abs());
        } else {
            off_support = off_support.max(corr[j].abs());
        }
    }
    KktReport {
        support_violation,
        off_support,
        pass: support_violation <= 1e-8 * tau && off_support <= tau * (1.0 + 1e-8),
    }
}

/// Record of one homotopy run: the events at its critical points and the
/// number of full `A'A` applications consumed.
#[derive(Debug, Clone, Default)]
pub struct PathTrace {
    pub steps: Vec<StepEvent>,
    pub gram_products: u64,
}

/// Solves BPDN from scratch. See [`solve_bpdn_traced`].
pub fn solve_bpdn<S: SensingMatrix>(a: &S, y: &[f64], tau: f64) -> Result<BpdnState> {
    solve_bpdn_traced(a, y, tau).map(|(s, _)| s)
}

/// Solves BPDN from scratch by the decreasing-`tau` homotopy and reports the
/// path taken.
pub fn solve_bpdn_traced<S: SensingMatrix>(
    a: &S,
    y: &[f64],
    tau: f64,
) -> Result<(BpdnState, PathTrace)> {
    let mat = a.matrix();
    if tau <= 0.0 {
        return Err(SolverError::arg("tau must be positive"));
    }
    if y.len() != mat.rows() {
        return Err(SolverError::dim("rhs length must equal row count"));
    }
    for j in 0..mat.cols() {
        if (0..mat.rows()).all(|i| mat.get(i, j) == 0.0) {
            return Err(SolverError::ZeroColumn { col: j });
        }
    }
    let neg_aty = {
        let mut v = mat.apply_t(y);
        for e in v.iter_mut() {
            *e = -*e;
        }
        v
    };
    let tau0 = norm_inf(&neg_aty);
    let n = mat.cols();
    let mut state = BpdnState {
        x: vec![0.0; n],
        tau: tau0,
        active: ActiveSet::empty(),
        corr: neg_aty,
    };
    let mut trace = PathTrace::default();
    if tau >= tau0 {
        state.tau = tau;
        return Ok((state, trace));
    }
    // Seed the support with the most correlated column.
    let first = argmax_abs(&state.corr);
    state
        .active
        .insert(mat, first, -state.corr[first].signum())?;
    trace
        .steps
        .push(StepEvent::activate(0.0, first, state.corr[first].signum()));
    resume_tau_traced(a, y, &mut state, tau, &mut trace)?;
    Ok((state, trace))
}

/// Continues a solved state along the `tau` path to a new value, in either
/// direction. Decreasing `tau` is the standard usage; the increasing
/// direction retraces the same path backwards.
pub fn resume_tau<S: SensingMatrix>(
    a: &S,
    y: &[f64],
    state: &BpdnState,
    new_tau: f64,
) -> Result<(BpdnState, PathTrace)> {
    let mut next = state.clone();
    let mut trace = PathTrace::default();
    resume_tau_traced(a, y, &mut next, new_tau, &mut trace)?;
    Ok((next, trace))
}

fn resume_tau_traced<S: SensingMatrix>(
    a: &S,
    y: &[f64],
    state: &mut BpdnState,
    tau_target: f64,
    trace: &mut PathTrace,
) -> Result<()> {
    if tau_target <= 0.0 {
        return Err(SolverError::arg("tau must be positive"));
    }
    let mat = a.matrix();
    let n = mat.cols();
    let decreasing = tau_target <= state.tau;
    let limit = iteration_limit(n);
    let mut steps_since_refresh = 0usize;
    while (state.tau - tau_target).abs() > 0.0 {
        if trace.steps.len() > limit {
            return Err(SolverError::IterationLimit { limit });
        }
        if state.active.is_empty() {
            // Path is flat until a constraint activates (decreasing) or
            // forever (increasing).
            if !decreasing {
                state.tau = tau_target;
                break;
            }
            let candidates: Vec<usize> = (0..n).collect();
            let zero_d = vec![0.0; n];
            let ev =
                min_activation_step_shrinking_bound(&state.corr, &zero_d, state.tau, &candidates);
            let room = state.tau - tau_target;
            if ev.theta >= room {
                state.tau = tau_target;
                break;
            }
            state.tau -= ev.theta;
            let gamma = ev.gamma.expect("activation carries an index");
            state
                .active
                .insert(mat, gamma, -ev.gamma_sign.expect("activation sign"))?;
            trace.steps.push(ev);
            continue;
        }

        let dir_sign = if decreasing { 1.0 } else { -1.0 };
        let mut dx = state.active.solve_gram(state.active.signs());
        for v in dx.iter_mut() {
            *v *= dir_sign;
        }
        // d = A'(A_G dx_G): one application of the full Gram operator.
        a.note_gram_product();
        trace.gram_products += 1;
        let d = mat.apply_t(&mat.combine_cols(state.active.indices(), &dx));

        let x_on: Vec<f64> = state.active.indices().iter().map(|&j| state.x[j]).collect();
        let shrink =
            min_shrink_step_signed(&x_on, &dx, state.active.signs(), state.active.indices());

        let (p_off, d_off, off_idx) = off_support(&state.corr, &d, &state.active, n);
        let activate = if decreasing {
            min_activation_step_shrinking_bound(&p_off, &d_off, state.tau, &off_idx)
        } else {
            min_activation_step_growing_bound(&p_off, &d_off, state.tau, &off_idx)
        };
        let ev = shrink.min(activate);

        let room = (state.tau - tau_target).abs();
        if ev.theta >= room * (1.0 - RATIO_TOL) {
            apply_motion(state, &dx, &d, room, decreasing);
            state.tau = tau_target;
            break;
        }
        apply_motion(state, &dx, &d, ev.theta, decreasing);
        match ev.kind {
            StepKind::Shrink => {
                let gamma = ev.gamma.expect("shrink carries an index");
                state.x[gamma] = 0.0;
                state.active.remove(mat, gamma)?;
            }
            StepKind::Activate => {
                let gamma = ev.gamma.expect("activation carries an index");
                let sign = -ev.gamma_sign.expect("activation sign");
                let mut probe = state.active.clone();
                match probe.insert(mat, gamma, sign) {
                    Ok(()) => state.active = probe,
                    // Saturated support: the Gram submatrix already has full
                    // rank, so the entering column displaces one member
                    // along the null direction of the augmented block.
                    Err(SolverError::DegenerateSupport) => {
                        exchange_slide(state, mat, gamma, sign)?;
                    }
                    Err(other) => return Err(other),
                }
            }
            StepKind::Terminal => unreachable!("terminal events never beat the clamp"),
        }
        trace.steps.push(ev);

        steps_since_refresh += 1;
        if steps_since_refresh >= CORR_REFRESH_INTERVAL {
            steps_since_refresh = 0;
            a.note_gram_product();
            trace.gram_products += 1;
            state.corr = mat.apply_t(&residual(mat, &state.x, y));
        }
    }
    Ok(())
}

/// Exchange pivot at a rank-saturated support: the entering column `gamma`
/// lies in the span of the active columns, so the solution slides along the
/// null direction of the augmented block (leaving residual and correlations
/// unchanged) until one member dies, and the two swap places.
pub(crate) fn exchange_slide(
    state: &mut BpdnState,
    mat: &DenseMatrix,
    gamma: usize,
    sign: f64,
) -> Result<()> {
    // Representation of the entering column in the active ones.
    let rhs: Vec<f64> = state
        .active
        .indices()
        .iter()
        .map(|&i| {
            (0..mat.rows())
                .map(|r| mat.get(r, i) * mat.get(r, gamma))
                .sum()
        })
        .collect();
    let w = state.active.solve_gram(&rhs);
    // Slide direction: entering entry grows with its sign, the others move
    // against the representation weights.
    let u_on: Vec<f64> = w.iter().map(|&wi| -sign * wi).collect();
    let x_on: Vec<f64> = state.active.indices().iter().map(|&j| state.x[j]).collect();
    let slide = min_shrink_step_signed(&x_on, &u_on, state.active.signs(), state.active.indices());
    if slide.is_terminal() {
        return Err(SolverError::DegenerateSupport);
    }
    let t = slide.theta;
    let leaving = slide.gamma.expect("slide hits a member");
    for (pos, &j) in state.active.indices().iter().enumerate() {
        state.x[j] += t * u_on[pos];
    }
    state.x[gamma] = t * sign;
    state.x[leaving] = 0.0;
    state.active.remove(mat, leaving)?;
    state.active.insert(mat, gamma, sign)?;
    Ok(())
}

fn apply_motion(state: &mut BpdnState, dx: &[f64], d: &[f64], theta: f64, decreasing: bool) {
    for (pos, &j) in state.active.indices().iter().enumerate() {
        state.x[j] += theta * dx[pos];
    }
    axpy(&mut state.corr, theta, d);
    if decreasing {
        state.tau -= theta;
    } else {
        state.tau += theta;
    }
}

pub(crate) fn off_support(
    p: &[f64],
    d: &[f64],
    active: &ActiveSet,
    n: usize,
) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
    let mut mask = vec![false; n];
    for &j in active.indices() {
        mask[j] = true;
    }
    let mut p_off = Vec::with_capacity(n - active.len());
    let mut d_off = Vec::with_capacity(n - active.len());
    let mut idx = Vec::with_capacity(n - active.len());
    for j in 0..n {
        if !mask[j] {
            p_off.push(p[j]);
            d_off.push(d[j]);
            idx.push(j);
        }
    }
    (p_off, d_off, idx)
}

pub(crate) fn residual(a: &DenseMatrix, x: &[f64], y: &[f64]) -> Vec<f64> {
    let support: Vec<usize> = (0..x.len()).filter(|&j| x[j] != 0.0).collect();
    let coef: Vec<f64> = support.iter().map(|&j| x[j]).collect();
    let mut r = a.combine_cols(&support, &coef);
    for (ri, yi) in r.iter_mut().zip(y) {
        *ri -= yi;
    }
    r
}

pub(crate) fn argmax_abs(v: &[f64]) -> usize {
    let mut best = 0;
    let mut best_val = v[0].abs();
    for (j, &x) in v.iter().enumerate().skip(1) {
        if x.abs() > best_val {
            best_val = x.abs();
            best = j;
        }
    }
    best
}
