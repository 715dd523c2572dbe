//! Warm-start update when the measured signal changes between snapshots.
//!
//! Given the solution for measurements `y` and new measurements `y_new` of
//! the perturbed signal, the homotopy
//!
//! ```text
//!     minimize tau ||x||_1 + (1-eps)/2 ||Ax - y||^2 + eps/2 ||Ax - y_new||^2
//! ```
//!
//! is traced in `eps` from 0 to 1. The optimality conditions at each `eps`
//! are those of BPDN with the blended measurement `(1-eps) y + eps y_new`,
//! so the solution moves piecewise linearly: on the support
//! `dx = (A_G'A_G)^-1 A_G'(y_new - y)`, and one application of the full Gram
//! operator per step prices the constraint scan. The Dantzig variant
//! additionally restores the dual solution after every support change.

use crate::bpdn::{off_support, residual, BpdnState, CORR_REFRESH_INTERVAL};
use crate::dantzig::{
    apply_primal_then_dual, complement_values, dual_completion, DsOperator, DsState, PlainGram,
    SupportChange,
};
use crate::error::{Result, SolverError};
use crate::homotopy::{
    min_activation_step, min_shrink_step_signed, SensingMatrix, StepEvent, StepKind, RATIO_TOL,
};
use crate::linalg::{axpy, sub};

fn signal_iteration_limit(n: usize) -> usize {
    10 * n.max(1)
}

/// Record of one signal-update run: the events at its critical points, the
/// homotopy parameter after each of them, and the operation count.
#[derive(Debug, Clone, Default)]
pub struct SignalUpdateTrace {
    pub steps: Vec<StepEvent>,
    /// Homotopy parameter value after each recorded step.
    pub epsilons: Vec<f64>,
    /// Always 1 on success.
    pub final_epsilon: f64,
    /// Applications of the full `A'A`.
    pub gram_products: u64,
}

/// Updates a BPDN solution after the measurement vector changes from
/// `y_old` to `y_new` (same matrix, same `tau`).
pub fn update_bpdn_signal<S: SensingMatrix>(
    state: &BpdnState,
    a: &S,
    y_old: &[f64],
    y_new: &[f64],
) -> Result<(BpdnState, SignalUpdateTrace)> {
    let mat = a.matrix();
    if y_old.len() != mat.rows() || y_new.len() != mat.rows() {
        return Err(SolverError::dim("measurement length must equal row count"));
    }
    state.check_consistent(mat, y_old, state.tau())?;

    let mut trace = SignalUpdateTrace {
        final_epsilon: 1.0,
        ..Default::default()
    };
    let dy = sub(y_new, y_old);
    let mut next = state.clone();
    if dy.iter().all(|&v| v == 0.0) {
        return Ok((next, trace));
    }

    let n = mat.cols();
    let tau = next.tau;
    let limit = signal_iteration_limit(n);
    let mut eps = 0.0f64;
    let mut steps_since_refresh = 0usize;
    // A_G'(y_new - y), maintained across support changes.
    let mut rhs_dir: Vec<f64> = next
        .active
        .indices()
        .iter()
        .map(|&j| mat.col_dot(j, &dy))
        .collect();

    while eps < 1.0 {
        if trace.steps.len() > limit {
            return Err(SolverError::IterationLimit { limit });
        }
        let dx = next.active.solve_gram(&rhs_dir);
        // d = A'(A_G dx - dy): one full product per step.
        a.note_gram_product();
        trace.gram_products += 1;
        let mut v = mat.combine_cols(next.active.indices(), &dx);
        for (vi, dyi) in v.iter_mut().zip(&dy) {
            *vi -= dyi;
        }
        let d = mat.apply_t(&v);

        let x_on: Vec<f64> = next.active.indices().iter().map(|&j| next.x[j]).collect();
        let shrink =
            min_shrink_step_signed(&x_on, &dx, next.active.signs(), next.active.indices());
        let (p_off, d_off, idx_off) = off_support(&next.corr, &d, &next.active, n);
        let activate = min_activation_step(&p_off, &d_off, tau, &idx_off)?;
        let ev = shrink.min(activate);

        let room = 1.0 - eps;
        if ev.theta >= room * (1.0 - RATIO_TOL) {
            for (pos, &j) in next.active.indices().iter().enumerate() {
                next.x[j] += room * dx[pos];
            }
            axpy(&mut next.corr, room, &d);
            break;
        }
        for (pos, &j) in next.active.indices().iter().enumerate() {
            next.x[j] += ev.theta * dx[pos];
        }
        axpy(&mut next.corr, ev.theta, &d);
        eps += ev.theta;
        match ev.kind {
            StepKind::Shrink => {
                let gamma = ev.gamma.expect("shrink index");
                next.x[gamma] = 0.0;
                let pos = next.active.position(gamma).expect("index in support");
                rhs_dir.remove(pos);
                next.active.remove(mat, gamma)?;
            }
            StepKind::Activate => {
                let gamma = ev.gamma.expect("activation index");
                next.active
                    .insert(mat, gamma, -ev.gamma_sign.expect("activation sign"))?;
                rhs_dir.push(mat.col_dot(gamma, &dy));
            }
            StepKind::Terminal => unreachable!("terminal never beats the endpoint clamp"),
        }
        trace.steps.push(ev);
        trace.epsilons.push(eps);

        steps_since_refresh += 1;
        if steps_since_refresh >= CORR_REFRESH_INTERVAL {
            steps_since_refresh = 0;
            a.note_gram_product();
            trace.gram_products += 1;
            // p = A'(Ax - y_old - eps dy), recomputed to bound drift.
            let mut r = residual(mat, &next.x, y_old);
            axpy(&mut r, -eps, &dy);
            next.corr = mat.apply_t(&r);
        }
    }
    debug_assert!(
        crate::bpdn::bpdn_kkt(mat, y_new, tau, &next.x).pass,
        "signal update left an infeasible state"
    );
    Ok((next, trace))
}

/// Updates a Dantzig-selector solution after the measurement vector changes
/// from `y_old` to `y_new` (same matrix, same `tau`).
pub fn update_ds_signal<S: SensingMatrix>(
    state: &DsState,
    a: &S,
    y_old: &[f64],
    y_new: &[f64],
) -> Result<(DsState, SignalUpdateTrace)> {
    let mat = a.matrix();
    if y_old.len() != mat.rows() || y_new.len() != mat.rows() {
        return Err(SolverError::dim("measurement length must equal row count"));
    }
    state.check_consistent(mat, y_old, state.tau())?;

    let mut trace = SignalUpdateTrace {
        final_epsilon: 1.0,
        ..Default::default()
    };
    let dy = sub(y_new, y_old);
    let mut next = state.clone();
    if dy.iter().all(|&v| v == 0.0) {
        return Ok((next, trace));
    }

    let op = PlainGram::new(a);
    let n = mat.cols();
    let tau = next.tau;
    let limit = signal_iteration_limit(n);
    let mut eps = 0.0f64;
    let mut steps_since_refresh = 0usize;
    // A'(y_new - y_old), computed once; folded into every direction.
    let aty_dy = mat.apply_t(&dy);

    while eps < 1.0 {
        if trace.steps.len() > limit {
            return Err(SolverError::IterationLimit { limit });
        }
        // Primal phase at the current supports. An empty support moves
        // nothing but the blended measurement still drags the correlations.
        let (dx, d): (Vec<f64>, Vec<f64>) = if next.gamma_x.is_empty() {
            (Vec::new(), aty_dy.iter().map(|v| -v).collect())
        } else {
            let cross = next.cross.as_ref().ok_or(SolverError::SingularCrossGram)?;
            let rhs: Vec<f64> = next.gamma_l.iter().map(|&j| mat.col_dot(j, &dy)).collect();
            let dx = cross.solve(&rhs);
            let mut d = op.gram_combination(&next.gamma_x, &dx);
            for (di, ai) in d.iter_mut().zip(&aty_dy) {
                *di -= ai;
            }
            (dx, d)
        };

        let x_on: Vec<f64> = next.gamma_x.iter().map(|&j| next.x[j]).collect();
        let shrink = min_shrink_step_signed(&x_on, &dx, &next.zx, &next.gamma_x);
        let (p_off, d_off, idx_off) = complement_values(&next.pcorr, &d, &next.gamma_l, n);
        let activate = min_activation_step(&p_off, &d_off, tau, &idx_off)?;
        let ev = shrink.min(activate);

        let room = 1.0 - eps;
        if ev.theta >= room * (1.0 - RATIO_TOL) {
            for (pos, &j) in next.gamma_x.iter().enumerate() {
                next.x[j] += room * dx[pos];
            }
            axpy(&mut next.pcorr, room, &d);
            break;
        }
        for (pos, &j) in next.gamma_x.iter().enumerate() {
            next.x[j] += ev.theta * dx[pos];
        }
        axpy(&mut next.pcorr, ev.theta, &d);
        eps += ev.theta;
        trace.steps.push(ev);
        trace.epsilons.push(eps);

        let primal_change = match ev.kind {
            StepKind::Shrink => {
                let gamma = ev.gamma.expect("shrink index");
                next.x[gamma] = 0.0;
                let pos = next
                    .gamma_x
                    .iter()
                    .position(|&j| j == gamma)
                    .expect("index in primal support");
                SupportChange::Removed { pos, index: gamma }
            }
            StepKind::Activate => SupportChange::Added {
                index: ev.gamma.expect("activation index"),
                sign: ev.gamma_sign.expect("activation sign"),
            },
            StepKind::Terminal => unreachable!(),
        };
        let dual_event = dual_completion(
            &op,
            next.cross.as_ref(),
            &next.gamma_x,
            &next.zx,
            &next.gamma_l,
            &mut next.lambda,
            &mut next.dcorr,
            primal_change,
        )?;
        apply_primal_then_dual(
            &op,
            &mut next.cross,
            &mut next.gamma_x,
            &mut next.zx,
            &mut next.gamma_l,
            &mut next.zl,
            primal_change,
            dual_event,
        )?;

        steps_since_refresh += 1;
        if steps_since_refresh >= CORR_REFRESH_INTERVAL {
            steps_since_refresh = 0;
            op.products.set(op.products.get() + 1);
            a.note_gram_product();
            let mut r = residual(mat, &next.x, y_old);
            axpy(&mut r, -eps, &dy);
            next.pcorr = mat.apply_t(&r);
            let supp: Vec<usize> = (0..n).filter(|&j| next.lambda[j] != 0.0).collect();
            let coefs: Vec<f64> = supp.iter().map(|&j| next.lambda[j]).collect();
            next.dcorr = op.gram_combination(&supp, &coefs);
        }
    }
    trace.gram_products = op.products.get();
    debug_assert!(
        crate::dantzig::ds_kkt(mat, y_new, tau, &next.x, &next.lambda).pass,
        "signal update left an infeasible pair"
    );
    Ok((next, trace))
}
