//! Warm-start update when measurements arrive (or are withdrawn) one row at
//! a time.
//!
//! A new measurement `w = b x + noise` is worked in gradually through
//!
//! ```text
//!     minimize tau ||x||_1 + 1/2 (||Ax - y||^2 + eps |b x - w|^2),
//! ```
//!
//! `eps` from 0 to 1. The twist relative to the signal update is that the
//! Gram matrix itself becomes `U(eps) = A_G'A_G + eps b_G'b_G`, so the
//! distance moved is no longer proportional to the change in `eps`: with
//! `u = b_G U^-1 b_G'`, a step of size `theta` along
//! `dx = -U^-1 b_G' (b x - w)` advances the parameter by
//! `theta / (1 - theta u)`. The recursion is run in `theta`; when the
//! parameter would overshoot 1 the last step is clamped to
//! `theta = (1 - eps) / (1 + (1 - eps) u)`, which lands exactly on the
//! endpoint. Removal runs the same path with `eps` going from 1 to 0.
//!
//! `U(eps)` is maintained as a Cholesky factor: the `eps` advance is a
//! rank-1 update and support changes are single-index add/removes, so each
//! step stays O(|G|^2) plus one application of the full Gram operator.

use crate::bpdn::{residual, BpdnState, CORR_REFRESH_INTERVAL};
use crate::dantzig::{
    apply_dual_then_primal, apply_primal_then_dual, complement_values, dual_completion,
    primal_completion, DsOperator, DsState, SupportChange,
};
use crate::error::{Result, SolverError};
use crate::homotopy::{
    min_activation_step, min_shrink_step_signed, ActiveSet, SensingMatrix, StepEvent, StepKind,
    RATIO_TOL,
};
use crate::linalg::{
    axpy, dot, factor_add_index, factor_rank1, factor_remove_index, DenseMatrix,
    SpdFactor,
};

fn seq_iteration_limit(n: usize) -> usize {
    10 * n.max(1)
}

/// Record of one sequential-update run. Replaying the `(theta, u)` pairs
/// through the parameter recursion reproduces `epsilons` exactly.
#[derive(Debug, Clone, Default)]
pub struct SeqUpdateTrace {
    pub steps: Vec<StepEvent>,
    /// Homotopy parameter after each recorded step.
    pub epsilons: Vec<f64>,
    /// The matrix-inversion-lemma scalar at each step. For the basis-pursuit
    /// updates it is the quadratic form `b_G U^-1 b_G'` and stays
    /// nonnegative; the Dantzig cross-Gram version may go negative.
    pub u_values: Vec<f64>,
    pub final_epsilon: f64,
    pub gram_products: u64,
}

/// Working Cholesky factor of `U(eps) = A_G'A_G + eps b_G'b_G`, tracking the
/// support and the restriction of `b` to it.
struct EpsFactor {
    factor: SpdFactor,
    indices: Vec<usize>,
    signs: Vec<f64>,
    b_on: Vec<f64>,
}

impl EpsFactor {
    fn from_state(state: &BpdnState, b: &[f64]) -> Self {
        EpsFactor {
            factor: state.active.factor().clone(),
            indices: state.active.indices().to_vec(),
            signs: state.active.signs().to_vec(),
            b_on: state.active.indices().iter().map(|&j| b[j]).collect(),
        }
    }

    fn u(&self) -> Result<f64> {
        if self.indices.is_empty() {
            return Ok(0.0);
        }
        let w = self.factor.solve_lower(&self.b_on);
        let u = dot(&w, &w);
        if u < 0.0 {
            return Err(SolverError::DegenerateSupport);
        }
        Ok(u)
    }

    /// Folds an `eps` advance into the factor: `U += d_eps b_G'b_G`.
    fn advance_eps(&mut self, d_eps: f64, a: &DenseMatrix, b: &[f64], eps_new: f64) -> Result<()> {
        if self.indices.is_empty() || d_eps == 0.0 {
            return Ok(());
        }
        let scale = d_eps.abs().sqrt();
        let v: Vec<f64> = self.b_on.iter().map(|x| x * scale).collect();
        match factor_rank1(&self.factor, &v, d_eps.signum()) {
            Ok(f) => {
                self.factor = f;
                Ok(())
            }
            // A failed downdate is rebuilt from scratch at the new eps.
            Err(_) => self.rebuild(a, b, eps_new),
        }
    }

    fn rebuild(&mut self, a: &DenseMatrix, b: &[f64], eps: f64) -> Result<()> {
        let k = self.indices.len();
        let g = DenseMatrix::from_fn(k, k, |i, j| {
            let (ci, cj) = (self.indices[i], self.indices[j]);
            let plain: f64 = (0..a.rows()).map(|r| a.get(r, ci) * a.get(r, cj)).sum();
            plain + eps * b[ci] * b[cj]
        });
        // Column-by-column so the factor's source ids track the support.
        let mut rebuilt = SpdFactor::empty();
        for (pos, &id) in self.indices.iter().enumerate() {
            let col: Vec<f64> = (0..pos).map(|r| g.get(r, pos)).collect();
            rebuilt = factor_add_index(&rebuilt, &col, g.get(pos, pos), id)
                .map_err(|_| SolverError::DegenerateSupport)?;
        }
        self.factor = rebuilt;
        Ok(())
    }

    fn insert(&mut self, a: &DenseMatrix, b: &[f64], eps: f64, index: usize, sign: f64) -> Result<()> {
        let gram_col: Vec<f64> = self
            .indices
            .iter()
            .map(|&c| {
                let plain: f64 = (0..a.rows()).map(|r| a.get(r, c) * a.get(r, index)).sum();
                plain + eps * b[c] * b[index]
            })
            .collect();
        let diag: f64 = (0..a.rows()).map(|r| a.get(r, index) * a.get(r, index)).sum::<f64>()
            + eps * b[index] * b[index];
        self.factor = factor_add_index(&self.factor, &gram_col, diag, index)
            .map_err(|_| SolverError::DegenerateSupport)?;
        self.indices.push(index);
        self.signs.push(sign);
        self.b_on.push(b[index]);
        Ok(())
    }

    fn remove(&mut self, index: usize) -> Result<()> {
        let pos = self
            .indices
            .iter()
            .position(|&j| j == index)
            .expect("removal of an index not in the support");
        self.factor =
            factor_remove_index(&self.factor, pos).map_err(|_| SolverError::DegenerateSupport)?;
        self.indices.remove(pos);
        self.signs.remove(pos);
        self.b_on.remove(pos);
        Ok(())
    }
}

/// Adds one measurement row `(b, w)` to a solved BPDN instance and returns
/// the state for the stacked system, still at the same `tau`.
pub fn bpdn_add_measurement<S: SensingMatrix>(
    state: &BpdnState,
    a: &S,
    y: &[f64],
    b: &[f64],
    w: f64,
) -> Result<(BpdnState, SeqUpdateTrace)> {
    let mat = a.matrix();
    if b.len() != mat.cols() {
        return Err(SolverError::dim("new row length must equal column count"));
    }
    state.check_consistent(mat, y, state.tau())?;
    let (x, corr, trace, factor) =
        seq_homotopy(a, y, state, b, w, Direction::Add).map(|r| (r.0, r.1, r.2, r.3))?;
    let stacked = mat.vstack(&DenseMatrix::new(1, b.len(), b.to_vec())?)?;
    let active = ActiveSet::from_parts(factor.indices, factor.signs, factor.factor);
    let next = BpdnState {
        x,
        tau: state.tau(),
        active,
        corr,
    };
    debug_assert!({
        let mut ys = y.to_vec();
        ys.push(w);
        crate::bpdn::bpdn_kkt(&stacked, &ys, next.tau, &next.x).pass
    });
    Ok((next, trace))
}

/// Removes measurement row `row` from a solved stacked BPDN instance by
/// running the same homotopy with the parameter going from 1 to 0. Returns
/// the state for the reduced system.
pub fn bpdn_remove_measurement<S: SensingMatrix>(
    state: &BpdnState,
    a_stacked: &S,
    y_stacked: &[f64],
    row: usize,
) -> Result<(BpdnState, SeqUpdateTrace)> {
    let mat = a_stacked.matrix();
    if row >= mat.rows() {
        return Err(SolverError::arg("row index out of range"));
    }
    if mat.rows() < 2 {
        return Err(SolverError::arg("cannot remove the only measurement"));
    }
    state.check_consistent(mat, y_stacked, state.tau())?;
    let b = mat.row(row).to_vec();
    let w = y_stacked[row];
    let reduced = mat.without_row(row)?;
    let mut y_reduced = y_stacked.to_vec();
    y_reduced.remove(row);

    let (x, corr, trace, factor) = seq_homotopy(
        &CountingView { inner: &reduced, outer: a_stacked },
        &y_reduced,
        state,
        &b,
        w,
        Direction::Remove,
    )
    .map(|r| (r.0, r.1, r.2, r.3))?;
    let active = ActiveSet::from_parts(factor.indices, factor.signs, factor.factor);
    let next = BpdnState {
        x,
        tau: state.tau(),
        active,
        corr,
    };
    debug_assert!(crate::bpdn::bpdn_kkt(&reduced, &y_reduced, next.tau, &next.x).pass);
    Ok((next, trace))
}

/// Lets the removal path run against the reduced matrix while product
/// counting still flows to the caller's wrapper.
struct CountingView<'a, S: SensingMatrix> {
    inner: &'a DenseMatrix,
    outer: &'a S,
}

impl<S: SensingMatrix> SensingMatrix for CountingView<'_, S> {
    fn matrix(&self) -> &DenseMatrix {
        self.inner
    }

    fn note_gram_product(&self) {
        self.outer.note_gram_product();
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Direction {
    Add,
    Remove,
}

/// Shared path tracer for add (eps 0 -> 1) and remove (eps 1 -> 0).
/// For removal, `a` is already the reduced matrix and the state's factor is
/// `U(1)` of the reduced-plus-row system, which is exactly the stacked Gram.
fn seq_homotopy<S: SensingMatrix>(
    a: &S,
    y: &[f64],
    state: &BpdnState,
    b: &[f64],
    w: f64,
    direction: Direction,
) -> Result<(Vec<f64>, Vec<f64>, SeqUpdateTrace, EpsFactor)> {
    let mat = a.matrix();
    let n = mat.cols();
    let tau = state.tau();
    let limit = seq_iteration_limit(n);
    let mut trace = SeqUpdateTrace {
        final_epsilon: match direction {
            Direction::Add => 1.0,
            Direction::Remove => 0.0,
        },
        ..Default::default()
    };
    let mut x = state.x().to_vec();
    let mut p = state.correlations().to_vec();
    let mut eps = match direction {
        Direction::Add => 0.0,
        Direction::Remove => 1.0,
    };
    let mut fac = EpsFactor::from_state(state, b);
    let mut steps_since_refresh = 0usize;

    loop {
        let done = match direction {
            Direction::Add => eps >= 1.0,
            Direction::Remove => eps <= 0.0,
        };
        if done {
            break;
        }
        if trace.steps.len() > limit {
            return Err(SolverError::IterationLimit { limit });
        }
        let r = dot(b, &x) - w;
        let u = fac.u()?;
        // dx = -/+ U^-1 b_G' r on the support.
        let dir_sign = match direction {
            Direction::Add => -1.0,
            Direction::Remove => 1.0,
        };
        let dx: Vec<f64> = if fac.indices.is_empty() {
            Vec::new()
        } else {
            fac.factor
                .solve(&fac.b_on)
                .into_iter()
                .map(|v| dir_sign * r * v)
                .collect()
        };
        // d = A'(A_G dx) + (eps (b dx) +/- r) b', exactly linear in theta.
        let b_dx = dot(&fac.b_on, &dx);
        let mut d: Vec<f64> = if dx.iter().all(|&v| v == 0.0) {
            vec![0.0; n]
        } else {
            a.note_gram_product();
            trace.gram_products += 1;
            mat.apply_t(&mat.combine_cols(&fac.indices, &dx))
        };
        // Add: d += (eps b_dx + r) b.  Remove: d += (eps b_dx - r) b.
        axpy(&mut d, eps * b_dx - dir_sign * r, b);

        let x_on: Vec<f64> = fac.indices.iter().map(|&j| x[j]).collect();
        let shrink = min_shrink_step_signed(&x_on, &dx, &fac.signs, &fac.indices);
        let (p_off, d_off, idx_off) = complement_off(&p, &d, &fac.indices, n);
        let activate = min_activation_step(&p_off, &d_off, tau, &idx_off)?;
        let ev = shrink.min(activate);

        // Endpoint clamp in theta space.
        let theta_end = match direction {
            Direction::Add => (1.0 - eps) / (1.0 + (1.0 - eps) * u),
            Direction::Remove => eps / (1.0 - eps * u),
        };
        if theta_end < 0.0 {
            return Err(SolverError::NonmonotoneEpsilon);
        }
        if ev.theta >= theta_end * (1.0 - RATIO_TOL) {
            for (pos, &j) in fac.indices.iter().enumerate() {
                x[j] += theta_end * dx[pos];
            }
            axpy(&mut p, theta_end, &d);
            let d_eps = match direction {
                Direction::Add => 1.0 - eps,
                Direction::Remove => -eps,
            };
            fac.advance_eps(d_eps, mat, b, trace.final_epsilon)?;
            trace.u_values.push(u);
            break;
        }

        for (pos, &j) in fac.indices.iter().enumerate() {
            x[j] += ev.theta * dx[pos];
        }
        axpy(&mut p, ev.theta, &d);
        let d_eps = match direction {
            Direction::Add => ev.theta / (1.0 - ev.theta * u),
            Direction::Remove => -ev.theta / (1.0 + ev.theta * u),
        };
        if (direction == Direction::Add && d_eps <= 0.0)
            || (direction == Direction::Remove && d_eps >= 0.0)
        {
            return Err(SolverError::NonmonotoneEpsilon);
        }
        eps += d_eps;
        fac.advance_eps(d_eps, mat, b, eps)?;
        match ev.kind {
            StepKind::Shrink => {
                let gamma = ev.gamma.expect("shrink index");
                x[gamma] = 0.0;
                fac.remove(gamma)?;
            }
            StepKind::Activate => {
                let gamma = ev.gamma.expect("activation index");
                fac.insert(mat, b, eps, gamma, -ev.gamma_sign.expect("activation sign"))?;
            }
            StepKind::Terminal => unreachable!("terminal never beats the endpoint clamp"),
        }
        trace.steps.push(ev);
        trace.epsilons.push(eps);
        trace.u_values.push(u);

        steps_since_refresh += 1;
        if steps_since_refresh >= CORR_REFRESH_INTERVAL {
            steps_since_refresh = 0;
            a.note_gram_product();
            trace.gram_products += 1;
            let mut res = residual(mat, &x, y);
            let rr = dot(b, &x) - w;
            p = mat.apply_t(&res);
            axpy(&mut p, eps * rr, b);
            res.clear();
        }
    }
    Ok((x, p, trace, fac))
}

fn complement_off(
    p: &[f64],
    d: &[f64],
    support: &[usize],
    n: usize,
) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
    let mut mask = vec![false; n];
    for &j in support {
        mask[j] = true;
    }
    let mut p_off = Vec::new();
    let mut d_off = Vec::new();
    let mut idx = Vec::new();
    for j in 0..n {
        if !mask[j] {
            p_off.push(p[j]);
            d_off.push(d[j]);
            idx.push(j);
        }
    }
    (p_off, d_off, idx)
}

/// Gram operator of the growing system `A'A + eps b'b`, for the
/// Dantzig-selector sequential update.
struct SeqGram<'a, S: SensingMatrix> {
    a: &'a S,
    b: &'a [f64],
    eps: std::cell::Cell<f64>,
    products: std::cell::Cell<u64>,
}

impl<S: SensingMatrix> DsOperator for SeqGram<'_, S> {
    fn n(&self) -> usize {
        self.a.matrix().cols()
    }

    fn cross_entry(&self, p: usize, q: usize) -> f64 {
        let m = self.a.matrix();
        let plain: f64 = (0..m.rows()).map(|r| m.get(r, p) * m.get(r, q)).sum();
        plain + self.eps.get() * self.b[p] * self.b[q]
    }

    fn gram_combination(&self, ids: &[usize], coefs: &[f64]) -> Vec<f64> {
        self.a.note_gram_product();
        self.products.set(self.products.get() + 1);
        let m = self.a.matrix();
        let mut out = m.apply_t(&m.combine_cols(ids, coefs));
        let b_component: f64 = ids.iter().zip(coefs).map(|(&j, &c)| self.b[j] * c).sum();
        axpy(&mut out, self.eps.get() * b_component, self.b);
        out
    }
}

/// Adds one measurement row `(b, w)` to a solved Dantzig-selector instance.
/// Each step moves the primal and dual solutions together to the first
/// support event on either side, then completes the lagging side.
pub fn ds_add_measurement<S: SensingMatrix>(
    state: &DsState,
    a: &S,
    y: &[f64],
    b: &[f64],
    w: f64,
) -> Result<(DsState, SeqUpdateTrace)> {
    let mat = a.matrix();
    if b.len() != mat.cols() {
        return Err(SolverError::dim("new row length must equal column count"));
    }
    state.check_consistent(mat, y, state.tau())?;

    let n = mat.cols();
    let tau = state.tau();
    let limit = seq_iteration_limit(n);
    let mut trace = SeqUpdateTrace {
        final_epsilon: 1.0,
        ..Default::default()
    };
    let mut next = state.clone();
    let op = SeqGram {
        a,
        b,
        eps: std::cell::Cell::new(0.0),
        products: std::cell::Cell::new(0),
    };
    let mut eps = 0.0f64;
    let mut steps_since_refresh = 0usize;
    // A'y, computed once for the periodic refreshes.
    let aty = mat.apply_t(y);

    while eps < 1.0 {
        if trace.steps.len() > limit {
            return Err(SolverError::IterationLimit { limit });
        }
        op.eps.set(eps);
        let r = dot(b, &next.x) - w;
        let q = dot(b, &next.lambda);
        let b_gl: Vec<f64> = next.gamma_l.iter().map(|&j| b[j]).collect();
        let b_gx: Vec<f64> = next.gamma_x.iter().map(|&j| b[j]).collect();

        let (dx, dl, u) = match next.cross.as_ref() {
            Some(cross) => {
                let minv_bl = cross.solve(&b_gl);
                let u = dot(&b_gx, &minv_bl);
                let dx: Vec<f64> = minv_bl.iter().map(|&v| -r * v).collect();
                let mtinv_bx = cross.solve_t(&b_gx);
                let dl: Vec<f64> = mtinv_bx.iter().map(|&v| -q * v).collect();
                (dx, dl, u)
            }
            None => (Vec::new(), Vec::new(), 0.0),
        };

        // Constraint motions, exactly linear in theta.
        let mut dp = if dx.iter().all(|&v| v == 0.0) {
            vec![0.0; n]
        } else {
            op.gram_combination(&next.gamma_x, &dx)
        };
        axpy(&mut dp, r, b);
        let mut dd = if dl.iter().all(|&v| v == 0.0) {
            vec![0.0; n]
        } else {
            op.gram_combination(&next.gamma_l, &dl)
        };
        axpy(&mut dd, q, b);

        let x_on: Vec<f64> = next.gamma_x.iter().map(|&j| next.x[j]).collect();
        let shrink_x = min_shrink_step_signed(&x_on, &dx, &next.zx, &next.gamma_x);
        let (pp, ddp, idxp) = complement_values(&next.pcorr, &dp, &next.gamma_l, n);
        let act_p = min_activation_step(&pp, &ddp, tau, &idxp)?;
        let l_on: Vec<f64> = next.gamma_l.iter().map(|&j| next.lambda[j]).collect();
        let shrink_l = min_shrink_step_signed(&l_on, &dl, &next.zl, &next.gamma_l);
        let (pd, ddd, idxd) = complement_values(&next.dcorr, &dd, &next.gamma_x, n);
        let act_d = min_activation_step(&pd, &ddd, 1.0, &idxd)?;

        let primal_ev = shrink_x.min(act_p);
        let dual_ev = shrink_l.min(act_d);
        let ev = primal_ev.min(dual_ev);
        // Identify which side the winner came from by field identity.
        let primal_side = ev.theta.to_bits() == primal_ev.theta.to_bits()
            && ev.gamma == primal_ev.gamma
            && ev.kind == primal_ev.kind;

        // The cross Gram is not symmetric, so u may be negative; a
        // non-positive denominator means the matrix turns singular before
        // the endpoint and an event is guaranteed to fire first.
        let end_denom = 1.0 + (1.0 - eps) * u;
        let theta_end = if end_denom > 0.0 {
            (1.0 - eps) / end_denom
        } else {
            f64::INFINITY
        };
        if ev.is_terminal() && theta_end.is_infinite() {
            return Err(SolverError::SingularCrossGram);
        }
        if ev.theta >= theta_end * (1.0 - RATIO_TOL) {
            advance_pair(&mut next, &dx, &dl, theta_end, &dp, &dd);
            if let Some(cross) = next.cross.as_mut() {
                let du: Vec<f64> = b_gl.iter().map(|v| v * (1.0 - eps)).collect();
                cross.rank1(&du, &b_gx)?;
            }
            trace.u_values.push(u);
            break;
        }

        advance_pair(&mut next, &dx, &dl, ev.theta, &dp, &dd);
        let d_eps = ev.theta / (1.0 - ev.theta * u);
        if d_eps <= 0.0 {
            return Err(SolverError::NonmonotoneEpsilon);
        }
        eps += d_eps;
        op.eps.set(eps);
        if let Some(cross) = next.cross.as_mut() {
            let du: Vec<f64> = b_gl.iter().map(|v| v * d_eps).collect();
            cross.rank1(&du, &b_gx)?;
        }
        trace.steps.push(ev);
        trace.epsilons.push(eps);
        trace.u_values.push(u);

        if primal_side {
            let change = match ev.kind {
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
                change,
            )?;
            apply_primal_then_dual(
                &op,
                &mut next.cross,
                &mut next.gamma_x,
                &mut next.zx,
                &mut next.gamma_l,
                &mut next.zl,
                change,
                dual_event,
            )?;
        } else {
            let change = match ev.kind {
                StepKind::Shrink => {
                    let gamma = ev.gamma.expect("shrink index");
                    next.lambda[gamma] = 0.0;
                    let pos = next
                        .gamma_l
                        .iter()
                        .position(|&j| j == gamma)
                        .expect("index in dual support");
                    SupportChange::Removed { pos, index: gamma }
                }
                // A dual constraint activated: the new primal element is
                // born with the opposite sign of the boundary it hit.
                StepKind::Activate => SupportChange::Added {
                    index: ev.gamma.expect("activation index"),
                    sign: -ev.gamma_sign.expect("activation sign"),
                },
                StepKind::Terminal => unreachable!(),
            };
            let primal_event = primal_completion(
                &op,
                next.cross.as_ref(),
                &next.gamma_x,
                &next.gamma_l,
                &next.zl,
                tau,
                &mut next.x,
                &mut next.pcorr,
                change,
            )?;
            apply_dual_then_primal(
                &op,
                &mut next.cross,
                &mut next.gamma_x,
                &mut next.zx,
                &mut next.gamma_l,
                &mut next.zl,
                change,
                primal_event,
            )?;
        }

        steps_since_refresh += 1;
        if steps_since_refresh >= CORR_REFRESH_INTERVAL {
            steps_since_refresh = 0;
            // p = (A'A + eps b'b) x - A'y - eps w b.
            let xsupp: Vec<usize> = (0..n).filter(|&j| next.x[j] != 0.0).collect();
            let xvals: Vec<f64> = xsupp.iter().map(|&j| next.x[j]).collect();
            next.pcorr = op.gram_combination(&xsupp, &xvals);
            for (pi, ai) in next.pcorr.iter_mut().zip(&aty) {
                *pi -= ai;
            }
            axpy(&mut next.pcorr, -eps * w, b);
            let supp: Vec<usize> = (0..n).filter(|&j| next.lambda[j] != 0.0).collect();
            let coefs: Vec<f64> = supp.iter().map(|&j| next.lambda[j]).collect();
            next.dcorr = op.gram_combination(&supp, &coefs);
        }
    }
    trace.gram_products = op.products.get();

    // Re-anchor the state on the stacked system.
    next.tau = tau;
    debug_assert!({
        let stacked = mat.vstack(&DenseMatrix::new(1, b.len(), b.to_vec())?)?;
        let mut ys = y.to_vec();
        ys.push(w);
        crate::dantzig::ds_kkt(&stacked, &ys, tau, &next.x, &next.lambda).pass
    });
    Ok((next, trace))
}

fn advance_pair(
    state: &mut DsState,
    dx: &[f64],
    dl: &[f64],
    theta: f64,
    dp: &[f64],
    dd: &[f64],
) {
    for (pos, &j) in state.gamma_x.iter().enumerate() {
        state.x[j] += theta * dx[pos];
    }
    for (pos, &j) in state.gamma_l.iter().enumerate() {
        state.lambda[j] += theta * dl[pos];
    }
    axpy(&mut state.pcorr, theta, dp);
    axpy(&mut state.dcorr, theta, dd);
}
