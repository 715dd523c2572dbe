//! The Dantzig selector:
//!
//! ```text
//!     minimize ||x||_1   subject to   ||A'(A x - y)||_inf <= tau
//! ```
//!
//! solved by a primal-dual homotopy in `tau`. Unlike BPDN, both the primal
//! solution `x` and the dual solution `lambda` (of the problem
//! `maximize -(tau ||l||_1 + <l, A'y>)  s.t.  ||A'A l||_inf <= 1`) must be
//! tracked. A primal-dual pair with supports `Gx`, `Gl` and sign sequences
//! `zx`, `zl` is optimal iff
//!
//! ```text
//!     A_Gl'(A x - y) =  tau zl        ||A_Glc'(A x - y)||_inf < tau
//!     A_Gx' A lambda = -zx            ||A_Gxc' A lambda||_inf < 1
//! ```
//!
//! At every critical point a *primal update* moves `x` (and `tau`) until an
//! entry of `x` dies or a primal constraint activates, then a *dual update*
//! moves `lambda` along the one-dimensional family left open by the support
//! change until the supports balance again. The square cross Gram matrix
//! `A_Gl' A_Gx` is kept as an explicitly updated inverse, refreshed
//! periodically; it has no symmetric factorization to update.

use crate::bpdn::{argmax_abs, residual, CORR_REFRESH_INTERVAL};
use crate::error::{Result, SolverError};
use crate::homotopy::{
    min_activation_step, min_activation_step_shrinking_bound, min_shrink_step_signed,
    SensingMatrix, StepEvent, StepKind, RATIO_TOL,
};
use crate::linalg::{axpy, norm_inf, DenseMatrix, SquareInverse};

/// Primal-dual Dantzig-selector state, sufficient to resume any homotopy.
#[derive(Debug, Clone)]
pub struct DsState {
    pub(crate) x: Vec<f64>,
    pub(crate) lambda: Vec<f64>,
    pub(crate) tau: f64,
    /// Primal support; aligned with the columns of `cross`.
    pub(crate) gamma_x: Vec<usize>,
    /// Dual support; aligned with the rows of `cross`.
    pub(crate) gamma_l: Vec<usize>,
    pub(crate) zx: Vec<f64>,
    pub(crate) zl: Vec<f64>,
    /// Inverse of the cross Gram `A_Gl' A_Gx`; `None` while supports are empty.
    pub(crate) cross: Option<SquareInverse>,
    /// Cached `A'(Ax - y)`.
    pub(crate) pcorr: Vec<f64>,
    /// Cached `A'A lambda`.
    pub(crate) dcorr: Vec<f64>,
}

impl DsState {
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn primal_support(&self) -> &[usize] {
        &self.gamma_x
    }

    pub fn dual_support(&self) -> &[usize] {
        &self.gamma_l
    }

    pub(crate) fn check_consistent(&self, a: &DenseMatrix, y: &[f64], tau: f64) -> Result<()> {
        if (self.tau - tau).abs() > 1e-12 * tau.max(1.0) {
            return Err(SolverError::StaleWarmStart);
        }
        if self.gamma_x.len() != self.gamma_l.len() {
            return Err(SolverError::StaleWarmStart);
        }
        let r = residual(a, &self.x, y);
        let n = self.x.len();
        for &j in [0, n / 2, n - 1].iter() {
            let fresh = a.col_dot(j, &r);
            if (fresh - self.pcorr[j]).abs() > 1e-7 * (1.0 + norm_inf(&self.pcorr)) {
                return Err(SolverError::StaleWarmStart);
            }
        }
        for (pos, &j) in self.gamma_l.iter().enumerate() {
            if (self.pcorr[j] - tau * self.zl[pos]).abs() > 1e-7 * tau.max(1.0) {
                return Err(SolverError::StaleWarmStart);
            }
        }
        for (pos, &j) in self.gamma_x.iter().enumerate() {
            if (self.dcorr[j] + self.zx[pos]).abs() > 1e-7 {
                return Err(SolverError::StaleWarmStart);
            }
        }
        Ok(())
    }
}

/// Certificate report for the four Dantzig-selector optimality conditions.
#[derive(Debug, Clone, Copy)]
pub struct DsKktReport {
    /// `||A_Gl'(Ax-y) - tau zl||_inf` over the dual support.
    pub primal_support_violation: f64,
    /// `||A_Gx'A lambda + zx||_inf` over the primal support.
    pub dual_support_violation: f64,
    /// `||A_Glc'(Ax-y)||_inf` off the dual support.
    pub primal_off: f64,
    /// `||A_Gxc'A lambda||_inf` off the primal support.
    pub dual_off: f64,
    pub pass: bool,
}

/// Checks the four optimality conditions for an arbitrary primal-dual pair.
/// Supports are the exactly nonzero entries.
pub fn ds_kkt(a: &DenseMatrix, y: &[f64], tau: f64, x: &[f64], lambda: &[f64]) -> DsKktReport {
    let r = residual(a, x, y);
    let pcorr = a.apply_t(&r);
    let al = a.combine_cols(
        &(0..lambda.len())
            .filter(|&j| lambda[j] != 0.0)
            .collect::<Vec<_>>(),
        &lambda
            .iter()
            .copied()
            .filter(|&v| v != 0.0)
            .collect::<Vec<_>>(),
    );
    let dcorr = a.apply_t(&al);
    let mut ps: f64 = 0.0;
    let mut ds: f64 = 0.0;
    let mut poff: f64 = 0.0;
    let mut doff: f64 = 0.0;
    for j in 0..x.len() {
        if lambda[j] != 0.0 {
            ps = ps.max((pcorr[j] - tau * lambda[j].signum()).abs());
        } else {
            poff = poff.max(pcorr[j].abs());
        }
        if x[j] != 0.0 {
            ds = ds.max((dcorr[j] + x[j].signum()).abs());
        } else {
            doff = doff.max(dcorr[j].abs());
        }
    }
    DsKktReport {
        primal_support_violation: ps,
        dual_support_violation: ds,
        primal_off: poff,
        dual_off: doff,
        pass: ps <= 1e-8 * tau
            && ds <= 1e-8
            && poff <= tau * (1.0 + 1e-8)
            && doff <= 1.0 + 1e-8,
    }
}

/// Operator abstraction shared by the plain and sequential-update variants:
/// the sequential homotopy works against `A'A + eps b'b` instead of `A'A`.
pub(crate) trait DsOperator {
    fn n(&self) -> usize;
    /// Entry of the (symmetric) Gram operator between two columns.
    fn cross_entry(&self, p: usize, q: usize) -> f64;
    /// Applies the full Gram operator to a vector supported on `ids` with
    /// the given coefficients. Counts as one full product.
    fn gram_combination(&self, ids: &[usize], coefs: &[f64]) -> Vec<f64>;
}

pub(crate) struct PlainGram<'a, S: SensingMatrix> {
    pub a: &'a S,
    pub products: std::cell::Cell<u64>,
}

impl<'a, S: SensingMatrix> PlainGram<'a, S> {
    pub fn new(a: &'a S) -> Self {
        PlainGram {
            a,
            products: std::cell::Cell::new(0),
        }
    }
}

impl<S: SensingMatrix> DsOperator for PlainGram<'_, S> {
    fn n(&self) -> usize {
        self.a.matrix().cols()
    }

    fn cross_entry(&self, p: usize, q: usize) -> f64 {
        let m = self.a.matrix();
        (0..m.rows()).map(|r| m.get(r, p) * m.get(r, q)).sum()
    }

    fn gram_combination(&self, ids: &[usize], coefs: &[f64]) -> Vec<f64> {
        self.a.note_gram_product();
        self.products.set(self.products.get() + 1);
        let m = self.a.matrix();
        m.apply_t(&m.combine_cols(ids, coefs))
    }
}

/// What the leading phase did to the supports.
#[derive(Debug, Clone, Copy)]
pub(crate) enum SupportChange {
    /// A constraint activated: `index` wants to join the other side's
    /// support with boundary sign `sign`.
    Added { index: usize, sign: f64 },
    /// A tracked entry died: `index` left the support at `pos`.
    Removed { pos: usize, index: usize },
}

/// Outcome of a completion phase.
#[derive(Debug, Clone, Copy)]
pub(crate) enum CompletionEvent {
    Shrink {
        pos: usize,
        #[allow(dead_code)]
        index: usize,
    },
    Activate { index: usize, sign: f64 },
}

/// Moves the dual vector along the one-dimensional family left open by a
/// primal support change, until either a dual coefficient dies or a dual
/// constraint activates. Mutates `lambda` and `dcorr` in place and returns
/// the event; support lists and the cross inverse are the caller's job.
pub(crate) fn dual_completion(
    op: &impl DsOperator,
    cross: Option<&SquareInverse>,
    gamma_x: &[usize],
    _zx: &[f64],
    gamma_l: &[usize],
    lambda: &mut [f64],
    dcorr: &mut [f64],
    change: SupportChange,
) -> Result<CompletionEvent> {
    let mut work_ids: Vec<usize> = gamma_l.to_vec();
    let mut dl: Vec<f64>;
    match change {
        SupportChange::Added { index, sign } => {
            // New dual element at `index` grows with the boundary sign; the
            // rest of the dual support moves to keep the equalities intact.
            // From empty supports (path seeding) the direction is just the
            // new coordinate itself.
            match cross {
                Some(cross) if !gamma_x.is_empty() => {
                    let rhs: Vec<f64> =
                        gamma_x.iter().map(|&g| op.cross_entry(index, g)).collect();
                    let w = cross.solve_t(&rhs);
                    dl = w.iter().map(|&v| -sign * v).collect();
                }
                _ => dl = Vec::new(),
            }
            dl.push(sign);
            work_ids.push(index);
        }
        SupportChange::Removed { pos, .. } => {
            // Null direction of the cross Gram with the dead column removed.
            dl = cross.ok_or(SolverError::SingularCrossGram)?.inverse_row(pos);
        }
    }
    let b = op.gram_combination(&work_ids, &dl);
    let mut b = b;
    if let SupportChange::Removed { index, .. } = change {
        // Orient so the freed dual constraint at the removed index relaxes
        // inward from its boundary: the value -zx must move toward zero.
        let boundary = dcorr[index];
        let flip = if b[index] * boundary > 0.0 {
            true
        } else if b[index] == 0.0 {
            // Degenerate: fall back to growing the largest dual coefficient
            // in the direction of its own sign.
            let art = gamma_l
                .iter()
                .enumerate()
                .max_by(|(_, &i), (_, &j)| {
                    lambda[i].abs().partial_cmp(&lambda[j].abs()).unwrap()
                })
                .map(|(pos, _)| pos)
                .ok_or(SolverError::SingularCrossGram)?;
            dl[art] * lambda[gamma_l[art]] < 0.0
        } else {
            false
        };
        if flip {
            for v in dl.iter_mut() {
                *v = -*v;
            }
            for v in b.iter_mut() {
                *v = -*v;
            }
        }
    }

    let l_on: Vec<f64> = work_ids.iter().map(|&j| lambda[j]).collect();
    let l_signs: Vec<f64> = work_ids
        .iter()
        .zip(&dl)
        .map(|(&j, &dj)| if lambda[j] != 0.0 { lambda[j].signum() } else { dj.signum() })
        .collect();
    let shrink = min_shrink_step_signed(&l_on, &dl, &l_signs, &work_ids);

    let n = op.n();
    let mut in_gx = vec![false; n];
    for &j in gamma_x {
        in_gx[j] = true;
    }
    if let SupportChange::Removed { index, .. } = change {
        // The dead primal index is off the support from here on; its dual
        // constraint is back among the activation candidates.
        in_gx[index] = false;
    }
    let mut p_off = Vec::new();
    let mut b_off = Vec::new();
    let mut idx_off = Vec::new();
    for j in 0..n {
        if !in_gx[j] {
            p_off.push(dcorr[j]);
            b_off.push(b[j]);
            idx_off.push(j);
        }
    }
    let activate = min_activation_step(&p_off, &b_off, 1.0, &idx_off)?;
    let ev = shrink.min(activate);
    if ev.is_terminal() {
        return Err(SolverError::SingularCrossGram);
    }
    for (&j, &d) in work_ids.iter().zip(&dl) {
        lambda[j] += ev.theta * d;
    }
    axpy(dcorr, ev.theta, &b);
    match ev.kind {
        StepKind::Shrink => {
            let gamma = ev.gamma.expect("shrink index");
            lambda[gamma] = 0.0;
            let pos = work_ids
                .iter()
                .position(|&j| j == gamma)
                .expect("shrink hits the working support");
            Ok(CompletionEvent::Shrink { pos, index: gamma })
        }
        StepKind::Activate => Ok(CompletionEvent::Activate {
            index: ev.gamma.expect("activation index"),
            sign: ev.gamma_sign.expect("activation sign"),
        }),
        StepKind::Terminal => unreachable!(),
    }
}

/// Mirror image of [`dual_completion`]: moves the primal vector along the
/// family left open by a dual support change, at a fixed constraint bound
/// `tau`, until a primal coefficient dies or a primal constraint activates.
pub(crate) fn primal_completion(
    op: &impl DsOperator,
    cross: Option<&SquareInverse>,
    gamma_x: &[usize],
    gamma_l: &[usize],
    zl: &[f64],
    tau: f64,
    x: &mut [f64],
    pcorr: &mut [f64],
    change: SupportChange,
) -> Result<CompletionEvent> {
    let mut work_ids: Vec<usize> = gamma_x.to_vec();
    let mut dx: Vec<f64>;
    match change {
        SupportChange::Added { index, sign } => {
            // New primal element at `index` grows with `sign` (already the
            // primal sign); the rest of the support moves to keep the primal
            // equalities intact.
            match cross {
                Some(cross) if !gamma_l.is_empty() => {
                    let rhs: Vec<f64> =
                        gamma_l.iter().map(|&g| op.cross_entry(g, index)).collect();
                    let w = cross.solve(&rhs);
                    dx = w.iter().map(|&v| -sign * v).collect();
                }
                _ => dx = Vec::new(),
            }
            dx.push(sign);
            work_ids.push(index);
        }
        SupportChange::Removed { pos, .. } => {
            dx = cross.ok_or(SolverError::SingularCrossGram)?.inverse_col(pos);
        }
    }
    let d = op.gram_combination(&work_ids, &dx);
    let mut d = d;
    if let SupportChange::Removed { index, .. } = change {
        // The freed primal constraint at the removed dual index must relax
        // inward from tau * zl.
        let boundary = pcorr[index];
        let flip = if d[index] * boundary > 0.0 {
            true
        } else if d[index] == 0.0 {
            let art = gamma_x
                .iter()
                .enumerate()
                .max_by(|(_, &i), (_, &j)| x[i].abs().partial_cmp(&x[j].abs()).unwrap())
                .map(|(pos, _)| pos)
                .ok_or(SolverError::SingularCrossGram)?;
            dx[art] * x[gamma_x[art]] < 0.0
        } else {
            false
        };
        if flip {
            for v in dx.iter_mut() {
                *v = -*v;
            }
            for v in d.iter_mut() {
                *v = -*v;
            }
        }
    }
    let _ = zl;

    let x_on: Vec<f64> = work_ids.iter().map(|&j| x[j]).collect();
    let x_signs: Vec<f64> = work_ids
        .iter()
        .zip(&dx)
        .map(|(&j, &dj)| if x[j] != 0.0 { x[j].signum() } else { dj.signum() })
        .collect();
    let shrink = min_shrink_step_signed(&x_on, &dx, &x_signs, &work_ids);

    let n = op.n();
    let mut in_gl = vec![false; n];
    for &j in gamma_l {
        in_gl[j] = true;
    }
    if let SupportChange::Removed { index, .. } = change {
        in_gl[index] = false;
    }
    let mut p_off = Vec::new();
    let mut d_off = Vec::new();
    let mut idx_off = Vec::new();
    for j in 0..n {
        if !in_gl[j] {
            p_off.push(pcorr[j]);
            d_off.push(d[j]);
            idx_off.push(j);
        }
    }
    let activate = min_activation_step(&p_off, &d_off, tau, &idx_off)?;
    let ev = shrink.min(activate);
    if ev.is_terminal() {
        return Err(SolverError::SingularCrossGram);
    }
    for (&j, &v) in work_ids.iter().zip(&dx) {
        x[j] += ev.theta * v;
    }
    axpy(pcorr, ev.theta, &d);
    match ev.kind {
        StepKind::Shrink => {
            let gamma = ev.gamma.expect("shrink index");
            x[gamma] = 0.0;
            let pos = work_ids
                .iter()
                .position(|&j| j == gamma)
                .expect("shrink hits the working support");
            Ok(CompletionEvent::Shrink { pos, index: gamma })
        }
        StepKind::Activate => Ok(CompletionEvent::Activate {
            index: ev.gamma.expect("activation index"),
            sign: ev.gamma_sign.expect("activation sign"),
        }),
        StepKind::Terminal => unreachable!(),
    }
}

/// Applies the net support change of one primal-phase + dual-completion pair
/// to the cross inverse and the support/sign lists.
#[allow(clippy::too_many_arguments)]
pub(crate) fn apply_primal_then_dual(
    op: &impl DsOperator,
    state_cross: &mut Option<SquareInverse>,
    gamma_x: &mut Vec<usize>,
    zx: &mut Vec<f64>,
    gamma_l: &mut Vec<usize>,
    zl: &mut Vec<f64>,
    primal: SupportChange,
    dual: CompletionEvent,
) -> Result<()> {
    if state_cross.is_none() {
        // Seeding from empty supports: the only reachable pair is an added
        // dual element plus a dual-constraint activation.
        if let (
            SupportChange::Added { index: gp, sign },
            CompletionEvent::Activate { index: gq, sign: t },
        ) = (primal, dual)
        {
            let m = DenseMatrix::new(1, 1, vec![op.cross_entry(gp, gq)])?;
            *state_cross = Some(SquareInverse::new(m)?);
            gamma_l.push(gp);
            zl.push(sign);
            gamma_x.push(gq);
            zx.push(-t);
            return Ok(());
        }
        return Err(SolverError::SingularCrossGram);
    }
    let cross = state_cross.as_mut().ok_or(SolverError::SingularCrossGram)?;
    match (primal, dual) {
        (SupportChange::Added { index: gp, sign }, CompletionEvent::Shrink { pos, .. }) => {
            // Dual support swaps one row.
            let new_row: Vec<f64> = gamma_x.iter().map(|&g| op.cross_entry(gp, g)).collect();
            cross.replace_row(pos, &new_row)?;
            gamma_l[pos] = gp;
            zl[pos] = sign;
        }
        (SupportChange::Added { index: gp, sign }, CompletionEvent::Activate { index: gq, sign: t }) => {
            let new_col: Vec<f64> = gamma_l.iter().map(|&g| op.cross_entry(g, gq)).collect();
            let new_row: Vec<f64> = gamma_x.iter().map(|&g| op.cross_entry(gp, g)).collect();
            cross.grow(&new_col, &new_row, op.cross_entry(gp, gq))?;
            gamma_l.push(gp);
            zl.push(sign);
            gamma_x.push(gq);
            zx.push(-t);
        }
        (SupportChange::Removed { pos: px, .. }, CompletionEvent::Shrink { pos: pl, .. }) => {
            if cross.dim() == 1 {
                *state_cross = None;
            } else {
                cross.shrink(pl, px)?;
            }
            gamma_x.remove(px);
            zx.remove(px);
            gamma_l.remove(pl);
            zl.remove(pl);
        }
        (SupportChange::Removed { pos: px, .. }, CompletionEvent::Activate { index: gq, sign: t }) => {
            let new_col: Vec<f64> = gamma_l.iter().map(|&g| op.cross_entry(g, gq)).collect();
            cross.replace_col(px, &new_col)?;
            gamma_x[px] = gq;
            zx[px] = -t;
        }
    }
    Ok(())
}

/// Net update for one dual-phase + primal-completion pair (the sequential
/// update can be led by the dual side).
#[allow(clippy::too_many_arguments)]
pub(crate) fn apply_dual_then_primal(
    op: &impl DsOperator,
    state_cross: &mut Option<SquareInverse>,
    gamma_x: &mut Vec<usize>,
    zx: &mut Vec<f64>,
    gamma_l: &mut Vec<usize>,
    zl: &mut Vec<f64>,
    dual: SupportChange,
    primal: CompletionEvent,
) -> Result<()> {
    if state_cross.is_none() {
        if let (
            SupportChange::Added { index: gq, sign },
            CompletionEvent::Activate { index: gp, sign: t },
        ) = (dual, primal)
        {
            let m = DenseMatrix::new(1, 1, vec![op.cross_entry(gp, gq)])?;
            *state_cross = Some(SquareInverse::new(m)?);
            gamma_x.push(gq);
            zx.push(sign);
            gamma_l.push(gp);
            zl.push(t);
            return Ok(());
        }
        return Err(SolverError::SingularCrossGram);
    }
    let cross = state_cross.as_mut().ok_or(SolverError::SingularCrossGram)?;
    match (dual, primal) {
        (SupportChange::Added { index: gq, sign }, CompletionEvent::Shrink { pos, .. }) => {
            // Primal support swaps one column. `sign` is already the primal
            // sign of the new element.
            let new_col: Vec<f64> = gamma_l.iter().map(|&g| op.cross_entry(g, gq)).collect();
            cross.replace_col(pos, &new_col)?;
            gamma_x[pos] = gq;
            zx[pos] = sign;
        }
        (SupportChange::Added { index: gq, sign }, CompletionEvent::Activate { index: gp, sign: t }) => {
            let new_col: Vec<f64> = gamma_l.iter().map(|&g| op.cross_entry(g, gq)).collect();
            let new_row: Vec<f64> = gamma_x.iter().map(|&g| op.cross_entry(gp, g)).collect();
            cross.grow(&new_col, &new_row, op.cross_entry(gp, gq))?;
            gamma_x.push(gq);
            zx.push(sign);
            gamma_l.push(gp);
            zl.push(t);
        }
        (SupportChange::Removed { pos: pl, .. }, CompletionEvent::Shrink { pos: px, .. }) => {
            if cross.dim() == 1 {
                *state_cross = None;
            } else {
                cross.shrink(pl, px)?;
            }
            gamma_l.remove(pl);
            zl.remove(pl);
            gamma_x.remove(px);
            zx.remove(px);
        }
        (SupportChange::Removed { pos: pl, .. }, CompletionEvent::Activate { index: gp, sign: t }) => {
            let new_row: Vec<f64> = gamma_x.iter().map(|&g| op.cross_entry(gp, g)).collect();
            cross.replace_row(pl, &new_row)?;
            gamma_l[pl] = gp;
            zl[pl] = t;
        }
    }
    Ok(())
}

/// Record of one Dantzig homotopy run.
#[derive(Debug, Clone, Default)]
pub struct DsPathTrace {
    pub steps: Vec<StepEvent>,
    pub gram_products: u64,
}

/// Solves the Dantzig selector from scratch. See [`solve_ds_traced`].
pub fn solve_ds<S: SensingMatrix>(a: &S, y: &[f64], tau: f64) -> Result<DsState> {
    solve_ds_traced(a, y, tau).map(|(s, _)| s)
}

/// Solves the Dantzig selector from scratch by the decreasing-`tau`
/// primal-dual homotopy.
pub fn solve_ds_traced<S: SensingMatrix>(
    a: &S,
    y: &[f64],
    tau: f64,
) -> Result<(DsState, DsPathTrace)> {
    let mat = a.matrix();
    if tau <= 0.0 {
        return Err(SolverError::arg("tau must be positive"));
    }
    if y.len() != mat.rows() {
        return Err(SolverError::dim("rhs length must equal row count"));
    }
    let n = mat.cols();
    let neg_aty = {
        let mut v = mat.apply_t(y);
        for e in v.iter_mut() {
            *e = -*e;
        }
        v
    };
    let tau0 = norm_inf(&neg_aty);
    let mut state = DsState {
        x: vec![0.0; n],
        lambda: vec![0.0; n],
        tau: tau0,
        gamma_x: Vec::new(),
        gamma_l: Vec::new(),
        zx: Vec::new(),
        zl: Vec::new(),
        cross: None,
        pcorr: neg_aty,
        dcorr: vec![0.0; n],
    };
    let mut trace = DsPathTrace::default();
    if tau >= tau0 {
        state.tau = tau;
        return Ok((state, trace));
    }
    let op = PlainGram::new(a);
    seed_supports(&op, &mut state, &mut trace)?;
    resume_ds_tau(&op, y, &mut state, tau, &mut trace)?;
    trace.gram_products += op.products.get();
    Ok((state, trace))
}

/// Path seeding at `tau_0`: the most correlated primal constraint is active,
/// so its dual coefficient grows from zero until the *first* dual constraint
/// activates, which seeds the primal support (not necessarily at the same
/// index when columns are strongly correlated).
pub(crate) fn seed_supports(
    op: &impl DsOperator,
    state: &mut DsState,
    trace: &mut DsPathTrace,
) -> Result<()> {
    let first = argmax_abs(&state.pcorr);
    let zl0 = state.pcorr[first].signum();
    let change = SupportChange::Added {
        index: first,
        sign: zl0,
    };
    let ev = dual_completion(
        op,
        None,
        &state.gamma_x,
        &state.zx,
        &state.gamma_l,
        &mut state.lambda,
        &mut state.dcorr,
        change,
    )?;
    state.gamma_l.push(first);
    state.zl.push(zl0);
    match ev {
        CompletionEvent::Activate { index, sign } => {
            let m = DenseMatrix::new(1, 1, vec![op.cross_entry(first, index)])?;
            state.cross =
                Some(SquareInverse::new(m).map_err(|_| SolverError::SingularCrossGram)?);
            state.gamma_x.push(index);
            state.zx.push(-sign);
        }
        CompletionEvent::Shrink { .. } => return Err(SolverError::SingularCrossGram),
    }
    trace.steps.push(StepEvent::activate(0.0, first, zl0));
    Ok(())
}

fn resume_ds_tau<S: SensingMatrix>(
    op: &PlainGram<'_, S>,
    y: &[f64],
    state: &mut DsState,
    tau_target: f64,
    trace: &mut DsPathTrace,
) -> Result<()> {
    let mat = op.a.matrix();
    let n = mat.cols();
    let limit = crate::bpdn::iteration_limit(n);
    let mut steps_since_refresh = 0usize;
    while state.tau > tau_target {
        if trace.steps.len() > limit {
            return Err(SolverError::IterationLimit { limit });
        }
        let cross = state.cross.as_ref().ok_or(SolverError::SingularCrossGram)?;
        // Primal phase: x moves as tau decreases.
        let neg_zl: Vec<f64> = state.zl.iter().map(|&z| -z).collect();
        let dx = cross.solve(&neg_zl);
        let d = op.gram_combination(&state.gamma_x, &dx);

        let x_on: Vec<f64> = state.gamma_x.iter().map(|&j| state.x[j]).collect();
        let shrink = min_shrink_step_signed(&x_on, &dx, &state.zx, &state.gamma_x);
        let (p_off, d_off, idx_off) = complement_values(&state.pcorr, &d, &state.gamma_l, n);
        let activate = min_activation_step_shrinking_bound(&p_off, &d_off, state.tau, &idx_off);
        let ev = shrink.min(activate);

        let room = state.tau - tau_target;
        if ev.theta >= room * (1.0 - RATIO_TOL) {
            for (pos, &j) in state.gamma_x.iter().enumerate() {
                state.x[j] += room * dx[pos];
            }
            axpy(&mut state.pcorr, room, &d);
            state.tau = tau_target;
            break;
        }
        for (pos, &j) in state.gamma_x.iter().enumerate() {
            state.x[j] += ev.theta * dx[pos];
        }
        axpy(&mut state.pcorr, ev.theta, &d);
        state.tau -= ev.theta;
        trace.steps.push(ev);

        let primal_change = match ev.kind {
            StepKind::Shrink => {
                let gamma = ev.gamma.expect("shrink index");
                state.x[gamma] = 0.0;
                let pos = state
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

        // Dual completion restores |Gx| = |Gl|.
        let dual_event = dual_completion(
            op,
            state.cross.as_ref(),
            &state.gamma_x,
            &state.zx,
            &state.gamma_l,
            &mut state.lambda,
            &mut state.dcorr,
            primal_change,
        )?;
        apply_primal_then_dual(
            op,
            &mut state.cross,
            &mut state.gamma_x,
            &mut state.zx,
            &mut state.gamma_l,
            &mut state.zl,
            primal_change,
            dual_event,
        )?;
        if state.cross.is_none() {
            return Err(SolverError::SingularCrossGram);
        }

        steps_since_refresh += 1;
        if steps_since_refresh >= CORR_REFRESH_INTERVAL {
            steps_since_refresh = 0;
            op.a.note_gram_product();
            op.products.set(op.products.get() + 1);
            state.pcorr = mat.apply_t(&residual(mat, &state.x, y));
            let lam_support: Vec<usize> = (0..n).filter(|&j| state.lambda[j] != 0.0).collect();
            let lam_coefs: Vec<f64> = lam_support.iter().map(|&j| state.lambda[j]).collect();
            state.dcorr = op.gram_combination(&lam_support, &lam_coefs);
        }
    }
    Ok(())
}

pub(crate) fn complement_values(
    p: &[f64],
    d: &[f64],
    exclude: &[usize],
    n: usize,
) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
    let mut mask = vec![false; n];
    for &j in exclude {
        mask[j] = true;
    }
    let mut p_out = Vec::with_capacity(n - exclude.len());
    let mut d_out = Vec::with_capacity(n - exclude.len());
    let mut idx = Vec::with_capacity(n - exclude.len());
    for j in 0..n {
        if !mask[j] {
            p_out.push(p[j]);
            d_out.push(d[j]);
            idx.push(j);
        }
    }
    (p_out, d_out, idx)
}
