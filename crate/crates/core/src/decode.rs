//! l1 decoding with incremental codeword growth.
//!
//! A message `x` is encoded as `Ax` with an overdetermined coding matrix and
//! the received codeword `y = Ax + e` carries sparse gross errors. The
//! receiver solves `minimize ||Ax - y||_1`; when `p` new codeword elements
//! `w = Bx + d` arrive, the update homotopy
//!
//! ```text
//!     minimize ||Ax - y||_1 + eps ||Bx - w||_1
//! ```
//!
//! is traced in `eps` from 0 to 1. Writing `G = [A' B']`, `c = [e; d]` for
//! the stacked error estimate, `xi = [lambda; nu]` for the stacked dual, and
//! `s = [y; w]`, a primal-dual point is optimal when
//!
//! ```text
//!     xi(j) = sign(c(j))        on the error support,
//!     |xi(j)| < 1               elsewhere,
//!     G_{Gnc} xi_{Gnc} + eps G_{Gn} xi_{Gn} = 0,
//! ```
//!
//! where `Gn` holds the new-block entries whose error estimates have never
//! yet shrunk to zero; when one does, its dual coefficient absorbs the
//! weight (`xi <- eps xi`) and the entry is treated like an old one from
//! then on. The primal solution sits on a vertex interpolating the `n`
//! zero-residual rows, so it moves only when the support swaps one row for
//! another: each iteration runs a *dual update* (an n-by-n solve driving a
//! slack dual coefficient to +-1 as `eps` grows) followed by a *primal
//! update* (the vertex swap). If every entry of `Gn` dies before `eps`
//! reaches 1, the current solution is already optimal for the full system
//! and the run ends early — the lucky breakdown.

use crate::error::{Result, SolverError};
use crate::homotopy::{StepEvent, RATIO_TOL};
use crate::linalg::{norm_inf, DenseMatrix, SquareInverse};

/// Support membership threshold, relative to the largest error entry.
fn zero_threshold(c: &[f64]) -> f64 {
    1e-10 * norm_inf(c).max(1.0)
}

fn decode_iteration_limit(rows: usize) -> usize {
    20 * rows.max(1)
}

/// Decoder state: message estimate, stacked error estimate and dual vector,
/// support bookkeeping, and the inverse of the interpolation basis.
#[derive(Debug, Clone)]
pub struct DecodeState {
    /// Message estimate (n).
    x: Vec<f64>,
    /// Stacked error estimate, one entry per codeword element.
    c: Vec<f64>,
    /// Stacked dual vector.
    xi: Vec<f64>,
    /// Working error support (size rows - n once measurements exceed n).
    gamma: Vec<usize>,
    /// New-block entries that have not yet shrunk to zero (empty at rest).
    gamma_n: Vec<usize>,
    /// Complement: the n interpolated rows, aligned with `basis` columns.
    gamma_c: Vec<usize>,
    /// Homotopy parameter; 1 when the state is at rest.
    epsilon: f64,
    /// Stacked coding matrix (rows x n).
    coding: DenseMatrix,
    /// Stacked received codeword.
    s: Vec<f64>,
    /// Inverse of the n-by-n matrix whose columns are the rows `gamma_c` of
    /// the coding matrix.
    basis: SquareInverse,
}

impl DecodeState {
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Stacked error estimate `G' x - s`.
    pub fn error_estimate(&self) -> &[f64] {
        &self.c
    }

    pub fn dual(&self) -> &[f64] {
        &self.xi
    }

    pub fn support(&self) -> &[usize] {
        &self.gamma
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn rows(&self) -> usize {
        self.coding.rows()
    }

    pub fn message_len(&self) -> usize {
        self.coding.cols()
    }

    pub fn coding(&self) -> &DenseMatrix {
        &self.coding
    }

    pub fn received(&self) -> &[f64] {
        &self.s
    }
}

/// Optimality report for a decoder state.
#[derive(Debug, Clone, Copy)]
pub struct DecodeKktReport {
    /// `max_j | xi(j) - sign(c(j)) |` over nonzero error entries.
    pub sign_coupling: f64,
    /// `max(0, ||xi||_inf - 1)`.
    pub dual_excess: f64,
    /// Weighted feasibility residual of the dual equality.
    pub feasibility: f64,
    pub pass: bool,
}

/// Checks the decoder optimality conditions at the state's current `eps`.
pub fn decode_kkt(state: &DecodeState) -> DecodeKktReport {
    let thresh = zero_threshold(&state.c);
    let mut sign_coupling: f64 = 0.0;
    for (j, &cj) in state.c.iter().enumerate() {
        if cj.abs() > thresh {
            sign_coupling = sign_coupling.max((state.xi[j] - cj.signum()).abs());
        }
    }
    let dual_excess = (norm_inf(&state.xi) - 1.0).max(0.0);
    // G_{Gnc} xi_{Gnc} + eps G_{Gn} xi_{Gn} = 0.
    let n = state.message_len();
    let mut feas = vec![0.0; n];
    let mut scale: f64 = 1.0;
    for j in 0..state.rows() {
        let weight = if state.gamma_n.contains(&j) {
            state.epsilon
        } else {
            1.0
        };
        let coef = weight * state.xi[j];
        if coef != 0.0 {
            for (t, f) in feas.iter_mut().enumerate() {
                *f += coef * state.coding.get(j, t);
            }
        }
        scale = scale.max(state.coding.row(j).iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    let feasibility = norm_inf(&feas);
    DecodeKktReport {
        sign_coupling,
        dual_excess,
        feasibility,
        pass: sign_coupling <= 1e-8 && dual_excess <= 1e-9 && feasibility <= 1e-8 * scale,
    }
}

/// True when the error estimate has strictly fewer nonzero entries than the
/// codeword redundancy `rows - n`; a generic non-recovered estimate has
/// exactly `rows - n` of them, so the deficit signals that the receiver has
/// locked onto the message.
pub fn recovery_check(state: &DecodeState) -> bool {
    let c = &state.c;
    let max = norm_inf(c);
    let thresh = if max == 0.0 { 1e-12 } else { 1e-8 * max };
    let nonzero = c.iter().filter(|v| v.abs() > thresh).count();
    let rows = state.rows();
    let n = state.message_len();
    rows >= n && nonzero < rows - n
}

/// Record of one decoding run; a homotopy iteration is one dual update plus
/// one primal vertex swap.
#[derive(Debug, Clone, Default)]
pub struct DecodeTrace {
    pub steps: Vec<StepEvent>,
    pub iterations: usize,
    pub final_epsilon: f64,
    pub lucky_breakdown: bool,
}

/// Bootstraps a decoder state for codeword `y` under coding matrix `a`:
/// solves the square system on the first nonsingular n-row subset exactly,
/// then feeds the remaining rows through the update homotopy in one block.
pub fn decode_init(a: &DenseMatrix, y: &[f64]) -> Result<(DecodeState, DecodeTrace)> {
    let (m, n) = (a.rows(), a.cols());
    if m < n {
        return Err(SolverError::dim("coding matrix must have at least n rows"));
    }
    if y.len() != m {
        return Err(SolverError::dim("codeword length must equal row count"));
    }
    // Cyclic windows of n rows, up to n attempts.
    let mut found = None;
    for attempt in 0..n.min(m) {
        let subset: Vec<usize> = (0..n).map(|i| (attempt + i) % m).collect();
        let basis_matrix = DenseMatrix::from_fn(n, n, |i, j| a.get(subset[j], i));
        if let Ok(inv) = SquareInverse::new(basis_matrix) {
            found = Some((subset, inv));
            break;
        }
    }
    let (subset, basis) = found.ok_or(SolverError::SingularBootstrap)?;
    let y_sub: Vec<f64> = subset.iter().map(|&r| y[r]).collect();
    // Columns of the basis are coding rows, so the interpolation system is
    // the transpose solve.
    let x0 = basis.solve_t(&y_sub);

    let mut c = vec![0.0; m];
    let mut gamma = Vec::new();
    let mut gamma_n = Vec::new();
    let mut in_subset = vec![false; m];
    for &r in &subset {
        in_subset[r] = true;
    }
    let residual_all = {
        let mut r = a.apply(&x0);
        for (ri, yi) in r.iter_mut().zip(y) {
            *ri -= yi;
        }
        r
    };
    let thresh = zero_threshold(&residual_all);
    for j in 0..m {
        if in_subset[j] {
            continue;
        }
        if residual_all[j].abs() > thresh {
            c[j] = residual_all[j];
            gamma.push(j);
            gamma_n.push(j);
        } else {
            // Exact interpolation outside the basis: a frozen zero member
            // keeps the complement at size n.
            gamma.push(j);
        }
    }
    let mut xi = vec![0.0; m];
    for &j in &gamma_n {
        xi[j] = c[j].signum();
    }
    let mut state = DecodeState {
        x: x0,
        c,
        xi,
        gamma,
        gamma_n,
        gamma_c: subset,
        epsilon: 0.0,
        coding: a.clone(),
        s: y.to_vec(),
        basis,
    };
    let mut trace = DecodeTrace::default();
    run_homotopy(&mut state, &mut trace)?;
    Ok((state, trace))
}

/// Works `p` new codeword elements `w = B x + d` into a completed state.
pub fn decode_add_measurements(
    state: &DecodeState,
    b: &DenseMatrix,
    w: &[f64],
) -> Result<(DecodeState, DecodeTrace)> {
    let n = state.message_len();
    if b.cols() != n {
        return Err(SolverError::dim("new rows must have n columns"));
    }
    if w.len() != b.rows() {
        return Err(SolverError::dim("one codeword value per new row"));
    }
    if state.gamma_c.len() != n {
        return Err(SolverError::UnbalancedSupport);
    }
    let mut next = state.clone();
    let offset = next.rows();
    next.coding = next.coding.vstack(b)?;
    next.s.extend_from_slice(w);
    let d0 = {
        let mut d = b.apply(&next.x);
        for (di, wi) in d.iter_mut().zip(w) {
            *di -= wi;
        }
        d
    };
    let thresh = zero_threshold(&d0);
    next.gamma_n.clear();
    for (i, &di) in d0.iter().enumerate() {
        let j = offset + i;
        if di.abs() > thresh {
            next.c.push(di);
            next.xi.push(di.signum());
            next.gamma.push(j);
            next.gamma_n.push(j);
        } else {
            next.c.push(0.0);
            next.xi.push(0.0);
            next.gamma.push(j);
        }
    }
    next.epsilon = if next.gamma_n.is_empty() { 1.0 } else { 0.0 };
    let mut trace = DecodeTrace::default();
    run_homotopy(&mut next, &mut trace)?;
    Ok((next, trace))
}

/// Activation scan of the dual update. A support entry released as plain
/// error bookkeeping leaves its dual coefficient parked exactly on the +-1
/// boundary; if a later direction pushes that coordinate outward, the event
/// fires immediately as a zero-length step that pulls the coordinate back
/// into the support. Everything else is the ordinary first-crossing scan.
fn boundary_aware_activation(
    xi_on: &[f64],
    dxi: &[f64],
    ids: &[usize],
) -> Result<StepEvent> {
    let mut best = StepEvent::terminal();
    let mut degenerate: Option<(usize, f64)> = None;
    for ((&p, &d), &idx) in xi_on.iter().zip(dxi).zip(ids) {
        if p.abs() > 1.0 + 1e-9 {
            return Err(SolverError::ConstraintAlreadyViolated {
                index: idx,
                value: p,
                bound: 1.0,
            });
        }
        if p.abs() >= 1.0 - 1e-12 && p * d > 1e-12 {
            match degenerate {
                Some((cur, _)) if cur <= idx => {}
                _ => degenerate = Some((idx, p.signum())),
            }
            continue;
        }
        if d != 0.0 {
            // Indices that fire leave the candidate set altogether, so even
            // vanishingly small crossings must be taken: skipping one lets
            // a fast coordinate overshoot the boundary.
            let up = (1.0 - p) / d;
            if up > 0.0 {
                best = best.min(StepEvent::activate(up, idx, 1.0));
            }
            let down = (1.0 + p) / -d;
            if down > 0.0 {
                best = best.min(StepEvent::activate(down, idx, -1.0));
            }
        }
    }
    if let Some((idx, sign)) = degenerate {
        return Ok(StepEvent::activate(0.0, idx, sign));
    }
    Ok(best)
}

/// Ratio test of the primal vertex swap. Beyond the plain positive-ratio
/// scan, support entries that are already numerically zero block the pivot
/// at step zero: exactly at recovery more than `rows - n` error entries
/// vanish at once, the vertex degenerates, and from there on the solution
/// stays put while the basis swaps through zero-length pivots. Among
/// degenerate blocks, members of `Gn` are preferred so that clean new
/// entries drain toward the lucky breakdown.
fn degenerate_aware_shrink(state: &DecodeState, dc: &[f64]) -> Option<StepEvent> {
    let thresh = zero_threshold(&state.c);
    let mut best: Option<StepEvent> = None;
    let mut degenerate: Option<usize> = None;
    for &j in &state.gamma {
        let (c, d) = (state.c[j], dc[j]);
        if c.abs() <= thresh {
            // A zero entry may grow along its own dual sign; it blocks only
            // against it (or if it has no consistent sign at all). Smallest
            // blocking index wins, which rules out pivot cycles.
            let xi = state.xi[j];
            let blocks = if xi.abs() >= 1.0 - 1e-9 {
                d * xi < -1e-12
            } else {
                d.abs() > 1e-12
            };
            if blocks && degenerate.map_or(true, |cur| j < cur) {
                degenerate = Some(j);
            }
            continue;
        }
        if c * d >= 0.0 {
            continue;
        }
        // Strictly moving toward zero: take the crossing however small.
        let ratio = -c / d;
        let candidate = StepEvent::shrink(ratio, j);
        best = Some(match best {
            None => candidate,
            Some(b) => b.min(candidate),
        });
    }
    if let Some(j) = degenerate {
        return Some(StepEvent::shrink(0.0, j));
    }
    best
}

fn run_homotopy(state: &mut DecodeState, trace: &mut DecodeTrace) -> Result<()> {
    let n = state.message_len();
    let rows = state.rows();
    let limit = decode_iteration_limit(rows);
    if state.gamma_n.is_empty() {
        // Nothing carries the homotopy weight; the state is already optimal
        // for the full system.
        state.epsilon = 1.0;
        trace.final_epsilon = 1.0;
        trace.lucky_breakdown = true;
        return Ok(());
    }
    while state.epsilon < 1.0 {
        if trace.iterations > limit {
            return Err(SolverError::IterationLimit { limit });
        }
        // Dual update: move the slack dual coefficients as eps grows.
        let mut rhs = vec![0.0; n];
        for &j in &state.gamma_n {
            let coef = -state.xi[j];
            for (t, r) in rhs.iter_mut().enumerate() {
                *r += coef * state.coding.get(j, t);
            }
        }
        let dxi = state.basis.solve(&rhs);
        let xi_on: Vec<f64> = state.gamma_c.iter().map(|&j| state.xi[j]).collect();
        let activate = boundary_aware_activation(&xi_on, &dxi, &state.gamma_c)?;

        let room = 1.0 - state.epsilon;
        if activate.theta >= room * (1.0 - RATIO_TOL) {
            for (pos, &j) in state.gamma_c.iter().enumerate() {
                state.xi[j] += room * dxi[pos];
            }
            state.epsilon = 1.0;
            break;
        }
        for (pos, &j) in state.gamma_c.iter().enumerate() {
            state.xi[j] += activate.theta * dxi[pos];
        }
        state.epsilon += activate.theta;
        let gamma_plus = activate.gamma.expect("activation index");
        let z_gamma = activate.gamma_sign.expect("activation sign");
        state.xi[gamma_plus] = z_gamma;
        trace.steps.push(activate);

        // Primal update: vertex swap bringing gamma_plus into the error
        // support while one support entry dies.
        let pos_plus = state
            .gamma_c
            .iter()
            .position(|&j| j == gamma_plus)
            .expect("activated index is interpolated");
        let mut e = vec![0.0; n];
        e[pos_plus] = z_gamma;
        let dx = state.basis.solve_t(&e);
        let dc = state.coding.apply(&dx);
        let shrink = degenerate_aware_shrink(state, &dc);
        let Some(shrink) = shrink else {
            return Err(SolverError::SingularSubmatrix);
        };
        let theta = shrink.theta;
        let gamma_minus = shrink.gamma.expect("shrink index");
        for (xj, dj) in state.x.iter_mut().zip(&dx) {
            *xj += theta * dj;
        }
        for (cj, dj) in state.c.iter_mut().zip(&dc) {
            *cj += theta * dj;
        }
        // Pin the exact values dictated by the vertex structure.
        for &j in &state.gamma_c {
            state.c[j] = 0.0;
        }
        state.c[gamma_plus] = theta * z_gamma;
        state.c[gamma_minus] = 0.0;
        trace.steps.push(shrink);
        trace.iterations += 1;

        // Support swap: gamma_plus joins the error support, gamma_minus
        // becomes interpolated.
        let gpos = state
            .gamma
            .iter()
            .position(|&j| j == gamma_minus)
            .expect("shrink hit the support");
        state.gamma[gpos] = gamma_plus;
        state
            .basis
            .replace_col(pos_plus, &state.coding.row(gamma_minus).to_vec())?;
        state.gamma_c[pos_plus] = gamma_minus;

        if let Some(npos) = state.gamma_n.iter().position(|&j| j == gamma_minus) {
            state.gamma_n.remove(npos);
            state.xi[gamma_minus] *= state.epsilon;
            if state.gamma_n.is_empty() {
                trace.lucky_breakdown = true;
                state.epsilon = 1.0;
                break;
            }
        }
    }
    trace.final_epsilon = state.epsilon;
    debug_assert!(decode_kkt(state).pass, "decoder left an infeasible state");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::l1_regression_brute;
    use crate::problems::{corrupt_codeword, gaussian_matrix, CorruptionMode, Rng};

    #[test]
    fn square_system_decodes_exactly_but_is_not_recoverable() {
        let a = gaussian_matrix(3, 3, 5);
        let x = vec![1.0, -2.0, 0.5];
        let y = a.apply(&x);
        let (state, trace) = decode_init(&a, &y).unwrap();
        for (p, q) in state.x().iter().zip(&x) {
            assert!((p - q).abs() < 1e-10);
        }
        assert!(state.error_estimate().iter().all(|&v| v == 0.0));
        assert_eq!(trace.iterations, 0);
        // Zero redundancy: never flagged as recovered.
        assert!(!recovery_check(&state));
    }

    #[test]
    fn scalar_decode_is_the_median() {
        let a = DenseMatrix::new(3, 1, vec![1.0, 1.0, 1.0]).unwrap();
        let y = vec![5.0, 5.0, 9.0];
        let (state, _) = decode_init(&a, &y).unwrap();
        assert!((state.x()[0] - 5.0).abs() < 1e-12);
        let nonzero: Vec<usize> = (0..3).filter(|&j| state.c[j].abs() > 1e-9).collect();
        assert_eq!(nonzero, vec![2]);
        assert!(recovery_check(&state));

        // Add a consistent codeword element: nothing changes.
        let b = DenseMatrix::new(1, 1, vec![1.0]).unwrap();
        let (state2, trace) = decode_add_measurements(&state, &b, &[5.0]).unwrap();
        assert!((state2.x()[0] - 5.0).abs() < 1e-12);
        assert!(trace.lucky_breakdown);
        let nonzero: Vec<usize> = (0..4).filter(|&j| state2.c[j].abs() > 1e-9).collect();
        assert_eq!(nonzero, vec![2]);
    }

    #[test]
    fn clean_codeword_recovers_immediately() {
        let a = gaussian_matrix(12, 6, 9);
        let mut rng = Rng::seed_from(2);
        let x: Vec<f64> = (0..6).map(|_| rng.normal(0.0, 1.0)).collect();
        let y = a.apply(&x);
        let (state, _) = decode_init(&a, &y).unwrap();
        let err = state
            .x()
            .iter()
            .zip(&x)
            .fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
        assert!(err < 1e-9, "{err}");
        assert!(recovery_check(&state));
    }

    #[test]
    fn matches_l1_regression_oracle_on_tiny_instances() {
        for seed in 0..40u64 {
            let (m, n) = (10, 3);
            let a = gaussian_matrix(m, n, 4000 + seed);
            let mut rng = Rng::derive(41, seed);
            let x: Vec<f64> = (0..n).map(|_| rng.normal(0.0, 1.0)).collect();
            let mut y = a.apply(&x);
            // Corrupt two entries grossly.
            let locs = rng.distinct_indices(m, 2);
            for &l in &locs {
                y[l] += rng.normal(0.0, 5.0) + 2.0;
            }
            let (state, _) = decode_init(&a, &y).unwrap();
            let brute = l1_regression_brute(&a, &y).unwrap();
            let diff = state
                .x()
                .iter()
                .zip(&brute)
                .fold(0.0f64, |mx, (p, q)| mx.max((p - q).abs()));
            assert!(diff < 1e-7, "seed {seed}: {diff}");
            assert!(decode_kkt(&state).pass);
        }
    }

    #[test]
    fn incremental_blocks_match_one_shot_decode() {
        for seed in 0..10u64 {
            let (n, m_total, p) = (8, 28, 4);
            let a = gaussian_matrix(m_total, n, 8800 + seed);
            let mut rng = Rng::derive(881, seed);
            let x: Vec<f64> = (0..n).map(|_| rng.normal(0.0, 1.0)).collect();
            let codeword = a.apply(&x);
            let (y, _) = corrupt_codeword(&codeword, CorruptionMode::ZeroK(4), 77 + seed);

            // One shot.
            let (full, _) = decode_init(&a, &y).unwrap();
            // Incremental: first 16 rows, then blocks of p.
            let m0 = 16;
            let head = DenseMatrix::from_fn(m0, n, |i, j| a.get(i, j));
            let (mut state, _) = decode_init(&head, &y[..m0]).unwrap();
            let mut at = m0;
            while at < m_total {
                let hi = (at + p).min(m_total);
                let block = DenseMatrix::from_fn(hi - at, n, |i, j| a.get(at + i, j));
                let (s2, _) = decode_add_measurements(&state, &block, &y[at..hi]).unwrap();
                state = s2;
                at = hi;
            }
            let diff = state
                .x()
                .iter()
                .zip(full.x())
                .fold(0.0f64, |mx, (p, q)| mx.max((p - q).abs()));
            assert!(diff < 1e-7, "seed {seed}: {diff}");
            assert!(recovery_check(&state), "seed {seed} failed to recover");
            let xerr = state
                .x()
                .iter()
                .zip(&x)
                .fold(0.0f64, |mx, (p, q)| mx.max((p - q).abs()));
            assert!(xerr < 1e-7, "seed {seed}: message error {xerr}");
        }
    }

    #[test]
    fn dual_feasibility_holds_along_the_run() {
        let (n, m) = (6, 20);
        let a = gaussian_matrix(m, n, 31);
        let mut rng = Rng::seed_from(32);
        let x: Vec<f64> = (0..n).map(|_| rng.normal(0.0, 1.0)).collect();
        let codeword = a.apply(&x);
        let (y, _) = corrupt_codeword(&codeword, CorruptionMode::ZeroK(3), 33);
        let (state, trace) = decode_init(&a, &y).unwrap();
        assert!(norm_inf(state.dual()) <= 1.0 + 1e-9);
        assert!(trace.final_epsilon == 1.0);
        assert!(decode_kkt(&state).pass);
    }
}
