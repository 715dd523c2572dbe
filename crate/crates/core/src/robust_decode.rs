//! Robust l1 decoding: gross sparse errors plus small dense noise.
//!
//! Measurements follow `y = Ax + e + q` with a tall coding matrix `A`,
//! sparse gross errors `e`, and small noise `q`. Decoding solves
//!
//! ```text
//!     minimize tau ||e||_1 + 1/2 ||Q (e - y)||_2^2,
//! ```
//!
//! where the rows of `Q = I - A (A'A)^-1 A'` span the null space of `A'`:
//! a BPDN instance in the error vector. When `p` new codeword elements
//! arrive, the sparse unknown itself grows, so the update homotopy weights
//! only the new entries:
//!
//! ```text
//!     minimize tau (||e||_1 + eps ||d||_1) + 1/2 ||P([e; d] - [y; w])||_2^2
//! ```
//!
//! with `P` the projector for the stacked coding matrix `F = [A; B]`.
//! Writing `c = [e; d]` and `s = [y; w]`, a solution at `eps` satisfies
//!
//! ```text
//!     P_Ge'P (c - s) = -tau z_e          (old-style support entries)
//!     P_Gn'P (c - s) = -eps tau z_d      (new entries never yet zeroed)
//!     ||P_Gc'P (c - s)||_inf < tau       (off support)
//! ```
//!
//! Each step solves `(P_G'P_G) dc = -[0; z_d]` on the support — and since
//! `P` is a symmetric idempotent, `P_G'P_G` is just the `G x G` block of
//! `P`, kept as an incrementally updated Cholesky factor. When a new entry
//! leaves `Gn` it is treated like an old one from then on; when all of them
//! have, the run ends early (lucky breakdown). Appending codeword rows never
//! recomputes `P` from scratch: one Sherman-Morrison update of `(F'F)^-1`
//! and a rank-1 correction of `P` per row.

use crate::bpdn::solve_bpdn_traced;
use crate::error::{Result, SolverError};
use crate::homotopy::{min_activation_step, min_shrink_step_signed, StepEvent, StepKind, RATIO_TOL};
use crate::linalg::{
    axpy, dot, factor_add_index, factor_remove_index, norm_inf, spd_factor, DenseMatrix,
    SpdFactor,
};

fn robust_iteration_limit(rows: usize) -> usize {
    10 * rows.max(1)
}

/// Projector machinery: `P` with `P F = 0`, plus the inverse Gram of `F`
/// that built it (and extends it row by row).
#[derive(Debug, Clone)]
pub struct Projector {
    pub p: DenseMatrix,
    pub inv_gram: DenseMatrix,
}

/// Builds the orthogonal projector onto the null space of `F'`:
/// `P = I - F (F'F)^-1 F'`, symmetric and idempotent with `P F = 0`.
pub fn null_projector(f: &DenseMatrix) -> Result<DenseMatrix> {
    build_projector(f).map(|pr| pr.p)
}

pub(crate) fn build_projector(f: &DenseMatrix) -> Result<Projector> {
    let (m, n) = (f.rows(), f.cols());
    if m < n {
        return Err(SolverError::RankDeficient);
    }
    let gram = f.gram();
    let factor = spd_factor(&gram).map_err(|_| SolverError::RankDeficient)?;
    let mut inv_gram = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = factor.solve(&e);
        for i in 0..n {
            inv_gram.set(i, j, col[i]);
        }
    }
    // P = I - F H F'.
    let fh = f.matmul(&inv_gram);
    let mut p = DenseMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let v = -dot(fh.row(i), f.row(j));
            p.set(i, j, v + if i == j { 1.0 } else { 0.0 });
        }
    }
    Ok(Projector { p, inv_gram })
}

/// Extends a projector by one appended coding row through rank-1 updates:
/// no refactorization of the stacked matrix.
pub(crate) fn extend_projector(pr: &mut Projector, f: &DenseMatrix, b: &[f64]) {
    let m = pr.p.rows();
    let hb = pr.inv_gram.apply(b);
    let denom = 1.0 + dot(b, &hb);
    let v = f.apply(&hb);
    let mut bigger = DenseMatrix::zeros(m + 1, m + 1);
    for i in 0..m {
        for j in 0..m {
            bigger.set(i, j, pr.p.get(i, j) + v[i] * v[j] / denom);
        }
        bigger.set(i, m, -v[i] / denom);
        bigger.set(m, i, -v[i] / denom);
    }
    bigger.set(m, m, 1.0 / denom);
    pr.p = bigger;
    // H' = H - (H b)(b H) / denom.
    let n = pr.inv_gram.rows();
    for i in 0..n {
        for j in 0..n {
            let val = pr.inv_gram.get(i, j) - hb[i] * hb[j] / denom;
            pr.inv_gram.set(i, j, val);
        }
    }
}

/// Robust decoder state, sufficient to resume when more codeword rows come.
#[derive(Debug, Clone)]
pub struct RobustState {
    /// Stacked gross-error estimate.
    c: Vec<f64>,
    /// Support of `c` with its sign sequence.
    gamma: Vec<usize>,
    z: Vec<f64>,
    /// The subset of the support still carrying the homotopy weight.
    gamma_n: Vec<usize>,
    tau: f64,
    epsilon: f64,
    projector: Projector,
    coding: DenseMatrix,
    s: Vec<f64>,
    /// Cholesky factor of the support block of `P`.
    factor: SpdFactor,
    /// Cached `P (c - s)`.
    pcorr: Vec<f64>,
}

impl RobustState {
    pub fn error_estimate(&self) -> &[f64] {
        &self.c
    }

    pub fn support(&self) -> &[usize] {
        &self.gamma
    }

    pub fn tau(&self) -> f64 {
        self.tau
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

    pub fn projector(&self) -> &DenseMatrix {
        &self.projector.p
    }

    pub fn coding(&self) -> &DenseMatrix {
        &self.coding
    }

    pub fn received(&self) -> &[f64] {
        &self.s
    }
}

/// Optimality report for a robust decoder state at its current `eps`.
#[derive(Debug, Clone, Copy)]
pub struct RobustKktReport {
    /// `||P_Ge'P(c-s) + tau z_e||_inf` over plain support entries.
    pub support_violation: f64,
    /// `||P_Gn'P(c-s) + eps tau z_d||_inf` over weighted entries.
    pub weighted_violation: f64,
    /// `||P_Gc'P(c-s)||_inf` off the support.
    pub off_support: f64,
    pub pass: bool,
}

/// Checks the three optimality conditions from a fresh projector product.
pub fn robust_kkt(state: &RobustState) -> RobustKktReport {
    let diff = crate::linalg::sub(&state.c, &state.s);
    let p = state.projector.p.apply(&diff);
    let tau = state.tau;
    let mut sv: f64 = 0.0;
    let mut wv: f64 = 0.0;
    let mut off: f64 = 0.0;
    let mut on_support = vec![false; state.c.len()];
    for (pos, &j) in state.gamma.iter().enumerate() {
        on_support[j] = true;
        let weighted = state.gamma_n.contains(&j);
        let target = if weighted {
            state.epsilon * tau * state.z[pos]
        } else {
            tau * state.z[pos]
        };
        let viol = (p[j] + target).abs();
        if weighted {
            wv = wv.max(viol);
        } else {
            sv = sv.max(viol);
        }
    }
    for (j, &pj) in p.iter().enumerate() {
        if !on_support[j] {
            off = off.max(pj.abs());
        }
    }
    RobustKktReport {
        support_violation: sv,
        weighted_violation: wv,
        off_support: off,
        pass: sv <= 1e-8 * tau && wv <= 1e-8 * tau && off <= tau * (1.0 + 1e-8),
    }
}

/// Record of one robust update run.
#[derive(Debug, Clone, Default)]
pub struct RobustTrace {
    pub steps: Vec<StepEvent>,
    pub epsilons: Vec<f64>,
    pub final_epsilon: f64,
    pub lucky_breakdown: bool,
}

/// Solves the robust decoding program for the initial codeword from
/// scratch: a BPDN homotopy against the projector.
pub fn robust_init(a: &DenseMatrix, y: &[f64], tau: f64) -> Result<RobustState> {
    robust_init_traced(a, y, tau).map(|(s, _)| s)
}

/// As [`robust_init`], also reporting the homotopy steps taken (the cold
/// arm of the benchmark).
pub fn robust_init_traced(a: &DenseMatrix, y: &[f64], tau: f64) -> Result<(RobustState, usize)> {
    if y.len() != a.rows() {
        return Err(SolverError::dim("codeword length must equal row count"));
    }
    let projector = build_projector(a)?;
    let py = projector.p.apply(y);
    let (bpdn, trace) = solve_bpdn_traced(&projector.p, &py, tau)?;
    let state = RobustState {
        c: bpdn.x().to_vec(),
        gamma: bpdn.active().indices().to_vec(),
        z: bpdn.active().signs().to_vec(),
        gamma_n: Vec::new(),
        tau,
        epsilon: 1.0,
        factor: bpdn.active().factor().clone(),
        pcorr: bpdn.correlations().to_vec(),
        projector,
        coding: a.clone(),
        s: y.to_vec(),
    };
    Ok((state, trace.steps.len()))
}

/// Decoded message for the current error estimate:
/// `x = (F'F)^-1 F' (s - c)`.
pub fn decode_message(state: &RobustState) -> Vec<f64> {
    let cleaned = crate::linalg::sub(&state.s, &state.c);
    state
        .projector
        .inv_gram
        .apply(&state.coding.apply_t(&cleaned))
}

/// Works `p` new codeword elements `w = Bx + d + q` into a completed state,
/// growing the error estimate by one (initially dense) block.
pub fn robust_add_measurements(
    state: &RobustState,
    b: &DenseMatrix,
    w: &[f64],
) -> Result<(RobustState, RobustTrace)> {
    let n = state.message_len();
    if b.cols() != n {
        return Err(SolverError::dim("new rows must have n columns"));
    }
    if w.len() != b.rows() {
        return Err(SolverError::dim("one codeword value per new row"));
    }
    let mut next = state.clone();
    let offset = next.rows();

    // Estimate the incoming gross errors against the current decoded
    // message, then extend the projector one row at a time.
    let x0 = decode_message(state);
    let d0 = {
        let mut d = w.to_vec();
        let bx = b.apply(&x0);
        for (di, bi) in d.iter_mut().zip(&bx) {
            *di -= bi;
        }
        d
    };
    for i in 0..b.rows() {
        extend_projector(&mut next.projector, &next.coding, b.row(i));
        next.coding = next
            .coding
            .vstack(&DenseMatrix::new(1, n, b.row(i).to_vec())?)?;
        next.s.push(w[i]);
    }

    // The support block of P changed under the extension: rebuild its
    // factor (the support is small; this is O(|G|^2 rows)).
    next.factor = factor_of_projector_block(&next.projector.p, &next.gamma)?;

    // Every new entry starts weighted; the ones already below the support
    // threshold are shrunk away in a zero-length first step.
    let thresh = 1e-10 * norm_inf(&d0).max(1.0);
    next.gamma_n.clear();
    let capacity = next.rows() - n;
    for (i, &di) in d0.iter().enumerate() {
        let j = offset + i;
        if di.abs() <= thresh {
            next.c.push(0.0);
            continue;
        }
        if next.gamma.len() >= capacity {
            return Err(SolverError::SingularGram {
                support: next.gamma.len() + 1,
                capacity,
            });
        }
        next.c.push(di);
        let col: Vec<f64> = next
            .gamma
            .iter()
            .map(|&g| next.projector.p.get(g, j))
            .collect();
        next.factor = factor_add_index(&next.factor, &col, next.projector.p.get(j, j), j)
            .map_err(|_| SolverError::SingularGram {
                support: next.gamma.len() + 1,
                capacity,
            })?;
        next.gamma.push(j);
        next.z.push(di.signum());
        next.gamma_n.push(j);
    }
    next.pcorr = next
        .projector
        .p
        .apply(&crate::linalg::sub(&next.c, &next.s));
    next.epsilon = if next.gamma_n.is_empty() { 1.0 } else { 0.0 };

    let mut trace = RobustTrace::default();
    run_robust_homotopy(&mut next, &mut trace)?;
    Ok((next, trace))
}

/// Exchange pivot at a rank-saturated support. Returns true when the leaving
/// member emptied the weighted set (lucky breakdown).
fn exchange_slide(state: &mut RobustState, gamma: usize, sign: f64) -> Result<bool> {
    let rhs: Vec<f64> = state
        .gamma
        .iter()
        .map(|&g| state.projector.p.get(g, gamma))
        .collect();
    let w = state.factor.solve(&rhs);
    let u_on: Vec<f64> = w.iter().map(|&wi| -sign * wi).collect();
    let c_on: Vec<f64> = state.gamma.iter().map(|&j| state.c[j]).collect();
    let slide = min_shrink_step_signed(&c_on, &u_on, &state.z, &state.gamma);
    if slide.is_terminal() {
        return Err(SolverError::SingularGram {
            support: state.gamma.len() + 1,
            capacity: state.rows() - state.message_len(),
        });
    }
    let t = slide.theta;
    let leaving = slide.gamma.expect("slide hits a member");
    for (pos, &j) in state.gamma.iter().enumerate() {
        state.c[j] += t * u_on[pos];
    }
    state.c[gamma] = t * sign;
    state.c[leaving] = 0.0;
    let pos = state
        .gamma
        .iter()
        .position(|&j| j == leaving)
        .expect("member in support");
    state.factor =
        factor_remove_index(&state.factor, pos).map_err(|_| SolverError::DegenerateSupport)?;
    state.gamma.remove(pos);
    state.z.remove(pos);
    let col: Vec<f64> = state
        .gamma
        .iter()
        .map(|&g| state.projector.p.get(g, gamma))
        .collect();
    state.factor = factor_add_index(
        &state.factor,
        &col,
        state.projector.p.get(gamma, gamma),
        gamma,
    )
    .map_err(|_| SolverError::DegenerateSupport)?;
    state.gamma.push(gamma);
    state.z.push(sign);
    if let Some(npos) = state.gamma_n.iter().position(|&j| j == leaving) {
        state.gamma_n.remove(npos);
        if state.gamma_n.is_empty() {
            return Ok(true);
        }
    }
    Ok(false)
}

fn factor_of_projector_block(p: &DenseMatrix, gamma: &[usize]) -> Result<SpdFactor> {
    let mut factor = SpdFactor::empty();
    for (pos, &j) in gamma.iter().enumerate() {
        let col: Vec<f64> = gamma[..pos].iter().map(|&g| p.get(g, j)).collect();
        factor = factor_add_index(&factor, &col, p.get(j, j), j)
            .map_err(|_| SolverError::DegenerateSupport)?;
    }
    Ok(factor)
}

fn run_robust_homotopy(state: &mut RobustState, trace: &mut RobustTrace) -> Result<()> {
    let rows = state.rows();
    let tau = state.tau;
    let limit = robust_iteration_limit(rows);
    if state.gamma_n.is_empty() {
        state.epsilon = 1.0;
        trace.final_epsilon = 1.0;
        trace.lucky_breakdown = true;
        return Ok(());
    }
    let mut steps_since_refresh = 0usize;
    while state.epsilon < 1.0 {
        if trace.steps.len() > limit {
            return Err(SolverError::IterationLimit { limit });
        }
        // dc = -(P_G'P_G)^-1 [0; z_d] on the support.
        let rhs: Vec<f64> = state
            .gamma
            .iter()
            .zip(&state.z)
            .map(|(&j, &zj)| {
                if state.gamma_n.contains(&j) {
                    -zj
                } else {
                    0.0
                }
            })
            .collect();
        let dc = state.factor.solve(&rhs);
        // d = P dc, running over the support columns of P.
        let mut d = vec![0.0; rows];
        for (pos, &j) in state.gamma.iter().enumerate() {
            let coef = dc[pos];
            if coef != 0.0 {
                for (i, di) in d.iter_mut().enumerate() {
                    *di += coef * state.projector.p.get(i, j);
                }
            }
        }

        let c_on: Vec<f64> = state.gamma.iter().map(|&j| state.c[j]).collect();
        let shrink = min_shrink_step_signed(&c_on, &dc, &state.z, &state.gamma);
        let mut mask = vec![false; rows];
        for &j in &state.gamma {
            mask[j] = true;
        }
        let mut p_off = Vec::new();
        let mut d_off = Vec::new();
        let mut idx_off = Vec::new();
        for j in 0..rows {
            if !mask[j] {
                p_off.push(state.pcorr[j]);
                d_off.push(d[j]);
                idx_off.push(j);
            }
        }
        let activate = min_activation_step(&p_off, &d_off, tau, &idx_off)?;
        let ev = shrink.min(activate);

        // theta advances eps by theta / tau; clamp at the endpoint.
        let theta_end = (1.0 - state.epsilon) * tau;
        if ev.theta >= theta_end * (1.0 - RATIO_TOL) {
            for (pos, &j) in state.gamma.iter().enumerate() {
                state.c[j] += theta_end * dc[pos];
            }
            axpy(&mut state.pcorr, theta_end, &d);
            state.epsilon = 1.0;
            break;
        }
        for (pos, &j) in state.gamma.iter().enumerate() {
            state.c[j] += ev.theta * dc[pos];
        }
        axpy(&mut state.pcorr, ev.theta, &d);
        state.epsilon += ev.theta / tau;
        trace.steps.push(ev);
        trace.epsilons.push(state.epsilon);

        match ev.kind {
            StepKind::Shrink => {
                let gamma = ev.gamma.expect("shrink index");
                state.c[gamma] = 0.0;
                let pos = state
                    .gamma
                    .iter()
                    .position(|&j| j == gamma)
                    .expect("index in support");
                state.factor = factor_remove_index(&state.factor, pos)
                    .map_err(|_| SolverError::DegenerateSupport)?;
                state.gamma.remove(pos);
                state.z.remove(pos);
                if let Some(npos) = state.gamma_n.iter().position(|&j| j == gamma) {
                    state.gamma_n.remove(npos);
                    if state.gamma_n.is_empty() {
                        trace.lucky_breakdown = true;
                        state.epsilon = 1.0;
                        break;
                    }
                }
            }
            StepKind::Activate => {
                let gamma = ev.gamma.expect("activation index");
                let sign = -ev.gamma_sign.expect("activation sign");
                let capacity = rows - state.message_len();
                if state.gamma.len() >= capacity {
                    // The support saturates the projector rank: the entering
                    // entry slides one member out along the null direction
                    // of the augmented block, at unchanged correlations.
                    if exchange_slide(state, gamma, sign)? {
                        trace.lucky_breakdown = true;
                        state.epsilon = 1.0;
                        break;
                    }
                } else {
                    let col: Vec<f64> = state
                        .gamma
                        .iter()
                        .map(|&g| state.projector.p.get(g, gamma))
                        .collect();
                    state.factor = factor_add_index(
                        &state.factor,
                        &col,
                        state.projector.p.get(gamma, gamma),
                        gamma,
                    )
                    .map_err(|_| SolverError::SingularGram {
                        support: state.gamma.len() + 1,
                        capacity,
                    })?;
                    state.gamma.push(gamma);
                    state.z.push(sign);
                }
            }
            StepKind::Terminal => unreachable!("terminal never beats the endpoint clamp"),
        }

        steps_since_refresh += 1;
        if steps_since_refresh >= 50 {
            steps_since_refresh = 0;
            state.pcorr = state
                .projector
                .p
                .apply(&crate::linalg::sub(&state.c, &state.s));
        }
    }
    trace.final_epsilon = state.epsilon;
    debug_assert!(
        robust_kkt(state).pass,
        "robust decoder left an infeasible state"
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{gaussian_matrix, Rng};

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn projector_of_a_single_column_is_the_complement() {
        let f = DenseMatrix::new(2, 1, vec![1.0, 0.0]).unwrap();
        let p = null_projector(&f).unwrap();
        assert!(max_diff(p.data(), &[0.0, 0.0, 0.0, 1.0]) < 1e-15);
    }

    #[test]
    fn projector_identities_hold() {
        let mut f = gaussian_matrix(12, 5, 77);
        let p = null_projector(&f).unwrap();
        // P F = 0 and P^2 = P.
        for j in 0..5 {
            let col = f.col(j);
            let pf = p.apply(&col);
            assert!(norm_inf(&pf) <= 1e-10 * f.max_abs());
        }
        let pp = p.matmul(&p);
        let mut worst: f64 = 0.0;
        for i in 0..12 {
            for j in 0..12 {
                worst = worst.max((pp.get(i, j) - p.get(i, j)).abs());
            }
        }
        assert!(worst < 1e-10);

        // Orthonormal columns: P = I - F F'.
        f.orthonormalize_columns().unwrap();
        let p2 = null_projector(&f).unwrap();
        let fft = f.matmul(&f.transpose());
        for i in 0..12 {
            for j in 0..12 {
                let expect = if i == j { 1.0 } else { 0.0 } - fft.get(i, j);
                assert!((p2.get(i, j) - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn incremental_projector_matches_recomputation() {
        let f = gaussian_matrix(10, 4, 31);
        let mut pr = build_projector(&f).unwrap();
        let mut current = f.clone();
        let mut rng = Rng::seed_from(5);
        for _ in 0..3 {
            let row: Vec<f64> = (0..4).map(|_| rng.normal(0.0, 0.5)).collect();
            extend_projector(&mut pr, &current, &row);
            current = current
                .vstack(&DenseMatrix::new(1, 4, row).unwrap())
                .unwrap();
            let direct = build_projector(&current).unwrap();
            let mut worst: f64 = 0.0;
            for i in 0..current.rows() {
                for j in 0..current.rows() {
                    worst = worst.max((pr.p.get(i, j) - direct.p.get(i, j)).abs());
                }
            }
            assert!(worst < 1e-9, "projector drift {worst}");
        }
    }

    #[test]
    fn noise_only_codeword_decodes_by_least_squares() {
        let (m, n) = (16, 6);
        let mut a = gaussian_matrix(m, n, 41);
        a.orthonormalize_columns().unwrap();
        let mut rng = Rng::seed_from(42);
        let x: Vec<f64> = (0..n).map(|_| rng.normal(0.0, 1.0)).collect();
        let mut y = a.apply(&x);
        for v in y.iter_mut() {
            *v += rng.normal(0.0, 0.01);
        }
        // tau at the zero-solution boundary: no gross errors detected.
        let q = null_projector(&a).unwrap();
        let tau0 = norm_inf(&q.apply(&y));
        let state = robust_init(&a, &y, tau0 * 1.01).unwrap();
        assert!(state.error_estimate().iter().all(|&v| v == 0.0));
        let decoded = decode_message(&state);
        // Least-squares decode for orthonormal columns: x = A'y.
        let ls = a.apply_t(&y);
        assert!(max_diff(&decoded, &ls) < 1e-10);
    }

    #[test]
    fn single_gross_error_is_localized() {
        let (m, n) = (18, 5);
        let mut a = gaussian_matrix(m, n, 51);
        a.orthonormalize_columns().unwrap();
        let mut rng = Rng::seed_from(52);
        let x: Vec<f64> = (0..n).map(|_| rng.normal(0.0, 1.0)).collect();
        let mut y = a.apply(&x);
        y[7] += 4.0;
        let state = robust_init(&a, &y, 0.02).unwrap();
        let nz: Vec<usize> = (0..m)
            .filter(|&j| state.error_estimate()[j].abs() > 1e-6)
            .collect();
        assert_eq!(nz, vec![7]);
        let decoded = decode_message(&state);
        assert!(max_diff(&decoded, &x) < 0.05);
    }

    #[test]
    fn decode_message_closed_forms() {
        let (m, n) = (10, 4);
        let a = gaussian_matrix(m, n, 61);
        let mut rng = Rng::seed_from(62);
        let x: Vec<f64> = (0..n).map(|_| rng.normal(0.0, 1.0)).collect();
        let y = a.apply(&x);
        let q = null_projector(&a).unwrap();
        let tau0 = norm_inf(&q.apply(&y)).max(1e-6);
        let mut state = robust_init(&a, &y, tau0 + 1.0).unwrap();
        // c = 0, s = F x: message comes back exactly.
        assert!(max_diff(&decode_message(&state), &x) < 1e-9);
        // c = s: the message is zero.
        state.c = state.s.clone();
        assert!(norm_inf(&decode_message(&state)) < 1e-9);
    }

    #[test]
    fn warm_update_matches_cold_solve_on_stacked_system() {
        for seed in 0..20u64 {
            let (m, n, k, p) = (36, 12, 4, if seed % 2 == 0 { 1 } else { 5 });
            let mut a = gaussian_matrix(m + p, n, 9100 + seed);
            a.orthonormalize_columns().unwrap();
            let head = DenseMatrix::from_fn(m, n, |i, j| a.get(i, j));
            let tail = DenseMatrix::from_fn(p, n, |i, j| a.get(m + i, j));
            let mut rng = Rng::derive(9200, seed);
            let x: Vec<f64> = (0..n).map(|_| rng.normal(0.0, 1.0)).collect();
            let mut y = head.apply(&x);
            for v in y.iter_mut() {
                *v += rng.normal(0.0, 0.01);
            }
            for loc in rng.distinct_indices(m, k) {
                y[loc] = 0.0;
            }
            let tau = 0.05;
            let state = robust_init(&head, &y, tau).unwrap();

            let mut w = tail.apply(&x);
            for v in w.iter_mut() {
                *v += rng.normal(0.0, 0.01);
            }
            if rng.uniform() < 0.5 {
                w[0] = 0.0;
            }
            let (warm, trace) = robust_add_measurements(&state, &tail, &w).unwrap();
            assert!(robust_kkt(&warm).pass);
            for win in trace.epsilons.windows(2) {
                assert!(win[1] > win[0], "epsilon must increase strictly");
            }

            let stacked = head.vstack(&tail).unwrap();
            let mut ys = y.clone();
            ys.extend_from_slice(&w);
            let cold = robust_init(&stacked, &ys, tau).unwrap();
            let diff = max_diff(warm.error_estimate(), cold.error_estimate());
            assert!(diff < 1e-7, "seed {seed}: {diff}");
        }
    }

    #[test]
    fn clean_rows_on_recovered_state_break_down_luckily() {
        let (m, n) = (30, 10);
        let mut a = gaussian_matrix(m + 3, n, 71);
        a.orthonormalize_columns().unwrap();
        let head = DenseMatrix::from_fn(m, n, |i, j| a.get(i, j));
        let tail = DenseMatrix::from_fn(3, n, |i, j| a.get(m + i, j));
        let mut rng = Rng::seed_from(72);
        let x: Vec<f64> = (0..n).map(|_| rng.normal(0.0, 1.0)).collect();
        let y = head.apply(&x);
        // Noise-free, error-free: the zero error estimate is optimal and the
        // new rows are exactly consistent.
        let state = robust_init(&head, &y, 0.05).unwrap();
        let w = tail.apply(&x);
        let (next, trace) = robust_add_measurements(&state, &tail, &w).unwrap();
        assert!(trace.lucky_breakdown);
        assert!(trace.steps.is_empty());
        assert!(max_diff(&decode_message(&next), &x) < 1e-9);
    }
}
