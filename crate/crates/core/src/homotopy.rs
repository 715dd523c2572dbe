//! Shared homotopy kernel: active-set bookkeeping and the step-size scans
//! that every path-following solver in this crate instantiates.
//!
//! A homotopy step moves along a fixed direction until one of two things
//! happens: an entry of the tracked solution shrinks to zero, or an inactive
//! constraint reaches its bound. `min_shrink_step` and `min_activation_step`
//! locate those critical points.
//!
//! Tolerance rules, applied uniformly:
//! * the event that just fired cannot re-trigger: fired indices leave their
//!   candidate sets, entries sitting exactly at zero or exactly on a
//!   boundary are classified by the *sign* of their motion rather than by a
//!   ratio, and strictly positive crossings are taken however small —
//!   discarding tiny ones lets a fast-moving candidate get stepped past its
//!   critical point;
//! * when two candidates land within `RATIO_TOL` of the same step size, the
//!   smaller index wins and fires at the smaller of the two steps; the
//!   runner-up follows on a near-zero-length step. Ties have probability
//!   zero for the random ensembles these solvers target, so the rule only
//!   pins down reproducibility.

use crate::error::{Result, SolverError};
use crate::linalg::{factor_add_index, factor_of_gram_columns, factor_remove_index, DenseMatrix, SpdFactor};

/// Tie window of the step-size scans.
pub const RATIO_TOL: f64 = 1e-12;

/// Rebuild an incrementally updated active-set factor after this many edits.
const REBUILD_INTERVAL: u32 = 200;

/// Between rebuilds, check factor drift against the Gram matrix on a probe
/// vector this often.
const DRIFT_PROBE_INTERVAL: u32 = 50;

/// What happened at a critical point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum StepKind {
    /// A tracked entry shrank to zero and leaves the support.
    Shrink,
    /// An inactive constraint reached its bound; its index enters the support.
    Activate,
    /// No event lies ahead: the path runs straight to its endpoint.
    Terminal,
}

/// Outcome of one homotopy step scan.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct StepEvent {
    /// Step size to the critical point; `f64::INFINITY` for `Terminal`.
    pub theta: f64,
    pub kind: StepKind,
    /// Index at which the event fires; `None` iff `Terminal`.
    pub gamma: Option<usize>,
    /// For activations, the sign of the boundary that was hit.
    pub gamma_sign: Option<f64>,
}

impl StepEvent {
    pub fn terminal() -> Self {
        StepEvent {
            theta: f64::INFINITY,
            kind: StepKind::Terminal,
            gamma: None,
            gamma_sign: None,
        }
    }

    pub fn shrink(theta: f64, gamma: usize) -> Self {
        StepEvent {
            theta,
            kind: StepKind::Shrink,
            gamma: Some(gamma),
            gamma_sign: None,
        }
    }

    pub fn activate(theta: f64, gamma: usize, sign: f64) -> Self {
        StepEvent {
            theta,
            kind: StepKind::Activate,
            gamma: Some(gamma),
            gamma_sign: Some(sign),
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.kind == StepKind::Terminal
    }

    /// The earlier of two events; on a tie within tolerance the smaller
    /// index wins but fires at the smaller of the two step sizes, so the
    /// runner-up is never stepped past its own critical point. It fires on
    /// a following near-zero-length step instead.
    pub fn min(self, other: StepEvent) -> StepEvent {
        if other.theta < self.theta - RATIO_TOL {
            return other;
        }
        if self.theta < other.theta - RATIO_TOL {
            return self;
        }
        let theta = self.theta.min(other.theta);
        let mut winner = match (self.gamma, other.gamma) {
            (Some(a), Some(b)) if b < a => other,
            (None, Some(_)) => other,
            _ => self,
        };
        winner.theta = theta;
        winner
    }
}

/// Smallest positive step shrinking one of `values` to zero along
/// `directions`; indices label the entries. Returns `Terminal` when no ratio
/// is positive. Entries sitting exactly at zero never fire here (their ratio
/// is a signed zero); see [`min_shrink_step_signed`] when they must.
pub fn min_shrink_step(values: &[f64], directions: &[f64], indices: &[usize]) -> StepEvent {
    debug_assert_eq!(values.len(), directions.len());
    debug_assert_eq!(values.len(), indices.len());
    let mut best = StepEvent::terminal();
    for ((&v, &d), &idx) in values.iter().zip(directions).zip(indices) {
        if v * d >= 0.0 {
            continue;
        }
        // Strictly moving toward zero: take the crossing however small, or
        // an entry stepped fractionally past its own critical point would
        // silently change sign.
        best = best.min(StepEvent::shrink(-v / d, idx));
    }
    best
}

/// As [`min_shrink_step`], for entries carrying a sign convention: an entry
/// whose value is exactly zero (a just-readmitted support member) blocks at
/// step zero when the direction moves it against its sign.
pub fn min_shrink_step_signed(
    values: &[f64],
    directions: &[f64],
    signs: &[f64],
    indices: &[usize],
) -> StepEvent {
    debug_assert_eq!(values.len(), signs.len());
    let mut degenerate: Option<usize> = None;
    for ((&v, &d), (&z, &idx)) in values
        .iter()
        .zip(directions)
        .zip(signs.iter().zip(indices))
    {
        if v == 0.0 && d * z < 0.0 && degenerate.map_or(true, |cur| idx < cur) {
            degenerate = Some(idx);
        }
    }
    if let Some(idx) = degenerate {
        return StepEvent::shrink(0.0, idx);
    }
    min_shrink_step(values, directions, indices)
}

/// Smallest positive step at which `p + theta * d` hits `+bound` or `-bound`
/// among the candidate indices. The constraints must start inside the bound
/// (within `1e-9`), otherwise the warm-start state is corrupt.
///
/// A candidate parked *on* the boundary (a support member released at the
/// previous critical point) fires a zero-length activation when its value
/// moves outward: the path readmits it on the spot. Parked candidates
/// moving inward are simply released.
pub fn min_activation_step(
    p: &[f64],
    d: &[f64],
    bound: f64,
    candidates: &[usize],
) -> Result<StepEvent> {
    debug_assert_eq!(p.len(), d.len());
    debug_assert_eq!(p.len(), candidates.len());
    let mut best = StepEvent::terminal();
    let mut degenerate: Option<(usize, f64)> = None;
    for ((&pj, &dj), &idx) in p.iter().zip(d).zip(candidates) {
        if pj.abs() > bound + 1e-9 {
            return Err(SolverError::ConstraintAlreadyViolated {
                index: idx,
                value: pj,
                bound,
            });
        }
        if pj.abs() >= bound * (1.0 - 1e-9) {
            if pj * dj > 0.0 {
                match degenerate {
                    Some((cur, _)) if cur <= idx => {}
                    _ => degenerate = Some((idx, pj.signum())),
                }
            } else if pj > 0.0 && dj < 0.0 {
                // Released inward: only the far boundary can fire.
                best = best.min(StepEvent::activate((bound + pj) / -dj, idx, -1.0));
            } else if pj < 0.0 && dj > 0.0 {
                best = best.min(StepEvent::activate((bound - pj) / dj, idx, 1.0));
            }
            continue;
        }
        if dj != 0.0 {
            let up = (bound - pj) / dj;
            if up > 0.0 {
                best = best.min(StepEvent::activate(up, idx, 1.0));
            }
            let down = (bound + pj) / -dj;
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

/// Variant for the path in the relaxation parameter itself, where the bound
/// shrinks at unit rate while the constraint values move: the hit condition
/// is `p + theta * d = +-(bound - theta)`. Used by the cold-start solvers.
/// A candidate parked on the boundary must track the shrinking bound
/// inward (`d` against its sign at unit rate or faster) or it is readmitted
/// immediately.
pub fn min_activation_step_shrinking_bound(
    p: &[f64],
    d: &[f64],
    bound: f64,
    candidates: &[usize],
) -> StepEvent {
    debug_assert_eq!(p.len(), d.len());
    let mut best = StepEvent::terminal();
    let mut degenerate: Option<(usize, f64)> = None;
    for ((&pj, &dj), &idx) in p.iter().zip(d).zip(candidates) {
        if pj.abs() >= bound * (1.0 - 1e-9) {
            if dj * pj.signum() > -(1.0 - 1e-9) * pj.abs() / bound {
                match degenerate {
                    Some((cur, _)) if cur <= idx => {}
                    _ => degenerate = Some((idx, pj.signum())),
                }
            } else if pj > 0.0 {
                let down = (bound + pj) / (1.0 - dj);
                if down > 0.0 {
                    best = best.min(StepEvent::activate(down, idx, -1.0));
                }
            } else {
                let up = (bound - pj) / (1.0 + dj);
                if up > 0.0 {
                    best = best.min(StepEvent::activate(up, idx, 1.0));
                }
            }
            continue;
        }
        let up = (bound - pj) / (1.0 + dj);
        if up > 0.0 {
            best = best.min(StepEvent::activate(up, idx, 1.0));
        }
        let down = (bound + pj) / (1.0 - dj);
        if down > 0.0 {
            best = best.min(StepEvent::activate(down, idx, -1.0));
        }
    }
    if let Some((idx, sign)) = degenerate {
        return StepEvent::activate(0.0, idx, sign);
    }
    best
}

/// Same for a bound growing at unit rate: `p + theta * d = +-(bound + theta)`.
pub fn min_activation_step_growing_bound(
    p: &[f64],
    d: &[f64],
    bound: f64,
    candidates: &[usize],
) -> StepEvent {
    debug_assert_eq!(p.len(), d.len());
    let mut best = StepEvent::terminal();
    for ((&pj, &dj), &idx) in p.iter().zip(d).zip(candidates) {
        let up = (bound - pj) / (dj - 1.0);
        if up > 0.0 {
            best = best.min(StepEvent::activate(up, idx, 1.0));
        }
        let down = -(bound + pj) / (dj + 1.0);
        if down > 0.0 {
            best = best.min(StepEvent::activate(down, idx, -1.0));
        }
    }
    best
}

/// Support set `Gamma` with its sign sequence and an updatable Cholesky
/// factor of the associated Gram submatrix.
#[derive(Debug, Clone)]
pub struct ActiveSet {
    indices: Vec<usize>,
    signs: Vec<f64>,
    factor: SpdFactor,
    edits: u32,
}

impl ActiveSet {
    pub fn empty() -> Self {
        ActiveSet {
            indices: Vec::new(),
            signs: Vec::new(),
            factor: SpdFactor::empty(),
            edits: 0,
        }
    }

    /// Rebuilds the active set for given indices and signs from scratch.
    pub fn from_support(a: &DenseMatrix, indices: &[usize], signs: &[f64]) -> Result<Self> {
        if indices.is_empty() {
            return Ok(ActiveSet::empty());
        }
        let factor = factor_of_gram_columns(a, indices).map_err(degenerate)?;
        Ok(ActiveSet {
            indices: indices.to_vec(),
            signs: signs.to_vec(),
            factor,
            edits: 0,
        })
    }

    /// Assembles a set from an externally maintained factor. The factor's
    /// source columns must match `indices`.
    pub(crate) fn from_parts(indices: Vec<usize>, signs: Vec<f64>, factor: SpdFactor) -> Self {
        debug_assert_eq!(factor.source_cols(), &indices[..]);
        ActiveSet {
            indices,
            signs,
            factor,
            edits: 0,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    pub fn sign_of(&self, index: usize) -> Option<f64> {
        self.position(index).map(|p| self.signs[p])
    }

    pub fn position(&self, index: usize) -> Option<usize> {
        self.indices.iter().position(|&i| i == index)
    }

    pub fn contains(&self, index: usize) -> bool {
        self.position(index).is_some()
    }

    pub fn factor(&self) -> &SpdFactor {
        &self.factor
    }

    /// Solves `(A_G' A_G) x = rhs` on the support.
    pub fn solve_gram(&self, rhs: &[f64]) -> Vec<f64> {
        self.factor.solve(rhs)
    }

    /// Adds `index` with `sign`, extending the factor by the new Gram column.
    pub fn insert(&mut self, a: &DenseMatrix, index: usize, sign: f64) -> Result<()> {
        debug_assert!(!self.contains(index));
        let gram_col: Vec<f64> = self
            .indices
            .iter()
            .map(|&c| (0..a.rows()).map(|r| a.get(r, c) * a.get(r, index)).sum())
            .collect();
        let diag = (0..a.rows())
            .map(|r| a.get(r, index) * a.get(r, index))
            .sum();
        self.factor = factor_add_index(&self.factor, &gram_col, diag, index).map_err(degenerate)?;
        self.indices.push(index);
        self.signs.push(sign);
        self.maybe_rebuild(a)
    }

    /// Removes the support member `index`.
    pub fn remove(&mut self, a: &DenseMatrix, index: usize) -> Result<()> {
        let pos = self
            .position(index)
            .expect("removal of an index not in the active set");
        self.factor = factor_remove_index(&self.factor, pos).map_err(degenerate)?;
        self.indices.remove(pos);
        self.signs.remove(pos);
        self.maybe_rebuild(a)
    }

    fn maybe_rebuild(&mut self, a: &DenseMatrix) -> Result<()> {
        self.edits += 1;
        if self.edits >= REBUILD_INTERVAL
            || (self.edits % DRIFT_PROBE_INTERVAL == 0 && self.drift_probe(a) > 1e-6)
        {
            self.rebuild(a)?;
        }
        Ok(())
    }

    /// Residual of the incrementally updated factor against the true Gram
    /// submatrix, measured on one probe vector: `||(L L' - G'G) u||_inf`.
    fn drift_probe(&self, a: &DenseMatrix) -> f64 {
        let k = self.indices.len();
        if k == 0 {
            return 0.0;
        }
        let u: Vec<f64> = (0..k).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        // L (L' u).
        let lt_u = {
            let mut v = vec![0.0; k];
            for i in 0..k {
                for j in i..k {
                    v[i] += self.factor.l_entry(j, i) * u[j];
                }
            }
            let mut w = vec![0.0; k];
            for i in 0..k {
                for j in 0..=i {
                    w[i] += self.factor.l_entry(i, j) * v[j];
                }
            }
            w
        };
        // (A_G' A_G) u via one partial product.
        let coef: Vec<f64> = u.clone();
        let av = a.combine_cols(&self.indices, &coef);
        let mut worst: f64 = 0.0;
        for (pos, &j) in self.indices.iter().enumerate() {
            let g = a.col_dot(j, &av);
            worst = worst.max((lt_u[pos] - g).abs());
        }
        worst
    }

    /// Drops accumulated drift by refactorizing from the matrix.
    pub fn rebuild(&mut self, a: &DenseMatrix) -> Result<()> {
        if !self.indices.is_empty() {
            self.factor = factor_of_gram_columns(a, &self.indices).map_err(degenerate)?;
        }
        self.edits = 0;
        Ok(())
    }
}

fn degenerate(e: SolverError) -> SolverError {
    match e {
        SolverError::NotPositiveDefinite { .. } => SolverError::DegenerateSupport,
        other => other,
    }
}

/// Access to a measurement matrix plus a hook for counting applications of
/// the full Gram operator `A'A`, the hardware-independent cost metric the
/// benchmark reports. Partial products over support columns are deliberately
/// not counted.
pub trait SensingMatrix {
    fn matrix(&self) -> &DenseMatrix;

    /// Called once per application of the full `A'A`.
    fn note_gram_product(&self) {}
}

impl SensingMatrix for DenseMatrix {
    fn matrix(&self) -> &DenseMatrix {
        self
    }
}
