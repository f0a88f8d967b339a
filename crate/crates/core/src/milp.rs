//! Linearised coding problem and the iterative MILP loop.
//!
//! Each decision `x_i ∈ [0, theta]` becomes a one-hot block of `theta + 1`
//! binaries, which turns both `log2(x_i + 1)` and `x_i²` into dot products.
//! The cross terms of the distortion, `y_i²` and `x_i y_i`, are carried by two
//! non-negative slacks per value, pushed up by cuts anchored at the previous
//! solution `(x̃, ỹ)`.
//!
//! The square cut is the first-order Taylor expansion of `y²`:
//!
//! ```text
//! 2ỹ·y_i − z_y²,i <= ỹ²
//! ```
//!
//! Two bilinear cuts are available. The tangent plane of `x·y`,
//!
//! ```text
//! x̃·y_i + ỹ·x_i − z_xy,i <= x̃·ỹ
//! ```
//!
//! is not an underestimator, so it can hold the loop at a poor iterate. The
//! default instead uses `x_i y_i = (y_{i+1}² − y_i² − x_i²) / 2` with
//! `y_{i+1} = y_i + x_i`, linearising the convex `y_{i+1}²` at
//! `ã = ỹ_i + x̃_i`:
//!
//! ```text
//! ã·(y_i + x_i) − x_i²/2 − z_y²,i/2 − z_xy,i <= ã²/2
//! ```
//!
//! Every integer point with exact slacks satisfies both default cut families,
//! so the model stays a relaxation and the cuts accumulate. When the optimum
//! of the model is tight (its objective equals the true distortion) the
//! iterate is globally optimal.
//!
//! Variable order: the blocks by value index, then all `z_y²` slacks, then all
//! `z_xy` slacks.

use serde::Serialize;

use crate::brute::candidate_order;
use crate::error::{Error, Result};
use crate::model::{
    cumulative_deviations, evaluate, max_capacity_dp, EvalResult, LinkVector, ProblemSpec, PAYLOAD_TOLERANCE,
};
use crate::solver::{solve_milp_with, LinearRow, MilpProblem, SolveStatus, SolverOptions};

/// Tolerance for reading a one-hot block back from solver output.
pub const ONEHOT_TOLERANCE: f64 = 1e-6;

pub const DEFAULT_MAX_ITER: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VariableLayout {
    /// Largest value index; there are `n + 1` blocks.
    pub n: usize,
    pub theta: u32,
}

impl VariableLayout {
    pub fn values(&self) -> usize {
        self.n + 1
    }

    pub fn block_len(&self) -> usize {
        self.theta as usize + 1
    }

    pub fn binary(&self, value: usize, k: usize) -> usize {
        value * self.block_len() + k
    }

    pub fn num_binaries(&self) -> usize {
        self.values() * self.block_len()
    }

    pub fn slack_square(&self, value: usize) -> usize {
        self.num_binaries() + value
    }

    pub fn slack_bilinear(&self, value: usize) -> usize {
        self.num_binaries() + self.values() + value
    }

    /// `(n + 1)(theta + 3)`.
    pub fn num_vars(&self) -> usize {
        self.num_binaries() + 2 * self.values()
    }

    /// Coefficients expressing `x_value` through its block.
    fn x_terms(&self, value: usize, scale: f64) -> impl Iterator<Item = (usize, f64)> + '_ {
        (1..self.block_len()).map(move |k| (self.binary(value, k), scale * k as f64))
    }

    /// Coefficients expressing `y_value = Σ_{j<value} x_j`.
    fn y_terms(&self, value: usize, scale: f64) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..value).flat_map(move |j| self.x_terms(j, scale))
    }
}

pub fn build_layout(n: usize, theta: u32) -> VariableLayout {
    VariableLayout { n, theta }
}

/// Block `i` gets a single 1 at position `x[i]`.
pub fn encode_onehot(x: &LinkVector, layout: &VariableLayout) -> Result<Vec<u8>> {
    if x.len() != layout.values() {
        return Err(Error::DimensionMismatch {
            expected: layout.values(),
            found: x.len(),
        });
    }
    let mut bits = vec![0u8; layout.num_binaries()];
    for (i, &xi) in x.as_slice().iter().enumerate() {
        if xi > layout.theta {
            return Err(Error::InvalidInput(format!(
                "x[{i}] = {xi} exceeds theta = {}",
                layout.theta
            )));
        }
        bits[layout.binary(i, xi as usize)] = 1;
    }
    Ok(bits)
}

/// Reads `x` back from the binary part of a solver vector.
pub fn decode_onehot(values: &[f64], layout: &VariableLayout) -> Result<LinkVector> {
    if values.len() < layout.num_binaries() {
        return Err(Error::DimensionMismatch {
            expected: layout.num_binaries(),
            found: values.len(),
        });
    }
    let tol = ONEHOT_TOLERANCE;
    let mut x = Vec::with_capacity(layout.values());
    for i in 0..layout.values() {
        let block = &values[layout.binary(i, 0)..layout.binary(i, 0) + layout.block_len()];
        let sum: f64 = block.iter().sum();
        let vertex = block.iter().all(|&v| v.abs() <= tol || (v - 1.0).abs() <= tol);
        if !vertex || (sum - 1.0).abs() > tol {
            return Err(Error::FractionalBlock { block: i });
        }
        let xi: f64 = block.iter().enumerate().map(|(k, &v)| k as f64 * v).sum();
        x.push(xi.round() as u32);
    }
    Ok(LinkVector::new(x))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CutKind {
    Square,
    /// Tangent plane of `x·y`.
    Bilinear,
    /// Cut on `x·y` derived from the square of `y_{i+1} = y_i + x_i`.
    BilinearIdentity,
}

/// Which cut the loop uses for the `x·y` slack.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BilinearCut {
    #[default]
    Identity,
    TangentPlane,
}

/// One Taylor cut and the anchor it was built from.
#[derive(Clone, Debug, PartialEq)]
pub struct TaylorCut {
    pub kind: CutKind,
    pub value: usize,
    pub anchor_x: u64,
    pub anchor_y: u64,
    pub row: LinearRow,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearizedModel {
    pub layout: VariableLayout,
    pub objective: Vec<f64>,
    /// `Σ a_i log2(k + 1) · b_ik`, constrained to be at least the payload.
    pub capacity_row: Vec<(usize, f64)>,
    pub payload: f64,
    /// `Σ k · b_ik <= theta`.
    pub quota_row: LinearRow,
    /// `Σ_k b_ik = 1` per block.
    pub onehot_rows: Vec<LinearRow>,
    pub cuts: Vec<TaylorCut>,
}

pub fn build_base_model(spec: &ProblemSpec) -> LinearizedModel {
    let layout = build_layout(spec.n, spec.theta);
    let counts = spec.counts();
    let mut objective = vec![0.0; layout.num_vars()];
    let mut capacity_row = Vec::new();
    let mut quota = Vec::new();
    let mut onehot_rows = Vec::with_capacity(layout.values());
    for (i, &a) in counts.iter().enumerate() {
        let a = a as f64;
        for k in 0..layout.block_len() {
            let kf = k as f64;
            let j = layout.binary(i, k);
            objective[j] = a * (kf * kf / 3.0 + kf / 6.0);
            if k > 0 {
                capacity_row.push((j, a * (kf + 1.0).log2()));
                quota.push((j, kf));
            }
        }
        objective[layout.slack_square(i)] = a;
        objective[layout.slack_bilinear(i)] = a;
        onehot_rows.push(LinearRow::new(
            (0..layout.block_len()).map(|k| (layout.binary(i, k), 1.0)).collect(),
            1.0,
        ));
    }
    LinearizedModel {
        layout,
        objective,
        capacity_row,
        payload: spec.payload,
        quota_row: LinearRow::new(quota, spec.theta as f64),
        onehot_rows,
        cuts: Vec::new(),
    }
}

fn anchors(model: &LinearizedModel, x_prev: &LinkVector) -> Result<Vec<(u64, u64)>> {
    let layout = model.layout;
    if x_prev.len() != layout.values() {
        return Err(Error::DimensionMismatch {
            expected: layout.values(),
            found: x_prev.len(),
        });
    }
    let ys = cumulative_deviations(x_prev);
    Ok(x_prev.as_slice().iter().zip(ys).map(|(&x, y)| (x as u64, y)).collect())
}

/// Appends the square cuts `2ỹ·y_i − z_y²,i <= ỹ²` anchored at `x_prev`,
/// skipping `ỹ = 0`.
pub fn add_square_cuts(model: &mut LinearizedModel, x_prev: &LinkVector) -> Result<()> {
    let layout = model.layout;
    for (i, (xt, yt)) in anchors(model, x_prev)?.into_iter().enumerate() {
        if yt == 0 {
            continue;
        }
        let mut coeffs: Vec<(usize, f64)> = layout.y_terms(i, 2.0 * yt as f64).collect();
        coeffs.push((layout.slack_square(i), -1.0));
        model.push_cut(TaylorCut {
            kind: CutKind::Square,
            value: i,
            anchor_x: xt,
            anchor_y: yt,
            row: LinearRow::new(coeffs, (yt * yt) as f64),
        });
    }
    Ok(())
}

/// Appends the tangent-plane cuts `x̃·y_i + ỹ·x_i − z_xy,i <= x̃·ỹ`, skipping
/// anchors with `x̃ = ỹ = 0`.
pub fn add_tangent_bilinear_cuts(model: &mut LinearizedModel, x_prev: &LinkVector) -> Result<()> {
    let layout = model.layout;
    for (i, (xt, yt)) in anchors(model, x_prev)?.into_iter().enumerate() {
        if xt == 0 && yt == 0 {
            continue;
        }
        let mut coeffs: Vec<(usize, f64)> = layout.y_terms(i, xt as f64).collect();
        coeffs.extend(layout.x_terms(i, yt as f64));
        coeffs.retain(|&(_, c)| c != 0.0);
        coeffs.push((layout.slack_bilinear(i), -1.0));
        model.push_cut(TaylorCut {
            kind: CutKind::Bilinear,
            value: i,
            anchor_x: xt,
            anchor_y: yt,
            row: LinearRow::new(coeffs, (xt * yt) as f64),
        });
    }
    Ok(())
}

/// Appends `ã·(y_i + x_i) − x_i²/2 − z_y²,i/2 − z_xy,i <= ã²/2` with
/// `ã = ỹ_i + x̃_i`, skipping `ã = 0`.
pub fn add_identity_bilinear_cuts(model: &mut LinearizedModel, x_prev: &LinkVector) -> Result<()> {
    let layout = model.layout;
    for (i, (xt, yt)) in anchors(model, x_prev)?.into_iter().enumerate() {
        let next = xt + yt;
        if next == 0 {
            continue;
        }
        let a = next as f64;
        let mut coeffs: Vec<(usize, f64)> = layout.y_terms(i, a).collect();
        coeffs.extend((1..layout.block_len()).map(|k| {
            let kf = k as f64;
            (layout.binary(i, k), a * kf - kf * kf / 2.0)
        }));
        coeffs.retain(|&(_, c)| c != 0.0);
        coeffs.push((layout.slack_square(i), -0.5));
        coeffs.push((layout.slack_bilinear(i), -1.0));
        model.push_cut(TaylorCut {
            kind: CutKind::BilinearIdentity,
            value: i,
            anchor_x: xt,
            anchor_y: yt,
            row: LinearRow::new(coeffs, a * a / 2.0),
        });
    }
    Ok(())
}

/// Appends the square and tangent-plane bilinear cuts anchored at `x_prev`.
pub fn add_taylor_cuts(model: &mut LinearizedModel, x_prev: &LinkVector) -> Result<()> {
    add_square_cuts(model, x_prev)?;
    add_tangent_bilinear_cuts(model, x_prev)
}

impl LinearizedModel {
    /// Adds `cut` unless an identical anchor of the same kind is present.
    fn push_cut(&mut self, cut: TaylorCut) {
        let duplicate = self.cuts.iter().any(|c| {
            c.kind == cut.kind && c.value == cut.value && c.row.rhs == cut.row.rhs && c.row.coeffs == cut.row.coeffs
        });
        if !duplicate {
            self.cuts.push(cut);
        }
    }

    /// Removes the tangent-plane bilinear cuts.
    pub fn drop_bilinear_cuts(&mut self) {
        self.cuts.retain(|c| c.kind != CutKind::Bilinear);
    }

    /// Upper bound for the slacks. Any cut right-hand side is at most
    /// `2 theta²`, so the bound never binds at a cut-feasible optimum.
    pub fn slack_bound(&self) -> f64 {
        let t = self.layout.theta as f64;
        2.0 * t * t
    }

    pub fn to_problem(&self) -> MilpProblem {
        let layout = self.layout;
        let mut p = MilpProblem::new(layout.num_vars());
        p.objective = self.objective.clone();
        for j in 0..layout.num_binaries() {
            p.integer[j] = true;
        }
        for j in layout.num_binaries()..layout.num_vars() {
            p.upper[j] = self.slack_bound();
        }
        p.inequalities.push(LinearRow::new(
            self.capacity_row.iter().map(|&(j, c)| (j, -c)).collect(),
            -(self.payload - PAYLOAD_TOLERANCE),
        ));
        p.inequalities.push(self.quota_row.clone());
        p.inequalities.extend(self.cuts.iter().map(|c| c.row.clone()));
        p.equalities = self.onehot_rows.clone();
        p
    }

    /// Capacity row evaluated at an assignment.
    pub fn capacity_at(&self, values: &[f64]) -> f64 {
        self.capacity_row.iter().map(|&(j, c)| c * values[j]).sum()
    }
}

/// Full assignment for `x` with every slack set to its exact quadratic term.
pub fn exact_assignment(x: &LinkVector, layout: &VariableLayout) -> Result<Vec<f64>> {
    let bits = encode_onehot(x, layout)?;
    let mut v: Vec<f64> = bits.into_iter().map(f64::from).collect();
    v.resize(layout.num_vars(), 0.0);
    let ys = cumulative_deviations(x);
    for i in 0..layout.values() {
        let (xi, yi) = (x[i] as f64, ys[i] as f64);
        v[layout.slack_square(i)] = yi * yi;
        v[layout.slack_bilinear(i)] = xi * yi;
    }
    Ok(v)
}

#[derive(Clone, Debug)]
pub struct IterateOptions {
    pub max_iter: usize,
    pub bilinear: BilinearCut,
    /// With [`BilinearCut::TangentPlane`], keep cuts from earlier anchors
    /// instead of replacing them. Identity cuts always accumulate.
    pub accumulate_bilinear: bool,
    pub solver: SolverOptions,
}

impl Default for IterateOptions {
    fn default() -> Self {
        Self {
            max_iter: DEFAULT_MAX_ITER,
            bilinear: BilinearCut::Identity,
            accumulate_bilinear: false,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub x: LinkVector,
    pub milp_objective: f64,
    pub true_distortion: f64,
    pub capacity_bits: f64,
    pub feasible: bool,
    pub nodes: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterateResult {
    pub x: LinkVector,
    pub eval: EvalResult,
    pub iterations: usize,
    /// False when the loop hit `max_iter` without reaching a repeated iterate.
    pub converged: bool,
    pub trace: Vec<TraceEntry>,
}

pub fn iterate_optimize(spec: &ProblemSpec) -> Result<IterateResult> {
    iterate_optimize_with(spec, &IterateOptions::default())
}

/// Solves the linearised model repeatedly, re-anchoring the Taylor cuts at
/// each decoded solution. The best iterate by true distortion is returned.
///
/// The loop stops when the decoded `x` repeats any earlier iterate, or when
/// the model is a relaxation and tight at its optimum. The model is a
/// relaxation unless it carries tangent-plane bilinear cuts.
pub fn iterate_optimize_with(spec: &ProblemSpec, opts: &IterateOptions) -> Result<IterateResult> {
    if opts.max_iter == 0 {
        return Err(Error::InvalidInput("max_iter must be at least 1".into()));
    }
    let mut model = build_base_model(spec);
    let mut seen: Vec<LinkVector> = Vec::new();
    let mut trace = Vec::new();
    let mut best: Option<(EvalResult, LinkVector)> = None;
    let mut converged = false;

    for iteration in 1..=opts.max_iter {
        let problem = model.to_problem();
        let sol = solve_milp_with(&problem, &opts.solver);
        match sol.status {
            SolveStatus::Optimal => {}
            SolveStatus::IterationLimit if !sol.values.is_empty() => {
                log::warn!("iteration {iteration}: node limit hit, using incumbent");
            }
            SolveStatus::Infeasible => {
                return Err(Error::Infeasible {
                    payload: spec.payload,
                    max_capacity: max_capacity_dp(spec),
                })
            }
            status => {
                return Err(Error::Solver(format!(
                    "iteration {iteration}: {status:?} {}",
                    sol.stats.diagnostics.unwrap_or_default()
                )))
            }
        }
        let x = decode_onehot(&sol.values, &model.layout)?;
        let eval = evaluate(spec, &x)?;
        log::debug!(
            "iteration {iteration}: x={:?} surrogate={} true={}",
            x.as_slice(),
            sol.objective,
            eval.distortion
        );
        trace.push(TraceEntry {
            iteration,
            x: x.clone(),
            milp_objective: sol.objective,
            true_distortion: eval.distortion,
            capacity_bits: eval.capacity,
            feasible: eval.feasible,
            nodes: sol.stats.nodes_explored,
        });
        if eval.feasible {
            let better = best
                .as_ref()
                .is_none_or(|(be, bx)| candidate_order((&eval, &x), (be, bx)).is_lt());
            if better {
                best = Some((eval, x.clone()));
            }
        }

        let relaxation = !model.cuts.iter().any(|c| c.kind == CutKind::Bilinear);
        let tight = relaxation && eval.distortion <= sol.objective + 1e-9 * (1.0 + sol.objective.abs());
        if tight || seen.contains(&x) {
            converged = true;
            break;
        }
        seen.push(x.clone());
        add_square_cuts(&mut model, &x)?;
        match opts.bilinear {
            BilinearCut::Identity => add_identity_bilinear_cuts(&mut model, &x)?,
            BilinearCut::TangentPlane => {
                if !opts.accumulate_bilinear {
                    model.drop_bilinear_cuts();
                }
                add_tangent_bilinear_cuts(&mut model, &x)?;
            }
        }
    }

    let iterations = trace.len();
    match best {
        Some((eval, x)) => Ok(IterateResult {
            x,
            eval,
            iterations,
            converged,
            trace,
        }),
        None => Err(Error::Solver("no iterate satisfied the capacity constraint".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brute::brute_force_optimize;
    use crate::model::{capacity, distortion_sixths, AbsErrorHistogram};
    use rand::{Rng, SeedableRng};

    fn spec(a: &[u64], theta: u32, payload: f64) -> ProblemSpec {
        ProblemSpec::new(AbsErrorHistogram::new(a.to_vec()), a.len() - 1, theta, payload).unwrap()
    }

    fn lv(x: &[u32]) -> LinkVector {
        LinkVector::new(x.to_vec())
    }

    #[test]
    fn layout_sizes() {
        let l = build_layout(1, 1);
        assert_eq!(l.num_vars(), 8);
        assert_eq!(l.num_binaries(), 4);
        let l = build_layout(0, 3);
        assert_eq!((l.num_binaries(), l.num_vars() - l.num_binaries()), (4, 2));
        assert_eq!(encode_onehot(&lv(&[2]), &l).unwrap(), vec![0, 0, 1, 0]);
        assert_eq!(l.slack_square(0), 4);
        assert_eq!(l.slack_bilinear(0), 5);
    }

    #[test]
    fn onehot_examples() {
        assert_eq!(encode_onehot(&lv(&[0]), &build_layout(0, 2)).unwrap(), vec![1, 0, 0]);
        assert_eq!(
            encode_onehot(&lv(&[2, 1]), &build_layout(1, 2)).unwrap(),
            vec![0, 0, 1, 0, 1, 0]
        );
        assert!(encode_onehot(&lv(&[3]), &build_layout(0, 2)).is_err());

        assert_eq!(decode_onehot(&[0.0, 1.0, 0.0, 0.0], &build_layout(0, 3)).unwrap(), lv(&[1]));
        assert_eq!(decode_onehot(&[1.0, 0.0], &build_layout(0, 1)).unwrap(), lv(&[0]));
        assert!(matches!(
            decode_onehot(&[0.5, 0.5], &build_layout(0, 1)),
            Err(Error::FractionalBlock { block: 0 })
        ));
        assert!(decode_onehot(&[1.0, 1.0], &build_layout(0, 1)).is_err());
        assert_eq!(decode_onehot(&[1e-8, 1.0 - 1e-8], &build_layout(0, 1)).unwrap(), lv(&[1]));
    }

    #[test]
    fn onehot_roundtrip_random() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let theta = rng.gen_range(0..5);
            let len = rng.gen_range(1..12);
            let x = lv(&(0..len).map(|_| rng.gen_range(0..=theta)).collect::<Vec<_>>());
            let layout = build_layout(len - 1, theta);
            let bits: Vec<f64> = encode_onehot(&x, &layout).unwrap().into_iter().map(f64::from).collect();
            assert_eq!(decode_onehot(&bits, &layout).unwrap(), x);
        }
    }

    #[test]
    fn base_model_coefficients() {
        let m = build_base_model(&spec(&[4, 1, 3], 1, 1.0));
        assert_eq!(m.capacity_row, vec![(1, 4.0), (3, 1.0), (5, 3.0)]);
        assert_eq!(m.quota_row.coeffs, vec![(1, 1.0), (3, 1.0), (5, 1.0)]);
        assert_eq!(m.quota_row.rhs, 1.0);
        assert!(m.cuts.is_empty());

        let m = build_base_model(&spec(&[6, 3], 2, 0.0));
        let l = m.layout;
        let block0: Vec<f64> = (0..3).map(|k| m.objective[l.binary(0, k)]).collect();
        assert_eq!(block0[0], 0.0);
        assert!((block0[1] - 6.0 * 0.5).abs() < 1e-12);
        assert!((block0[2] - 6.0 * 5.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.objective[l.slack_square(1)], 3.0);
        assert_eq!(m.objective[l.slack_bilinear(1)], 3.0);
    }

    #[test]
    fn base_model_drives_slacks_to_zero() {
        let s = spec(&[10, 6, 3, 1], 2, 8.0);
        let p = build_base_model(&s).to_problem();
        let sol = crate::solver::solve_milp(&p);
        let l = build_layout(3, 2);
        for i in 0..4 {
            assert_eq!(sol.values[l.slack_square(i)], 0.0);
            assert_eq!(sol.values[l.slack_bilinear(i)], 0.0);
        }
    }

    #[test]
    fn cut_examples() {
        // x̃ = [2, 1, 2]  ->  ỹ = [0, 2, 3]
        let s = spec(&[1, 1, 1], 5, 0.0);
        let mut m = build_base_model(&s);
        add_taylor_cuts(&mut m, &lv(&[2, 1, 2])).unwrap();
        let l = m.layout;
        let sq = m.cuts.iter().find(|c| c.kind == CutKind::Square && c.value == 2).unwrap();
        assert_eq!(sq.anchor_y, 3);
        assert_eq!(sq.row.rhs, 9.0);
        // y_2 = x_0 + x_1, each scaled by 2ỹ = 6
        assert!(sq.row.coeffs.contains(&(l.binary(0, 1), 6.0)));
        assert!(sq.row.coeffs.contains(&(l.binary(1, 3), 18.0)));
        assert!(sq.row.coeffs.contains(&(l.slack_square(2), -1.0)));

        let bl = m.cuts.iter().find(|c| c.kind == CutKind::Bilinear && c.value == 2).unwrap();
        assert_eq!(bl.row.rhs, 6.0);
        // x̃·y_2 + ỹ·x_2: x_2 scaled by 3, y_2 by 2
        assert!(bl.row.coeffs.contains(&(l.binary(2, 1), 3.0)));
        assert!(bl.row.coeffs.contains(&(l.binary(0, 1), 2.0)));
        assert!(bl.row.coeffs.contains(&(l.slack_bilinear(2), -1.0)));

        // value 0 has ỹ = 0: no square cut, bilinear 0·y + 0·x... skipped only if x̃ = 0 too
        assert!(!m.cuts.iter().any(|c| c.kind == CutKind::Square && c.value == 0));

        let mut m = build_base_model(&s);
        add_taylor_cuts(&mut m, &lv(&[0, 0, 0])).unwrap();
        assert!(m.cuts.is_empty());
    }

    #[test]
    fn square_cut_never_excludes_integer_points() {
        for y in 0..=20i64 {
            for anchor in 0..=20i64 {
                assert!(2 * anchor * y - anchor * anchor <= y * y);
            }
        }
    }

    #[test]
    fn identity_cut_example() {
        // x̃ = [1, 2]: value 1 has ỹ = 1, ã = 3
        let s = spec(&[1, 1], 3, 0.0);
        let mut m = build_base_model(&s);
        add_identity_bilinear_cuts(&mut m, &lv(&[1, 2])).unwrap();
        let l = m.layout;
        let cut = m.cuts.iter().find(|c| c.value == 1).unwrap();
        assert_eq!(cut.kind, CutKind::BilinearIdentity);
        assert_eq!(cut.row.rhs, 4.5);
        // ã·y_1 through x_0, ã·x_1 − x_1²/2 on block 1
        assert!(cut.row.coeffs.contains(&(l.binary(0, 2), 6.0)));
        assert!(cut.row.coeffs.contains(&(l.binary(1, 2), 6.0 - 2.0)));
        assert!(cut.row.coeffs.contains(&(l.slack_square(1), -0.5)));
        assert!(cut.row.coeffs.contains(&(l.slack_bilinear(1), -1.0)));
        // tight at the anchor with exact slacks
        let v = exact_assignment(&lv(&[1, 2]), &l).unwrap();
        assert!((cut.row.activity(&v) - cut.row.rhs).abs() < 1e-12);

        let mut m = build_base_model(&s);
        add_identity_bilinear_cuts(&mut m, &lv(&[0, 0])).unwrap();
        assert!(m.cuts.is_empty());
    }

    #[test]
    fn duplicate_anchors_are_not_repeated() {
        let s = spec(&[1, 1, 1], 3, 0.0);
        let mut m = build_base_model(&s);
        add_taylor_cuts(&mut m, &lv(&[1, 1, 0])).unwrap();
        let count = m.cuts.len();
        add_taylor_cuts(&mut m, &lv(&[1, 1, 0])).unwrap();
        assert_eq!(m.cuts.len(), count);
    }

    #[test]
    fn tangent_plane_cut_can_exclude_integer_points() {
        // anchor x̃ = 1, ỹ = 1; point x = 0, y = 2 has xy = 0 but the cut demands z >= 1
        let s = spec(&[1, 1, 1], 3, 0.0);
        let mut m = build_base_model(&s);
        add_tangent_bilinear_cuts(&mut m, &lv(&[1, 1, 0])).unwrap();
        let v = exact_assignment(&lv(&[2, 0, 0]), &m.layout).unwrap();
        let cut = m.cuts.iter().find(|c| c.value == 1).unwrap();
        assert!(cut.row.activity(&v) > cut.row.rhs);
    }

    #[test]
    fn default_cuts_hold_at_exact_slacks() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..300 {
            let theta = rng.gen_range(1..6);
            let len = rng.gen_range(1..8);
            let gen = |rng: &mut rand_chacha::ChaCha8Rng| {
                let mut x = vec![0u32; len];
                for _ in 0..rng.gen_range(0..=theta) {
                    x[rng.gen_range(0..len)] += 1;
                }
                lv(&x)
            };
            let (anchor, point) = (gen(&mut rng), gen(&mut rng));
            let s = spec(&vec![1; len], theta, 0.0);
            let mut m = build_base_model(&s);
            add_square_cuts(&mut m, &anchor).unwrap();
            add_identity_bilinear_cuts(&mut m, &anchor).unwrap();
            let v = exact_assignment(&point, &m.layout).unwrap();
            for cut in &m.cuts {
                assert!(cut.row.activity(&v) <= cut.row.rhs + 1e-9, "{cut:?}");
            }
        }
    }

    #[test]
    fn tangent_plane_loop_is_available() {
        let opts = IterateOptions {
            bilinear: BilinearCut::TangentPlane,
            ..IterateOptions::default()
        };
        let r = iterate_optimize_with(&spec(&[4, 1, 3], 1, 1.0), &opts).unwrap();
        assert!(r.eval.feasible);
        assert!(r.converged);
        // the tangent plane holds the loop at its first iterate here
        assert_eq!(r.x.as_slice(), &[0, 1, 0]);
        assert_eq!(r.eval.distortion, 3.5);
    }

    #[test]
    fn square_cuts_hold_at_exact_slacks() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let theta = rng.gen_range(1..5);
            let len = rng.gen_range(1..8);
            let gen = |rng: &mut rand_chacha::ChaCha8Rng| {
                let mut x = vec![0u32; len];
                for _ in 0..rng.gen_range(0..=theta) {
                    x[rng.gen_range(0..len)] += 1;
                }
                lv(&x)
            };
            let (anchor, point) = (gen(&mut rng), gen(&mut rng));
            let s = spec(&vec![1; len], theta, 0.0);
            let mut m = build_base_model(&s);
            add_taylor_cuts(&mut m, &anchor).unwrap();
            let v = exact_assignment(&point, &m.layout).unwrap();
            for cut in m.cuts.iter().filter(|c| c.kind == CutKind::Square) {
                assert!(cut.row.activity(&v) <= cut.row.rhs + 1e-9);
            }
        }
    }

    #[test]
    fn capacity_row_reproduces_capacity() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let len = rng.gen_range(1..10);
            let theta = rng.gen_range(1..5);
            let a: Vec<u64> = (0..len).map(|_| rng.gen_range(0..1000)).collect();
            let x = lv(&(0..len).map(|_| rng.gen_range(0..=theta)).collect::<Vec<_>>());
            let s = spec(&a, theta, 0.0);
            let m = build_base_model(&s);
            let v = exact_assignment(&x, &m.layout).unwrap();
            let want = capacity(&s.histogram, &x).unwrap();
            assert!((m.capacity_at(&v) - want).abs() <= 1e-9 * (1.0 + want));
        }
    }

    #[test]
    fn objective_at_exact_slacks_is_distortion() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let len = rng.gen_range(1..10);
            let theta = rng.gen_range(1..5);
            let a: Vec<u64> = (0..len).map(|_| rng.gen_range(0..1000)).collect();
            let x = lv(&(0..len).map(|_| rng.gen_range(0..=theta)).collect::<Vec<_>>());
            let s = spec(&a, theta, 0.0);
            let m = build_base_model(&s);
            let v = exact_assignment(&x, &m.layout).unwrap();
            // rational check: 6·objective is an integer sum
            let six_obj: f64 = m.objective.iter().zip(&v).map(|(c, x)| 6.0 * c * x).sum();
            let want = distortion_sixths(&s.histogram, &x).unwrap();
            assert_eq!(six_obj.round() as u128, want);
            assert!((six_obj - want as f64).abs() < 1e-6);
        }
    }

    #[test]
    fn iterate_worked_example() {
        let r = iterate_optimize(&spec(&[4, 1, 3], 1, 1.0)).unwrap();
        assert_eq!(r.x.as_slice(), &[0, 0, 1]);
        assert_eq!(r.eval.distortion, 1.5);
        assert!(r.converged);
    }

    #[test]
    fn iterate_zero_payload_single_iteration() {
        let r = iterate_optimize(&spec(&[4, 1, 3, 2], 3, 0.0)).unwrap();
        assert!(r.x.is_zero());
        assert_eq!(r.iterations, 1);
        assert_eq!(r.trace.len(), 1);
    }

    #[test]
    fn iterate_infeasible() {
        assert!(matches!(
            iterate_optimize(&spec(&[4, 1, 3], 1, 5.0)),
            Err(Error::Infeasible { max_capacity, .. }) if max_capacity == 4.0
        ));
    }

    #[test]
    fn iterate_rejects_zero_budget() {
        let opts = IterateOptions {
            max_iter: 0,
            ..IterateOptions::default()
        };
        assert!(iterate_optimize_with(&spec(&[1], 1, 0.0), &opts).is_err());
    }

    #[test]
    fn iteration_limit_is_flagged() {
        let s = spec(&[50, 80, 40, 20, 10, 5], 3, 100.0);
        let opts = IterateOptions {
            max_iter: 1,
            ..IterateOptions::default()
        };
        let r = iterate_optimize_with(&s, &opts).unwrap();
        assert_eq!(r.iterations, 1);
        if !r.converged {
            assert!(r.eval.feasible);
        }
    }

    #[test]
    fn fixed_point_is_stable() {
        let s = spec(&[30, 52, 31, 14, 6, 2, 1, 0, 0, 0], 3, 60.0);
        let r = iterate_optimize(&s).unwrap();
        assert!(r.converged);
        // re-anchoring at the returned point reproduces it
        let mut m = build_base_model(&s);
        add_taylor_cuts(&mut m, &r.x).unwrap();
        let sol = crate::solver::solve_milp(&m.to_problem());
        let again = decode_onehot(&sol.values, &m.layout).unwrap();
        let e = evaluate(&s, &again).unwrap();
        assert!(e.distortion >= r.eval.distortion - 1e-9 || again == r.x);
    }

    #[test]
    fn iterate_matches_brute_on_small_instances() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let mut agree = 0;
        let total = 30;
        for _ in 0..total {
            let len = rng.gen_range(2..7);
            let theta = rng.gen_range(1..=3);
            let a: Vec<u64> = (0..len).map(|_| rng.gen_range(0..60)).collect();
            let base = spec(&a, theta, 0.0);
            let payload = crate::brute::max_capacity(&base) * 0.5;
            let s = base.with_payload(payload);
            let r = iterate_optimize(&s).unwrap();
            let b = brute_force_optimize(&s).unwrap();
            assert!(r.eval.feasible && r.x.respects_quota(theta));
            assert!(r.eval.distortion_sixths >= b.eval.distortion_sixths);
            if r.eval.distortion_sixths == b.eval.distortion_sixths {
                agree += 1;
            }
        }
        assert_eq!(agree, total);
    }
}
