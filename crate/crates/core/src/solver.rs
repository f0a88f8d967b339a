//! Small dense MILP backend: bounded-variable two-phase primal simplex for
//! the relaxations and best-first branch-and-bound over the integer columns.
//!
//! Every variable must carry finite bounds. Problems built by
//! [`crate::milp`] have at most a few hundred columns, so the tableau is kept
//! dense and rebuilt from scratch at every node.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use serde::Serialize;

/// Sparse row `Σ coeffs[k].1 · v[coeffs[k].0]` compared against `rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearRow {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl LinearRow {
    pub fn new(coeffs: Vec<(usize, f64)>, rhs: f64) -> Self {
        Self { coeffs, rhs }
    }

    pub fn activity(&self, v: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * v[j]).sum()
    }
}

/// `min c·v  s.t.  A v <= b,  E v = d,  lo <= v <= hi`, with an integrality
/// mask.
#[derive(Clone, Debug, PartialEq)]
pub struct MilpProblem {
    pub objective: Vec<f64>,
    pub inequalities: Vec<LinearRow>,
    pub equalities: Vec<LinearRow>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub integer: Vec<bool>,
}

impl MilpProblem {
    /// `num_vars` continuous variables in `[0, 1]` with zero cost.
    pub fn new(num_vars: usize) -> Self {
        Self {
            objective: vec![0.0; num_vars],
            inequalities: Vec::new(),
            equalities: Vec::new(),
            lower: vec![0.0; num_vars],
            upper: vec![1.0; num_vars],
            integer: vec![false; num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn objective_value(&self, v: &[f64]) -> f64 {
        self.objective.iter().zip(v).map(|(c, x)| c * x).sum()
    }

    /// Largest violation of any row or bound at `v`.
    pub fn max_violation(&self, v: &[f64]) -> f64 {
        let rows = self
            .inequalities
            .iter()
            .map(|r| (r.activity(v) - r.rhs).max(0.0))
            .chain(self.equalities.iter().map(|r| (r.activity(v) - r.rhs).abs()));
        let bounds = v
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&x, (&l, &u))| (l - x).max(x - u).max(0.0));
        rows.chain(bounds).fold(0.0, f64::max)
    }

    fn validate(&self) -> Result<(), String> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n || self.integer.len() != n {
            return Err("bound or integrality vector length differs from the objective".into());
        }
        for row in self.inequalities.iter().chain(&self.equalities) {
            if let Some(&(j, _)) = row.coeffs.iter().find(|&&(j, _)| j >= n) {
                return Err(format!("row references variable {j} of {n}"));
            }
            if !row.rhs.is_finite() {
                return Err("non-finite right-hand side".into());
            }
        }
        for j in 0..n {
            if !self.lower[j].is_finite() || !self.upper[j].is_finite() {
                return Err(format!("variable {j} has an infinite bound"));
            }
        }
        Ok(())
    }

    /// Plain-text dump in CPLEX LP style, for cross-checking with external
    /// solvers.
    pub fn to_lp_string(&self) -> String {
        fn terms(coeffs: &[(usize, f64)]) -> String {
            if coeffs.is_empty() {
                return "0 v0".into();
            }
            let mut s = String::new();
            for (k, &(j, a)) in coeffs.iter().enumerate() {
                let sign = match (k, a < 0.0) {
                    (0, true) => "-",
                    (0, false) => "",
                    (_, true) => " - ",
                    (_, false) => " + ",
                };
                let _ = write!(s, "{sign}{} v{j}", fmt_num(a.abs()));
            }
            s
        }
        let mut out = String::from("Minimize\n obj: ");
        let obj: Vec<(usize, f64)> = self
            .objective
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(j, &c)| (j, c))
            .collect();
        out.push_str(&terms(&obj));
        out.push_str("\nSubject To\n");
        for (i, r) in self.inequalities.iter().enumerate() {
            let _ = writeln!(out, " c{i}: {} <= {}", terms(&r.coeffs), fmt_num(r.rhs));
        }
        for (i, r) in self.equalities.iter().enumerate() {
            let _ = writeln!(out, " e{i}: {} = {}", terms(&r.coeffs), fmt_num(r.rhs));
        }
        out.push_str("Bounds\n");
        for j in 0..self.num_vars() {
            let _ = writeln!(out, " {} <= v{j} <= {}", fmt_num(self.lower[j]), fmt_num(self.upper[j]));
        }
        let ints: Vec<String> = (0..self.num_vars())
            .filter(|&j| self.integer[j])
            .map(|j| format!("v{j}"))
            .collect();
        if !ints.is_empty() {
            let _ = writeln!(out, "Generals\n {}", ints.join(" "));
        }
        out.push_str("End\n");
        out
    }
}

fn fmt_num(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MilpSolution {
    pub status: SolveStatus,
    /// Empty unless a (possibly incumbent) solution exists.
    pub values: Vec<f64>,
    pub objective: f64,
    pub stats: SearchStats,
}

/// Branch-and-bound bookkeeping.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SearchStats {
    /// Nodes taken off the queue and branched or fathomed, root included.
    pub nodes_explored: usize,
    /// Number of branching operations.
    pub branchings: usize,
    /// Total simplex pivots over all relaxations.
    pub pivots: usize,
    /// Relaxation bound of every explored node, paired with its parent's.
    pub node_bounds: Vec<(f64, Option<f64>)>,
    pub diagnostics: Option<String>,
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub feasibility_tol: f64,
    pub integrality_tol: f64,
    pub max_nodes: usize,
    /// Switch from Dantzig pricing to Bland's rule after this many pivots.
    pub bland_after: usize,
    pub max_pivots: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-7,
            integrality_tol: 1e-6,
            max_nodes: 1_000_000,
            bland_after: 5000,
            max_pivots: 200_000,
        }
    }
}

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;

enum LpOutcome {
    Optimal { values: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
    Stalled(String),
}

struct Tableau {
    /// `rows x cols` coefficients of `B^-1 A`.
    t: Vec<Vec<f64>>,
    /// Current values of the basic variables.
    beta: Vec<f64>,
    basis: Vec<usize>,
    /// Range `u_j - l_j` of each column (infinite for slacks and artificials).
    range: Vec<f64>,
    at_upper: Vec<bool>,
    is_basic: Vec<bool>,
    /// Reduced costs.
    d: Vec<f64>,
    /// Columns allowed to enter.
    allowed: Vec<bool>,
    pivots: usize,
}

impl Tableau {
    fn value(&self, j: usize) -> f64 {
        if self.at_upper[j] {
            self.range[j]
        } else {
            0.0
        }
    }

    fn price(&mut self, cost: &[f64]) {
        let cols = self.range.len();
        self.d = cost.to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                let row = &self.t[i];
                for j in 0..cols {
                    self.d[j] -= cb * row[j];
                }
            }
        }
        for &b in &self.basis {
            self.d[b] = 0.0;
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let p = self.t[r][j];
        let cols = self.range.len();
        {
            let row = &mut self.t[r];
            for v in row.iter_mut() {
                *v /= p;
            }
            row[j] = 1.0;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[j];
            if f != 0.0 {
                for k in 0..cols {
                    row[k] -= f * pivot_row[k];
                }
                row[j] = 0.0;
            }
        }
        let f = self.d[j];
        if f != 0.0 {
            for k in 0..cols {
                self.d[k] -= f * pivot_row[k];
            }
            self.d[j] = 0.0;
        }
        let leaving = self.basis[r];
        self.is_basic[leaving] = false;
        self.is_basic[j] = true;
        self.basis[r] = j;
        self.pivots += 1;
    }

    /// Runs primal simplex iterations on the current reduced costs.
    fn optimize(&mut self, opts: &SolverOptions) -> Result<(), LpOutcome> {
        let cols = self.range.len();
        let start = self.pivots;
        loop {
            let iters = self.pivots - start;
            if iters > opts.max_pivots {
                return Err(LpOutcome::Stalled(format!("pivot limit {} reached", opts.max_pivots)));
            }
            let bland = iters >= opts.bland_after;

            let mut entering = None;
            let mut best = 0.0;
            for j in 0..cols {
                if self.is_basic[j] || !self.allowed[j] {
                    continue;
                }
                let dj = self.d[j];
                let gain = if self.at_upper[j] { dj } else { -dj };
                if gain > COST_TOL && self.range[j] > 0.0 {
                    if bland {
                        entering = Some(j);
                        break;
                    }
                    if gain > best {
                        best = gain;
                        entering = Some(j);
                    }
                }
            }
            let Some(j) = entering else { return Ok(()) };
            let sigma = if self.at_upper[j] { -1.0 } else { 1.0 };

            let mut theta = self.range[j];
            let mut leave: Option<(usize, bool)> = None;
            let mut leave_alpha = 0.0f64;
            for i in 0..self.t.len() {
                let alpha = sigma * self.t[i][j];
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                let b = self.basis[i];
                let (ratio, to_upper) = if alpha > 0.0 {
                    (self.beta[i].max(0.0) / alpha, false)
                } else if self.range[b].is_finite() {
                    ((self.range[b] - self.beta[i]).max(0.0) / -alpha, true)
                } else {
                    continue;
                };
                let tie = (ratio - theta).abs() <= 1e-12;
                let take = if ratio < theta - 1e-12 {
                    true
                } else if tie {
                    match leave {
                        None => true,
                        Some((li, _)) if bland => b < self.basis[li],
                        Some(_) => alpha.abs() > leave_alpha.abs(),
                    }
                } else {
                    false
                };
                if take {
                    theta = theta.min(ratio);
                    leave = Some((i, to_upper));
                    leave_alpha = alpha;
                }
            }
            if !theta.is_finite() {
                return Err(LpOutcome::Unbounded);
            }

            for i in 0..self.t.len() {
                let alpha = sigma * self.t[i][j];
                if alpha != 0.0 {
                    self.beta[i] -= alpha * theta;
                }
            }
            match leave {
                None => {
                    // bound flip
                    self.at_upper[j] = !self.at_upper[j];
                    self.pivots += 1;
                }
                Some((r, to_upper)) => {
                    let entering_value = self.value(j) + sigma * theta;
                    let leaving = self.basis[r];
                    self.pivot(r, j);
                    self.at_upper[leaving] = to_upper;
                    self.at_upper[j] = false;
                    self.beta[r] = entering_value;
                }
            }
            for v in self.beta.iter_mut() {
                if v.abs() < 1e-12 {
                    *v = 0.0;
                }
            }
        }
    }
}

/// Solves the relaxation of `problem` with the column bounds replaced by
/// `lower`/`upper`.
fn solve_relaxation(problem: &MilpProblem, lower: &[f64], upper: &[f64], opts: &SolverOptions) -> (LpOutcome, usize) {
    let n = problem.num_vars();
    for j in 0..n {
        if lower[j] > upper[j] + opts.feasibility_tol {
            return (LpOutcome::Infeasible, 0);
        }
    }
    let m_ineq = problem.inequalities.len();
    let rows: Vec<(&LinearRow, bool)> = problem
        .inequalities
        .iter()
        .map(|r| (r, true))
        .chain(problem.equalities.iter().map(|r| (r, false)))
        .collect();
    let m = rows.len();

    // columns: structural | slacks | artificials
    let mut dense = vec![vec![0.0; n + m_ineq]; m];
    let mut rhs = vec![0.0; m];
    for (i, (row, is_ineq)) in rows.iter().enumerate() {
        let mut b = row.rhs;
        for &(j, a) in &row.coeffs {
            dense[i][j] += a;
            b -= a * lower[j];
        }
        if *is_ineq {
            dense[i][n + i] = 1.0;
        }
        if b < 0.0 {
            for v in dense[i].iter_mut() {
                *v = -*v;
            }
            b = -b;
        }
        rhs[i] = b;
    }
    let mut basis = vec![usize::MAX; m];
    let mut artificial_rows = Vec::new();
    for i in 0..m {
        if i < m_ineq && dense[i][n + i] > 0.0 {
            basis[i] = n + i;
        } else {
            artificial_rows.push(i);
        }
    }
    let n_art = artificial_rows.len();
    let cols = n + m_ineq + n_art;
    let mut t = dense;
    for row in t.iter_mut() {
        row.resize(cols, 0.0);
    }
    for (k, &i) in artificial_rows.iter().enumerate() {
        t[i][n + m_ineq + k] = 1.0;
        basis[i] = n + m_ineq + k;
    }
    let mut range = vec![f64::INFINITY; cols];
    for j in 0..n {
        range[j] = (upper[j] - lower[j]).max(0.0);
    }
    let mut is_basic = vec![false; cols];
    for &b in &basis {
        is_basic[b] = true;
    }
    let mut tab = Tableau {
        t,
        beta: rhs,
        basis,
        range,
        at_upper: vec![false; cols],
        is_basic,
        d: Vec::new(),
        allowed: vec![true; cols],
        pivots: 0,
    };

    if n_art > 0 {
        let mut cost = vec![0.0; cols];
        for c in cost.iter_mut().skip(n + m_ineq) {
            *c = 1.0;
        }
        tab.price(&cost);
        if let Err(e) = tab.optimize(opts) {
            let pivots = tab.pivots;
            return (
                match e {
                    LpOutcome::Unbounded => LpOutcome::Stalled("phase one reported unbounded".into()),
                    other => other,
                },
                pivots,
            );
        }
        let infeas: f64 = tab
            .basis
            .iter()
            .zip(&tab.beta)
            .filter(|(&b, _)| b >= n + m_ineq)
            .map(|(_, &v)| v)
            .sum();
        let scale = 1.0 + tab.beta.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        if infeas > opts.feasibility_tol * scale {
            return (LpOutcome::Infeasible, tab.pivots);
        }
        // drive remaining artificials out of the basis, dropping redundant rows
        let mut r = 0;
        while r < tab.t.len() {
            if tab.basis[r] >= n + m_ineq {
                let col = (0..n + m_ineq)
                    .filter(|&j| !tab.is_basic[j] && tab.t[r][j].abs() > 1e-7)
                    .max_by(|&a, &b| tab.t[r][a].abs().total_cmp(&tab.t[r][b].abs()).then(b.cmp(&a)));
                match col {
                    Some(j) => {
                        let value = tab.value(j);
                        tab.pivot(r, j);
                        tab.beta[r] = value;
                        tab.at_upper[j] = false;
                    }
                    None => {
                        let b = tab.basis[r];
                        tab.is_basic[b] = false;
                        tab.t.remove(r);
                        tab.beta.remove(r);
                        tab.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
        for j in n + m_ineq..cols {
            tab.allowed[j] = false;
            tab.range[j] = 0.0;
            tab.at_upper[j] = false;
        }
    }

    let mut cost = vec![0.0; cols];
    cost[..n].copy_from_slice(&problem.objective);
    tab.price(&cost);
    if let Err(e) = tab.optimize(opts) {
        let pivots = tab.pivots;
        return (e, pivots);
    }

    let mut w = vec![0.0; cols];
    for j in 0..cols {
        if !tab.is_basic[j] {
            w[j] = tab.value(j);
        }
    }
    for (i, &b) in tab.basis.iter().enumerate() {
        w[b] = tab.beta[i];
    }
    let values: Vec<f64> = (0..n)
        .map(|j| (lower[j] + w[j]).clamp(lower[j], upper[j]))
        .collect();
    let objective = problem.objective_value(&values);
    (LpOutcome::Optimal { values, objective }, tab.pivots)
}

/// Solves the continuous relaxation, ignoring the integrality mask.
pub fn solve_lp(problem: &MilpProblem) -> MilpSolution {
    solve_lp_with(problem, &SolverOptions::default())
}

pub fn solve_lp_with(problem: &MilpProblem, opts: &SolverOptions) -> MilpSolution {
    let mut stats = SearchStats::default();
    if let Err(msg) = problem.validate() {
        stats.diagnostics = Some(msg);
        return failed(SolveStatus::IterationLimit, stats);
    }
    let (outcome, pivots) = solve_relaxation(problem, &problem.lower, &problem.upper, opts);
    stats.pivots = pivots;
    match outcome {
        LpOutcome::Optimal { values, objective } => MilpSolution {
            status: SolveStatus::Optimal,
            values,
            objective,
            stats,
        },
        LpOutcome::Infeasible => failed(SolveStatus::Infeasible, stats),
        LpOutcome::Unbounded => failed(SolveStatus::Unbounded, stats),
        LpOutcome::Stalled(msg) => {
            stats.diagnostics = Some(msg);
            failed(SolveStatus::IterationLimit, stats)
        }
    }
}

fn failed(status: SolveStatus, stats: SearchStats) -> MilpSolution {
    MilpSolution {
        status,
        values: Vec::new(),
        objective: f64::INFINITY,
        stats,
    }
}

struct Node {
    bound: f64,
    id: u64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    values: Vec<f64>,
    parent_bound: Option<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // reversed: BinaryHeap pops the smallest bound, then the oldest node
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Branch-and-bound over the integer columns.
pub fn solve_milp(problem: &MilpProblem) -> MilpSolution {
    solve_milp_with(problem, &SolverOptions::default())
}

pub fn solve_milp_with(problem: &MilpProblem, opts: &SolverOptions) -> MilpSolution {
    let mut stats = SearchStats::default();
    if let Err(msg) = problem.validate() {
        stats.diagnostics = Some(msg);
        return failed(SolveStatus::IterationLimit, stats);
    }
    let n = problem.num_vars();
    let mut lower = problem.lower.clone();
    let mut upper = problem.upper.clone();
    for j in 0..n {
        if problem.integer[j] {
            lower[j] = lower[j].ceil();
            upper[j] = upper[j].floor();
        }
    }

    let mut incumbent: Option<(Vec<f64>, f64)> = None;
    let mut heap = BinaryHeap::new();
    let mut next_id = 0u64;

    // returns Err(status) for conditions that end the search
    let mut evaluate = |lower: Vec<f64>,
                        upper: Vec<f64>,
                        parent_bound: Option<f64>,
                        stats: &mut SearchStats,
                        incumbent: &mut Option<(Vec<f64>, f64)>,
                        heap: &mut BinaryHeap<Node>|
     -> Result<(), SolveStatus> {
        let (outcome, pivots) = solve_relaxation(problem, &lower, &upper, opts);
        stats.pivots += pivots;
        match outcome {
            LpOutcome::Infeasible => Ok(()),
            LpOutcome::Unbounded => Err(SolveStatus::Unbounded),
            LpOutcome::Stalled(msg) => {
                stats.diagnostics = Some(msg);
                Err(SolveStatus::IterationLimit)
            }
            LpOutcome::Optimal { values, objective } => {
                if let Some(pb) = parent_bound {
                    debug_assert!(objective >= pb - 1e-6 * (1.0 + pb.abs()), "child bound below parent");
                }
                if let Some((_, inc)) = incumbent {
                    if objective >= *inc - prune_gap(*inc) {
                        return Ok(());
                    }
                }
                heap.push(Node {
                    bound: objective,
                    id: next_id,
                    lower,
                    upper,
                    values,
                    parent_bound,
                });
                next_id += 1;
                Ok(())
            }
        }
    };

    if let Err(status) = evaluate(lower, upper, None, &mut stats, &mut incumbent, &mut heap) {
        return failed(status, stats);
    }

    while let Some(node) = heap.pop() {
        if let Some((_, inc)) = &incumbent {
            if node.bound >= inc - prune_gap(*inc) {
                // best-first: everything left is at least as bad
                heap.clear();
                break;
            }
        }
        if stats.nodes_explored >= opts.max_nodes {
            stats.diagnostics = Some(format!("node limit {} reached", opts.max_nodes));
            return match incumbent {
                Some((values, objective)) => MilpSolution {
                    status: SolveStatus::IterationLimit,
                    values,
                    objective,
                    stats,
                },
                None => failed(SolveStatus::IterationLimit, stats),
            };
        }
        stats.nodes_explored += 1;
        stats.node_bounds.push((node.bound, node.parent_bound));

        // most fractional integer column, lowest index on ties
        let mut branch: Option<(usize, f64)> = None;
        let mut best_frac = opts.integrality_tol;
        for j in 0..n {
            if !problem.integer[j] {
                continue;
            }
            let v = node.values[j];
            let frac = (v - v.floor()).min(v.ceil() - v);
            if frac > best_frac {
                best_frac = frac;
                branch = Some((j, v));
            }
        }

        match branch {
            None => {
                let mut values = node.values;
                for j in 0..n {
                    if problem.integer[j] {
                        values[j] = values[j].round();
                    }
                }
                let objective = problem.objective_value(&values);
                let better = incumbent.as_ref().is_none_or(|(_, inc)| objective < *inc);
                if better {
                    incumbent = Some((values, objective));
                }
            }
            Some((j, v)) => {
                stats.branchings += 1;
                let mut down_upper = node.upper.clone();
                down_upper[j] = v.floor();
                let mut up_lower = node.lower.clone();
                up_lower[j] = v.ceil();
                let children = [(node.lower.clone(), down_upper), (up_lower, node.upper)];
                for (lo, hi) in children {
                    if let Err(status) = evaluate(lo, hi, Some(node.bound), &mut stats, &mut incumbent, &mut heap) {
                        return match incumbent {
                            Some((values, objective)) => MilpSolution {
                                status: SolveStatus::IterationLimit,
                                values,
                                objective,
                                stats,
                            },
                            None => failed(status, stats),
                        };
                    }
                }
            }
        }
    }

    match incumbent {
        Some((values, objective)) => MilpSolution {
            status: SolveStatus::Optimal,
            values,
            objective,
            stats,
        },
        None => failed(SolveStatus::Infeasible, stats),
    }
}

fn prune_gap(incumbent: f64) -> f64 {
    1e-9 * (1.0 + incumbent.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn row(coeffs: &[(usize, f64)], rhs: f64) -> LinearRow {
        LinearRow::new(coeffs.to_vec(), rhs)
    }

    #[test]
    fn lp_single_variable() {
        let mut p = MilpProblem::new(1);
        p.objective = vec![-1.0];
        p.inequalities.push(row(&[(0, 1.0)], 1.0));
        let s = solve_lp(&p);
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.values[0] - 1.0).abs() < 1e-9);
        assert!((s.objective + 1.0).abs() < 1e-9);
    }

    #[test]
    fn lp_covering_row() {
        let mut p = MilpProblem::new(2);
        p.objective = vec![1.0, 1.0];
        p.inequalities.push(row(&[(0, -1.0), (1, -1.0)], -1.0));
        let s = solve_lp(&p);
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lp_infeasible_pair() {
        let mut p = MilpProblem::new(1);
        p.upper = vec![5.0];
        p.inequalities.push(row(&[(0, 1.0)], 0.0));
        p.inequalities.push(row(&[(0, -1.0)], -1.0));
        assert_eq!(solve_lp(&p).status, SolveStatus::Infeasible);
    }

    #[test]
    fn lp_with_equalities_and_shifted_bounds() {
        // min x - y  s.t. x + y = 3, x in [1, 4], y in [-2, 1.5]
        let mut p = MilpProblem::new(2);
        p.objective = vec![1.0, -1.0];
        p.lower = vec![1.0, -2.0];
        p.upper = vec![4.0, 1.5];
        p.equalities.push(row(&[(0, 1.0), (1, 1.0)], 3.0));
        let s = solve_lp(&p);
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.values[0] - 1.5).abs() < 1e-9 && (s.values[1] - 1.5).abs() < 1e-9);
        assert!(p.max_violation(&s.values) < 1e-9);
    }

    #[test]
    fn lp_redundant_equalities() {
        let mut p = MilpProblem::new(2);
        p.objective = vec![1.0, 2.0];
        p.equalities.push(row(&[(0, 1.0), (1, 1.0)], 1.0));
        p.equalities.push(row(&[(0, 2.0), (1, 2.0)], 2.0));
        let s = solve_lp(&p);
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lp_rejects_infinite_bounds() {
        let mut p = MilpProblem::new(1);
        p.upper = vec![f64::INFINITY];
        let s = solve_lp(&p);
        assert_eq!(s.status, SolveStatus::IterationLimit);
        assert!(s.stats.diagnostics.is_some());
    }

    #[test]
    fn milp_totally_unimodular_needs_no_branching() {
        // assignment problem, 3x3
        let cost = [[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]];
        let mut p = MilpProblem::new(9);
        for i in 0..3 {
            for j in 0..3 {
                p.objective[3 * i + j] = cost[i][j];
                p.integer[3 * i + j] = true;
            }
            p.equalities.push(row(&[(3 * i, 1.0), (3 * i + 1, 1.0), (3 * i + 2, 1.0)], 1.0));
            p.equalities.push(row(&[(i, 1.0), (3 + i, 1.0), (6 + i, 1.0)], 1.0));
        }
        let s = solve_milp(&p);
        assert_eq!(s.status, SolveStatus::Optimal);
        assert_eq!(s.objective, 5.0);
        assert_eq!(s.stats.branchings, 0);
    }

    #[test]
    fn milp_infeasible_onehot() {
        let mut p = MilpProblem::new(2);
        p.integer = vec![true, true];
        p.equalities.push(row(&[(0, 1.0), (1, 1.0)], 1.0));
        p.equalities.push(row(&[(0, 1.0), (1, 1.0)], 0.0));
        assert_eq!(solve_milp(&p).status, SolveStatus::Infeasible);
    }

    fn knapsack_oracle(values: &[f64], weights: &[f64], cap: f64) -> f64 {
        let k = values.len();
        (0u32..1 << k)
            .filter(|m| (0..k).filter(|&i| m >> i & 1 == 1).map(|i| weights[i]).sum::<f64>() <= cap)
            .map(|m| -(0..k).filter(|&i| m >> i & 1 == 1).map(|i| values[i]).sum::<f64>())
            .fold(0.0, f64::min)
    }

    #[test]
    fn milp_knapsack_matches_enumeration() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let values: Vec<f64> = (0..12).map(|_| rng.gen_range(1..40) as f64).collect();
            let weights: Vec<f64> = (0..12).map(|_| rng.gen_range(1..30) as f64).collect();
            let cap = weights.iter().sum::<f64>() * 0.4;
            let mut p = MilpProblem::new(12);
            p.objective = values.iter().map(|v| -v).collect();
            p.integer = vec![true; 12];
            p.inequalities.push(LinearRow::new(weights.iter().copied().enumerate().collect(), cap));
            let s = solve_milp(&p);
            assert_eq!(s.status, SolveStatus::Optimal);
            assert_eq!(s.objective, knapsack_oracle(&values, &weights, cap));
            assert!(p.max_violation(&s.values) < 1e-7);
            for (b, _) in &s.stats.node_bounds {
                assert!(*b <= s.objective + 1e-7);
            }
        }
    }

    #[test]
    fn milp_node_limit_returns_incumbent_flag() {
        let mut p = MilpProblem::new(6);
        p.objective = vec![-3.0, -4.0, -5.0, -6.0, -7.0, -8.0];
        p.integer = vec![true; 6];
        p.inequalities.push(LinearRow::new(
            vec![(0, 2.5), (1, 3.5), (2, 4.5), (3, 5.5), (4, 6.5), (5, 7.5)],
            14.0,
        ));
        let opts = SolverOptions {
            max_nodes: 1,
            ..SolverOptions::default()
        };
        let s = solve_milp_with(&p, &opts);
        assert_eq!(s.status, SolveStatus::IterationLimit);
    }

    #[test]
    fn deterministic_solutions() {
        let mut p = MilpProblem::new(4);
        p.objective = vec![-1.0, -1.0, -1.0, -1.0];
        p.integer = vec![true; 4];
        p.inequalities.push(row(&[(0, 1.0), (1, 1.0), (2, 1.0), (3, 1.0)], 2.5));
        let a = solve_milp(&p);
        let b = solve_milp(&p);
        assert_eq!(a.values, b.values);
        assert_eq!(a.objective, -2.0);
    }

    #[test]
    fn lp_dump_format() {
        let mut p = MilpProblem::new(2);
        p.objective = vec![1.0, -0.5];
        p.integer = vec![true, false];
        p.inequalities.push(row(&[(0, 1.0), (1, -2.0)], 3.0));
        p.equalities.push(row(&[(1, 1.0)], 1.0));
        let s = p.to_lp_string();
        assert_eq!(
            s,
            "Minimize\n obj: 1 v0 - 0.5 v1\nSubject To\n c0: 1 v0 - 2 v1 <= 3\n e0: 1 v1 = 1\nBounds\n 0 <= v0 <= 1\n 0 <= v1 <= 1\nGenerals\n v0\nEnd\n"
        );
    }
}
