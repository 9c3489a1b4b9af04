//! Deterministic two-phase primal simplex over exact rationals (or `f64`
//! with tolerances), with dual values read off the final tableau and an
//! independent verifier for primal/dual feasibility, complementary
//! slackness, and the duality gap.
//!
//! Bland's smallest-index rule is used for both the entering and the leaving
//! choice, so the highly degenerate transport programs terminate without
//! cycling and identical input always produces the identical basis sequence.

use thiserror::Error;

use crate::scalar::{RefOps, Scalar};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LpError {
    #[error("iteration limit exceeded ({0} pivots)")]
    IterationLimit(u64),
    #[error("duplicate label: {0}")]
    DuplicateLabel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Eq,
    Le,
}

#[derive(Debug, Clone)]
struct Row<S> {
    label: String,
    relation: Relation,
    rhs: S,
}

#[derive(Debug, Clone)]
struct Variable<S> {
    label: String,
    objective: S,
    free: bool,
    /// Sparse column: (row index, coefficient), one entry per row.
    column: Vec<(usize, S)>,
}

/// A maximization program over variables with lower bound zero (or free),
/// equality and `<=` rows. Labels carry the semantics of the caller
/// (marginal rows, martingale rows, pair columns) and must be unique.
#[derive(Debug, Clone)]
pub struct LinearProgram<S> {
    rows: Vec<Row<S>>,
    vars: Vec<Variable<S>>,
}

impl<S: Scalar> LinearProgram<S>
where
    for<'a> &'a S: RefOps<S>,
{
    pub fn new() -> Self {
        Self { rows: Vec::new(), vars: Vec::new() }
    }

    pub fn add_row(&mut self, label: impl Into<String>, relation: Relation, rhs: S) -> usize {
        self.rows.push(Row { label: label.into(), relation, rhs });
        self.rows.len() - 1
    }

    /// Adds a variable with its full sparse column. Duplicate row entries are
    /// summed.
    pub fn add_var(
        &mut self,
        label: impl Into<String>,
        objective: S,
        free: bool,
        column: Vec<(usize, S)>,
    ) -> usize {
        let mut merged: Vec<(usize, S)> = Vec::with_capacity(column.len());
        let mut column = column;
        column.sort_by_key(|(r, _)| *r);
        for (r, c) in column {
            debug_assert!(r < self.rows.len(), "column entry references unknown row");
            match merged.last_mut() {
                Some((pr, pc)) if *pr == r => *pc = pc.clone() + c,
                _ => merged.push((r, c)),
            }
        }
        self.vars.push(Variable { label: label.into(), objective, free, column: merged });
        self.vars.len() - 1
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn row_label(&self, i: usize) -> &str {
        &self.rows[i].label
    }

    pub fn var_label(&self, j: usize) -> &str {
        &self.vars[j].label
    }

    pub fn objective_coeff(&self, j: usize) -> &S {
        &self.vars[j].objective
    }

    fn check_labels(&self) -> Result<(), LpError> {
        let mut seen = std::collections::HashSet::new();
        for r in &self.rows {
            if !seen.insert(format!("row:{}", r.label)) {
                return Err(LpError::DuplicateLabel(r.label.clone()));
            }
        }
        for v in &self.vars {
            if !seen.insert(format!("var:{}", v.label)) {
                return Err(LpError::DuplicateLabel(v.label.clone()));
            }
        }
        Ok(())
    }
}

impl<S: Scalar> Default for LinearProgram<S>
where
    for<'a> &'a S: RefOps<S>,
{
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution<S> {
    pub status: LpStatus,
    /// One value per variable of the input program (free splits recombined).
    pub primal: Vec<S>,
    /// One dual value per row, in the sign convention of the original rows:
    /// `<=` rows have nonnegative duals at optimality, equality rows are free.
    pub dual: Vec<S>,
    pub objective: S,
    /// Rows whose phase-1 artificial could not be driven out: linearly
    /// dependent (redundant) constraints.
    pub redundant_rows: Vec<usize>,
    pub iterations: u64,
}

/// Internal dense simplex state in standard equality form.
struct Tableau<S> {
    /// `m` constraint rows, each of length `total_cols + 1` (rhs last).
    rows: Vec<Vec<S>>,
    /// Phase-1 reduced-cost row (same length).
    cost1: Vec<S>,
    /// Phase-2 reduced-cost row.
    cost2: Vec<S>,
    /// Basis column per row.
    basis: Vec<usize>,
    /// Columns `0..n_struct` are structural+slack; `n_struct..total` artificial.
    n_struct: usize,
    total_cols: usize,
}

impl<S: Scalar> Tableau<S>
where
    for<'a> &'a S: RefOps<S>,
{
    fn pivot(&mut self, row: usize, col: usize) {
        let pivot_val = self.rows[row][col].clone();
        let inv = &S::one() / &pivot_val;
        for v in self.rows[row].iter_mut() {
            if !v.is_zero() {
                *v = &*v * &inv;
            }
        }
        let nonzero_cols: Vec<usize> = (0..=self.total_cols)
            .filter(|&j| !self.rows[row][j].is_zero())
            .collect();
        let pivot_row = std::mem::take(&mut self.rows[row]);
        for i in 0..self.rows.len() {
            if i == row {
                continue;
            }
            let factor = self.rows[i][col].clone();
            if factor.is_zero() {
                continue;
            }
            for &j in &nonzero_cols {
                let delta = &factor * &pivot_row[j];
                self.rows[i][j] = &self.rows[i][j] - &delta;
            }
            self.rows[i][col] = S::zero();
        }
        for cost in [&mut self.cost1, &mut self.cost2] {
            let factor = cost[col].clone();
            if !factor.is_zero() {
                for &j in &nonzero_cols {
                    let delta = &factor * &pivot_row[j];
                    cost[j] = &cost[j] - &delta;
                }
                cost[col] = S::zero();
            }
        }
        self.rows[row] = pivot_row;
        self.basis[row] = col;
    }

    /// Entering column with positive reduced cost. Dantzig pricing picks the
    /// most positive entry (ties by smallest index); Bland pricing picks the
    /// smallest qualifying index.
    fn entering(&self, phase1: bool, allow_artificial: bool, bland: bool) -> Option<usize> {
        let cost = if phase1 { &self.cost1 } else { &self.cost2 };
        let limit = if allow_artificial { self.total_cols } else { self.n_struct };
        if bland {
            return (0..limit).find(|&j| cost[j] > S::feas_tol());
        }
        let mut best: Option<usize> = None;
        for j in 0..limit {
            if cost[j] > S::feas_tol() && best.is_none_or(|b| cost[j] > cost[b]) {
                best = Some(j);
            }
        }
        best
    }

    /// Leaving row by the minimum-ratio test, ties by smallest basis
    /// variable index (Bland-compatible).
    fn leaving(&self, col: usize) -> Option<usize> {
        let mut best: Option<(usize, S)> = None;
        for i in 0..self.rows.len() {
            let a = &self.rows[i][col];
            if *a <= S::feas_tol() {
                continue;
            }
            let ratio = &self.rows[i][self.total_cols] / a;
            best = match best {
                None => Some((i, ratio)),
                Some((bi, br)) => {
                    if ratio < br || (ratio == br && self.basis[i] < self.basis[bi]) {
                        Some((i, ratio))
                    } else {
                        Some((bi, br))
                    }
                }
            };
        }
        best.map(|(i, _)| i)
    }

    fn objective_entry(&self, phase1: bool) -> S {
        if phase1 {
            self.cost1[self.total_cols].clone()
        } else {
            self.cost2[self.total_cols].clone()
        }
    }
}

/// Outcome of one simplex phase.
enum PhaseEnd {
    Converged,
    Unbounded,
}

/// Runs one phase to optimality with Dantzig pricing, falling back to
/// Bland's rule after a long degenerate stall so cycling is impossible, and
/// returning to Dantzig as soon as the objective strictly improves.
fn run_phase<S: Scalar>(
    tableau: &mut Tableau<S>,
    phase1: bool,
    allow_artificial: bool,
    iterations: &mut u64,
    iteration_limit: u64,
) -> Result<PhaseEnd, LpError>
where
    for<'a> &'a S: RefOps<S>,
{
    let stall_limit = (tableau.rows.len() as u64) + 16;
    let mut stalled: u64 = 0;
    let mut bland = false;
    loop {
        let Some(col) = tableau.entering(phase1, allow_artificial, bland) else {
            return Ok(PhaseEnd::Converged);
        };
        let Some(row) = tableau.leaving(col) else {
            return Ok(PhaseEnd::Unbounded);
        };
        let before = tableau.objective_entry(phase1);
        tableau.pivot(row, col);
        *iterations += 1;
        if *iterations > iteration_limit {
            return Err(LpError::IterationLimit(*iterations));
        }
        if tableau.objective_entry(phase1) == before {
            stalled += 1;
            if stalled > stall_limit {
                bland = true;
            }
        } else {
            stalled = 0;
            bland = false;
        }
    }
}

/// One internal column of the standard form: a signed half of an original
/// variable (free variables split into `x+ - x-`).
struct InternalCol {
    var: usize,
    sign: i8,
}

/// The program in standard equality form (`A x = b`, `x >= 0`): split
/// structural columns, slacks, and one artificial per row, with rows scaled
/// to integral data and nonnegative right-hand sides.
struct StandardForm<S> {
    m: usize,
    n_struct: usize,
    total_cols: usize,
    internal: Vec<InternalCol>,
    /// Sparse structural+slack columns after scaling, one per index
    /// `0..n_struct`; artificial `i` is implicitly `e_i`.
    columns: Vec<Vec<(usize, S)>>,
    /// Objective per structural column (split signs applied; slacks zero).
    objective: Vec<S>,
    /// Scaled, sign-normalized right-hand side.
    rhs: Vec<S>,
    /// Per-row factor combining the integral prescale and the sign flip;
    /// original duals are `signed_scale[i] * tableau dual`.
    signed_scale: Vec<S>,
}

fn build_standard_form<S: Scalar>(lp: &LinearProgram<S>) -> StandardForm<S>
where
    for<'a> &'a S: RefOps<S>,
{
    let m = lp.rows.len();
    let mut internal: Vec<InternalCol> = Vec::new();
    for (j, v) in lp.vars.iter().enumerate() {
        internal.push(InternalCol { var: j, sign: 1 });
        if v.free {
            internal.push(InternalCol { var: j, sign: -1 });
        }
    }
    let n_slack = lp.rows.iter().filter(|r| r.relation == Relation::Le).count();
    let n_struct = internal.len() + n_slack;
    let total_cols = n_struct + m;

    // row-wise integral prescaling: multiplying a row by a positive factor
    // changes neither the feasible set nor the primal values, and it keeps
    // exact-mode tableau entries small; duals are unscaled on extraction
    let row_scale: Vec<S> = (0..m)
        .map(|i| {
            let coeffs = lp
                .vars
                .iter()
                .flat_map(|v| v.column.iter())
                .filter(|(r, _)| *r == i)
                .map(|(_, c)| c);
            S::integral_scale(coeffs.chain(std::iter::once(&lp.rows[i].rhs)))
        })
        .collect();
    let sigma: Vec<bool> = lp.rows.iter().map(|r| r.rhs < S::zero()).collect();
    let signed_scale: Vec<S> = row_scale
        .iter()
        .zip(&sigma)
        .map(|(s, flip)| if *flip { -s.clone() } else { s.clone() })
        .collect();

    let mut columns: Vec<Vec<(usize, S)>> = Vec::with_capacity(n_struct);
    let mut objective = Vec::with_capacity(n_struct);
    for col in &internal {
        let v = &lp.vars[col.var];
        let entries = v
            .column
            .iter()
            .map(|(r, c)| {
                let coeff = if col.sign > 0 { c.clone() } else { -c.clone() };
                (*r, &coeff * &signed_scale[*r])
            })
            .collect();
        columns.push(entries);
        objective.push(if col.sign > 0 {
            v.objective.clone()
        } else {
            -v.objective.clone()
        });
    }
    for (i, r) in lp.rows.iter().enumerate() {
        if r.relation == Relation::Le {
            columns.push(vec![(i, signed_scale[i].clone())]);
            objective.push(S::zero());
        }
    }
    let rhs: Vec<S> = lp
        .rows
        .iter()
        .zip(&signed_scale)
        .map(|(r, s)| &r.rhs * s)
        .collect();

    StandardForm { m, n_struct, total_cols, internal, columns, objective, rhs, signed_scale }
}

impl<S: Scalar> StandardForm<S>
where
    for<'a> &'a S: RefOps<S>,
{
    /// Recombines internal column values into original variable values.
    fn recombine(&self, internal_values: &[S], num_vars: usize) -> Vec<S> {
        let mut primal = vec![S::zero(); num_vars];
        for (k, col) in self.internal.iter().enumerate() {
            let v = &internal_values[k];
            if col.sign > 0 {
                primal[col.var] = &primal[col.var] + v;
            } else {
                primal[col.var] = &primal[col.var] - v;
            }
        }
        primal
    }

    /// Dense column `j` of the standard form (artificials included).
    fn dense_column(&self, j: usize) -> Vec<S> {
        let mut col = vec![S::zero(); self.m];
        if j < self.n_struct {
            for (r, c) in &self.columns[j] {
                col[*r] = &col[*r] + c;
            }
        } else {
            col[j - self.n_struct] = S::one();
        }
        col
    }
}

/// Classic two-phase dense-tableau simplex; also returns the final basis.
fn solve_classic<S: Scalar>(
    lp: &LinearProgram<S>,
    form: &StandardForm<S>,
) -> Result<(LpSolution<S>, Vec<usize>), LpError>
where
    for<'a> &'a S: RefOps<S>,
{
    let m = form.m;
    let n_struct = form.n_struct;
    let total_cols = form.total_cols;

    let mut rows: Vec<Vec<S>> = vec![vec![S::zero(); total_cols + 1]; m];
    for (j, column) in form.columns.iter().enumerate() {
        for (r, c) in column {
            rows[*r][j] = &rows[*r][j] + c;
        }
    }
    for i in 0..m {
        rows[i][n_struct + i] = S::one();
        rows[i][total_cols] = form.rhs[i].clone();
    }

    // phase-1 reduced costs relative to the all-artificial basis:
    // maximize -sum(artificials) => r_j = sum_i a_ij for structural columns
    let mut cost1 = vec![S::zero(); total_cols + 1];
    for j in 0..n_struct {
        for row in rows.iter() {
            cost1[j] = &cost1[j] + &row[j];
        }
    }
    for row in rows.iter() {
        cost1[total_cols] = &cost1[total_cols] + &row[total_cols];
    }
    // phase-2 reduced costs relative to the same basis (artificial cost 0)
    let mut cost2 = vec![S::zero(); total_cols + 1];
    cost2[..n_struct].clone_from_slice(&form.objective);

    let mut tableau = Tableau {
        rows,
        cost1,
        cost2,
        basis: (n_struct..total_cols).collect(),
        n_struct,
        total_cols,
    };

    let shift = (m + total_cols).min(62) as u32;
    let iteration_limit: u64 = 1u64.checked_shl(shift).unwrap_or(u64::MAX);
    let mut iterations: u64 = 0;

    // phase 1; its objective is bounded above by 0, so an unbounded outcome
    // can only come from inconsistent float tolerances
    match run_phase(&mut tableau, true, true, &mut iterations, iteration_limit)? {
        PhaseEnd::Converged => {}
        PhaseEnd::Unbounded => {
            return Ok((infeasible_solution(lp, iterations), tableau.basis));
        }
    }
    // phase-1 optimum: the cost1 rhs entry holds -(current objective)
    let phase1_value = -tableau.objective_entry(true);
    if phase1_value.abs() > S::feas_tol() {
        return Ok((infeasible_solution(lp, iterations), tableau.basis));
    }

    // drive basic artificials out; rows that resist are redundant
    let mut redundant_rows = Vec::new();
    for i in 0..m {
        if tableau.basis[i] < n_struct {
            continue;
        }
        let pivot_col = (0..n_struct).find(|&j| tableau.rows[i][j].abs() > S::feas_tol());
        match pivot_col {
            Some(col) => {
                tableau.pivot(i, col);
                iterations += 1;
            }
            None => redundant_rows.push(i),
        }
    }

    // phase 2: artificials are never allowed to enter
    let status = match run_phase(&mut tableau, false, false, &mut iterations, iteration_limit)? {
        PhaseEnd::Converged => LpStatus::Optimal,
        PhaseEnd::Unbounded => LpStatus::Unbounded,
    };

    // primal values per internal column, then recombined per variable
    let mut internal_values = vec![S::zero(); n_struct];
    for i in 0..m {
        if tableau.basis[i] < n_struct {
            internal_values[tableau.basis[i]] = tableau.rows[i][tableau.total_cols].clone();
        }
    }
    let primal = form.recombine(&internal_values, lp.vars.len());

    // duals: y_i reads off the artificial reduced cost, undoing the row
    // sign and the prescaling
    let mut dual = Vec::with_capacity(m);
    for i in 0..m {
        let y = -tableau.cost2[n_struct + i].clone();
        dual.push(&y * &form.signed_scale[i]);
    }

    let objective = lp
        .vars
        .iter()
        .zip(&primal)
        .fold(S::zero(), |acc, (v, x)| acc + &v.objective * x);

    Ok((
        LpSolution { status, primal, dual, objective, redundant_rows, iterations },
        tableau.basis,
    ))
}

/// Gaussian elimination over the scalar field: solves `a * x = rhs` for each
/// right-hand side column; `None` when `a` is singular.
fn solve_dense_system<S: Scalar>(
    mut a: Vec<Vec<S>>,
    mut rhs: Vec<Vec<S>>,
) -> Option<Vec<Vec<S>>>
where
    for<'a> &'a S: RefOps<S>,
{
    let n = a.len();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let pivot_row = (k..n).find(|&i| !a[perm[i]][k].is_zero())?;
        perm.swap(k, pivot_row);
        let p = a[perm[k]][k].clone();
        for i in k + 1..n {
            let f = &a[perm[i]][k] / &p;
            if f.is_zero() {
                continue;
            }
            for j in k..n {
                let delta = &f * &a[perm[k]][j];
                a[perm[i]][j] = &a[perm[i]][j] - &delta;
            }
            for r in rhs.iter_mut() {
                let delta = &f * &r[perm[k]];
                r[perm[i]] = &r[perm[i]] - &delta;
            }
        }
    }
    let mut solutions = Vec::with_capacity(rhs.len());
    for r in &rhs {
        let mut x = vec![S::zero(); n];
        for k in (0..n).rev() {
            let mut acc = r[perm[k]].clone();
            for j in k + 1..n {
                acc = acc - &a[perm[k]][j] * &x[j];
            }
            x[k] = &acc / &a[perm[k]][k];
        }
        solutions.push(x);
    }
    Some(solutions)
}

/// Large exact programs first run the float simplex to locate an optimal
/// basis, then verify that basis exactly: one exact linear solve for the
/// basic values and duals, plus an exact pricing pass over every column.
/// Any failed check falls back to the pure exact simplex, so the result is
/// exact unconditionally.
fn try_float_assisted<S: Scalar>(lp: &LinearProgram<S>, form: &StandardForm<S>) -> Option<LpSolution<S>>
where
    for<'a> &'a S: RefOps<S>,
{
    // float mirror with the same row/variable layout
    let mut mirror = LinearProgram::<f64>::new();
    for row in &lp.rows {
        mirror.add_row(row.label.clone(), row.relation, row.rhs.to_f64());
    }
    for v in &lp.vars {
        let column = v.column.iter().map(|(r, c)| (*r, c.to_f64())).collect();
        mirror.add_var(v.label.clone(), v.objective.to_f64(), v.free, column);
    }
    let mirror_form = build_standard_form::<f64>(&mirror);
    if mirror_form.total_cols != form.total_cols {
        return None;
    }
    let (fsol, basis) = solve_classic::<f64>(&mirror, &mirror_form).ok()?;
    if fsol.status != LpStatus::Optimal {
        return None;
    }

    let m = form.m;
    // exact basis matrix and its transpose
    let basis_matrix: Vec<Vec<S>> = (0..m)
        .map(|i| {
            basis
                .iter()
                .map(|&j| form.dense_column(j)[i].clone())
                .collect()
        })
        .collect();
    let transpose: Vec<Vec<S>> = (0..m)
        .map(|i| (0..m).map(|j| basis_matrix[j][i].clone()).collect())
        .collect();
    let c_basis: Vec<S> = basis
        .iter()
        .map(|&j| {
            if j < form.n_struct {
                form.objective[j].clone()
            } else {
                S::zero()
            }
        })
        .collect();

    let x_basis = solve_dense_system(basis_matrix, vec![form.rhs.clone()])?.remove(0);
    let w = solve_dense_system(transpose, vec![c_basis])?.remove(0);

    // exact feasibility: basic values nonnegative, artificials exactly zero
    for (value, &j) in x_basis.iter().zip(&basis) {
        if *value < S::zero() {
            return None;
        }
        if j >= form.n_struct && !value.is_zero() {
            return None;
        }
    }
    // exact dual feasibility: no structural column prices out positive
    for j in 0..form.n_struct {
        let mut reduced = form.objective[j].clone();
        for (r, c) in &form.columns[j] {
            reduced = reduced - &w[*r] * c;
        }
        if reduced > S::zero() {
            return None;
        }
    }

    let mut internal_values = vec![S::zero(); form.n_struct];
    for (value, &j) in x_basis.iter().zip(&basis) {
        if j < form.n_struct {
            internal_values[j] = value.clone();
        }
    }
    let primal = form.recombine(&internal_values, lp.vars.len());
    let dual: Vec<S> = w
        .iter()
        .zip(&form.signed_scale)
        .map(|(wi, s)| wi * s)
        .collect();
    let objective = lp
        .vars
        .iter()
        .zip(&primal)
        .fold(S::zero(), |acc, (v, x)| acc + &v.objective * x);
    let redundant_rows: Vec<usize> = basis
        .iter()
        .enumerate()
        .filter(|(_, &j)| j >= form.n_struct)
        .map(|(i, _)| i)
        .collect();

    Some(LpSolution {
        status: LpStatus::Optimal,
        primal,
        dual,
        objective,
        redundant_rows,
        iterations: fsol.iterations,
    })
}

/// Tableau size above which exact solves consult the float simplex for a
/// candidate basis before falling back to the pure exact path.
const FLOAT_ASSIST_THRESHOLD: usize = 15_000;

/// Solves the program with the two-phase primal simplex. Exact mode returns
/// exactly optimal results: large instances locate a basis with the float
/// simplex and verify it exactly, falling back to the pure exact simplex
/// when verification fails; float mode applies the module tolerances.
pub fn solve_lp<S: Scalar>(lp: &LinearProgram<S>) -> Result<LpSolution<S>, LpError>
where
    for<'a> &'a S: RefOps<S>,
{
    lp.check_labels()?;
    let form = build_standard_form(lp);
    if S::EXACT && form.m * form.total_cols >= FLOAT_ASSIST_THRESHOLD {
        if let Some(solution) = try_float_assisted(lp, &form) {
            return Ok(solution);
        }
    }
    solve_classic(lp, &form).map(|(solution, _)| solution)
}

fn infeasible_solution<S: Scalar>(lp: &LinearProgram<S>, iterations: u64) -> LpSolution<S>
where
    for<'a> &'a S: RefOps<S>,
{
    LpSolution {
        status: LpStatus::Infeasible,
        primal: vec![S::zero(); lp.vars.len()],
        dual: vec![S::zero(); lp.rows.len()],
        objective: S::zero(),
        redundant_rows: Vec::new(),
        iterations,
    }
}

/// Outcome of the independent recheck of an optimal solution.
#[derive(Debug, Clone)]
pub struct VerificationReport<S> {
    pub primal_feasible: bool,
    pub dual_feasible: bool,
    /// Primal objective minus dual objective; exactly zero in exact mode.
    pub gap: S,
    pub slackness_violations: Vec<String>,
}

impl<S: Scalar> VerificationReport<S>
where
    for<'a> &'a S: RefOps<S>,
{
    pub fn clean(&self) -> bool {
        self.primal_feasible
            && self.dual_feasible
            && self.gap.abs() <= S::gap_tol()
            && self.slackness_violations.is_empty()
    }
}

/// Recomputes all residuals of an optimal solution from the program data,
/// independently of any solver state.
pub fn verify_solution<S: Scalar>(
    lp: &LinearProgram<S>,
    sol: &LpSolution<S>,
) -> VerificationReport<S>
where
    for<'a> &'a S: RefOps<S>,
{
    let m = lp.rows.len();
    let mut primal_feasible = true;
    let mut dual_feasible = true;
    let mut slackness_violations = Vec::new();

    // row residuals
    let mut residuals = vec![S::zero(); m];
    for (j, v) in lp.vars.iter().enumerate() {
        if !v.free && sol.primal[j] < -S::feas_tol() {
            primal_feasible = false;
        }
        for (r, c) in &v.column {
            residuals[*r] = &residuals[*r] + &(c * &sol.primal[j]);
        }
    }
    for (i, row) in lp.rows.iter().enumerate() {
        let slack = &row.rhs - &residuals[i];
        match row.relation {
            Relation::Eq => {
                if slack.abs() > S::feas_tol() {
                    primal_feasible = false;
                }
            }
            Relation::Le => {
                if slack < -S::feas_tol() {
                    primal_feasible = false;
                }
                if sol.dual[i] < -S::feas_tol() {
                    dual_feasible = false;
                }
                if (&sol.dual[i] * &slack).abs() > S::feas_tol() {
                    slackness_violations.push(format!(
                        "row {}: dual {} with slack {}",
                        row.label, sol.dual[i], slack
                    ));
                }
            }
        }
    }

    // reduced costs
    for (j, v) in lp.vars.iter().enumerate() {
        let mut reduced = v.objective.clone();
        for (r, c) in &v.column {
            reduced = reduced - &sol.dual[*r] * c;
        }
        if v.free {
            if reduced.abs() > S::feas_tol() {
                dual_feasible = false;
            }
        } else {
            if reduced > S::feas_tol() {
                dual_feasible = false;
            }
            if (&reduced * &sol.primal[j]).abs() > S::feas_tol() {
                slackness_violations.push(format!(
                    "var {}: value {} with reduced cost {}",
                    v.label, sol.primal[j], reduced
                ));
            }
        }
    }

    let dual_objective = lp
        .rows
        .iter()
        .zip(&sol.dual)
        .fold(S::zero(), |acc, (r, y)| acc + &r.rhs * y);
    let gap = &sol.objective - &dual_objective;

    VerificationReport { primal_feasible, dual_feasible, gap, slackness_violations }
}
