//! Bounded-variable two-phase primal simplex on a dense tableau.
//!
//! Rows are turned into equalities with one slack per row whose bounds carry
//! the row sense. Rows whose slack cannot absorb the initial residual get an
//! artificial column; phase one drives the artificials to zero. Pricing is
//! Dantzig's rule with a Harris ratio test; after a run of degenerate pivots
//! the solver falls back to Bland's rule until progress resumes.

use super::{LinearProgram, LpError, LpSolution, LpSolver, LpStatus, RowSense, Sense, DEFAULT_TOL};

#[derive(Debug, Clone)]
pub struct DenseSimplex {
    /// Feasibility and optimality tolerance, scaled by the data magnitude.
    pub tol: f64,
    /// Smallest admissible pivot magnitude.
    pub pivot_tol: f64,
    /// Hard cap on pivots per solve; `None` picks a size-based default.
    pub max_iterations: Option<usize>,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
}

impl Default for DenseSimplex {
    fn default() -> Self {
        Self::with_tolerance(DEFAULT_TOL)
    }
}

impl DenseSimplex {
    pub fn with_tolerance(tol: f64) -> Self {
        Self {
            tol,
            pivot_tol: 1e-9,
            max_iterations: None,
            bland_after: 40,
        }
    }
}

impl LpSolver for DenseSimplex {
    fn solve(&self, lp: &LinearProgram) -> Result<LpSolution, LpError> {
        lp.validate_data()?;
        let mut tab = Tableau::build(lp, self);
        tab.solve(lp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum NonBasic {
    Lower,
    Upper,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum State {
    Basic(usize),
    At(NonBasic),
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

struct Tableau {
    m: usize,
    n: usize,
    ncols: usize,
    width: usize,
    /// Row-major `B^-1 [A I art | b]`.
    t: Vec<f64>,
    /// Reduced costs for the current phase.
    d: Vec<f64>,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    state: Vec<State>,
    basis: Vec<usize>,
    art_start: usize,
    feas_tol: f64,
    opt_tol: f64,
    pivot_tol: f64,
    bland_after: usize,
    max_iter: usize,
    iterations: usize,
    nz: Vec<usize>,
    prow: Vec<f64>,
}

impl Tableau {
    fn build(lp: &LinearProgram, cfg: &DenseSimplex) -> Self {
        let m = lp.rows.len();
        let n = lp.vars.len();

        let mut lower = Vec::with_capacity(n + 2 * m);
        let mut upper = Vec::with_capacity(n + 2 * m);
        let mut x = Vec::with_capacity(n + 2 * m);
        let mut state = Vec::with_capacity(n + 2 * m);
        for v in &lp.vars {
            lower.push(v.lower);
            upper.push(v.upper);
            let (val, st) = if v.lower.is_finite() {
                (v.lower, NonBasic::Lower)
            } else if v.upper.is_finite() {
                (v.upper, NonBasic::Upper)
            } else {
                (0.0, NonBasic::Free)
            };
            x.push(val);
            state.push(State::At(st));
        }

        let mut bscale: f64 = 1.0;
        for r in &lp.rows {
            bscale = bscale.max(r.rhs.abs());
        }
        for v in &lp.vars {
            if v.lower.is_finite() {
                bscale = bscale.max(v.lower.abs());
            }
            if v.upper.is_finite() {
                bscale = bscale.max(v.upper.abs());
            }
        }
        let cscale = lp.vars.iter().fold(1.0f64, |acc, v| acc.max(v.cost.abs()));

        // residual r = b - A x_N and the artificial plan
        let mut residual: Vec<f64> = lp.rows.iter().map(|r| r.rhs).collect();
        for (i, r) in lp.rows.iter().enumerate() {
            for &(v, a) in &r.coeffs {
                residual[i] -= a * x[v.0];
            }
        }
        let mut art_sign: Vec<Option<f64>> = vec![None; m];
        for (i, r) in lp.rows.iter().enumerate() {
            let (lo, hi) = slack_bounds(r.sense);
            let ri = residual[i];
            if ri < lo || ri > hi {
                art_sign[i] = Some(if ri >= 0.0 { 1.0 } else { -1.0 });
            }
        }
        let nart = art_sign.iter().filter(|s| s.is_some()).count();
        let ncols = n + m + nart;
        let width = ncols + 1;
        let art_start = n + m;

        for r in &lp.rows {
            let (lo, hi) = slack_bounds(r.sense);
            lower.push(lo);
            upper.push(hi);
            x.push(0.0);
            state.push(State::At(if lo == 0.0 { NonBasic::Lower } else { NonBasic::Upper }));
        }
        for _ in 0..nart {
            lower.push(0.0);
            upper.push(f64::INFINITY);
            x.push(0.0);
            state.push(State::At(NonBasic::Lower));
        }

        let mut t = vec![0.0; m * width];
        let mut basis = vec![0; m];
        let mut next_art = art_start;
        for (i, r) in lp.rows.iter().enumerate() {
            let row = &mut t[i * width..(i + 1) * width];
            for &(v, a) in &r.coeffs {
                row[v.0] += a;
            }
            row[n + i] = 1.0;
            row[ncols] = r.rhs;
            match art_sign[i] {
                None => {
                    basis[i] = n + i;
                    state[n + i] = State::Basic(i);
                    x[n + i] = residual[i];
                }
                Some(sign) => {
                    row[next_art] = sign;
                    if sign < 0.0 {
                        for v in row.iter_mut() {
                            *v = -*v;
                        }
                    }
                    basis[i] = next_art;
                    state[next_art] = State::Basic(i);
                    x[next_art] = residual[i].abs();
                    next_art += 1;
                }
            }
        }

        let max_iter = cfg
            .max_iterations
            .unwrap_or(50 * (m + ncols) + 10_000);

        Tableau {
            m,
            n,
            ncols,
            width,
            t,
            d: vec![0.0; width],
            cost: vec![0.0; ncols],
            lower,
            upper,
            x,
            state,
            basis,
            art_start,
            feas_tol: cfg.tol * bscale,
            opt_tol: cfg.tol * cscale,
            pivot_tol: cfg.pivot_tol,
            bland_after: cfg.bland_after,
            max_iter,
            iterations: 0,
            nz: Vec::with_capacity(width),
            prow: vec![0.0; width],
        }
    }

    fn solve(&mut self, lp: &LinearProgram) -> Result<LpSolution, LpError> {
        let n = self.n;
        let m = self.m;

        if self.art_start < self.ncols {
            for j in 0..self.ncols {
                self.cost[j] = if j >= self.art_start { 1.0 } else { 0.0 };
            }
            self.compute_reduced_costs();
            self.run_phase()?;
            self.recompute_basics();
            let infeas: f64 = (self.art_start..self.ncols).map(|j| self.x[j].max(0.0)).sum();
            if infeas > 10.0 * self.feas_tol {
                return Ok(LpSolution {
                    status: LpStatus::Infeasible,
                    objective: match lp.sense {
                        Sense::Minimize => f64::INFINITY,
                        Sense::Maximize => f64::NEG_INFINITY,
                    },
                    primal: Vec::new(),
                    duals: Vec::new(),
                    reduced_costs: Vec::new(),
                });
            }
            self.retire_artificials();
        }

        let sign = match lp.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        for j in 0..self.ncols {
            self.cost[j] = if j < n { sign * lp.vars[j].cost } else { 0.0 };
        }
        self.compute_reduced_costs();
        if let PhaseEnd::Unbounded = self.run_phase()? {
            return Ok(LpSolution {
                status: LpStatus::Unbounded,
                objective: match lp.sense {
                    Sense::Minimize => f64::NEG_INFINITY,
                    Sense::Maximize => f64::INFINITY,
                },
                primal: Vec::new(),
                duals: Vec::new(),
                reduced_costs: Vec::new(),
            });
        }
        self.recompute_basics();
        self.compute_reduced_costs();

        let primal: Vec<f64> = self.x[..n].to_vec();
        let duals: Vec<f64> = (0..m).map(|i| sign * -self.d[n + i]).collect();
        let reduced_costs: Vec<f64> = (0..n).map(|j| sign * self.d[j]).collect();
        let objective = lp.objective_at(&primal);
        Ok(LpSolution {
            status: LpStatus::Optimal,
            objective,
            primal,
            duals,
            reduced_costs,
        })
    }

    fn compute_reduced_costs(&mut self) {
        let w = self.width;
        self.d[..self.ncols].copy_from_slice(&self.cost);
        self.d[self.ncols] = 0.0;
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.t[i * w..(i + 1) * w];
            for (dk, &tk) in self.d.iter_mut().zip(row) {
                *dk -= cb * tk;
            }
        }
        for i in 0..self.m {
            self.d[self.basis[i]] = 0.0;
        }
    }

    /// `x_B = B^-1 b - sum_{j nonbasic} B^-1 a_j x_j`
    fn recompute_basics(&mut self) {
        let w = self.width;
        for i in 0..self.m {
            let row = &self.t[i * w..(i + 1) * w];
            let mut v = row[self.ncols];
            for j in 0..self.ncols {
                if let State::At(_) = self.state[j] {
                    let xj = self.x[j];
                    if xj != 0.0 && row[j] != 0.0 {
                        v -= row[j] * xj;
                    }
                }
            }
            self.x[self.basis[i]] = v;
        }
    }

    fn entering(&self, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.ncols {
            let nb = match self.state[j] {
                State::Basic(_) => continue,
                State::At(nb) => nb,
            };
            if self.lower[j] == self.upper[j] {
                continue;
            }
            let dj = self.d[j];
            let dir = match nb {
                NonBasic::Lower if dj < -self.opt_tol => 1.0,
                NonBasic::Upper if dj > self.opt_tol => -1.0,
                NonBasic::Free if dj.abs() > self.opt_tol => -dj.signum(),
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            if dj.abs() > best_score {
                best_score = dj.abs();
                best = Some((j, dir));
            }
        }
        best
    }

    fn run_phase(&mut self) -> Result<PhaseEnd, LpError> {
        let w = self.width;
        let mut degenerate_streak = 0usize;
        let mut since_refresh = 0usize;
        loop {
            let bland = degenerate_streak >= self.bland_after;
            let (j, dir) = match self.entering(bland) {
                Some(e) => e,
                None => {
                    // confirm against freshly computed reduced costs
                    self.compute_reduced_costs();
                    match self.entering(bland) {
                        Some(e) => e,
                        None => return Ok(PhaseEnd::Optimal),
                    }
                }
            };

            self.iterations += 1;
            if self.iterations > self.max_iter {
                return Err(LpError::NumericalFailure(format!(
                    "iteration limit {} reached",
                    self.max_iter
                )));
            }

            let range = self.upper[j] - self.lower[j];
            let leave = if bland {
                self.ratio_bland(j, dir)
            } else {
                self.ratio_harris(j, dir)
            };

            let (step, pivot_row) = match leave {
                Some((r, ratio)) if ratio < range => (ratio, Some(r)),
                _ if range.is_finite() => (range, None),
                _ => return Ok(PhaseEnd::Unbounded),
            };

            if step > self.feas_tol {
                degenerate_streak = 0;
            } else {
                degenerate_streak += 1;
            }

            if step != 0.0 {
                for i in 0..self.m {
                    let a = self.t[i * w + j];
                    if a != 0.0 {
                        self.x[self.basis[i]] -= dir * step * a;
                    }
                }
            }

            match pivot_row {
                None => {
                    // bound flip
                    if dir > 0.0 {
                        self.x[j] = self.upper[j];
                        self.state[j] = State::At(NonBasic::Upper);
                    } else {
                        self.x[j] = self.lower[j];
                        self.state[j] = State::At(NonBasic::Lower);
                    }
                }
                Some(r) => {
                    self.x[j] += dir * step;
                    let b = self.basis[r];
                    let alpha = dir * self.t[r * w + j];
                    if alpha > 0.0 {
                        self.x[b] = self.lower[b];
                        self.state[b] = State::At(NonBasic::Lower);
                    } else {
                        self.x[b] = self.upper[b];
                        self.state[b] = State::At(NonBasic::Upper);
                    }
                    self.pivot(r, j);
                    self.basis[r] = j;
                    self.state[j] = State::Basic(r);
                    since_refresh += 1;
                    if since_refresh >= 100 {
                        since_refresh = 0;
                        self.recompute_basics();
                    }
                }
            }
        }
    }

    /// Harris two-pass ratio test. Returns the pivot row and its exact step.
    fn ratio_harris(&self, j: usize, dir: f64) -> Option<(usize, f64)> {
        let w = self.width;
        let mut relaxed = f64::INFINITY;
        for i in 0..self.m {
            let alpha = dir * self.t[i * w + j];
            if alpha.abs() <= self.pivot_tol {
                continue;
            }
            let b = self.basis[i];
            let bound = if alpha > 0.0 {
                if self.lower[b] == f64::NEG_INFINITY {
                    continue;
                }
                (self.x[b] - self.lower[b] + self.feas_tol) / alpha
            } else {
                if self.upper[b] == f64::INFINITY {
                    continue;
                }
                (self.upper[b] - self.x[b] + self.feas_tol) / -alpha
            };
            if bound < relaxed {
                relaxed = bound;
            }
        }
        if relaxed == f64::INFINITY {
            return None;
        }
        let mut best: Option<(usize, f64)> = None;
        let mut best_alpha = 0.0;
        for i in 0..self.m {
            let alpha = dir * self.t[i * w + j];
            if alpha.abs() <= self.pivot_tol {
                continue;
            }
            let b = self.basis[i];
            let exact = if alpha > 0.0 {
                if self.lower[b] == f64::NEG_INFINITY {
                    continue;
                }
                (self.x[b] - self.lower[b]) / alpha
            } else {
                if self.upper[b] == f64::INFINITY {
                    continue;
                }
                (self.upper[b] - self.x[b]) / -alpha
            };
            if exact <= relaxed && alpha.abs() > best_alpha {
                best_alpha = alpha.abs();
                best = Some((i, exact.max(0.0)));
            }
        }
        best
    }

    /// Textbook minimum-ratio test with smallest-index tie breaking.
    fn ratio_bland(&self, j: usize, dir: f64) -> Option<(usize, f64)> {
        let w = self.width;
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.m {
            let alpha = dir * self.t[i * w + j];
            if alpha.abs() <= self.pivot_tol {
                continue;
            }
            let b = self.basis[i];
            let ratio = if alpha > 0.0 {
                if self.lower[b] == f64::NEG_INFINITY {
                    continue;
                }
                ((self.x[b] - self.lower[b]) / alpha).max(0.0)
            } else {
                if self.upper[b] == f64::INFINITY {
                    continue;
                }
                ((self.upper[b] - self.x[b]) / -alpha).max(0.0)
            };
            best = match best {
                None => Some((i, ratio)),
                Some((r, br)) => {
                    if ratio < br - 1e-12 || (ratio <= br + 1e-12 && b < self.basis[r]) {
                        Some((i, ratio))
                    } else {
                        Some((r, br))
                    }
                }
            };
        }
        best
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let w = self.width;
        let piv = self.t[r * w + j];
        let inv = 1.0 / piv;
        self.nz.clear();
        {
            let row = &mut self.t[r * w..(r + 1) * w];
            for (k, v) in row.iter_mut().enumerate() {
                if *v != 0.0 {
                    *v *= inv;
                    self.nz.push(k);
                }
            }
            row[j] = 1.0;
            self.prow.copy_from_slice(row);
        }
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let base = i * w;
            let f = self.t[base + j];
            if f == 0.0 {
                continue;
            }
            for &k in &self.nz {
                let v = self.t[base + k] - f * self.prow[k];
                self.t[base + k] = if v.abs() < 1e-14 { 0.0 } else { v };
            }
            self.t[base + j] = 0.0;
        }
        let f = self.d[j];
        if f != 0.0 {
            for &k in &self.nz {
                self.d[k] -= f * self.prow[k];
            }
            self.d[j] = 0.0;
        }
    }

    /// Fixes artificials at zero and pivots basic ones out where possible.
    fn retire_artificials(&mut self) {
        let w = self.width;
        for j in self.art_start..self.ncols {
            self.upper[j] = 0.0;
        }
        for r in 0..self.m {
            let b = self.basis[r];
            if b < self.art_start {
                continue;
            }
            let mut best: Option<usize> = None;
            let mut best_abs = 1e-7;
            for k in 0..self.art_start {
                if let State::Basic(_) = self.state[k] {
                    continue;
                }
                let a = self.t[r * w + k].abs();
                if a > best_abs {
                    best_abs = a;
                    best = Some(k);
                }
            }
            if let Some(k) = best {
                // degenerate exchange: the artificial sits at (about) zero
                let a = self.t[r * w + k];
                let step = self.x[b] / a;
                for i in 0..self.m {
                    let aik = self.t[i * w + k];
                    if aik != 0.0 {
                        self.x[self.basis[i]] -= step * aik;
                    }
                }
                self.x[k] += step;
                self.x[b] = 0.0;
                self.state[b] = State::At(NonBasic::Lower);
                self.pivot(r, k);
                self.basis[r] = k;
                self.state[k] = State::Basic(r);
            }
        }
        for j in self.art_start..self.ncols {
            if let State::At(_) = self.state[j] {
                self.x[j] = 0.0;
            }
        }
    }
}

fn slack_bounds(sense: RowSense) -> (f64, f64) {
    match sense {
        RowSense::Le => (0.0, f64::INFINITY),
        RowSense::Ge => (f64::NEG_INFINITY, 0.0),
        RowSense::Eq => (0.0, 0.0),
    }
}
