//! Dense two-phase simplex with Bland's anti-cycling rule.
//!
//! Every decision variable is free; internally each one is split into a
//! positive and a negative part. Problem sizes here are a few dozen rows and
//! columns, so a dense tableau is the simplest thing that is also exact
//! enough.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `minimize objective · x` subject to the rows, `x` free.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    num_vars: usize,
    objective: Vec<f64>,
    rows: Vec<Constraint>,
    tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(self) -> Option<LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

const MAX_PIVOTS: usize = 200_000;

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            num_vars,
            objective: vec![0.0; num_vars],
            rows: Vec::new(),
            tol: 1e-9,
        }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn set_objective(&mut self, c: Vec<f64>) {
        assert_eq!(c.len(), self.num_vars);
        self.objective = c;
    }

    pub fn add(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        assert_eq!(coeffs.len(), self.num_vars);
        self.rows.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn le(&mut self, coeffs: Vec<f64>, rhs: f64) {
        self.add(coeffs, Relation::Le, rhs)
    }

    pub fn eq(&mut self, coeffs: Vec<f64>, rhs: f64) {
        self.add(coeffs, Relation::Eq, rhs)
    }

    pub fn ge(&mut self, coeffs: Vec<f64>, rhs: f64) {
        self.add(coeffs, Relation::Ge, rhs)
    }

    pub fn solve(&self) -> Result<LpOutcome> {
        Tableau::build(self).run(self)
    }
}

struct Tableau {
    /// (m + 1) x (cols + 1); the last row is the objective, the last column the rhs.
    data: Vec<f64>,
    m: usize,
    cols: usize,
    basis: Vec<usize>,
    n_struct: usize,
    n_artificial_start: usize,
    active_row: Vec<bool>,
    tol: f64,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let n_struct = 2 * lp.num_vars;
        let n_slack = lp
            .rows
            .iter()
            .filter(|r| r.relation != Relation::Eq)
            .count();
        let m = lp.rows.len();
        let n_artificial_start = n_struct + n_slack;
        let cols = n_artificial_start + m;
        let width = cols + 1;
        let mut data = vec![0.0; (m + 1) * width];
        let mut basis = vec![usize::MAX; m];

        // Scale each row by its largest coefficient so the pivot tolerances
        // are relative.
        let mut slack_col = n_struct;
        for (i, row) in lp.rows.iter().enumerate() {
            let scale = row
                .coeffs
                .iter()
                .fold(0.0f64, |a, &c| a.max(c.abs()))
                .max(1e-300);
            let (slack, slack_sign) = match row.relation {
                Relation::Le => (Some(slack_col), 1.0),
                Relation::Ge => (Some(slack_col), -1.0),
                Relation::Eq => (None, 0.0),
            };
            if slack.is_some() {
                slack_col += 1;
            }
            let flip = if row.rhs / scale < 0.0 { -1.0 } else { 1.0 };
            let r = &mut data[i * width..(i + 1) * width];
            for (j, &a) in row.coeffs.iter().enumerate() {
                r[2 * j] = flip * a / scale;
                r[2 * j + 1] = -flip * a / scale;
            }
            if let Some(s) = slack {
                r[s] = flip * slack_sign;
            }
            r[cols] = flip * row.rhs / scale;
            match slack {
                Some(s) if r[s] > 0.0 => basis[i] = s,
                _ => {
                    r[n_artificial_start + i] = 1.0;
                    basis[i] = n_artificial_start + i;
                }
            }
        }
        Tableau {
            data,
            m,
            cols,
            basis,
            n_struct,
            n_artificial_start,
            active_row: vec![true; m],
            tol: lp.tol,
        }
    }

    #[inline]
    fn width(&self) -> usize {
        self.cols + 1
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width() + j]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let w = self.width();
        let p = self.data[row * w + col];
        for j in 0..w {
            self.data[row * w + j] /= p;
        }
        self.data[row * w + col] = 1.0;
        let pivot_row: Vec<f64> = self.data[row * w..(row + 1) * w].to_vec();
        for i in 0..=self.m {
            if i == row || (i < self.m && !self.active_row[i]) {
                continue;
            }
            let f = self.data[i * w + col];
            if f == 0.0 {
                continue;
            }
            let r = &mut self.data[i * w..(i + 1) * w];
            for j in 0..w {
                r[j] -= f * pivot_row[j];
            }
            r[col] = 0.0;
        }
        self.basis[row] = col;
    }

    /// Loads `cost` (indexed by column) into the objective row in reduced form.
    fn load_objective(&mut self, cost: &[f64]) {
        let w = self.width();
        let obj = self.m * w;
        for j in 0..w {
            self.data[obj + j] = if j < cost.len() { cost[j] } else { 0.0 };
        }
        for i in 0..self.m {
            if !self.active_row[i] {
                continue;
            }
            let cb = cost.get(self.basis[i]).copied().unwrap_or(0.0);
            if cb != 0.0 {
                for j in 0..w {
                    self.data[obj + j] -= cb * self.data[i * w + j];
                }
            }
        }
    }

    /// Runs Bland-rule pivots over the first `allowed_cols` columns.
    /// Returns `Ok(false)` when the objective is unbounded below.
    fn optimize(&mut self, allowed_cols: usize) -> Result<bool> {
        let tol = self.tol;
        for _ in 0..MAX_PIVOTS {
            let entering = (0..allowed_cols).find(|&j| self.at(self.m, j) < -tol);
            let Some(col) = entering else {
                return Ok(true);
            };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.m {
                if !self.active_row[i] {
                    continue;
                }
                let a = self.at(i, col);
                if a > tol {
                    let ratio = self.at(i, self.cols).max(0.0) / a;
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - tol * (1.0 + br.abs())
                                || (ratio <= br + tol * (1.0 + br.abs())
                                    && self.basis[i] < self.basis[bi])
                            {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            match best {
                None => return Ok(false),
                Some((row, _)) => self.pivot(row, col),
            }
        }
        Err(Error::Internal("simplex pivot limit exceeded".into()))
    }

    fn run(mut self, lp: &LinearProgram) -> Result<LpOutcome> {
        let n_art = self.m;
        if self.basis.iter().any(|&b| b >= self.n_artificial_start) {
            let mut cost = vec![0.0; self.cols];
            for c in cost.iter_mut().skip(self.n_artificial_start).take(n_art) {
                *c = 1.0;
            }
            self.load_objective(&cost);
            self.optimize(self.cols)?;
            let infeasibility = -self.at(self.m, self.cols);
            if infeasibility > self.tol {
                return Ok(LpOutcome::Infeasible);
            }
            // Drive remaining artificials out of the basis or retire their rows.
            for i in 0..self.m {
                if self.basis[i] < self.n_artificial_start {
                    continue;
                }
                let col = (0..self.n_artificial_start)
                    .filter(|&j| self.at(i, j).abs() > self.tol)
                    .max_by(|&a, &b| self.at(i, a).abs().total_cmp(&self.at(i, b).abs()));
                match col {
                    Some(j) => self.pivot(i, j),
                    None => self.active_row[i] = false,
                }
            }
        }

        let mut cost = vec![0.0; self.n_artificial_start];
        for (j, &c) in lp.objective.iter().enumerate() {
            cost[2 * j] = c;
            cost[2 * j + 1] = -c;
        }
        self.load_objective(&cost);
        if !self.optimize(self.n_artificial_start)? {
            return Ok(LpOutcome::Unbounded);
        }

        let mut split = vec![0.0; self.n_struct];
        for i in 0..self.m {
            if self.active_row[i] && self.basis[i] < self.n_struct {
                split[self.basis[i]] = self.at(i, self.cols);
            }
        }
        let x: Vec<f64> = (0..lp.num_vars)
            .map(|j| split[2 * j] - split[2 * j + 1])
            .collect();
        let value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpOutcome::Optimal(LpSolution { x, value }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let mut lp = LinearProgram::new(2);
        lp.set_objective(vec![-3.0, -5.0]);
        lp.le(vec![1.0, 0.0], 4.0);
        lp.le(vec![0.0, 2.0], 12.0);
        lp.le(vec![3.0, 2.0], 18.0);
        lp.ge(vec![1.0, 0.0], 0.0);
        lp.ge(vec![0.0, 1.0], 0.0);
        let s = lp.solve().unwrap().optimal().unwrap();
        assert_abs_diff_eq!(s.value, -36.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.x[0], 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.x[1], 6.0, epsilon = 1e-9);
    }

    #[test]
    fn free_variables_and_equalities() {
        // min x + y s.t. x - y = -3, x >= -10 -> x = -10, y = -7
        let mut lp = LinearProgram::new(2);
        lp.set_objective(vec![1.0, 1.0]);
        lp.eq(vec![1.0, -1.0], -3.0);
        lp.ge(vec![1.0, 0.0], -10.0);
        let s = lp.solve().unwrap().optimal().unwrap();
        assert_abs_diff_eq!(s.x[0], -10.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.x[1], -7.0, epsilon = 1e-9);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(1);
        lp.le(vec![1.0], 0.0);
        lp.ge(vec![1.0], 1.0);
        assert_eq!(lp.solve().unwrap(), LpOutcome::Infeasible);

        let mut lp = LinearProgram::new(1);
        lp.set_objective(vec![-1.0]);
        lp.ge(vec![1.0], 0.0);
        assert_eq!(lp.solve().unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_equalities_are_retired() {
        let mut lp = LinearProgram::new(2);
        lp.set_objective(vec![1.0, 0.0]);
        lp.eq(vec![1.0, 1.0], 2.0);
        lp.eq(vec![2.0, 2.0], 4.0);
        lp.ge(vec![0.0, 1.0], -1.0);
        lp.le(vec![0.0, 1.0], 5.0);
        let s = lp.solve().unwrap().optimal().unwrap();
        assert_abs_diff_eq!(s.x[0], -3.0, epsilon = 1e-9);
    }

    #[test]
    fn degenerate_vertex_does_not_cycle() {
        // Beale's classic cycling example (cycles under Dantzig's rule).
        let mut lp = LinearProgram::new(4);
        lp.set_objective(vec![-0.75, 150.0, -0.02, 6.0]);
        lp.le(vec![0.25, -60.0, -0.04, 9.0], 0.0);
        lp.le(vec![0.5, -90.0, -0.02, 3.0], 0.0);
        lp.le(vec![0.0, 0.0, 1.0, 0.0], 1.0);
        for j in 0..4 {
            let mut e = vec![0.0; 4];
            e[j] = 1.0;
            lp.ge(e, 0.0);
        }
        let s = lp.solve().unwrap().optimal().unwrap();
        assert_abs_diff_eq!(s.value, -0.05, epsilon = 1e-9);
    }
}
