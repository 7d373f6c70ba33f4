use crate::{LinearProgram, LpSolution, Relation, SolveError, Status, FEASIBILITY_TOL};

const PIVOT_TOL: f64 = 1e-9;
const OPTIMALITY_TOL: f64 = 1e-9;
/// Consecutive zero-length steps tolerated before switching to Bland's rule.
const DEGENERATE_STREAK: usize = 50;
const MAX_ITERATIONS: usize = 100_000;

/// Solves a program without binaries.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, SolveError> {
    if let Some(v) = lp.variables().iter().find(|v| v.binary) {
        return Err(SolveError::BinaryInLp(v.name.clone()));
    }
    let lower: Vec<f64> = lp.variables().iter().map(|v| v.lower).collect();
    let upper: Vec<f64> = lp.variables().iter().map(|v| v.upper).collect();
    solve_relaxation(lp, &lower, &upper)
}

/// Solves the continuous relaxation of `lp` with the given variable bounds.
pub(crate) fn solve_relaxation(
    lp: &LinearProgram,
    lower: &[f64],
    upper: &[f64],
) -> Result<LpSolution, SolveError> {
    for (v, (&lo, &hi)) in lp.variables().iter().zip(lower.iter().zip(upper)) {
        if !lo.is_finite() || !hi.is_finite() || lo.is_nan() || hi.is_nan() {
            return Err(SolveError::InvalidBounds(v.name.clone()));
        }
        if lo > hi + FEASIBILITY_TOL * (1.0 + hi.abs()) {
            return Ok(LpSolution::infeasible(lp.num_vars()));
        }
    }

    let mut tab = Tableau::new(lp, lower, upper);

    if tab.first_artificial < tab.cols {
        let costs: Vec<f64> = (0..tab.cols)
            .map(|j| if j >= tab.first_artificial { -1.0 } else { 0.0 })
            .collect();
        tab.set_costs(&costs);
        tab.run(|_| true)?;
        let infeasibility: f64 = tab.x[tab.first_artificial..].iter().sum();
        let scale = 1.0 + lp.constraints().iter().map(|c| c.rhs.abs()).fold(0.0, f64::max);
        if infeasibility > FEASIBILITY_TOL * scale {
            return Ok(LpSolution::infeasible(lp.num_vars()));
        }
        for j in tab.first_artificial..tab.cols {
            tab.upper[j] = 0.0;
            if tab.basic_row[j] == NONBASIC {
                tab.x[j] = 0.0;
            }
        }
    }

    let mut costs = vec![0.0; tab.cols];
    costs[..lp.num_vars()].copy_from_slice(lp.objective());
    tab.set_costs(&costs);
    let first_artificial = tab.first_artificial;
    tab.run(|j| j < first_artificial)?;

    let values: Vec<f64> = (0..lp.num_vars())
        .map(|j| tab.x[j].clamp(lower[j], upper[j]))
        .collect();
    Ok(LpSolution {
        status: Status::Optimal,
        objective: lp.objective_value(&values),
        values,
    })
}

const NONBASIC: usize = usize::MAX;

/// Dense tableau `B^-1 A` over structural, slack and artificial columns.
struct Tableau {
    rows: usize,
    cols: usize,
    a: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    basic_row: Vec<usize>,
    reduced: Vec<f64>,
    first_artificial: usize,
}

impl Tableau {
    fn new(lp: &LinearProgram, lower: &[f64], upper: &[f64]) -> Self {
        let n = lp.num_vars();
        let m = lp.num_constraints();

        // Structurals start at their lower bounds; each row's residual decides
        // whether its slack can be basic or an artificial is needed.
        let start: Vec<f64> = lower.to_vec();
        let mut needs_artificial = Vec::with_capacity(m);
        let mut residuals = Vec::with_capacity(m);
        for c in lp.constraints() {
            let r = c.rhs - c.activity(&start);
            let slack_ok = match c.relation {
                Relation::Le => r >= 0.0,
                Relation::Ge => r <= 0.0,
                Relation::Eq => r == 0.0,
            };
            needs_artificial.push(!slack_ok);
            residuals.push(r);
        }
        let n_art = needs_artificial.iter().filter(|&&b| b).count();
        let cols = n + m + n_art;
        let first_artificial = n + m;

        let mut a = vec![0.0; m * cols];
        let mut lo = vec![0.0; cols];
        let mut hi = vec![0.0; cols];
        let mut x = vec![0.0; cols];
        let mut basis = vec![0; m];
        let mut basic_row = vec![NONBASIC; cols];

        lo[..n].copy_from_slice(lower);
        hi[..n].copy_from_slice(upper);
        x[..n].copy_from_slice(&start);

        let mut next_art = first_artificial;
        for (i, c) in lp.constraints().iter().enumerate() {
            let row = &mut a[i * cols..(i + 1) * cols];
            for &(v, coef) in &c.terms {
                row[v.index()] += coef;
            }
            let slack = n + i;
            row[slack] = 1.0;
            let (slo, shi) = match c.relation {
                Relation::Le => (0.0, f64::INFINITY),
                Relation::Ge => (f64::NEG_INFINITY, 0.0),
                Relation::Eq => (0.0, 0.0),
            };
            lo[slack] = slo;
            hi[slack] = shi;

            let r = residuals[i];
            if needs_artificial[i] {
                let sigma = if r >= 0.0 { 1.0 } else { -1.0 };
                let art = next_art;
                next_art += 1;
                row[art] = sigma;
                if sigma < 0.0 {
                    row.iter_mut().for_each(|v| *v = -*v);
                }
                lo[art] = 0.0;
                hi[art] = f64::INFINITY;
                x[art] = r.abs();
                basis[i] = art;
                basic_row[art] = i;
            } else {
                x[slack] = r;
                basis[i] = slack;
                basic_row[slack] = i;
            }
        }

        Tableau {
            rows: m,
            cols,
            a,
            lower: lo,
            upper: hi,
            x,
            basis,
            basic_row,
            reduced: vec![0.0; cols],
            first_artificial,
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.a[i * self.cols..(i + 1) * self.cols]
    }

    fn set_costs(&mut self, costs: &[f64]) {
        self.reduced.copy_from_slice(costs);
        for i in 0..self.rows {
            let cb = costs[self.basis[i]];
            if cb != 0.0 {
                let start = i * self.cols;
                for j in 0..self.cols {
                    self.reduced[j] -= cb * self.a[start + j];
                }
            }
        }
        for i in 0..self.rows {
            self.reduced[self.basis[i]] = 0.0;
        }
    }

    /// Primal simplex iterations until no improving column remains.
    fn run(&mut self, allowed: impl Fn(usize) -> bool) -> Result<(), SolveError> {
        let mut bland = false;
        let mut streak = 0usize;
        for _ in 0..MAX_ITERATIONS {
            let Some((q, dir)) = self.entering(&allowed, bland) else {
                return Ok(());
            };

            // Ratio test over basic variables.
            let mut best_t = f64::INFINITY;
            let mut best_row = NONBASIC;
            let mut best_alpha = 0.0f64;
            let mut best_to_upper = false;
            for i in 0..self.rows {
                let alpha = self.a[i * self.cols + q];
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                let b = self.basis[i];
                let rate = -dir * alpha;
                let (t, to_upper) = if rate < 0.0 {
                    if !self.lower[b].is_finite() {
                        continue;
                    }
                    (((self.x[b] - self.lower[b]) / -rate).max(0.0), false)
                } else {
                    if !self.upper[b].is_finite() {
                        continue;
                    }
                    (((self.upper[b] - self.x[b]) / rate).max(0.0), true)
                };
                let better = if t < best_t - 1e-12 {
                    true
                } else if t <= best_t + 1e-12 && best_row != NONBASIC {
                    if bland {
                        b < self.basis[best_row]
                    } else {
                        alpha.abs() > best_alpha.abs()
                    }
                } else {
                    false
                };
                if better {
                    best_t = t;
                    best_row = i;
                    best_alpha = alpha;
                    best_to_upper = to_upper;
                }
            }

            let span = self.upper[q] - self.lower[q];
            if !best_t.is_finite() && !span.is_finite() {
                return Err(SolveError::Unbounded);
            }
            let flip = span <= best_t;
            let step = if flip { span } else { best_t };

            if step < 1e-12 {
                streak += 1;
                if streak > DEGENERATE_STREAK {
                    bland = true;
                }
            } else {
                streak = 0;
            }

            if step > 0.0 {
                for i in 0..self.rows {
                    let alpha = self.a[i * self.cols + q];
                    if alpha != 0.0 {
                        self.x[self.basis[i]] -= dir * alpha * step;
                    }
                }
            }
            if flip {
                self.x[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
            } else {
                self.x[q] += dir * step;
                let leaving = self.basis[best_row];
                self.x[leaving] = if best_to_upper {
                    self.upper[leaving]
                } else {
                    self.lower[leaving]
                };
                self.pivot(best_row, q);
            }
        }
        Err(SolveError::IterationLimit(MAX_ITERATIONS))
    }

    fn entering(&self, allowed: &impl Fn(usize) -> bool, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.cols {
            if self.basic_row[j] != NONBASIC || !allowed(j) {
                continue;
            }
            let d = self.reduced[j];
            let dir = if d > OPTIMALITY_TOL && self.x[j] < self.upper[j] {
                1.0
            } else if d < -OPTIMALITY_TOL && self.x[j] > self.lower[j] {
                -1.0
            } else {
                continue;
            };
            if bland {
                return Some((j, dir));
            }
            if d.abs() > best_score {
                best_score = d.abs();
                best = Some((j, dir));
            }
        }
        best
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let cols = self.cols;
        let p = self.a[r * cols + q];
        let pivot_row: Vec<f64> = self.row(r).iter().map(|v| v / p).collect();
        self.a[r * cols..(r + 1) * cols].copy_from_slice(&pivot_row);
        self.a[r * cols + q] = 1.0;

        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.a[i * cols + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.a[i * cols..(i + 1) * cols];
            for (v, pr) in row.iter_mut().zip(&pivot_row) {
                *v -= f * pr;
            }
            row[q] = 0.0;
        }
        let f = self.reduced[q];
        if f != 0.0 {
            for (v, pr) in self.reduced.iter_mut().zip(&pivot_row) {
                *v -= f * pr;
            }
        }
        self.reduced[q] = 0.0;

        let leaving = self.basis[r];
        self.basic_row[leaving] = NONBASIC;
        self.basis[r] = q;
        self.basic_row[q] = r;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_bounded_variable() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", 0.0, 5.0);
        lp.add_objective(x, 1.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert_eq!(sol.value(x), 5.0);
        assert_eq!(sol.objective, 5.0);
    }

    #[test]
    fn two_variable_vertex() {
        // Vertices of {x+y<=4, x<=2}: (0,0) 0, (2,0) 6, (2,2) 10, (0,4) 8.
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", 0.0, 100.0);
        let y = lp.add_var("y", 0.0, 100.0);
        lp.add_objective(x, 3.0);
        lp.add_objective(y, 2.0);
        lp.add_constraint("cap", vec![(x, 1.0), (y, 1.0)], Relation::Le, 4.0);
        lp.add_constraint("xmax", vec![(x, 1.0)], Relation::Le, 2.0);
        let sol = solve_lp(&lp).unwrap();
        assert!((sol.value(x) - 2.0).abs() < 1e-9);
        assert!((sol.value(y) - 2.0).abs() < 1e-9);
        assert!((sol.objective - 10.0).abs() < 1e-9);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", -10.0, 10.0);
        lp.add_objective(x, 1.0);
        lp.add_constraint("lo", vec![(x, 1.0)], Relation::Ge, 3.0);
        lp.add_constraint("hi", vec![(x, 1.0)], Relation::Le, 1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, Status::Infeasible);
    }

    #[test]
    fn equality_rows_and_negative_rhs() {
        // max x - y, x + y = -1, x in [-5, 5], y in [-5, 5] -> x = 4, y = -5.
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", -5.0, 5.0);
        let y = lp.add_var("y", -5.0, 5.0);
        lp.add_objective(x, 1.0);
        lp.add_objective(y, -1.0);
        lp.add_constraint("sum", vec![(x, 1.0), (y, 1.0)], Relation::Eq, -1.0);
        let sol = solve_lp(&lp).unwrap();
        assert!((sol.value(x) - 4.0).abs() < 1e-9);
        assert!((sol.value(y) + 5.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_infinite_bounds_and_binaries() {
        let mut lp = LinearProgram::new();
        lp.add_var("x", 0.0, f64::INFINITY);
        assert!(matches!(solve_lp(&lp), Err(SolveError::InvalidBounds(_))));

        let mut lp = LinearProgram::new();
        lp.add_binary("b");
        assert!(matches!(solve_lp(&lp), Err(SolveError::BinaryInLp(_))));
    }

    #[test]
    fn fixed_variables_and_empty_rows() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", 2.0, 2.0);
        let y = lp.add_var("y", 0.0, 1.0);
        lp.add_objective(y, -1.0);
        lp.add_constraint("ge", vec![(x, 1.0), (y, 1.0)], Relation::Ge, 2.5);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.value(x), 2.0);
        assert!((sol.value(y) - 0.5).abs() < 1e-9);
    }
}
