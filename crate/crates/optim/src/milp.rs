use crate::simplex::solve_relaxation;
use crate::{LinearProgram, LpSolution, SolveError, Status, INTEGRALITY_TOL, PRUNE_GAP};

#[derive(Debug, Clone)]
pub struct MilpOptions {
    pub node_limit: usize,
}

impl Default for MilpOptions {
    fn default() -> Self {
        MilpOptions { node_limit: 200_000 }
    }
}

pub fn solve_milp(lp: &LinearProgram) -> Result<LpSolution, SolveError> {
    solve_milp_with(lp, &MilpOptions::default())
}

struct Node {
    lower: Vec<f64>,
    upper: Vec<f64>,
    relaxation: LpSolution,
}

/// Depth-first branch and bound over the binaries of `lp`.
///
/// Branches on the lowest-index fractional binary. Both children are solved
/// when created and the one with the better relaxation bound is explored
/// first.
pub fn solve_milp_with(lp: &LinearProgram, opts: &MilpOptions) -> Result<LpSolution, SolveError> {
    let lower: Vec<f64> = lp.variables().iter().map(|v| v.lower).collect();
    let upper: Vec<f64> = lp.variables().iter().map(|v| v.upper).collect();
    let binaries: Vec<usize> = lp.binaries().map(|v| v.index()).collect();

    let root = solve_relaxation(lp, &lower, &upper)?;
    if root.status != Status::Optimal {
        return Ok(root);
    }

    let mut incumbent: Option<LpSolution> = None;
    let mut stack = vec![Node {
        lower,
        upper,
        relaxation: root,
    }];
    let mut nodes = 1usize;

    while let Some(node) = stack.pop() {
        if let Some(best) = &incumbent {
            if node.relaxation.objective <= best.objective + PRUNE_GAP {
                continue;
            }
        }

        let fractional = binaries.iter().copied().find(|&j| {
            let v = node.relaxation.values[j];
            (v - v.round()).abs() > INTEGRALITY_TOL
        });

        let Some(j) = fractional else {
            let mut sol = node.relaxation;
            for &b in &binaries {
                sol.values[b] = sol.values[b].round();
            }
            sol.objective = lp.objective_value(&sol.values);
            incumbent = Some(sol);
            continue;
        };

        let mut children = Vec::with_capacity(2);
        for fixed in [0.0, 1.0] {
            let mut lo = node.lower.clone();
            let mut hi = node.upper.clone();
            lo[j] = fixed;
            hi[j] = fixed;
            let relaxation = solve_relaxation(lp, &lo, &hi)?;
            nodes += 1;
            if relaxation.status == Status::Optimal {
                children.push(Node {
                    lower: lo,
                    upper: hi,
                    relaxation,
                });
            }
        }
        if nodes > opts.node_limit {
            return Err(SolveError::NodeLimit {
                limit: opts.node_limit,
                incumbent: incumbent.map(Box::new),
            });
        }
        // Worse child first so the better one is popped next.
        children.sort_by(|a, b| a.relaxation.objective.total_cmp(&b.relaxation.objective));
        stack.extend(children);
    }

    Ok(incumbent.unwrap_or_else(|| LpSolution::infeasible(lp.num_vars())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Relation;

    #[test]
    fn lone_binary_goes_to_one() {
        let mut lp = LinearProgram::new();
        let b = lp.add_binary("b");
        lp.add_objective(b, 1.0);
        let sol = solve_milp(&lp).unwrap();
        assert_eq!(sol.value(b), 1.0);
    }

    #[test]
    fn knapsack_pair() {
        // (a,b) in {0,1}^2 with 2a+3b<=4: (0,0)=0, (1,0)=5, (0,1)=4, (1,1) infeasible.
        let mut lp = LinearProgram::new();
        let a = lp.add_binary("a");
        let b = lp.add_binary("b");
        lp.add_objective(a, 5.0);
        lp.add_objective(b, 4.0);
        lp.add_constraint("w", vec![(a, 2.0), (b, 3.0)], Relation::Le, 4.0);
        let sol = solve_milp(&lp).unwrap();
        assert_eq!((sol.value(a), sol.value(b)), (1.0, 0.0));
        assert!((sol.objective - 5.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_integer_program() {
        // 0.4 <= b <= 0.6 has a feasible relaxation but no integral point.
        let mut lp = LinearProgram::new();
        let b = lp.add_binary("b");
        lp.add_constraint("lo", vec![(b, 1.0)], Relation::Ge, 0.4);
        lp.add_constraint("hi", vec![(b, 1.0)], Relation::Le, 0.6);
        assert_eq!(solve_milp(&lp).unwrap().status, Status::Infeasible);
    }

    #[test]
    fn node_limit_reports_incumbent() {
        let mut lp = LinearProgram::new();
        let vars: Vec<_> = (0..8).map(|i| lp.add_binary(format!("b{i}"))).collect();
        for &v in &vars {
            lp.add_objective(v, 1.0);
        }
        lp.add_constraint(
            "half",
            vars.iter().map(|&v| (v, 2.0)).collect(),
            Relation::Le,
            7.0,
        );
        let err = solve_milp_with(&lp, &MilpOptions { node_limit: 3 }).unwrap_err();
        assert!(matches!(err, SolveError::NodeLimit { limit: 3, .. }));
    }
}
