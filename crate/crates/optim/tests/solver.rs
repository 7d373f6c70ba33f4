use evagg_optim::{solve_lp, solve_milp, LinearProgram, Relation, Status, VarId};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// max c.x s.t. A x <= b, 0 <= x <= u with b >= 0 so x = 0 is feasible.
struct Primal {
    c: Vec<f64>,
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    u: Vec<f64>,
}

fn random_primal(rng: &mut ChaCha8Rng) -> Primal {
    let n = rng.gen_range(2..7);
    let m = rng.gen_range(1..6);
    Primal {
        c: (0..n).map(|_| rng.gen_range(-5.0..10.0)).collect(),
        a: (0..m)
            .map(|_| (0..n).map(|_| rng.gen_range(-2.0..4.0)).collect())
            .collect(),
        b: (0..m).map(|_| rng.gen_range(0.0..20.0)).collect(),
        u: (0..n).map(|_| rng.gen_range(0.5..8.0)).collect(),
    }
}

fn primal_lp(p: &Primal) -> LinearProgram {
    let mut lp = LinearProgram::new();
    let xs: Vec<VarId> = p
        .u
        .iter()
        .enumerate()
        .map(|(j, &u)| lp.add_var(format!("x{j}"), 0.0, u))
        .collect();
    for (&x, &c) in xs.iter().zip(&p.c) {
        lp.add_objective(x, c);
    }
    for (i, row) in p.a.iter().enumerate() {
        let terms = xs.iter().copied().zip(row.iter().copied()).collect();
        lp.add_constraint(format!("r{i}"), terms, Relation::Le, p.b[i]);
    }
    lp
}

/// min b.y + u.z s.t. A^T y + z >= c, y, z >= 0, written as a maximization of
/// the negated objective.
fn dual_lp(p: &Primal) -> LinearProgram {
    const BIG: f64 = 1e6;
    let mut lp = LinearProgram::new();
    let ys: Vec<VarId> = (0..p.b.len())
        .map(|i| lp.add_var(format!("y{i}"), 0.0, BIG))
        .collect();
    let zs: Vec<VarId> = (0..p.u.len())
        .map(|j| lp.add_var(format!("z{j}"), 0.0, BIG))
        .collect();
    for (&y, &b) in ys.iter().zip(&p.b) {
        lp.add_objective(y, -b);
    }
    for (&z, &u) in zs.iter().zip(&p.u) {
        lp.add_objective(z, -u);
    }
    for j in 0..p.u.len() {
        let mut terms: Vec<(VarId, f64)> = ys.iter().enumerate().map(|(i, &y)| (y, p.a[i][j])).collect();
        terms.push((zs[j], 1.0));
        lp.add_constraint(format!("d{j}"), terms, Relation::Ge, p.c[j]);
    }
    lp
}

#[test]
fn strong_duality_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..200 {
        let p = random_primal(&mut rng);
        let primal = solve_lp(&primal_lp(&p)).unwrap();
        let dual = solve_lp(&dual_lp(&p)).unwrap();
        assert_eq!(primal.status, Status::Optimal, "case {case}");
        assert_eq!(dual.status, Status::Optimal, "case {case}");
        let gap = (primal.objective + dual.objective).abs();
        assert!(gap < 1e-6, "case {case}: primal {} dual {}", primal.objective, -dual.objective);
        assert!(primal_lp(&p).max_violation(&primal.values) < 1e-7);
    }
}

/// Random mixed instance: `nb` binaries plus two continuous variables.
fn random_mixed(rng: &mut ChaCha8Rng, nb: usize) -> LinearProgram {
    let mut lp = LinearProgram::new();
    let mut vars = Vec::new();
    for i in 0..nb {
        vars.push(lp.add_binary(format!("b{i}")));
    }
    vars.push(lp.add_var("x", 0.0, rng.gen_range(1.0..5.0)));
    vars.push(lp.add_var("y", -2.0, rng.gen_range(0.0..5.0)));
    for &v in &vars {
        lp.add_objective(v, rng.gen_range(-3.0..8.0));
    }
    for r in 0..rng.gen_range(2..5) {
        let terms = vars.iter().map(|&v| (v, rng.gen_range(-1.0..4.0))).collect();
        lp.add_constraint(format!("k{r}"), terms, Relation::Le, rng.gen_range(2.0..12.0));
    }
    // Couple x to the first binary like an on/off power offer.
    lp.add_constraint("link", vec![(vars[nb], 1.0), (vars[0], -5.0)], Relation::Le, 0.0);
    lp
}

/// Best objective over all binary assignments, each completed by an LP solve.
fn enumerate(lp: &LinearProgram) -> Option<f64> {
    let bins: Vec<VarId> = lp.binaries().collect();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << bins.len()) {
        let mut fixed = lp.clone();
        for (k, &b) in bins.iter().enumerate() {
            let v = f64::from((mask >> k) & 1);
            fixed.set_bounds(b, v, v);
        }
        let mut relaxed = LinearProgram::new();
        for v in fixed.variables() {
            relaxed.add_var(v.name.clone(), v.lower, v.upper);
        }
        for (id, &c) in fixed.var_ids().zip(fixed.objective()) {
            relaxed.add_objective(id, c);
        }
        for c in fixed.constraints() {
            relaxed.add_constraint(c.name.clone(), c.terms.clone(), c.relation, c.rhs);
        }
        let sol = solve_lp(&relaxed).unwrap();
        if sol.is_optimal() {
            best = Some(best.map_or(sol.objective, |b: f64| b.max(sol.objective)));
        }
    }
    best
}

#[test]
fn milp_matches_enumeration_with_ten_binaries() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..12 {
        let lp = random_mixed(&mut rng, 10);
        let sol = solve_milp(&lp).unwrap();
        match enumerate(&lp) {
            Some(best) => {
                assert_eq!(sol.status, Status::Optimal, "case {case}");
                assert!((sol.objective - best).abs() < 1e-6, "case {case}: {} vs {best}", sol.objective);
                assert!(lp.max_violation(&sol.values) < 1e-7);
                for b in lp.binaries() {
                    let v = sol.value(b);
                    assert!(v == 0.0 || v == 1.0);
                }
            }
            None => assert_eq!(sol.status, Status::Infeasible, "case {case}"),
        }
    }
}

#[test]
fn solver_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let lp = random_mixed(&mut rng, 6);
    let a = solve_milp(&lp).unwrap();
    let b = solve_milp(&lp).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn milp_dominates_every_feasible_assignment(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lp = random_mixed(&mut rng, 4);
        let sol = solve_milp(&lp).unwrap();
        if let Some(best) = enumerate(&lp) {
            prop_assert!(sol.is_optimal());
            prop_assert!(sol.objective >= best - 1e-6);
            prop_assert!(lp.max_violation(&sol.values) < 1e-7);
        } else {
            prop_assert_eq!(sol.status, Status::Infeasible);
        }
    }
}
