mod common;

use common::{manufactured, perturbed, target_of};
use mlab_core::shooting::{solve_bvp, SeedGrid, SolutionRecord, SolverOptions};
use mlab_core::StructureParams;

fn same(a: &mlab_core::ExtremalParams, b: &mlab_core::ExtremalParams) -> bool {
    let close = |x: f64, y: f64| (x - y).abs() <= 1e-6 * x.abs().max(y.abs()).max(1.0);
    close(a.theta0, b.theta0) && close(a.lambda.log_mag, b.lambda.log_mag) && close(a.t_end, b.t_end)
}

#[test]
fn refining_the_seeds_never_loses_a_solution() {
    let s = StructureParams::new(5, 0.2).unwrap();
    let (truth, tr) = manufactured(&s);
    let mut opts = SolverOptions::new(&s);
    opts.target = target_of(&tr);
    let coarse: Vec<_> = [[2.0, 2.0, 2.0], [-3.0, 1.0, 2.0]].iter().map(|d| perturbed(&truth, *d)).collect();
    let mut fine = coarse.clone();
    fine.extend(SeedGrid::around_candidate(&s, 3, 3, 2).seeds(-1).unwrap());
    fine.extend([[1.0, -2.0, 0.5], [0.0, 4.0, -1.0]].iter().map(|d| perturbed(&truth, *d)));

    let a = solve_bvp(&s, &coarse, &opts).unwrap();
    let b = solve_bvp(&s, &fine, &opts).unwrap();
    assert!(!a.solutions.is_empty());
    for x in &a.solutions {
        assert!(b.solutions.iter().any(|y| same(&x.ep, &y.ep)), "lost {:?}", x.ep);
    }
    // The coarse seeds come first in the refined run and are solved identically.
    for (x, y) in a.attempts.iter().zip(&b.attempts) {
        assert_eq!(x.trace, y.trace);
    }
}

#[test]
fn solve_is_deterministic() {
    let s = StructureParams::new(5, 0.1).unwrap();
    let seeds = SeedGrid::around_candidate(&s, 3, 3, 1).seeds(-1).unwrap();
    let opts = SolverOptions::new(&s);
    let a = solve_bvp(&s, &seeds, &opts).unwrap();
    let b = solve_bvp(&s, &seeds, &opts).unwrap();
    assert_eq!(a.attempts.len(), seeds.len());
    for (x, y) in a.attempts.iter().zip(&b.attempts) {
        assert_eq!(x.trace, y.trace);
        assert_eq!(x.best, y.best);
        assert_eq!(x.failure, y.failure);
    }
}

#[test]
fn solution_record_round_trips() {
    let s = StructureParams::new(7, 0.2).unwrap();
    let (truth, tr) = manufactured(&s);
    let mut opts = SolverOptions::new(&s);
    opts.target = target_of(&tr);
    let out = solve_bvp(&s, &[perturbed(&truth, [1.0, 1.0, 1.0])], &opts).unwrap();
    let rec = SolutionRecord::new(&s, &out.solutions[0], Some("diag.json".into()));
    let json = serde_json::to_string(&rec).unwrap();
    assert!(json.contains("\"T\":"));
    let back: SolutionRecord = serde_json::from_str(&json).unwrap();
    assert_eq!(back, rec);
    assert_eq!(back.params().unwrap(), out.solutions[0].ep);
}
