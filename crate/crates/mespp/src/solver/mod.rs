//! Solving models: LP serialization, an external-solver subprocess driver,
//! and the exhaustive enumeration baseline.

mod enumeration;
mod external;
mod lp;

pub use enumeration::{
    count_searcher_paths, estimate_joint_paths, solve_enumeration, solve_enumeration_with_fixed,
    EnumerationOutcome, DEFAULT_ENUMERATION_CAP,
};
pub use external::{
    decode_paths, parse_solution_file, solve_external, SolveResult, SolveStatus, SolverBackend,
    SolverSpec, TMPDIR_ENV,
};
pub use lp::{parse_lp, write_lp, ParsedConstraint, ParsedLp, Sense};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::{evaluate_joint_plan, BeliefVector, CaptureConfig, CaptureMode};
    use crate::error::Error;
    use crate::graph::Graph;
    use crate::instance::Instance;
    use crate::milp::{build_sv_model, fix_searcher_path, Relation, VarKind};
    use std::collections::BTreeMap;
    use std::io::Write as _;
    use std::time::Duration;

    fn path_graph(n: usize) -> Graph {
        let edges: Vec<_> = (1..n).map(|v| (v, v + 1)).collect();
        Graph::from_edges(n, &edges).unwrap()
    }

    fn sweep_instance() -> Instance {
        Instance::builder(path_graph(3))
            .starts(vec![1])
            .capture(CaptureConfig::perfect(CaptureMode::SameVertex, 1).unwrap())
            .stationary_target()
            .initial_belief(BeliefVector::uniform_over(3, &[2, 3]).unwrap())
            .deadline(2)
            .horizon(2)
            .discount(1.0)
            .build()
            .unwrap()
    }

    #[test]
    fn lp_text_shape() {
        let instance = sweep_instance();
        let model = build_sv_model(&instance).unwrap();
        let text = write_lp(&model);
        assert!(text.contains("Maximize"));
        assert!(text.contains("Subject To"));
        assert!(text.contains("Bounds"));
        assert!(text.contains("Binary"));
        assert!(text.contains("x_1_0_1 = 1"));
        assert!(text.ends_with("End\n"));
    }

    #[test]
    fn lp_objective_carries_discount_powers() {
        let mut instance = sweep_instance();
        instance.discount = 0.99;
        let model = build_sv_model(&instance).unwrap();
        let text = write_lp(&model);
        assert!(text.contains("1 beta_0_c"));
        assert!(text.contains("0.99 beta_1_c"));
        assert!(text.contains("0.9801 beta_2_c"));
    }

    #[test]
    fn lp_writer_is_deterministic() {
        let instance = sweep_instance();
        let a = write_lp(&build_sv_model(&instance).unwrap());
        let b = write_lp(&build_sv_model(&instance).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn lp_roundtrip_preserves_rows() {
        let instance = sweep_instance();
        let model = build_sv_model(&instance).unwrap();
        let parsed = parse_lp(&write_lp(&model)).unwrap();

        assert_eq!(parsed.sense, Sense::Maximize);
        assert_eq!(parsed.objective.len(), model.objective().terms().len());
        for (&(var, coef), (name, parsed_coef)) in
            model.objective().terms().iter().zip(&parsed.objective)
        {
            assert_eq!(&model.var(var).name.to_string(), name);
            assert_eq!(coef, *parsed_coef);
        }

        assert_eq!(parsed.constraints.len(), model.constraints().len());
        for (row, parsed_row) in model.constraints().iter().zip(&parsed.constraints) {
            assert_eq!(Some(row.name.as_str()), parsed_row.name.as_deref());
            assert_eq!(row.relation, parsed_row.relation);
            assert_eq!(row.rhs, parsed_row.rhs);
            assert_eq!(row.expr.terms().len(), parsed_row.terms.len());
            for (&(var, coef), (name, parsed_coef)) in
                row.expr.terms().iter().zip(&parsed_row.terms)
            {
                assert_eq!(&model.var(var).name.to_string(), name);
                assert_eq!(coef, *parsed_coef);
            }
        }

        let binaries = model
            .vars()
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .count();
        assert_eq!(parsed.binaries.len(), binaries);
        assert_eq!(parsed.bounds.len(), model.vars().len() - binaries);
        assert_eq!(parsed.columns.len(), model.vars().len());
    }

    #[test]
    fn lp_parser_accepts_implicit_coefficients() {
        let parsed = parse_lp(
            "Maximize\n obj: x + 2 y\nSubject To\n c1: x + y <= 4\n c2: 2 x - y >= -2\nBounds\n 0 <= y <= 3\nBinary\n x\nEnd\n",
        )
        .unwrap();
        assert_eq!(parsed.objective, vec![("x".into(), 1.0), ("y".into(), 2.0)]);
        assert_eq!(parsed.constraints[1].rhs, -2.0);
        assert_eq!(parsed.constraints[1].relation, Relation::Ge);
        assert_eq!(parsed.constraints[1].terms[1], ("y".into(), -1.0));
    }

    #[test]
    fn enumeration_fixture_path_counts() {
        let instance = sweep_instance();
        let outcome = solve_enumeration(&instance, 1000).unwrap();
        assert_eq!(outcome.leaves, 5);
        assert_eq!(outcome.result.status, SolveStatus::Optimal);
        assert!((outcome.result.objective.unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(outcome.plan.path(1), &[1, 2, 3]);

        let duo = Instance::builder(path_graph(3))
            .starts(vec![1, 1])
            .capture(CaptureConfig::perfect(CaptureMode::SameVertex, 2).unwrap())
            .stationary_target()
            .initial_belief(BeliefVector::uniform_over(3, &[2, 3]).unwrap())
            .deadline(2)
            .horizon(2)
            .discount(1.0)
            .build()
            .unwrap();
        let outcome = solve_enumeration(&duo, 1000).unwrap();
        assert_eq!(outcome.leaves, 25);
    }

    #[test]
    fn enumeration_leaf_count_matches_independent_recursion() {
        fn recursive_count(g: &Graph, at: usize, remaining: usize) -> u128 {
            if remaining == 0 {
                return 1;
            }
            g.neighbors_closed(at)
                .unwrap()
                .iter()
                .map(|&to| recursive_count(g, to, remaining - 1))
                .sum()
        }
        let grid = Graph::grid(3, 3).unwrap();
        let instance = Instance::builder(grid.clone())
            .starts(vec![5, 1])
            .capture(CaptureConfig::perfect(CaptureMode::SameVertex, 2).unwrap())
            .stationary_target()
            .initial_belief(BeliefVector::uniform_over(9, &[3, 7]).unwrap())
            .deadline(3)
            .horizon(3)
            .discount(0.99)
            .build()
            .unwrap();
        let expected = recursive_count(&grid, 5, 3) * recursive_count(&grid, 1, 3);
        let outcome = solve_enumeration(&instance, 1_000_000).unwrap();
        assert_eq!(outcome.leaves as u128, expected);
        assert_eq!(
            estimate_joint_paths(&instance, &[None, None]).unwrap(),
            expected
        );
    }

    #[test]
    fn enumeration_respects_cap() {
        let instance = Instance::builder(Graph::grid(4, 4).unwrap())
            .starts(vec![1, 16])
            .capture(CaptureConfig::perfect(CaptureMode::SameVertex, 2).unwrap())
            .stationary_target()
            .initial_belief(BeliefVector::uniform_over(16, &[6]).unwrap())
            .deadline(6)
            .horizon(6)
            .discount(1.0)
            .build()
            .unwrap();
        let err = solve_enumeration(&instance, 100).unwrap_err();
        assert!(matches!(
            err,
            Error::EnumerationCapExceeded { estimate, cap: 100 } if estimate > 100
        ));
    }

    #[test]
    fn enumeration_with_fixed_teammate() {
        let duo = Instance::builder(path_graph(3))
            .starts(vec![2, 2])
            .capture(CaptureConfig::perfect(CaptureMode::SameVertex, 2).unwrap())
            .stationary_target()
            .initial_belief(BeliefVector::uniform_over(3, &[1, 3]).unwrap())
            .deadline(1)
            .horizon(1)
            .discount(1.0)
            .build()
            .unwrap();
        let fixed = vec![Some(vec![2, 1]), None];
        let outcome = solve_enumeration_with_fixed(&duo, &fixed, 1000).unwrap();
        // Only searcher 2's three moves are expanded.
        assert_eq!(outcome.leaves, 3);
        assert_eq!(outcome.plan.path(1), &[2, 1]);
        assert_eq!(outcome.plan.path(2), &[2, 3]);
        assert!((outcome.result.objective.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn decode_reads_pinned_plan() {
        let instance = sweep_instance();
        let model = build_sv_model(&instance).unwrap();
        let mut assignment = BTreeMap::new();
        assignment.insert("x_1_0_1".to_string(), 1.0);
        assignment.insert("x_1_1_2".to_string(), 0.6);
        assignment.insert("x_1_1_1".to_string(), 0.4);
        assignment.insert("x_1_2_3".to_string(), 1.0);
        let result = SolveResult {
            status: SolveStatus::Optimal,
            objective: Some(1.5),
            assignment,
            mip_gap: Some(0.0),
            wall_time: Duration::default(),
            solver: "test".into(),
            diagnostics: String::new(),
        };
        let plan = decode_paths(&instance, &model, &result).unwrap();
        assert_eq!(plan.path(1), &[1, 2, 3]);
    }

    #[test]
    fn decode_rejects_degenerate_incumbents() {
        let instance = sweep_instance();
        let model = build_sv_model(&instance).unwrap();
        let mut assignment = BTreeMap::new();
        assignment.insert("x_1_0_1".to_string(), 1.0);
        assignment.insert("x_1_1_1".to_string(), 0.5);
        assignment.insert("x_1_1_2".to_string(), 0.5);
        assignment.insert("x_1_2_3".to_string(), 1.0);
        let result = SolveResult {
            status: SolveStatus::Optimal,
            objective: None,
            assignment,
            mip_gap: Some(0.0),
            wall_time: Duration::default(),
            solver: "test".into(),
            diagnostics: String::new(),
        };
        assert!(matches!(
            decode_paths(&instance, &model, &result),
            Err(Error::Decode { .. })
        ));
    }

    fn fake_solver_command(dir: &std::path::Path, body: &str) -> String {
        let script = dir.join("fake_solver.sh");
        let mut file = std::fs::File::create(&script).unwrap();
        writeln!(file, "#!/bin/sh").unwrap();
        writeln!(file, "{body}").unwrap();
        format!("/bin/sh {} {{lp}} {{sol}}", script.display())
    }

    #[test]
    fn external_solver_roundtrip_with_stub() {
        let instance = sweep_instance();
        let model = build_sv_model(&instance).unwrap();
        let plan = crate::belief::JointPlan::new(vec![vec![1, 2, 3]]).unwrap();
        let oracle = evaluate_joint_plan(&instance, &plan).unwrap().reward;

        let dir = tempfile::tempdir().unwrap();
        // The stub replays the known optimum for the sweep fixture.
        let command = fake_solver_command(
            dir.path(),
            "cat > \"$2\" <<EOF\nstatus optimal\nobjective 1.5\ngap 0\nx_1_0_1 1\nx_1_1_2 1\nx_1_2_3 1\nEOF",
        );
        let spec = SolverSpec::external(command).with_timeout(Duration::from_secs(5));
        let result = solve_external(&model, &spec).unwrap();
        assert_eq!(result.status, SolveStatus::Optimal);
        assert!((result.objective.unwrap() - oracle).abs() < 1e-9);
        let decoded = decode_paths(&instance, &model, &result).unwrap();
        assert_eq!(decoded.path(1), &[1, 2, 3]);
    }

    #[test]
    fn external_solver_reports_infeasible() {
        let instance = sweep_instance();
        let model = build_sv_model(&instance).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let command = fake_solver_command(dir.path(), "printf 'status infeasible\\n' > \"$2\"");
        let spec = SolverSpec::external(command).with_timeout(Duration::from_secs(5));
        let result = solve_external(&model, &spec).unwrap();
        assert_eq!(result.status, SolveStatus::Infeasible);
        assert!(result.objective.is_none());
    }

    #[test]
    fn external_solver_flags_nonzero_exit() {
        let instance = sweep_instance();
        let model = build_sv_model(&instance).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let command = fake_solver_command(dir.path(), "echo boom >&2; exit 3");
        let spec = SolverSpec::external(command).with_timeout(Duration::from_secs(5));
        let result = solve_external(&model, &spec).unwrap();
        assert_eq!(result.status, SolveStatus::Error);
        assert!(result.diagnostics.contains("boom"));
    }

    #[test]
    fn external_solver_kills_runaways() {
        let instance = sweep_instance();
        let model = build_sv_model(&instance).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let command = fake_solver_command(dir.path(), "sleep 30");
        let spec = SolverSpec::external(command).with_timeout(Duration::from_secs(1));
        let result = solve_external(&model, &spec).unwrap();
        assert_eq!(result.status, SolveStatus::Error);
        assert!(result.diagnostics.contains("killed"));
    }

    #[test]
    fn external_solver_objective_recomputed_from_incumbent() {
        let instance = sweep_instance();
        let model = build_sv_model(&instance).unwrap();
        let dir = tempfile::tempdir().unwrap();
        // No objective line: the driver recomputes it from the assignment.
        let command = fake_solver_command(
            dir.path(),
            "cat > \"$2\" <<EOF\nbeta_0_c 0\nbeta_1_c 0.5\nbeta_2_c 1\nx_1_0_1 1\nEOF",
        );
        let spec = SolverSpec::external(command).with_timeout(Duration::from_secs(5));
        let result = solve_external(&model, &spec).unwrap();
        assert_eq!(result.status, SolveStatus::Optimal);
        assert!((result.objective.unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn fixed_model_is_a_complete_pin() {
        // With every searcher pinned, decode must return exactly the pinned
        // plan once a solver echoes the fixed variables.
        let instance = sweep_instance();
        let model = build_sv_model(&instance).unwrap();
        let fixed = fix_searcher_path(&model, &instance, 1, &[1, 2, 2]).unwrap();
        let mut assignment = BTreeMap::new();
        for constraint in fixed.constraints() {
            if let Some(rest) = constraint.name.strip_prefix("fix_") {
                let mut parts = rest.split('_');
                let (s, t, v) = (
                    parts.next().unwrap(),
                    parts.next().unwrap(),
                    parts.next().unwrap(),
                );
                assignment.insert(format!("x_{s}_{t}_{v}"), constraint.rhs);
            }
        }
        let result = SolveResult {
            status: SolveStatus::Optimal,
            objective: None,
            assignment,
            mip_gap: Some(0.0),
            wall_time: Duration::default(),
            solver: "test".into(),
            diagnostics: String::new(),
        };
        let plan = decode_paths(&instance, &fixed, &result).unwrap();
        assert_eq!(plan.path(1), &[1, 2, 2]);
    }
}
