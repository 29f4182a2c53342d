//! Temporary instrumentation for annealer convergence statistics.

use lineup_core::{
    assemble, build_variable_index, conflict_constraints, formation_constraints,
    objective_coefficients, parse_roster, simulated_anneal, AnnealParams, ConflictMode, Dec,
    FormationSpec, PenaltyWeight, bundled,
};

#[test]
#[ignore]
fn probe_read_statistics() {
    let table = parse_roster(bundled::RATINGS_CSV).unwrap();
    let index = build_variable_index(&table).unwrap();
    let objective = objective_coefficients(&index, &table);
    let spec = FormationSpec::from_json(bundled::FORMATION_433_JSON).unwrap();
    let eqs = formation_constraints(&spec, &index).unwrap();
    let ineqs = conflict_constraints(&index, ConflictMode::PaperExact).unwrap();
    let (bqm, _) = assemble(
        &objective,
        &eqs,
        &ineqs,
        PenaltyWeight::default(),
        ConflictMode::PaperExact,
    )
    .unwrap();
    let optimum: Dec = "-82.67".parse().unwrap();

    for (sweeps, hot, cold) in [
        (2000usize, 0.01, 10.0),
        (2000, 0.001, 10.0),
        (2000, 0.01, 1.0),
        (2000, 0.001, 1.0),
        (2000, 0.0001, 0.3),
        (8000, 0.01, 10.0),
        (500, 0.01, 10.0),
    ] {
        let params = AnnealParams {
            num_reads: 256,
            sweeps_per_read: sweeps,
            beta_hot: hot,
            beta_cold: cold,
            seed: 1,
        };
        let t = std::time::Instant::now();
        let samples = simulated_anneal(&bqm, &params).unwrap();
        let hits = samples.iter().filter(|s| s.energy == optimum).count();
        let spread: Vec<String> = samples.iter().take(5).map(|s| s.energy.to_string()).collect();
        println!(
            "sweeps {sweeps:5} beta {hot:>7}->{cold:<4}: {hits:3}/256 reads optimal, best5 {spread:?} ({:?})",
            t.elapsed()
        );
    }
}
