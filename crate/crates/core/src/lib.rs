//! Soccer starting line-up optimization as a binary quadratic model.
//!
//! A roster of (player, position, rating) cells and a formation's quota
//! vector compile, via squared-penalty encoding with slack variables, into
//! a BQM whose minimum energy is the negated best total rating. Three
//! solvers are provided: an exact combinatorial oracle over the original
//! constraints, an exhaustive minimizer for small models, and a seeded
//! simulated annealer for assembled ones.
//!
//! All domain arithmetic runs on [`Dec`], an exact fixed-point decimal, so
//! optimal totals and energies are exact equalities rather than float
//! comparisons. The BQM and solver layers are generic over any [`Scalar`].

pub mod constraints;
pub mod qubo;
pub mod roster;
pub mod scalar;
pub mod solvers;
pub mod verify;

pub use constraints::{
    conflict_constraints, formation_constraints, Comparator, ConflictMode, ConstraintError,
    FormationSpec, LinearConstraint,
};
pub use qubo::{
    assemble, encode_equality, encode_inequality, extend_with_slacks, Bqm, PenaltyWeight,
    QuboError, SlackRegistry,
};
pub use roster::{
    build_variable_index, objective_coefficients, parse_roster, Position, RatingEntry,
    RatingTable, RosterError, VarId, VariableIndex,
};
pub use scalar::{Dec, DecParseError, Scalar};
pub use solvers::{
    exact_lineup, exhaustive_minimize, simulated_anneal, AnnealParams, Sample, SolveError,
    EXHAUSTIVE_CAP,
};
pub use verify::{
    check_feasibility, compare, decode_lineup, parse_lineup_csv, ConstraintCheck,
    FeasibilityReport, LineupDiff, LineupSolution, Pick, VerifyError,
};

/// Integer-coefficient model of a single squared penalty term.
pub type PenaltyBqm = Bqm<i64>;

/// The assembled model `−objective + λ·penalties` on the exact decimal grid.
pub type AssembledBqm = Bqm<Dec>;

/// Bundled data: the 43-cell rating table of the Liverpool FC 2020/21 case
/// study, the two formation specs it was solved for, and the published
/// line-ups (ours and the earlier classical-solver reference) as fixtures.
pub mod bundled {
    pub const RATINGS_CSV: &str = include_str!("../fixtures/liverpool_ratings.csv");
    pub const FORMATION_433_JSON: &str = include_str!("../fixtures/formation_433.json");
    pub const FORMATION_4231_JSON: &str = include_str!("../fixtures/formation_4231.json");
    pub const LINEUP_433_CSV: &str = include_str!("../fixtures/lineup_433.csv");
    pub const LINEUP_433_REFERENCE_CSV: &str = include_str!("../fixtures/lineup_433_reference.csv");
    pub const LINEUP_4231_CSV: &str = include_str!("../fixtures/lineup_4231.csv");
    pub const LINEUP_4231_REFERENCE_CSV: &str =
        include_str!("../fixtures/lineup_4231_reference.csv");
}
