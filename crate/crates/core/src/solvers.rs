//! Minimum-energy search: an exact combinatorial oracle over the original
//! constrained problem, an exhaustive minimizer for small models, and a
//! seeded simulated annealer for the assembled ones.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::constraints::{Comparator, ConstraintError, FormationSpec, LinearConstraint};
use crate::roster::{Position, RatingTable, VarId, VariableIndex};
use crate::scalar::{Dec, Scalar};
use crate::qubo::Bqm;
use crate::verify::{LineupSolution, Pick};

/// Hard cap on exhaustive enumeration: 2^25 energy evaluations.
pub const EXHAUSTIVE_CAP: usize = 25;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("infeasible: {detail}")]
    Infeasible { detail: String },
    #[error("{num_vars} variables exceed the exhaustive cap of {cap}; use the annealer")]
    TooLarge { num_vars: usize, cap: usize },
    #[error("invalid annealing parameters: {0}")]
    BadParams(String),
    #[error("the exact solver supports at most 128 distinct players, got {0}")]
    TooManyPlayers(usize),
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
}

/// One assignment with its energy; the energy always equals the model's
/// energy of the bits it was sampled from.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<S> {
    pub bits: Vec<bool>,
    pub energy: S,
}

/// Annealer schedule and restart parameters. The beta schedule is geometric
/// from `beta_hot` to `beta_cold` across the sweeps of one read.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnealParams {
    pub num_reads: usize,
    pub sweeps_per_read: usize,
    pub beta_hot: f64,
    pub beta_cold: f64,
    pub seed: u64,
}

impl Default for AnnealParams {
    fn default() -> AnnealParams {
        AnnealParams {
            num_reads: 64,
            sweeps_per_read: 2000,
            beta_hot: 0.01,
            beta_cold: 10.0,
            seed: 1,
        }
    }
}

impl AnnealParams {
    pub fn validate(&self) -> Result<(), SolveError> {
        if self.num_reads == 0 {
            return Err(SolveError::BadParams("num_reads must be at least 1".into()));
        }
        if !(self.beta_hot.is_finite() && self.beta_hot > 0.0) {
            return Err(SolveError::BadParams(format!(
                "beta_hot must be positive, got {}",
                self.beta_hot
            )));
        }
        if !(self.beta_cold.is_finite() && self.beta_cold > self.beta_hot) {
            return Err(SolveError::BadParams(format!(
                "beta_cold must exceed beta_hot, got {} <= {}",
                self.beta_cold, self.beta_hot
            )));
        }
        Ok(())
    }
}

/// Neighbor lists for O(degree) single-flip energy deltas.
struct Adjacency<S> {
    linear: Vec<S>,
    neighbors: Vec<Vec<(usize, S)>>,
}

impl<S: Scalar> Adjacency<S> {
    fn new(bqm: &Bqm<S>) -> Adjacency<S> {
        let n = bqm.num_vars();
        let linear: Vec<S> = (1..=n as u32).map(|i| bqm.linear(VarId::new(i))).collect();
        let mut neighbors = vec![Vec::new(); n];
        for (a, b, w) in bqm.quadratic_terms() {
            neighbors[a.index()].push((b.index(), w));
            neighbors[b.index()].push((a.index(), w));
        }
        Adjacency { linear, neighbors }
    }

    /// Signed energy change from flipping bit `i` under `bits`.
    fn flip_delta(&self, bits: &[bool], i: usize) -> S {
        let mut c = self.linear[i];
        for &(j, w) in &self.neighbors[i] {
            if bits[j] {
                c = c + w;
            }
        }
        if bits[i] {
            -c
        } else {
            c
        }
    }
}

/// Globally minimal sample by Gray-code enumeration of all `2^n`
/// assignments. Ties break toward the smallest bit vector read as a
/// little-endian integer.
pub fn exhaustive_minimize<S: Scalar>(bqm: &Bqm<S>) -> Result<Sample<S>, SolveError> {
    let n = bqm.num_vars();
    if n > EXHAUSTIVE_CAP {
        return Err(SolveError::TooLarge {
            num_vars: n,
            cap: EXHAUSTIVE_CAP,
        });
    }
    let adj = Adjacency::new(bqm);
    let mut bits = vec![false; n];
    let mut energy = bqm.offset();
    let mut best_energy = energy;
    let mut best_value = 0u32;
    for k in 1u32..1 << n {
        // after this step `bits` is the Gray code of k
        let flip = k.trailing_zeros() as usize;
        energy = energy + adj.flip_delta(&bits, flip);
        bits[flip] = !bits[flip];
        let value = k ^ (k >> 1);
        if energy < best_energy || (energy == best_energy && value < best_value) {
            best_energy = energy;
            best_value = value;
        }
    }
    let bits: Vec<bool> = (0..n).map(|i| best_value >> i & 1 == 1).collect();
    debug_assert!(bqm.energy_unchecked(&bits) == best_energy);
    Ok(Sample {
        bits,
        energy: best_energy,
    })
}

/// Independent restarts of single-flip Metropolis sweeps under a geometric
/// beta schedule, best assignment per read, sorted by energy ascending.
///
/// Deterministic for a given model and parameters: read `r` runs on its own
/// generator seeded with `seed + r`, so reads may execute in parallel and
/// still merge to the sequential result.
pub fn simulated_anneal<S: Scalar>(
    bqm: &Bqm<S>,
    params: &AnnealParams,
) -> Result<Vec<Sample<S>>, SolveError> {
    params.validate()?;
    let adj = Adjacency::new(bqm);
    let schedule = geometric_schedule(params.beta_hot, params.beta_cold, params.sweeps_per_read);
    let mut samples: Vec<Sample<S>> = (0..params.num_reads)
        .into_par_iter()
        .map(|read| anneal_read(bqm, &adj, &schedule, params.seed.wrapping_add(read as u64)))
        .collect();
    samples.sort_by(|a, b| {
        a.energy
            .partial_cmp(&b.energy)
            .expect("sample energies must be comparable")
    });
    Ok(samples)
}

fn geometric_schedule(hot: f64, cold: f64, sweeps: usize) -> Vec<f64> {
    if sweeps <= 1 {
        return vec![hot; sweeps];
    }
    let ratio = (cold / hot).powf(1.0 / (sweeps as f64 - 1.0));
    (0..sweeps).map(|t| hot * ratio.powi(t as i32)).collect()
}

fn anneal_read<S: Scalar>(
    bqm: &Bqm<S>,
    adj: &Adjacency<S>,
    schedule: &[f64],
    seed: u64,
) -> Sample<S> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = bqm.num_vars();
    let mut bits: Vec<bool> = (0..n).map(|_| rng.random()).collect();
    let mut energy = bqm.energy_unchecked(&bits);
    let mut best_bits = bits.clone();
    let mut best_energy = energy;
    let mut order: Vec<usize> = (0..n).collect();
    for &beta in schedule {
        order.shuffle(&mut rng);
        for &i in &order {
            let delta = adj.flip_delta(&bits, i);
            // uniform draws happen only on uphill proposals
            let accept = if delta <= S::zero() {
                true
            } else {
                let uphill = delta.to_f64().expect("finite energy delta");
                rng.random::<f64>() < (-beta * uphill).exp()
            };
            if accept {
                bits[i] = !bits[i];
                energy = energy + delta;
                if energy < best_energy {
                    best_energy = energy;
                    best_bits.copy_from_slice(&bits);
                }
            }
        }
    }
    debug_assert!(bqm.energy_unchecked(&best_bits) == best_energy);
    Sample {
        bits: best_bits,
        energy: best_energy,
    }
}

struct GroupChoice {
    ids: Vec<VarId>,
    players: u128,
    rating: Dec,
}

struct Group {
    label: String,
    choices: Vec<GroupChoice>,
}

/// Maximum-rating line-up by enumerating, per position group, every
/// candidate subset of quota size and walking the cross product. Rejects
/// any combination fielding a player twice, plus anything violating the
/// given conflict constraints. Ties break toward the lexicographically
/// smallest sorted id tuple.
pub fn exact_lineup(
    table: &RatingTable,
    index: &VariableIndex,
    spec: &FormationSpec,
    conflicts: &[LinearConstraint],
) -> Result<LineupSolution, SolveError> {
    spec.validate()?;

    let players: Vec<&str> = index.players().map(|(name, _)| name).collect();
    if players.len() > 128 {
        return Err(SolveError::TooManyPlayers(players.len()));
    }
    let player_bit = |name: &str| -> u128 {
        1 << players.iter().position(|p| *p == name).expect("indexed player")
    };

    let mut groups = Vec::new();
    for position in Position::ALL {
        let Some(&quota) = spec.quotas.get(&position) else {
            continue;
        };
        if quota == 0 {
            continue;
        }
        let label = format!("{} {}", quota, position.role(quota));
        let candidates = index.position_vars(position);
        if candidates.len() < quota as usize {
            return Err(SolveError::Infeasible {
                detail: format!(
                    "group `{label}` needs {quota} of {} candidates",
                    candidates.len()
                ),
            });
        }
        let mut choices = Vec::new();
        for ids in subsets(candidates, quota as usize) {
            let mut mask = 0u128;
            let mut rating = Dec::ZERO;
            for &id in &ids {
                let (player, pos) = index.pair(id);
                mask |= player_bit(player);
                rating += table.rating_of(player, pos).expect("indexed pair");
            }
            choices.push(GroupChoice {
                ids,
                players: mask,
                rating,
            });
        }
        groups.push(Group { label, choices });
    }

    // conflicts evaluated at the leaves via per-variable term lists
    let mut var_terms: Vec<Vec<(usize, i64)>> = vec![Vec::new(); index.n()];
    for (k, c) in conflicts.iter().enumerate() {
        for (id, coeff) in c.terms() {
            var_terms[id.index()].push((k, coeff));
        }
    }

    let mut search = Search {
        groups: &groups,
        conflicts,
        var_terms: &var_terms,
        lhs: vec![0; conflicts.len()],
        selected: Vec::new(),
        best: None,
        max_depth: 0,
        reached_leaf: false,
    };
    search.run(0, 0, Dec::ZERO);

    match search.best {
        Some((total, ids)) => {
            let picks = ids
                .into_iter()
                .map(|id| {
                    let (player, position) = index.pair(id);
                    Pick {
                        id,
                        player: player.to_string(),
                        position,
                        rating: table.rating_of(player, position).expect("indexed pair"),
                    }
                })
                .collect();
            let lineup = LineupSolution::from_picks(picks);
            debug_assert!(lineup.total_rating() == total);
            Ok(lineup)
        }
        None => Err(SolveError::Infeasible {
            detail: if search.reached_leaf {
                "conflict constraints reject every quota-exact combination".to_string()
            } else {
                format!(
                    "no duplicate-free combination satisfies `{}`",
                    groups[search.max_depth].label
                )
            },
        }),
    }
}

struct Search<'a> {
    groups: &'a [Group],
    conflicts: &'a [LinearConstraint],
    var_terms: &'a [Vec<(usize, i64)>],
    lhs: Vec<i64>,
    selected: Vec<VarId>,
    best: Option<(Dec, Vec<VarId>)>,
    max_depth: usize,
    reached_leaf: bool,
}

impl Search<'_> {
    fn run(&mut self, depth: usize, used: u128, rating: Dec) {
        self.max_depth = self.max_depth.max(depth);
        if depth == self.groups.len() {
            self.reached_leaf = true;
            if !self.conflicts_hold() {
                return;
            }
            // groups are ascending id blocks, so `selected` is sorted; the
            // first strictly better total is the lexicographically smallest
            if self.best.as_ref().is_none_or(|(t, _)| rating > *t) {
                self.best = Some((rating, self.selected.clone()));
            }
            return;
        }
        for choice in &self.groups[depth].choices {
            if choice.players & used != 0 {
                continue;
            }
            let len = self.selected.len();
            self.selected.extend_from_slice(&choice.ids);
            self.run(depth + 1, used | choice.players, rating + choice.rating);
            self.selected.truncate(len);
        }
    }

    fn conflicts_hold(&mut self) -> bool {
        self.lhs.fill(0);
        for id in &self.selected {
            for &(k, coeff) in &self.var_terms[id.index()] {
                self.lhs[k] += coeff;
            }
        }
        self.conflicts.iter().zip(&self.lhs).all(|(c, &lhs)| {
            match c.comparator() {
                Comparator::Equal => lhs == c.rhs(),
                Comparator::AtMost => lhs <= c.rhs(),
            }
        })
    }
}

/// Size-k subsets of a sorted slice, in lexicographic order.
fn subsets(items: &[VarId], k: usize) -> Vec<Vec<VarId>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(items: &[VarId], k: usize, start: usize, current: &mut Vec<VarId>, out: &mut Vec<Vec<VarId>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        let needed = k - current.len();
        for i in start..=items.len().saturating_sub(needed) {
            current.push(items[i]);
            rec(items, k, i + 1, current, out);
            current.pop();
        }
    }
    rec(items, k, 0, &mut current, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;
    use crate::constraints::{conflict_constraints, formation_constraints, ConflictMode};
    use crate::qubo::{assemble, encode_equality, PenaltyWeight};
    use crate::roster::{build_variable_index, parse_roster};
    use proptest::prelude::*;

    fn id(i: u32) -> VarId {
        VarId::new(i)
    }

    fn selection_eq(ids: &[u32], rhs: i64) -> LinearConstraint {
        LinearConstraint::selection("eq", ids.iter().map(|&i| id(i)), Comparator::Equal, rhs)
            .unwrap()
    }

    #[test]
    fn exhaustive_breaks_ties_toward_smaller_integers() {
        let bqm = encode_equality(&selection_eq(&[1, 2], 1), 2).unwrap();
        let sample = exhaustive_minimize(&bqm).unwrap();
        assert_eq!(sample.energy, 0);
        assert_eq!(sample.bits, vec![true, false]);
    }

    #[test]
    fn exhaustive_single_variable() {
        let mut bqm = Bqm::<i64>::new(1);
        bqm.add_linear(id(1), -5);
        let sample = exhaustive_minimize(&bqm).unwrap();
        assert_eq!(sample.energy, -5);
        assert_eq!(sample.bits, vec![true]);
    }

    #[test]
    fn exhaustive_rejects_large_models() {
        let bqm = Bqm::<i64>::new(26);
        assert!(matches!(
            exhaustive_minimize(&bqm),
            Err(SolveError::TooLarge { num_vars: 26, cap: 25 })
        ));
    }

    #[test]
    fn anneal_is_deterministic() {
        let table = parse_roster(bundled::RATINGS_CSV).unwrap();
        let index = build_variable_index(&table).unwrap();
        let objective = crate::roster::objective_coefficients(&index, &table);
        let spec = crate::constraints::FormationSpec::from_json(bundled::FORMATION_433_JSON).unwrap();
        let eqs = formation_constraints(&spec, &index).unwrap();
        let ineqs = conflict_constraints(&index, ConflictMode::Auto).unwrap();
        let (bqm, _) =
            assemble(&objective, &eqs, &ineqs, PenaltyWeight::default(), ConflictMode::Auto)
                .unwrap();
        let params = AnnealParams {
            num_reads: 8,
            sweeps_per_read: 200,
            ..AnnealParams::default()
        };
        let a = simulated_anneal(&bqm, &params).unwrap();
        let b = simulated_anneal(&bqm, &params).unwrap();
        assert_eq!(a, b);
        for s in &a {
            assert_eq!(bqm.energy(&s.bits).unwrap(), s.energy);
        }
    }

    #[test]
    fn zero_sweeps_returns_the_initial_assignment() {
        let bqm = encode_equality(&selection_eq(&[1, 2, 3], 1), 3).unwrap();
        let params = AnnealParams {
            num_reads: 1,
            sweeps_per_read: 0,
            seed: 7,
            ..AnnealParams::default()
        };
        let samples = simulated_anneal(&bqm, &params).unwrap();
        assert_eq!(samples.len(), 1);
        // reconstruct the seeded initial assignment independently
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let bits: Vec<bool> = (0..3).map(|_| rng.random()).collect();
        assert_eq!(samples[0].bits, bits);
        assert_eq!(samples[0].energy, bqm.energy(&bits).unwrap());
    }

    #[test]
    fn params_are_validated() {
        let bqm = Bqm::<i64>::new(2);
        for bad in [
            AnnealParams { num_reads: 0, ..AnnealParams::default() },
            AnnealParams { beta_hot: 0.0, ..AnnealParams::default() },
            AnnealParams { beta_cold: 0.005, ..AnnealParams::default() },
        ] {
            assert!(matches!(
                simulated_anneal(&bqm, &bad),
                Err(SolveError::BadParams(_))
            ));
        }
    }

    fn random_bqm(seed: u64, n: usize) -> Bqm<i64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut bqm = Bqm::new(n);
        for i in 1..=n as u32 {
            bqm.add_linear(id(i), rng.random_range(-9..=9));
        }
        for i in 1..=n as u32 {
            for j in i + 1..=n as u32 {
                if rng.random::<f64>() < 0.5 {
                    bqm.add_quadratic(id(i), id(j), rng.random_range(-9..=9));
                }
            }
        }
        bqm.add_offset(rng.random_range(-9..=9));
        bqm
    }

    #[test]
    fn anneal_matches_exhaustive_on_random_ten_variable_models() {
        let mut hits = 0;
        for seed in 0..100 {
            let bqm = random_bqm(seed, 10);
            let truth = exhaustive_minimize(&bqm).unwrap();
            let params = AnnealParams {
                num_reads: 16,
                sweeps_per_read: 300,
                seed,
                ..AnnealParams::default()
            };
            let best = &simulated_anneal(&bqm, &params).unwrap()[0];
            assert!(best.energy >= truth.energy, "annealer beat the oracle");
            if best.energy == truth.energy {
                hits += 1;
            }
        }
        assert!(hits >= 95, "only {hits}/100 runs reached the optimum");
    }

    proptest! {
        /// The incremental flip delta equals a full recomputation.
        #[test]
        fn flip_delta_matches_recomputation(
            seed in 0u64..500,
            bits_raw in 0u32..256,
            flip in 0usize..8,
        ) {
            let bqm = random_bqm(seed, 8);
            let adj = Adjacency::new(&bqm);
            let bits: Vec<bool> = (0..8).map(|k| bits_raw >> k & 1 == 1).collect();
            let mut flipped = bits.clone();
            flipped[flip] = !flipped[flip];
            let expected =
                bqm.energy(&flipped).unwrap() - bqm.energy(&bits).unwrap();
            prop_assert_eq!(adj.flip_delta(&bits, flip), expected);
        }
    }

    fn toy_table() -> (RatingTable, VariableIndex) {
        let table = parse_roster(
            "player,position,rating\n\
             G1,GK,6.5\nG2,GK,7.1\nD1,DC,5.5\nD2,DC,6.6\nF1,FW,8.2\nF2,FW,8.3\n",
        )
        .unwrap();
        let index = build_variable_index(&table).unwrap();
        (table, index)
    }

    fn toy_spec() -> FormationSpec {
        FormationSpec {
            name: "1-1-1".into(),
            total: 3,
            quotas: [(Position::Gk, 1), (Position::Dc, 1), (Position::Fw, 1)]
                .into_iter()
                .collect(),
        }
    }

    #[test]
    fn exact_solves_the_toy_roster() {
        let (table, index) = toy_table();
        let lineup = exact_lineup(&table, &index, &toy_spec(), &[]).unwrap();
        assert_eq!(lineup.total_rating(), "22.0".parse().unwrap());
        let names: Vec<&str> = lineup.picks().iter().map(|p| p.player.as_str()).collect();
        assert_eq!(names, ["G2", "D2", "F2"]);
    }

    #[test]
    fn toy_assembled_minimum_is_negated_exact_total() {
        let (table, index) = toy_table();
        let spec = toy_spec();
        let objective = crate::roster::objective_coefficients(&index, &table);
        let eqs = formation_constraints(&spec, &index).unwrap();
        let ineqs = conflict_constraints(&index, ConflictMode::Auto).unwrap();
        assert!(ineqs.is_empty());
        let (bqm, _) = assemble(
            &objective,
            &eqs,
            &ineqs,
            PenaltyWeight::new(Dec::from_int(100)).unwrap(),
            ConflictMode::Auto,
        )
        .unwrap();
        let sample = exhaustive_minimize(&bqm).unwrap();
        let lineup = exact_lineup(&table, &index, &spec, &ineqs).unwrap();
        assert_eq!(sample.energy, -lineup.total_rating());
    }

    #[test]
    fn forced_lineup_when_candidates_equal_quotas() {
        let table = parse_roster(
            "player,position,rating\nA,GK,5.0\nB,DC,5.1\nC,FW,5.2\n",
        )
        .unwrap();
        let index = build_variable_index(&table).unwrap();
        let spec = FormationSpec {
            name: "forced".into(),
            total: 3,
            quotas: [(Position::Gk, 1), (Position::Dc, 1), (Position::Fw, 1)]
                .into_iter()
                .collect(),
        };
        let lineup = exact_lineup(&table, &index, &spec, &[]).unwrap();
        assert_eq!(
            lineup.ids().collect::<Vec<_>>(),
            vec![id(1), id(2), id(3)]
        );
        assert_eq!(lineup.total_rating(), "15.3".parse().unwrap());
    }

    #[test]
    fn shortage_names_the_binding_group() {
        let (table, index) = toy_table();
        let spec = FormationSpec {
            name: "too-many-keepers".into(),
            total: 3,
            quotas: [(Position::Gk, 3)].into_iter().collect(),
        };
        match exact_lineup(&table, &index, &spec, &[]) {
            Err(SolveError::Infeasible { detail }) => {
                assert!(detail.contains("3 goalkeepers"), "{detail}")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn conflicting_duplicate_player_is_never_fielded() {
        // one player rated in both positions; quotas demand both slots
        let table = parse_roster(
            "player,position,rating\nSolo,GK,9.9\nSolo,DC,9.8\nOther,DC,1.1\n",
        )
        .unwrap();
        let index = build_variable_index(&table).unwrap();
        let spec = FormationSpec {
            name: "pair".into(),
            total: 2,
            quotas: [(Position::Gk, 1), (Position::Dc, 1)].into_iter().collect(),
        };
        let lineup = exact_lineup(&table, &index, &spec, &[]).unwrap();
        let names: Vec<&str> = lineup.picks().iter().map(|p| p.player.as_str()).collect();
        assert_eq!(names, ["Solo", "Other"]);
        assert_eq!(lineup.total_rating(), "11.0".parse().unwrap());
    }

    #[test]
    fn published_optima_via_exact_solver() {
        let table = parse_roster(bundled::RATINGS_CSV).unwrap();
        let index = build_variable_index(&table).unwrap();
        let conflicts = conflict_constraints(&index, ConflictMode::Auto).unwrap();

        let spec = FormationSpec::from_json(bundled::FORMATION_433_JSON).unwrap();
        let lineup = exact_lineup(&table, &index, &spec, &conflicts).unwrap();
        assert_eq!(lineup.total_rating(), "82.67".parse().unwrap());

        let spec = FormationSpec::from_json(bundled::FORMATION_4231_JSON).unwrap();
        let lineup = exact_lineup(&table, &index, &spec, &conflicts).unwrap();
        assert_eq!(lineup.total_rating(), "80.04".parse().unwrap());
        let jota = lineup.picks().iter().find(|p| p.player == "Jota").unwrap();
        assert_eq!((jota.id, jota.position), (id(42), Position::Fw));
    }
}
