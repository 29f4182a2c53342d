//! Checking assignments against the original (pre-penalty) constraints,
//! decoding bit vectors into line-ups, and diffing against references.
//!
//! Feasibility is always judged on the original constraints, never on
//! penalty energy, so a misconfigured weight shows up instead of hiding.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::constraints::{Comparator, LinearConstraint};
use crate::roster::{Position, RatingTable, VarId, VariableIndex};
use crate::scalar::Dec;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("bit {id} is set but the decision range ends at {num_decision} (strip slack bits first)")]
    SetBitOutOfRange { id: u32, num_decision: usize },
    #[error("constraint `{label}` references id {id} beyond the {got} provided bits")]
    BitsTooShort { label: String, id: u32, got: usize },
    #[error("line-up row {row}: {reason}")]
    BadLineupRow { row: u64, reason: String },
    #[error("line-up file: {0}")]
    Csv(#[from] csv::Error),
    #[error("line-up header must be `variable,player,position,rating`, found `{0}`")]
    InvalidHeader(String),
}

/// One selected (variable, player, position, rating) row.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Pick {
    pub id: VarId,
    pub player: String,
    pub position: Position,
    pub rating: Dec,
}

/// A decoded line-up: picks sorted by variable id with their exact total.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineupSolution {
    picks: Vec<Pick>,
    total_rating: Dec,
}

impl LineupSolution {
    pub fn from_picks(mut picks: Vec<Pick>) -> LineupSolution {
        picks.sort_by_key(|p| p.id);
        let total_rating = picks.iter().map(|p| p.rating).sum();
        LineupSolution {
            picks,
            total_rating,
        }
    }

    pub fn picks(&self) -> &[Pick] {
        &self.picks
    }

    pub fn total_rating(&self) -> Dec {
        self.total_rating
    }

    pub fn ids(&self) -> impl Iterator<Item = VarId> + '_ {
        self.picks.iter().map(|p| p.id)
    }

    /// Decision bits with exactly the picked ids set.
    pub fn to_bits(&self, num_decision: usize) -> Vec<bool> {
        let mut bits = vec![false; num_decision];
        for p in &self.picks {
            bits[p.id.index()] = true;
        }
        bits
    }
}

/// Per-constraint evaluation of an assignment.
#[derive(Debug, Clone)]
pub struct ConstraintCheck {
    pub label: String,
    pub comparator: Comparator,
    pub lhs: i64,
    pub rhs: i64,
    pub satisfied: bool,
}

#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    pub checks: Vec<ConstraintCheck>,
    pub overall: bool,
}

impl FeasibilityReport {
    pub fn violated(&self) -> impl Iterator<Item = &ConstraintCheck> {
        self.checks.iter().filter(|c| !c.satisfied)
    }
}

/// Evaluates every original constraint on the decision bits. Extra trailing
/// bits (slacks) are ignored; inequalities are checked as `≤` directly.
pub fn check_feasibility(
    bits: &[bool],
    equalities: &[LinearConstraint],
    inequalities: &[LinearConstraint],
) -> Result<FeasibilityReport, VerifyError> {
    let mut checks = Vec::with_capacity(equalities.len() + inequalities.len());
    for c in equalities.iter().chain(inequalities) {
        let lhs = c.lhs_value(bits).ok_or_else(|| VerifyError::BitsTooShort {
            label: c.label().to_string(),
            id: c.max_id().get(),
            got: bits.len(),
        })?;
        let satisfied = match c.comparator() {
            Comparator::Equal => lhs == c.rhs(),
            Comparator::AtMost => lhs <= c.rhs(),
        };
        checks.push(ConstraintCheck {
            label: c.label().to_string(),
            comparator: c.comparator(),
            lhs,
            rhs: c.rhs(),
            satisfied,
        });
    }
    let overall = checks.iter().all(|c| c.satisfied);
    Ok(FeasibilityReport { checks, overall })
}

/// Decodes set decision bits into named picks with the exact total.
/// Rejects set bits beyond the decision range; strip slacks first.
pub fn decode_lineup(
    bits: &[bool],
    index: &VariableIndex,
    table: &RatingTable,
) -> Result<LineupSolution, VerifyError> {
    let n = index.n();
    let mut picks = Vec::new();
    for (k, &set) in bits.iter().enumerate() {
        if !set {
            continue;
        }
        if k >= n {
            return Err(VerifyError::SetBitOutOfRange {
                id: k as u32 + 1,
                num_decision: n,
            });
        }
        let id = VarId::new(k as u32 + 1);
        let (player, position) = index.pair(id);
        let rating = table
            .rating_of(player, position)
            .expect("index pairs exist in the table");
        picks.push(Pick {
            id,
            player: player.to_string(),
            position,
            rating,
        });
    }
    Ok(LineupSolution::from_picks(picks))
}

/// Pick-level diff between two line-ups, keyed on the full row.
#[derive(Debug, Clone)]
pub struct LineupDiff {
    pub only_found: Vec<Pick>,
    pub only_reference: Vec<Pick>,
    /// found total minus reference total, exact.
    pub rating_delta: Dec,
}

impl LineupDiff {
    pub fn is_identical(&self) -> bool {
        self.only_found.is_empty() && self.only_reference.is_empty()
    }
}

pub fn compare(found: &LineupSolution, reference: &LineupSolution) -> LineupDiff {
    let found_set: BTreeSet<&Pick> = found.picks().iter().collect();
    let reference_set: BTreeSet<&Pick> = reference.picks().iter().collect();
    LineupDiff {
        only_found: found_set
            .difference(&reference_set)
            .map(|p| (*p).clone())
            .collect(),
        only_reference: reference_set
            .difference(&found_set)
            .map(|p| (*p).clone())
            .collect(),
        rating_delta: found.total_rating() - reference.total_rating(),
    }
}

/// Parses the line-up fixture format: header `variable,player,position,rating`.
pub fn parse_lineup_csv(source: &str) -> Result<LineupSolution, VerifyError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(source.as_bytes());

    let header = reader.headers()?.clone();
    let fields: Vec<&str> = header.iter().collect();
    if fields != ["variable", "player", "position", "rating"] {
        return Err(VerifyError::InvalidHeader(fields.join(",")));
    }

    let mut picks = Vec::new();
    let mut seen = BTreeSet::new();
    for record in reader.records() {
        let record = record?;
        let row = record.position().map_or(0, |p| p.line());
        let bad = |reason: String| VerifyError::BadLineupRow { row, reason };
        if record.len() != 4 {
            return Err(bad(format!("expected 4 fields, found {}", record.len())));
        }
        let raw_id: u32 = record[0]
            .parse()
            .map_err(|_| bad(format!("invalid variable id `{}`", &record[0])))?;
        if raw_id == 0 {
            return Err(bad("variable ids are one-based".into()));
        }
        let id = VarId::new(raw_id);
        if !seen.insert(id) {
            return Err(bad(format!("duplicate variable id {id}")));
        }
        let position: Position = record[2]
            .parse()
            .map_err(|()| bad(format!("unknown position code `{}`", &record[2])))?;
        let rating: Dec = record[3]
            .parse()
            .map_err(|e| bad(format!("invalid rating `{}`: {e}", &record[3])))?;
        picks.push(Pick {
            id,
            player: record[1].to_string(),
            position,
            rating,
        });
    }
    Ok(LineupSolution::from_picks(picks))
}
