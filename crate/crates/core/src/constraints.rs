//! Formation quotas and same-player conflicts as linear constraints over
//! the variable index.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::roster::{Position, VarId, VariableIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparator {
    Equal,
    AtMost,
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Comparator::Equal => "=",
            Comparator::AtMost => "<=",
        })
    }
}

#[derive(Debug, Error)]
pub enum ConstraintError {
    #[error("constraint `{0}` has no terms")]
    EmptyTerms(String),
    #[error("constraint `{label}` has negative right-hand side {rhs}")]
    NegativeRhs { label: String, rhs: i64 },
    #[error("formation `{name}`: quotas sum to {quota_sum}, total is {total}")]
    QuotaSumMismatch {
        name: String,
        quota_sum: u32,
        total: u32,
    },
    #[error("formation `{name}` has zero players")]
    ZeroTotal { name: String },
    #[error("quota for {position} but the roster has no {position} candidates")]
    NoCandidates { position: Position },
    #[error("formation spec: {0}")]
    Json(#[from] serde_json::Error),
    #[error("paper conflict table does not fit this roster: {0}")]
    PaperRosterMismatch(String),
}

/// `Σ aᵢ·xᵢ ⋈ rhs` with `⋈` either `=` or `≤`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearConstraint {
    terms: BTreeMap<VarId, i64>,
    comparator: Comparator,
    rhs: i64,
    label: String,
}

impl LinearConstraint {
    pub fn new(
        label: impl Into<String>,
        terms: impl IntoIterator<Item = (VarId, i64)>,
        comparator: Comparator,
        rhs: i64,
    ) -> Result<LinearConstraint, ConstraintError> {
        let label = label.into();
        let mut map = BTreeMap::new();
        for (id, coeff) in terms {
            *map.entry(id).or_insert(0) += coeff;
        }
        if map.is_empty() {
            return Err(ConstraintError::EmptyTerms(label));
        }
        if rhs < 0 {
            return Err(ConstraintError::NegativeRhs { label, rhs });
        }
        Ok(LinearConstraint {
            terms: map,
            comparator,
            rhs,
            label,
        })
    }

    /// All-ones selection constraint over a set of ids.
    pub fn selection(
        label: impl Into<String>,
        ids: impl IntoIterator<Item = VarId>,
        comparator: Comparator,
        rhs: i64,
    ) -> Result<LinearConstraint, ConstraintError> {
        LinearConstraint::new(label, ids.into_iter().map(|id| (id, 1)), comparator, rhs)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn comparator(&self) -> Comparator {
        self.comparator
    }

    pub fn rhs(&self) -> i64 {
        self.rhs
    }

    pub fn terms(&self) -> impl Iterator<Item = (VarId, i64)> + '_ {
        self.terms.iter().map(|(id, c)| (*id, *c))
    }

    pub fn ids(&self) -> impl Iterator<Item = VarId> + '_ {
        self.terms.keys().copied()
    }

    pub fn id_set(&self) -> BTreeSet<VarId> {
        self.terms.keys().copied().collect()
    }

    pub fn max_id(&self) -> VarId {
        *self.terms.keys().next_back().expect("terms are non-empty")
    }

    /// Left-hand side value under an assignment; `bits` must cover every id.
    pub fn lhs_value(&self, bits: &[bool]) -> Option<i64> {
        let mut sum = 0;
        for (id, coeff) in &self.terms {
            if *bits.get(id.index())? {
                sum += coeff;
            }
        }
        Some(sum)
    }

    pub fn is_satisfied_by(&self, bits: &[bool]) -> Option<bool> {
        let lhs = self.lhs_value(bits)?;
        Some(match self.comparator {
            Comparator::Equal => lhs == self.rhs,
            Comparator::AtMost => lhs <= self.rhs,
        })
    }
}

/// A named quota vector over positions, e.g. 4-3-3.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FormationSpec {
    pub name: String,
    pub total: u32,
    pub quotas: BTreeMap<Position, u32>,
}

impl FormationSpec {
    /// Loads and validates a spec from its JSON form, e.g.
    /// `{"name":"4-3-3","total":11,"quotas":{"GK":1,...}}`.
    pub fn from_json(source: &str) -> Result<FormationSpec, ConstraintError> {
        let spec: FormationSpec = serde_json::from_str(source)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ConstraintError> {
        if self.total == 0 {
            return Err(ConstraintError::ZeroTotal {
                name: self.name.clone(),
            });
        }
        let quota_sum: u32 = self.quotas.values().sum();
        if quota_sum != self.total {
            return Err(ConstraintError::QuotaSumMismatch {
                name: self.name.clone(),
                quota_sum,
                total: self.total,
            });
        }
        Ok(())
    }
}

/// How same-player conflicts are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConflictMode {
    /// One at-most-1 constraint per player with two or more positions:
    /// the complete set.
    #[default]
    Auto,
    /// The fixed ten-row table of the original case study, hard-coded by
    /// variable id for the bundled 43-variable roster. Four multi-position
    /// players are left uncovered, exactly as published.
    PaperExact,
}

/// One equality `Σ all xᵢ = total` plus one per position with quota > 0.
/// Zero-quota positions get no constraint; the total forces them to zero.
pub fn formation_constraints(
    spec: &FormationSpec,
    index: &VariableIndex,
) -> Result<Vec<LinearConstraint>, ConstraintError> {
    spec.validate()?;
    let mut out = Vec::with_capacity(1 + spec.quotas.len());
    out.push(LinearConstraint::selection(
        format!("{} players", spec.total),
        index.ids(),
        Comparator::Equal,
        spec.total as i64,
    )?);
    for position in Position::ALL {
        let Some(&quota) = spec.quotas.get(&position) else {
            continue;
        };
        if quota == 0 {
            continue;
        }
        let ids = index.position_vars(position);
        if ids.is_empty() {
            return Err(ConstraintError::NoCandidates { position });
        }
        out.push(LinearConstraint::selection(
            format!("{} {}", quota, position.role(quota)),
            ids.iter().copied(),
            Comparator::Equal,
            quota as i64,
        )?);
    }
    Ok(out)
}

/// The ten published conflict rows, as variable ids of the bundled roster.
/// The final row is the one published without a slack variable; in
/// paper-exact mode the compiler turns it into an equality (see
/// [`unslacked_conflict_ids`]).
const PAPER_CONFLICT_ROWS: [&[u32]; 10] = [
    &[8, 12, 17],
    &[9, 13],
    &[10, 14, 18],
    &[15, 20, 29],
    &[11, 22],
    &[16, 24],
    &[26, 30],
    &[32, 34],
    &[37, 40],
    &[28, 33, 35, 38, 42],
];

/// Id set of the one conflict row that paper-exact compilation encodes
/// without a slack variable, i.e. as an equality. Its minimum forces that
/// player into every zero-penalty solution.
pub fn unslacked_conflict_ids() -> BTreeSet<VarId> {
    PAPER_CONFLICT_ROWS[9].iter().map(|&id| VarId::new(id)).collect()
}

fn conflict_label(player: &str) -> String {
    format!("one position: {player}")
}

/// At-most-1 constraints preventing one player from filling two slots.
pub fn conflict_constraints(
    index: &VariableIndex,
    mode: ConflictMode,
) -> Result<Vec<LinearConstraint>, ConstraintError> {
    match mode {
        ConflictMode::Auto => {
            let mut out = Vec::new();
            for (player, ids) in index.players() {
                if ids.len() >= 2 {
                    out.push(LinearConstraint::selection(
                        conflict_label(player),
                        ids.iter().copied(),
                        Comparator::AtMost,
                        1,
                    )?);
                }
            }
            Ok(out)
        }
        ConflictMode::PaperExact => {
            if index.n() != 43 {
                return Err(ConstraintError::PaperRosterMismatch(format!(
                    "expected 43 variables, roster has {}",
                    index.n()
                )));
            }
            let mut out = Vec::with_capacity(PAPER_CONFLICT_ROWS.len());
            for row in PAPER_CONFLICT_ROWS {
                let ids: Vec<VarId> = row.iter().map(|&id| VarId::new(id)).collect();
                let player = index.pair(ids[0]).0.to_string();
                // every row must be the complete variable set of one player
                let expected: Vec<VarId> = index
                    .players()
                    .find(|(name, _)| *name == player)
                    .map(|(_, ids)| ids.to_vec())
                    .unwrap();
                if expected != ids {
                    return Err(ConstraintError::PaperRosterMismatch(format!(
                        "ids {row:?} are not one player's full variable set"
                    )));
                }
                out.push(LinearConstraint::selection(
                    conflict_label(&player),
                    ids,
                    Comparator::AtMost,
                    1,
                )?);
            }
            Ok(out)
        }
    }
}
