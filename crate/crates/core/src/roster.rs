//! Player-rating ingestion and the canonical binary-variable indexing.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Dec;

/// The ten playing positions, in their fixed column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Position {
    Gk,
    Dc,
    Dl,
    Dr,
    Dm,
    Cm,
    Am,
    Fwl,
    Fwr,
    Fw,
}

impl Position {
    /// All positions in index order: a variable index lays out its columns
    /// in exactly this sequence.
    pub const ALL: [Position; 10] = [
        Position::Gk,
        Position::Dc,
        Position::Dl,
        Position::Dr,
        Position::Dm,
        Position::Cm,
        Position::Am,
        Position::Fwl,
        Position::Fwr,
        Position::Fw,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Position::Gk => "GK",
            Position::Dc => "DC",
            Position::Dl => "DL",
            Position::Dr => "DR",
            Position::Dm => "DM",
            Position::Cm => "CM",
            Position::Am => "AM",
            Position::Fwl => "FWL",
            Position::Fwr => "FWR",
            Position::Fw => "FW",
        }
    }

    /// Human-readable role, singular or plural to match `count`.
    pub fn role(self, count: u32) -> String {
        let singular = match self {
            Position::Gk => "goalkeeper",
            Position::Dc => "central defender",
            Position::Dl => "left-hand side defender",
            Position::Dr => "right-hand side defender",
            Position::Dm => "defensive midfielder",
            Position::Cm => "central midfielder",
            Position::Am => "attacking midfielder",
            Position::Fwl => "left forward",
            Position::Fwr => "right forward",
            Position::Fw => "forward/striker",
        };
        if count == 1 {
            singular.to_string()
        } else {
            format!("{singular}s")
        }
    }
}

impl FromStr for Position {
    type Err = ();

    fn from_str(s: &str) -> Result<Position, ()> {
        Position::ALL
            .into_iter()
            .find(|p| p.code() == s)
            .ok_or(())
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// One-based id of a binary decision or slack variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(u32);

impl VarId {
    /// Ids start at 1; zero is not a variable.
    pub fn new(id: u32) -> VarId {
        assert!(id >= 1, "variable ids are one-based");
        VarId(id)
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// Zero-based offset into bit vectors and coefficient arrays.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error)]
pub enum RosterError {
    #[error("roster read error: {0}")]
    Csv(#[from] csv::Error),
    #[error("roster header must be `player,position,rating`, found `{0}`")]
    InvalidHeader(String),
    #[error("row {row}: expected 3 fields, found {found}")]
    MalformedRow { row: u64, found: usize },
    #[error("row {row}: unknown position code `{token}`")]
    UnknownPosition { row: u64, token: String },
    #[error("row {row}: rating `{value}` must be a positive decimal with one or two fractional digits")]
    InvalidRating { row: u64, value: String },
    #[error("duplicate rating for ({player}, {position})")]
    DuplicateEntry { player: String, position: Position },
    #[error("roster has no entries")]
    Empty,
}

/// A single (player, position, rating) cell of the rating table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingEntry {
    pub player: String,
    pub position: Position,
    pub rating: Dec,
}

/// Sparse player-by-position rating table, in input order.
#[derive(Debug, Clone)]
pub struct RatingTable {
    entries: Vec<RatingEntry>,
    by_pair: HashMap<(String, Position), Dec>,
}

impl RatingTable {
    /// Validates and stores entries: no duplicate (player, position) pair,
    /// strictly positive ratings on the hundredths grid.
    pub fn new(entries: Vec<RatingEntry>) -> Result<RatingTable, RosterError> {
        let mut by_pair = HashMap::with_capacity(entries.len());
        for e in &entries {
            assert!(
                e.rating.is_positive() && e.rating.is_hundredths(),
                "ratings are validated at parse time"
            );
            if by_pair
                .insert((e.player.clone(), e.position), e.rating)
                .is_some()
            {
                return Err(RosterError::DuplicateEntry {
                    player: e.player.clone(),
                    position: e.position,
                });
            }
        }
        Ok(RatingTable { entries, by_pair })
    }

    pub fn entries(&self) -> &[RatingEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn rating_of(&self, player: &str, position: Position) -> Option<Dec> {
        self.by_pair.get(&(player.to_string(), position)).copied()
    }
}

/// Parses the roster CSV format: header `player,position,rating`, one row
/// per (player, position), ratings with one or two decimal places.
pub fn parse_roster(source: &str) -> Result<RatingTable, RosterError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(source.as_bytes());

    let header = reader.headers()?.clone();
    let fields: Vec<&str> = header.iter().collect();
    if fields != ["player", "position", "rating"] {
        return Err(RosterError::InvalidHeader(fields.join(",")));
    }

    let mut entries = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(RosterError::MalformedRow {
                row,
                found: record.len(),
            });
        }
        let player = record[0].to_string();
        let position: Position =
            record[1].parse().map_err(|()| RosterError::UnknownPosition {
                row,
                token: record[1].to_string(),
            })?;
        let rating = parse_rating(&record[2]).ok_or_else(|| RosterError::InvalidRating {
            row,
            value: record[2].to_string(),
        })?;
        entries.push(RatingEntry {
            player,
            position,
            rating,
        });
    }
    RatingTable::new(entries)
}

/// Ratings must be strictly positive with exactly one or two fractional
/// digits, so they sit on the hundredths grid and sums stay exact.
fn parse_rating(raw: &str) -> Option<Dec> {
    let frac = raw.split_once('.')?.1;
    if frac.is_empty() || frac.len() > 2 {
        return None;
    }
    let value: Dec = raw.parse().ok()?;
    value.is_positive().then_some(value)
}

/// Bijection between (player, position) pairs and variable ids `1..=n`.
///
/// Column-major over the rating table: every entry of the first position
/// column, then the next column, and so on; within a column players keep
/// their first-appearance order from the input.
#[derive(Debug, Clone)]
pub struct VariableIndex {
    vars: Vec<(String, Position)>,
    by_pair: HashMap<(String, Position), VarId>,
    by_position: Vec<Vec<VarId>>,
    by_player: Vec<(String, Vec<VarId>)>,
}

impl VariableIndex {
    /// Number of decision variables.
    pub fn n(&self) -> usize {
        self.vars.len()
    }

    /// The (player, position) pair at a given id. Panics if out of range.
    pub fn pair(&self, id: VarId) -> (&str, Position) {
        let (player, position) = &self.vars[id.index()];
        (player, *position)
    }

    pub fn id_of(&self, player: &str, position: Position) -> Option<VarId> {
        self.by_pair.get(&(player.to_string(), position)).copied()
    }

    /// Ids of a position column, ascending.
    pub fn position_vars(&self, position: Position) -> &[VarId] {
        let slot = Position::ALL.iter().position(|p| *p == position).unwrap();
        &self.by_position[slot]
    }

    /// Players with their variable ids, ordered by each player's first id.
    pub fn players(&self) -> impl Iterator<Item = (&str, &[VarId])> {
        self.by_player
            .iter()
            .map(|(name, ids)| (name.as_str(), ids.as_slice()))
    }

    /// All ids in ascending order.
    pub fn ids(&self) -> impl Iterator<Item = VarId> + '_ {
        (1..=self.vars.len() as u32).map(VarId::new)
    }
}

/// Builds the canonical index over a non-empty rating table.
pub fn build_variable_index(table: &RatingTable) -> Result<VariableIndex, RosterError> {
    if table.is_empty() {
        return Err(RosterError::Empty);
    }

    // rank players by first appearance in the input
    let mut player_rank: HashMap<&str, usize> = HashMap::new();
    for e in table.entries() {
        let next = player_rank.len();
        player_rank.entry(&e.player).or_insert(next);
    }

    let mut vars = Vec::with_capacity(table.len());
    let mut by_position = vec![Vec::new(); Position::ALL.len()];
    for (slot, position) in Position::ALL.into_iter().enumerate() {
        let mut column: Vec<&RatingEntry> = table
            .entries()
            .iter()
            .filter(|e| e.position == position)
            .collect();
        column.sort_by_key(|e| player_rank[e.player.as_str()]);
        for e in column {
            let id = VarId::new(vars.len() as u32 + 1);
            vars.push((e.player.clone(), e.position));
            by_position[slot].push(id);
        }
    }

    let mut by_pair = HashMap::with_capacity(vars.len());
    let mut player_ids: HashMap<&str, Vec<VarId>> = HashMap::new();
    let mut player_order: Vec<&str> = Vec::new();
    for (i, (player, position)) in vars.iter().enumerate() {
        by_pair.insert((player.clone(), *position), VarId::new(i as u32 + 1));
        let ids = player_ids.entry(player).or_default();
        if ids.is_empty() {
            player_order.push(player);
        }
        ids.push(VarId::new(i as u32 + 1));
    }
    let by_player = player_order
        .into_iter()
        .map(|name| (name.to_string(), player_ids[name].clone()))
        .collect();

    Ok(VariableIndex {
        vars,
        by_pair,
        by_position,
        by_player,
    })
}

/// Rating of the pair at each id, as the maximization objective `1..=n`.
///
/// The index must have been built from `table`.
pub fn objective_coefficients(index: &VariableIndex, table: &RatingTable) -> Vec<Dec> {
    index
        .ids()
        .map(|id| {
            let (player, position) = index.pair(id);
            table
                .rating_of(player, position)
                .expect("index was built from this table")
        })
        .collect()
}
