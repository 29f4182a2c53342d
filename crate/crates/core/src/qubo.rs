//! Penalty compilation of an objective plus linear constraints into a
//! binary quadratic model.
//!
//! Equalities `Σ aᵢxᵢ = b` become the exact expansion of `(Σ aᵢxᵢ − b)²`
//! (using `xᵢ² = xᵢ`); inequalities first gain slack bits encoding an
//! integer `s ∈ [0, rhs]` and are then squared as equalities. The assembled
//! model is `−objective + λ·Σ penalties`, so every penalty expansion stays
//! in plain integers and only the final weighting touches the decimal grid.

use std::collections::BTreeMap;
use std::io;

use num_traits::Zero;
use thiserror::Error;

use crate::constraints::{Comparator, ConflictMode, LinearConstraint};
use crate::roster::VarId;
use crate::scalar::{Dec, Scalar};

#[derive(Debug, Error)]
pub enum QuboError {
    #[error("constraint `{label}` is {found}, expected {expected}")]
    WrongComparator {
        label: String,
        found: Comparator,
        expected: Comparator,
    },
    #[error("variable id {id} exceeds the model size {num_vars}")]
    IdOutOfRange { id: u32, num_vars: usize },
    #[error("assignment has {found} bits, model has {expected} variables")]
    LengthMismatch { expected: usize, found: usize },
    #[error("penalty weight must be positive, got {0}")]
    NonPositiveWeight(Dec),
    #[error("registry entries do not match the inequality list ({entries} vs {constraints})")]
    RegistryMismatch { entries: usize, constraints: usize },
}

/// Binary quadratic model: `offset + Σᵢ linᵢ·xᵢ + Σ_{i<j} quad_{ij}·xᵢ·xⱼ`.
///
/// Generic over the coefficient scalar: penalty expansions are `Bqm<i64>`,
/// the assembled model is `Bqm<Dec>`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bqm<S> {
    num_vars: usize,
    linear: Vec<S>,
    quadratic: BTreeMap<(u32, u32), S>,
    offset: S,
}

impl<S: Scalar> Bqm<S> {
    pub fn new(num_vars: usize) -> Bqm<S> {
        Bqm {
            num_vars,
            linear: vec![S::zero(); num_vars],
            quadratic: BTreeMap::new(),
            offset: S::zero(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn offset(&self) -> S {
        self.offset
    }

    pub fn linear(&self, id: VarId) -> S {
        self.linear[id.index()]
    }

    pub fn quadratic(&self, a: VarId, b: VarId) -> S {
        let key = pair_key(a, b);
        self.quadratic.get(&key).copied().unwrap_or_else(S::zero)
    }

    /// Non-zero linear terms, ascending by id.
    pub fn linear_terms(&self) -> impl Iterator<Item = (VarId, S)> + '_ {
        self.linear
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(i, v)| (VarId::new(i as u32 + 1), *v))
    }

    /// Non-zero quadratic terms, ascending by (i, j) with i < j.
    pub fn quadratic_terms(&self) -> impl Iterator<Item = (VarId, VarId, S)> + '_ {
        self.quadratic
            .iter()
            .filter(|(_, v)| !v.is_zero())
            .map(|(&(i, j), v)| (VarId::new(i), VarId::new(j), *v))
    }

    pub fn add_offset(&mut self, value: S) {
        self.offset = self.offset + value;
    }

    pub fn add_linear(&mut self, id: VarId, value: S) {
        assert!(
            id.index() < self.num_vars,
            "id {id} out of range for {} variables",
            self.num_vars
        );
        self.linear[id.index()] = self.linear[id.index()] + value;
    }

    pub fn add_quadratic(&mut self, a: VarId, b: VarId, value: S) {
        assert!(a != b, "no diagonal quadratic terms; fold into linear");
        assert!(
            a.index() < self.num_vars && b.index() < self.num_vars,
            "pair ({a}, {b}) out of range for {} variables",
            self.num_vars
        );
        let entry = self.quadratic.entry(pair_key(a, b)).or_insert_with(S::zero);
        *entry = *entry + value;
    }

    /// Energy of a full assignment, exact in the scalar's arithmetic.
    pub fn energy(&self, bits: &[bool]) -> Result<S, QuboError> {
        if bits.len() != self.num_vars {
            return Err(QuboError::LengthMismatch {
                expected: self.num_vars,
                found: bits.len(),
            });
        }
        Ok(self.energy_unchecked(bits))
    }

    pub(crate) fn energy_unchecked(&self, bits: &[bool]) -> S {
        let mut e = self.offset;
        for (i, v) in self.linear.iter().enumerate() {
            if bits[i] {
                e = e + *v;
            }
        }
        for (&(i, j), v) in &self.quadratic {
            if bits[i as usize - 1] && bits[j as usize - 1] {
                e = e + *v;
            }
        }
        e
    }

    /// Adds `scale`-weighted integer penalty terms. The penalty model may be
    /// smaller than `self`; its ids must fit.
    pub fn add_scaled(&mut self, penalty: &Bqm<i64>, scale: S) {
        assert!(penalty.num_vars <= self.num_vars);
        let lift = |c: i64| scale * S::from_i64(c).expect("integer fits the scalar");
        for (id, c) in penalty.linear_terms() {
            self.add_linear(id, lift(c));
        }
        for (a, b, c) in penalty.quadratic_terms() {
            self.add_quadratic(a, b, lift(c));
        }
        if !penalty.offset.is_zero() {
            self.add_offset(lift(penalty.offset));
        }
    }

    /// Plain-text interchange form: `offset <v>`, `lin <i> <v>`,
    /// `quad <i> <j> <v>` with `i < j`, zero entries omitted.
    pub fn write_text<W: io::Write>(&self, mut w: W) -> io::Result<()> {
        if !self.offset.is_zero() {
            writeln!(w, "offset {}", self.offset)?;
        }
        for (id, v) in self.linear_terms() {
            writeln!(w, "lin {id} {v}")?;
        }
        for (a, b, v) in self.quadratic_terms() {
            writeln!(w, "quad {a} {b} {v}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_text(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("text format is ASCII/UTF-8")
    }
}

fn pair_key(a: VarId, b: VarId) -> (u32, u32) {
    if a < b {
        (a.get(), b.get())
    } else {
        (b.get(), a.get())
    }
}

/// Positive Lagrange-style weight applied to every penalty term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PenaltyWeight(Dec);

impl PenaltyWeight {
    pub fn new(value: Dec) -> Result<PenaltyWeight, QuboError> {
        if value.is_positive() {
            Ok(PenaltyWeight(value))
        } else {
            Err(QuboError::NonPositiveWeight(value))
        }
    }

    pub fn value(self) -> Dec {
        self.0
    }
}

impl Default for PenaltyWeight {
    /// The weight the bundled case study was solved with.
    fn default() -> PenaltyWeight {
        PenaltyWeight(Dec::from_hundredths(9050))
    }
}

/// Slack variables allocated above the decision range, one entry per
/// encoded inequality in encoding order.
#[derive(Debug, Clone)]
pub struct SlackRegistry {
    num_decision: usize,
    entries: Vec<SlackEntry>,
}

#[derive(Debug, Clone)]
pub struct SlackEntry {
    pub label: String,
    /// Contiguous ids after the decision range; empty when the constraint
    /// needed no slack.
    pub ids: Vec<VarId>,
    /// Weight of each slack bit; the representable sums are exactly
    /// `0..=rhs`.
    pub weights: Vec<i64>,
}

impl SlackRegistry {
    pub fn new(num_decision: usize) -> SlackRegistry {
        SlackRegistry {
            num_decision,
            entries: Vec::new(),
        }
    }

    pub fn num_decision(&self) -> usize {
        self.num_decision
    }

    /// Decision variables plus every allocated slack bit.
    pub fn total_vars(&self) -> usize {
        self.num_decision + self.entries.iter().map(|e| e.ids.len()).sum::<usize>()
    }

    pub fn entries(&self) -> &[SlackEntry] {
        &self.entries
    }

    pub fn entry(&self, label: &str) -> Option<&SlackEntry> {
        self.entries.iter().find(|e| e.label == label)
    }

    fn allocate(&mut self, label: &str, weights: Vec<i64>) -> Vec<VarId> {
        let start = self.total_vars() as u32 + 1;
        let ids: Vec<VarId> = (0..weights.len() as u32)
            .map(|k| VarId::new(start + k))
            .collect();
        self.entries.push(SlackEntry {
            label: label.to_string(),
            ids: ids.clone(),
            weights,
        });
        ids
    }

    fn note_unslacked(&mut self, label: &str) {
        self.entries.push(SlackEntry {
            label: label.to_string(),
            ids: Vec::new(),
            weights: Vec::new(),
        });
    }
}

/// Bit weights representing every integer in `0..=rhs`: a binary expansion
/// whose last weight is trimmed so the maximum sum is exactly `rhs`.
pub fn slack_weights(rhs: i64) -> Vec<i64> {
    assert!(rhs >= 0);
    if rhs == 0 {
        return Vec::new();
    }
    let bits = 64 - (rhs as u64).leading_zeros(); // ⌈log₂(rhs+1)⌉
    let mut weights: Vec<i64> = (0..bits - 1).map(|k| 1 << k).collect();
    weights.push(rhs - ((1 << (bits - 1)) - 1));
    weights
}

/// Exact quadratic expansion of `(Σ aᵢxᵢ − b)²` over binaries:
/// linear `aᵢ(aᵢ − 2b)`, quadratic `2aᵢaⱼ`, offset `b²`.
pub fn encode_equality(
    constraint: &LinearConstraint,
    num_vars: usize,
) -> Result<Bqm<i64>, QuboError> {
    if constraint.comparator() != Comparator::Equal {
        return Err(QuboError::WrongComparator {
            label: constraint.label().to_string(),
            found: constraint.comparator(),
            expected: Comparator::Equal,
        });
    }
    check_range(constraint, num_vars)?;
    let b = constraint.rhs();
    let mut bqm = Bqm::new(num_vars);
    let terms: Vec<(VarId, i64)> = constraint.terms().collect();
    for (k, &(i, a_i)) in terms.iter().enumerate() {
        bqm.add_linear(i, a_i * (a_i - 2 * b));
        for &(j, a_j) in &terms[k + 1..] {
            let q = 2 * a_i * a_j;
            if q != 0 {
                bqm.add_quadratic(i, j, q);
            }
        }
    }
    bqm.add_offset(b * b);
    Ok(bqm)
}

/// Reduces `Σ aᵢxᵢ ≤ rhs` to an equality by allocating slack bits for an
/// integer `s ∈ [0, rhs]`, then squares it. `rhs = 0` degenerates to an
/// equality to zero with no slack.
pub fn encode_inequality(
    constraint: &LinearConstraint,
    registry: &mut SlackRegistry,
) -> Result<Bqm<i64>, QuboError> {
    if constraint.comparator() != Comparator::AtMost {
        return Err(QuboError::WrongComparator {
            label: constraint.label().to_string(),
            found: constraint.comparator(),
            expected: Comparator::AtMost,
        });
    }
    check_range(constraint, registry.num_decision())?;

    let rhs = constraint.rhs();
    if rhs == 0 {
        registry.note_unslacked(constraint.label());
        let as_equality = LinearConstraint::new(
            constraint.label(),
            constraint.terms(),
            Comparator::Equal,
            0,
        )
        .expect("same terms, rhs 0");
        return encode_equality(&as_equality, registry.total_vars());
    }

    let weights = slack_weights(rhs);
    let slack_ids = registry.allocate(constraint.label(), weights.clone());
    let extended = LinearConstraint::new(
        constraint.label(),
        constraint
            .terms()
            .chain(slack_ids.iter().copied().zip(weights)),
        Comparator::Equal,
        rhs,
    )
    .expect("non-empty, rhs unchanged");
    encode_equality(&extended, registry.total_vars())
}

fn check_range(constraint: &LinearConstraint, num_vars: usize) -> Result<(), QuboError> {
    let max = constraint.max_id();
    if max.index() >= num_vars {
        return Err(QuboError::IdOutOfRange {
            id: max.get(),
            num_vars,
        });
    }
    Ok(())
}

/// Is this the conflict row that paper-exact compilation leaves slack-free?
fn is_unslacked_in_paper_mode(constraint: &LinearConstraint) -> bool {
    constraint.comparator() == Comparator::AtMost
        && constraint.rhs() == 1
        && constraint.terms().all(|(_, c)| c == 1)
        && constraint.id_set() == crate::constraints::unslacked_conflict_ids()
}

/// Compiles `−objective + λ·(Σ equality penalties + Σ inequality penalties)`.
///
/// Slack ids are appended after the `objective.len()` decision ids, one
/// registry entry per inequality in list order. In paper-exact mode the one
/// published slack-free conflict row is encoded as an equality, exactly as
/// printed; in auto mode every at-most row gets slack.
pub fn assemble(
    objective: &[Dec],
    equalities: &[LinearConstraint],
    inequalities: &[LinearConstraint],
    weight: PenaltyWeight,
    mode: ConflictMode,
) -> Result<(Bqm<Dec>, SlackRegistry), QuboError> {
    let n = objective.len();
    for c in equalities.iter().chain(inequalities) {
        check_range(c, n)?;
    }

    let mut registry = SlackRegistry::new(n);
    let mut penalties: Vec<Bqm<i64>> = Vec::with_capacity(equalities.len() + inequalities.len());
    for c in equalities {
        penalties.push(encode_equality(c, n)?);
    }
    for c in inequalities {
        if mode == ConflictMode::PaperExact && is_unslacked_in_paper_mode(c) {
            registry.note_unslacked(c.label());
            let as_equality =
                LinearConstraint::new(c.label(), c.terms(), Comparator::Equal, c.rhs())
                    .expect("same terms and rhs");
            penalties.push(encode_equality(&as_equality, n)?);
        } else {
            penalties.push(encode_inequality(c, &mut registry)?);
        }
    }

    let mut bqm = Bqm::new(registry.total_vars());
    for (i, &c) in objective.iter().enumerate() {
        bqm.add_linear(VarId::new(i as u32 + 1), -c);
    }
    for p in &penalties {
        bqm.add_scaled(p, weight.value());
    }
    Ok((bqm, registry))
}

/// Extends decision bits with slack settings that zero every satisfied
/// inequality's penalty. Violated rows keep their slacks at zero (no
/// zero-penalty setting exists for them). `inequalities` must be the list
/// the registry was built from, in the same order.
pub fn extend_with_slacks(
    decision_bits: &[bool],
    inequalities: &[LinearConstraint],
    registry: &SlackRegistry,
) -> Result<Vec<bool>, QuboError> {
    if decision_bits.len() != registry.num_decision() {
        return Err(QuboError::LengthMismatch {
            expected: registry.num_decision(),
            found: decision_bits.len(),
        });
    }
    if inequalities.len() != registry.entries().len() {
        return Err(QuboError::RegistryMismatch {
            entries: registry.entries().len(),
            constraints: inequalities.len(),
        });
    }
    let mut bits = decision_bits.to_vec();
    bits.resize(registry.total_vars(), false);
    for (c, entry) in inequalities.iter().zip(registry.entries()) {
        let lhs = c.lhs_value(decision_bits).ok_or(QuboError::IdOutOfRange {
            id: c.max_id().get(),
            num_vars: decision_bits.len(),
        })?;
        let mut remaining = c.rhs() - lhs;
        if remaining <= 0 {
            continue;
        }
        // greedy over descending weights covers all of 0..=rhs
        let mut slots: Vec<(i64, VarId)> =
            entry.weights.iter().copied().zip(entry.ids.iter().copied()).collect();
        slots.sort_by(|a, b| b.0.cmp(&a.0));
        for (w, id) in slots {
            if w <= remaining {
                bits[id.index()] = true;
                remaining -= w;
            }
        }
    }
    Ok(bits)
}
