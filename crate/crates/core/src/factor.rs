//! Sparse discrete table factors.
//!
//! A [`DiscreteFactor`] stores only the strictly positive entries of a table
//! over a set of discrete variables; an absent assignment has weight exactly
//! zero. Scopes are kept in ascending [`VariableId`] order and an assignment
//! is addressed by its mixed-radix index, with the first (lowest id) variable
//! as the least significant digit. For all-binary scopes the index is simply
//! a bitmask.
//!
//! Every arithmetic operation reports its cost to an [`OpCounter`] using a
//! dense cost model: the work is charged for the full table, whether or not
//! individual entries are stored.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Tables up to this many assignments get a dense lookup table during
/// products, divisions and marginalizations.
const DENSE_LIMIT: u64 = 1 << 16;

/// Largest full table size a factor may describe.
const MAX_FULL_SIZE: u64 = 1 << 40;

/// Names one discrete variable (one codeword bit, for LDPC codes).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VariableId(pub u32);

impl VariableId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for VariableId {
    fn from(n: usize) -> Self {
        VariableId(n as u32)
    }
}

impl fmt::Display for VariableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "b{}", self.0)
    }
}

/// Running totals of the arithmetic done by factor operations. Divisions are
/// counted as multiplications.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounter {
    pub additions: u64,
    pub multiplications: u64,
}

impl OpCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn reset(&mut self) {
        *self = Self::default();
    }
}

impl std::ops::AddAssign for OpCounter {
    fn add_assign(&mut self, rhs: Self) {
        self.additions += rhs.additions;
        self.multiplications += rhs.multiplications;
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FactorError {
    #[error("variable {0} appears more than once in the scope")]
    DuplicateVariable(VariableId),
    #[error("a parity factor needs at least one variable")]
    EmptyScope,
    #[error("variable {var} has cardinality {card}; it must be at least 1")]
    InvalidCardinality { var: VariableId, card: u32 },
    #[error("variable {var} has cardinality {left} in one factor and {right} in another")]
    CardinalityMismatch { var: VariableId, left: u32, right: u32 },
    #[error("table over {0} assignments is too large")]
    TooLarge(u128),
    #[error("factor value {0} is negative or not finite")]
    InvalidValue(f64),
    #[error("assignment has {got} states but the scope has {expected} variables")]
    AssignmentArity { expected: usize, got: usize },
    #[error("state {state} of {var} is out of range (cardinality {card})")]
    StateOutOfRange { var: VariableId, state: u32, card: u32 },
    #[error("variable {0} is not in the factor's scope")]
    NotInScope(VariableId),
    #[error("division of a positive entry by zero at assignment {0:?}")]
    DivisionByZero(Vec<u32>),
    #[error("factor has no non-zero entries")]
    EmptyFactor,
    #[error("factors are defined over different scopes")]
    ScopeMismatch,
}

/// A sparse non-negative table over discrete variables.
///
/// Equality compares scope sets and entry tables; the order in which the
/// scope was supplied at construction does not matter.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteFactor {
    vars: Vec<VariableId>,
    cards: Vec<u32>,
    strides: Vec<u64>,
    entries: Vec<(u64, f64)>,
}

fn full_size_of(cards: &[u32]) -> Result<u64, FactorError> {
    let size: u128 = cards.iter().map(|&c| c as u128).product();
    if size > MAX_FULL_SIZE as u128 {
        return Err(FactorError::TooLarge(size));
    }
    Ok(size as u64)
}

fn strides_of(cards: &[u32]) -> Vec<u64> {
    let mut acc = 1u64;
    cards
        .iter()
        .map(|&c| {
            let s = acc;
            acc *= c as u64;
            s
        })
        .collect()
}

fn check_value(v: f64) -> Result<f64, FactorError> {
    if !v.is_finite() || v < 0.0 {
        Err(FactorError::InvalidValue(v))
    } else {
        Ok(v)
    }
}

#[inline]
fn saturate(v: f64) -> f64 {
    if v > f64::MAX {
        f64::MAX
    } else {
        v
    }
}

/// Maps an assignment index over one scope to the index of the corresponding
/// assignment over another scope, touching only the shared variables.
#[derive(Debug)]
enum Projection {
    Bits(Vec<(u32, u32)>),
    Radix(Vec<(u64, u64, u64)>),
}

impl Projection {
    /// Variables of `src` that also appear in `dst` and satisfy `keep`
    /// contribute their digit to the output.
    fn new(src: &DiscreteFactor, dst_vars: &[VariableId], dst_strides: &[u64], dst_cards: &[u32], keep: impl Fn(VariableId) -> bool) -> Self {
        let mut terms = Vec::new();
        for (pos, &v) in src.vars.iter().enumerate() {
            if !keep(v) {
                continue;
            }
            if let Ok(d) = dst_vars.binary_search(&v) {
                terms.push((src.strides[pos], src.cards[pos] as u64, dst_strides[d]));
            }
        }
        let binary = src.cards.iter().all(|&c| c == 2) && dst_cards.iter().all(|&c| c == 2);
        if binary {
            Projection::Bits(
                terms
                    .iter()
                    .map(|&(s, _, d)| (s.trailing_zeros(), d.trailing_zeros()))
                    .collect(),
            )
        } else {
            Projection::Radix(terms)
        }
    }

    #[inline]
    fn apply(&self, index: u64) -> u64 {
        match self {
            Projection::Bits(bits) => bits
                .iter()
                .fold(0, |acc, &(s, d)| acc | (((index >> s) & 1) << d)),
            Projection::Radix(terms) => terms
                .iter()
                .fold(0, |acc, &(s, c, d)| acc + ((index / s) % c) * d),
        }
    }
}

/// A per-entry loop parameterized by a projection, so that the loop body is
/// compiled once per projection shape instead of matching on every entry.
trait ProjectionJob {
    type Out;
    fn run(self, project: impl Fn(u64) -> u64) -> Self::Out;
}

impl Projection {
    fn dispatch<J: ProjectionJob>(&self, job: J) -> J::Out {
        match self {
            Projection::Bits(bits) => match *bits.as_slice() {
                [] => job.run(|_| 0),
                [(s, d)] => job.run(move |i| ((i >> s) & 1) << d),
                [(s0, d0), (s1, d1)] => job.run(move |i| (((i >> s0) & 1) << d0) | (((i >> s1) & 1) << d1)),
                [(s0, d0), (s1, d1), (s2, d2)] => {
                    job.run(move |i| (((i >> s0) & 1) << d0) | (((i >> s1) & 1) << d1) | (((i >> s2) & 1) << d2))
                }
                _ => job.run(|i| self.apply(i)),
            },
            Projection::Radix(_) => job.run(|i| self.apply(i)),
        }
    }
}

/// Multiplies every entry by `table[project(index)]`, drops zeros and returns
/// the sum of what is left.
struct ScaleEntries<'a> {
    entries: &'a mut Vec<(u64, f64)>,
    table: &'a [f64],
}

impl ProjectionJob for ScaleEntries<'_> {
    type Out = f64;
    fn run(self, project: impl Fn(u64) -> u64) -> f64 {
        let mut total = 0.0;
        self.entries.retain_mut(|(i, x)| {
            *x = saturate(*x * self.table[project(*i) as usize]);
            total += *x;
            *x > 0.0
        });
        total
    }
}

/// Adds every entry into `acc[project(index)]`.
struct SumInto<'a> {
    entries: &'a [(u64, f64)],
    acc: &'a mut [f64],
}

impl ProjectionJob for SumInto<'_> {
    type Out = ();
    fn run(self, project: impl Fn(u64) -> u64) {
        for &(i, x) in self.entries {
            self.acc[project(i) as usize] += x;
        }
    }
}

/// Value lookup by assignment index, dense for small tables.
enum Lookup<'a> {
    Dense(Vec<f64>),
    Sparse(&'a [(u64, f64)]),
}

impl Lookup<'_> {
    #[inline]
    fn get(&self, index: u64) -> f64 {
        match self {
            Lookup::Dense(t) => t[index as usize],
            Lookup::Sparse(e) => match e.binary_search_by_key(&index, |&(i, _)| i) {
                Ok(p) => e[p].1,
                Err(_) => 0.0,
            },
        }
    }
}

impl DiscreteFactor {
    fn layout(vars: &[VariableId], cards: &[u32]) -> Result<(Vec<VariableId>, Vec<u32>, Vec<usize>), FactorError> {
        if vars.len() != cards.len() {
            return Err(FactorError::AssignmentArity { expected: vars.len(), got: cards.len() });
        }
        let mut order: Vec<usize> = (0..vars.len()).collect();
        order.sort_by_key(|&i| vars[i]);
        for w in order.windows(2) {
            if vars[w[0]] == vars[w[1]] {
                return Err(FactorError::DuplicateVariable(vars[w[0]]));
            }
        }
        for (&v, &c) in vars.iter().zip(cards) {
            if c == 0 {
                return Err(FactorError::InvalidCardinality { var: v, card: c });
            }
        }
        let sorted_vars = order.iter().map(|&i| vars[i]).collect();
        let sorted_cards = order.iter().map(|&i| cards[i]).collect();
        full_size_of(cards)?;
        Ok((sorted_vars, sorted_cards, order))
    }

    fn from_sorted(vars: Vec<VariableId>, cards: Vec<u32>, entries: Vec<(u64, f64)>) -> Self {
        let strides = strides_of(&cards);
        Self { vars, cards, strides, entries }
    }

    /// Builds a factor from `(assignment, value)` pairs, where each assignment
    /// lists one state per variable in the order of `vars`. Zero values are
    /// dropped; a repeated assignment keeps the last value given.
    pub fn from_entries<A, I>(vars: &[VariableId], cards: &[u32], entries: I) -> Result<Self, FactorError>
    where
        A: AsRef<[u32]>,
        I: IntoIterator<Item = (A, f64)>,
    {
        let (sorted_vars, sorted_cards, order) = Self::layout(vars, cards)?;
        let strides = strides_of(&sorted_cards);
        let mut table = BTreeMap::new();
        for (assignment, value) in entries {
            let assignment = assignment.as_ref();
            if assignment.len() != vars.len() {
                return Err(FactorError::AssignmentArity { expected: vars.len(), got: assignment.len() });
            }
            let mut index = 0u64;
            for (pos, &orig) in order.iter().enumerate() {
                let state = assignment[orig];
                if state >= cards[orig] {
                    return Err(FactorError::StateOutOfRange { var: vars[orig], state, card: cards[orig] });
                }
                index += state as u64 * strides[pos];
            }
            table.insert(index, check_value(value)?);
        }
        let entries = table.into_iter().filter(|&(_, v)| v > 0.0).collect();
        Ok(Self::from_sorted(sorted_vars, sorted_cards, entries))
    }

    /// Binary-variable shorthand for [`DiscreteFactor::from_entries`].
    pub fn from_binary<A, I>(vars: &[VariableId], entries: I) -> Result<Self, FactorError>
    where
        A: AsRef<[u8]>,
        I: IntoIterator<Item = (A, f64)>,
    {
        let cards = vec![2; vars.len()];
        let converted: Vec<(Vec<u32>, f64)> = entries
            .into_iter()
            .map(|(a, v)| (a.as_ref().iter().map(|&s| s as u32).collect(), v))
            .collect();
        Self::from_entries(vars, &cards, converted)
    }

    /// The all-ones table over the given scope.
    pub fn uniform(vars: &[VariableId], cards: &[u32]) -> Result<Self, FactorError> {
        let (vars, cards, _) = Self::layout(vars, cards)?;
        let full = full_size_of(&cards)?;
        let entries = (0..full).map(|i| (i, 1.0)).collect();
        Ok(Self::from_sorted(vars, cards, entries))
    }

    /// The all-ones table over binary variables.
    pub fn ones(vars: &[VariableId]) -> Result<Self, FactorError> {
        Self::uniform(vars, &vec![2; vars.len()])
    }

    /// Univariate binary factor `{0 -> p0, 1 -> p1}`.
    pub fn binary_unary(var: VariableId, p0: f64, p1: f64) -> Result<Self, FactorError> {
        Self::from_binary(&[var], [([0u8], p0), ([1u8], p1)])
    }

    pub fn scope(&self) -> &[VariableId] {
        &self.vars
    }

    pub fn cardinalities(&self) -> &[u32] {
        &self.cards
    }

    pub fn contains(&self, var: VariableId) -> bool {
        self.vars.binary_search(&var).is_ok()
    }

    /// Number of stored (non-zero) entries.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of assignments of the scope, stored or not.
    pub fn full_size(&self) -> u64 {
        self.cards.iter().map(|&c| c as u64).product()
    }

    pub fn sum(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v).sum()
    }

    /// Stored entries as `(assignment index, value)`, ascending by index.
    pub fn raw_entries(&self) -> &[(u64, f64)] {
        &self.entries
    }

    /// Decodes an assignment index into per-variable states in scope order.
    pub fn assignment(&self, index: u64) -> Vec<u32> {
        self.strides
            .iter()
            .zip(&self.cards)
            .map(|(&s, &c)| ((index / s) % c as u64) as u32)
            .collect()
    }

    /// Stored entries with decoded assignments, in scope order.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<u32>, f64)> + '_ {
        self.entries.iter().map(|&(i, v)| (self.assignment(i), v))
    }

    /// Value at a raw assignment index.
    pub fn value_at(&self, index: u64) -> f64 {
        Lookup::Sparse(&self.entries).get(index)
    }

    /// Value of the assignment that gives each scope variable the state
    /// returned by `state_of`. Extra variables known to `state_of` are ignored.
    pub fn value_with(&self, state_of: impl Fn(VariableId) -> u32) -> f64 {
        let mut index = 0u64;
        for ((&v, &s), &c) in self.vars.iter().zip(&self.strides).zip(&self.cards) {
            let state = state_of(v);
            if state >= c {
                return 0.0;
            }
            index += state as u64 * s;
        }
        self.value_at(index)
    }

    /// Value of an assignment given as `(variable, state)` pairs in any order.
    /// Scope variables missing from `assignment` are an error.
    pub fn value(&self, assignment: &[(VariableId, u32)]) -> Result<f64, FactorError> {
        for &v in &self.vars {
            if !assignment.iter().any(|&(a, _)| a == v) {
                return Err(FactorError::AssignmentArity { expected: self.vars.len(), got: assignment.len() });
            }
        }
        Ok(self.value_with(|v| {
            assignment
                .iter()
                .find(|&&(a, _)| a == v)
                .map(|&(_, s)| s)
                .unwrap_or(0)
        }))
    }

    /// Every assignment's value, when the table is small enough to expand.
    fn dense_table(&self) -> Option<Vec<f64>> {
        let full = self.full_size();
        (full <= DENSE_LIMIT).then(|| {
            let mut t = vec![0.0; full as usize];
            for &(i, v) in &self.entries {
                t[i as usize] = v;
            }
            t
        })
    }

    fn lookup(&self) -> Lookup<'_> {
        let full = self.full_size();
        if full <= DENSE_LIMIT {
            let mut t = vec![0.0; full as usize];
            for &(i, v) in &self.entries {
                t[i as usize] = v;
            }
            Lookup::Dense(t)
        } else {
            Lookup::Sparse(&self.entries)
        }
    }

    fn is_subscope_of(&self, other: &Self) -> bool {
        self.vars.iter().all(|v| other.contains(*v))
    }

    fn merged_scope(&self, other: &Self) -> Result<(Vec<VariableId>, Vec<u32>), FactorError> {
        let mut vars = Vec::with_capacity(self.vars.len() + other.vars.len());
        let mut cards = Vec::with_capacity(vars.capacity());
        let (mut i, mut j) = (0, 0);
        while i < self.vars.len() || j < other.vars.len() {
            let take_left = j == other.vars.len() || (i < self.vars.len() && self.vars[i] <= other.vars[j]);
            let take_right = i == self.vars.len() || (j < other.vars.len() && other.vars[j] <= self.vars[i]);
            if take_left && take_right {
                if self.cards[i] != other.cards[j] {
                    return Err(FactorError::CardinalityMismatch { var: self.vars[i], left: self.cards[i], right: other.cards[j] });
                }
                vars.push(self.vars[i]);
                cards.push(self.cards[i]);
                i += 1;
                j += 1;
            } else if take_left {
                vars.push(self.vars[i]);
                cards.push(self.cards[i]);
                i += 1;
            } else {
                vars.push(other.vars[j]);
                cards.push(other.cards[j]);
                j += 1;
            }
        }
        full_size_of(&cards)?;
        Ok((vars, cards))
    }

    /// Product of two factors over the union of their scopes. Charges one
    /// multiplication per assignment of the result scope.
    pub fn product(&self, other: &Self, ops: &mut OpCounter) -> Result<Self, FactorError> {
        let (vars, cards) = self.merged_scope(other)?;
        ops.multiplications += full_size_of(&cards)?;
        if other.is_subscope_of(self) {
            return Ok(self.product_with_subscope(other));
        }
        if self.is_subscope_of(other) {
            return Ok(other.product_with_subscope(self));
        }

        let strides = strides_of(&cards);
        let overlap: Vec<VariableId> = self.vars.iter().copied().filter(|v| other.contains(*v)).collect();
        let overlap_cards: Vec<u32> = overlap
            .iter()
            .map(|v| self.cards[self.vars.binary_search(v).unwrap()])
            .collect();
        let overlap_strides = strides_of(&overlap_cards);
        let self_to_overlap = Projection::new(self, &overlap, &overlap_strides, &overlap_cards, |_| true);
        let other_to_overlap = Projection::new(other, &overlap, &overlap_strides, &overlap_cards, |_| true);
        let self_to_result = Projection::new(self, &vars, &strides, &cards, |_| true);
        let other_rest_to_result = Projection::new(other, &vars, &strides, &cards, |v| !self.contains(v));

        let mut groups: BTreeMap<u64, Vec<(u64, f64)>> = BTreeMap::new();
        for &(j, y) in &other.entries {
            groups
                .entry(other_to_overlap.apply(j))
                .or_default()
                .push((other_rest_to_result.apply(j), y));
        }
        let mut entries = Vec::new();
        for &(i, x) in &self.entries {
            if let Some(matches) = groups.get(&self_to_overlap.apply(i)) {
                let base = self_to_result.apply(i);
                for &(rest, y) in matches {
                    let v = saturate(x * y);
                    if v > 0.0 {
                        entries.push((base + rest, v));
                    }
                }
            }
        }
        entries.sort_unstable_by_key(|&(i, _)| i);
        Ok(Self { vars, cards, strides, entries })
    }

    fn product_with_subscope(&self, sub: &Self) -> Self {
        let mut out = self.clone();
        out.scale_by_subscope(sub);
        out
    }

    /// Multiplies in a factor whose scope is contained in this one and
    /// returns the new entry sum.
    fn scale_by_subscope(&mut self, sub: &Self) -> f64 {
        let proj = Projection::new(self, &sub.vars, &sub.strides, &sub.cards, |_| true);
        match sub.dense_table() {
            Some(table) => proj.dispatch(ScaleEntries { entries: &mut self.entries, table: &table }),
            None => {
                let lookup = sub.lookup();
                let mut total = 0.0;
                self.entries.retain_mut(|(i, x)| {
                    *x = saturate(*x * lookup.get(proj.apply(*i)));
                    total += *x;
                    *x > 0.0
                });
                total
            }
        }
    }

    /// Entrywise division by a factor over a subset of this scope, with
    /// `0 / 0 = 0`. Charges one multiplication per assignment of the
    /// denominator's scope. Quotients saturate at `f64::MAX`.
    pub fn divide(&self, denominator: &Self, ops: &mut OpCounter) -> Result<Self, FactorError> {
        for (&v, &c) in denominator.vars.iter().zip(&denominator.cards) {
            match self.vars.binary_search(&v) {
                Ok(p) if self.cards[p] == c => {}
                Ok(p) => return Err(FactorError::CardinalityMismatch { var: v, left: self.cards[p], right: c }),
                Err(_) => return Err(FactorError::NotInScope(v)),
            }
        }
        ops.multiplications += denominator.full_size();
        let proj = Projection::new(self, &denominator.vars, &denominator.strides, &denominator.cards, |_| true);
        let lookup = denominator.lookup();
        let mut entries = Vec::with_capacity(self.entries.len());
        for &(i, x) in &self.entries {
            let d = lookup.get(proj.apply(i));
            if d == 0.0 {
                return Err(FactorError::DivisionByZero(self.assignment(i)));
            }
            let v = saturate(x / d);
            if v > 0.0 {
                entries.push((i, v));
            }
        }
        Ok(Self { vars: self.vars.clone(), cards: self.cards.clone(), strides: self.strides.clone(), entries })
    }

    /// Sums out every variable not in `keep`. Charges
    /// `full_size(scope) - full_size(keep)` additions, or none when nothing is
    /// summed out.
    pub fn marginalize(&self, keep: &[VariableId], ops: &mut OpCounter) -> Result<Self, FactorError> {
        let mut kept: Vec<VariableId> = keep.to_vec();
        kept.sort_unstable();
        kept.dedup();
        for &v in &kept {
            if !self.contains(v) {
                return Err(FactorError::NotInScope(v));
            }
        }
        if kept.len() == self.vars.len() {
            return Ok(self.clone());
        }
        let cards: Vec<u32> = kept
            .iter()
            .map(|v| self.cards[self.vars.binary_search(v).unwrap()])
            .collect();
        let strides = strides_of(&cards);
        let kept_full: u64 = cards.iter().map(|&c| c as u64).product();
        ops.additions += self.full_size() - kept_full;

        let proj = Projection::new(self, &kept, &strides, &cards, |_| true);
        let entries: Vec<(u64, f64)> = if kept_full <= DENSE_LIMIT {
            let mut acc = vec![0.0; kept_full as usize];
            proj.dispatch(SumInto { entries: &self.entries, acc: &mut acc });
            acc.into_iter()
                .enumerate()
                .filter(|&(_, v)| v > 0.0)
                .map(|(i, v)| (i as u64, saturate(v)))
                .collect()
        } else {
            let mut acc: BTreeMap<u64, f64> = BTreeMap::new();
            for &(i, x) in &self.entries {
                *acc.entry(proj.apply(i)).or_insert(0.0) += x;
            }
            acc.into_iter().map(|(i, v)| (i, saturate(v))).collect()
        };
        Ok(Self { vars: kept, cards, strides, entries })
    }

    /// Scales entries to sum to one. Entries that underflow to zero are
    /// dropped.
    pub fn normalize(&self) -> Result<Self, FactorError> {
        let mut out = self.clone();
        out.normalize_in_place()?;
        Ok(out)
    }

    /// In-place product with a factor over a subset of this scope, followed by
    /// normalization. Charges what [`DiscreteFactor::product`] would.
    pub fn absorb(&mut self, sub: &Self, ops: &mut OpCounter) -> Result<(), FactorError> {
        for (&v, &c) in sub.vars.iter().zip(&sub.cards) {
            match self.vars.binary_search(&v) {
                Ok(p) if self.cards[p] == c => {}
                Ok(p) => return Err(FactorError::CardinalityMismatch { var: v, left: self.cards[p], right: c }),
                Err(_) => return Err(FactorError::NotInScope(v)),
            }
        }
        ops.multiplications += self.full_size();
        let total = self.scale_by_subscope(sub);
        self.normalize_with_total(total)
    }

    /// As [`DiscreteFactor::normalize`], without allocating.
    pub fn normalize_in_place(&mut self) -> Result<(), FactorError> {
        let total = self.entries.iter().map(|&(_, v)| v).sum();
        self.normalize_with_total(total)
    }

    fn normalize_with_total(&mut self, total: f64) -> Result<(), FactorError> {
        if total.is_finite() {
            if total <= 0.0 {
                return Err(FactorError::EmptyFactor);
            }
            self.entries.retain_mut(|(_, v)| {
                *v /= total;
                *v > 0.0
            });
            return Ok(());
        }
        // the plain sum overflowed: rescale by the largest entry first
        let max = self.entries.iter().map(|&(_, v)| v).fold(0.0, f64::max);
        let total: f64 = self.entries.iter().map(|&(_, v)| v / max).sum();
        self.entries.retain_mut(|(_, v)| {
            *v = (*v / max) / total;
            *v > 0.0
        });
        Ok(())
    }

    /// Unnormalized marginal of every scope variable, in scope order, from a
    /// single pass over the entries.
    pub fn variable_marginals(&self) -> Vec<Vec<f64>> {
        let mut acc: Vec<Vec<f64>> = self.cards.iter().map(|&c| vec![0.0; c as usize]).collect();
        if self.cards.iter().all(|&c| c == 2) {
            for &(i, x) in &self.entries {
                for (k, a) in acc.iter_mut().enumerate() {
                    a[((i >> k) & 1) as usize] += x;
                }
            }
            return acc;
        }
        for &(i, x) in &self.entries {
            for (k, a) in acc.iter_mut().enumerate() {
                a[((i / self.strides[k]) % u64::from(self.cards[k])) as usize] += x;
            }
        }
        acc
    }

    /// Entry-wise comparison over the union of supports.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if self.vars != other.vars || self.cards != other.cards {
            return false;
        }
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.entries, &other.entries);
        while i < a.len() || j < b.len() {
            let (x, y) = match (a.get(i), b.get(j)) {
                (Some(&(ia, va)), Some(&(ib, vb))) if ia == ib => {
                    i += 1;
                    j += 1;
                    (va, vb)
                }
                (Some(&(ia, va)), Some(&(ib, _))) if ia < ib => {
                    i += 1;
                    (va, 0.0)
                }
                (Some(&(_, va)), None) => {
                    i += 1;
                    (va, 0.0)
                }
                (_, Some(&(_, vb))) => {
                    j += 1;
                    (0.0, vb)
                }
                (None, None) => unreachable!(),
            };
            if (x - y).abs() > tol {
                return false;
            }
        }
        true
    }
}

/// Even-parity indicator over binary variables: weight one on every
/// assignment with an even number of ones, nothing stored elsewhere.
pub fn make_parity_factor(scope: &[VariableId]) -> Result<DiscreteFactor, FactorError> {
    if scope.is_empty() {
        return Err(FactorError::EmptyScope);
    }
    let (vars, cards, _) = DiscreteFactor::layout(scope, &vec![2; scope.len()])?;
    let entries = (0..1u64 << vars.len())
        .filter(|i| i.count_ones() % 2 == 0)
        .map(|i| (i, 1.0))
        .collect();
    Ok(DiscreteFactor::from_sorted(vars, cards, entries))
}

/// Kullback-Leibler divergence `D(p || q)` in nats. `q` is clamped below by
/// `1e-12` wherever `p` is positive.
pub fn kl_divergence(p: &DiscreteFactor, q: &DiscreteFactor) -> Result<f64, FactorError> {
    const Q_FLOOR: f64 = 1e-12;
    if p.vars != q.vars || p.cards != q.cards {
        return Err(FactorError::ScopeMismatch);
    }
    let lookup = q.lookup();
    let d: f64 = p
        .entries
        .iter()
        .map(|&(i, pv)| pv * (pv / lookup.get(i).max(Q_FLOOR)).ln())
        .sum();
    Ok(d.max(0.0))
}
