//! Domain types for a two-user multiple-access channel fed by a pair of
//! correlated sources.
//!
//! Alphabets are indexed from 0 internally. Documentation that mirrors the
//! usual notation (symbols `1..=|X|`) says so explicitly.
//!
//! All types are immutable once constructed; every constructor validates.

mod config;
mod example;

pub use config::{ChannelSpec, Config, ConfigError, ExampleChannel};
pub use example::{example_bank, example_channel, example_instance, example_source};

use std::fmt;

use serde::{Deserialize, Serialize};

/// Normalization tolerance for every probability vector in the model.
pub const PROB_TOL: f64 = 1e-12;

/// One of the two transmitters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum User {
    One,
    Two,
}

impl User {
    pub const BOTH: [User; 2] = [User::One, User::Two];

    pub fn index(self) -> usize {
        match self {
            User::One => 0,
            User::Two => 1,
        }
    }

    pub fn other(self) -> User {
        match self {
            User::One => User::Two,
            User::Two => User::One,
        }
    }
}

/// Which messages are decoded in error: user 1 only, user 2 only, or both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ErrorType {
    User1,
    User2,
    Both,
}

impl ErrorType {
    /// Row order used by every table in this crate.
    pub const ALL: [ErrorType; 3] = [ErrorType::User1, ErrorType::User2, ErrorType::Both];

    /// The user decoded correctly, if any (`None` for [`ErrorType::Both`]).
    pub fn complement(self) -> Option<User> {
        match self {
            ErrorType::User1 => Some(User::Two),
            ErrorType::User2 => Some(User::One),
            ErrorType::Both => None,
        }
    }

    pub fn index(self) -> usize {
        match self {
            ErrorType::User1 => 0,
            ErrorType::User2 => 1,
            ErrorType::Both => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ErrorType::User1 => "{1}",
            ErrorType::User2 => "{2}",
            ErrorType::Both => "{1,2}",
        }
    }
}

impl fmt::Display for ErrorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Message class of one user.
///
/// Class 1 holds messages whose marginal probability is at least `γⁿ`,
/// class 2 the rest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Class {
    One,
    Two,
}

impl Class {
    pub const BOTH: [Class; 2] = [Class::One, Class::Two];

    /// 1-based label.
    pub fn number(self) -> u8 {
        match self {
            Class::One => 1,
            Class::Two => 2,
        }
    }

    pub fn index(self) -> usize {
        self.number() as usize - 1
    }

    /// `-(-1)^i`: the sign multiplying the class multiplier in the dual.
    pub fn sign(self) -> f64 {
        match self {
            Class::One => 1.0,
            Class::Two => -1.0,
        }
    }
}

/// Class indices of both users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClassPair {
    pub user1: Class,
    pub user2: Class,
}

impl ClassPair {
    /// Column order used by every table: (1,1), (1,2), (2,1), (2,2).
    pub const ALL: [ClassPair; 4] = [
        ClassPair::new(Class::One, Class::One),
        ClassPair::new(Class::One, Class::Two),
        ClassPair::new(Class::Two, Class::One),
        ClassPair::new(Class::Two, Class::Two),
    ];

    pub const fn new(user1: Class, user2: Class) -> Self {
        ClassPair { user1, user2 }
    }

    pub fn of(self, user: User) -> Class {
        match user {
            User::One => self.user1,
            User::Two => self.user2,
        }
    }

    /// Position in [`ClassPair::ALL`].
    pub fn index(self) -> usize {
        2 * self.user1.index() + self.user2.index()
    }

    pub fn label(self) -> String {
        format!("({},{})", self.user1.number(), self.user2.number())
    }
}

/// Partitioning thresholds `(γ₁, γ₂)`, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub gamma1: f64,
    pub gamma2: f64,
}

impl Thresholds {
    pub fn new(gamma1: f64, gamma2: f64) -> Result<Self, ModelError> {
        for (user, g) in [(1, gamma1), (2, gamma2)] {
            if !(0.0..=1.0).contains(&g) {
                return Err(ModelError::ThresholdOutOfRange { user, value: g });
            }
        }
        Ok(Thresholds { gamma1, gamma2 })
    }

    pub fn of(&self, user: User) -> f64 {
        match user {
            User::One => self.gamma1,
            User::Two => self.gamma2,
        }
    }

    pub fn with(mut self, user: User, value: f64) -> Self {
        match user {
            User::One => self.gamma1 = value,
            User::Two => self.gamma2 = value,
        }
        self
    }
}

/// Which part of an instance a violation refers to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Component {
    Source,
    Channel,
    Bank { user: usize, class: usize },
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Component::Source => f.write_str("source"),
            Component::Channel => f.write_str("channel"),
            Component::Bank { user, class } => write!(f, "bank q[{user}][{class}]"),
        }
    }
}

/// A single broken invariant. Indices are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NegativeEntry { component: Component, index: Vec<usize>, value: f64 },
    NonFinite { component: Component, index: Vec<usize> },
    RowSumMismatch { component: Component, row: Vec<usize>, sum: f64 },
    AlphabetMismatch { component: Component, expected: usize, found: usize },
    Malformed { component: Component, detail: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NegativeEntry { component, index, value } => {
                write!(f, "{component}: negative entry {value} at {index:?}")
            }
            Violation::NonFinite { component, index } => {
                write!(f, "{component}: non-finite entry at {index:?}")
            }
            Violation::RowSumMismatch { component, row, sum } => {
                write!(f, "{component}: row {row:?} sums to {sum} instead of 1")
            }
            Violation::AlphabetMismatch { component, expected, found } => {
                write!(f, "{component}: alphabet size {found}, expected {expected}")
            }
            Violation::Malformed { component, detail } => write!(f, "{component}: {detail}"),
        }
    }
}

/// Every violation found while validating an instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Violations(pub Vec<Violation>);

impl fmt::Display for Violations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid instance: {0}")]
    Invalid(Violations),
    #[error("parameter {name} = {value} outside [{lo}, {hi}]")]
    ParameterOutOfRange { name: &'static str, value: f64, lo: f64, hi: f64 },
    #[error("threshold of user {user} is {value}, outside [0, 1]")]
    ThresholdOutOfRange { user: u8, value: f64 },
}

impl ModelError {
    pub fn violations(&self) -> &[Violation] {
        match self {
            ModelError::Invalid(v) => &v.0,
            _ => &[],
        }
    }
}

fn check_entries(component: &Component, index: Vec<usize>, x: f64, out: &mut Vec<Violation>) {
    if !x.is_finite() {
        out.push(Violation::NonFinite { component: component.clone(), index });
    } else if x < 0.0 {
        out.push(Violation::NegativeEntry { component: component.clone(), index, value: x });
    }
}

fn check_sum(component: &Component, row: Vec<usize>, row_values: &[f64], out: &mut Vec<Violation>) {
    let sum: f64 = row_values.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        out.push(Violation::RowSumMismatch { component: component.clone(), row, sum });
    }
}

/// Checks that `q` is a probability vector, appending violations to `out`.
fn check_distribution(component: Component, q: &[f64], out: &mut Vec<Violation>) {
    if q.is_empty() {
        out.push(Violation::Malformed { component, detail: "empty distribution".into() });
        return;
    }
    let before = out.len();
    for (k, &x) in q.iter().enumerate() {
        check_entries(&component, vec![k], x, out);
    }
    if out.len() == before {
        check_sum(&component, vec![], q, out);
    }
}

/// Joint law `P(u₁, u₂)` of the two sources, with cached marginals and logs.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSource {
    n1: usize,
    n2: usize,
    p: Vec<f64>,
    ln_p: Vec<f64>,
    marginals: [Vec<f64>; 2],
    ln_marginals: [Vec<f64>; 2],
}

impl JointSource {
    /// Builds the source from `matrix[u₁][u₂]`.
    pub fn new(matrix: &[Vec<f64>]) -> Result<Self, ModelError> {
        let mut violations = Vec::new();
        let source = Self::collect(matrix, &mut violations);
        match source {
            Some(s) if violations.is_empty() => Ok(s),
            _ => Err(ModelError::Invalid(Violations(violations))),
        }
    }

    fn collect(matrix: &[Vec<f64>], out: &mut Vec<Violation>) -> Option<Self> {
        let component = Component::Source;
        let n1 = matrix.len();
        let n2 = matrix.first().map_or(0, Vec::len);
        if n1 == 0 || n2 == 0 {
            out.push(Violation::Malformed { component, detail: "empty source matrix".into() });
            return None;
        }
        if let Some(bad) = matrix.iter().position(|row| row.len() != n2) {
            out.push(Violation::Malformed {
                component,
                detail: format!("row {bad} has length {}, expected {n2}", matrix[bad].len()),
            });
            return None;
        }
        let before = out.len();
        for (u1, row) in matrix.iter().enumerate() {
            for (u2, &x) in row.iter().enumerate() {
                check_entries(&component, vec![u1, u2], x, out);
            }
        }
        let p: Vec<f64> = matrix.iter().flatten().copied().collect();
        if out.len() == before {
            check_sum(&component, vec![], &p, out);
        }
        if out.len() != before {
            return None;
        }
        Some(Self::from_flat(n1, n2, p))
    }

    fn from_flat(n1: usize, n2: usize, p: Vec<f64>) -> Self {
        let mut m1 = vec![0.0; n1];
        let mut m2 = vec![0.0; n2];
        for u1 in 0..n1 {
            for u2 in 0..n2 {
                m1[u1] += p[u1 * n2 + u2];
                m2[u2] += p[u1 * n2 + u2];
            }
        }
        let ln = |v: &[f64]| v.iter().map(|x| x.ln()).collect::<Vec<_>>();
        JointSource {
            n1,
            n2,
            ln_p: ln(&p),
            ln_marginals: [ln(&m1), ln(&m2)],
            marginals: [m1, m2],
            p,
        }
    }

    /// Product source `a ⊗ b`.
    pub fn product(a: &[f64], b: &[f64]) -> Result<Self, ModelError> {
        let matrix: Vec<Vec<f64>> = a.iter().map(|&x| b.iter().map(|&y| x * y).collect()).collect();
        let mut violations = Vec::new();
        check_distribution(Component::Source, a, &mut violations);
        check_distribution(Component::Source, b, &mut violations);
        if !violations.is_empty() {
            return Err(ModelError::Invalid(Violations(violations)));
        }
        // Renormalization noise of the outer product stays far below PROB_TOL.
        let flat: Vec<f64> = matrix.into_iter().flatten().collect();
        Ok(Self::from_flat(a.len(), b.len(), flat))
    }

    /// `(|U₁|, |U₂|)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn prob(&self, u1: usize, u2: usize) -> f64 {
        self.p[u1 * self.n2 + u2]
    }

    /// Row-major (`u₁` major) flattened joint law.
    pub fn flat(&self) -> &[f64] {
        &self.p
    }

    /// Row-major natural logs; `ln 0 = -inf`.
    pub fn ln_flat(&self) -> &[f64] {
        &self.ln_p
    }

    pub fn marginal(&self, user: User) -> &[f64] {
        &self.marginals[user.index()]
    }

    pub fn ln_marginal(&self, user: User) -> &[f64] {
        &self.ln_marginals[user.index()]
    }

    /// Both marginals `(p₁, p₂)`.
    pub fn marginals(&self) -> (&[f64], &[f64]) {
        (&self.marginals[0], &self.marginals[1])
    }

    /// Smallest positive marginal probability of `user`.
    pub fn support_min(&self, user: User) -> f64 {
        support_min(self.marginal(user))
    }

    /// Largest marginal probability of `user`.
    pub fn support_max(&self, user: User) -> f64 {
        self.marginal(user).iter().copied().fold(0.0, f64::max)
    }

    /// Same law with the roles of the users exchanged.
    pub fn transposed(&self) -> Self {
        let mut t = vec![0.0; self.p.len()];
        for u1 in 0..self.n1 {
            for u2 in 0..self.n2 {
                t[u2 * self.n1 + u1] = self.p[u1 * self.n2 + u2];
            }
        }
        Self::from_flat(self.n2, self.n1, t)
    }

    pub fn to_matrix(&self) -> Vec<Vec<f64>> {
        self.p.chunks(self.n2).map(<[f64]>::to_vec).collect()
    }
}

/// Smallest strictly positive entry (`+inf` when there is none).
pub fn support_min(p: &[f64]) -> f64 {
    p.iter().copied().filter(|&x| x > 0.0).fold(f64::INFINITY, f64::min)
}

/// Transition tensor `W(y | x₁, x₂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MacChannel {
    nx1: usize,
    nx2: usize,
    ny: usize,
    w: Vec<f64>,
}

impl MacChannel {
    /// Builds the channel from `tensor[x₁][x₂][y]`.
    pub fn new(tensor: &[Vec<Vec<f64>>]) -> Result<Self, ModelError> {
        let mut violations = Vec::new();
        match Self::collect(tensor, &mut violations) {
            Some(c) if violations.is_empty() => Ok(c),
            _ => Err(ModelError::Invalid(Violations(violations))),
        }
    }

    fn collect(tensor: &[Vec<Vec<f64>>], out: &mut Vec<Violation>) -> Option<Self> {
        let component = Component::Channel;
        let nx1 = tensor.len();
        let nx2 = tensor.first().map_or(0, Vec::len);
        let ny = tensor.first().and_then(|t| t.first()).map_or(0, Vec::len);
        if nx1 == 0 || nx2 == 0 || ny == 0 {
            out.push(Violation::Malformed { component, detail: "empty channel tensor".into() });
            return None;
        }
        for (x1, plane) in tensor.iter().enumerate() {
            if plane.len() != nx2 {
                out.push(Violation::Malformed {
                    component,
                    detail: format!("w[{x1}] has {} rows, expected {nx2}", plane.len()),
                });
                return None;
            }
            if let Some(x2) = plane.iter().position(|row| row.len() != ny) {
                out.push(Violation::Malformed {
                    component,
                    detail: format!("w[{x1}][{x2}] has length {}, expected {ny}", plane[x2].len()),
                });
                return None;
            }
        }
        let before = out.len();
        for (x1, plane) in tensor.iter().enumerate() {
            for (x2, row) in plane.iter().enumerate() {
                let row_start = out.len();
                for (y, &x) in row.iter().enumerate() {
                    check_entries(&component, vec![x1, x2, y], x, out);
                }
                if out.len() == row_start {
                    check_sum(&component, vec![x1, x2], row, out);
                }
            }
        }
        if out.len() != before {
            return None;
        }
        Some(MacChannel {
            nx1,
            nx2,
            ny,
            w: tensor.iter().flatten().flatten().copied().collect(),
        })
    }

    /// `(|X₁|, |X₂|, |Y|)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.nx1, self.nx2, self.ny)
    }

    pub fn input_size(&self, user: User) -> usize {
        match user {
            User::One => self.nx1,
            User::Two => self.nx2,
        }
    }

    /// `W(·|x₁, x₂)`.
    pub fn row(&self, x1: usize, x2: usize) -> &[f64] {
        let start = (x1 * self.nx2 + x2) * self.ny;
        &self.w[start..start + self.ny]
    }

    pub fn prob(&self, x1: usize, x2: usize, y: usize) -> f64 {
        self.w[(x1 * self.nx2 + x2) * self.ny + y]
    }

    /// Same channel with the input roles exchanged.
    pub fn transposed(&self) -> Self {
        let mut w = Vec::with_capacity(self.w.len());
        for x2 in 0..self.nx2 {
            for x1 in 0..self.nx1 {
                w.extend_from_slice(self.row(x1, x2));
            }
        }
        MacChannel { nx1: self.nx2, nx2: self.nx1, ny: self.ny, w }
    }

    pub fn to_tensor(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.nx1)
            .map(|x1| (0..self.nx2).map(|x2| self.row(x1, x2).to_vec()).collect())
            .collect()
    }
}

/// Two input distributions per user: `q[ν][i]` generates the codewords of
/// class `i` messages of user `ν`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputDistributionBank {
    q: [[Vec<f64>; 2]; 2],
}

impl InputDistributionBank {
    pub fn new(q: [[Vec<f64>; 2]; 2]) -> Result<Self, ModelError> {
        let mut violations = Vec::new();
        Self::check(&q, &mut violations);
        if violations.is_empty() {
            Ok(InputDistributionBank { q })
        } else {
            Err(ModelError::Invalid(Violations(violations)))
        }
    }

    /// Bank where each user has a single distribution serving both classes.
    pub fn single(q1: Vec<f64>, q2: Vec<f64>) -> Result<Self, ModelError> {
        Self::new([[q1.clone(), q1], [q2.clone(), q2]])
    }

    fn check(q: &[[Vec<f64>; 2]; 2], out: &mut Vec<Violation>) {
        for (user, pair) in q.iter().enumerate() {
            for (class, dist) in pair.iter().enumerate() {
                check_distribution(Component::Bank { user, class }, dist, out);
            }
        }
    }

    pub fn get(&self, user: User, class: Class) -> &[f64] {
        &self.q[user.index()][class.index()]
    }

    /// Exchanges which distribution serves class 1 and class 2, per user.
    pub fn swapped(&self, swap_user1: bool, swap_user2: bool) -> Self {
        let mut q = self.q.clone();
        if swap_user1 {
            q[0].swap(0, 1);
        }
        if swap_user2 {
            q[1].swap(0, 1);
        }
        InputDistributionBank { q }
    }

    /// Same bank with the users exchanged.
    pub fn transposed(&self) -> Self {
        let [a, b] = self.q.clone();
        InputDistributionBank { q: [b, a] }
    }

    pub fn raw(&self) -> &[[Vec<f64>; 2]; 2] {
        &self.q
    }
}

/// A validated (source, channel, bank) triple.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub source: JointSource,
    pub channel: MacChannel,
    pub bank: InputDistributionBank,
}

impl Instance {
    /// Assembles an instance from already-validated parts, checking only
    /// that the bank alphabets match the channel inputs.
    pub fn new(
        source: JointSource,
        channel: MacChannel,
        bank: InputDistributionBank,
    ) -> Result<Self, ModelError> {
        let mut violations = Vec::new();
        check_alphabets(&channel, bank.raw(), &mut violations);
        if violations.is_empty() {
            Ok(Instance { source, channel, bank })
        } else {
            Err(ModelError::Invalid(Violations(violations)))
        }
    }

    /// Same instance with a different bank (alphabets are re-checked).
    pub fn with_bank(&self, bank: InputDistributionBank) -> Result<Self, ModelError> {
        Instance::new(self.source.clone(), self.channel.clone(), bank)
    }

    /// Instance with users 1 and 2 exchanged everywhere.
    pub fn transposed(&self) -> Self {
        Instance {
            source: self.source.transposed(),
            channel: self.channel.transposed(),
            bank: self.bank.transposed(),
        }
    }
}

fn check_alphabets(channel: &MacChannel, q: &[[Vec<f64>; 2]; 2], out: &mut Vec<Violation>) {
    for user in User::BOTH {
        let expected = channel.input_size(user);
        for class in Class::BOTH {
            let found = q[user.index()][class.index()].len();
            if found != expected {
                out.push(Violation::AlphabetMismatch {
                    component: Component::Bank { user: user.index(), class: class.index() },
                    expected,
                    found,
                });
            }
        }
    }
}

/// Validates raw arrays and returns the instance, or every violation found.
///
/// `source[u₁][u₂]`, `channel[x₁][x₂][y]`, `bank[ν][i]` (all 0-based).
pub fn validate_instance(
    source: &[Vec<f64>],
    channel: &[Vec<Vec<f64>>],
    bank: &[[Vec<f64>; 2]; 2],
) -> Result<Instance, ModelError> {
    let mut violations = Vec::new();
    let src = JointSource::collect(source, &mut violations);
    let ch = MacChannel::collect(channel, &mut violations);
    InputDistributionBank::check(bank, &mut violations);
    if let Some(ch) = &ch {
        check_alphabets(ch, bank, &mut violations);
    }
    match (src, ch) {
        (Some(source), Some(channel)) if violations.is_empty() => Ok(Instance {
            source,
            channel,
            bank: InputDistributionBank { q: bank.clone() },
        }),
        _ => Err(ModelError::Invalid(Violations(violations))),
    }
}
