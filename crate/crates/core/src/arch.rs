//! Generator/critic layer structures.
//!
//! Constraints bind the hidden layers. For every constrained kind the noise
//! width equals the data width, so the two input layers match as well; only
//! the output layers (data width for the generator, 1 for the critic) differ.
//!
//! | kind                 | critic hidden widths                               |
//! |----------------------|----------------------------------------------------|
//! | isomorphic           | same as the generator                              |
//! | mirror               | generator widths reversed                          |
//! | self-symmetric       | both nets share `half ++ reverse(half[..n-1])`     |
//! | relative-isomorphic  | `max(1, round(w * (1 + delta)))`, half away from 0 |

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ArchError {
    #[error("rejected input: {0}")]
    Rejected(String),
    #[error("invalid architecture: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

/// Width offset of a relative-isomorphic critic, in whole percent.
///
/// Only ±10, ±20 and ±30 percent are permitted. Serialized as the signed
/// fraction (e.g. `0.1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelativeDelta(i8);

impl RelativeDelta {
    pub const PERMITTED_PERCENT: [i8; 6] = [10, -10, 20, -20, 30, -30];

    /// The six variants in r-IWGAN order 1..=6.
    pub fn all() -> [RelativeDelta; 6] {
        Self::PERMITTED_PERCENT.map(RelativeDelta)
    }

    pub fn from_percent(p: i32) -> Result<Self, ArchError> {
        if Self::PERMITTED_PERCENT.iter().any(|&q| q as i32 == p) {
            Ok(Self(p as i8))
        } else {
            Err(ArchError::Rejected(format!(
                "relative delta {p}% not in {{±10%, ±20%, ±30%}}"
            )))
        }
    }

    pub fn from_fraction(f: f64) -> Result<Self, ArchError> {
        let p = (f * 100.0).round();
        if !f.is_finite() || (f * 100.0 - p).abs() > 1e-6 {
            return Err(ArchError::Rejected(format!(
                "relative delta {f} is not a whole percentage"
            )));
        }
        Self::from_percent(p as i32)
    }

    /// r-IWGAN variant index (1..=6) to delta.
    pub fn variant(index: usize) -> Result<Self, ArchError> {
        index
            .checked_sub(1)
            .and_then(|i| Self::PERMITTED_PERCENT.get(i))
            .map(|&p| Self(p))
            .ok_or_else(|| ArchError::Rejected(format!("r-IWGAN variant {index} not in 1..=6")))
    }

    pub fn variant_index(self) -> usize {
        Self::PERMITTED_PERCENT.iter().position(|&p| p == self.0).unwrap() + 1
    }

    pub fn percent(self) -> i32 {
        self.0 as i32
    }

    pub fn fraction(self) -> f64 {
        self.0 as f64 / 100.0
    }

    /// `max(1, round(width * (1 + delta)))`, rounding half away from zero,
    /// in exact integer arithmetic.
    pub fn scale(self, width: usize) -> usize {
        let num = width as i64 * (100 + self.0 as i64);
        // num > 0 for every permitted delta
        (((num + 50) / 100) as usize).max(1)
    }
}

impl fmt::Display for RelativeDelta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:+.2}", self.fraction())
    }
}

impl Serialize for RelativeDelta {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.fraction())
    }
}

impl<'de> Deserialize<'de> for RelativeDelta {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let f = f64::deserialize(d)?;
        RelativeDelta::from_fraction(f).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    Unconstrained,
    Isomorphic,
    Mirror,
    SelfSymmetric,
    RelativeIsomorphic { delta: RelativeDelta },
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintKind::Unconstrained => f.write_str("unconstrained"),
            ConstraintKind::Isomorphic => f.write_str("isomorphic"),
            ConstraintKind::Mirror => f.write_str("mirror"),
            ConstraintKind::SelfSymmetric => f.write_str("self_symmetric"),
            ConstraintKind::RelativeIsomorphic { delta } => {
                write!(f, "relative_isomorphic({delta})")
            }
        }
    }
}

/// Full layer widths of a generator/critic pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchSpec {
    pub data_dim: usize,
    pub noise_dim: usize,
    /// `noise_dim, hidden..., data_dim`
    pub g_widths: Vec<usize>,
    /// `data_dim, hidden..., 1`
    pub d_widths: Vec<usize>,
    pub constraint: ConstraintKind,
}

fn check_hidden(what: &str, hidden: &[usize]) -> Result<(), ArchError> {
    if hidden.is_empty() {
        return Err(ArchError::Rejected(format!("{what} hidden width list is empty")));
    }
    if hidden.contains(&0) {
        return Err(ArchError::Rejected(format!("{what} hidden widths must be >= 1, got {hidden:?}")));
    }
    Ok(())
}

fn check_dim(data_dim: usize) -> Result<(), ArchError> {
    if data_dim == 0 {
        return Err(ArchError::Rejected("data_dim must be >= 1".into()));
    }
    Ok(())
}

fn assemble(
    data_dim: usize,
    noise_dim: usize,
    g_hidden: &[usize],
    d_hidden: &[usize],
    constraint: ConstraintKind,
) -> ArchSpec {
    let mut g_widths = vec![noise_dim];
    g_widths.extend_from_slice(g_hidden);
    g_widths.push(data_dim);
    let mut d_widths = vec![data_dim];
    d_widths.extend_from_slice(d_hidden);
    d_widths.push(1);
    ArchSpec {
        data_dim,
        noise_dim,
        g_widths,
        d_widths,
        constraint,
    }
}

/// Palindrome `half ++ reverse(half without its last entry)`.
pub fn palindrome_expand(half: &[usize]) -> Vec<usize> {
    let mut out = half.to_vec();
    if let Some((_, head)) = half.split_last() {
        out.extend(head.iter().rev());
    }
    out
}

impl ArchSpec {
    pub fn unconstrained(
        data_dim: usize,
        noise_dim: usize,
        g_hidden: &[usize],
        d_hidden: &[usize],
    ) -> Result<Self, ArchError> {
        check_dim(data_dim)?;
        if noise_dim == 0 {
            return Err(ArchError::Rejected("noise_dim must be >= 1".into()));
        }
        check_hidden("generator", g_hidden)?;
        check_hidden("critic", d_hidden)?;
        Ok(assemble(data_dim, noise_dim, g_hidden, d_hidden, ConstraintKind::Unconstrained))
    }

    pub fn isomorphic(data_dim: usize, hidden: &[usize]) -> Result<Self, ArchError> {
        check_dim(data_dim)?;
        check_hidden("isomorphic", hidden)?;
        Ok(assemble(data_dim, data_dim, hidden, hidden, ConstraintKind::Isomorphic))
    }

    pub fn mirror(data_dim: usize, g_hidden: &[usize]) -> Result<Self, ArchError> {
        check_dim(data_dim)?;
        check_hidden("mirror", g_hidden)?;
        let d_hidden: Vec<usize> = g_hidden.iter().rev().copied().collect();
        Ok(assemble(data_dim, data_dim, g_hidden, &d_hidden, ConstraintKind::Mirror))
    }

    pub fn self_symmetric(data_dim: usize, half: &[usize]) -> Result<Self, ArchError> {
        check_dim(data_dim)?;
        check_hidden("self-symmetric", half)?;
        let hidden = palindrome_expand(half);
        Ok(assemble(data_dim, data_dim, &hidden, &hidden, ConstraintKind::SelfSymmetric))
    }

    pub fn relative_isomorphic(
        data_dim: usize,
        hidden: &[usize],
        delta: RelativeDelta,
    ) -> Result<Self, ArchError> {
        check_dim(data_dim)?;
        check_hidden("relative-isomorphic", hidden)?;
        let d_hidden: Vec<usize> = hidden.iter().map(|&w| delta.scale(w)).collect();
        Ok(assemble(
            data_dim,
            data_dim,
            hidden,
            &d_hidden,
            ConstraintKind::RelativeIsomorphic { delta },
        ))
    }

    pub fn g_hidden(&self) -> &[usize] {
        let n = self.g_widths.len();
        if n < 2 {
            &[]
        } else {
            &self.g_widths[1..n - 1]
        }
    }

    pub fn d_hidden(&self) -> &[usize] {
        let n = self.d_widths.len();
        if n < 2 {
            &[]
        } else {
            &self.d_widths[1..n - 1]
        }
    }

    /// All invariant violations; empty when the spec is well formed.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.data_dim == 0 {
            v.push("data_dim is 0".to_string());
        }
        if self.g_widths.len() < 3 {
            v.push(format!("generator needs at least one hidden layer, widths {:?}", self.g_widths));
        }
        if self.d_widths.len() < 3 {
            v.push(format!("critic needs at least one hidden layer, widths {:?}", self.d_widths));
        }
        if self.g_widths.first() != Some(&self.noise_dim) {
            v.push(format!(
                "generator input width {:?} != noise_dim {}",
                self.g_widths.first(),
                self.noise_dim
            ));
        }
        if self.g_widths.last() != Some(&self.data_dim) {
            v.push(format!(
                "generator output width {:?} != data_dim {}",
                self.g_widths.last(),
                self.data_dim
            ));
        }
        if self.d_widths.first() != Some(&self.data_dim) {
            v.push(format!(
                "critic input width {:?} != data_dim {}",
                self.d_widths.first(),
                self.data_dim
            ));
        }
        if self.d_widths.last() != Some(&1) {
            v.push(format!("critic output width {:?} != 1", self.d_widths.last()));
        }
        for (name, hidden) in [("generator", self.g_hidden()), ("critic", self.d_hidden())] {
            for (i, &w) in hidden.iter().enumerate() {
                if w == 0 {
                    v.push(format!("{name} hidden layer {i} has width 0"));
                }
            }
        }
        if self.constraint != ConstraintKind::Unconstrained && self.noise_dim != self.data_dim {
            v.push(format!(
                "constrained pair needs noise_dim == data_dim, got {} vs {}",
                self.noise_dim, self.data_dim
            ));
        }
        let (g, d) = (self.g_hidden(), self.d_hidden());
        let expected_d: Option<Vec<usize>> = match self.constraint {
            ConstraintKind::Unconstrained => None,
            ConstraintKind::Isomorphic => Some(g.to_vec()),
            ConstraintKind::Mirror => Some(g.iter().rev().copied().collect()),
            ConstraintKind::SelfSymmetric => {
                if g.len() % 2 == 0 || g.iter().ne(g.iter().rev()) {
                    v.push(format!("generator hidden widths {g:?} are not an odd-length palindrome"));
                }
                Some(g.to_vec())
            }
            ConstraintKind::RelativeIsomorphic { delta } => {
                Some(g.iter().map(|&w| delta.scale(w)).collect())
            }
        };
        if let Some(expected) = expected_d {
            if expected.len() != d.len() {
                v.push(format!(
                    "hidden layer counts differ: generator {}, critic {}",
                    g.len(),
                    d.len()
                ));
            } else if let Some(i) = (0..d.len()).find(|&i| expected[i] != d[i]) {
                v.push(format!(
                    "hidden widths differ at layer {i}: critic {} but {} requires {}",
                    d[i], self.constraint, expected[i]
                ));
            }
        }
        v
    }

    pub fn validate(&self) -> Result<(), ArchError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(ArchError::Invalid(v))
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ArchSpec serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, ArchError> {
        serde_json::from_str(s).map_err(|e| ArchError::Rejected(format!("bad ArchSpec JSON: {e}")))
    }
}
