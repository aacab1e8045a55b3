use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Discrete staffing vector: worker count per (shift, skill) cell.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WorkerParam(pub Vec<u32>);

impl WorkerParam {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    /// Total headcount across all cells.
    pub fn w_sum(&self) -> u64 {
        self.0.iter().map(|&x| x as u64).sum()
    }

    pub fn within(&self, w_max: u32) -> bool {
        self.0.iter().all(|&x| x <= w_max)
    }

    pub fn to_continuous(&self) -> ContinuousParam {
        ContinuousParam(self.0.iter().map(|&x| x as f64).collect())
    }

    /// Decodes a lattice index (mixed radix `w_max + 1`, first cell fastest).
    pub fn from_lattice_index(mut index: usize, n: usize, w_max: u32) -> Self {
        let base = w_max as usize + 1;
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            v.push((index % base) as u32);
            index /= base;
        }
        Self(v)
    }

    pub fn lattice_index(&self, w_max: u32) -> usize {
        let base = w_max as usize + 1;
        self.0.iter().rev().fold(0, |acc, &x| acc * base + x as usize)
    }
}

impl fmt::Display for WorkerParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        write!(f, "{}", parts.join(" "))
    }
}

impl FromStr for WorkerParam {
    type Err = std::num::ParseIntError;

    /// Accepts comma- or whitespace-separated counts.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse())
            .collect::<Result<Vec<u32>, _>>()
            .map(WorkerParam)
    }
}

/// Continuous relaxation of the staffing vector, kept in `[0, w_max]^N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousParam(pub Vec<f64>);

impl ContinuousParam {
    pub fn filled(n: usize, value: f64) -> Self {
        Self(vec![value; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}
