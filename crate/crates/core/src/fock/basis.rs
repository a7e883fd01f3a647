use std::collections::HashMap;

use serde::Serialize;

/// Occupation numbers `(n_1, …, n_M)`.
pub type Occupation = Vec<u16>;

/// Truncated occupation-number basis `Σ n ≤ n_max`, graded-lexicographic.
///
/// States are ordered by total particle number, and within one grade in
/// decreasing lexicographic order, so `(1,0)` precedes `(0,1)`. Every
/// "grade ≤ m" block is therefore a leading principal block.
#[derive(Debug, Clone, Serialize)]
pub struct FockBasis {
    modes: usize,
    n_max: usize,
    states: Vec<Occupation>,
    #[serde(skip)]
    index: HashMap<Occupation, usize>,
    /// `offsets[g]` is the first index of grade `g`; `offsets[n_max + 1] = dim`.
    offsets: Vec<usize>,
}

fn grade_states(modes: usize, total: usize, prefix: &mut Occupation, out: &mut Vec<Occupation>) {
    if prefix.len() + 1 == modes {
        prefix.push(total as u16);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in (0..=total).rev() {
        prefix.push(first as u16);
        grade_states(modes, total - first, prefix, out);
        prefix.pop();
    }
}

impl FockBasis {
    pub fn new(modes: usize, n_max: usize) -> Self {
        assert!(modes >= 1, "need at least one mode");
        let mut states = Vec::new();
        let mut offsets = Vec::with_capacity(n_max + 2);
        for total in 0..=n_max {
            offsets.push(states.len());
            grade_states(modes, total, &mut Vec::with_capacity(modes), &mut states);
        }
        offsets.push(states.len());
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        FockBasis { modes, n_max, states, index, offsets }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[Occupation] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &[u16] {
        &self.states[i]
    }

    pub fn index_of(&self, occ: &[u16]) -> Option<usize> {
        self.index.get(occ).copied()
    }

    pub fn grade(&self, i: usize) -> usize {
        self.states[i].iter().map(|&n| n as usize).sum()
    }

    /// Index range of the `g`-particle sector.
    pub fn sector(&self, g: usize) -> std::ops::Range<usize> {
        self.offsets[g]..self.offsets[g + 1]
    }

    /// Number of states with `Σ n ≤ max_grade`.
    pub fn block_dim(&self, max_grade: usize) -> usize {
        self.offsets[max_grade.min(self.n_max) + 1]
    }

    /// Size of the block on which a degree-`d` symbol is truncation-exact,
    /// i.e. `Σ n ≤ n_max − d`; zero when `d > n_max`.
    pub fn safe_dim(&self, degree: usize) -> usize {
        if degree > self.n_max {
            0
        } else {
            self.block_dim(self.n_max - degree)
        }
    }
}

/// `C(n, k)` as an exact integer, saturating at `usize::MAX`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}
