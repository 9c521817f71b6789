//! CPU topology with SMT sibling pairs.
//!
//! A platform with `N` physical CPUs exposes `2N` virtual cores. Virtual
//! cores `j` and `j + N (mod 2N)` are the two hardware threads of physical
//! CPU `j mod N`. An activation vector is the set of powered virtual cores;
//! the deterministic placement rule [`rho`] maps a core count to the vector
//! that touches the fewest physical CPUs, breaking ties toward the
//! lexicographically smallest core list.

use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GppTopology {
    n_physical: usize,
}

impl GppTopology {
    pub fn new(n_physical: usize) -> Self {
        assert!(n_physical >= 1, "topology needs at least one physical CPU");
        Self { n_physical }
    }

    pub fn n_physical(&self) -> usize {
        self.n_physical
    }

    /// Number of virtual cores, `2N`.
    pub fn n_virtual(&self) -> usize {
        2 * self.n_physical
    }

    /// Largest valid action: power every virtual core.
    pub fn max_action(&self) -> usize {
        self.n_virtual()
    }

    /// SMT sibling of virtual core `j`: the other hardware thread on the
    /// same physical CPU.
    pub fn sibling(&self, j: usize) -> usize {
        assert!(j < self.n_virtual(), "virtual core {j} out of range");
        (j + self.n_physical) % self.n_virtual()
    }

    /// Physical CPU hosting virtual core `j`.
    pub fn physical_of(&self, j: usize) -> usize {
        assert!(j < self.n_virtual(), "virtual core {j} out of range");
        j % self.n_physical
    }
}

/// Set of powered virtual cores, kept as a strictly increasing index list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivationVector {
    cores: Vec<usize>,
}

impl ActivationVector {
    pub fn new(mut cores: Vec<usize>, topo: &GppTopology) -> Result<Self> {
        if cores.is_empty() {
            return Err(CoreError::InvalidActivation("empty core set".into()));
        }
        cores.sort_unstable();
        for pair in cores.windows(2) {
            if pair[0] == pair[1] {
                return Err(CoreError::InvalidActivation(format!(
                    "duplicate core {}",
                    pair[0]
                )));
            }
        }
        if let Some(&last) = cores.last() {
            if last >= topo.n_virtual() {
                return Err(CoreError::InvalidActivation(format!(
                    "core {last} outside 0..{}",
                    topo.n_virtual()
                )));
            }
        }
        Ok(Self { cores })
    }

    pub fn cores(&self) -> &[usize] {
        &self.cores
    }

    /// Number of powered virtual cores.
    pub fn cardinality(&self) -> usize {
        self.cores.len()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.cores.binary_search(&j).is_ok()
    }

    /// Number of distinct physical CPUs with at least one powered core.
    pub fn physical_cpus_used(&self, topo: &GppTopology) -> usize {
        let mut seen = vec![false; topo.n_physical()];
        for &j in &self.cores {
            seen[topo.physical_of(j)] = true;
        }
        seen.iter().filter(|&&s| s).count()
    }
}

/// Deterministic placement rule: the activation vector of cardinality `a`
/// that touches `ceil(a/2)` physical CPUs (the minimum possible) and is
/// lexicographically smallest among those.
///
/// Construction: fill `floor(a/2)` full sibling pairs on CPUs `0..`, then one
/// single low-thread core if `a` is odd.
pub fn rho(topo: &GppTopology, a: usize) -> Result<ActivationVector> {
    if a == 0 || a > topo.max_action() {
        return Err(CoreError::InvalidAction {
            action: a,
            max: topo.max_action(),
        });
    }
    let n = topo.n_physical();
    let pairs = a / 2;
    let mut cores: Vec<usize> = (0..pairs).collect();
    if a % 2 == 1 {
        cores.push(pairs);
    }
    cores.extend((0..pairs).map(|c| c + n));
    ActivationVector::new(cores, topo)
}

/// All `C(2N, a)` activation vectors of cardinality `a`, in lexicographic
/// order of their sorted core lists.
pub fn enumerate_activation_vectors(topo: &GppTopology, a: usize) -> Result<Vec<ActivationVector>> {
    if a == 0 || a > topo.max_action() {
        return Err(CoreError::InvalidAction {
            action: a,
            max: topo.max_action(),
        });
    }
    let n_virtual = topo.n_virtual();
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..a).collect();
    loop {
        out.push(ActivationVector { cores: idx.clone() });
        // Advance to the next combination in lexicographic order.
        let mut i = a;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            if idx[i] != i + n_virtual - a {
                break;
            }
        }
        idx[i] += 1;
        for k in i + 1..a {
            idx[k] = idx[k - 1] + 1;
        }
    }
}
