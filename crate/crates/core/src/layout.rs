//! Block layout of stacked position vectors.

use crate::constraints::ConfigError;

/// Shape of the stacked position vector: `agents` blocks of `dim` coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub agents: usize,
    pub dim: usize,
}

impl Layout {
    pub fn new(agents: usize, dim: usize) -> Self {
        Layout { agents, dim }
    }

    /// Total length of a stacked vector.
    #[inline]
    pub fn len(&self) -> usize {
        self.agents * self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Agent `i`'s coordinate block.
    #[inline]
    pub fn block<'a>(&self, x: &'a [f64], i: usize) -> &'a [f64] {
        &x[i * self.dim..(i + 1) * self.dim]
    }

    /// Mutable view of agent `i`'s coordinate block.
    #[inline]
    pub fn block_mut<'a>(&self, x: &'a mut [f64], i: usize) -> &'a mut [f64] {
        &mut x[i * self.dim..(i + 1) * self.dim]
    }

    /// Checks that `x` has exactly `agents * dim` entries.
    pub fn check(&self, x: &[f64]) -> Result<(), ConfigError> {
        if x.len() != self.len() {
            return Err(ConfigError::PositionLength {
                expected: self.len(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Checks that `i` is a valid agent index.
    pub fn check_agent(&self, i: usize) -> Result<(), ConfigError> {
        if i >= self.agents {
            return Err(ConfigError::AgentIndex {
                index: i,
                agents: self.agents,
            });
        }
        Ok(())
    }
}
