use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Photon counts `n_j` per output mode.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OutputPattern {
    counts: Vec<u32>,
    total: usize,
}

impl OutputPattern {
    pub fn new(counts: Vec<u32>) -> Self {
        let total = counts.iter().map(|&c| c as usize).sum();
        Self { counts, total }
    }

    pub fn vacuum(modes: usize) -> Self {
        Self::new(vec![0; modes])
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn modes(&self) -> usize {
        self.counts.len()
    }

    /// Total photon number `M`.
    pub fn total(&self) -> usize {
        self.total
    }

    pub fn max_count(&self) -> u32 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    pub fn is_vacuum(&self) -> bool {
        self.total == 0
    }

    /// Indices of modes with at least one photon.
    pub fn occupied(&self) -> impl Iterator<Item = usize> + '_ {
        self.counts.iter().enumerate().filter(|(_, &c)| c > 0).map(|(j, _)| j)
    }

    /// Pattern with `self.counts()[perm[j]]` at position `j`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self::new(perm.iter().map(|&p| self.counts[p]).collect())
    }

    pub(crate) fn check_modes(&self, n: usize) -> Result<()> {
        if self.modes() != n {
            return Err(Error::Dimension {
                what: "pattern",
                got: self.modes(),
                expected: n,
            });
        }
        Ok(())
    }
}

/// Space-separated counts, e.g. `1 0 2`.
impl fmt::Display for OutputPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.counts.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Accepts counts separated by commas and/or whitespace.
impl FromStr for OutputPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let counts = s
            .split(|ch: char| ch == ',' || ch.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<u32>()
                    .map_err(|_| Error::Parse(format!("invalid photon count `{t}` in pattern `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        if counts.is_empty() {
            return Err(Error::Parse(format!("empty pattern `{s}`")));
        }
        Ok(Self::new(counts))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        let p: OutputPattern = "1, 0,2".parse().unwrap();
        assert_eq!(p.counts(), &[1, 0, 2]);
        assert_eq!(p.total(), 3);
        assert_eq!(p.to_string(), "1 0 2");
        assert_eq!(p.to_string().parse::<OutputPattern>().unwrap(), p);
        assert_eq!(p.occupied().collect::<Vec<_>>(), vec![0, 2]);
        assert!("1,x".parse::<OutputPattern>().is_err());
        assert!("".parse::<OutputPattern>().is_err());
    }
}
