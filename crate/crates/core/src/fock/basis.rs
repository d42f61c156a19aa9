use serde::Serialize;

use crate::error::{Error, Result};

/// Truncated multimode Fock basis with a uniform per-mode cutoff.
///
/// Occupation tuples are enumerated lexicographically with mode 0 varying
/// slowest, so for two modes with cutoff 1 the order is
/// |0,0⟩, |0,1⟩, |1,0⟩, |1,1⟩. This matches the Kronecker-product order of
/// single-mode vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct FockBasis {
    n_modes: usize,
    cutoff: usize,
}

impl FockBasis {
    pub fn new(n_modes: usize, cutoff: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::InvalidArgument("a basis needs at least one mode".into()));
        }
        let dim = (cutoff + 1)
            .checked_pow(n_modes as u32)
            .ok_or_else(|| Error::InvalidArgument("basis dimension overflows".into()))?;
        if dim > 1 << 16 {
            return Err(Error::InvalidArgument(format!(
                "basis dimension {dim} too large for dense operators"
            )));
        }
        Ok(Self { n_modes, cutoff })
    }

    pub fn single_mode(cutoff: usize) -> Self {
        Self { n_modes: 1, cutoff }
    }

    pub fn two_mode(cutoff: usize) -> Self {
        Self { n_modes: 2, cutoff }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Maximum photon number per mode.
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn levels(&self) -> usize {
        self.cutoff + 1
    }

    pub fn dim(&self) -> usize {
        self.levels().pow(self.n_modes as u32)
    }

    pub fn check_mode(&self, mode: usize) -> Result<()> {
        if mode < self.n_modes {
            Ok(())
        } else {
            Err(Error::ModeOutOfRange {
                mode,
                n_modes: self.n_modes,
            })
        }
    }

    /// Index stride of `mode` in the flattened basis.
    pub fn stride(&self, mode: usize) -> usize {
        self.levels().pow((self.n_modes - 1 - mode) as u32)
    }

    pub fn index_of(&self, occupation: &[usize]) -> Result<usize> {
        if occupation.len() != self.n_modes {
            return Err(Error::Dimension {
                expected: self.n_modes,
                found: occupation.len(),
            });
        }
        let mut index = 0;
        for &n in occupation {
            if n > self.cutoff {
                return Err(Error::InvalidArgument(format!(
                    "occupation {n} exceeds cutoff {}",
                    self.cutoff
                )));
            }
            index = index * self.levels() + n;
        }
        Ok(index)
    }

    pub fn occupation(&self, mut index: usize) -> Vec<usize> {
        let mut occ = vec![0; self.n_modes];
        for slot in occ.iter_mut().rev() {
            *slot = index % self.levels();
            index /= self.levels();
        }
        occ
    }

    /// Photon number of `mode` in basis state `index`.
    pub fn occupation_of(&self, index: usize, mode: usize) -> usize {
        (index / self.stride(mode)) % self.levels()
    }

    pub fn total_photons(&self, index: usize) -> usize {
        self.occupation(index).iter().sum()
    }

    /// Basis with one extra mode appended (used for ancilla dilations).
    pub fn with_extra_mode(&self) -> Result<Self> {
        Self::new(self.n_modes + 1, self.cutoff)
    }

    /// Basis with `mode` removed.
    pub fn without_mode(&self, mode: usize) -> Result<Self> {
        self.check_mode(mode)?;
        Self::new(self.n_modes - 1, self.cutoff)
    }

    pub fn ensure_same(&self, other: &FockBasis) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::Dimension {
                expected: self.dim(),
                found: other.dim(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_is_lexicographic_mode_zero_slowest() {
        let b = FockBasis::two_mode(1);
        let occs: Vec<_> = (0..b.dim()).map(|i| b.occupation(i)).collect();
        assert_eq!(occs, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn index_round_trip() {
        let b = FockBasis::new(3, 4).unwrap();
        assert_eq!(b.dim(), 125);
        for i in 0..b.dim() {
            let occ = b.occupation(i);
            assert_eq!(b.index_of(&occ).unwrap(), i);
            for (m, &n) in occ.iter().enumerate() {
                assert_eq!(b.occupation_of(i, m), n);
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(FockBasis::new(0, 3).is_err());
        let b = FockBasis::two_mode(2);
        assert!(b.index_of(&[3, 0]).is_err());
        assert!(b.index_of(&[1]).is_err());
        assert!(matches!(b.check_mode(2), Err(Error::ModeOutOfRange { .. })));
    }
}
