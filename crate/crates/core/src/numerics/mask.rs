use crate::error::{Error, Result};

/// Per-position validity flags: `true` is a real token, `false` is padding.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mask(Vec<bool>);

impl Mask {
    pub fn all_valid(len: usize) -> Self {
        Mask(vec![true; len])
    }

    /// `valid` leading positions followed by `len - valid` padding positions.
    pub fn prefix(len: usize, valid: usize) -> Self {
        Mask((0..len).map(|i| i < valid).collect())
    }

    pub fn from_flags(flags: Vec<bool>) -> Self {
        Mask(flags)
    }

    pub fn flags(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn is_valid(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn valid_count(&self) -> usize {
        self.0.iter().filter(|&&v| v).count()
    }

    pub fn valid_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &v)| v).map(|(i, _)| i)
    }

    pub(crate) fn require_nonempty(&self, op: &'static str) -> Result<()> {
        if self.valid_count() == 0 {
            Err(Error::DegenerateMask(op))
        } else {
            Ok(())
        }
    }
}
