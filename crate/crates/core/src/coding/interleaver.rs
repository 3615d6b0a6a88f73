use rand::seq::SliceRandom;

use crate::rng::{substream, Stream};

/// Seeded uniform permutation: `out[i] = in[perm[i]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interleaver {
    perm: Vec<usize>,
}

impl Interleaver {
    pub fn new(len: usize, seed: u64) -> Self {
        let mut perm: Vec<usize> = (0..len).collect();
        let mut rng = substream(seed, &[len as u64], Stream::Interleaver);
        perm.shuffle(&mut rng);
        Self { perm }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn apply<T: Copy>(&self, data: &[T]) -> Vec<T> {
        assert_eq!(data.len(), self.perm.len(), "interleaver length mismatch");
        self.perm.iter().map(|&p| data[p]).collect()
    }

    pub fn invert<T: Copy + Default>(&self, data: &[T]) -> Vec<T> {
        assert_eq!(data.len(), self.perm.len(), "interleaver length mismatch");
        let mut out = vec![T::default(); data.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            out[p] = data[i];
        }
        out
    }
}

pub fn interleave<T: Copy>(data: &[T], seed: u64) -> Vec<T> {
    Interleaver::new(data.len(), seed).apply(data)
}

pub fn deinterleave<T: Copy + Default>(data: &[T], seed: u64) -> Vec<T> {
    Interleaver::new(data.len(), seed).invert(data)
}
