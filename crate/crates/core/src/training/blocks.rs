// SPDX-License-Identifier: MIT OR Apache-2.0

//! Packing tokenized segments into fixed-length training blocks.

use crate::corpus::{PAD, SEP};

/// One training block: `block_size` input tokens and next-token labels.
///
/// `labels[t]` is the token at `t + 1` inside the block, or `None` at the last
/// real position and on padding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub tokens: Vec<usize>,
    pub labels: Vec<Option<usize>>,
}

impl Block {
    pub fn label_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_some()).count()
    }
}

/// Concatenate segments, each preceded by the separator token.
pub fn segment_stream<'a>(segments: impl IntoIterator<Item = &'a [usize]>) -> Vec<usize> {
    let mut out = Vec::new();
    for s in segments {
        out.push(SEP);
        out.extend_from_slice(s);
    }
    out
}

/// Chunk a token stream into blocks; the last partial block is padded.
pub fn pack_blocks(stream: &[usize], block_size: usize) -> Vec<Block> {
    assert!(block_size >= 1, "block size must be positive");
    stream
        .chunks(block_size)
        .map(|chunk| {
            let mut tokens = chunk.to_vec();
            let n = tokens.len();
            tokens.resize(block_size, PAD);
            let labels = (0..block_size)
                .map(|t| (t + 1 < n).then(|| chunk[t + 1]))
                .collect();
            Block { tokens, labels }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_multiple() {
        let s: Vec<usize> = (3..3 + 16).collect();
        let b = pack_blocks(&s, 8);
        assert_eq!(b.len(), 2);
        assert_eq!(b[1].tokens[0], 11);
        assert_eq!(b[0].labels[6], Some(10));
        assert_eq!(b[0].labels[7], None);
    }

    #[test]
    fn partial_block_is_padded_and_masked() {
        let s: Vec<usize> = (3..3 + 9).collect();
        let b = pack_blocks(&s, 8);
        assert_eq!(b.len(), 2);
        assert_eq!(b[1].tokens, vec![11, PAD, PAD, PAD, PAD, PAD, PAD, PAD]);
        assert!(b[1].labels.iter().all(Option::is_none));
    }

    #[test]
    fn segments_start_with_separator() {
        let a = [5usize, 6];
        let b = [7usize];
        assert_eq!(segment_stream([&a[..], &b[..]]), vec![SEP, 5, 6, SEP, 7]);
    }
}
