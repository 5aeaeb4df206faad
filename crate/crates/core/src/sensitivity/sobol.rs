//! Unscrambled Sobol low-discrepancy sequence with Joe–Kuo direction
//! numbers, in Gray-code order.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

const BITS: usize = 32;

/// `(s, a, m_1..m_s)` for dimensions 2..=16.
const JOE_KUO: [(u32, u32, &[u32]); 15] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
    (5, 4, &[1, 1, 5, 5, 5]),
    (5, 7, &[1, 1, 7, 11, 19]),
    (5, 11, &[1, 1, 5, 1, 1]),
    (5, 13, &[1, 1, 1, 3, 11]),
    (5, 14, &[1, 3, 5, 5, 31]),
    (6, 1, &[1, 3, 3, 9, 7, 49]),
    (6, 13, &[1, 1, 1, 15, 21, 21]),
    (6, 16, &[1, 3, 1, 13, 27, 49]),
];

pub const MAX_DIM: usize = JOE_KUO.len() + 1;

#[derive(Debug, Clone)]
pub struct SobolSequence {
    directions: Vec<[u32; BITS]>,
    state: Vec<u32>,
    index: u64,
}

impl SobolSequence {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::config(alloc::format!(
                "Sobol dimension must be in 1..={MAX_DIM}"
            )));
        }
        let mut directions = vec![[0u32; BITS]; dim];
        for (k, v) in directions[0].iter_mut().enumerate() {
            *v = 1u32 << (BITS - 1 - k);
        }
        for (d, dirs) in directions.iter_mut().enumerate().skip(1) {
            let (s, a, m) = JOE_KUO[d - 1];
            let s = s as usize;
            for k in 0..s.min(BITS) {
                dirs[k] = m[k] << (BITS - 1 - k);
            }
            for k in s..BITS {
                let mut v = dirs[k - s] ^ (dirs[k - s] >> s);
                for j in 1..s {
                    if (a >> (s - 1 - j)) & 1 == 1 {
                        v ^= dirs[k - j];
                    }
                }
                dirs[k] = v;
            }
        }
        Ok(SobolSequence {
            directions,
            state: vec![0; dim],
            index: 0,
        })
    }

    /// Next point; the first call returns the origin.
    pub fn next_point(&mut self) -> Vec<f64> {
        let scale = 1.0 / (1u64 << BITS) as f64;
        let out = self.state.iter().map(|&x| f64::from(x) * scale).collect();
        let c = (!self.index).trailing_zeros() as usize;
        assert!(c < BITS, "Sobol sequence exhausted");
        for (x, dirs) in self.state.iter_mut().zip(&self.directions) {
            *x ^= dirs[c];
        }
        self.index += 1;
        out
    }
}
