use super::ParityCheckMatrix;

/// Systematic encoder from Gauss–Jordan elimination of `H` over GF(2).
///
/// Pivot columns carry parity; the remaining `k = n − rank(H)` columns carry
/// the message in increasing column order.
#[derive(Debug, Clone)]
pub struct SystematicEncoder {
    n: usize,
    info_cols: Vec<usize>,
    /// For each pivot column, the message positions it sums, as a bit row
    /// over `info_cols`.
    parity: Vec<(usize, Vec<u64>)>,
}

fn words(bits: usize) -> usize {
    bits.div_ceil(64)
}

impl SystematicEncoder {
    pub fn new(h: &ParityCheckMatrix) -> Self {
        let n = h.n();
        let w = words(n);
        let mut rows: Vec<Vec<u64>> = h
            .rows()
            .iter()
            .map(|r| {
                let mut v = vec![0u64; w];
                for &j in r {
                    v[j as usize / 64] ^= 1 << (j % 64);
                }
                v
            })
            .collect();
        let mut pivots = Vec::new();
        let mut rank = 0;
        for col in 0..n {
            let (word, bit) = (col / 64, 1u64 << (col % 64));
            let Some(p) = (rank..rows.len()).find(|&r| rows[r][word] & bit != 0) else {
                continue;
            };
            rows.swap(rank, p);
            let pivot = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && row[word] & bit != 0 {
                    row.iter_mut().zip(&pivot).for_each(|(a, b)| *a ^= b);
                }
            }
            pivots.push(col);
            rank += 1;
            if rank == rows.len() {
                break;
            }
        }
        let mut is_pivot = vec![false; n];
        pivots.iter().for_each(|&c| is_pivot[c] = true);
        let info_cols: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
        let parity = pivots
            .iter()
            .zip(&rows)
            .map(|(&pc, row)| {
                let mut v = vec![0u64; words(info_cols.len())];
                for (k, &c) in info_cols.iter().enumerate() {
                    if row[c / 64] >> (c % 64) & 1 == 1 {
                        v[k / 64] |= 1 << (k % 64);
                    }
                }
                (pc, v)
            })
            .collect();
        Self { n, info_cols, parity }
    }

    /// Message length `k`.
    pub fn k(&self) -> usize {
        self.info_cols.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Columns holding the message bits.
    pub fn info_columns(&self) -> &[usize] {
        &self.info_cols
    }

    pub fn encode(&self, message: &[u8]) -> Vec<u8> {
        assert_eq!(message.len(), self.k(), "message length");
        let mut packed = vec![0u64; words(self.k())];
        for (k, &b) in message.iter().enumerate() {
            if b & 1 == 1 {
                packed[k / 64] |= 1 << (k % 64);
            }
        }
        let mut word = vec![0u8; self.n];
        for (&c, &b) in self.info_cols.iter().zip(message) {
            word[c] = b & 1;
        }
        for (pc, row) in &self.parity {
            let ones: u32 = row.iter().zip(&packed).map(|(a, b)| (a & b).count_ones()).sum();
            word[*pc] = (ones & 1) as u8;
        }
        word
    }
}
