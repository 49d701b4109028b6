use super::ParityCheckMatrix;
use crate::llr::{saturate, LLR_CLIP};

pub const DEFAULT_DECODER_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeOutcome {
    /// Hard decisions, bit 1 where the posterior LLR is negative.
    pub bits: Vec<u8>,
    /// True iff `bits` has zero syndrome.
    pub converged: bool,
    pub iterations: usize,
}

/// `2·atanh(tanh(a/2)·tanh(b/2))` as `sign·min(|a|,|b|) + ln(1+e^{−|a+b|}) − ln(1+e^{−|a−b|})`.
#[inline]
pub fn boxplus(a: f64, b: f64) -> f64 {
    let s = if (a < 0.0) != (b < 0.0) { -1.0 } else { 1.0 };
    s * a.abs().min(b.abs()) + (-(a + b).abs()).exp().ln_1p() - (-(a - b).abs()).exp().ln_1p()
}

/// Flooding sum-product decoder with buffers sized for one matrix.
#[derive(Debug, Clone)]
pub struct SumProductDecoder<'a> {
    h: &'a ParityCheckMatrix,
    /// Edge ids of each bit; edges are numbered row by row.
    bit_edges: Vec<Vec<u32>>,
    /// Bit of each edge.
    edge_bit: Vec<u32>,
    row_start: Vec<usize>,
    v2c: Vec<f64>,
    c2v: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'a> SumProductDecoder<'a> {
    pub fn new(h: &'a ParityCheckMatrix) -> Self {
        let mut bit_edges = vec![Vec::new(); h.n()];
        let mut edge_bit = Vec::with_capacity(h.edges());
        let mut row_start = Vec::with_capacity(h.m() + 1);
        for row in h.rows() {
            row_start.push(edge_bit.len());
            for &j in row {
                bit_edges[j as usize].push(edge_bit.len() as u32);
                edge_bit.push(j);
            }
        }
        row_start.push(edge_bit.len());
        let e = edge_bit.len();
        Self {
            h,
            bit_edges,
            edge_bit,
            row_start,
            v2c: vec![0.0; e],
            c2v: vec![0.0; e],
            scratch: Vec::new(),
        }
    }

    pub fn decode(&mut self, channel: &[f64], max_iter: usize) -> DecodeOutcome {
        assert_eq!(channel.len(), self.h.n(), "one channel LLR per bit");
        let channel: Vec<f64> = channel.iter().map(|&l| saturate(l)).collect();
        let mut bits: Vec<u8> = channel.iter().map(|&l| u8::from(l < 0.0)).collect();
        if self.h.is_codeword(&bits) {
            return DecodeOutcome {
                bits,
                converged: true,
                iterations: 0,
            };
        }
        for (e, &j) in self.edge_bit.iter().enumerate() {
            self.v2c[e] = channel[j as usize];
        }
        for it in 1..=max_iter {
            self.check_update();
            for (j, edges) in self.bit_edges.iter().enumerate() {
                let total = channel[j] + edges.iter().map(|&e| self.c2v[e as usize]).sum::<f64>();
                for &e in edges {
                    self.v2c[e as usize] = (total - self.c2v[e as usize]).clamp(-LLR_CLIP, LLR_CLIP);
                }
                bits[j] = u8::from(total < 0.0);
            }
            if self.h.is_codeword(&bits) {
                return DecodeOutcome {
                    bits,
                    converged: true,
                    iterations: it,
                };
            }
        }
        DecodeOutcome {
            bits,
            converged: false,
            iterations: max_iter,
        }
    }

    /// Extrinsic box-plus over each row via forward and backward partials.
    fn check_update(&mut self) {
        for r in 0..self.h.m() {
            let (lo, hi) = (self.row_start[r], self.row_start[r + 1]);
            let d = hi - lo;
            let msgs = &self.v2c[lo..hi];
            self.scratch.clear();
            self.scratch.resize(d, 0.0);
            // scratch[k] = m_0 ⊞ … ⊞ m_{k−1}
            let mut acc = f64::INFINITY;
            for k in 0..d {
                self.scratch[k] = acc;
                acc = if k == 0 { msgs[0] } else { boxplus(acc, msgs[k]) };
            }
            let mut back = f64::INFINITY;
            for k in (0..d).rev() {
                let out = match (k == 0, k == d - 1) {
                    (true, true) => 0.0,
                    (true, false) => back,
                    (false, true) => self.scratch[k],
                    (false, false) => boxplus(self.scratch[k], back),
                };
                self.c2v[lo + k] = out.clamp(-LLR_CLIP, LLR_CLIP);
                back = if k == d - 1 { msgs[k] } else { boxplus(back, msgs[k]) };
            }
        }
    }
}

/// One-shot decode; see [`SumProductDecoder`].
pub fn decode_sum_product(h: &ParityCheckMatrix, channel: &[f64], max_iter: usize) -> DecodeOutcome {
    SumProductDecoder::new(h).decode(channel, max_iter)
}
