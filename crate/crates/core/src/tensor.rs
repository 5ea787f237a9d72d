//! Triple-product tensor `G[p][q][l] = ∫_{S⁴} Z_p Z_q Z_l dx`.
//!
//! Only admissible triples are stored: sorted `p ≤ q ≤ l` with `l ≤ p + q`
//! and `p + q + l` even. Every other entry is exactly zero by the degree
//! selection rule and parity.

use std::io::{Read, Write};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::quadrature::QuadratureRule;
use crate::zonal::ZonalTable;

const MAGIC: &[u8; 8] = b"ZNLSG3\0\0";
const VERSION: u32 = 1;
const RECORD_BYTES: usize = 3 * 4 + 8;
const HEADER_BYTES: usize = 8 + 4 + 4 + 8 + 8;

/// Whether `G[p][q][l]` can be nonzero.
pub fn admissible(p: usize, q: usize, l: usize) -> bool {
    let [a, b, c] = sorted(p, q, l);
    (a + b + c) % 2 == 0 && c <= a + b
}

fn sorted(p: usize, q: usize, l: usize) -> [usize; 3] {
    let mut s = [p, q, l];
    s.sort_unstable();
    s
}

/// Sparse, fully symmetric triple-product tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleProductTensor {
    max_degree: usize,
    rule_fingerprint: u64,
    offsets: Vec<usize>,
    values: Vec<f64>,
}

/// First admissible `l ≥ q` for sorted `p ≤ q`, and the count of entries.
fn slice_shape(max_degree: usize, p: usize, q: usize) -> (usize, usize) {
    let start = if p.is_multiple_of(2) { q } else { q + 1 };
    let end = (p + q).min(max_degree);
    let count = if start > end { 0 } else { (end - start) / 2 + 1 };
    (start, count)
}

fn layout(max_degree: usize) -> (Vec<usize>, usize) {
    let w = max_degree + 1;
    let mut offsets = vec![0; w * w];
    let mut total = 0;
    for p in 0..=max_degree {
        for q in p..=max_degree {
            offsets[p * w + q] = total;
            total += slice_shape(max_degree, p, q).1;
        }
    }
    (offsets, total)
}

impl TripleProductTensor {
    /// Computes every admissible entry for `p, q, l ≤ max_degree`.
    ///
    /// The rule must integrate degree `3 · max_degree` exactly.
    pub fn build(max_degree: usize, rule: &QuadratureRule) -> Result<Self> {
        rule.require_degree(3 * max_degree)?;
        let table = ZonalTable::new(max_degree, rule);
        let w = rule.weights();
        let (offsets, total) = layout(max_degree);
        let columns: Vec<Vec<f64>> = (0..=max_degree).map(|p| table.column(p)).collect();

        let mut values = vec![0.0; total];
        // each p owns a contiguous block of the layout
        let mut blocks: Vec<(usize, &mut [f64])> = Vec::with_capacity(max_degree + 1);
        let mut rest = values.as_mut_slice();
        for p in 0..=max_degree {
            let len: usize = (p..=max_degree).map(|q| slice_shape(max_degree, p, q).1).sum();
            let (head, tail) = rest.split_at_mut(len);
            blocks.push((p, head));
            rest = tail;
        }
        blocks.into_par_iter().for_each(|(p, block)| {
            let mut weighted = vec![0.0; w.len()];
            let mut pos = 0;
            for q in p..=max_degree {
                let (start, count) = slice_shape(max_degree, p, q);
                if count == 0 {
                    continue;
                }
                for (i, v) in weighted.iter_mut().enumerate() {
                    *v = w[i] * columns[p][i] * columns[q][i];
                }
                for k in 0..count {
                    let l = start + 2 * k;
                    block[pos] = weighted.iter().zip(&columns[l]).map(|(a, b)| a * b).sum();
                    pos += 1;
                }
            }
        });

        Ok(Self {
            max_degree,
            rule_fingerprint: rule.fingerprint(),
            offsets,
            values,
        })
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn rule_fingerprint(&self) -> u64 {
        self.rule_fingerprint
    }

    /// Number of stored (admissible, sorted) entries.
    pub fn stored_len(&self) -> usize {
        self.values.len()
    }

    /// `G[p][q][l]` in any index order.
    ///
    /// # Panics
    /// If an index exceeds the max degree.
    pub fn get(&self, p: usize, q: usize, l: usize) -> f64 {
        let [a, b, c] = sorted(p, q, l);
        assert!(
            c <= self.max_degree,
            "degree {c} exceeds tensor max {}",
            self.max_degree
        );
        if (a + b + c) % 2 != 0 || c > a + b {
            return 0.0;
        }
        let (start, _) = slice_shape(self.max_degree, a, b);
        let base = self.offsets[a * (self.max_degree + 1) + b];
        self.values[base + (c - start) / 2]
    }

    /// Nonzero `(l, G[p][q][l])` for fixed `p, q`, with `l ≤ max_degree`.
    pub fn fiber(&self, p: usize, q: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = p.abs_diff(q);
        let hi = (p + q).min(self.max_degree);
        (lo..=hi).step_by(2).map(move |l| (l, self.get(p, q, l)))
    }

    /// Stored entries as sorted `(p, q, l, value)` records.
    pub fn records(&self) -> impl Iterator<Item = (usize, usize, usize, f64)> + '_ {
        let m = self.max_degree;
        (0..=m).flat_map(move |p| {
            (p..=m).flat_map(move |q| {
                let (start, count) = slice_shape(m, p, q);
                (0..count).map(move |k| {
                    let l = start + 2 * k;
                    (p, q, l, self.get(p, q, l))
                })
            })
        })
    }

    /// Binary cache: header `(magic, version, P, rule fingerprint, count)`,
    /// then `(p: u32, q: u32, l: u32, value: f64)` records, then a SHA-256
    /// of everything before it. All little-endian.
    pub fn write_cache(&self, mut w: impl Write) -> Result<()> {
        let mut buf = Vec::with_capacity(HEADER_BYTES + RECORD_BYTES * self.values.len() + 32);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.max_degree as u32).to_le_bytes());
        buf.extend_from_slice(&self.rule_fingerprint.to_le_bytes());
        buf.extend_from_slice(&(self.values.len() as u64).to_le_bytes());
        for (p, q, l, v) in self.records() {
            buf.extend_from_slice(&(p as u32).to_le_bytes());
            buf.extend_from_slice(&(q as u32).to_le_bytes());
            buf.extend_from_slice(&(l as u32).to_le_bytes());
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let digest = Sha256::digest(&buf);
        buf.extend_from_slice(&digest);
        w.write_all(&buf).map_err(|e| Error::Cache(e.to_string()))
    }

    /// Reads a cache produced by [`write_cache`](Self::write_cache),
    /// rejecting any structural or checksum mismatch.
    pub fn read_cache(mut r: impl Read) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf).map_err(|e| Error::Cache(e.to_string()))?;
        if buf.len() < HEADER_BYTES + 32 {
            return Err(Error::Cache("truncated header".into()));
        }
        let (body, digest) = buf.split_at(buf.len() - 32);
        if Sha256::digest(body).as_slice() != digest {
            return Err(Error::Cache("checksum mismatch".into()));
        }
        if &body[..8] != MAGIC {
            return Err(Error::Cache("bad magic".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(body[o..o + 4].try_into().unwrap());
        let u64_at = |o: usize| u64::from_le_bytes(body[o..o + 8].try_into().unwrap());
        let version = u32_at(8);
        if version != VERSION {
            return Err(Error::Cache(format!("unsupported version {version}")));
        }
        let max_degree = u32_at(12) as usize;
        let rule_fingerprint = u64_at(16);
        let count = u64_at(24) as usize;
        let (offsets, total) = layout(max_degree);
        if count != total || body.len() != HEADER_BYTES + count * RECORD_BYTES {
            return Err(Error::Cache(format!(
                "record count {count} does not match layout {total}"
            )));
        }
        let mut values = Vec::with_capacity(count);
        let mut shell = Self {
            max_degree,
            rule_fingerprint,
            offsets,
            values: vec![0.0; total],
        };
        let expected: Vec<(usize, usize, usize)> = shell.records().map(|(p, q, l, _)| (p, q, l)).collect();
        for (k, &(p, q, l)) in expected.iter().enumerate() {
            let o = HEADER_BYTES + k * RECORD_BYTES;
            let got = (u32_at(o) as usize, u32_at(o + 4) as usize, u32_at(o + 8) as usize);
            if got != (p, q, l) {
                return Err(Error::Cache(format!(
                    "record {k} indexes {got:?}, expected {:?}",
                    (p, q, l)
                )));
            }
            values.push(f64::from_le_bytes(body[o + 12..o + 20].try_into().unwrap()));
        }
        shell.values = values;
        Ok(shell)
    }
}
