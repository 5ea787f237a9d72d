//! Exact enumeration of resonance sets for the spectrum `n(n+3)` and of
//! lattice representations `k₁² + σk₂² = M`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::DyadicBand;
use crate::zonal::eigenvalue_int;

/// Largest enumeration (product of band sizes) accepted by the set builders.
pub const ENUMERATION_BUDGET: u128 = 100_000_000;

/// Largest window scale for which `i64` arithmetic cannot overflow.
pub const MAX_COUNT_SCALE: u64 = 1 << 20;

fn isqrt(v: i64) -> Option<i64> {
    if v < 0 {
        return None;
    }
    let mut r = (v as f64).sqrt() as i64;
    while r * r > v {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= v {
        r += 1;
    }
    (r * r == v).then_some(r)
}

fn check_scale(n: u64, sigma: i64) -> Result<()> {
    if n == 0 || n > MAX_COUNT_SCALE {
        return Err(Error::InvalidParameter(format!("window scale {n} outside 1..=2^20")));
    }
    if sigma != 1 && sigma != -1 {
        return Err(Error::InvalidParameter(format!("sigma must be ±1, got {sigma}")));
    }
    Ok(())
}

/// `#{(k₁, k₂) : N ≤ k₁ ≤ 2N, 0 ≤ k₂ ≤ 2N, k₁² + σk₂² = M}`.
pub fn count_representations(n: u64, sigma: i64, m: i64) -> Result<u64> {
    check_scale(n, sigma)?;
    let n = n as i64;
    let mut count = 0;
    for k1 in n..=2 * n {
        if let Some(k2) = isqrt(sigma * (m - k1 * k1)) {
            if k2 <= 2 * n {
                count += 1;
            }
        }
    }
    Ok(count)
}

/// Result of [`max_count_scan`]; `m_star` is the smallest maximizing `M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountMax {
    pub n: u64,
    pub sigma: i64,
    pub m_star: i64,
    pub max_count: u64,
    pub excluded_degenerate: bool,
}

impl CountMax {
    /// `log(max_count) / log N`.
    pub fn exponent(&self) -> f64 {
        (self.max_count as f64).ln() / (self.n as f64).ln()
    }
}

/// Maximum of [`count_representations`] over every attainable `M`,
/// optionally skipping the degenerate line `σ = −1, M = 0`.
pub fn max_count_scan(n: u64, sigma: i64, exclude_degenerate: bool) -> Result<CountMax> {
    check_scale(n, sigma)?;
    let ni = n as i64;
    let mut values: Vec<i64> = (ni..=2 * ni)
        .into_par_iter()
        .flat_map_iter(|k1| (0..=2 * ni).map(move |k2| k1 * k1 + sigma * k2 * k2))
        .collect();
    values.par_sort_unstable();
    let skip = exclude_degenerate && sigma == -1;
    let (mut m_star, mut max_count) = (0i64, 0u64);
    for run in values.chunk_by(|x, y| x == y) {
        let m = run[0];
        if skip && m == 0 {
            continue;
        }
        if run.len() as u64 > max_count {
            max_count = run.len() as u64;
            m_star = m;
        }
    }
    Ok(CountMax {
        n,
        sigma,
        m_star,
        max_count,
        excluded_degenerate: skip,
    })
}

/// CSV with columns `N, sigma, M_star, max_count, excluded_degenerate`.
pub fn counting_csv(rows: &[CountMax]) -> String {
    let mut out = String::from("N,sigma,M_star,max_count,excluded_degenerate\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.n, r.sigma, r.m_star, r.max_count, r.excluded_degenerate
        )
        .expect("writing to a String");
    }
    out
}

/// Tuples `(n_j)` with `n_j` in band `j` and `Σ ε_j n_j(n_j+3) = k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceQuery {
    pub k: i64,
    pub bands: Vec<DyadicBand>,
    pub signs: Vec<i64>,
}

fn degree_of_eigenvalue(mu: i64) -> Option<usize> {
    // n(n+3) = μ ⇔ (2n+3)² = 4μ + 9
    let r = isqrt(4 * mu + 9)?;
    (r >= 3 && r % 2 == 1).then(|| ((r - 3) / 2) as usize)
}

impl ResonanceQuery {
    pub fn new(k: i64, bands: Vec<DyadicBand>, signs: Vec<i64>) -> Result<Self> {
        if bands.is_empty() || bands.len() != signs.len() {
            return Err(Error::InvalidParameter(format!(
                "{} bands but {} signs",
                bands.len(),
                signs.len()
            )));
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidParameter("signs must be ±1".into()));
        }
        Ok(Self { k, bands, signs })
    }

    /// Every solution, in lexicographic order. The last index is solved for
    /// rather than enumerated.
    pub fn solve(&self) -> Result<Vec<Vec<usize>>> {
        let degrees: Vec<Vec<usize>> = self.bands.iter().map(|b| b.degrees()).collect();
        let size: u128 = degrees.iter().map(|d| d.len() as u128).product();
        if size > ENUMERATION_BUDGET {
            return Err(Error::BudgetExceeded {
                size,
                budget: ENUMERATION_BUDGET,
            });
        }
        let last = degrees.len() - 1;
        let last_sign = self.signs[last];
        let mut out = Vec::new();
        let mut idx = vec![0usize; last];
        if degrees[..last].iter().any(|d| d.is_empty()) || degrees[last].is_empty() {
            return Ok(out);
        }
        loop {
            let partial: i64 = idx
                .iter()
                .enumerate()
                .map(|(j, &i)| self.signs[j] * eigenvalue_int(degrees[j][i]))
                .sum();
            let mu = last_sign * (self.k - partial);
            if let Some(n) = degree_of_eigenvalue(mu).filter(|n| self.bands[last].contains(*n)) {
                let mut t: Vec<usize> = idx.iter().enumerate().map(|(j, &i)| degrees[j][i]).collect();
                t.push(n);
                out.push(t);
            }
            let mut j = last;
            loop {
                if j == 0 {
                    return Ok(out);
                }
                j -= 1;
                idx[j] += 1;
                if idx[j] < degrees[j].len() {
                    break;
                }
                idx[j] = 0;
            }
        }
    }
}

/// `Λ(k)`: quadruples with `μ₁ − μ₂ + μ₃ − μ₄ = k`.
pub fn lambda_set(k: i64, bands: [DyadicBand; 4]) -> Result<Vec<[usize; 4]>> {
    let q = ResonanceQuery::new(k, bands.to_vec(), vec![1, -1, 1, -1])?;
    Ok(q.solve()?.into_iter().map(|t| [t[0], t[1], t[2], t[3]]).collect())
}

/// `Γ(a)`: pairs with `ε₁μ₁ + ε₂μ₂ = a`.
pub fn gamma_set(a: i64, bands: [DyadicBand; 2], signs: [i64; 2]) -> Result<Vec<(usize, usize)>> {
    let q = ResonanceQuery::new(a, bands.to_vec(), signs.to_vec())?;
    Ok(q.solve()?.into_iter().map(|t| (t[0], t[1])).collect())
}

/// `a ↦ |Γ(a)|` over every attainable `a`.
pub fn gamma_histogram(bands: [DyadicBand; 2], signs: [i64; 2]) -> BTreeMap<i64, usize> {
    let mut hist = BTreeMap::new();
    for p in bands[0].degrees() {
        for q in bands[1].degrees() {
            *hist
                .entry(signs[0] * eigenvalue_int(p) + signs[1] * eigenvalue_int(q))
                .or_insert(0) += 1;
        }
    }
    hist
}
