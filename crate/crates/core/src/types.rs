//! Method-of-types machinery: compositions, type-class sizes, empirical laws.

use std::sync::LazyLock;

use crate::dist::Distribution;
use crate::error::{Error, Result};

/// Default cap on the number of compositions a single enumeration may produce.
pub const DEFAULT_TYPE_CAP: u128 = 10_000_000;

/// A composition of `n` into `alphabet_size` non-negative counts; the symbol
/// histogram shared by every sequence in one type class.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TypeComposition {
    counts: Vec<usize>,
    n: usize,
}

impl TypeComposition {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidInput("composition over empty alphabet".into()));
        }
        let n = counts.iter().sum();
        Ok(Self { counts, n })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alphabet_size(&self) -> usize {
        self.counts.len()
    }

    /// The empirical distribution `counts / n`.
    pub fn empirical(&self) -> Result<Distribution> {
        if self.n == 0 {
            return Err(Error::InvalidInput("empirical law of an empty composition".into()));
        }
        let n = self.n as f64;
        Distribution::new(self.counts.iter().map(|&c| c as f64 / n).collect())
    }

    /// Empirical entropy `H(counts / n)` in nats, directly from counts.
    pub fn empirical_entropy(&self) -> f64 {
        let n = self.n as f64;
        self.counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let f = c as f64 / n;
                -f * f.ln()
            })
            .sum()
    }

    /// A canonical member of the type class: symbols in non-decreasing order.
    pub fn representative(&self) -> Vec<usize> {
        let mut seq = Vec::with_capacity(self.n);
        for (symbol, &c) in self.counts.iter().enumerate() {
            seq.extend(std::iter::repeat(symbol).take(c));
        }
        seq
    }
}

/// Number of compositions of `n` into `k` parts: `C(n+k-1, k-1)`.
pub fn composition_count(n: usize, k: usize) -> u128 {
    // Binomial via the multiplicative formula; saturates on overflow.
    let (n, k) = (n as u128 + k as u128 - 1, k as u128 - 1);
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// All compositions of `n` into `alphabet_size` parts, each exactly once, in
/// lexicographically decreasing order of the count vector; the first entry is
/// `(n, 0, …, 0)` and the last `(0, …, 0, n)`.
pub fn enumerate_types(n: usize, alphabet_size: usize) -> Result<Vec<TypeComposition>> {
    enumerate_types_capped(n, alphabet_size, DEFAULT_TYPE_CAP)
}

/// As [`enumerate_types`], with an explicit cap on the composition count.
pub fn enumerate_types_capped(
    n: usize,
    alphabet_size: usize,
    cap: u128,
) -> Result<Vec<TypeComposition>> {
    if alphabet_size == 0 {
        return Err(Error::InvalidInput("alphabet size must be at least 1".into()));
    }
    let count = composition_count(n, alphabet_size);
    if count > cap {
        return Err(Error::ResourceLimit(format!(
            "{count} compositions of {n} into {alphabet_size} parts exceed the cap {cap}"
        )));
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut current = vec![0usize; alphabet_size];
    fill_types(n, 0, &mut current, &mut out);
    Ok(out)
}

fn fill_types(remaining: usize, pos: usize, current: &mut Vec<usize>, out: &mut Vec<TypeComposition>) {
    if pos == current.len() - 1 {
        current[pos] = remaining;
        out.push(TypeComposition { counts: current.clone(), n: current.iter().sum() });
        return;
    }
    for c in (0..=remaining).rev() {
        current[pos] = c;
        fill_types(remaining - c, pos + 1, current, out);
    }
    current[pos] = 0;
}

/// `ln |T(Q)|`: the log multinomial coefficient `n! / Π counts_i!`.
///
/// Computed in the log domain; relative accuracy better than 1e-10 for
/// `n` up to 10^6.
pub fn log_type_class_size(t: &TypeComposition) -> f64 {
    ln_factorial(t.n as u64) - t.counts.iter().map(|&c| ln_factorial(c as u64)).sum::<f64>()
}

/// Relative frequency vector of a symbol sequence.
pub fn empirical_distribution(x: &[usize], alphabet_size: usize) -> Result<Distribution> {
    let t = sequence_type(x, alphabet_size)?;
    t.empirical()
}

/// Symbol histogram of a sequence as a [`TypeComposition`].
pub fn sequence_type(x: &[usize], alphabet_size: usize) -> Result<TypeComposition> {
    if x.is_empty() {
        return Err(Error::InvalidInput("empty sequence has no empirical law".into()));
    }
    let mut counts = vec![0usize; alphabet_size];
    for &s in x {
        if s >= alphabet_size {
            return Err(Error::OutOfAlphabet { symbol: s, alphabet_size });
        }
        counts[s] += 1;
    }
    Ok(TypeComposition { counts, n: x.len() })
}

const LN_FACT_TABLE_SIZE: usize = 1024;

static LN_FACT_TABLE: LazyLock<Vec<f64>> = LazyLock::new(|| {
    let mut table = vec![0.0_f64; LN_FACT_TABLE_SIZE];
    for i in 2..LN_FACT_TABLE_SIZE {
        table[i] = table[i - 1] + (i as f64).ln();
    }
    table
});

/// `ln n!` via a cumulative table for small `n` and a Stirling series beyond.
pub fn ln_factorial(n: u64) -> f64 {
    if (n as usize) < LN_FACT_TABLE_SIZE {
        return LN_FACT_TABLE[n as usize];
    }
    // Stirling with correction terms; remainder < 1/(1188 n^9), far below
    // f64 resolution at n >= 1024.
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    (x + 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::log_sum_exp;

    #[test]
    fn enumeration_order_and_counts() {
        let ts = enumerate_types(2, 2).unwrap();
        let counts: Vec<&[usize]> = ts.iter().map(|t| t.counts()).collect();
        assert_eq!(counts, vec![&[2, 0][..], &[1, 1], &[0, 2]]);

        assert_eq!(enumerate_types(4, 3).unwrap().len(), 15);

        let ts = enumerate_types(0, 3).unwrap();
        assert_eq!(ts.len(), 1);
        assert_eq!(ts[0].counts(), &[0, 0, 0]);
    }

    #[test]
    fn enumeration_cap() {
        assert!(matches!(
            enumerate_types_capped(100, 6, 1000),
            Err(Error::ResourceLimit(_))
        ));
        assert_eq!(composition_count(100, 6), 96_560_646);
    }

    #[test]
    fn type_class_sizes() {
        let t = |c: &[usize]| TypeComposition::new(c.to_vec()).unwrap();
        assert_eq!(log_type_class_size(&t(&[2, 0])), 0.0);
        assert!((log_type_class_size(&t(&[1, 1])) - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((log_type_class_size(&t(&[2, 2])) - 6.0_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn ln_factorial_accuracy() {
        // Exact for small n.
        let mut exact = 0.0;
        for n in 1..=20u64 {
            exact += (n as f64).ln();
            assert!((ln_factorial(n) - exact).abs() < 1e-12 * exact.max(1.0));
        }
        // Frozen high-precision references.
        assert!((ln_factorial(100) - 363.73937555556349).abs() < 1e-10 * 363.7);
        assert!((ln_factorial(1_000_000) - 12_815_518.384658169).abs() < 1e-10 * 1.3e7);
        // Table/Stirling seam.
        let seam = (LN_FACT_TABLE_SIZE - 1) as u64;
        let stirl = {
            let x = seam as f64;
            let inv = 1.0 / x;
            let inv2 = inv * inv;
            (x + 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln()
                + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
        };
        assert!((ln_factorial(seam) - stirl).abs() < 1e-10);
    }

    #[test]
    fn type_sizes_sum_to_alphabet_power() {
        // Σ_types |T| = k^n, checked in the log domain for n <= 12.
        for &(n, k) in &[(12usize, 2usize), (8, 3), (5, 4)] {
            let total = log_sum_exp(
                &enumerate_types(n, k)
                    .unwrap()
                    .iter()
                    .map(log_type_class_size)
                    .collect::<Vec<_>>(),
            );
            let expect = n as f64 * (k as f64).ln();
            assert!((total - expect).abs() < 1e-10, "n={n} k={k}: {total} vs {expect}");
        }
    }

    #[test]
    fn empirical_examples() {
        let d = empirical_distribution(&[0, 0, 1, 1], 2).unwrap();
        assert_eq!(d.probs(), &[0.5, 0.5]);
        let d = empirical_distribution(&[0, 0, 0], 2).unwrap();
        assert_eq!(d.probs(), &[1.0, 0.0]);
        let d = empirical_distribution(&[0, 1, 1, 1], 2).unwrap();
        assert_eq!(d.probs(), &[0.25, 0.75]);
        assert!(matches!(
            empirical_distribution(&[0, 3], 2),
            Err(Error::OutOfAlphabet { symbol: 3, .. })
        ));
        assert!(empirical_distribution(&[], 2).is_err());
    }

    #[test]
    fn representative_has_the_right_type() {
        let t = TypeComposition::new(vec![2, 0, 3]).unwrap();
        let rep = t.representative();
        assert_eq!(rep, vec![0, 0, 2, 2, 2]);
        assert_eq!(sequence_type(&rep, 3).unwrap(), t);
    }

    #[test]
    fn empirical_entropy_matches_distribution_entropy() {
        let t = TypeComposition::new(vec![1, 3]).unwrap();
        let h = crate::dist::entropy(&t.empirical().unwrap());
        assert!((t.empirical_entropy() - h).abs() < 1e-15);
    }
}
