use statrs::distribution::{ChiSquared, ContinuousCDF};

/// `q_alpha / sqrt(2)` of the studentized range at infinite degrees of
/// freedom, for k = 2..=20 treatments.
const Q_05: [f64; 19] = [
    1.959964, 2.343701, 2.569032, 2.727774, 2.849705, 2.948320, 3.030878, 3.101730, 3.163684,
    3.218654, 3.268004, 3.312739, 3.353618, 3.391230, 3.426041, 3.458425, 3.488685, 3.517073,
    3.543799,
];
const Q_01: [f64; 19] = [
    2.575829, 2.913494, 3.113250, 3.254686, 3.363740, 3.452213, 3.526471, 3.590339, 3.646292,
    3.696021, 3.740733, 3.781318, 3.818451, 3.852654, 3.884343, 3.913850, 3.941446, 3.967357,
    3.991770,
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatError {
    #[error("need at least 2 subjects and 2 treatments, got {subjects}x{treatments}")]
    TooSmall { subjects: usize, treatments: usize },
    #[error("subject {0} lacks a measurement for some treatment")]
    Incomplete(usize),
    #[error("measurement {0} is not finite")]
    NotFinite(f64),
    #[error("no critical value table for alpha {0}; use 0.01 or 0.05")]
    UnsupportedAlpha(f64),
    #[error("no critical value table for {0} treatments; at most 20")]
    TooManyTreatments(usize),
}

/// Nemenyi critical value `q_alpha / sqrt(2)` for `k` treatments.
pub fn q_alpha(alpha: f64, k: usize) -> Result<f64, StatError> {
    let table = if alpha == 0.05 {
        &Q_05
    } else if alpha == 0.01 {
        &Q_01
    } else {
        return Err(StatError::UnsupportedAlpha(alpha));
    };
    if !(2..=20).contains(&k) {
        return Err(StatError::TooManyTreatments(k));
    }
    Ok(table[k - 2])
}

/// Within-row ranks, 1-based, ties sharing the mean of their positions.
pub fn midranks(row: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[a].total_cmp(&row[b]));
    let mut ranks = vec![0.0; row.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && row[order[j + 1]] == row[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        i = j + 1;
    }
    ranks
}

fn ranked(matrix: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, StatError> {
    let n = matrix.len();
    let k = matrix.first().map_or(0, Vec::len);
    if n < 2 || k < 2 {
        return Err(StatError::TooSmall {
            subjects: n,
            treatments: k,
        });
    }
    for (i, row) in matrix.iter().enumerate() {
        if row.len() != k {
            return Err(StatError::Incomplete(i));
        }
        if let Some(&v) = row.iter().find(|v| !v.is_finite()) {
            return Err(StatError::NotFinite(v));
        }
    }
    Ok(matrix.iter().map(|r| midranks(r)).collect())
}

/// Tie-corrected statistic from column rank sums: numerator over the
/// within-row rank variance. Zero when every row is fully tied.
fn statistic(sums: &[f64], n: usize, sum_sq: f64) -> f64 {
    let k = sums.len() as f64;
    let n = n as f64;
    let centre = n * (k + 1.0) / 2.0;
    let num: f64 = sums.iter().map(|r| (r - centre).powi(2)).sum::<f64>() * (k - 1.0);
    let den = sum_sq - n * k * (k + 1.0).powi(2) / 4.0;
    if den <= 1e-12 {
        0.0
    } else {
        num / den
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FriedmanResult {
    pub statistic: f64,
    pub p_value: f64,
    pub df: usize,
    /// Whether `p_value` comes from full permutation rather than chi-square.
    pub exact: bool,
    pub mean_ranks: Vec<f64>,
}

/// Friedman test on a subjects x treatments matrix. The p-value is exact by
/// permuting ranks within rows when `subjects * treatments <= exact_cap`.
pub fn friedman_test(matrix: &[Vec<f64>], exact_cap: usize) -> Result<FriedmanResult, StatError> {
    let ranks = ranked(matrix)?;
    let n = ranks.len();
    let k = ranks[0].len();
    let mut sums = vec![0.0; k];
    for row in &ranks {
        for (s, r) in sums.iter_mut().zip(row) {
            *s += r;
        }
    }
    let sum_sq: f64 = ranks.iter().flatten().map(|r| r * r).sum();
    let stat = statistic(&sums, n, sum_sq);
    let exact = n * k <= exact_cap;
    let p_value = if stat == 0.0 {
        1.0
    } else if exact {
        permutation_p(&ranks, sum_sq, stat)
    } else {
        ChiSquared::new((k - 1) as f64)
            .expect("positive degrees of freedom")
            .sf(stat)
    };
    Ok(FriedmanResult {
        statistic: stat,
        p_value,
        df: k - 1,
        exact,
        mean_ranks: sums.iter().map(|s| s / n as f64).collect(),
    })
}

fn permutations(items: &[f64]) -> Vec<Vec<f64>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

struct Enumeration<'a> {
    perms: &'a [Vec<Vec<f64>>],
    n: usize,
    sum_sq: f64,
    observed: f64,
    hits: u64,
    total: u64,
}

impl Enumeration<'_> {
    fn walk(&mut self, row: usize, sums: &mut [f64]) {
        if row == self.perms.len() {
            self.total += 1;
            if statistic(sums, self.n, self.sum_sq) >= self.observed - 1e-9 {
                self.hits += 1;
            }
            return;
        }
        for p in &self.perms[row] {
            for (s, r) in sums.iter_mut().zip(p) {
                *s += r;
            }
            self.walk(row + 1, sums);
            for (s, r) in sums.iter_mut().zip(p) {
                *s -= r;
            }
        }
    }
}

/// Fraction of within-row rank permutations whose statistic reaches `observed`.
fn permutation_p(ranks: &[Vec<f64>], sum_sq: f64, observed: f64) -> f64 {
    let perms: Vec<Vec<Vec<f64>>> = ranks.iter().map(|r| permutations(r)).collect();
    let mut e = Enumeration {
        perms: &perms,
        n: ranks.len(),
        sum_sq,
        observed,
        hits: 0,
        total: 0,
    };
    e.walk(0, &mut vec![0.0; ranks[0].len()]);
    e.hits as f64 / e.total as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct NemenyiResult {
    pub mean_ranks: Vec<f64>,
    pub critical_difference: f64,
    /// `separated[i][j]`: mean ranks of i and j differ by more than the CD.
    pub separated: Vec<Vec<bool>>,
}

/// Pairwise comparison of mean ranks against
/// `CD = q_alpha * sqrt(k (k + 1) / (6 N))`.
pub fn nemenyi_posthoc(matrix: &[Vec<f64>], alpha: f64) -> Result<NemenyiResult, StatError> {
    let ranks = ranked(matrix)?;
    let n = ranks.len() as f64;
    let k = ranks[0].len();
    let q = q_alpha(alpha, k)?;
    let cd = q * (k as f64 * (k as f64 + 1.0) / (6.0 * n)).sqrt();
    let mean_ranks: Vec<f64> = (0..k)
        .map(|j| ranks.iter().map(|r| r[j]).sum::<f64>() / n)
        .collect();
    let separated = (0..k)
        .map(|i| (0..k).map(|j| (mean_ranks[i] - mean_ranks[j]).abs() > cd).collect())
        .collect();
    Ok(NemenyiResult {
        mean_ranks,
        critical_difference: cd,
        separated,
    })
}
