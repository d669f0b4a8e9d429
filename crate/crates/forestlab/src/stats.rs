//! Hypothesis tests and sample statistics used to check the samplers.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Outcome of a chi-square test.
#[derive(Debug, Clone, Copy)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

fn chi_square_p(statistic: f64, dof: usize) -> Result<f64> {
    let dist = ChiSquared::new(dof as f64)
        .map_err(|e| Error::InvalidParams(format!("chi-square dof: {e}")))?;
    Ok(1.0 - dist.cdf(statistic))
}

/// Pearson chi-square test of independence on a 2x2 contingency table.
///
/// Expected counts come from the empirical marginals; one degree of freedom.
pub fn chi_square_independence_2x2(table: [[u64; 2]; 2]) -> Result<ChiSquareTest> {
    let n: u64 = table.iter().flatten().sum();
    if n == 0 {
        return Err(Error::InvalidParams("empty contingency table".into()));
    }
    let row: Vec<f64> = (0..2).map(|i| (table[i][0] + table[i][1]) as f64).collect();
    let col: Vec<f64> = (0..2).map(|j| (table[0][j] + table[1][j]) as f64).collect();
    let n = n as f64;
    let mut stat = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let expected = row[i] * col[j] / n;
            if expected == 0.0 {
                return Err(Error::InvalidParams("degenerate marginal in table".into()));
            }
            let diff = table[i][j] as f64 - expected;
            stat += diff * diff / expected;
        }
    }
    Ok(ChiSquareTest { statistic: stat, dof: 1, p_value: chi_square_p(stat, 1)? })
}

/// Chi-square test of full (three-way) independence on a 2x2x2 table.
///
/// Expected counts are products of the empirical one-way marginals;
/// degrees of freedom: `2^3 - 1 - 3 = 4`.
pub fn chi_square_independence_2x2x2(table: [[[u64; 2]; 2]; 2]) -> Result<ChiSquareTest> {
    let n: u64 = table.iter().flatten().flatten().sum();
    if n == 0 {
        return Err(Error::InvalidParams("empty contingency table".into()));
    }
    let nf = n as f64;
    let mut m0 = [0.0f64; 2];
    let mut m1 = [0.0f64; 2];
    let mut m2 = [0.0f64; 2];
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                let v = table[a][b][c] as f64;
                m0[a] += v;
                m1[b] += v;
                m2[c] += v;
            }
        }
    }
    let mut stat = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                let expected = m0[a] / nf * m1[b] / nf * m2[c];
                if expected == 0.0 {
                    return Err(Error::InvalidParams("degenerate marginal in table".into()));
                }
                let diff = table[a][b][c] as f64 - expected;
                stat += diff * diff / expected;
            }
        }
    }
    Ok(ChiSquareTest { statistic: stat, dof: 4, p_value: chi_square_p(stat, 4)? })
}

/// Outcome of a one-sample Kolmogorov-Smirnov test.
#[derive(Debug, Clone, Copy)]
pub struct KsTest {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample KS test of `sample` against the continuous CDF `cdf`,
/// with the asymptotic Kolmogorov p-value.
pub fn ks_test(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> Result<KsTest> {
    let n = sample.len();
    if n == 0 {
        return Err(Error::InvalidParams("empty sample".into()));
    }
    sample.sort_unstable_by(f64::total_cmp);
    let nf = n as f64;
    let mut d = 0.0f64;
    for (i, &x) in sample.iter().enumerate() {
        let f = cdf(x);
        let upper = (i + 1) as f64 / nf - f;
        let lower = f - i as f64 / nf;
        d = d.max(upper).max(lower);
    }
    Ok(KsTest { statistic: d, p_value: kolmogorov_survival(d * nf.sqrt()) })
}

/// Survival function of the Kolmogorov distribution,
/// `Q(x) = 2 * sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2)`.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64) * (k as f64) * x * x).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Sample mean.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance (divide by `n`).
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

/// Pearson correlation of two equally long samples.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}
