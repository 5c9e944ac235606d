use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use super::{ExperimentStats, HarnessError};

/// Exact (Clopper-Pearson) two-sided interval for `k` successes in `n` trials.
pub fn binomial_interval(k: u64, n: u64, confidence: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let alpha = 1.0 - confidence;
    let (k, n) = (k as f64, n as f64);
    let lo = if k == 0.0 {
        0.0
    } else {
        Beta::new(k, n - k + 1.0).unwrap().inverse_cdf(alpha / 2.0)
    };
    let hi = if k == n {
        1.0
    } else {
        Beta::new(k + 1.0, n - k).unwrap().inverse_cdf(1.0 - alpha / 2.0)
    };
    (lo, hi)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Least-squares `y = c0 + c1 x + c2 x²`; `None` for fewer than three
/// distinct abscissae.
pub fn fit_quadratic(xs: &[f64], ys: &[f64]) -> Option<[f64; 3]> {
    let mut distinct: Vec<f64> = xs.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return None;
    }
    // normal equations, solved by Gaussian elimination with partial pivoting
    let mut m = [[0.0f64; 4]; 3];
    for (&x, &y) in xs.iter().zip(ys) {
        let pow = [1.0, x, x * x];
        for r in 0..3 {
            for c in 0..3 {
                m[r][c] += pow[r] * pow[c];
            }
            m[r][3] += pow[r] * y;
        }
    }
    for col in 0..3 {
        let pivot = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        m.swap(col, pivot);
        if m[col][col].abs() < 1e-300 {
            return None;
        }
        let row = m[col];
        for (r, target) in m.iter_mut().enumerate() {
            if r != col {
                let f = target[col] / row[col];
                for (x, y) in target[col..].iter_mut().zip(&row[col..]) {
                    *x -= f * y;
                }
            }
        }
    }
    Some([m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaEstimate {
    pub p: f64,
    pub distances: Vec<usize>,
    /// `p_L(d + 2) / p_L(d)` for each consecutive pair of distances.
    pub ratios: Vec<f64>,
    pub ratio_stderr: Vec<f64>,
    pub lambda: f64,
    pub stderr: f64,
}

pub const LAMBDA_DISTANCES: [usize; 4] = [5, 7, 9, 11];

fn same_p(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

/// Averages the suppression ratio over the intervals 5→7, 7→9, 9→11.
pub fn estimate_lambda(stats: &[ExperimentStats], p: f64, min_failures: u64) -> Result<LambdaEstimate, HarnessError> {
    let mut cells = Vec::new();
    for d in LAMBDA_DISTANCES {
        let cell = stats
            .iter()
            .find(|s| s.d == d && same_p(s.p, p))
            .ok_or_else(|| HarnessError::InsufficientData(format!("no cell for d={d} at p={p}")))?;
        if cell.failures == 0 || cell.failures < min_failures {
            return Err(HarnessError::InsufficientData(format!(
                "d={d} at p={p} has {} failures, need {}",
                cell.failures,
                min_failures.max(1)
            )));
        }
        cells.push(cell);
    }
    let mut ratios = Vec::new();
    let mut ratio_stderr = Vec::new();
    for pair in cells.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let r = b.p_logical / a.p_logical;
        let rel = (a.stderr / a.p_logical).powi(2) + (b.stderr / b.p_logical).powi(2);
        ratios.push(r);
        ratio_stderr.push(r * rel.sqrt());
    }
    let k = ratios.len() as f64;
    Ok(LambdaEstimate {
        p,
        distances: LAMBDA_DISTANCES.to_vec(),
        lambda: ratios.iter().sum::<f64>() / k,
        stderr: ratio_stderr.iter().map(|s| s * s).sum::<f64>().sqrt() / k,
        ratios,
        ratio_stderr,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub d_small: usize,
    pub d_large: usize,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub p_thr: f64,
    /// Standard deviation of the pairwise crossings.
    pub uncertainty: f64,
    pub crossings: Vec<Crossing>,
}

/// Root of `c0 + c1 x + c2 x²` inside `[lo, hi]`, preferring the one
/// nearest the middle of the interval.
fn root_in(c: [f64; 3], lo: f64, hi: f64) -> Option<f64> {
    let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale < 1e-12 {
        return None;
    }
    let [c0, c1, c2] = c;
    let mut roots = Vec::new();
    if c2.abs() < 1e-12 * scale {
        if c1.abs() > 1e-12 * scale {
            roots.push(-c0 / c1);
        }
    } else {
        let disc = c1 * c1 - 4.0 * c2 * c0;
        if disc >= 0.0 {
            // cancellation-free form
            let q = -0.5 * (c1 + c1.signum() * disc.sqrt());
            roots.push(q / c2);
            if q != 0.0 {
                roots.push(c0 / q);
            }
        }
    }
    let mid = 0.5 * (lo + hi);
    roots
        .into_iter()
        .filter(|x| (lo..=hi).contains(x))
        .min_by(|a, b| (a - mid).abs().total_cmp(&(b - mid).abs()))
}

/// Fits `ln p_L` as a quadratic in `ln p` for each distance and averages the
/// pairwise crossings that fall inside the shared grid.
pub fn estimate_threshold(stats: &[ExperimentStats]) -> Result<ThresholdEstimate, HarnessError> {
    let mut by_d: BTreeMap<usize, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for s in stats.iter().filter(|s| s.failures > 0 && s.p > 0.0) {
        let entry = by_d.entry(s.d).or_default();
        entry.0.push(s.p.ln());
        entry.1.push(s.p_logical.ln());
    }
    let fits: Vec<(usize, [f64; 3], f64, f64)> = by_d
        .iter()
        .filter_map(|(&d, (xs, ys))| {
            let c = fit_quadratic(xs, ys)?;
            let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Some((d, c, lo, hi))
        })
        .collect();
    if fits.len() < 2 {
        return Err(HarnessError::InsufficientData(
            "need at least two distances with three nonzero points each".into(),
        ));
    }
    let mut crossings = Vec::new();
    for (a, fa) in fits.iter().enumerate() {
        for fb in &fits[a + 1..] {
            let diff = [fa.1[0] - fb.1[0], fa.1[1] - fb.1[1], fa.1[2] - fb.1[2]];
            if let Some(x) = root_in(diff, fa.2.max(fb.2), fa.3.min(fb.3)) {
                crossings.push(Crossing {
                    d_small: fa.0,
                    d_large: fb.0,
                    p: x.exp(),
                });
            }
        }
    }
    if crossings.is_empty() {
        return Err(HarnessError::NoCrossing);
    }
    let n = crossings.len() as f64;
    let mean = crossings.iter().map(|c| c.p).sum::<f64>() / n;
    let var = crossings.iter().map(|c| (c.p - mean).powi(2)).sum::<f64>() / n;
    Ok(ThresholdEstimate {
        p_thr: mean,
        uncertainty: var.sqrt(),
        crossings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(d: usize, p: f64, p_logical: f64, failures: u64) -> ExperimentStats {
        let shots = (failures as f64 / p_logical).round() as u64;
        ExperimentStats {
            d,
            rounds: d,
            p,
            decoder: "uf-weighted".into(),
            epsilon: None,
            shots,
            failures,
            p_logical,
            stderr: (p_logical * (1.0 - p_logical) / shots as f64).sqrt(),
            seed: 0,
            wall_ns_total: 0,
            wall_ns_per_cycle: 0.0,
            ci95: [0.0, 1.0],
            skipped: None,
        }
    }

    #[test]
    fn clopper_pearson_reference_values() {
        // 0 of 10: upper bound 1 - 0.025^(1/10)
        let (lo, hi) = binomial_interval(0, 10, 0.95);
        assert_eq!(lo, 0.0);
        assert!((hi - (1.0 - 0.025f64.powf(0.1))).abs() < 1e-9);
        let (lo, hi) = binomial_interval(5, 10, 0.95);
        assert!((lo - 0.187086).abs() < 1e-5 && (hi - 0.812914).abs() < 1e-5);
        assert_eq!(binomial_interval(10, 10, 0.95).1, 1.0);
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [20.0, 30.0, 40.0, 50.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(2.2)).collect();
        assert!((log_log_slope(&xs, &ys) - 2.2).abs() < 1e-12);
    }

    #[test]
    fn quadratic_fit_is_exact_on_quadratics() {
        let xs = [-6.0, -5.5, -5.0, -4.5];
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 - 2.0 * x + 0.5 * x * x).collect();
        let c = fit_quadratic(&xs, &ys).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-8 && (c[1] + 2.0).abs() < 1e-8 && (c[2] - 0.5).abs() < 1e-9);
        assert!(fit_quadratic(&[1.0, 1.0, 2.0], &[0.0, 0.0, 0.0]).is_none());
    }

    #[test]
    fn equal_lambda_cells_give_one() {
        let stats: Vec<_> = LAMBDA_DISTANCES.iter().map(|&d| cell(d, 0.002, 0.01, 1000)).collect();
        let est = estimate_lambda(&stats, 0.002, 1000).unwrap();
        assert!((est.lambda - 1.0).abs() < 1e-12);
        assert_eq!(est.ratios.len(), 3);
    }

    #[test]
    fn lambda_is_suppression_ratio() {
        let stats: Vec<_> = LAMBDA_DISTANCES
            .iter()
            .enumerate()
            .map(|(k, &d)| cell(d, 0.0025, 0.1 * 0.3f64.powi(k as i32), 2000))
            .collect();
        let est = estimate_lambda(&stats, 0.0025, 1000).unwrap();
        assert!((est.lambda - 0.3).abs() < 1e-9);
        assert!(est.stderr > 0.0);
    }

    #[test]
    fn lambda_needs_enough_failures() {
        let mut stats: Vec<_> = LAMBDA_DISTANCES.iter().map(|&d| cell(d, 0.002, 0.01, 1000)).collect();
        stats[3].failures = 99;
        assert!(matches!(
            estimate_lambda(&stats, 0.002, 100),
            Err(HarnessError::InsufficientData(_))
        ));
        assert!(estimate_lambda(&stats[..3], 0.002, 1).is_err());
    }

    #[test]
    fn identical_curves_have_no_crossing() {
        let mut stats = Vec::new();
        for d in [5, 7] {
            for p in [0.004, 0.005, 0.006, 0.007] {
                stats.push(cell(d, p, 100.0 * p * p, 100));
            }
        }
        assert!(matches!(estimate_threshold(&stats), Err(HarnessError::NoCrossing)));
    }

    #[test]
    fn synthetic_crossing_is_recovered() {
        // p_L = 0.1 (p / 0.006)^((d+1)/2): all curves meet at 0.6%
        let mut stats = Vec::new();
        for d in [5, 7, 9, 11] {
            for k in 0..8 {
                let p = 0.0045 + 0.0005 * k as f64;
                stats.push(cell(d, p, 0.1 * (p / 0.006f64).powf((d + 1) as f64 / 2.0), 1000));
            }
        }
        let est = estimate_threshold(&stats).unwrap();
        assert!((est.p_thr - 0.006).abs() < 1e-9);
        assert_eq!(est.crossings.len(), 6);
        assert!(est.uncertainty < 1e-9);
    }

    #[test]
    fn crossing_outside_grid_is_rejected() {
        let mut stats = Vec::new();
        for d in [5, 7] {
            for k in 0..4 {
                let p = 0.001 + 0.0005 * k as f64;
                stats.push(cell(d, p, 0.1 * (p / 0.006f64).powf((d + 1) as f64 / 2.0), 1000));
            }
        }
        assert!(matches!(estimate_threshold(&stats), Err(HarnessError::NoCrossing)));
    }
}
