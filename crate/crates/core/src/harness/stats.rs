//! Small summary statistics used by the sweep summaries.

/// Median of finite values; `None` when there are none.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Unbiased sample covariance matrix of row vectors.
pub fn covariance(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len();
    let p = rows.first().map_or(0, Vec::len);
    let mu: Vec<f64> = (0..p)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let denom = (n.max(2) - 1) as f64;
    (0..p)
        .map(|a| {
            (0..p)
                .map(|b| {
                    rows.iter()
                        .map(|r| (r[a] - mu[a]) * (r[b] - mu[b]))
                        .sum::<f64>()
                        / denom
                })
                .collect()
        })
        .collect()
}

/// `true` when every step is non-increasing.
pub fn is_non_increasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] <= w[0])
}

/// Statistical variant: non-increasing except for at most `ties` steps that
/// rise by no more than `slack` (relative to the earlier value).
pub fn is_non_increasing_with_ties(values: &[f64], ties: usize, slack: f64) -> bool {
    let mut used = 0;
    for w in values.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        if w[1] <= w[0] * (1.0 + slack) && used < ties {
            used += 1;
        } else {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[f64::NAN]), None);
    }

    #[test]
    fn covariance_of_known_rows() {
        let c = covariance(&[vec![1.0, 2.0], vec![3.0, 6.0]]);
        assert_eq!(c, vec![vec![2.0, 4.0], vec![4.0, 8.0]]);
    }

    #[test]
    fn monotonicity() {
        assert!(is_non_increasing(&[3.0, 2.0, 2.0, 1.0]));
        assert!(!is_non_increasing(&[3.0, 3.1]));
        assert!(is_non_increasing_with_ties(&[3.0, 3.01, 1.0], 1, 0.05));
        assert!(!is_non_increasing_with_ties(&[3.0, 3.01, 3.02], 1, 0.05));
    }
}
