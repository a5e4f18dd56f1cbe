//! Small statistics helpers for trend verdicts.

/// Sample mean and standard deviation (n-1 denominator; 0 for n < 2).
pub fn mean_stddev(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
    (mean, var.sqrt())
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[order[k]] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    if xs.len() < 2 {
        return f64::NAN;
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let (mx, sx) = mean_stddev(&rx);
    let (my, sy) = mean_stddev(&ry);
    if sx == 0.0 || sy == 0.0 {
        return f64::NAN;
    }
    let cov = rx
        .iter()
        .zip(&ry)
        .map(|(a, b)| (a - mx) * (b - my))
        .sum::<f64>()
        / (rx.len() - 1) as f64;
    cov / (sx * sy)
}

fn ge_tol(a: f64, b: f64) -> bool {
    a >= b - b.abs() * 1e-9 - 1e-12
}

/// Non-decreasing within floating-point tolerance.
pub fn monotone_nondecreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| ge_tol(w[1], w[0]))
}

/// Single interior peak: strictly inside the range, non-decreasing before,
/// non-increasing after. Returns the peak index when the shape holds.
pub fn unimodal_interior_peak(values: &[f64]) -> Option<usize> {
    if values.len() < 3 {
        return None;
    }
    let peak = values
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| a.partial_cmp(b).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    if peak == 0 || peak == values.len() - 1 {
        return None;
    }
    let rising = values[..=peak].windows(2).all(|w| ge_tol(w[1], w[0]));
    let falling = values[peak..].windows(2).all(|w| ge_tol(w[0], w[1]));
    (rising && falling).then_some(peak)
}
