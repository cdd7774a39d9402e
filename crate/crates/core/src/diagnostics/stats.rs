//! Small numerical helpers for the verdict rules.

/// Mean shifted by the first value, so constant inputs come back exactly.
pub(crate) fn mean(xs: &[f64]) -> f64 {
    let Some(&x0) = xs.first() else {
        return f64::NAN;
    };
    if !x0.is_finite() {
        return xs.iter().sum::<f64>() / xs.len() as f64;
    }
    x0 + xs.iter().map(|x| x - x0).sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; zero for fewer than two values.
pub(crate) fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// `log Σ exp(x_i)`, with `-inf` for an empty or all-`-inf` input.
pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let top = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top.is_infinite() {
        return top;
    }
    top + xs.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
}

/// Least-squares slope of `ys` against `xs` and its standard error.
/// `None` with fewer than three points or no spread in `xs`.
pub(crate) fn ols_slope(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len();
    if n < 3 {
        return None;
    }
    let mx = mean(xs);
    let my = mean(ys);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let se = (rss / (n - 2) as f64 / sxx).sqrt();
    Some((slope, se))
}

/// True when the finite points of `(t, y)` trend upward: slope above three
/// standard errors and a total rise over the window of at least `min_rise`.
pub(crate) fn is_rising(ts: &[f64], ys: &[f64], min_rise: f64) -> bool {
    let (ft, fy): (Vec<f64>, Vec<f64>) =
        ts.iter().zip(ys).filter(|(_, y)| y.is_finite()).map(|(t, y)| (*t, *y)).unzip();
    let Some((slope, se)) = ols_slope(&ft, &fy) else {
        return false;
    };
    let window = ft.last().unwrap() - ft.first().unwrap();
    slope - 3.0 * se > 0.0 && slope * window >= min_rise
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_edge_cases() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[0.0, 0.0]) - 2f64.ln()).abs() < 1e-15);
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn slope_of_exact_line() {
        let xs: Vec<f64> = (0..10).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let (s, se) = ols_slope(&xs, &ys).unwrap();
        assert!((s - 2.0).abs() < 1e-12 && se < 1e-12);
        assert!(is_rising(&xs, &ys, 0.5));
        let flat = vec![0.0; 10];
        assert!(!is_rising(&xs, &flat, 0.5));
    }
}
