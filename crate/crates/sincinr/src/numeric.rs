//! Small quadrature and grid helpers shared across modules.

/// `n` evenly spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let h = (b - a) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { b } else { a + h * i as f64 })
                .collect()
        }
    }
}

/// Trapezoid rule on an arbitrary increasing grid.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// Trapezoid weights so that `sum(w_i f_i)` equals [`trapezoid`].
pub fn trapezoid_weights(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut w = vec![0.0; n];
    for i in 1..n {
        let h = 0.5 * (xs[i] - xs[i - 1]);
        w[i - 1] += h;
        w[i] += h;
    }
    w
}

pub fn max_step(xs: &[f64]) -> f64 {
    xs.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

/// True when every step matches the first within a relative tolerance.
pub fn is_uniform(xs: &[f64], rel_tol: f64) -> bool {
    if xs.len() < 2 {
        return true;
    }
    let h = xs[1] - xs[0];
    if !(h > 0.0) {
        return false;
    }
    xs.windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= rel_tol * h)
}
