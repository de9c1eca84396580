//! Bounded scalar maximization on `[0, 1]`: a uniform grid scan followed by
//! golden-section refinement inside the bracket around the best grid point.

use rayon::prelude::*;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGoldenOptions {
    /// Points of the coarse grid, endpoints included.
    pub grid_points: usize,
    /// Bracket width at which golden-section stops.
    pub x_tol: f64,
    /// Evaluate the coarse grid in parallel.
    pub parallel: bool,
}

impl Default for GridGoldenOptions {
    fn default() -> Self {
        Self {
            grid_points: 101,
            x_tol: 1e-7,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Maximum<T> {
    pub x: f64,
    pub value: T,
    pub n_calls: usize,
}

/// Maximizes `key(f(x))` over `x ∈ [lo, hi]`.
///
/// Only the bracket `[x_{i−1}, x_{i+1}]` around the best grid point is
/// assumed unimodal. The returned point is never worse than the best grid
/// point.
pub fn grid_golden_maximize<T, E, F, K>(
    f: F,
    key: K,
    lo: f64,
    hi: f64,
    opts: &GridGoldenOptions,
) -> Result<Maximum<T>, E>
where
    T: Send + Clone,
    E: Send,
    F: Fn(f64) -> Result<T, E> + Sync,
    K: Fn(&T) -> f64,
{
    assert!(opts.grid_points >= 2, "grid needs at least two points");
    assert!(lo < hi, "empty search interval");
    let n = opts.grid_points;
    let grid: Vec<f64> = (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
        .collect();
    let values: Vec<T> = if opts.parallel {
        grid.par_iter().map(|&x| f(x)).collect::<Result<_, E>>()?
    } else {
        grid.iter().map(|&x| f(x)).collect::<Result<_, E>>()?
    };
    let mut n_calls = n;

    let (best_i, _) = values
        .iter()
        .map(&key)
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, v)| if v > bv { (i, v) } else { (bi, bv) });
    let mut a = grid[best_i.saturating_sub(1)];
    let mut b = grid[(best_i + 1).min(n - 1)];

    let mut best_x = grid[best_i];
    let mut best = values.into_iter().nth(best_i).expect("grid is non-empty");
    let mut best_key = key(&best);
    let mut consider = |x: f64, v: &T| {
        let k = key(v);
        if k > best_key {
            best_key = k;
            best_x = x;
            best = v.clone();
        }
    };

    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    n_calls += 2;
    consider(c, &fc);
    consider(d, &fd);
    while (b - a) > opts.x_tol {
        if key(&fc) >= key(&fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
            consider(c, &fc);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
            consider(d, &fd);
        }
        n_calls += 1;
    }
    Ok(Maximum {
        x: best_x,
        value: best,
        n_calls,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::convert::Infallible;

    fn run(f: impl Fn(f64) -> f64 + Sync) -> Maximum<f64> {
        grid_golden_maximize(
            |x| Ok::<_, Infallible>(f(x)),
            |v| *v,
            0.0,
            1.0,
            &GridGoldenOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn finds_interior_maximum() {
        let m = run(|x| -(x - 0.337).powi(2));
        assert_abs_diff_eq!(m.x, 0.337, epsilon = 1e-6);
    }

    #[test]
    fn finds_boundary_maximum() {
        assert_abs_diff_eq!(run(|x| x).x, 1.0, epsilon = 1e-7);
        assert_abs_diff_eq!(run(|x| -x).x, 0.0, epsilon = 1e-7);
    }

    #[test]
    fn picks_global_peak_of_bimodal() {
        let f = |x: f64| (-(x - 0.2).powi(2) / 0.002).exp() + 1.2 * (-(x - 0.8).powi(2) / 0.002).exp();
        assert_abs_diff_eq!(run(f).x, 0.8, epsilon = 1e-5);
    }

    #[test]
    fn returned_value_matches_point() {
        let f = |x: f64| (3.0 * x).sin();
        let m = run(f);
        assert_eq!(m.value, f(m.x));
        assert!(m.n_calls > 101);
    }

    #[test]
    fn propagates_errors() {
        let r = grid_golden_maximize(
            |x| if x > 0.5 { Err("bad") } else { Ok(x) },
            |v: &f64| *v,
            0.0,
            1.0,
            &GridGoldenOptions {
                parallel: false,
                ..Default::default()
            },
        );
        assert_eq!(r.unwrap_err(), "bad");
    }
}
