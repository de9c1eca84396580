//! Globally adaptive Gauss–Legendre quadrature for vector-valued integrands.
//!
//! Each panel is integrated with one rule on the whole panel and with the same
//! rule on its two halves; the difference is the panel's error estimate. The
//! panel with the largest scaled error is bisected until the summed error
//! meets the tolerance. Integrands may report their own error (for nested
//! integrals), which is propagated with the rule weights.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds an `n`-point rule by Newton iteration on `Pₙ`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Applies the rule on `[a, b]`.
    pub fn apply<const K: usize, E, F>(&self, f: &mut F, a: f64, b: f64) -> Result<Estimate<K>, E>
    where
        F: FnMut(f64) -> Result<Estimate<K>, E>,
    {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut out = Estimate::zero();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let e = f(mid + half * x)?;
            for k in 0..K {
                out.value[k] += w * e.value[k];
                out.error[k] += w * e.error[k].abs();
            }
        }
        for k in 0..K {
            out.value[k] *= half;
            out.error[k] *= half.abs();
        }
        Ok(out)
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { p0 } else { p1 };
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p, d)
}

/// Value and absolute error estimate of a `K`-component quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<const K: usize> {
    pub value: [f64; K],
    pub error: [f64; K],
}

impl<const K: usize> Estimate<K> {
    pub fn zero() -> Self {
        Self {
            value: [0.0; K],
            error: [0.0; K],
        }
    }

    /// An exactly known value.
    pub fn exact(value: [f64; K]) -> Self {
        Self {
            value,
            error: [0.0; K],
        }
    }

    fn add(&mut self, other: &Self) {
        for k in 0..K {
            self.value[k] += other.value[k];
            self.error[k] += other.error[k];
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOptions {
    /// Each component's error must be at most `rel_tol` times the largest
    /// component magnitude.
    pub rel_tol: f64,
    /// Floor below which errors are always accepted.
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-300,
            max_panels: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral<const K: usize> {
    pub estimate: Estimate<K>,
    pub converged: bool,
    pub panels: usize,
}

struct Panel<const K: usize> {
    a: f64,
    b: f64,
    left: Estimate<K>,
    right: Estimate<K>,
    /// |coarse − fine| plus propagated integrand error.
    error: [f64; K],
}

impl<const K: usize> Panel<K> {
    fn fine(&self) -> Estimate<K> {
        let mut e = self.left;
        e.add(&self.right);
        e
    }

    fn build<E, F>(rule: &GaussLegendre, f: &mut F, a: f64, b: f64, coarse: Estimate<K>) -> Result<Self, E>
    where
        F: FnMut(f64) -> Result<Estimate<K>, E>,
    {
        let mid = 0.5 * (a + b);
        let left = rule.apply(f, a, mid)?;
        let right = rule.apply(f, mid, b)?;
        let mut error = [0.0; K];
        for k in 0..K {
            let fine = left.value[k] + right.value[k];
            error[k] = (fine - coarse.value[k]).abs() + left.error[k] + right.error[k];
        }
        Ok(Self {
            a,
            b,
            left,
            right,
            error,
        })
    }
}

/// Integrates `f` over `[a, b]`.
///
/// Returns the best estimate even when `max_panels` is exhausted; check
/// [`Integral::converged`]. Errors raised by the integrand abort the
/// integration.
pub fn integrate<const K: usize, E, F>(
    rule: &GaussLegendre,
    f: F,
    a: f64,
    b: f64,
    opts: &AdaptiveOptions,
) -> Result<Integral<K>, E>
where
    F: FnMut(f64) -> Result<Estimate<K>, E>,
{
    integrate_until(rule, f, a, b, opts, || false)
}

/// Like [`integrate`], but stops refining as soon as `stop` returns true
/// (used to enforce a global evaluation budget across nested integrals).
pub fn integrate_until<const K: usize, E, F, S>(
    rule: &GaussLegendre,
    mut f: F,
    a: f64,
    b: f64,
    opts: &AdaptiveOptions,
    stop: S,
) -> Result<Integral<K>, E>
where
    F: FnMut(f64) -> Result<Estimate<K>, E>,
    S: Fn() -> bool,
{
    if a == b {
        return Ok(Integral {
            estimate: Estimate::zero(),
            converged: true,
            panels: 0,
        });
    }
    let coarse = rule.apply(&mut f, a, b)?;
    let mut panels = vec![Panel::build(rule, &mut f, a, b, coarse)?];

    loop {
        let mut total = Estimate::<K>::zero();
        for p in &panels {
            let fine = p.fine();
            for k in 0..K {
                total.value[k] += fine.value[k];
                total.error[k] += p.error[k];
            }
        }
        let scale = total.value.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let target = (opts.rel_tol * scale).max(opts.abs_tol);
        let converged = total.error.iter().all(|e| *e <= target);
        if converged || panels.len() >= opts.max_panels || stop() {
            return Ok(Integral {
                estimate: total,
                converged,
                panels: panels.len(),
            });
        }

        let worst = panels
            .iter()
            .enumerate()
            .max_by(|(_, p), (_, q)| {
                let ep = p.error.iter().fold(0.0f64, |m, v| m.max(*v));
                let eq = q.error.iter().fold(0.0f64, |m, v| m.max(*v));
                ep.total_cmp(&eq)
            })
            .map(|(i, _)| i)
            .expect("at least one panel");
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        panels.push(Panel::build(rule, &mut f, p.a, mid, p.left)?);
        panels.push(Panel::build(rule, &mut f, mid, p.b, p.right)?);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::convert::Infallible;

    fn scalar(f: impl Fn(f64) -> f64) -> impl FnMut(f64) -> Result<Estimate<1>, Infallible> {
        move |x| Ok(Estimate::exact([f(x)]))
    }

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let rule = GaussLegendre::new(12);
        assert_abs_diff_eq!(rule.weights().iter().sum::<f64>(), 2.0, epsilon = 1e-14);
        // degree 23 is the exactness limit of a 12-point rule
        let mut f = scalar(|x| x.powi(22) + x.powi(23));
        let e = rule.apply(&mut f, -1.0, 1.0).unwrap();
        assert_abs_diff_eq!(e.value[0], 2.0 / 23.0, epsilon = 1e-14);
    }

    #[test]
    fn nodes_are_sorted_and_symmetric() {
        for n in [1, 2, 5, 12, 20] {
            let rule = GaussLegendre::new(n);
            assert_eq!(rule.len(), n);
            for w in rule.nodes().windows(2) {
                assert!(w[0] < w[1]);
            }
            for (x, y) in rule.nodes().iter().zip(rule.nodes().iter().rev()) {
                assert_abs_diff_eq!(*x, -*y, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let rule = GaussLegendre::new(12);
        let opts = AdaptiveOptions {
            rel_tol: 1e-12,
            ..Default::default()
        };
        let width: f64 = 1e-3;
        let res = integrate(&rule, scalar(|x| 1.0 / (x * x + width * width)), -1.0, 1.0, &opts)
            .unwrap();
        assert!(res.converged);
        let exact = 2.0 / width * (1.0 / width).atan();
        assert_abs_diff_eq!(res.estimate.value[0] / exact, 1.0, epsilon = 1e-11);
        assert!(res.panels > 4);
    }

    #[test]
    fn sqrt_endpoint_behaviour() {
        let rule = GaussLegendre::new(12);
        let res = integrate(&rule, scalar(f64::sqrt), 0.0, 1.0, &AdaptiveOptions::default()).unwrap();
        assert!(res.converged);
        assert_abs_diff_eq!(res.estimate.value[0], 2.0 / 3.0, epsilon = 1e-10);
    }

    #[test]
    fn reports_non_convergence() {
        let rule = GaussLegendre::new(4);
        let opts = AdaptiveOptions {
            rel_tol: 1e-15,
            abs_tol: 0.0,
            max_panels: 3,
        };
        let res = integrate(&rule, scalar(|x| (50.0 * x).sin().abs()), 0.0, 3.0, &opts).unwrap();
        assert!(!res.converged);
        assert_eq!(res.panels, 3);
    }

    #[test]
    fn nested_errors_propagate() {
        let rule = GaussLegendre::new(8);
        let opts = AdaptiveOptions::default();
        // ∫₀¹∫₀ˣ y dy dx = 1/6
        let res = integrate(
            &rule,
            |x: f64| -> Result<Estimate<1>, Infallible> {
                let inner = integrate(&rule, scalar(|y| y), 0.0, x, &opts)?;
                Ok(inner.estimate)
            },
            0.0,
            1.0,
            &opts,
        )
        .unwrap();
        assert_abs_diff_eq!(res.estimate.value[0], 1.0 / 6.0, epsilon = 1e-14);
        assert!(res.estimate.error[0] < 1e-12);
    }

    #[test]
    fn integrand_errors_abort() {
        let rule = GaussLegendre::new(5);
        let res: Result<Integral<1>, &str> = integrate(
            &rule,
            |x| if x > 0.5 { Err("boom") } else { Ok(Estimate::exact([x])) },
            0.0,
            1.0,
            &AdaptiveOptions::default(),
        );
        assert_eq!(res.unwrap_err(), "boom");
    }

    #[test]
    fn empty_interval() {
        let rule = GaussLegendre::new(5);
        let res = integrate(&rule, scalar(|x| x), 2.0, 2.0, &AdaptiveOptions::default()).unwrap();
        assert_eq!(res.estimate.value[0], 0.0);
        assert!(res.converged);
    }
}
