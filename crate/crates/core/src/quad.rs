//! Gauss-Legendre rules.

use std::sync::OnceLock;

pub const GL_ORDER: usize = 16;

/// Nodes and weights of the 16-point rule on [-1, 1].
pub fn gauss_legendre16() -> &'static ([f64; GL_ORDER], [f64; GL_ORDER]) {
    static RULE: OnceLock<([f64; GL_ORDER], [f64; GL_ORDER])> = OnceLock::new();
    RULE.get_or_init(legendre_rule::<GL_ORDER>)
}

// Newton on P_n from the Chebyshev-like initial guesses.
fn legendre_rule<const N: usize>() -> ([f64; N], [f64; N]) {
    let mut nodes = [0.0; N];
    let mut weights = [0.0; N];
    let n = N as f64;
    for i in 0..N {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(N, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(N, x);
        dp = if d != 0.0 { d } else { dp };
        nodes[i] = -x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Fixed 16-point rule over [a, b].
pub fn integrate<F: Fn(f64) -> f64>(a: f64, b: f64, f: F) -> f64 {
    let (x, w) = gauss_legendre16();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for i in 0..GL_ORDER {
        acc += w[i] * f(mid + half * x[i]);
    }
    acc * half
}

/// Nodes (position, weight) of the 16-point rule mapped to [a, b].
pub fn nodes(a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> {
    let (x, w) = gauss_legendre16();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (0..GL_ORDER).map(move |i| (mid + half * x[i], w[i] * half))
}

/// Composite rule: bisect panels until the one-panel and two-panel
/// estimates agree to `rel` (relative to the running total) or `depth` runs out.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(a: f64, b: f64, rel: f64, depth: u32, f: &F) -> f64 {
    let whole = integrate(a, b, f);
    refine(a, b, whole, rel, depth, f)
}

fn refine<F: Fn(f64) -> f64>(a: f64, b: f64, whole: f64, rel: f64, depth: u32, f: &F) -> f64 {
    let m = 0.5 * (a + b);
    let left = integrate(a, m, f);
    let right = integrate(m, b, f);
    let split = left + right;
    let scale = split.abs().max(f64::MIN_POSITIVE);
    if depth == 0 || (split - whole).abs() <= rel * scale {
        return split;
    }
    refine(a, m, left, rel, depth - 1, f) + refine(m, b, right, rel, depth - 1, f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two_and_nodes_sorted() {
        let (x, w) = gauss_legendre16();
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn exact_for_degree_31() {
        let v = integrate(0.0, 1.0, |x| x.powi(31));
        assert!((v - 1.0 / 32.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        // integrand x^{-1/2} on (0,1]
        let v = integrate_adaptive(0.0, 1.0, 1e-13, 60, &|x: f64| x.powf(-0.5));
        assert!((v - 2.0).abs() < 1e-8, "{v}");
    }
}
