mod common;

use supnorm::arith::{rat, rat_to_f64};
use supnorm::special::{jacobi_eval, jacobi_exact};

#[test]
fn recurrence_matches_binomial_sum_to_degree_50() {
    for n in 0..=50u32 {
        for (a, b) in [(0, 0), (0, 2), (2, 0), (1, 3), (0, 10), (4, 4)] {
            for k in -10..=10 {
                let t = rat(k, 10);
                let exact = common::jacobi_binomial(n as u64, a as u64, b as u64, &t);
                assert_eq!(jacobi_exact(n, a, b, &t), exact, "exact n={n} a={a} b={b} t={t}");
                let e = rat_to_f64(&exact);
                let got = jacobi_eval(n, a, b, k as f64 / 10.0);
                assert!((got - e).abs() <= 1e-10 * e.abs().max(1.0), "n={n} a={a} b={b} t={t}: {got} vs {e}");
            }
        }
    }
}

#[test]
fn orthogonal_to_degree_30() {
    for (a, b) in [(0, 0), (0, 2), (1, 2), (0, 6)] {
        for n in 0..=30u32 {
            for k in 0..n {
                let ip = common::jacobi_weighted_integral(|t| jacobi_eval(n, a, b, t) * jacobi_eval(k, a, b, t), a, b, 64);
                assert!(ip.abs() <= 1e-8, "<P_{n}, P_{k}> = {ip} for ({a},{b})");
            }
        }
    }
}
