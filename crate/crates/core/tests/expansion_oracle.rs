//! Cross-checks the expansion engine against a brute-force evaluation that
//! never forms an insertion trace.
//!
//! For fixed `x = c ξ₀` the integrand before truncation is
//! `E_χ[ Π_j (S_j + D_j)^{n_j} (S̄_j + D̃_j)^{n_j} / n_j! ]` with
//! `D_j = c Σ_i χ_i U_ij` and `D̃_j = c Σ_i χ̃_i Ū_ij`. Scaling the ket part by
//! `t` and the bra part by `u` makes this a polynomial in `(t, u)`; its
//! `t^a u^b` coefficient is the contribution with `a` creation and `b`
//! annihilation insertions. Coefficients come from a discrete Fourier
//! transform over roots of unity and the χ expectation from tensor
//! Gauss-Hermite quadrature, which is exact for these polynomial degrees.

use gbs_taylor::precompute::build_tables;
use gbs_taylor::trace::{integrand_from_forms, linear_forms};
use gbs_taylor::{haar_random, CrossPairWeight, ModelParams, Order, OutputPattern, UnitaryMatrix};
use num_complex::Complex64;
use proptest::prelude::*;

/// Four-point rule for the standard normal, exact up to degree 7.
fn hermite_rule() -> [(f64, f64); 4] {
    let r6 = 6f64.sqrt();
    let inner = (3.0 - r6).sqrt();
    let outer = (3.0 + r6).sqrt();
    let w_in = (3.0 + r6) / 12.0;
    let w_out = (3.0 - r6) / 12.0;
    [(-outer, w_out), (-inner, w_in), (inner, w_in), (outer, w_out)]
}

const ROOTS: usize = 8;

/// Coefficients `coef[a][b]` of `t^a u^b` in `E_χ[f(t, u)]`.
fn brute_force_coefficients(
    u: &UnitaryMatrix,
    params: &ModelParams,
    pattern: &OutputPattern,
    xi0: &[f64],
) -> Vec<Vec<Complex64>> {
    let n = u.n();
    let c = params.c();
    let s: Vec<Complex64> = (0..n)
        .map(|j| (0..n).map(|i| u.get(i, j) * (c * xi0[i])).sum())
        .collect();

    // χ = p + q, χ̃ = p − q with independent p, q per mode.
    let sd_sum = ((params.var_chi() + params.h()) / 2.0).max(0.0).sqrt();
    let sd_diff = ((params.var_chi() - params.h()) / 2.0).max(0.0).sqrt();
    let rule = hermite_rule();
    let dims = 2 * n;
    let points = rule.len().pow(dims as u32);

    let omega: Vec<Complex64> = (0..ROOTS)
        .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / ROOTS as f64))
        .collect();
    let mut grid = vec![vec![Complex64::default(); ROOTS]; ROOTS];

    let mut chi = vec![0.0; n];
    let mut chi_t = vec![0.0; n];
    for idx in 0..points {
        let mut rest = idx;
        let mut weight = 1.0;
        for i in 0..n {
            let (zp, wp) = rule[rest % 4];
            rest /= 4;
            let (zq, wq) = rule[rest % 4];
            rest /= 4;
            weight *= wp * wq;
            chi[i] = sd_sum * zp + sd_diff * zq;
            chi_t[i] = sd_sum * zp - sd_diff * zq;
        }
        let d: Vec<Complex64> = (0..n)
            .map(|j| (0..n).map(|i| u.get(i, j) * (c * chi[i])).sum())
            .collect();
        let dt: Vec<Complex64> = (0..n)
            .map(|j| (0..n).map(|i| u.get(i, j).conj() * (c * chi_t[i])).sum())
            .collect();
        for (ka, t) in omega.iter().enumerate() {
            for (kb, v) in omega.iter().enumerate() {
                let mut f = Complex64::new(weight, 0.0);
                for (j, &nj) in pattern.counts().iter().enumerate() {
                    let ket = s[j] + t * d[j];
                    let bra = s[j].conj() + v * dt[j];
                    let mut fact = 1.0;
                    for k in 1..=nj {
                        fact *= f64::from(k);
                    }
                    f *= (ket * bra).powu(nj) / fact;
                }
                grid[ka][kb] += f;
            }
        }
    }

    let mut coef = vec![vec![Complex64::default(); ROOTS]; ROOTS];
    for a in 0..ROOTS {
        for b in 0..ROOTS {
            let mut acc = Complex64::default();
            for ka in 0..ROOTS {
                for kb in 0..ROOTS {
                    acc += grid[ka][kb] * omega[(a * ka) % ROOTS].conj() * omega[(b * kb) % ROOTS].conj();
                }
            }
            coef[a][b] = acc / (ROOTS * ROOTS) as f64;
        }
    }
    coef
}

fn engine(
    u: &UnitaryMatrix,
    params: &ModelParams,
    pattern: &OutputPattern,
    xi0: &[f64],
    order: Order,
    weight: CrossPairWeight,
) -> f64 {
    let tables = build_tables(u, pattern);
    let x: Vec<f64> = xi0.iter().map(|v| v * params.c()).collect();
    let forms = linear_forms(u, &x).unwrap();
    integrand_from_forms(&tables, params, &forms, pattern, order, weight).unwrap()
}

struct Expected {
    order0: f64,
    order2: f64,
    order4: f64,
    full: f64,
}

fn expected(coef: &[Vec<Complex64>]) -> Expected {
    let order0 = coef[0][0].re;
    let order2 = order0 + (coef[2][0] + coef[0][2] + coef[1][1]).re;
    let order4 = order2 + coef[2][2].re;
    let full = coef.iter().flatten().map(|z| z.re).sum();
    Expected {
        order0,
        order2,
        order4,
        full,
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

#[test]
fn quadrature_rule_moments() {
    let rule = hermite_rule();
    let moment = |p: i32| rule.iter().map(|(z, w)| w * z.powi(p)).sum::<f64>();
    assert!((moment(0) - 1.0).abs() < 1e-15);
    assert!((moment(2) - 1.0).abs() < 1e-14);
    assert!((moment(4) - 3.0).abs() < 1e-13);
    assert!((moment(6) - 15.0).abs() < 1e-12);
    assert!(moment(5).abs() < 1e-13);
}

#[test]
fn two_mode_order_four_fixture() {
    let u = haar_random(2, 11).unwrap();
    let params = ModelParams::new(0.6, 0.5).unwrap();
    let pattern = OutputPattern::new(vec![1, 1]);
    let xi0 = [0.3, -0.7];
    let want = expected(&brute_force_coefficients(&u, &params, &pattern, &xi0));
    let got = engine(&u, &params, &pattern, &xi0, Order::Four, CrossPairWeight::Half);
    assert!(
        close(got, want.order4, 1e-12),
        "engine {got} brute force {}",
        want.order4
    );
    // Two photons admit at most two insertions on each side, so order 4 is the whole expectation.
    assert!(close(want.order4, want.full, 1e-12));
}

#[test]
fn doubled_cross_weight_does_not_match_expectation() {
    let u = haar_random(3, 5).unwrap();
    let params = ModelParams::new(0.9, 0.5).unwrap();
    let pattern = OutputPattern::new(vec![1, 1, 0]);
    let xi0 = [0.4, -0.2, 0.9];
    let want = expected(&brute_force_coefficients(&u, &params, &pattern, &xi0));
    let derived = engine(&u, &params, &pattern, &xi0, Order::Four, CrossPairWeight::Half);
    let doubled = engine(&u, &params, &pattern, &xi0, Order::Four, CrossPairWeight::Doubled);
    assert!(close(derived, want.order4, 1e-12));
    assert!((doubled - want.order4).abs() > 1e-6, "doubled {doubled} half {derived}");
}

fn pattern_strategy(modes: usize) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0u32..=2, modes).prop_filter("at most three photons", |v| v.iter().sum::<u32>() <= 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn engine_matches_brute_force_by_order(
        modes in 1usize..=3,
        seed in 0u64..1000,
        alpha in 0.05f64..0.95,
        loss_s2 in 0.0f64..=1.0,
        h_frac in 0.0f64..1.0,
        xi_raw in prop::collection::vec(-1.5f64..1.5, 3),
        counts_raw in pattern_strategy(3),
    ) {
        let u = haar_random(modes, seed).unwrap();
        let base = ModelParams::new(alpha, loss_s2).unwrap();
        let (lo, hi) = base.h_bounds();
        let params = base.with_h(lo + h_frac * (hi - lo)).unwrap();
        let pattern = OutputPattern::new(counts_raw[..modes].to_vec());
        let xi0 = &xi_raw[..modes];
        let want = expected(&brute_force_coefficients(&u, &params, &pattern, xi0));
        for (order, target) in [(Order::Zero, want.order0), (Order::Two, want.order2), (Order::Four, want.order4)] {
            let got = engine(&u, &params, &pattern, xi0, order, CrossPairWeight::Half);
            prop_assert!(close(got, target, 1e-10), "order {order}: engine {got} brute force {target}");
        }
        if pattern.total() <= 2 {
            prop_assert!(close(want.order4, want.full, 1e-10));
        }
    }
}

/// `E_{ξ₀}[g(ξ₀)]` for `ξ₀ ~ N(0, var_xi0 · I)` by tensor quadrature; exact
/// for polynomials of degree at most 7 in each coordinate.
fn average_over_xi0(params: &ModelParams, modes: usize, mut g: impl FnMut(&[f64]) -> f64) -> f64 {
    let rule = hermite_rule();
    let sd = params.var_xi0().sqrt();
    let mut xi0 = vec![0.0; modes];
    let mut total = 0.0;
    for idx in 0..rule.len().pow(modes as u32) {
        let mut rest = idx;
        let mut weight = 1.0;
        for x in xi0.iter_mut() {
            let (z, w) = rule[rest % 4];
            rest /= 4;
            *x = sd * z;
            weight *= w;
        }
        total += weight * g(&xi0);
    }
    total
}

#[test]
fn order_four_is_unbiased_up_to_two_photons() {
    for (modes, seed, alpha, loss_s2) in [(2, 1, 0.6, 0.5), (3, 4, 0.9, 0.5), (3, 7, 0.3, 0.0), (4, 2, 0.8, 0.9)] {
        let u = haar_random(modes, seed).unwrap();
        let params = ModelParams::new(alpha, loss_s2).unwrap();
        for photons in 0..=2 {
            for pattern in gbs_taylor::enumerate_patterns(modes, photons) {
                let mean = average_over_xi0(&params, modes, |xi0| {
                    engine(&u, &params, &pattern, xi0, Order::Four, CrossPairWeight::Half)
                }) * params.scale(modes);
                let exact = gbs_taylor::exact_probability(&u, &params, &pattern).unwrap();
                assert!((mean - exact).abs() <= 1e-12, "{pattern}: {mean} vs {exact}");
            }
        }
    }
}

#[test]
fn three_photon_bias_comes_from_dropped_insertions() {
    let u = haar_random(2, 3).unwrap();
    let params = ModelParams::new(0.6, 0.5).unwrap();
    for pattern in gbs_taylor::enumerate_patterns(2, 3) {
        let exact = gbs_taylor::exact_probability(&u, &params, &pattern).unwrap();
        let full = average_over_xi0(&params, 2, |xi0| {
            expected(&brute_force_coefficients(&u, &params, &pattern, xi0)).full
        }) * params.scale(2);
        assert!(
            (full - exact).abs() <= 1e-12 * (1.0 + exact),
            "{pattern}: {full} vs {exact}"
        );

        let truncated = average_over_xi0(&params, 2, |xi0| {
            engine(&u, &params, &pattern, xi0, Order::Four, CrossPairWeight::Half)
        }) * params.scale(2);
        assert!(
            (truncated - exact).abs() > 1e-3 * exact,
            "{pattern}: {truncated} vs {exact}"
        );
    }
}
