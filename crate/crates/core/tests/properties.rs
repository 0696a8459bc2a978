//! Property tests for the module invariants.

use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

use heredlab::history::{assemble_s, singular_system, truncate, HistoryGrid};
use heredlab::material::{
    complex_modulus, eval_kernel, kernel_operator_norm, relaxation_modulus, HereditaryLaw, LawKernel, ScalarKernel,
    Weight,
};
use heredlab::spectra::{
    class_membership, kernel_distance, kernel_from_measure, prony_from_density, RelaxationMeasure, TabulatedDensity,
};
use heredlab::volterra::{
    apply_p, solve_direct, solve_picard, solve_report, stress_from_strain, strain_work, weighted_norm, Evolution,
    EvolutionKind, PicardOptions, TimeGrid,
};
use heredlab::wellposed::{certify, gamma, gamma_quadrature, hs_constant};

fn pairs(max: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.05f64..3.0, -1.0f64..1.5), 1..=max)
        .prop_map(|v| v.into_iter().map(|(c, e)| (c, 10f64.powf(e))).collect())
}

fn kernel(max: usize) -> impl Strategy<Value = ScalarKernel> {
    pairs(max).prop_map(|p| ScalarKernel::from_pairs(&p).unwrap())
}

fn smooth_history(coeffs: &[f64], horizon: f64) -> impl Fn(f64) -> f64 + '_ {
    move |t| {
        coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * ((k as f64 + 1.0) * t / horizon * 3.0).sin())
            .sum::<f64>()
    }
}

/// Orthonormal basis of symmetric 3×3 tensors as flattened 9-vectors.
fn symmetric_basis() -> Vec<[f64; 9]> {
    let mut out = Vec::new();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..3 {
        for j in i..3 {
            let mut e = [0.0; 9];
            if i == j {
                e[3 * i + i] = 1.0;
            } else {
                e[3 * i + j] = s;
                e[3 * j + i] = s;
            }
            out.push(e);
        }
    }
    out
}

/// `(a − 2b/3) δᵢⱼδₖₗ + b (δᵢₖδⱼₗ + δᵢₗδⱼₖ)` restricted to symmetric tensors.
fn isotropic_tensor(a: f64, b: f64) -> DMatrix<f64> {
    let basis = symmetric_basis();
    let apply = |x: &[f64; 9]| -> [f64; 9] {
        let tr = x[0] + x[4] + x[8];
        let mut y = [0.0; 9];
        for i in 0..3 {
            for j in 0..3 {
                let delta = if i == j { 1.0 } else { 0.0 };
                y[3 * i + j] = (a - 2.0 * b / 3.0) * tr * delta + b * (x[3 * i + j] + x[3 * j + i]);
            }
        }
        y
    };
    DMatrix::from_fn(6, 6, |r, c| {
        let y = apply(&basis[c]);
        basis[r].iter().zip(&y).map(|(p, q)| p * q).sum()
    })
}

/// `max ξᵀKᵀℂ⁻¹Kξ / ξᵀℂξ` by a dense generalized eigenproblem.
fn brute_force_norm(k: &DMatrix<f64>, c: &DMatrix<f64>) -> f64 {
    let ce = SymmetricEigen::new(c.clone());
    let inv_sqrt = &ce.eigenvectors
        * DMatrix::from_diagonal(&ce.eigenvalues.map(|x| 1.0 / x.sqrt()))
        * ce.eigenvectors.transpose();
    let c_inv = c.clone().try_inverse().unwrap();
    let m = &inv_sqrt * k.transpose() * c_inv * k * &inv_sqrt;
    SymmetricEigen::new(m).eigenvalues.max().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernels_are_causal(k in kernel(6), tau in -100.0f64..-1e-12) {
        prop_assert_eq!(eval_kernel(&k, tau), 0.0);
    }

    #[test]
    fn relaxation_is_monotone_and_bounded(k in kernel(6), c0 in 0.1f64..3.0) {
        let total = c0 + k.stiffness();
        let mut prev = f64::INFINITY;
        for i in 0..=400 {
            let t = 1e-3 * 1.04f64.powi(i) - 1e-3;
            let e = relaxation_modulus(&k, c0, t).unwrap();
            prop_assert!(e <= prev * (1.0 + 1e-14));
            prop_assert!(e >= c0 * (1.0 - 1e-14) && e <= total * (1.0 + 1e-14));
            prev = e;
        }
    }

    #[test]
    fn graffi_positivity(k in kernel(6), c0 in 0.1f64..3.0) {
        for i in 0..=120 {
            let omega = if i == 0 { 0.0 } else { 10f64.powf(-4.0 + 0.075 * i as f64) };
            let z = complex_modulus(&k, c0, omega).unwrap();
            prop_assert!(z.loss >= 0.0);
            prop_assert!(z.storage >= c0 * (1.0 - 1e-14));
        }
    }

    #[test]
    fn isotropic_norm_matches_tensor_brute_force(
        bulk in pairs(3), shear in pairs(3), b0 in 0.1f64..3.0, g0 in 0.1f64..3.0, tau in 0.0f64..5.0,
    ) {
        let law = HereditaryLaw::isotropic(
            Some((b0, ScalarKernel::from_pairs(&bulk).unwrap())),
            (g0, ScalarKernel::from_pairs(&shear).unwrap()),
        ).unwrap();
        let LawKernel::Isotropic(k) = law.kernel() else { unreachable!() };
        let fast = kernel_operator_norm(k, law.moduli(), tau).unwrap();
        let big_b = b0 + k.bulk.stiffness();
        let big_g = g0 + k.shear.stiffness();
        let kt = isotropic_tensor(k.bulk.eval(tau), k.shear.eval(tau));
        let ct = isotropic_tensor(big_b, big_g);
        let brute = brute_force_norm(&kt, &ct);
        prop_assert!((fast - brute).abs() <= 1e-10 * brute.max(1e-300), "{} vs {}", fast, brute);
    }

    #[test]
    fn weight_semigroup(rate in 0.0f64..5.0, s in 0.0f64..10.0, frac in 0.0f64..1.0) {
        let w = Weight::exponential(rate).unwrap();
        let t = frac * s;
        let lhs = w.eval(s);
        let rhs = w.eval(s - t) * w.eval(t);
        // exp has condition number |x|, so a few ulps times (1 + λs).
        prop_assert!((lhs - rhs).abs() <= f64::EPSILON * (4.0 + 2.0 * rate * s) * lhs);
    }

    #[test]
    fn gamma_is_monotone_in_weight_rate(k in kernel(6), c0 in 0.1f64..3.0) {
        let law = HereditaryLaw::scalar(c0, k.clone()).unwrap();
        let top = k.slowest_rate().unwrap();
        let mut prev = 0.0;
        for i in 0..40 {
            let l0 = top * i as f64 / 40.0;
            let g = gamma(&law, Weight::exponential(l0).unwrap()).unwrap();
            prop_assert!(g >= prev);
            prev = g;
        }
    }

    #[test]
    fn gamma_quadrature_matches_closed_form(k in kernel(8), c0 in 0.1f64..3.0, frac in 0.0f64..0.95) {
        let law = HereditaryLaw::scalar(c0, k.clone()).unwrap();
        let w = Weight::exponential(frac * k.slowest_rate().unwrap()).unwrap();
        let closed = gamma(&law, w).unwrap();
        let quad = gamma_quadrature(&law, w).unwrap();
        prop_assert!(((quad - closed) / closed).abs() <= 1e-8, "{} vs {}", quad, closed);
    }

    #[test]
    fn finite_gamma_gives_finite_hs_constant(k in kernel(8), c0 in 0.1f64..3.0, frac in 0.0f64..0.95) {
        let law = HereditaryLaw::scalar(c0, k.clone()).unwrap();
        let w = Weight::exponential(frac * k.slowest_rate().unwrap()).unwrap();
        prop_assert!(gamma(&law, w).unwrap().is_finite());
        prop_assert!(hs_constant(&law, w).unwrap().is_finite());
    }

    #[test]
    fn certificates_are_deterministic(k in kernel(8), c0 in 0.1f64..3.0) {
        let law = HereditaryLaw::scalar(c0, k).unwrap();
        let w = Weight::exponential(0.01).unwrap();
        let a = serde_json::to_string(&certify(&law, w).unwrap()).unwrap();
        let b = serde_json::to_string(&certify(&law, w).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn direct_solve_inverts_stress_map(
        k in kernel(6), c0 in 0.1f64..3.0, coeffs in prop::collection::vec(-1.0f64..1.0, 1..5),
        horizon in 0.1f64..10.0, steps in 2usize..300,
    ) {
        let total = c0 + k.stiffness();
        let grid = TimeGrid::uniform(horizon, steps).unwrap();
        let strain = Evolution::from_fn(grid, EvolutionKind::Strain, smooth_history(&coeffs, horizon)).unwrap();
        let stress = stress_from_strain(&k, total, &strain).unwrap();
        let back = solve_direct(&k, total, &stress).unwrap();
        let scale = strain.max_abs().max(1e-300);
        prop_assert!(back.max_difference(&strain) <= 1e-10 * scale);
    }

    #[test]
    fn a_priori_bound_holds(
        k in kernel(6), c0 in 0.1f64..3.0, frac in 0.0f64..0.9,
        coeffs in prop::collection::vec(-1.0f64..1.0, 1..5), horizon in 0.1f64..10.0,
    ) {
        let total = c0 + k.stiffness();
        let w = Weight::exponential(frac * k.slowest_rate().unwrap()).unwrap();
        let law = HereditaryLaw::scalar(c0, k.clone()).unwrap();
        prop_assume!(certify(&law, w).unwrap().contractive);
        let grid = TimeGrid::uniform(horizon, 300).unwrap();
        let stress = Evolution::from_fn(grid, EvolutionKind::Stress, smooth_history(&coeffs, horizon)).unwrap();
        let e = solve_direct(&k, total, &stress).unwrap();
        let r = solve_report(&k, total, &stress, e, w).unwrap();
        prop_assert!(r.bound_check, "{} > {}", r.strain_norm, r.bound);
    }

    #[test]
    fn picard_agrees_with_direct(
        k in kernel(4), c0 in 0.1f64..3.0, coeffs in prop::collection::vec(-1.0f64..1.0, 1..4),
    ) {
        let total = c0 + k.stiffness();
        let grid = TimeGrid::uniform(2.0, 200).unwrap();
        let stress = Evolution::from_fn(grid, EvolutionKind::Stress, smooth_history(&coeffs, 2.0)).unwrap();
        let w = Weight::constant();
        let opts = PicardOptions { tol: 1e-12, max_iter: 5000 };
        let picard = solve_picard(&k, total, &stress, w, opts).unwrap();
        let direct = solve_direct(&k, total, &stress).unwrap();
        let scale = direct.max_abs().max(1e-300);
        prop_assert!(picard.solution.max_difference(&direct) <= 1e-9 * scale);
    }

    #[test]
    fn closed_cycles_dissipate(
        k in kernel(6), c0 in 0.1f64..3.0, amps in prop::collection::vec(-1.0f64..1.0, 1..6),
        horizon in 0.05f64..20.0, steps in 4usize..300,
    ) {
        let total = c0 + k.stiffness();
        let grid = TimeGrid::uniform(horizon, steps).unwrap();
        let strain = Evolution::from_fn(grid, EvolutionKind::Strain, |t| {
            let x = 2.0 * std::f64::consts::PI * t / horizon;
            amps.iter().enumerate().map(|(i, a)| a * ((i as f64 + 1.0) * x).sin()).sum::<f64>()
        }).unwrap();
        let mut v = strain.values().to_vec();
        v[0] = 0.0;
        *v.last_mut().unwrap() = 0.0;
        let strain = Evolution::new(strain.grid().clone(), v, EvolutionKind::Strain).unwrap();
        prop_assert!(strain_work(&k, total, &strain).unwrap() >= -1e-10);
    }

    #[test]
    fn prony_and_atomic_measure_agree(p in pairs(6), tau in 0.0f64..20.0) {
        let prony = ScalarKernel::from_pairs(&p).unwrap();
        // Atom mass m at rate λ gives stiffness m (cutoff 0): K = Σ m λ e^{−λτ}.
        let nu = RelaxationMeasure::atomic(0.0, p.iter().map(|&(c, l)| (l, c)).collect()).unwrap();
        let from_measure = kernel_from_measure(&nu).unwrap();
        let a = eval_kernel(&prony, tau);
        let b = eval_kernel(&from_measure, tau);
        prop_assert!((a - b).abs() <= 1e-14 * a.abs().max(1e-300), "{} vs {}", a, b);
    }

    #[test]
    fn kernel_distance_is_a_metric(a in kernel(3), b in kernel(3), c in kernel(3), frac in 0.0f64..0.9) {
        let rate = frac * [&a, &b, &c].iter().map(|k| k.slowest_rate().unwrap()).fold(f64::INFINITY, f64::min);
        let w = Weight::exponential(rate).unwrap();
        let total = 10.0;
        let ab = kernel_distance(&a, &b, total, w).unwrap();
        let bc = kernel_distance(&b, &c, total, w).unwrap();
        let ac = kernel_distance(&a, &c, total, w).unwrap();
        let ba = kernel_distance(&b, &a, total, w).unwrap();
        prop_assert!(ac <= (ab + bc) * (1.0 + 1e-9) + 1e-14);
        prop_assert!((ab - ba).abs() <= 1e-9 * ab.max(1e-300));
        prop_assert!(kernel_distance(&a, &a, total, w).unwrap() == 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn apply_p_is_second_order(
        k in kernel(3), coeffs in prop::collection::vec(-1.0f64..1.0, 1..4), horizon in 0.5f64..3.0,
    ) {
        let total = 1.0 + k.stiffness();
        let f = smooth_history(&coeffs, horizon);
        let modes = k.prony_modes();
        // RK4 on qᵢ' = λᵢ(ε − qᵢ) with fine steps; P ε = Σ Cᵢ qᵢ / ℂ.
        let reference = |m: usize| -> Vec<f64> {
            let sub = 32;
            let h = horizon / (m * sub) as f64;
            let mut q = vec![0.0; modes.len()];
            let mut out = vec![0.0];
            let mut t = 0.0;
            for _ in 0..m {
                for _ in 0..sub {
                    for (qi, md) in q.iter_mut().zip(&modes) {
                        let g = |t: f64, q: f64| md.rate() * (f(t) - q);
                        let k1 = g(t, *qi);
                        let k2 = g(t + 0.5 * h, *qi + 0.5 * h * k1);
                        let k3 = g(t + 0.5 * h, *qi + 0.5 * h * k2);
                        let k4 = g(t + h, *qi + h * k3);
                        *qi += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                    }
                    t += h;
                }
                out.push(q.iter().zip(&modes).map(|(q, md)| md.stiffness() * q).sum::<f64>() / total);
            }
            out
        };
        let error = |m: usize| -> f64 {
            let strain = Evolution::from_fn(TimeGrid::uniform(horizon, m).unwrap(), EvolutionKind::Strain, &f).unwrap();
            let p = apply_p(&k, total, &strain).unwrap();
            p.values().iter().zip(reference(m)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (error(100), error(200));
        prop_assume!(e2 > 1e-12);
        let order = (e1 / e2).log2();
        prop_assert!((1.8..=2.2).contains(&order), "order {}", order);
    }

    #[test]
    fn hs_norm_is_bounded(k in kernel(4), c0 in 0.1f64..3.0, frac in 0.0f64..0.9, horizon in 0.2f64..3.0) {
        let w = Weight::exponential(frac * k.slowest_rate().unwrap()).unwrap();
        let law = HereditaryLaw::scalar(c0, k.clone()).unwrap();
        let total = c0 + k.stiffness();
        let grid = HistoryGrid::trapezoid(horizon, 200).unwrap();
        let op = assemble_s(&k, total, w, &grid).unwrap();
        let bound = hs_constant(&law, w).unwrap() * horizon.sqrt();
        // Grid tolerance: O(h²) trapezoid error relative to the kernel scale.
        let h = horizon / 200.0;
        let tol = h * h * k.fastest_rate().unwrap().powi(2) * bound;
        prop_assert!(op.hs_norm() <= bound + tol, "{} > {}", op.hs_norm(), bound);
    }

    #[test]
    fn truncation_is_optimal_and_vectors_orthonormal(k in kernel(4), frac in 0.0f64..0.9) {
        let w = Weight::exponential(frac * k.slowest_rate().unwrap()).unwrap();
        let grid = HistoryGrid::trapezoid(1.0, 120).unwrap();
        let op = assemble_s(&k, 1.0 + k.stiffness(), w, &grid).unwrap();
        let sys = singular_system(&op, 8).unwrap();
        prop_assert!(sys.gram_deviation() <= 1e-10);
        prop_assert!(sys.values.windows(2).all(|p| p[0] >= p[1]));
        for n in 0..7 {
            let target = sys.values[n];
            prop_assume!(target > 1e-10 * sys.values[0]);
            let err = op.distance_to(&truncate(&op, n).unwrap());
            prop_assert!(((err - target) / target).abs() <= 1e-8, "N={} {} vs {}", n, err, target);
        }
    }

    #[test]
    fn mixtures_of_members_are_members(
        atoms in prop::collection::vec((0.2f64..5.0, 0.01f64..0.6), 2..4), theta in 0.0f64..1.0,
    ) {
        let bounding = ScalarKernel::single(1.0, 1.0).unwrap();
        let grid = HistoryGrid::trapezoid(1.0, 100).unwrap();
        let w = Weight::exponential(0.3).unwrap();
        let op = assemble_s(&bounding, 2.0, w, &grid).unwrap();
        let sys = singular_system(&op, 5).unwrap();
        let first = RelaxationMeasure::atomic(0.0, vec![atoms[0]]).unwrap();
        let second = RelaxationMeasure::atomic(0.0, atoms[1..].to_vec()).unwrap();
        let member = |nu: &RelaxationMeasure| class_membership(&kernel_from_measure(nu).unwrap(), 2.0, &sys).unwrap();
        let (a, b) = (member(&first), member(&second));
        prop_assume!(a.member && b.member);
        let mix = member(&first.mix(&second, theta).unwrap());
        prop_assert!(mix.member, "{:?}", mix.margins);
    }

    #[test]
    fn perturbation_transfer(p in pairs(3), eps in 1e-6f64..1e-2, coeffs in prop::collection::vec(-1.0f64..1.0, 1..4)) {
        let k = ScalarKernel::from_pairs(&p).unwrap();
        let perturbed: Vec<(f64, f64)> = p.iter().enumerate()
            .map(|(i, &(c, l))| (c * (1.0 + eps * (i as f64 + 1.0)), l * (1.0 - eps)))
            .collect();
        let kh = ScalarKernel::from_pairs(&perturbed).unwrap();
        let total = 1.0 + k.stiffness().max(kh.stiffness());
        let w = Weight::constant();
        let d = kernel_distance(&k, &kh, total, w).unwrap();
        let gamma_h = kh.stiffness() / total;
        let grid = TimeGrid::uniform(3.0, 300).unwrap();
        let stress = Evolution::from_fn(grid, EvolutionKind::Stress, smooth_history(&coeffs, 3.0)).unwrap();
        let e = solve_direct(&k, total, &stress).unwrap();
        let eh = solve_direct(&kh, total, &stress).unwrap();
        let diff = Evolution::new(
            e.grid().clone(),
            e.values().iter().zip(eh.values()).map(|(a, b)| a - b).collect(),
            EvolutionKind::Strain,
        ).unwrap();
        let lhs = weighted_norm(&diff, total, w);
        let n = weighted_norm(&e, total, w);
        prop_assert!(lhs <= d * n / (1.0 - gamma_h) * 1.01 + 1e-13 * n, "{} > {}", lhs, d * n / (1.0 - gamma_h));
    }
}

#[test]
fn density_refinement_is_monotone() {
    let families: [(&str, Box<dyn Fn(f64) -> f64>); 3] = [
        ("uniform", Box::new(|_| 1.0)),
        ("ramp", Box::new(|l| l - 0.5)),
        ("bump", Box::new(|l: f64| (-(l - 2.0).powi(2)).exp())),
    ];
    for (name, f) in families {
        let density = TabulatedDensity::from_fn(0.5, 4.0, 2, f);
        let nu = RelaxationMeasure::new(0.0, Vec::new(), Some(density)).unwrap();
        let exact = kernel_from_measure(&nu).unwrap();
        let total = 1.0 + exact.stiffness();
        let mut prev = f64::INFINITY;
        for n in [1, 2, 3, 4, 6, 8] {
            let atomic = kernel_from_measure(&prony_from_density(&nu, n).unwrap()).unwrap();
            let d = kernel_distance(&atomic, &exact, total, Weight::constant()).unwrap();
            if prev > 1e-12 {
                assert!(d < prev, "{name}: n={n} distance {d} not below {prev}");
            }
            prev = d;
        }
    }
}
