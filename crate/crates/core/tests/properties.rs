use proptest::prelude::*;

use vb_odmr::ensemble::summarize;
use vb_odmr::lattice::{cell_volume, linear_regression, LatticeRecord};
use vb_odmr::lineshape::{doublet_gradient, doublet_model, DoubletParams};
use vb_odmr::spin::{
    build_hamiltonian, eigenvalues, symmetric_eigenvalues, transitions_from_zfs, zfs_energies, zfs_from_transitions,
    HamiltonianMatrix, TransitionPair, ZfsParams,
};
use vb_odmr::thermal::{
    eval_model, invert_temperature, model_derivative, varshni_derivative, CalibrationModel, ModelKind, ModelParams,
    VarshniParams,
};

fn zfs() -> impl Strategy<Value = (f64, f64)> {
    (1.0..6000.0_f64).prop_flat_map(|d| (Just(d), 0.0..d))
}

fn doublet() -> impl Strategy<Value = DoubletParams> {
    (3000.0..4000.0_f64, 0.0..300.0_f64, 5.0..80.0_f64, 5.0..80.0_f64, 0.0..0.2_f64, 0.0..0.2_f64, 0.5..2.0_f64)
        .prop_map(|(nu1, gap, gamma1, gamma2, c1, c2, baseline)| DoubletParams {
            nu1,
            nu2: nu1 + gap,
            gamma1,
            gamma2,
            c1,
            c2,
            baseline,
        })
}

fn varshni() -> impl Strategy<Value = VarshniParams> {
    (3000.0..4000.0_f64, 0.01..5.0_f64, 10.0..2000.0_f64).prop_map(|(d0, a, b)| VarshniParams::new(d0, a, b).unwrap())
}

/// Rotation about an arbitrary axis via Rodrigues' formula.
fn rotation(axis: [f64; 3], angle: f64) -> [[f64; 3]; 3] {
    let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let [x, y, z] = axis.map(|v| v / n);
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    [
        [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
        [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
        [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
    ]
}

fn similarity(r: &[[f64; 3]; 3], m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    out[i][j] += r[i][k] * m[k][l] * r[j][l];
                }
            }
        }
    }
    // Exact symmetry for the constructor check.
    for i in 0..3 {
        for j in 0..i {
            let avg = 0.5 * (out[i][j] + out[j][i]);
            out[i][j] = avg;
            out[j][i] = avg;
        }
    }
    out
}

proptest! {
    #[test]
    fn zfs_round_trip((d, e) in zfs()) {
        let p = ZfsParams::new(d, e).unwrap();
        let t = transitions_from_zfs(&p);
        prop_assert!(t.nu1() <= t.nu2() && t.nu1() > 0.0);
        let back = zfs_from_transitions(&t).unwrap();
        prop_assert!((back.d() - d).abs() <= 1e-12 * d);
        prop_assert!((back.e() - e).abs() <= 1e-12 * d);
    }

    #[test]
    fn transitions_round_trip(nu1 in 1.0..5000.0_f64, gap in 0.0..1000.0_f64) {
        let t = TransitionPair::new(nu1, nu1 + gap).unwrap();
        let back = transitions_from_zfs(&zfs_from_transitions(&t).unwrap());
        prop_assert!((back.nu1() - t.nu1()).abs() <= 1e-12 * t.nu2());
        prop_assert!((back.nu2() - t.nu2()).abs() <= 1e-12 * t.nu2());
    }

    #[test]
    fn hamiltonian_is_traceless_with_closed_form_spectrum((d, e) in zfs()) {
        let p = ZfsParams::new(d, e).unwrap();
        let h = build_hamiltonian(&p);
        prop_assert!(h.trace().abs() <= 1e-12 * d);
        let mut expected = [-2.0 * d / 3.0, d / 3.0 - e, d / 3.0 + e];
        expected.sort_by(f64::total_cmp);
        let numeric = eigenvalues(&h).unwrap();
        for (a, b) in expected.iter().zip(&numeric) {
            prop_assert!((a - b).abs() <= 1e-9 * (2.0 * d / 3.0 + e));
        }
        let closed = zfs_energies(&p);
        prop_assert!((closed[2] - closed[0]) >= 0.0);
    }

    #[test]
    fn spectrum_is_rotation_invariant((d, e) in zfs(), axis in prop::array::uniform3(-1.0..1.0_f64), angle in 0.0..6.3_f64) {
        prop_assume!(axis.iter().map(|v| v * v).sum::<f64>() > 1e-3);
        let h = build_hamiltonian(&ZfsParams::new(d, e).unwrap());
        let rotated = similarity(&rotation(axis, angle), h.entries());
        let m = HamiltonianMatrix::new(rotated).unwrap();
        let a = symmetric_eigenvalues(h.entries());
        let b = eigenvalues(&m).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-9 * (2.0 * d / 3.0 + e));
        }
    }

    #[test]
    fn doublet_swap_symmetry(p in doublet(), nu in 2500.0..4500.0_f64) {
        let a = doublet_model(&p, nu);
        let b = doublet_model(&p.swapped(), nu);
        prop_assert!((a - b).abs() <= 1e-15);
        prop_assert!(a <= p.baseline);
    }

    #[test]
    fn doublet_gradient_matches_differences(p in doublet(), nu in 2800.0..4200.0_f64) {
        let g = doublet_gradient(&p, nu);
        let x = p.to_array();
        for k in 0..x.len() {
            let h = 1e-6 * (1.0 + x[k].abs());
            let mut up = x;
            let mut dn = x;
            up[k] += h;
            dn[k] -= h;
            let fd = (doublet_model(&DoubletParams::from_slice(&up), nu) - doublet_model(&DoubletParams::from_slice(&dn), nu)) / (2.0 * h);
            prop_assert!((fd - g[k]).abs() <= 1e-6 * (1.0 + g[k].abs()), "param {} analytic {} fd {}", k, g[k], fd);
        }
    }

    #[test]
    fn varshni_strictly_decreasing(v in varshni(), t in 0.01..2000.0_f64) {
        prop_assert!(varshni_derivative(&v, t).unwrap() < 0.0);
        prop_assert!(v.eval(t + 1.0) < v.eval(t));
        prop_assert_eq!(varshni_derivative(&v, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn inversion_round_trip(v in varshni(), frac in 0.0..=1.0_f64) {
        let m = CalibrationModel::from_params(ModelKind::Varshni, ModelParams::Varshni(v), 5.0, 600.0).unwrap();
        let t = 5.0 + 595.0 * frac;
        let inv = invert_temperature(&m, eval_model(&m, t).unwrap(), 1.0).unwrap();
        prop_assert!((inv.temperature - t).abs() <= 1e-5);
        let slope = model_derivative(&m, inv.temperature).unwrap().abs();
        prop_assert!((inv.sigma_t - 1.0 / slope).abs() <= 1e-9 * inv.sigma_t);
    }

    #[test]
    fn sigma_t_shrinks_with_steeper_slope(v in varshni(), t1 in 10.0..590.0_f64, dt in 1.0..100.0_f64) {
        let m = CalibrationModel::from_params(ModelKind::Varshni, ModelParams::Varshni(v), 5.0, 600.0).unwrap();
        let t2 = (t1 + dt).min(600.0);
        let a = invert_temperature(&m, eval_model(&m, t1).unwrap(), 0.5).unwrap();
        let b = invert_temperature(&m, eval_model(&m, t2).unwrap(), 0.5).unwrap();
        let (sa, sb) = (model_derivative(&m, a.temperature).unwrap().abs(), model_derivative(&m, b.temperature).unwrap().abs());
        if sb > sa {
            prop_assert!(b.sigma_t < a.sigma_t);
        } else if sb < sa {
            prop_assert!(b.sigma_t > a.sigma_t);
        }
    }

    #[test]
    fn cell_volume_scales_cubically(a in 0.5..10.0_f64, c in 0.5..20.0_f64, s in 0.1..10.0_f64) {
        let v = cell_volume(&LatticeRecord::new(0.0, a, c).unwrap());
        let w = cell_volume(&LatticeRecord::new(0.0, s * a, s * c).unwrap());
        prop_assert!((w - s.powi(3) * v).abs() <= 1e-12 * w);
    }

    #[test]
    fn regression_shift_and_scale(
        pts in prop::collection::vec((-10.0..10.0_f64, -100.0..100.0_f64), 3..40),
        shift in -50.0..50.0_f64,
    ) {
        let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        prop_assume!(x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() > 1e-3);
        let r = linear_regression(&x, &y).unwrap();
        prop_assert!(r.slope_sigma >= 0.0 && r.intercept_sigma >= 0.0);
        prop_assert!((0.0..=1.0).contains(&r.r_squared));

        let shifted: Vec<f64> = x.iter().map(|v| v + shift).collect();
        let rs = linear_regression(&shifted, &y).unwrap();
        prop_assert!((rs.slope - r.slope).abs() <= 1e-9 * (1.0 + r.slope.abs()));
        prop_assert!((rs.intercept - (r.intercept - r.slope * shift)).abs() <= 1e-8 * (1.0 + r.intercept.abs() + (r.slope * shift).abs()));
        prop_assert!((rs.slope_sigma - r.slope_sigma).abs() <= 1e-8 * (1.0 + r.slope_sigma));

        let doubled: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let rd = linear_regression(&doubled, &y).unwrap();
        prop_assert!((rd.slope - 0.5 * r.slope).abs() <= 1e-9 * (1.0 + r.slope.abs()));
        prop_assert!((rd.slope_sigma - 0.5 * r.slope_sigma).abs() <= 1e-9 * (1.0 + r.slope_sigma));
    }

    #[test]
    fn perfect_lines_have_unit_r_squared(
        x in prop::collection::vec(-10.0..10.0_f64, 3..30),
        slope in -5.0..5.0_f64,
        intercept in -5.0..5.0_f64,
    ) {
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        prop_assume!(x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() > 1e-2);
        let y: Vec<f64> = x.iter().map(|v| slope * v + intercept).collect();
        let r = linear_regression(&x, &y).unwrap();
        prop_assert!((r.r_squared - 1.0).abs() <= 1e-12);
        prop_assert!((r.slope - slope).abs() <= 1e-9);
    }

    #[test]
    fn imperfect_lines_fall_short_of_unit_r_squared(
        x in prop::collection::vec(-10.0..10.0_f64, 4..30),
        bump in 0.1..5.0_f64,
    ) {
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        prop_assume!(x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() > 1e-2);
        // A quadratic term leaves nonzero residuals around any line.
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + bump * (v - mean).powi(2)).collect();
        let r = linear_regression(&x, &y).unwrap();
        prop_assert!(r.r_squared < 1.0);
    }

    #[test]
    fn histogram_covers_all_values(values in prop::collection::vec(3400.0..3500.0_f64, 2..200), bw in 0.1..20.0_f64) {
        let s = summarize(&values, bw).unwrap();
        prop_assert_eq!(s.histogram.iter().map(|b| b.count).sum::<usize>(), values.len());
        prop_assert!(s.sem >= 0.0);
        let first = s.histogram.first().unwrap();
        prop_assert_eq!(first.lower, (values.iter().copied().fold(f64::INFINITY, f64::min) / bw).floor() * bw);
        for w in s.histogram.windows(2) {
            prop_assert_eq!(w[0].upper, w[1].lower);
            prop_assert!(w[0].lower < w[0].upper);
        }
        for v in &values {
            let hits = s.histogram.iter().filter(|b| b.lower <= *v && *v < b.upper).count();
            prop_assert_eq!(hits, 1);
        }
    }

    #[test]
    fn summary_shift_and_permutation(values in prop::collection::vec(-100.0..100.0_f64, 2..100), delta in -1000.0..1000.0_f64, seed in any::<u64>()) {
        let s = summarize(&values, 1.0).unwrap();
        let shifted: Vec<f64> = values.iter().map(|v| v + delta).collect();
        let t = summarize(&shifted, 1.0).unwrap();
        prop_assert!((t.mean - (s.mean + delta)).abs() <= 1e-9 * (1.0 + delta.abs()));
        prop_assert!((t.sem - s.sem).abs() <= 1e-9 * (1.0 + delta.abs()));

        let mut permuted = values.clone();
        let n = permuted.len();
        let mut state = seed;
        for i in (1..n).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            permuted.swap(i, (state >> 33) as usize % (i + 1));
        }
        let u = summarize(&permuted, 1.0).unwrap();
        prop_assert!((u.mean - s.mean).abs() <= 1e-12 * (1.0 + s.mean.abs()));
        prop_assert!((u.sem - s.sem).abs() <= 1e-12 * (1.0 + s.sem));
        prop_assert_eq!(u.histogram, s.histogram);
    }
}
