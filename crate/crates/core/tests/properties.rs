//! Property tests over the public API.

use crackfield::field_io::{
    apply_mask, load_field_from_str, transform_field, write_field_csv, DisplacementField,
    LengthUnit, MaskRegion,
};
use crackfield::fracture::{detect_plateau, ContourRow, ContourSeries, PlateauOptions};
use crackfield::material::{
    effective_isotropic_from_cubic, j_from_k, plane_stiffness, secant_modulus, EffectiveConstants,
    Material, PlaneState, RambergOsgood,
};
use crackfield::mesh::{build_seam_mesh, build_uncracked_mesh, CrackDefinition};
use crackfield::solver::element::element_stiffness;
use crackfield::solver::{mesh_geometry, solve_elastic};
use crackfield::synthfield::{
    add_noise, generate_williams_field, mean_magnitude, NoiseKind, SyntheticSpec,
};
use nalgebra::{DMatrix, DVector, Matrix3};
use proptest::prelude::*;

fn plane_state() -> impl Strategy<Value = PlaneState> {
    prop_oneof![Just(PlaneState::PlaneStrain), Just(PlaneState::PlaneStress)]
}

fn small_field() -> impl Strategy<Value = DisplacementField<f64>> {
    (3usize..9, 3usize..9, prop::bool::ANY, any::<u64>()).prop_map(|(nx, ny, oop, seed)| {
        let mut s = seed | 1;
        let mut next = move || {
            // xorshift; values in [-1, 1)
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 52) as f64 - 1.0
        };
        DisplacementField::from_fn(nx, ny, [1e-6, 1.5e-6], [2e-6, -1e-6], oop, |_| {
            [1e-8 * next(), 1e-8 * next(), 1e-8 * next()]
        })
    })
}

fn spec(k: [f64; 3], n: usize, ps: PlaneState) -> SyntheticSpec<f64> {
    let mut s = SyntheticSpec::reference_mixed_mode().with_k(k);
    s.nx = n;
    s.ny = n;
    s.plane_state = ps;
    s
}

fn mirrored(field: &DisplacementField<f64>) -> DisplacementField<f64> {
    let mut out = field.clone();
    for j in 0..field.ny {
        for i in 0..field.nx {
            let v = field.u[field.index(i, field.ny - 1 - j)];
            out.u[field.index(i, j)] = [v[0], -v[1], v[2]];
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip(f in small_field()) {
        let mut buf = Vec::new();
        write_field_csv(&f, &mut buf).unwrap();
        let g: DisplacementField<f64> =
            load_field_from_str(std::str::from_utf8(&buf).unwrap(), LengthUnit::Meter, None).unwrap();
        prop_assert_eq!((g.nx, g.ny), (f.nx, f.ny));
        prop_assert_eq!(g.has_out_of_plane, f.has_out_of_plane);
        for (a, b) in f.u.iter().zip(&g.u) {
            for c in 0..3 {
                prop_assert!((a[c] - b[c]).abs() <= f64::EPSILON * a[c].abs());
            }
        }
    }

    #[test]
    fn units_agree_in_meters(f in small_field()) {
        let scaled = |s: f64| {
            let mut text = String::from("X,Y,Ux,Uy\n");
            for n in 0..f.len() {
                let p = f.position(n);
                let v = f.u[n];
                text.push_str(&format!("{:e},{:e},{:e},{:e}\n", p[0] * s, p[1] * s, v[0] * s, v[1] * s));
            }
            text
        };
        let mm: DisplacementField<f64> = load_field_from_str(&scaled(1e3), LengthUnit::Millimeter, None).unwrap();
        let um: DisplacementField<f64> = load_field_from_str(&scaled(1e6), LengthUnit::Micrometer, None).unwrap();
        for (a, b) in mm.u.iter().zip(&um.u) {
            prop_assert!((a[0] - b[0]).abs() <= 4.0 * f64::EPSILON * a[0].abs());
            prop_assert!((a[1] - b[1]).abs() <= 4.0 * f64::EPSILON * a[1].abs());
        }
        prop_assert!((mm.spacing[0] - um.spacing[0]).abs() <= 1e-12 * mm.spacing[0]);
    }

    #[test]
    fn four_quarter_turns_are_identity(f in small_field(), rot in 0u32..4) {
        prop_assert_eq!(transform_field(&f, 4, None).unwrap(), f.clone());
        let once = transform_field(&f, rot, None).unwrap();
        prop_assert_eq!(transform_field(&once, 4 - rot, None).unwrap(), f);
    }

    #[test]
    fn magnitude_is_nonnegative(f in small_field(), zeros in prop::collection::vec(any::<bool>(), 81)) {
        let mut f = f;
        for (n, z) in zeros.iter().take(f.len()).enumerate() {
            if *z {
                f.u[n] = [0.0; 3];
            }
        }
        for (m, v) in f.magnitude().iter().zip(&f.u) {
            prop_assert!(*m >= 0.0);
            let zero = v[0] == 0.0 && v[1] == 0.0 && (!f.has_out_of_plane || v[2] == 0.0);
            prop_assert_eq!(*m == 0.0, zero);
        }
    }

    #[test]
    fn j_from_k_is_even_in_each_mode(
        k in prop::array::uniform3(-1e7f64..1e7),
        e in 1e9f64..5e11,
        nu in 0.0f64..0.49,
        ps in plane_state(),
    ) {
        let eff = EffectiveConstants::new(e, nu, ps);
        let j = j_from_k(k[0], k[1], k[2], &eff);
        prop_assert!(j >= 0.0);
        for flip in 1..8 {
            let s = |b: usize| if flip & (1 << b) != 0 { -1.0 } else { 1.0 };
            prop_assert_eq!(j_from_k(s(0) * k[0], s(1) * k[1], s(2) * k[2], &eff), j);
        }
    }

    #[test]
    fn secant_modulus_without_hardening_is_elastic(e in 1e9f64..5e11, s in 0.0f64..1e10, n in 1.1f64..20.0) {
        let ro = RambergOsgood { sigma0: 193e6, alpha: 0.0, n };
        prop_assert_eq!(secant_modulus(&ro, e, s), e);
    }

    #[test]
    fn plane_stiffness_is_positive_definite(e in 1e9f64..5e11, nu in -0.99f64..0.499, ps in plane_state()) {
        let d = plane_stiffness(&Material::isotropic(e, nu, ps).unwrap()).unwrap();
        let m = Matrix3::from_fn(|i, j| d[i][j]);
        prop_assert!((m - m.transpose()).abs().max() <= 1e-12 * m.abs().max());
        prop_assert!(m.symmetric_eigenvalues().min() > 0.0);
    }

    #[test]
    fn cubic_plane_stiffness_is_positive_definite(
        c12 in 10e9f64..150e9, d11 in 1e9f64..100e9, c44 in 5e9f64..150e9, ps in plane_state(),
    ) {
        let c11 = c12 + d11;
        let d = plane_stiffness(&Material::cubic(c11, c12, c44, ps).unwrap()).unwrap();
        let m = Matrix3::from_fn(|i, j| d[i][j]);
        prop_assert!(m.symmetric_eigenvalues().min() > 0.0);
    }

    #[test]
    fn hill_average_is_bounded(c12 in 10e9f64..150e9, d11 in 1e9f64..100e9, c44 in 5e9f64..150e9) {
        let v = effective_isotropic_from_cubic(c12 + d11, c12, c44).unwrap();
        prop_assert!(v.g_reuss <= v.g_hill * (1.0 + 1e-14));
        prop_assert!(v.g_hill <= v.g_voigt * (1.0 + 1e-14));
        let eff = v.constants(PlaneState::PlaneStrain);
        prop_assert!((eff.g - eff.e / (2.0 * (1.0 + eff.nu))).abs() <= 1e-12 * eff.g);
    }

    #[test]
    fn synthetic_field_is_linear_in_k(
        k in prop::array::uniform3(-5e6f64..5e6),
        c in -3.0f64..3.0,
        ps in plane_state(),
    ) {
        let a = generate_williams_field(&spec(k, 9, ps));
        let b = generate_williams_field(&spec([c * k[0], c * k[1], c * k[2]], 9, ps));
        let scale = a.u.iter().flat_map(|v| v.iter()).fold(0.0f64, |m, x| m.max(x.abs()));
        for (x, y) in a.u.iter().zip(&b.u) {
            for i in 0..3 {
                prop_assert!((c * x[i] - y[i]).abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE) * c.abs().max(1.0));
            }
        }
    }

    #[test]
    fn mode_symmetries(ki in 1e5f64..1e7, kiii in 1e5f64..1e7, n in (2usize..8).prop_map(|h| 2 * h + 1)) {
        let f = generate_williams_field(&spec([ki, 0.0, kiii], n, PlaneState::PlaneStrain));
        for j in 0..n {
            for i in 0..n {
                // the crack line itself sits on a branch cut
                if j == n / 2 {
                    continue;
                }
                let a = f.u[f.index(i, j)];
                let b = f.u[f.index(i, n - 1 - j)];
                let tol = 1e-12 * (a[0].abs() + a[1].abs() + a[2].abs());
                prop_assert!((a[0] - b[0]).abs() <= tol);
                prop_assert!((a[1] + b[1]).abs() <= tol);
                prop_assert!((a[2] + b[2]).abs() <= tol);
            }
        }
    }

    #[test]
    fn plateau_window_respects_minimum(
        js in prop::collection::vec(1.0f64..2.0, 1..30),
        window_min in 1usize..8,
        skip in 0usize..4,
        rel_tol in 0.0f64..0.2,
    ) {
        let series = ContourSeries {
            rows: js.iter().enumerate().map(|(i, &j)| {
                let mut r = ContourRow::new(i + 1, (i + 1) as f64);
                r.j = j;
                r
            }).collect(),
        };
        let opts = PlateauOptions { window_min, rel_tol, skip, window: None };
        match detect_plateau(&series, &opts) {
            Ok(p) => {
                prop_assert!(p.end_contour - p.start_contour + 1 >= window_min);
                prop_assert!(p.start_contour > skip);
                prop_assert!(p.j.std >= 0.0);
                prop_assert!(p.spread <= rel_tol);
            }
            Err(_) => prop_assert!(js.len() < skip + window_min || rel_tol < 0.2),
        }
        if js.len() < skip + window_min {
            prop_assert!(detect_plateau(&series, &opts).is_err());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn seam_integrity(n in 7usize..16, row in 2usize..5, depth in 2usize..5) {
        let f = DisplacementField::from_fn(n, n, [1.0, 1.0], [0.0, 0.0], false, |_| [0.0; 3]);
        let y = f.coords(0, row.min(n - 3))[1];
        let mouth = f.coords(0, 0)[0];
        let tip_x = f.coords(depth.min(n - 3), 0)[0];
        let m = build_seam_mesh(&f, &CrackDefinition::straight([mouth, y], [tip_x, y])).unwrap();
        prop_assert_eq!(m.node_count() - m.seam_pairs.len(), n * n);
        for &(a, b) in &m.seam_pairs {
            prop_assert_eq!(m.nodes[a], m.nodes[b]);
            prop_assert!(!m.elements.iter().any(|e| e.contains(&a) && e.contains(&b)));
        }
        // away from the seam the connectivity is the crack-free one
        let plain = build_uncracked_mesh(&f).unwrap();
        let dup: Vec<usize> = m.seam_pairs.iter().map(|p| p.1).collect();
        for (e, c) in m.elements.iter().enumerate() {
            if !c.iter().any(|x| dup.contains(x)) {
                prop_assert_eq!(*c, plain.elements[e]);
            }
        }
    }

    #[test]
    fn solver_is_linear_and_ignores_translation(
        f in small_field(), s in -4.0f64..4.0, t in prop::array::uniform2(-1e-6f64..1e-6),
    ) {
        prop_assume!(f.nx >= 4 && f.ny >= 4);
        let mat = Material::isotropic(200e9, 0.3, PlaneState::PlaneStrain).unwrap();
        let c = f.centre;
        let masked = apply_mask(&f, &MaskRegion::centred(c, [0.6 * f.spacing[0], 0.6 * f.spacing[1]])).unwrap().field;
        let base = solve_elastic(&build_uncracked_mesh(&masked).unwrap(), &mat).unwrap();
        let scaled = solve_elastic(&build_uncracked_mesh(&masked.scaled(s)).unwrap(), &mat).unwrap();
        let umax = base.nodal_u.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in base.nodal_u.iter().zip(&scaled.nodal_u) {
            prop_assert!((s * a[0] - b[0]).abs() <= 1e-10 * umax * s.abs().max(1.0));
            prop_assert!((s * a[1] - b[1]).abs() <= 1e-10 * umax * s.abs().max(1.0));
        }
        let emax = base.gp_energy_density.iter().flatten().fold(0.0f64, |m, v| m.max(*v));
        for (a, b) in base.gp_energy_density.iter().zip(&scaled.gp_energy_density) {
            for g in 0..4 {
                prop_assert!(a[g] >= 0.0);
                prop_assert!((s * s * a[g] - b[g]).abs() <= 1e-9 * emax * (s * s).max(1.0));
            }
        }
        let mut moved = masked.clone();
        for v in &mut moved.u {
            v[0] += t[0];
            v[1] += t[1];
        }
        let shifted = solve_elastic(&build_uncracked_mesh(&moved).unwrap(), &mat).unwrap();
        let smax = base.gp_stress.iter().flatten().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in base.gp_stress.iter().zip(&shifted.gp_stress) {
            for g in 0..4 {
                for k in 0..3 {
                    prop_assert!((a[g][k] - b[g][k]).abs() <= 1e-9 * smax);
                }
            }
        }
    }

    #[test]
    fn sparse_solve_matches_dense(f in small_field(), hx in 0.5f64..2.5, hy in 0.5f64..2.5) {
        let mat = Material::isotropic(70e9, 0.33, PlaneState::PlaneStress).unwrap();
        let region = MaskRegion::centred(f.centre, [hx * f.spacing[0], hy * f.spacing[1]]);
        let masked = apply_mask(&f, &region);
        prop_assume!(masked.is_ok());
        let masked = masked.unwrap().field;
        prop_assume!(masked.mask.iter().filter(|m| !**m).count() >= 2);
        let mesh = build_uncracked_mesh(&masked).unwrap();
        let sparse = solve_elastic(&mesh, &mat).unwrap();

        let d = plane_stiffness(&mat).unwrap();
        let geom = mesh_geometry(&mesh).unwrap();
        let ndof = 2 * mesh.node_count();
        let mut k = DMatrix::<f64>::zeros(ndof, ndof);
        for (conn, g) in mesh.elements.iter().zip(&geom) {
            let ke = element_stiffness(g, &[d; 4]);
            for a in 0..8 {
                for b in 0..8 {
                    k[(2 * conn[a / 2] + a % 2, 2 * conn[b / 2] + b % 2)] += ke[a][b];
                }
            }
        }
        let free: Vec<usize> = (0..ndof).filter(|i| !mesh.constrained[i / 2]).collect();
        let fixed: Vec<usize> = (0..ndof).filter(|i| mesh.constrained[i / 2]).collect();
        let mut u = vec![0.0; ndof];
        for &i in &fixed {
            u[i] = mesh.bc_values[i / 2][i % 2];
        }
        if !free.is_empty() {
            let kff = DMatrix::from_fn(free.len(), free.len(), |a, b| k[(free[a], free[b])]);
            let rhs = DVector::from_fn(free.len(), |a, _| -fixed.iter().map(|&j| k[(free[a], j)] * u[j]).sum::<f64>());
            let x = kff.lu().solve(&rhs).unwrap();
            for (a, &i) in free.iter().enumerate() {
                u[i] = x[a];
            }
        }
        let scale = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (n, v) in sparse.nodal_u.iter().enumerate() {
            prop_assert!((v[0] - u[2 * n]).abs() <= 1e-10 * scale);
            prop_assert!((v[1] - u[2 * n + 1]).abs() <= 1e-10 * scale);
        }
    }
}

// Statistical: over many seeds the sample mean stays within three standard errors
// in the expected proportion of cases.
#[test]
fn noise_keeps_the_mean() {
    let f = generate_williams_field(&spec([3e6, 1e6, 0.0], 21, PlaneState::PlaneStrain));
    let n = f.len() as f64;
    let mut inside = 0;
    let mut total = 0;
    for seed in 0..200u64 {
        for (kind, fraction) in [(NoiseKind::Gaussian, 1e-3), (NoiseKind::Uniform, 1e-2)] {
            let g = add_noise(&f, fraction, seed, kind);
            let sigma = fraction * mean_magnitude(&f);
            for c in 0..2 {
                let m0 = f.u.iter().map(|v| v[c]).sum::<f64>() / n;
                let m1 = g.u.iter().map(|v| v[c]).sum::<f64>() / n;
                total += 1;
                if (m1 - m0).abs() <= 3.0 * sigma / n.sqrt() {
                    inside += 1;
                }
            }
        }
    }
    // 99.73 % expected; allow sampling slack
    assert!(inside as f64 >= 0.985 * total as f64, "{inside}/{total}");
}

// Full analyses are expensive; few cases on a coarse reference-like field.
mod fracture {
    use super::*;
    use crackfield::studies::spec_crack;
    use crackfield::{analyze, AnalysisOptions};

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(6))]

        #[test]
        fn plateau_scales_with_displacements(s in 0.1f64..10.0, kii in -2e6f64..2e6) {
            let sp = spec([3e6, kii, 0.0], 25, PlaneState::PlaneStrain);
            let f = generate_williams_field(&sp);
            let mat = Material::isotropic(sp.youngs, sp.poisson, sp.plane_state).unwrap();
            let c = spec_crack(&sp, 2);
            let opts = AnalysisOptions::default();
            let a = analyze(&f, &c, &mat, &opts).unwrap();
            let b = analyze(&f.scaled(s), &c, &mat, &opts).unwrap();
            let (pa, pb) = (a.window_stats().unwrap(), b.window_stats().unwrap());
            prop_assert_eq!(pa.start_contour, pb.start_contour);
            prop_assert!((pb.j.mean - s * s * pa.j.mean).abs() <= 1e-9 * s * s * pa.j.mean);
            let (ka, kb) = (pa.k_i.unwrap().mean, pb.k_i.unwrap().mean);
            prop_assert!((kb - s * ka).abs() <= 1e-9 * s * ka.abs());
        }

        #[test]
        fn mirror_negates_mode_two(kii in 3e5f64..2e6, kiii in prop_oneof![Just(0.0), 1e6f64..5e6]) {
            let sp = spec([3e6, kii, kiii], 25, PlaneState::PlaneStrain);
            let f = generate_williams_field(&sp);
            let mat = Material::isotropic(sp.youngs, sp.poisson, sp.plane_state).unwrap();
            let c = spec_crack(&sp, 2);
            let opts = AnalysisOptions::default();
            let a = analyze(&f, &c, &mat, &opts).unwrap();
            let b = analyze(&mirrored(&f), &c, &mat, &opts).unwrap();
            let (pa, pb) = (a.window_stats().unwrap(), b.window_stats().unwrap());
            let (ia, ib) = (pa.k_i.unwrap().mean, pb.k_i.unwrap().mean);
            prop_assert!((ia - ib).abs() <= 0.01 * ia.abs());
            let (iia, iib) = (pa.k_ii.unwrap().mean, pb.k_ii.unwrap().mean);
            prop_assert!((iia + iib).abs() <= 0.01 * iia.abs().max(0.1 * ia.abs()));
            prop_assert!(ia > 0.0);
            if kiii > 0.0 {
                let (a3, b3) = (pa.k_iii.unwrap().mean, pb.k_iii.unwrap().mean);
                prop_assert!((a3 + b3).abs() <= 0.01 * a3.abs());
            }
        }

        #[test]
        fn rotated_problem_gives_the_same_series(rot in 1u32..4, kii in -2e6f64..2e6) {
            let sp = spec([3e6, kii, 0.0], 25, PlaneState::PlaneStrain);
            let f = generate_williams_field(&sp);
            let mat = Material::isotropic(sp.youngs, sp.poisson, sp.plane_state).unwrap();
            let c = spec_crack(&sp, 0);
            let opts = AnalysisOptions::default();
            let a = analyze(&f, &c, &mat, &opts).unwrap();

            let phi = rot as f64 * std::f64::consts::FRAC_PI_2;
            let (sn, cs) = phi.sin_cos();
            let turn = |p: [f64; 2]| [cs * p[0] - sn * p[1], sn * p[0] + cs * p[1]];
            let rc = CrackDefinition::straight(turn(c.mouth()), turn(c.tip()));
            let b = analyze(&transform_field(&f, rot, None).unwrap(), &rc, &mat, &opts).unwrap();
            prop_assert_eq!(a.series.len(), b.series.len());
            let jmax = a.series.rows.iter().fold(0.0f64, |m, r| m.max(r.j.abs()));
            for (x, y) in a.series.rows.iter().zip(&b.series.rows) {
                prop_assert!((x.j - y.j).abs() <= 0.01 * jmax);
                prop_assert!((x.k_i.unwrap() - y.k_i.unwrap()).abs() <= 0.01 * 3e6);
            }
        }
    }
}
