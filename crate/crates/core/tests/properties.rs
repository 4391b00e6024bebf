use std::collections::HashSet;

use approx::assert_relative_eq;
use nalgebra::DMatrix;
use num_complex::Complex64;
use polylie::algebra::{
    build_sector_ops, casimir_residual, commutation_residuals, enumerate_sectors, psi_scale, sector_of_fock,
    ModelParams, Sector,
};
use polylie::fock::{build_cluster_ops, build_fock, oracle_sector_ops, Modes};
use polylie::linalg::{max_abs, CMatrix, CVector};
use polylie::quasiclassical::{
    bloch_energy, bloch_energy_gradient, bloch_rhs, build_hp, energy_cmf, energy_cq, gcs_state, orbit_point,
    BlochState, GcsParams, HpVariant,
};
use polylie::spectra::{diagonalize_sector, evolve, recurrence_residual};
use polylie::tridiag::symmetric_tridiagonal_eigen;
use proptest::prelude::*;

fn model() -> impl Strategy<Value = (u32, u32)> {
    prop::sample::select(vec![(1u32, 1u32), (1, 2), (2, 1), (2, 3), (1, 3), (3, 2)])
}

fn coupling() -> impl Strategy<Value = Complex64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex64::new(re, im))
}

fn params(m: u32, n: u32, w0: f64, w1: f64, g: Complex64) -> ModelParams {
    ModelParams::new(m, n, w0, w1, g).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn chains_partition_the_fock_basis((m, n) in model(), nmax in 0u32..14) {
        let p = params(m, n, 1.0, 1.0, Complex64::new(0.5, 0.0));
        let fock = build_fock(nmax, Modes::Two).unwrap();
        let mut seen = HashSet::new();
        for sector in enumerate_sectors(&p, nmax, None).unwrap() {
            for v in 0..sector.levels() {
                let (n0, n1) = sector.chain_state(&p, v);
                if let Some(idx) = fock.index_of(n0, n1) {
                    prop_assert!(seen.insert(idx), "state visited twice");
                }
            }
        }
        prop_assert_eq!(seen.len(), fock.dim());
    }

    #[test]
    fn sector_lookup_inverts_chain_states((m, n) in model(), n0 in 0u32..20, n1 in 0u32..20) {
        let p = params(m, n, 1.0, 1.0, Complex64::new(0.5, 0.0));
        let (sector, v) = sector_of_fock(&p, n0, n1, None).unwrap();
        prop_assert_eq!(sector.chain_state(&p, v), (n0 as i64, n1 as i64));
        prop_assert!(v < sector.levels());
    }

    #[test]
    fn algebra_matches_fock_oracle((m, n) in model(), kappa_seed in 0u32..3, s in 0u32..9, g in coupling(),
                                   w0 in 0.1f64..2.0, w1 in 0.1f64..2.0) {
        let p = params(m, n, w0, w1, g);
        let kappa = kappa_seed % n;
        let sector = Sector::new(&p, kappa, s, None).unwrap();
        let fock = build_fock(30, Modes::Two).unwrap();
        let cluster = build_cluster_ops(&fock, &p).unwrap();
        let ops = build_sector_ops(&sector, &p, None).unwrap();
        let reference = oracle_sector_ops(&cluster, &fock, &sector).unwrap();
        let scale = psi_scale(&sector, &p, ops.dim);
        prop_assert!(max_abs(&(&ops.h - &reference.h)) < 1e-10 * scale);
        prop_assert!(max_abs(&(&ops.vplus - &reference.vplus)) < 1e-10 * scale);
    }

    #[test]
    fn closed_algebra_identities((m, n) in model(), s in 0u32..16, g in coupling()) {
        let p = params(m, n, 0.9, 1.2, g);
        let sector = Sector::new(&p, 0, s, None).unwrap();
        let ops = build_sector_ops(&sector, &p, None).unwrap();
        let scale = psi_scale(&sector, &p, ops.dim);
        prop_assert!(commutation_residuals(&ops, &p).max() < 1e-9 * scale);
        prop_assert!(casimir_residual(&ops, &sector, &p) < 1e-10 * scale);
    }

    #[test]
    fn spectrum_matches_dense_hermitian_solver((m, n) in model(), s in 0u32..14, g in coupling(),
                                               w0 in -2.0f64..2.0, w1 in -2.0f64..2.0) {
        let p = params(m, n, w0, w1, g);
        let sector = Sector::new(&p, 0, s, None).unwrap();
        let ops = build_sector_ops(&sector, &p, None).unwrap();
        let res = diagonalize_sector(&ops).unwrap();
        let mut reference: Vec<f64> = ops.h.clone().symmetric_eigenvalues().iter().cloned().collect();
        reference.sort_by(f64::total_cmp);
        for (a, b) in res.eigenvalues.iter().zip(&reference) {
            prop_assert!((a - b).abs() < 1e-10 * res.h_norm.max(1.0));
        }
        prop_assert!(res.eigen_residual(&ops.h) < 1e-10 * res.h_norm.max(1.0));
        prop_assert!(res.orthonormality_residual() < 1e-12);
        prop_assert!(recurrence_residual(&res, &sector, &p) < 1e-9 * res.h_norm.max(1.0));
    }

    #[test]
    fn coupling_phase_leaves_spectrum_invariant((m, n) in model(), s in 0u32..12, r in 0.05f64..1.0,
                                                phase in -3.1f64..3.1) {
        let base = params(m, n, 0.8, 1.1, Complex64::new(r, 0.0));
        let turned = base.with_g(Complex64::from_polar(r, phase));
        let sector = Sector::new(&base, 0, s, None).unwrap();
        let e0 = diagonalize_sector(&build_sector_ops(&sector, &base, None).unwrap()).unwrap().eigenvalues;
        let e1 = diagonalize_sector(&build_sector_ops(&sector, &turned, None).unwrap()).unwrap().eigenvalues;
        for (a, b) in e0.iter().zip(&e1) {
            prop_assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn evolution_is_unitary((m, n) in model(), s in 0u32..12, g in coupling(), t in 0.0f64..30.0) {
        let p = params(m, n, 0.7, 1.3, g);
        let sector = Sector::new(&p, 0, s, None).unwrap();
        let ops = build_sector_ops(&sector, &p, None).unwrap();
        let res = diagonalize_sector(&ops).unwrap();
        let d = res.dim();
        let u = res.propagator(t);
        prop_assert!(max_abs(&(u.adjoint() * &u - CMatrix::identity(d, d))) < 1e-9);
        let raw = CVector::from_fn(d, |v, _| Complex64::new(1.0 + v as f64, 0.5 - v as f64));
        let psi0 = raw.unscale(raw.norm());
        let ev = evolve(&ops, &res, &psi0, &[t]).unwrap();
        prop_assert!((ev.states[0].norm() - 1.0).abs() < 1e-12);
        // energy is conserved
        let e0 = polylie::linalg::expectation(&ops.h, &psi0).re;
        prop_assert!((ev.energy[0] - e0).abs() < 1e-10 * (1.0 + e0.abs()));
    }

    #[test]
    fn tridiagonal_solver_agrees_with_dense(diag in prop::collection::vec(-5.0f64..5.0, 1..30),
                                            seed in prop::collection::vec(-2.0f64..2.0, 29)) {
        let n = diag.len();
        let off = &seed[..n - 1];
        let eig = symmetric_tridiagonal_eigen(&diag, off).unwrap();
        let t = DMatrix::from_fn(n, n, |i, j| match (i as i64 - j as i64).abs() {
            0 => diag[i],
            1 => off[i.min(j)],
            _ => 0.0,
        });
        let mut reference: Vec<f64> = t.clone().symmetric_eigenvalues().iter().cloned().collect();
        reference.sort_by(f64::total_cmp);
        for (a, b) in eig.values.iter().zip(&reference) {
            prop_assert!((a - b).abs() < 1e-11);
        }
        let gram = eig.vectors.transpose() * &eig.vectors;
        prop_assert!((gram - DMatrix::<f64>::identity(n, n)).amax() < 1e-12);
    }

    #[test]
    fn coherent_states_are_normalized_and_bounded((m, n) in model(), s in 1u32..10, r in 0.0f64..1.5,
                                                  theta in -3.1f64..3.1, g in coupling()) {
        let p = params(m, n, 0.6, 1.4, g);
        let sector = Sector::new(&p, 0, s, None).unwrap();
        let hp = build_hp(&sector, &p, HpVariant::Su2, None).unwrap();
        let e_min = diagonalize_sector(&hp.ops).unwrap().ground_energy();
        for v in 0..hp.dim() {
            let st = gcs_state(&hp, v, GcsParams::new(r, theta).xi()).unwrap();
            prop_assert!((st.norm() - 1.0).abs() < 1e-12);
            let e = energy_cq(&hp, v, GcsParams::new(r, theta)).unwrap().value;
            prop_assert!(e >= e_min - 1e-10);
        }
    }

    #[test]
    fn linear_case_mean_field_is_exact(s in 1u32..10, r in 0.0f64..1.5, theta in -3.1f64..3.1, g in coupling(),
                                       w0 in 0.2f64..2.0, w1 in 0.2f64..2.0) {
        let p = params(1, 1, w0, w1, g);
        let sector = Sector::new(&p, 0, s, None).unwrap();
        let hp = build_hp(&sector, &p, HpVariant::Su2, None).unwrap();
        let gp = GcsParams::new(r, theta);
        for v in 0..hp.dim() {
            let cq = energy_cq(&hp, v, gp).unwrap().value;
            let mf = energy_cmf(&hp, v, gp).unwrap();
            prop_assert!((cq - mf).abs() < 1e-9);
        }
    }

    #[test]
    fn orbit_parametrization_is_consistent((m, n) in model(), s in 1u32..10, r in 0.0f64..1.5,
                                           theta in -3.1f64..3.1, g in coupling()) {
        let p = params(m, n, 0.6, 1.4, g);
        let sector = Sector::new(&p, 0, s, None).unwrap();
        let hp = build_hp(&sector, &p, HpVariant::Su2, None).unwrap();
        let gp = GcsParams::new(r, theta);
        for v in 0..hp.dim() {
            let numeric = BlochState::from_gcs(&hp, v, gp).unwrap();
            let closed = orbit_point(&hp, v, gp);
            for k in 0..3 {
                prop_assert!((numeric.y[k] - closed[k]).abs() < 1e-9);
            }
            if let Ok(mf) = energy_cmf(&hp, v, gp) {
                let h = bloch_energy(&BlochState::new(closed, HpVariant::Su2), &hp).unwrap();
                prop_assert!((mf - h).abs() < 1e-9 * (1.0 + mf.abs()));
            }
        }
    }

    #[test]
    fn bloch_flow_is_tangent_to_invariants((m, n) in model(), s in 1u32..10, g in coupling(),
                                           y1 in -1.0f64..1.0, y2 in -1.0f64..1.0, frac in -0.9f64..0.9) {
        let p = params(m, n, 0.6, 1.4, g);
        let sector = Sector::new(&p, 0, s, None).unwrap();
        let hp = build_hp(&sector, &p, HpVariant::Su2, None).unwrap();
        let st = BlochState::new([y1, y2, frac * hp.j], HpVariant::Su2);
        // the flow lives where Phi is nonnegative around y0
        prop_assume!(hp.dim() >= 2);
        prop_assume!([-1e-6, 0.0, 1e-6].iter().all(|h| hp.phi_fn.eval(st.y[2] + h) >= 0.0));
        let rhs = bloch_rhs(&st, &hp).unwrap();
        let gc = [2.0 * st.y[0], 2.0 * st.y[1], 2.0 * st.y[2]];
        let gh = bloch_energy_gradient(&st, &hp).unwrap();
        let dot = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        let size = 1.0 + gh.iter().map(|x| x.abs()).sum::<f64>();
        prop_assert!(dot(gc, rhs).abs() < 1e-12 * size * size);
        prop_assert!(dot(gh, rhs).abs() < 1e-10 * size * size);
    }
}

#[test]
fn su11_coherent_state_matches_closed_form() {
    let p = params(0, 2, 1.0, 1.0, Complex64::new(0.1, 0.0));
    let sector = Sector::new(&p, 1, 0, Some(300)).unwrap();
    let hp = build_hp(&sector, &p, HpVariant::Su11, Some(0.75)).unwrap();
    for (v, r, theta) in [(0usize, 0.4, 0.3), (2, 0.7, -1.2), (5, 0.2, 2.0)] {
        let gp = GcsParams::new(r, theta);
        let numeric = BlochState::from_gcs(&hp, v, gp).unwrap();
        let closed = orbit_point(&hp, v, gp);
        for k in 0..3 {
            assert_relative_eq!(numeric.y[k], closed[k], epsilon = 1e-9);
        }
        // orbit invariant: -y0^2 + |y_perp|^2 = -(v + J)^2
        assert_relative_eq!(numeric.casimir(), -(v as f64 + 0.75).powi(2), epsilon = 1e-8);
    }
}
