use karcher_core::complex::{binom, DiscreteMetric};
use karcher_core::dec::{self, Cochain, Pm1Form};
use karcher_core::linalg;
use karcher_core::meshes;
use nalgebra::DVector;
use proptest::prelude::*;

fn perturbed_icosahedron(
    jitter: &[f64],
) -> Option<(
    karcher_core::complex::Complex,
    dec::DecOperators,
    karcher_core::complex::DualVolumes,
)> {
    let c = meshes::icosahedron().complex().unwrap();
    let lengths = jitter.iter().map(|j| 1.0 + j).collect();
    let m = DiscreteMetric::new(&c, lengths).ok()?;
    let (dv, ops) = dec::operators_for(&c, &m).ok()?;
    Some((c, ops, dv))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn greens_formula_is_exact(
        jitter in prop::collection::vec(-0.08f64..0.08, 30),
        a in prop::collection::vec(-1.0f64..1.0, 30),
        b in prop::collection::vec(-1.0f64..1.0, 20),
    ) {
        let Some((_, ops, _)) = perturbed_icosahedron(&jitter) else { return Ok(()); };
        let a = Pm1Form { degree: 1, coeffs: DVector::from_vec(a) };
        let b = Pm1Form { degree: 2, coeffs: DVector::from_vec(b) };
        let lhs = ops.inner_pm1(&ops.apply_ud(&a).unwrap(), &b);
        let rhs = ops.inner_pm1(&a, &ops.apply_udelta(&b).unwrap());
        prop_assert!((lhs - rhs).abs() <= 1e-12);
    }

    #[test]
    fn cochain_map_is_isometric(
        jitter in prop::collection::vec(-0.08f64..0.08, 30),
        a in prop::collection::vec(-1.0f64..1.0, 12),
        b in prop::collection::vec(-1.0f64..1.0, 12),
    ) {
        let Some((_, ops, _)) = perturbed_icosahedron(&jitter) else { return Ok(()); };
        let a = Cochain { degree: 0, coeffs: DVector::from_vec(a) };
        let b = Cochain { degree: 0, coeffs: DVector::from_vec(b) };
        let lhs = ops.inner_pm1(&dec::cochain_to_pm1(&a, &ops), &dec::cochain_to_pm1(&b, &ops));
        prop_assert!((lhs - ops.inner_cochain(&a, &b)).abs() <= 1e-12);
        let da = ops.apply_d(&a).unwrap();
        let db = ops.apply_d(&b).unwrap();
        let lhs = ops.inner_pm1(&dec::cochain_to_pm1(&da, &ops), &dec::cochain_to_pm1(&db, &ops));
        prop_assert!((lhs - ops.inner_cochain(&da, &db)).abs() <= 1e-12);
    }

    #[test]
    fn volume_identity_and_d_squared(jitter in prop::collection::vec(-0.08f64..0.08, 30)) {
        let Some((c, ops, dv)) = perturbed_icosahedron(&jitter) else { return Ok(()); };
        for k in 0..=2 {
            for i in 0..c.count(k) {
                let lhs = dv.primal[k][i] * dv.dual[k][i];
                prop_assert!((lhs - binom(2, k) * dv.neighbourhood[k][i]).abs() <= 1e-10);
            }
        }
        let dd = linalg::to_dense(&ops.ud[1]) * linalg::to_dense(&ops.ud[0]);
        prop_assert!(dd.amax() <= 1e-13);
    }

    #[test]
    fn laplacian_is_positive_semidefinite(
        jitter in prop::collection::vec(-0.08f64..0.08, 30),
        u in prop::collection::vec(-1.0f64..1.0, 30),
    ) {
        let Some((_, ops, _)) = perturbed_icosahedron(&jitter) else { return Ok(()); };
        let u = DVector::from_vec(u);
        let l = ops.hodge_laplacian_dense(1);
        let w = &ops.form_weights[1];
        let lu = &l * &u;
        // ⟨Lu, u⟩ ≥ 0 and ⟨Lu, v⟩ = ⟨u, Lv⟩ in the weighted inner product
        prop_assert!(lu.component_mul(&u).dot(w) >= -1e-12);
        let v = DVector::from_fn(30, |i, _| (i as f64).cos());
        let lv = &l * &v;
        prop_assert!((lu.component_mul(&v).dot(w) - lv.component_mul(&u).dot(w)).abs() <= 1e-10);
    }
}
