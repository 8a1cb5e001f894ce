use karcher_core::complex::{binom, Complex, DiscreteMetric};
use karcher_core::dec::{self, BoundaryCondition, Cochain, ConstantCovector, Pm1Form};
use karcher_core::linalg;
use karcher_core::meshes;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn icosahedron() -> (Complex, DiscreteMetric) {
    let c = meshes::icosahedron().complex().unwrap();
    let m = DiscreteMetric::new(&c, vec![1.0; c.count(1)]).unwrap();
    (c, m)
}

fn test_complexes() -> Vec<(Complex, DiscreteMetric)> {
    let mut out = vec![icosahedron()];
    let oct = meshes::octahedron();
    let c = oct.complex().unwrap();
    let m = DiscreteMetric::from_coordinates(&c, &oct.coords);
    out.push((c, m));
    let patch = meshes::equilateral_patch(4, 3);
    let c = patch.complex().unwrap();
    let m = DiscreteMetric::from_coordinates(&c, &patch.coords);
    out.push((c, m));
    let tet = Complex::new(vec![vec![0, 1, 2, 3]]).unwrap();
    let m = DiscreteMetric::new(&tet, vec![1.0; 6]).unwrap();
    out.push((tet, m));
    out
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
}

#[test]
fn d_squared_vanishes() {
    for (c, m) in test_complexes() {
        let (_, ops) = dec::operators_for(&c, &m).unwrap();
        for k in 0..ops.n.saturating_sub(1) {
            let dd = linalg::to_dense(&ops.d[k + 1]) * linalg::to_dense(&ops.d[k]);
            assert!(dd.amax() <= 1e-13);
            let udud = linalg::to_dense(&ops.ud[k + 1]) * linalg::to_dense(&ops.ud[k]);
            assert!(udud.amax() <= 1e-13);
        }
    }
}

#[test]
fn greens_formula_on_icosahedron() {
    let (c, m) = icosahedron();
    let (_, ops) = dec::operators_for(&c, &m).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for k in 0..2 {
        for _ in 0..20 {
            let a = Pm1Form {
                degree: k,
                coeffs: random_vec(&mut rng, ops.counts[k]),
            };
            let b = Pm1Form {
                degree: k + 1,
                coeffs: random_vec(&mut rng, ops.counts[k + 1]),
            };
            let lhs = ops.inner_pm1(&ops.apply_ud(&a).unwrap(), &b);
            let rhs = ops.inner_pm1(&a, &ops.apply_udelta(&b).unwrap());
            assert!((lhs - rhs).abs() <= 1e-12, "k={k}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn codifferential_is_the_weighted_transpose() {
    for (c, m) in test_complexes() {
        let (_, ops) = dec::operators_for(&c, &m).unwrap();
        for k in 0..ops.n {
            let wk = DMatrix::from_diagonal(&ops.form_weights[k]);
            let wk1 = DMatrix::from_diagonal(&ops.form_weights[k + 1]);
            let expected =
                wk.try_inverse().unwrap() * linalg::to_dense(&ops.ud[k]).transpose() * wk1;
            assert!((linalg::to_dense(&ops.udelta[k]) - expected).amax() <= 1e-13);
        }
    }
}

#[test]
fn cochain_map_is_an_isometry_and_commutes_with_d() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (c, m) in test_complexes() {
        let (_, ops) = dec::operators_for(&c, &m).unwrap();
        for k in 0..=ops.n {
            for _ in 0..100 {
                let a = Cochain {
                    degree: k,
                    coeffs: random_vec(&mut rng, ops.counts[k]),
                };
                let b = Cochain {
                    degree: k,
                    coeffs: random_vec(&mut rng, ops.counts[k]),
                };
                let ia = dec::cochain_to_pm1(&a, &ops);
                let ib = dec::cochain_to_pm1(&b, &ops);
                let lhs = ops.inner_pm1(&ia, &ib);
                let rhs = ops.inner_cochain(&a, &b);
                assert!(
                    (lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()),
                    "k={k}: {lhs} vs {rhs}"
                );
                assert!((dec::pm1_to_cochain(&ia, &ops).coeffs - &a.coeffs).amax() <= 1e-14);
            }
            let a = Cochain {
                degree: k,
                coeffs: random_vec(&mut rng, ops.counts[k]),
            };
            if k < ops.n {
                let left = dec::cochain_to_pm1(&ops.apply_d(&a).unwrap(), &ops);
                let right = ops.apply_ud(&dec::cochain_to_pm1(&a, &ops)).unwrap();
                assert!((left.coeffs - right.coeffs).amax() <= 1e-12);
            }
            if k > 0 {
                let left = dec::cochain_to_pm1(&ops.apply_delta(&a).unwrap(), &ops);
                let right = ops.apply_udelta(&dec::cochain_to_pm1(&a, &ops)).unwrap();
                assert!((left.coeffs - right.coeffs).amax() <= 1e-12);
            }
        }
    }
}

#[test]
fn volume_identity_holds() {
    for (c, m) in test_complexes() {
        let (dv, _) = dec::operators_for(&c, &m).unwrap();
        let n = c.n();
        for k in 0..=n {
            for i in 0..c.count(k) {
                let lhs = dv.primal[k][i] * dv.dual[k][i];
                let rhs = binom(n, k) * dv.neighbourhood[k][i];
                assert!((lhs - rhs).abs() <= 1e-10, "k={k} i={i}: {lhs} vs {rhs}");
            }
        }
    }
}

#[test]
fn boundary_ranks_on_a_single_simplex() {
    for n in 1..=4 {
        let c = Complex::new(vec![(0..=n).collect()]).unwrap();
        for k in 1..=n {
            let rank = linalg::numerical_rank(&c.boundary_matrix(k).to_dense(), 1e-12);
            assert_eq!(rank as f64, binom(n, k), "n={n} k={k}");
        }
    }
}

#[test]
fn stokes_on_every_octahedron_triangle() {
    let oct = meshes::octahedron();
    let c = oct.complex().unwrap();
    let m = DiscreteMetric::from_coordinates(&c, &oct.coords);
    let (_, ops) = dec::operators_for(&c, &m).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let alpha = Pm1Form {
        degree: 1,
        coeffs: random_vec(&mut rng, ops.counts[1]),
    };
    for s in 0..c.count(2) {
        let (lhs, rhs) = dec::stokes_check(&c, &ops, &alpha, s).unwrap();
        assert!((lhs - rhs).abs() <= 1e-12);
    }
}

/// Edge coefficients of the projected `dx` on a unit equilateral lattice.
#[test]
fn projected_dx_has_coefficients_two_one_one() {
    let patch = meshes::equilateral_patch(4, 4);
    let c = patch.complex().unwrap();
    let m = DiscreteMetric::from_coordinates(&c, &patch.coords);
    let (dv, ops) = dec::operators_for(&c, &m).unwrap();
    let p =
        dec::project_to_pm1(&ConstantCovector(vec![1.0, 0.0]), &c, &patch.coords, &dv, 4).unwrap();
    for (t, key) in c.simplices(1).iter().enumerate() {
        let dx = patch.coords[key[1]][0] - patch.coords[key[0]][0];
        // dx of the unit edge vector is ±1 for axis-parallel edges and ±½ otherwise
        assert!(
            (p.form.coeffs[t] - 2.0 * dx).abs() <= 1e-12,
            "edge {key:?}: {}",
            p.form.coeffs[t]
        );
    }
    let dp = ops.apply_ud(&p.form).unwrap();
    assert!(dp.coeffs.amax() <= 1e-12);
    for e in 0..c.count(2) {
        let area = 3f64.sqrt() / 4.0;
        let energy = dec::form_energy(&ops, &p.form, &[e]);
        assert!((energy / area - 2.0).abs() <= 1e-10);
    }
}

/// The Dirichlet problem with boundary values of `x` reproduces `x`; its
/// discrete gradient is half the projected `dx`, so the per-triangle energy
/// is a quarter of the projection's.
#[test]
fn dirichlet_problem_reproduces_linear_data() {
    let patch = meshes::equilateral_patch(5, 4);
    let c = patch.complex().unwrap();
    let m = DiscreteMetric::from_coordinates(&c, &patch.coords);
    let (_, ops) = dec::operators_for(&c, &m).unwrap();
    let boundary = c.boundary_vertices();
    let fixed: Vec<(usize, f64)> = (0..c.count(0))
        .filter(|&v| boundary[v])
        .map(|v| (v, patch.coords[v][0]))
        .collect();
    let f = Pm1Form {
        degree: 0,
        coeffs: DVector::zeros(c.count(0)),
    };
    let u = dec::poisson_pm1(&ops, &f, &BoundaryCondition::Dirichlet(fixed)).unwrap();
    for v in 0..c.count(0) {
        assert!((u.coeffs[v] - patch.coords[v][0]).abs() <= 1e-12);
    }
    let area = 3f64.sqrt() / 4.0;
    for e in 0..c.count(2) {
        let energy = dec::dirichlet_energy_pm1(&ops, &u, &[e]).unwrap();
        assert!((energy / area - 0.5).abs() <= 1e-10, "{}", energy / area);
    }
}

#[test]
fn hodge_of_an_exact_form() {
    let (c, m) = icosahedron();
    let (_, ops) = dec::operators_for(&c, &m).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a = Pm1Form {
        degree: 0,
        coeffs: random_vec(&mut rng, ops.counts[0]),
    };
    let u = ops.apply_ud(&a).unwrap();
    let parts = dec::hodge_pm1(&ops, &u).unwrap();
    assert!((parts.exact.coeffs - &u.coeffs).amax() <= 1e-9);
    assert!(parts.coexact.coeffs.amax() <= 1e-9);
    assert!(parts.harmonic.coeffs.amax() <= 1e-9);
    // potential agrees up to a constant
    let shift = &parts.a.coeffs - &a.coeffs;
    assert!((shift.add_scalar(-shift.mean())).amax() <= 1e-9);
}

#[test]
fn harmonic_dimensions_match_betti_numbers() {
    let torus = meshes::torus_lattice(4).complex().unwrap();
    let m = DiscreteMetric::new(&torus, vec![1.0; torus.count(1)]).unwrap();
    let (_, ops) = dec::operators_for(&torus, &m).unwrap();
    assert_eq!(ops.harmonic_dimension(0), 1);
    assert_eq!(ops.harmonic_dimension(1), 2);
    assert_eq!(ops.harmonic_dimension(2), 1);

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let u = Pm1Form {
        degree: 1,
        coeffs: random_vec(&mut rng, ops.counts[1]),
    };
    let parts = dec::hodge_pm1(&ops, &u).unwrap();
    assert!(parts.reassembly_residual <= 1e-9);
    assert!(
        parts.orthogonality_residual <= 1e-9,
        "{} {} {}",
        parts.orthogonality_residual,
        parts.reassembly_residual,
        parts.harmonic_residual
    );
    assert!(parts.harmonic_residual <= 1e-9);
    assert!(parts.harmonic.coeffs.norm() > 1e-3);

    let (c, m) = icosahedron();
    let (_, ops) = dec::operators_for(&c, &m).unwrap();
    assert_eq!(ops.harmonic_dimension(1), 0);
    let u = Pm1Form {
        degree: 1,
        coeffs: random_vec(&mut rng, ops.counts[1]),
    };
    let parts = dec::hodge_pm1(&ops, &u).unwrap();
    assert!(parts.harmonic.coeffs.amax() <= 1e-9);
}

#[test]
fn degree_zero_laplacian_kernel_is_constants() {
    let (c, m) = icosahedron();
    let (_, ops) = dec::operators_for(&c, &m).unwrap();
    let l = linalg::to_dense(&ops.laplacian_degree0());
    assert!((&l - l.transpose()).amax() <= 1e-14);
    let eig = l.clone().symmetric_eigen().eigenvalues;
    let mut ev: Vec<f64> = eig.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    assert!(ev[0].abs() <= 1e-12);
    assert!(ev[1] > 1e-3);
    let ones = DVector::from_element(c.count(0), 1.0);
    assert!((l * ones).amax() <= 1e-13);
}
