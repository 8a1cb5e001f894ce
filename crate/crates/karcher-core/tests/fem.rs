use karcher_core::complex::{Complex, DiscreteMetric};
use karcher_core::dec::{self, BoundaryCondition};
use karcher_core::fem::{self, Rhs};
use karcher_core::karcher::SolverParams;
use karcher_core::linalg;
use karcher_core::manifold::{ManifoldPoint, ManifoldTag};
use karcher_core::meshes::{self, Mesh};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn planar(mesh: &Mesh) -> (Complex, DiscreteMetric, fem::P1System) {
    let c = mesh.complex().unwrap();
    let m = DiscreteMetric::from_coordinates(&c, &mesh.coords);
    let sys = fem::assemble(&c, &m).unwrap();
    (c, m, sys)
}

fn jittered_patch(rng: &mut ChaCha8Rng) -> Mesh {
    let mut mesh = meshes::equilateral_patch(5, 4);
    for p in &mut mesh.coords {
        p[0] += rng.gen_range(-0.08..0.08);
        p[1] += rng.gen_range(-0.08..0.08);
    }
    mesh
}

#[test]
fn row_sums_and_symmetry() {
    let (c, _, sys) = planar(&meshes::square_grid(5));
    let k = linalg::to_dense(&sys.stiffness);
    let m = linalg::to_dense(&sys.mass);
    assert!((&k - k.transpose()).amax() <= 1e-14);
    assert!((&m - m.transpose()).amax() <= 1e-14);
    assert!(linalg::row_sums(&sys.stiffness).amax() <= 1e-10);
    let mut expected = vec![0.0; c.count(0)];
    for (e, el) in c.elements().iter().enumerate() {
        for &v in el {
            expected[v] += sys.volumes[e] / 3.0;
        }
    }
    for (got, want) in linalg::row_sums(&sys.mass).iter().zip(&expected) {
        assert!((got - want).abs() <= 1e-10);
    }
}

#[test]
fn galerkin_reproduces_discrete_functions() {
    let (c, _, sys) = planar(&meshes::square_grid(6));
    let u = DVector::from_fn(c.count(0), |i, _| (i as f64 * 0.37).sin());
    let load = linalg::spmv(&sys.stiffness, &u);
    let bd = c.boundary_vertices();
    let fixed: Vec<(usize, f64)> = (0..c.count(0))
        .filter(|&v| bd[v])
        .map(|v| (v, u[v]))
        .collect();
    let uh = fem::poisson_p1(&sys, &Rhs::Load(load), &BoundaryCondition::Dirichlet(fixed)).unwrap();
    assert!((uh - u).amax() <= 1e-10);
}

#[test]
fn closed_problem_rejects_incompatible_data() {
    let mesh = meshes::icosphere(1);
    let (_, _, sys) = planar(&mesh);
    let f = Rhs::Samples(DVector::from_element(mesh.coords.len(), 1.0));
    assert!(matches!(
        fem::poisson_p1(&sys, &f, &BoundaryCondition::ZeroMean),
        Err(fem::FemError::Incompatible(_))
    ));
}

#[test]
fn scaled_metric_changes_solution_proportionally() {
    let mesh = meshes::icosphere(2);
    let c = mesh.complex().unwrap();
    let m1 = DiscreteMetric::from_coordinates(&c, &mesh.coords);
    let m2 = m1.scaled(1.0 + 1e-4);
    let s1 = fem::assemble(&c, &m1).unwrap();
    let s2 = fem::assemble(&c, &m2).unwrap();
    let f = Rhs::Samples(DVector::from_iterator(
        mesh.coords.len(),
        mesh.coords.iter().map(|p| p[2]),
    ));
    let same = fem::compare_metrics(&s1, &s1, &f, &f, &BoundaryCondition::ZeroMean).unwrap();
    assert_eq!(same.l2, 0.0);
    let cmp = fem::compare_metrics(&s1, &s2, &f, &f, &BoundaryCondition::ZeroMean).unwrap();
    let rel = cmp.l2 / fem::quadratic_norm(&s2.mass, &cmp.u2);
    // in 2D the stiffness is scale invariant and the mass grows by (1+ε)²
    assert!((rel - 2e-4).abs() <= 2e-6, "{rel}");
}

#[test]
fn heat_flow_conserves_mean_and_dissipates() {
    let mesh = meshes::icosphere(2);
    let (c, _, sys) = planar(&mesh);
    let u0 = DVector::from_iterator(c.count(0), mesh.coords.iter().map(|p| p[0] + p[1] * p[2]));
    let t = fem::heat_flow(&sys, &u0, &DVector::zeros(c.count(0)), 0.05, 20).unwrap();
    let ones = DVector::from_element(c.count(0), 1.0);
    let mean = |u: &DVector<f64>| linalg::spmv(&sys.mass, u).dot(&ones);
    for w in t.states.windows(2) {
        assert!((mean(&w[1]) - mean(&w[0])).abs() <= 1e-12);
    }
    for w in t.energies.windows(2) {
        assert!(w[1] < w[0] - 1e-12);
    }
}

#[test]
fn cotan_weights_match_the_edge_length_stiffness() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let mesh = jittered_patch(&mut rng);
        let (c, m, sys) = planar(&mesh);
        let k = linalg::to_dense(&sys.stiffness);
        for (e, key) in c.simplices(1).iter().enumerate() {
            let mut w = 0.0;
            for (el, verts) in c.simplices(2).iter().enumerate() {
                if verts.contains(&key[0]) && verts.contains(&key[1]) {
                    let l = m.element_lengths(&c, el);
                    let a = verts.iter().position(|v| *v == key[0]).unwrap();
                    let b = verts.iter().position(|v| *v == key[1]).unwrap();
                    w += karcher_core::simplex::cotan_weight(&l, a, b).unwrap();
                }
            }
            assert!((k[(key[0], key[1])] + 0.5 * w).abs() <= 1e-10, "edge {e}");
        }
    }
}

/// The piecewise-constant degree-0 stiffness carries the factor
/// `1/binom(n,1)` of the neighbourhood volumes `|U(e)| = |e||*e|/n`.
#[test]
fn pm1_stiffness_is_half_the_cotan_stiffness_in_2d() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..10 {
        let mesh = jittered_patch(&mut rng);
        let (c, m, sys) = planar(&mesh);
        let (_, ops) = dec::operators_for(&c, &m).unwrap();
        let pm1 = linalg::to_dense(&ops.laplacian_degree0());
        let p1 = linalg::to_dense(&sys.stiffness);
        assert!(
            (&pm1 - &p1 * 0.5).amax() <= 1e-10,
            "{}",
            (pm1.component_div(&p1.map(|x| if x == 0.0 { 1.0 } else { x })))
        );
    }
}

fn lift(mesh: &Mesh) -> (ManifoldTag, Vec<ManifoldPoint>) {
    let tag = ManifoldTag::euclidean(3);
    let pts = mesh
        .coords
        .iter()
        .map(|p| {
            let mut q = p.clone();
            q.resize(3, 0.0);
            // tilt the plane so no coordinate is trivially zero
            let (y, z) = (q[1] * 0.8, q[1] * 0.6);
            tag.point(vec![q[0], y, z + 0.3]).unwrap()
        })
        .collect();
    (tag, pts)
}

#[test]
fn planar_mesh_has_no_mean_curvature() {
    let mesh = meshes::square_grid(4);
    let c = mesh.complex().unwrap();
    let (tag, pts) = lift(&mesh);
    let m = DiscreteMetric::from_points(&c, &tag, &pts).unwrap();
    let h = fem::mean_curvature_vertex(&c, &m, &tag, &pts).unwrap();
    let bd = c.boundary_vertices();
    for (v, hv) in h.iter().enumerate() {
        if !bd[v] {
            assert!(hv.iter().all(|x| x.abs() <= 1e-10));
        }
    }
    let sys = fem::assemble(&c, &m).unwrap();
    let hl2 = fem::mean_curvature_l2(&c, &sys, &h).unwrap();
    assert!(hl2.iter().flatten().all(|x| x.abs() <= 1e-10));
    let zero = vec![vec![0.0; 3]; c.count(0)];
    assert!(fem::mean_curvature_l2(&c, &sys, &zero)
        .unwrap()
        .iter()
        .flatten()
        .all(|x| *x == 0.0));
}

#[test]
fn icosahedron_mean_curvature_is_radial() {
    let mesh = meshes::icosahedron();
    let c = mesh.complex().unwrap();
    let tag = ManifoldTag::euclidean(3);
    let pts: Vec<ManifoldPoint> = mesh
        .coords
        .iter()
        .map(|p| tag.point(p.clone()).unwrap())
        .collect();
    let m = DiscreteMetric::from_points(&c, &tag, &pts).unwrap();
    let h = fem::mean_curvature_vertex(&c, &m, &tag, &pts).unwrap();
    let mut total = [0.0; 3];
    for (hv, p) in h.iter().zip(&mesh.coords) {
        let norm = hv.iter().map(|x| x * x).sum::<f64>().sqrt();
        let cos = -hv.iter().zip(p).map(|(a, b)| a * b).sum::<f64>() / norm;
        assert!(cos.min(1.0).acos() <= 1e-9);
        for d in 0..3 {
            total[d] += hv[d];
        }
    }
    assert!(total.iter().all(|x| x.abs() <= 1e-9));
}

#[test]
fn flat_area_differential_is_exact() {
    let tag = ManifoldTag::euclidean(2);
    let pts: Vec<ManifoldPoint> = [[0.0, 0.0], [1.0, 0.1], [0.3, 0.9]]
        .iter()
        .map(|p| tag.point(p.to_vec()).unwrap())
        .collect();
    let solver = SolverParams {
        tol: 1e-14,
        max_iter: 200,
    };
    let r = fem::area_differential_check(&pts, 0, &[0.3, -0.2], 1e-4, solver, 5).unwrap();
    assert!(r.gap <= 1e-6, "{r:?}");
    // moving the apex perpendicular to the opposite edge: rate |s|/h₀
    let edge: [f64; 2] = [0.3 - 1.0, 0.9 - 0.1];
    let len = (edge[0] * edge[0] + edge[1] * edge[1]).sqrt();
    let normal = [-edge[1] / len, edge[0] / len];
    let r = fem::area_differential_check(&pts, 0, &normal, 1e-4, solver, 5).unwrap();
    let area = 0.5 * (1.0 * 0.9 - 0.1 * 0.3);
    let height = 2.0 * area / len;
    assert!((r.formula.abs() - r.volume / height).abs() <= 1e-12);
    assert!((r.volume - area).abs() <= 1e-12);
}
