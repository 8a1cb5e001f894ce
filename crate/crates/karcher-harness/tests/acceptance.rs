//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`).  Every threshold is pinned
//! here rather than read back from the experiments.  The process fails when
//! a criterion outside [`KNOWN_RED`] fails; known-red criteria still print
//! FAIL together with the reason they cannot be met.

use std::error::Error;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use karcher_core::complex::{binom, Complex, DiscreteMetric};
use karcher_core::dec::{self, Cochain, Pm1Form};
use karcher_core::fem;
use karcher_core::karcher::{karcher_mean, SolverParams};
use karcher_core::linalg;
use karcher_core::manifold::{ManifoldKind, ManifoldTag};
use karcher_core::meshes;
use karcher_harness::experiments::{
    counterexample, curvature, delaunay, distortion, heatflow, hodge, interpolation, poisson,
};
use karcher_harness::{families, run, Criterion, Experiment, ExperimentConfig, Report};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<Vec<Measured>, Box<dyn Error>>;
type Paired = Result<(Vec<Measured>, Vec<Measured>), Box<dyn Error>>;

/// Criteria that fail for reasons recorded in the decisions ledger.
const KNOWN_RED: &[(usize, &str)] = &[
    (
        7,
        "the P⁻¹ degree-0 stiffness is exactly half the cotan stiffness (|U(e)| = |e||*e|/2 in 2D)",
    ),
    (
        11,
        "cotan mean curvature does not converge pointwise at the 12 valence-5 icosphere vertices (|H| ≈ 2.68)",
    ),
];

/// One measured value against its pinned threshold.
struct Measured {
    label: String,
    value: f64,
    criterion: Criterion,
}

impl Measured {
    fn new(label: impl Into<String>, value: f64, criterion: Criterion) -> Self {
        Self {
            label: label.into(),
            value,
            criterion,
        }
    }

    fn pass(&self) -> bool {
        self.criterion.holds(self.value)
    }
}

fn within(target: f64, tol: f64) -> Criterion {
    Criterion::Within { target, tol }
}

fn runtime(label: &str, elapsed: Duration, limit_secs: f64) -> Measured {
    Measured::new(
        format!("{label} runtime [s]"),
        elapsed.as_secs_f64(),
        Criterion::AtMost(limit_secs),
    )
}

fn config(
    experiment: Experiment,
    manifold: Option<ManifoldKind>,
    depths: (usize, usize),
) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(experiment).with_depths(depths.0, depths.1);
    if let Some(m) = manifold {
        cfg = cfg.with_manifold(m);
    }
    cfg
}

/// The summary value an experiment recorded for `(family, quantity)`.
fn summary(report: &Report, family: &str, quantity: &str) -> Result<f64, Box<dyn Error>> {
    report
        .find(family, quantity)
        .map(|s| s.value)
        .ok_or_else(|| format!("no summary for {family}/{quantity}").into())
}

const SOLVER: SolverParams = SolverParams {
    tol: 1e-14,
    max_iter: 500,
};

fn euclidean_exactness() -> Outcome {
    let start = Instant::now();
    let tag = ManifoldTag::euclidean(3);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let raw: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let pts = raw
            .iter()
            .map(|p| tag.point(p.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        let w: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..1.0)).collect();
        let total: f64 = w.iter().sum();
        let lambda: Vec<f64> = w.iter().map(|x| x / total).collect();
        let x = karcher_mean(&pts, &lambda, SOLVER)?.result;
        for k in 0..3 {
            let affine: f64 = lambda.iter().zip(&raw).map(|(l, p)| l * p[k]).sum();
            worst = worst.max((x.coords()[k] - affine).abs());
        }
    }
    Ok(vec![
        Measured::new("max |x(λ) − Σλⁱpᵢ|", worst, Criterion::AtMost(1e-8)),
        runtime("100 samples", start.elapsed(), 1.0),
    ])
}

fn distortion_orders() -> Paired {
    let start = Instant::now();
    let report = run(&config(
        Experiment::Distortion,
        Some(ManifoldKind::Sphere),
        (1, 5),
    ))?;
    let elapsed = start.elapsed();
    let family = distortion::family_name(ManifoldKind::Sphere);
    Ok((
        vec![
            Measured::new(
                "metric defect slope",
                summary(&report, family, distortion::METRIC)?,
                within(2.0, 0.3),
            ),
            runtime("depths 1–5", elapsed, 120.0),
        ],
        vec![
            Measured::new(
                "connection defect slope",
                summary(&report, family, distortion::CONNECTION)?,
                within(1.0, 0.3),
            ),
            runtime("depths 1–5", elapsed, 120.0),
        ],
    ))
}

fn interpolation_orders() -> Outcome {
    let report = run(&config(
        Experiment::Interpolation,
        Some(ManifoldKind::Sphere),
        (1, 5),
    ))?;
    Ok(vec![
        Measured::new(
            "value error slope",
            summary(&report, interpolation::CAP, interpolation::VALUE)?,
            within(2.0, 0.3),
        ),
        Measured::new(
            "gradient error slope",
            summary(&report, interpolation::CAP, interpolation::GRADIENT)?,
            within(1.0, 0.3),
        ),
    ])
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
}

fn dec_complexes() -> Result<Vec<(Complex, DiscreteMetric)>, Box<dyn Error>> {
    let ico = meshes::icosahedron().complex()?;
    let unit = DiscreteMetric::new(&ico, vec![1.0; ico.count(1)])?;
    let patch = meshes::equilateral_patch(4, 3);
    let pc = patch.complex()?;
    let pm = DiscreteMetric::from_coordinates(&pc, &patch.coords);
    let tet = Complex::new(vec![vec![0, 1, 2, 3]])?;
    let tm = DiscreteMetric::new(&tet, vec![1.0; 6])?;
    Ok(vec![(ico, unit), (pc, pm), (tet, tm)])
}

fn dec_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut dd, mut green, mut iso, mut commute, mut volume) =
        (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (c, m) in dec_complexes()? {
        let (dv, ops) = dec::operators_for(&c, &m)?;
        let n = ops.n;
        for k in 0..n.saturating_sub(1) {
            let d = linalg::to_dense(&ops.d[k + 1]) * linalg::to_dense(&ops.d[k]);
            let ud = linalg::to_dense(&ops.ud[k + 1]) * linalg::to_dense(&ops.ud[k]);
            dd = dd.max(d.amax()).max(ud.amax());
        }
        for k in 0..=n {
            for _ in 0..20 {
                let a = Cochain {
                    degree: k,
                    coeffs: random_vec(&mut rng, ops.counts[k]),
                };
                let b = Cochain {
                    degree: k,
                    coeffs: random_vec(&mut rng, ops.counts[k]),
                };
                let (ia, ib) = (dec::cochain_to_pm1(&a, &ops), dec::cochain_to_pm1(&b, &ops));
                iso = iso.max((ops.inner_pm1(&ia, &ib) - ops.inner_cochain(&a, &b)).abs());
                if k < n {
                    let left = dec::cochain_to_pm1(&ops.apply_d(&a)?, &ops);
                    let right = ops.apply_ud(&ia)?;
                    commute = commute.max((&left.coeffs - &right.coeffs).amax());
                    let beta = Pm1Form {
                        degree: k + 1,
                        coeffs: random_vec(&mut rng, ops.counts[k + 1]),
                    };
                    let lhs = ops.inner_pm1(&right, &beta);
                    let rhs = ops.inner_pm1(&ia, &ops.apply_udelta(&beta)?);
                    green = green.max((lhs - rhs).abs());
                }
                if k > 0 {
                    let left = dec::cochain_to_pm1(&ops.apply_delta(&a)?, &ops);
                    let right = ops.apply_udelta(&ia)?;
                    commute = commute.max((left.coeffs - right.coeffs).amax());
                }
            }
            for i in 0..c.count(k) {
                volume = volume.max(
                    (dv.primal[k][i] * dv.dual[k][i] - binom(n, k) * dv.neighbourhood[k][i]).abs(),
                );
            }
        }
    }
    let mut rank_mismatch = 0.0f64;
    for n in 1..=4 {
        let c = Complex::new(vec![(0..=n).collect()])?;
        for k in 1..=n {
            let rank = linalg::numerical_rank(&c.boundary_matrix(k).to_dense(), 1e-12) as f64;
            rank_mismatch = rank_mismatch.max((rank - binom(n, k)).abs());
        }
    }
    Ok(vec![
        Measured::new("max |d∘d|, |d̲∘d̲|", dd, Criterion::AtMost(1e-13)),
        Measured::new("Green's formula gap", green, Criterion::AtMost(1e-12)),
        Measured::new("i_k isometry gap", iso, Criterion::AtMost(1e-12)),
        Measured::new("i_k commutation gap", commute, Criterion::AtMost(1e-12)),
        Measured::new("volume identity gap", volume, Criterion::AtMost(1e-10)),
        Measured::new("|rank ∂_k − binom(n,k)|", rank_mismatch, within(0.0, 0.0)),
    ])
}

fn counterexample_exact() -> Outcome {
    let start = Instant::now();
    let report = run(&ExperimentConfig::new(Experiment::DecCounterexample))?;
    let elapsed = start.elapsed();
    let f = counterexample::FAMILY;
    Ok(vec![
        Measured::new(
            "worst per-triangle energy ratio",
            summary(&report, f, counterexample::RATIO)?,
            within(2.0, 1e-10),
        ),
        Measured::new(
            "max |α − (2,1,1) pattern|",
            summary(&report, f, counterexample::COEFFICIENTS)?,
            Criterion::AtMost(1e-10),
        ),
        runtime("patch", elapsed, 1.0),
    ])
}

fn cotan_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let mesh = families::random_well_centred(&mut rng);
        let c = mesh.complex()?;
        let m = DiscreteMetric::from_coordinates(&c, &mesh.coords);
        let p1 = linalg::to_dense(&fem::assemble(&c, &m)?.stiffness);
        let (_, ops) = dec::operators_for(&c, &m)?;
        let pm1 = linalg::to_dense(&ops.laplacian_degree0());
        worst = worst.max((pm1 - p1).amax());
    }
    Ok(vec![Measured::new(
        "max entrywise |L_P⁻¹ − K_cotan| over 10 meshes",
        worst,
        Criterion::AtMost(1e-10),
    )])
}

fn poisson_orders() -> Paired {
    let flat = run(&config(
        Experiment::Poisson,
        Some(ManifoldKind::Euclidean),
        (1, 5),
    ))?;
    let sphere = run(&config(
        Experiment::Poisson,
        Some(ManifoldKind::Sphere),
        (1, 5),
    ))?;
    Ok((
        vec![
            Measured::new(
                "flat L² slope",
                summary(&flat, poisson::FLAT, poisson::L2)?,
                within(2.0, 0.2),
            ),
            Measured::new(
                "flat H¹ slope",
                summary(&flat, poisson::FLAT, poisson::H1)?,
                within(1.0, 0.2),
            ),
            Measured::new(
                "S² L² slope",
                summary(&sphere, poisson::SPHERE, poisson::L2)?,
                within(2.0, 0.3),
            ),
        ],
        vec![Measured::new(
            "metric gap L² slope",
            summary(&sphere, poisson::GAP, poisson::GAP_L2)?,
            within(2.0, 0.5),
        )],
    ))
}

fn heat_gap() -> Outcome {
    let report = run(&config(
        Experiment::Heatflow,
        Some(ManifoldKind::Sphere),
        (1, 5),
    ))?;
    Ok(vec![Measured::new(
        "heat gap slope at t = 0.1",
        summary(&report, heatflow::FAMILY, heatflow::GAP)?,
        within(2.0, 0.5),
    )])
}

fn curvature_criteria() -> Paired {
    let report = run(&config(
        Experiment::MeanCurvature,
        Some(ManifoldKind::Euclidean),
        (1, 4),
    ))?;
    let s = curvature::SPHERE;
    Ok((
        vec![
            Measured::new(
                "depth 4 max ||H| − 2|/2",
                summary(&report, s, curvature::NORM_ERROR)?,
                Criterion::AtMost(0.1),
            ),
            Measured::new(
                "depth 4 max angle to ν [°]",
                summary(&report, s, curvature::ANGLE)?,
                Criterion::AtMost(5.0),
            ),
            Measured::new(
                "planar max |H|",
                summary(&report, curvature::PLANE, curvature::PLANE_NORM)?,
                Criterion::AtMost(1e-10),
            ),
        ],
        vec![
            Measured::new(
                "S² area-differential gap slope",
                summary(&report, curvature::CURVED_TRIANGLE, curvature::RELATIVE_GAP)?,
                Criterion::AtLeast(0.7),
            ),
            Measured::new(
                "flat gap",
                summary(&report, curvature::FLAT_TRIANGLE, curvature::GAP)?,
                Criterion::AtMost(1e-6),
            ),
        ],
    ))
}

fn delaunay_presets() -> Outcome {
    let report = run(&ExperimentConfig::new(Experiment::Delaunay))?;
    let mut out = Vec::new();
    for (family, counts) in [
        ("octahedron", [6.0, 12.0, 8.0]),
        ("tetrahedron", [4.0, 6.0, 4.0]),
    ] {
        for (q, n) in [delaunay::VERTICES, delaunay::EDGES, delaunay::TRIANGLES]
            .into_iter()
            .zip(counts)
        {
            out.push(Measured::new(
                format!("{family} {q}"),
                summary(&report, family, q)?,
                within(n, 0.0),
            ));
        }
    }
    out.push(Measured::new(
        "octahedron Euler",
        summary(&report, "octahedron", delaunay::EULER)?,
        within(2.0, 0.0),
    ));
    out.push(Measured::new(
        "octahedron max |ℓ − π/2|",
        summary(&report, "octahedron", delaunay::EDGE_DEVIATION)?,
        Criterion::AtMost(1e-9),
    ));
    out.push(Measured::new(
        "antipodal pair refused as non-generic",
        summary(&report, "antipodal", delaunay::NON_GENERIC)?,
        within(1.0, 0.0),
    ));
    Ok(out)
}

fn hodge_dimensions() -> Outcome {
    let report = run(&ExperimentConfig::new(Experiment::Hodge))?;
    let mut out = vec![
        Measured::new(
            "torus k=1 harmonic dimension",
            summary(&report, hodge::TORUS, "harmonic_dim_1")?,
            within(2.0, 0.0),
        ),
        Measured::new(
            "sphere k=1 harmonic dimension",
            summary(&report, hodge::SPHERE, "harmonic_dim_1")?,
            within(0.0, 0.0),
        ),
    ];
    for family in [hodge::TORUS, hodge::SPHERE] {
        for q in [hodge::REASSEMBLY, hodge::ORTHOGONALITY] {
            out.push(Measured::new(
                format!("{family} {q}"),
                summary(&report, family, q)?,
                Criterion::AtMost(1e-9),
            ));
        }
    }
    Ok(out)
}

fn report_line(id: usize, name: &str, outcome: &Outcome, elapsed: Duration) -> bool {
    let known = KNOWN_RED.iter().find(|(k, _)| *k == id);
    let pass = matches!(outcome, Ok(m) if m.iter().all(Measured::pass));
    let status = match (pass, known) {
        (true, _) => "PASS",
        (false, Some(_)) => "FAIL (known red)",
        (false, None) => "FAIL",
    };
    println!(
        "criterion {id:>2} {status}: {name} [{:.2} s]",
        elapsed.as_secs_f64()
    );
    match outcome {
        Ok(measured) => {
            for m in measured {
                let mark = if m.pass() { "ok " } else { "BAD" };
                println!(
                    "    {mark} {} = {:.6e} (want {})",
                    m.label, m.value, m.criterion
                );
            }
        }
        Err(e) => println!("    BAD error: {e}"),
    }
    if let (false, Some((_, why))) = (pass, known) {
        println!("    known red: {why}; see the decisions ledger");
    }
    if let (true, Some(_)) = (pass, known) {
        println!("    note: listed as known red but passes");
    }
    pass || known.is_some()
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let mut ok = true;
    let mut emit = |id: usize, name: &str, outcome: Outcome, elapsed: Duration| {
        ok &= report_line(id, name, &outcome, elapsed);
    };
    let timed = |f: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let r = f();
        (r, start.elapsed())
    };
    fn split(r: Paired) -> (Outcome, Outcome) {
        match r {
            Ok((a, b)) => (Ok(a), Ok(b)),
            Err(e) => {
                let msg = e.to_string();
                (Err(msg.clone().into()), Err(msg.into()))
            }
        }
    }

    let (r, t) = timed(&euclidean_exactness);
    emit(1, "Euclidean exactness of the barycentric map", r, t);
    let start = Instant::now();
    let (metric, connection) = split(distortion_orders());
    let t = start.elapsed();
    emit(2, "metric distortion order on S²", metric, t);
    emit(3, "connection defect order on S²", connection, t);
    let (r, t) = timed(&interpolation_orders);
    emit(4, "interpolation orders of u = z on an S² cap", r, t);
    let (r, t) = timed(&dec_algebra);
    emit(5, "exact DEC algebra", r, t);
    let (r, t) = timed(&counterexample_exact);
    emit(
        6,
        "projected dx counterexample on the equilateral mesh",
        r,
        t,
    );
    let (r, t) = timed(&cotan_equivalence);
    emit(7, "P⁻¹ degree-0 Laplacian equals cotan stiffness", r, t);
    let start = Instant::now();
    let (orders, gap) = split(poisson_orders());
    let t = start.elapsed();
    emit(8, "Poisson convergence orders", orders, t);
    emit(9, "metric-perturbation solution gap", gap, t);
    let (r, t) = timed(&heat_gap);
    emit(10, "heat-flow metric gap", r, t);
    let start = Instant::now();
    let (mean, area) = split(curvature_criteria());
    let t = start.elapsed();
    emit(11, "L² mean curvature on the depth-4 icosphere", mean, t);
    emit(12, "area differential", area, t);
    let (r, t) = timed(&delaunay_presets);
    emit(13, "Delaunay presets", r, t);
    let (r, t) = timed(&hodge_dimensions);
    emit(14, "Hodge dimensions and decomposition residuals", r, t);

    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
