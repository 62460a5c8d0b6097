//! Example flows with their default parameters and expected outcomes.

use std::f64::consts::{PI, TAU};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compact::{directed_hausdorff, hausdorff_distance, set_distance, CompactSetSample};
use crate::error::{Error, Result};
use crate::flow::FlowSpec;
use crate::flows::{
    hopf, hopf_fibre_point, nested_rings, north_south, pendulum, solid_torus_point, v_lambda,
    LambdaSpec,
};
use crate::minimal::{
    harvest_cmin, CMinSpace, DetectParams, HarvestParams, MinimalSetRecord, Structure,
};
use crate::pipeline::{
    classify_space, crossvalidate_space, diagnose_space, Annotations, ClassifyParams, Diagnosis,
};
use crate::space::{PhasePoint, PhaseSpace};
use crate::stability::{
    geometric_radii, recurrence_fraction, test_attractor, AttractorParams, AttractorReport,
    HyperKind, RecurrenceReport, StabilityKind, StabilityParams,
};
use crate::topology::{
    component_separation, default_scales, epsilon_components_of, ConfusionReport, LcVerdict, Scale,
};

pub const ENTRY_NAMES: [&str; 5] = [
    "pendulum",
    "v_lambda",
    "hopf",
    "nested_rings",
    "north_south",
];

/// Where an expected outcome comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Basis {
    /// Asserted about the flow in its original description.
    Stated,
    /// Immediate from the definitions.
    Trivial,
    /// Worked out from a closed-form oracle of the construction.
    Oracle,
}

/// Picks the record whose sample comes closest to a point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Locator(pub Vec<f64>);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "check")]
pub enum Check {
    /// Number of records, only those of structure `among` when given.
    RecordCount {
        among: Option<Structure>,
        min: usize,
        max: usize,
    },
    /// Every record has this structure; `period` within `tol` when given.
    AllStructures {
        structure: Structure,
        period: Option<f64>,
        tol: f64,
    },
    StabilityAt {
        at: Locator,
        kind: StabilityKind,
    },
    /// Every record of the given structure (all records if `None`) tests `kind`.
    AllStability {
        among: Option<Structure>,
        kind: StabilityKind,
    },
    /// Hyper-stable-at-scale records split into `count` chain components at
    /// `factor × mesh`.
    HyperStableComponents {
        count: usize,
        factor: f64,
    },
    /// All records form `count` chain components at `factor × mesh`.
    Components {
        count: usize,
        factor: f64,
    },
    HyperStableCount {
        max: usize,
    },
    /// The record is a closure member and every offender has `offenders`
    /// structure.
    MemberWithOffenders {
        at: Locator,
        offenders: Structure,
    },
    /// Records of `among` structure test stable yet are closure members.
    StableMembers {
        among: Structure,
    },
    LcAt {
        at: Locator,
        verdict: LcVerdict,
    },
    Recurrence {
        min: f64,
        max: f64,
    },
    Attractor {
        at: Locator,
        reversed: bool,
    },
    NoFalsePositives,
    /// Stability and reversed-flow stability agree in kind on every record.
    MinusAgreement,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub id: String,
    pub description: String,
    pub basis: Basis,
    pub check: Check,
}

fn expect(id: &str, description: &str, basis: Basis, check: Check) -> Expectation {
    Expectation {
        id: id.into(),
        description: description.into(),
        basis,
        check,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecurrenceParams {
    pub horizon: f64,
    pub delta: f64,
    pub dt: f64,
    /// Defaults to the harvest seeds.
    #[serde(default)]
    pub seeds: Option<Vec<PhasePoint>>,
}

/// Everything a gallery run needs besides the flow.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GalleryParams {
    pub seeds: Vec<PhasePoint>,
    pub harvest: HarvestParams,
    pub classify: ClassifyParams,
    /// Defaults to the scales built from the harvest mesh.
    #[serde(default)]
    pub scales: Option<Vec<Scale>>,
    #[serde(default)]
    pub density_radius: Option<f64>,
    #[serde(default)]
    pub recurrence: Option<RecurrenceParams>,
    #[serde(default)]
    pub attractor: Option<AttractorParams>,
}

impl GalleryParams {
    pub fn scales(&self) -> Vec<Scale> {
        self.scales
            .clone()
            .unwrap_or_else(|| default_scales(self.harvest.mesh()))
    }
}

/// Which variant of an entry to build.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowOptions {
    #[serde(default)]
    pub lambda: Option<LambdaSpec>,
    /// Sphere dimension for `north_south`.
    #[serde(default)]
    pub sphere_dim: Option<usize>,
    /// Number of rings `1/n` the radial grid must resolve.
    #[serde(default)]
    pub rings: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct GalleryEntry {
    pub name: String,
    pub flow: FlowSpec,
    pub params: GalleryParams,
    pub expected: Vec<Expectation>,
}

/// Builds the entry `name`.
pub fn make_flow(name: &str, options: &FlowOptions) -> Result<GalleryEntry> {
    match name {
        "pendulum" => Ok(pendulum_entry()),
        "v_lambda" => Ok(v_lambda_entry(
            options
                .lambda
                .unwrap_or(LambdaSpec::Rational { p: 1, q: 2 }),
        )),
        "hopf" => Ok(hopf_entry()),
        "nested_rings" => nested_rings_entry(options.rings.unwrap_or(4)),
        "north_south" => north_south_entry(options.sphere_dim.unwrap_or(2)),
        _ => Err(Error::UnknownFlow {
            name: name.to_string(),
            available: ENTRY_NAMES.join(", "),
        }),
    }
}

/// Every entry with its default options; `v_lambda` expands to its three
/// rotation profiles.
pub fn all_entries() -> Vec<GalleryEntry> {
    let mut out = vec![pendulum_entry()];
    out.extend(v_lambda_cases().into_iter().map(v_lambda_entry));
    out.push(hopf_entry());
    out.push(nested_rings_entry(4).expect("default ring count is valid"));
    out.push(north_south_entry(2).expect("default sphere dimension is valid"));
    out
}

/// The entries run by `gallery run <name>`.
pub fn entries_named(name: &str) -> Result<Vec<GalleryEntry>> {
    if name == "v_lambda" {
        return Ok(v_lambda_cases().into_iter().map(v_lambda_entry).collect());
    }
    make_flow(name, &FlowOptions::default()).map(|e| vec![e])
}

pub fn v_lambda_cases() -> [LambdaSpec; 3] {
    [
        LambdaSpec::Rational { p: 1, q: 2 },
        LambdaSpec::Golden,
        LambdaSpec::Identity,
    ]
}

fn pt(c: Vec<f64>) -> PhasePoint {
    PhasePoint::new(c)
}

fn pendulum_entry() -> GalleryEntry {
    let mut seeds = vec![pt(vec![0.0, 0.0]), pt(vec![-0.5, 0.0])];
    seeds.extend((1..=15).map(|k| pt(vec![0.0, 0.05 * k as f64])));
    for sign in [1.0, -1.0] {
        seeds.extend((0..=32).map(|k| pt(vec![-0.5, sign * (0.2 + 0.05 * k as f64)])));
    }
    let harvest = HarvestParams {
        detect: DetectParams {
            burn_in: 1.0,
            window: 20.0,
            dt: 0.005,
            resolution: 0.01,
            period_horizon: 12.0,
            ..DetectParams::default()
        },
        dedup_eps: Some(0.04),
        mesh: Some(0.05),
    };
    let classify = ClassifyParams {
        stability: StabilityParams {
            radii: geometric_radii(0.05, 4, 0.5),
            horizon: 30.0,
            dt: 0.02,
            ..StabilityParams::default()
        },
        hyper_radius: 0.15,
        minus: true,
    };
    let centre = Locator(vec![0.0, 0.0]);
    let saddle = Locator(vec![-0.5, 0.0]);
    GalleryEntry {
        name: "pendulum".into(),
        flow: pendulum(),
        params: GalleryParams {
            recurrence: Some(RecurrenceParams {
                horizon: 20.0,
                delta: 1e-3,
                dt: 0.005,
                seeds: None,
            }),
            seeds,
            harvest,
            classify,
            scales: None,
            density_radius: None,
            attractor: None,
        },
        expected: vec![
            expect(
                "three-bands",
                "hyper-stable records form 3 chain components at twice the mesh",
                Basis::Stated,
                Check::HyperStableComponents {
                    count: 3,
                    factor: 2.0,
                },
            ),
            expect(
                "centre-stable",
                "lower equilibrium is stable at scale",
                Basis::Stated,
                Check::StabilityAt {
                    at: centre,
                    kind: StabilityKind::StableAtScale,
                },
            ),
            expect(
                "saddle-unstable",
                "saddle is unstable with a witness",
                Basis::Stated,
                Check::StabilityAt {
                    at: saddle,
                    kind: StabilityKind::UnstableWitnessed,
                },
            ),
            expect(
                "recurrent",
                "harvest seeds are recurrent",
                Basis::Trivial,
                Check::Recurrence {
                    min: 0.95,
                    max: 1.0,
                },
            ),
            expect(
                "minus-agrees",
                "forward and reversed stability agree on every record",
                Basis::Stated,
                Check::MinusAgreement,
            ),
        ],
    }
}

fn v_lambda_entry(lambda: LambdaSpec) -> GalleryEntry {
    match lambda {
        LambdaSpec::Identity => v_lambda_identity(),
        LambdaSpec::Golden | LambdaSpec::Constant { .. } => v_lambda_constant(lambda, true),
        LambdaSpec::Rational { .. } => v_lambda_constant(lambda, false),
    }
}

fn v_lambda_stability(horizon: f64) -> StabilityParams {
    StabilityParams {
        radii: geometric_radii(0.15, 4, 0.5),
        horizon,
        dt: 0.05,
        ..StabilityParams::default()
    }
}

/// Constant rotation profiles: every orbit closure is a circle (rational)
/// or a torus `|z2| = μ` (irrational).
fn v_lambda_constant(lambda: LambdaSpec, irrational: bool) -> GalleryEntry {
    let mut seeds = vec![];
    let detect = if irrational {
        for k in 0..=4 {
            seeds.push(pt(solid_torus_point(0.0, 0.25 * k as f64, 0.0)));
        }
        DetectParams {
            burn_in: 1.0,
            window: 1500.0,
            dt: 0.02,
            resolution: 0.05,
            period_horizon: 250.0,
            ..DetectParams::default()
        }
    } else {
        // Orbits through (1, μe^{iφ}) are distinct for φ ∈ [0, π).
        seeds.push(pt(solid_torus_point(0.0, 0.0, 0.0)));
        for k in 1..=5 {
            let mu = 0.2 * k as f64;
            let m = (PI * mu / 0.2).ceil() as usize;
            seeds.extend((0..m).map(|j| pt(solid_torus_point(0.0, mu, PI * j as f64 / m as f64))));
        }
        DetectParams {
            burn_in: 1.0,
            window: 60.0,
            dt: 0.02,
            resolution: 0.05,
            period_horizon: 60.0,
            ..DetectParams::default()
        }
    };
    let harvest = HarvestParams {
        detect,
        dedup_eps: Some(0.2),
        mesh: Some(0.25),
    };
    let structure = if irrational {
        expect(
            "tori",
            "each level off the core gives one invariant torus",
            Basis::Stated,
            Check::RecordCount {
                among: Some(Structure::QuasiperiodicTorus),
                min: 4,
                max: 4,
            },
        )
    } else {
        expect(
            "circles",
            "every record is a periodic circle",
            Basis::Stated,
            Check::AllStructures {
                structure: Structure::Periodic,
                period: None,
                tol: 0.0,
            },
        )
    };
    let expected = vec![
        expect(
            "all-stable",
            "every record is stable at scale",
            Basis::Stated,
            Check::AllStability {
                among: None,
                kind: StabilityKind::StableAtScale,
            },
        ),
        expect(
            "one-component",
            "records chain into one component at twice the mesh",
            Basis::Stated,
            Check::Components {
                count: 1,
                factor: 2.0,
            },
        ),
        structure,
    ];
    GalleryEntry {
        name: format!("v_lambda[{}]", lambda.label()),
        flow: v_lambda(lambda),
        params: GalleryParams {
            seeds,
            harvest,
            classify: ClassifyParams {
                stability: v_lambda_stability(200.0),
                hyper_radius: 0.15,
                minus: false,
            },
            scales: None,
            density_radius: None,
            recurrence: None,
            attractor: None,
        },
        expected,
    }
}

/// Levels `μ²` where `λ(s) = s` is resonant with small denominator.
pub const IDENTITY_RESONANT_LEVELS: [f64; 3] = [1.0 / 3.0, 0.5, 2.0 / 3.0];
/// Torus levels `μ` between the resonant rings.
pub const IDENTITY_TORUS_LEVELS: [f64; 3] = [0.46, 0.66, 0.88];

fn v_lambda_identity() -> GalleryEntry {
    let lambda = LambdaSpec::Identity;
    let mut seeds: Vec<PhasePoint> = IDENTITY_RESONANT_LEVELS
        .iter()
        .map(|s| pt(solid_torus_point(0.0, s.sqrt(), 0.0)))
        .collect();
    seeds.extend(
        IDENTITY_TORUS_LEVELS
            .iter()
            .map(|&mu| pt(solid_torus_point(0.0, mu, 0.0))),
    );
    let harvest = HarvestParams {
        detect: DetectParams {
            burn_in: 1.0,
            window: 1500.0,
            dt: 0.02,
            resolution: 0.05,
            period_horizon: 250.0,
            ..DetectParams::default()
        },
        dedup_eps: Some(0.2),
        mesh: Some(0.25),
    };
    let ring = Locator(solid_torus_point(0.0, 0.5f64.sqrt(), 0.0));
    GalleryEntry {
        name: format!("v_lambda[{}]", lambda.label()),
        flow: v_lambda(lambda),
        params: GalleryParams {
            seeds,
            harvest,
            classify: ClassifyParams {
                stability: v_lambda_stability(600.0),
                hyper_radius: 0.15,
                minus: false,
            },
            scales: None,
            density_radius: None,
            recurrence: None,
            attractor: None,
        },
        expected: vec![
            expect(
                "no-hyper-stable",
                "no record is hyper-stable at scale",
                Basis::Stated,
                Check::HyperStableCount { max: 0 },
            ),
            expect(
                "rings-unstable",
                "resonant rings are unstable with a witness",
                Basis::Stated,
                Check::AllStability {
                    among: Some(Structure::Periodic),
                    kind: StabilityKind::UnstableWitnessed,
                },
            ),
            expect(
                "tori-stable-members",
                "tori are stable at scale yet closure members",
                Basis::Stated,
                Check::StableMembers {
                    among: Structure::QuasiperiodicTorus,
                },
            ),
            expect(
                "ring-half-unstable",
                "the ring at λ = 1/2 is unstable",
                Basis::Oracle,
                Check::StabilityAt {
                    at: ring,
                    kind: StabilityKind::UnstableWitnessed,
                },
            ),
        ],
    }
}

/// `n` points spread over `S²` on a Fibonacci lattice.
pub fn fibonacci_sphere(n: usize) -> Vec<[f64; 3]> {
    let ga = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let a = ga * i as f64;
            [r * a.cos(), r * a.sin(), z]
        })
        .collect()
}

/// Hopf fibres over a Fibonacci lattice of base points.
pub fn hopf_seeds(n: usize) -> Vec<PhasePoint> {
    fibonacci_sphere(n)
        .into_iter()
        .map(|b| {
            pt(hopf_fibre_point(
                b[2].clamp(-1.0, 1.0).acos(),
                b[1].atan2(b[0]),
            ))
        })
        .collect()
}

/// Uniform points on `Sⁿ⁻¹ ⊂ ℝⁿ` from a seeded generator.
pub fn random_sphere_points(ambient: usize, count: usize, seed: u64) -> Vec<PhasePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| loop {
            let v: Vec<f64> = (0..ambient)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            let n = crate::space::norm(&v);
            if n > 1e-9 {
                break pt(v.into_iter().map(|x| x / n).collect());
            }
        })
        .collect()
}

fn hopf_entry() -> GalleryEntry {
    let harvest = HarvestParams {
        detect: DetectParams {
            burn_in: 1.0,
            window: 4.0 * PI,
            dt: 0.01,
            resolution: 0.04,
            period_horizon: 10.0,
            ..DetectParams::default()
        },
        dedup_eps: Some(0.16),
        mesh: Some(0.25),
    };
    GalleryEntry {
        name: "hopf".into(),
        flow: hopf(),
        params: GalleryParams {
            seeds: hopf_seeds(80),
            harvest,
            classify: ClassifyParams {
                stability: StabilityParams {
                    radii: geometric_radii(0.2, 4, 0.5),
                    horizon: 20.0,
                    dt: 0.05,
                    ..StabilityParams::default()
                },
                hyper_radius: 0.2,
                minus: false,
            },
            scales: None,
            density_radius: None,
            recurrence: Some(RecurrenceParams {
                horizon: 10.0 * TAU,
                delta: 1e-4,
                dt: 0.05,
                seeds: Some(random_sphere_points(4, 200, 0x40f)),
            }),
            attractor: None,
        },
        expected: vec![
            expect(
                "periodic-2pi",
                "every record is periodic with period 2π",
                Basis::Stated,
                Check::AllStructures {
                    structure: Structure::Periodic,
                    period: Some(TAU),
                    tol: 1e-6,
                },
            ),
            expect(
                "all-stable",
                "every record is stable at scale",
                Basis::Stated,
                Check::AllStability {
                    among: None,
                    kind: StabilityKind::StableAtScale,
                },
            ),
            expect(
                "one-component",
                "records chain into one component at the mesh",
                Basis::Stated,
                Check::Components {
                    count: 1,
                    factor: 1.0,
                },
            ),
            expect(
                "recurrence-one",
                "every sampled point is recurrent",
                Basis::Stated,
                Check::Recurrence { min: 1.0, max: 1.0 },
            ),
        ],
    }
}

/// Seeds of the radial grid for [`nested_rings_entry`].
pub fn nested_seeds(rings: usize) -> Vec<PhasePoint> {
    let r0 = 1.0 / rings as f64;
    let mut seeds = vec![pt(vec![0.0, 0.0])];
    let mut r = r0;
    while r <= 1.2 + 1e-9 {
        seeds.push(pt(vec![r, 0.0]));
        r += 0.05;
    }
    seeds
}

fn nested_rings_entry(rings: usize) -> Result<GalleryEntry> {
    if !(1..=8).contains(&rings) {
        return Err(Error::invalid(format!(
            "nested_rings resolves 1 to 8 rings, got {rings}"
        )));
    }
    let harvest = HarvestParams {
        detect: DetectParams {
            burn_in: 1000.0,
            window: 5.0 * PI,
            dt: 0.002,
            resolution: 0.005,
            period_horizon: 10.0,
            ..DetectParams::default()
        },
        dedup_eps: Some(0.02),
        mesh: Some(0.05),
    };
    let origin = Locator(vec![0.0, 0.0]);
    Ok(GalleryEntry {
        name: "nested_rings".into(),
        flow: nested_rings(),
        params: GalleryParams {
            seeds: nested_seeds(rings),
            harvest,
            classify: ClassifyParams {
                stability: StabilityParams {
                    radii: geometric_radii(0.015, 4, 0.5),
                    horizon: 300.0,
                    dt: 0.05,
                    ..StabilityParams::default()
                },
                hyper_radius: 0.5,
                minus: false,
            },
            scales: None,
            density_radius: None,
            recurrence: None,
            attractor: None,
        },
        expected: vec![
            expect(
                "origin-not-lc",
                "the space is not locally connected at the origin",
                Basis::Stated,
                Check::LcAt {
                    at: origin.clone(),
                    verdict: LcVerdict::NotLc,
                },
            ),
            expect(
                "offenders-are-rings",
                "the origin is a closure member and its offenders are rings",
                Basis::Oracle,
                Check::MemberWithOffenders {
                    at: origin.clone(),
                    offenders: Structure::Periodic,
                },
            ),
            expect(
                "rings-unstable",
                "every ring is unstable with a witness",
                Basis::Oracle,
                Check::AllStability {
                    among: Some(Structure::Periodic),
                    kind: StabilityKind::UnstableWitnessed,
                },
            ),
            expect(
                "origin-stable",
                "the origin is stable at scale",
                Basis::Stated,
                Check::StabilityAt {
                    at: origin,
                    kind: StabilityKind::StableAtScale,
                },
            ),
        ],
    })
}

fn north_south_entry(n: usize) -> Result<GalleryEntry> {
    if n < 1 {
        return Err(Error::invalid(
            "north_south needs a sphere of dimension at least 1",
        ));
    }
    let d = n + 1;
    let pole = |s: f64| {
        let mut v = vec![0.0; d];
        v[d - 1] = s;
        pt(v)
    };
    let mut seeds = vec![pole(1.0), pole(-1.0)];
    let generic = if n == 2 {
        fibonacci_sphere(98)
            .into_iter()
            .map(|p| pt(p.to_vec()))
            .collect()
    } else {
        random_sphere_points(d, 98, 0x2a)
    };
    seeds.extend(generic.iter().cloned());
    let harvest = HarvestParams {
        detect: DetectParams {
            burn_in: 40.0,
            window: 10.0,
            dt: 0.1,
            resolution: 0.05,
            period_horizon: 10.0,
            ..DetectParams::default()
        },
        dedup_eps: None,
        mesh: None,
    };
    Ok(GalleryEntry {
        name: format!("north_south[S{n}]"),
        flow: north_south(n),
        params: GalleryParams {
            seeds,
            harvest,
            classify: ClassifyParams {
                stability: StabilityParams::default(),
                hyper_radius: 0.5,
                minus: false,
            },
            scales: None,
            density_radius: None,
            recurrence: Some(RecurrenceParams {
                horizon: 20.0,
                delta: 1e-3,
                dt: 0.05,
                seeds: Some(generic),
            }),
            attractor: Some(AttractorParams {
                radius: 1.5,
                basin_samples: 40,
                horizon: 40.0,
                window: 5.0,
                dt: 0.1,
                seed: 0xa77,
            }),
        },
        expected: vec![
            expect(
                "two-equilibria",
                "the harvest finds exactly two records",
                Basis::Stated,
                Check::RecordCount {
                    among: None,
                    min: 2,
                    max: 2,
                },
            ),
            expect(
                "north-attractor",
                "the north pole is an attractor",
                Basis::Stated,
                Check::Attractor {
                    at: Locator(pole(1.0).0),
                    reversed: false,
                },
            ),
            expect(
                "south-repeller",
                "the south pole attracts under time reversal",
                Basis::Stated,
                Check::Attractor {
                    at: Locator(pole(-1.0).0),
                    reversed: true,
                },
            ),
            expect(
                "no-recurrence",
                "generic points are not recurrent",
                Basis::Trivial,
                Check::Recurrence { min: 0.0, max: 0.0 },
            ),
        ],
    })
}

/// A synthetic space of singleton records on the closed radii of the unit
/// disk toward the points of a level-`levels` Cantor set of angles in
/// `[0, π/2]`, `spacing` apart along each radius. The mesh is `1.25·spacing`
/// so that the finest topology scale chains neighbours along a radius.
pub fn cantor_star_space(levels: u32, spacing: f64, dedup_eps: f64) -> Result<CMinSpace> {
    if !(spacing > 0.0 && dedup_eps > 0.0) {
        return Err(Error::invalid("spacing and dedup_eps must be positive"));
    }
    let mut angles = vec![(0.0, 1.0)];
    for _ in 0..levels {
        angles = angles
            .into_iter()
            .flat_map(|(a, b): (f64, f64)| {
                let t = (b - a) / 3.0;
                [(a, a + t), (b - t, b)]
            })
            .collect();
    }
    let mut ends: Vec<f64> = angles.iter().flat_map(|&(a, b)| [a, b]).collect();
    ends.dedup();
    let space = PhaseSpace::euclidean(2);
    let res = spacing / 4.0;
    let steps = (1.0 / spacing).round() as usize;
    let mut pts: Vec<[f64; 2]> = vec![[0.0, 0.0]];
    for &u in &ends {
        let th = u * PI / 2.0;
        for k in 1..=steps {
            let r = k as f64 * spacing;
            pts.push([r * th.cos(), r * th.sin()]);
        }
    }
    let mut kept: Vec<[f64; 2]> = vec![];
    for p in pts {
        if kept
            .iter()
            .all(|q| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt() >= dedup_eps)
        {
            kept.push(p);
        }
    }
    let records = kept
        .iter()
        .enumerate()
        .map(|(i, p)| MinimalSetRecord {
            id: crate::minimal::record_id(i),
            sample: CompactSetSample::singleton(space.clone(), res, p),
            structure: Structure::Equilibrium,
            period: None,
            minimality_score: 1.0,
            correlation_dimension: None,
            seeds: vec![pt(p.to_vec())],
        })
        .collect();
    CMinSpace::from_records(
        "cantor_star",
        space,
        res,
        dedup_eps,
        1.25 * spacing,
        records,
    )
}

/// Outputs of every stage of a gallery run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GalleryRun {
    pub entry: String,
    pub space: CMinSpace,
    pub annotations: Annotations,
    pub diagnosis: Diagnosis,
    pub confusion: ConfusionReport,
    #[serde(default)]
    pub recurrence: Option<RecurrenceReport>,
    /// Keyed by expectation id.
    #[serde(default)]
    pub attractors: Vec<(String, AttractorReport)>,
}

/// Harvest, classify, diagnose and crossvalidate with the entry's defaults.
pub fn run_pipeline(entry: &GalleryEntry) -> Result<GalleryRun> {
    let p = &entry.params;
    let space = harvest_cmin(&entry.flow, &p.seeds, &p.harvest)?;
    let annotations = classify_space(&entry.flow, &space, &p.classify)?;
    let diagnosis = diagnose_space(&space, &p.scales(), p.density_radius)?;
    let confusion = crossvalidate_space(&space, &annotations, &diagnosis)?;
    let recurrence = if entry
        .expected
        .iter()
        .any(|e| matches!(e.check, Check::Recurrence { .. }))
    {
        let rp = p.recurrence.as_ref().ok_or_else(|| {
            Error::invalid(format!(
                "{}: recurrence check without parameters",
                entry.name
            ))
        })?;
        let seeds = rp.seeds.as_ref().unwrap_or(&p.seeds);
        Some(recurrence_fraction(
            &entry.flow,
            seeds,
            rp.horizon,
            rp.delta,
            rp.dt,
        )?)
    } else {
        None
    };
    let mut attractors = vec![];
    for (i, e) in entry.expected.iter().enumerate() {
        if let Check::Attractor { at, reversed } = &e.check {
            let ap = p.attractor.as_ref().ok_or_else(|| {
                Error::invalid(format!(
                    "{}: attractor check without parameters",
                    entry.name
                ))
            })?;
            let rec = &space.records[locate(&space, at)?];
            let flow = if *reversed {
                entry.flow.reversed()
            } else {
                entry.flow.clone()
            };
            attractors.push((e.id.clone(), test_attractor(&flow, rec, ap, i as u64)?));
        }
    }
    Ok(GalleryRun {
        entry: entry.name.clone(),
        space,
        annotations,
        diagnosis,
        confusion,
        recurrence,
        attractors,
    })
}

/// Index of the record closest to the locator point.
pub fn locate(space: &CMinSpace, at: &Locator) -> Result<usize> {
    let mut best = (f64::INFINITY, None);
    for (i, r) in space.records.iter().enumerate() {
        let d = r.sample.distance_to(&at.0)?;
        if d < best.0 {
            best = (d, Some(i));
        }
    }
    best.1
        .ok_or_else(|| Error::UnknownRecord(format!("no record near {:?}", at.0)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpectationResult {
    pub id: String,
    pub description: String,
    pub basis: Basis,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GalleryReport {
    pub entry: String,
    pub records: usize,
    pub results: Vec<ExpectationResult>,
    pub passed: bool,
}

impl GalleryReport {
    pub fn pass_count(&self) -> usize {
        self.results.iter().filter(|r| r.passed).count()
    }
}

/// [`run_expectations`] over several entries in parallel, in order.
pub fn run_entries(entries: &[GalleryEntry]) -> Vec<Result<(GalleryReport, GalleryRun)>> {
    entries.par_iter().map(run_expectations).collect()
}

/// Runs the pipeline and checks every expectation; failures are collected,
/// only pipeline errors are returned as `Err`.
pub fn run_expectations(entry: &GalleryEntry) -> Result<(GalleryReport, GalleryRun)> {
    let run = run_pipeline(entry)?;
    let report = evaluate(entry, &run)?;
    Ok((report, run))
}

pub fn evaluate(entry: &GalleryEntry, run: &GalleryRun) -> Result<GalleryReport> {
    let results = entry
        .expected
        .iter()
        .map(|e| {
            let (passed, detail) = check(entry, run, e)?;
            Ok(ExpectationResult {
                id: e.id.clone(),
                description: e.description.clone(),
                basis: e.basis,
                passed,
                detail,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GalleryReport {
        entry: entry.name.clone(),
        records: run.space.len(),
        passed: results.iter().all(|r| r.passed),
        results,
    })
}

fn kinds_of(run: &GalleryRun, among: Option<Structure>) -> Vec<(String, StabilityKind)> {
    run.space
        .records
        .iter()
        .zip(&run.annotations.verdicts)
        .filter(|(r, _)| among.is_none_or(|s| r.structure == s))
        .map(|(r, v)| (r.id.clone(), v.kind))
        .collect()
}

fn check(entry: &GalleryEntry, run: &GalleryRun, e: &Expectation) -> Result<(bool, String)> {
    let space = &run.space;
    let ann = &run.annotations;
    let mesh = space.mesh;
    Ok(match &e.check {
        Check::RecordCount { among, min, max } => {
            let n = space
                .records
                .iter()
                .filter(|r| among.is_none_or(|s| r.structure == s))
                .count();
            (n >= *min && n <= *max, format!("{n} records"))
        }
        Check::AllStructures {
            structure,
            period,
            tol,
        } => {
            let bad: Vec<String> = space
                .records
                .iter()
                .filter(|r| {
                    r.structure != *structure
                        || period.is_some_and(|p| r.period.is_none_or(|q| (q - p).abs() > *tol))
                })
                .map(|r| format!("{}:{:?}:{:?}", r.id, r.structure, r.period))
                .collect();
            (
                bad.is_empty() && !space.is_empty(),
                format!("mismatched {bad:?}"),
            )
        }
        Check::StabilityAt { at, kind } => {
            let i = locate(space, at)?;
            let got = ann.verdicts[i].kind;
            (
                got == *kind,
                format!("{} is {:?}", space.records[i].id, got),
            )
        }
        Check::AllStability { among, kind } => {
            let all = kinds_of(run, *among);
            let bad: Vec<_> = all.iter().filter(|(_, k)| k != kind).collect();
            (
                !all.is_empty() && bad.is_empty(),
                format!("{} checked, mismatched {bad:?}", all.len()),
            )
        }
        Check::HyperStableComponents { count, factor } => {
            let members: Vec<usize> = (0..space.len())
                .filter(|&i| ann.hyper[i].kind == HyperKind::HyperStableAtScale)
                .collect();
            let dec = epsilon_components_of(space, &members, factor * mesh)?;
            let sep = component_separation(space, &dec)?;
            (
                dec.len() == *count,
                format!(
                    "{} hyper-stable records in {} components, separation {sep:.4}",
                    members.len(),
                    dec.len()
                ),
            )
        }
        Check::Components { count, factor } => {
            let all: Vec<usize> = (0..space.len()).collect();
            let dec = epsilon_components_of(space, &all, factor * mesh)?;
            (dec.len() == *count, format!("{} components", dec.len()))
        }
        Check::HyperStableCount { max } => {
            let n = ann
                .hyper
                .iter()
                .filter(|h| h.kind == HyperKind::HyperStableAtScale)
                .count();
            (n <= *max, format!("{n} hyper-stable records"))
        }
        Check::MemberWithOffenders { at, offenders } => {
            let i = locate(space, at)?;
            let h = &ann.hyper[i];
            let ok = h.kind == HyperKind::ClosureMember
                && h.offending.iter().all(|id| {
                    space
                        .index_of(id)
                        .map(|j| space.records[j].structure == *offenders)
                        .unwrap_or(false)
                });
            (ok, format!("{:?} with offenders {:?}", h.kind, h.offending))
        }
        Check::StableMembers { among } => {
            let rows: Vec<_> = (0..space.len())
                .filter(|&i| space.records[i].structure == *among)
                .collect();
            let bad: Vec<String> = rows
                .iter()
                .filter(|&&i| {
                    !(ann.verdicts[i].is_stable() && ann.hyper[i].kind == HyperKind::ClosureMember)
                })
                .map(|&i| {
                    format!(
                        "{}:{:?}/{:?}",
                        space.records[i].id, ann.verdicts[i].kind, ann.hyper[i].kind
                    )
                })
                .collect();
            (
                !rows.is_empty() && bad.is_empty(),
                format!("{} checked, mismatched {bad:?}", rows.len()),
            )
        }
        Check::LcAt { at, verdict } => {
            let i = locate(space, at)?;
            let got = run.diagnosis.diagnostics[i].verdict;
            (
                got == *verdict,
                format!("{} is {:?}", space.records[i].id, got),
            )
        }
        Check::Recurrence { min, max } => match &run.recurrence {
            Some(r) => (
                r.fraction >= *min && r.fraction <= *max && r.tested > 0,
                format!("{}/{} recurrent", r.recurrent, r.tested),
            ),
            None => (false, "recurrence was not computed".into()),
        },
        Check::Attractor { .. } => match run.attractors.iter().find(|(id, _)| id == &e.id) {
            Some((_, r)) => (
                r.is_attractor == Some(true),
                format!(
                    "{:.3} of basin samples converge ({} failed)",
                    r.fraction, r.failed
                ),
            ),
            None => (false, "attractor test was not run".into()),
        },
        Check::NoFalsePositives => (
            run.confusion.false_positives == 0,
            format!("{} false positives", run.confusion.false_positives),
        ),
        Check::MinusAgreement => match &ann.minus_verdicts {
            Some(m) => {
                let bad: Vec<String> = ann
                    .verdicts
                    .iter()
                    .zip(m)
                    .zip(&space.records)
                    .filter(|((a, b), _)| a.kind != b.kind)
                    .map(|((a, b), r)| format!("{}:{:?}/{:?}", r.id, a.kind, b.kind))
                    .collect();
                (bad.is_empty(), format!("disagreements {bad:?}"))
            }
            None => (
                false,
                format!("{}: reversed-flow verdicts were not computed", entry.name),
            ),
        },
    })
}

/// `d_H` from the record to the circle `{|z| = r}` in the plane, sampled
/// at `n` points.
pub fn distance_to_circle(sample: &CompactSetSample, r: f64, n: usize) -> Result<f64> {
    let pts: Vec<[f64; 2]> = (0..n)
        .map(|k| {
            let a = TAU * k as f64 / n as f64;
            [r * a.cos(), r * a.sin()]
        })
        .collect();
    let circle = CompactSetSample::from_points(sample.space.clone(), sample.resolution, &pts);
    hausdorff_distance(sample, &circle)
}

/// One-sided containment `sup_{a∈A} d(a, B)` and the full `d_H`, for the
/// inner-limit checks.
pub fn containment(a: &CompactSetSample, b: &CompactSetSample) -> Result<(f64, f64, f64)> {
    Ok((
        directed_hausdorff(a, b)?,
        hausdorff_distance(a, b)?,
        set_distance(a, b)?,
    ))
}
