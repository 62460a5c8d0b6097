//! Compact minimal sets of flows, their Lyapunov stability, and the topology
//! of the Hausdorff-metric space they form.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compact;
pub mod error;
pub mod flow;
pub mod flows;
pub mod gallery;
pub mod index;
pub mod integrate;
pub mod limits;
pub mod minimal;
pub mod numeric;
pub mod pipeline;
pub mod space;
pub mod stability;
pub mod topology;

pub use compact::{
    contained_in_ball, epsilon_net, hausdorff_distance, set_distance, CompactSetSample, SampleFlag,
};
pub use error::{Error, Result};
pub use flow::{FlowKind, FlowSpec, OrbitSample};
pub use integrate::IntegratorConfig;
pub use limits::{alpha_limit_estimate, omega_limit_estimate, LimitParams};
pub use minimal::{
    classify_structure, detect_minimal_set, harvest_cmin, CMinSpace, DetectParams, DistanceMatrix,
    HarvestParams, MinimalSetRecord, Structure,
};
pub use space::{ChartKind, PhasePoint, PhaseSpace};
pub use stability::{
    classify_hyper_stability, recurrence_fraction, test_attractor, test_minus_stability,
    test_stability, AttractorParams, AttractorReport, HyperKind, HyperVerdict, StabilityKind,
    StabilityParams, StabilityVerdict,
};
pub use topology::{
    criterion_dense_scan, crossvalidate, default_scales, epsilon_components,
    local_connectedness_scan, predict_instability, ComponentDecomposition, ConfusionReport,
    DenseScanReport, LcVerdict, Prediction, Scale, TopologyDiagnostic,
};
