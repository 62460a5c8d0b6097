//! The harvest → classify → diagnose → crossvalidate stages on a harvested
//! space.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowSpec;
use crate::minimal::CMinSpace;
use crate::stability::{
    classify_hyper_stability, test_minus_stability, test_stability, HyperVerdict, StabilityParams,
    StabilityVerdict,
};
use crate::topology::{
    criterion_dense_scan, crossvalidate, predict_instability, scan_all, ConfusionReport,
    DenseScanReport, Prediction, Scale, TopologyDiagnostic,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyParams {
    pub stability: StabilityParams,
    pub hyper_radius: f64,
    /// Also run the test on the time-reversed flow.
    #[serde(default)]
    pub minus: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Annotations {
    pub verdicts: Vec<StabilityVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minus_verdicts: Option<Vec<StabilityVerdict>>,
    pub hyper: Vec<HyperVerdict>,
}

/// Stability of every record (random stream = record index), then
/// hyper-stability at `hyper_radius`.
pub fn classify_space(
    flow: &FlowSpec,
    space: &CMinSpace,
    params: &ClassifyParams,
) -> Result<Annotations> {
    let verdicts = space
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| test_stability(flow, r, &params.stability, i as u64))
        .collect::<Result<Vec<_>>>()?;
    let minus_verdicts = if params.minus {
        Some(
            space
                .records
                .iter()
                .enumerate()
                .map(|(i, r)| test_minus_stability(flow, r, &params.stability, i as u64))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    let hyper = space
        .records
        .iter()
        .map(|r| classify_hyper_stability(space, &verdicts, &r.id, params.hyper_radius))
        .collect::<Result<Vec<_>>>()?;
    Ok(Annotations {
        verdicts,
        minus_verdicts,
        hyper,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Diagnosis {
    pub scales: Vec<Scale>,
    pub diagnostics: Vec<TopologyDiagnostic>,
    pub predictions: Vec<Prediction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dense_scan: Option<DenseScanReport>,
}

/// Local-connectedness scan at every record, plus the dense criterion when
/// the space has at least ten records.
///
/// Every scale must be at least four net resolutions, below which sample
/// noise decides chaining.
pub fn diagnose_space(
    space: &CMinSpace,
    scales: &[Scale],
    density_radius: Option<f64>,
) -> Result<Diagnosis> {
    let floor = 4.0 * space.resolution;
    if let Some(s) = scales.iter().find(|s| s.delta < floor) {
        return Err(Error::invalid(format!(
            "scale {s:?} is finer than 4 x resolution = {floor}"
        )));
    }
    let (diagnostics, dense_scan) = if space.len() >= 10 {
        let (rep, d) = criterion_dense_scan(space, scales, density_radius)?;
        (d, Some(rep))
    } else {
        warn!(
            "{} records: dense criterion needs at least 10, skipped",
            space.len()
        );
        (scan_all(space, scales)?, None)
    };
    let predictions = diagnostics.iter().map(predict_instability).collect();
    Ok(Diagnosis {
        scales: scales.to_vec(),
        diagnostics,
        predictions,
        dense_scan,
    })
}

pub fn crossvalidate_space(
    space: &CMinSpace,
    ann: &Annotations,
    diag: &Diagnosis,
) -> Result<ConfusionReport> {
    crossvalidate(space, &ann.verdicts, &ann.hyper, &diag.diagnostics)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::cantor_star_space;

    #[test]
    fn scales_below_the_resolution_floor_are_refused() {
        let space = cantor_star_space(1, 0.05, 0.01).unwrap();
        let fine = [Scale {
            epsilon: 0.2,
            delta: 2.0 * space.resolution,
        }];
        assert!(diagnose_space(&space, &fine, None).is_err());
        let ok = [Scale {
            epsilon: 0.4,
            delta: 4.0 * space.resolution,
        }];
        assert!(diagnose_space(&space, &ok, None).is_ok());
    }
}
