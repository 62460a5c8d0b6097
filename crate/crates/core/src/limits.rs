//! Numerical ω- and α-limit estimates.

use serde::{Deserialize, Serialize};

use crate::compact::{epsilon_net_prefix, hausdorff_distance, CompactSetSample, SampleFlag};
use crate::error::{Error, Result};
use crate::flow::FlowSpec;
use crate::space::PhasePoint;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitParams {
    pub burn_in: f64,
    pub window: f64,
    pub dt: f64,
    /// Net resolution of the estimate.
    pub net_eps: f64,
}

impl LimitParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.burn_in > 0.0 && self.window > 0.0 && self.dt > 0.0 && self.net_eps > 0.0) {
            return Err(Error::invalid(format!(
                "limit estimate needs positive burn_in, window, dt and net_eps: {self:?}"
            )));
        }
        Ok(())
    }
}

/// An ω-limit estimate together with the last orbit point it was built from.
#[derive(Clone, Debug)]
pub struct LimitEstimate {
    pub net: CompactSetSample,
    /// The orbit point at the end of the window, when it was reached.
    pub last: Option<Vec<f64>>,
    /// `d_H` between the half-window and full-window nets.
    pub drift: f64,
}

/// ε-net of `x^t` for `t ∈ [burn_in, burn_in + window]`.
///
/// Flagged converged when the nets of the first half window and of the whole
/// window are within `net_eps` in `d_H`; escape during burn-in yields an
/// empty sample flagged escaped.
pub fn omega_limit_estimate(
    flow: &FlowSpec,
    x: &PhasePoint,
    params: &LimitParams,
) -> Result<CompactSetSample> {
    Ok(omega_limit_detail(flow, x.coords(), params)?.net)
}

/// α-limit estimate: the ω-limit estimate of the reversed flow.
pub fn alpha_limit_estimate(
    flow: &FlowSpec,
    x: &PhasePoint,
    params: &LimitParams,
) -> Result<CompactSetSample> {
    omega_limit_estimate(&flow.reversed(), x, params)
}

pub(crate) fn omega_limit_detail(
    flow: &FlowSpec,
    x: &[f64],
    params: &LimitParams,
) -> Result<LimitEstimate> {
    params.validate()?;
    flow.space.check(x)?;
    let orbit = flow.orbit_from(x, params.burn_in, params.window, params.dt);
    if orbit.is_empty() {
        return Ok(LimitEstimate {
            net: CompactSetSample::escaped(flow.space.clone(), params.net_eps),
            last: None,
            drift: f64::INFINITY,
        });
    }
    let half = params.burn_in + params.window / 2.0;
    let split = orbit.times.partition_point(|&t| t <= half);
    let (pre, mut full) = epsilon_net_prefix(&flow.space, &orbit.coords, params.net_eps, split)?;
    let drift = hausdorff_distance(&pre, &full)?;
    if orbit.is_truncated() {
        full.flags.insert(SampleFlag::Truncated);
        full.flags.insert(SampleFlag::Escaped);
    } else if drift <= params.net_eps {
        full.flags.insert(SampleFlag::Converged);
    }
    let last = if orbit.is_truncated() {
        None
    } else {
        orbit.last().map(|p| p.to_vec())
    };
    Ok(LimitEstimate {
        net: full,
        last,
        drift,
    })
}
