//! Topological diagnostics on the finite metric space `[CMin, d_H]`.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minimal::{CMinSpace, DistanceMatrix};
use crate::stability::{HyperKind, HyperVerdict, StabilityVerdict};

/// Disjoint-set forest whose roots are always the smallest member.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    pub fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Chain classes of `members` (indices into `dm`) at step `eps`, as lists of
/// positions into `members`, ordered by smallest member.
fn chain_classes(dm: &DistanceMatrix, members: &[usize], eps: f64) -> Vec<Vec<usize>> {
    let n = members.len();
    let mut uf = UnionFind::new(n);
    for a in 0..n {
        for b in (a + 1)..n {
            if dm.get(members[a], members[b]) <= eps {
                uf.union(a, b);
            }
        }
    }
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = uf.find(i);
        if slot[r] == usize::MAX {
            slot[r] = classes.len();
            classes.push(vec![]);
        }
        classes[slot[r]].push(i);
    }
    classes
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentDecomposition {
    pub epsilon: f64,
    /// Record ids per class; each class is labelled by its first id.
    pub classes: Vec<Vec<String>>,
}

impl ComponentDecomposition {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Class label (first id) of every listed record.
    pub fn labels(&self) -> Vec<(String, String)> {
        self.classes
            .iter()
            .flat_map(|c| c.iter().map(move |id| (id.clone(), c[0].clone())))
            .collect()
    }
}

/// `eps`-chain components of the whole space.
pub fn epsilon_components(space: &CMinSpace, eps: f64) -> Result<ComponentDecomposition> {
    let all: Vec<usize> = (0..space.len()).collect();
    epsilon_components_of(space, &all, eps)
}

/// `eps`-chain components of the subspace formed by `members`.
pub fn epsilon_components_of(
    space: &CMinSpace,
    members: &[usize],
    eps: f64,
) -> Result<ComponentDecomposition> {
    if !(eps > 0.0) {
        return Err(Error::invalid(format!(
            "component scale must be positive, got {eps}"
        )));
    }
    let classes = chain_classes(&space.dmatrix, members, eps)
        .into_iter()
        .map(|c| {
            c.into_iter()
                .map(|i| space.records[members[i]].id.clone())
                .collect()
        })
        .collect();
    Ok(ComponentDecomposition {
        epsilon: eps,
        classes,
    })
}

/// Smallest gap `d_H` between records of different classes.
pub fn component_separation(
    space: &CMinSpace,
    decomposition: &ComponentDecomposition,
) -> Result<f64> {
    let mut label = vec![usize::MAX; space.len()];
    for (c, ids) in decomposition.classes.iter().enumerate() {
        for id in ids {
            label[space.index_of(id)?] = c;
        }
    }
    let mut best = f64::INFINITY;
    for i in 0..space.len() {
        for j in 0..i {
            if label[i] != usize::MAX && label[j] != usize::MAX && label[i] != label[j] {
                best = best.min(space.dmatrix.get(i, j));
            }
        }
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scale {
    pub epsilon: f64,
    pub delta: f64,
}

/// `ε ∈ {8, 16, 32}·mesh` with `δ = ε/4` and `ε/8`.
pub fn default_scales(mesh: f64) -> Vec<Scale> {
    [8.0, 16.0, 32.0]
        .iter()
        .flat_map(|m| {
            let e = m * mesh;
            [
                Scale {
                    epsilon: e,
                    delta: e / 4.0,
                },
                Scale {
                    epsilon: e,
                    delta: e / 8.0,
                },
            ]
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LcVerdict {
    LcAtAllScales,
    NotLc,
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyDiagnostic {
    pub record: String,
    pub scales: Vec<Scale>,
    /// Per scale; `None` where the ε-ball holds fewer than three records.
    pub locally_connected: Vec<Option<bool>>,
    pub components_in_ball: Vec<usize>,
    pub verdict: LcVerdict,
}

/// Local-connectedness proxy at `Λ`.
///
/// At scale `(ε, δ)` the records within `ε` of `Λ` are split into
/// `δ`-chain classes; the scale passes iff `Λ`'s class holds every record
/// within `ε/2`. `Λ` is not locally connected when, for some `ε`, two
/// successive finer `δ` both fail.
pub fn local_connectedness_scan(
    space: &CMinSpace,
    id: &str,
    scales: &[Scale],
) -> Result<TopologyDiagnostic> {
    for s in scales {
        if !(s.delta > 0.0 && s.delta < s.epsilon) {
            return Err(Error::invalid(format!("need 0 < δ < ε, got {s:?}")));
        }
    }
    let li = space.index_of(id)?;
    let dm = &space.dmatrix;
    let mut lc = Vec::with_capacity(scales.len());
    let mut comps = Vec::with_capacity(scales.len());
    for s in scales {
        let ball: Vec<usize> = (0..space.len())
            .filter(|&j| dm.get(li, j) <= s.epsilon)
            .collect();
        let classes = chain_classes(dm, &ball, s.delta);
        comps.push(classes.len());
        if ball.len() < 3 {
            lc.push(None);
            continue;
        }
        let own = classes
            .iter()
            .find(|c| c.iter().any(|&p| ball[p] == li))
            .expect("Λ lies in its own ball");
        let covered = ball
            .iter()
            .enumerate()
            .filter(|&(_, &j)| dm.get(li, j) <= s.epsilon / 2.0)
            .all(|(p, _)| own.contains(&p));
        lc.push(Some(covered));
    }
    let mut not_lc = false;
    for i in 1..scales.len() {
        let same_eps =
            scales[i].epsilon == scales[i - 1].epsilon && scales[i].delta < scales[i - 1].delta;
        if same_eps && lc[i] == Some(false) && lc[i - 1] == Some(false) {
            not_lc = true;
        }
    }
    let verdict = if not_lc {
        LcVerdict::NotLc
    } else if !lc.is_empty() && lc.iter().all(|v| *v == Some(true)) {
        LcVerdict::LcAtAllScales
    } else {
        LcVerdict::Undetermined
    };
    Ok(TopologyDiagnostic {
        record: id.to_string(),
        scales: scales.to_vec(),
        locally_connected: lc,
        components_in_ball: comps,
        verdict,
    })
}

/// Scan every record, in parallel, in record order.
pub fn scan_all(space: &CMinSpace, scales: &[Scale]) -> Result<Vec<TopologyDiagnostic>> {
    space
        .records
        .par_iter()
        .map(|r| local_connectedness_scan(space, &r.id, scales))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prediction {
    pub record: String,
    /// Unstable minimal sets are predicted in every neighbourhood.
    pub fires: bool,
}

/// Not locally connected predicts unstable minimal sets near `Λ`; anything
/// else predicts nothing.
pub fn predict_instability(diag: &TopologyDiagnostic) -> Prediction {
    Prediction {
        record: diag.record.clone(),
        fires: diag.verdict == LcVerdict::NotLc,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenseScanReport {
    pub records: usize,
    pub not_lc: Vec<String>,
    pub density_radius: f64,
    /// Every record lies within `density_radius` of a not-lc record.
    pub dense: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub statement: Option<String>,
}

pub const DENSE_STATEMENT: &str =
    "every neighbourhood of each compact minimal set contains unstable compact minimal sets";

/// Global criterion: not-lc records that are dense in the space.
///
/// The density radius defaults to the smallest tested `ε`.
pub fn criterion_dense_scan(
    space: &CMinSpace,
    scales: &[Scale],
    density_radius: Option<f64>,
) -> Result<(DenseScanReport, Vec<TopologyDiagnostic>)> {
    if space.len() < 10 {
        return Err(Error::invalid(format!(
            "dense scan needs at least 10 records, space has {}",
            space.len()
        )));
    }
    let radius = density_radius
        .or_else(|| scales.iter().map(|s| s.epsilon).reduce(f64::min))
        .ok_or_else(|| Error::invalid("no scales given"))?;
    let diags = scan_all(space, scales)?;
    let flagged: Vec<usize> = diags
        .iter()
        .enumerate()
        .filter(|(_, d)| d.verdict == LcVerdict::NotLc)
        .map(|(i, _)| i)
        .collect();
    let dense = !flagged.is_empty()
        && (0..space.len()).all(|i| flagged.iter().any(|&j| space.dmatrix.get(i, j) <= radius));
    let report = DenseScanReport {
        records: space.len(),
        not_lc: flagged
            .iter()
            .map(|&i| space.records[i].id.clone())
            .collect(),
        density_radius: radius,
        dense,
        statement: dense.then(|| DENSE_STATEMENT.to_string()),
    };
    Ok((report, diags))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FalsePositive {
    pub record: String,
    /// Scales at which the local-connectedness proxy failed.
    pub scales_at_fault: Vec<Scale>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfusionReport {
    pub true_positives: usize,
    /// True positives at records that are themselves stable at scale.
    pub nontrivial_true_positives: usize,
    pub false_positives: usize,
    pub predicted_undetermined: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
    pub silent_undetermined: usize,
    pub predicted: Vec<String>,
    pub confirmed_members: Vec<String>,
    pub false_positive_detail: Vec<FalsePositive>,
}

/// Topological prediction against dynamical confirmation, per record.
///
/// All slices are indexed like `space.records`.
pub fn crossvalidate(
    space: &CMinSpace,
    verdicts: &[StabilityVerdict],
    hyper: &[HyperVerdict],
    diagnostics: &[TopologyDiagnostic],
) -> Result<ConfusionReport> {
    let n = space.len();
    if verdicts.len() != n || hyper.len() != n || diagnostics.len() != n {
        return Err(Error::invalid(
            "verdicts, hyper-verdicts and diagnostics must cover every record",
        ));
    }
    let mut rep = ConfusionReport::default();
    for i in 0..n {
        let id = &space.records[i].id;
        if &hyper[i].record != id || &diagnostics[i].record != id {
            return Err(Error::invalid(format!(
                "annotations out of order at record {id}"
            )));
        }
        let fires = predict_instability(&diagnostics[i]).fires;
        let member = hyper[i].kind;
        if member == HyperKind::ClosureMember {
            rep.confirmed_members.push(id.clone());
        }
        match (fires, member) {
            (true, HyperKind::ClosureMember) => {
                rep.true_positives += 1;
                if verdicts[i].is_stable() {
                    rep.nontrivial_true_positives += 1;
                }
            }
            (true, HyperKind::HyperStableAtScale) => {
                rep.false_positives += 1;
                let d = &diagnostics[i];
                rep.false_positive_detail.push(FalsePositive {
                    record: id.clone(),
                    scales_at_fault: d
                        .scales
                        .iter()
                        .zip(&d.locally_connected)
                        .filter(|(_, v)| **v == Some(false))
                        .map(|(s, _)| *s)
                        .collect(),
                });
            }
            (true, HyperKind::Undetermined) => rep.predicted_undetermined += 1,
            (false, HyperKind::ClosureMember) => rep.false_negatives += 1,
            (false, HyperKind::HyperStableAtScale) => rep.true_negatives += 1,
            (false, HyperKind::Undetermined) => rep.silent_undetermined += 1,
        }
        if fires {
            rep.predicted.push(id.clone());
        }
    }
    Ok(rep)
}

impl fmt::Display for ConfusionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "                    cl_H(U)-member  hyper-stable  undetermined"
        )?;
        writeln!(
            f,
            "predicted unstable  {:>14}  {:>12}  {:>12}",
            self.true_positives, self.false_positives, self.predicted_undetermined
        )?;
        writeln!(
            f,
            "no prediction       {:>14}  {:>12}  {:>12}",
            self.false_negatives, self.true_negatives, self.silent_undetermined
        )?;
        writeln!(
            f,
            "{} true positive(s) ({} at stable records), {} false positive(s)",
            self.true_positives, self.nontrivial_true_positives, self.false_positives
        )?;
        for fp in &self.false_positive_detail {
            writeln!(
                f,
                "  resolution artifact at {}: failing scales {:?}",
                fp.record, fp.scales_at_fault
            )?;
        }
        Ok(())
    }
}
