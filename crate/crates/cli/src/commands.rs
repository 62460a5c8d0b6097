use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use cmin_core::flows::LambdaSpec;
use cmin_core::gallery::{all_entries, entries_named, run_entries, GalleryReport, ENTRY_NAMES};
use cmin_core::pipeline::{
    classify_space, crossvalidate_space, diagnose_space, Annotations, Diagnosis,
};
use cmin_core::topology::epsilon_components;
use cmin_core::{CMinSpace, ComponentDecomposition, ConfusionReport, PhasePoint, Scale};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::artifact::{read_document, write_atomic, write_document, Document};
use crate::config::{digest_of, resolve, set_path, RunConfig};
use crate::RunFlags;

pub const SPACE_KIND: &str = "cmin-space";
pub const CLASSIFIED_KIND: &str = "classified-space";
pub const DIAGNOSTICS_KIND: &str = "diagnostics";
pub const CONFUSION_KIND: &str = "confusion-report";
pub const GALLERY_KIND: &str = "gallery-report";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarvestBody {
    pub config: RunConfig,
    pub space: CMinSpace,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifiedBody {
    pub config: RunConfig,
    pub space_digest: String,
    pub space: CMinSpace,
    pub annotations: Annotations,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsBody {
    pub config: RunConfig,
    pub space_digest: String,
    pub records: Vec<String>,
    pub diagnosis: Diagnosis,
    /// Chain components of the whole space at twice the mesh.
    pub components: ComponentDecomposition,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfusionBody {
    pub space_digest: String,
    pub report: ConfusionReport,
}

fn parse_lambda(s: &str) -> Result<LambdaSpec> {
    Ok(match s {
        "golden" => LambdaSpec::Golden,
        "identity" => LambdaSpec::Identity,
        _ => match s.split_once('/') {
            Some((p, q)) => {
                let (p, q): (i64, i64) = (p.trim().parse()?, q.trim().parse()?);
                if q == 0 {
                    bail!("λ denominator must be nonzero");
                }
                LambdaSpec::Rational { p, q }
            }
            None => LambdaSpec::Constant {
                value: s.parse().with_context(|| format!("unrecognized λ `{s}`"))?,
            },
        },
    })
}

/// Flags as a config overlay.
fn flag_table(f: &RunFlags) -> Result<Table> {
    let mut t = Table::new();
    let mut put = |path: &str, v: Option<Value>| {
        if let Some(v) = v {
            set_path(&mut t, path, v);
        }
    };
    let float = |x: Option<f64>| x.map(Value::Float);
    let int = |x: Option<u64>| -> Result<Option<Value>> {
        x.map(|v| {
            i64::try_from(v)
                .map(Value::Integer)
                .map_err(|_| anyhow!("{v} is too large"))
        })
        .transpose()
    };
    put("flow", f.flow.clone().map(Value::String));
    if let Some(l) = &f.lambda {
        put("options.lambda", Some(Value::try_from(parse_lambda(l)?)?));
    }
    put("options.rings", int(f.rings.map(|v| v as u64))?);
    put("options.sphere_dim", int(f.sphere_dim.map(|v| v as u64))?);
    put("integrator.rtol", float(f.rtol));
    put("integrator.atol", float(f.atol));
    put("params.harvest.detect.resolution", float(f.resolution));
    put("params.harvest.detect.burn_in", float(f.burn_in));
    put("params.harvest.detect.window", float(f.window));
    put("params.harvest.detect.dt", float(f.dt));
    put("params.harvest.dedup_eps", float(f.dedup_eps));
    put("params.harvest.mesh", float(f.mesh));
    put(
        "params.classify.stability.radii",
        f.radii
            .as_ref()
            .map(|r| Value::Array(r.iter().map(|&x| Value::Float(x)).collect())),
    );
    put("params.classify.stability.kappa", float(f.kappa));
    put("params.classify.stability.horizon", float(f.horizon));
    put(
        "params.classify.stability.shell_samples",
        int(f.shell_samples.map(|v| v as u64))?,
    );
    put("params.classify.stability.seed", int(f.seed)?);
    put("params.classify.hyper_radius", float(f.hyper_radius));
    if let Some(sc) = &f.scales {
        let scales = sc
            .iter()
            .map(|s| {
                let (e, d) = s
                    .split_once(':')
                    .ok_or_else(|| anyhow!("scale `{s}` is not of the form eps:delta"))?;
                Ok(Scale {
                    epsilon: e.trim().parse()?,
                    delta: d.trim().parse()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        put("params.scales", Some(Value::try_from(scales)?));
    }
    put(
        "output_dir",
        f.out
            .as_ref()
            .map(|p| Value::String(p.to_string_lossy().into_owned())),
    );
    Ok(t)
}

fn resolve_flags(base: Option<&RunConfig>, flags: &RunFlags) -> Result<RunConfig> {
    resolve(base, flag_table(flags)?, flags.config.as_deref())
}

fn read_space(path: &Path) -> Result<(RunConfig, CMinSpace)> {
    let doc: Document<HarvestBody> = read_document(path, SPACE_KIND)?;
    let b = doc.body;
    Ok((b.config, b.space))
}

pub fn harvest(flags: &RunFlags) -> Result<bool> {
    let cfg = resolve_flags(None, flags)?;
    let entry = cfg.entry()?;
    let space = cmin_core::harvest_cmin(&entry.flow, &entry.params.seeds, &entry.params.harvest)?;
    let dir = &cfg.output_dir;
    let digest = cfg.digest();
    let mut csv = vec![];
    space.write_dmatrix_csv(&mut csv)?;
    write_atomic(&dir.join("dmatrix.csv"), &csv)?;
    write_atomic(&dir.join("run-config.toml"), cfg.to_toml()?.as_bytes())?;
    let n = space.len();
    let rejected = space.rejected.len();
    let path = dir.join("cmin.json");
    write_document(
        &path,
        &Document::new(SPACE_KIND, &digest, HarvestBody { config: cfg, space }),
    )?;
    println!(
        "{n} records ({rejected} seeds rejected) -> {}",
        path.display()
    );
    Ok(true)
}

fn check_flow(cfg: &RunConfig, space: &CMinSpace) -> Result<cmin_core::gallery::GalleryEntry> {
    let entry = cfg.entry()?;
    if entry.flow.name != space.flow {
        bail!(
            "space was harvested from `{}` but the config selects `{}`",
            space.flow,
            entry.flow.name
        );
    }
    Ok(entry)
}

pub fn classify(space_path: &Path, flags: &RunFlags) -> Result<bool> {
    let (base, space) = read_space(space_path)?;
    let cfg = resolve_flags(Some(&base), flags)?;
    let entry = check_flow(&cfg, &space)?;
    let annotations = classify_space(&entry.flow, &space, &cfg.params.classify)?;
    let path = cfg.output_dir.join("classified.json");
    for (v, r) in annotations.verdicts.iter().zip(&space.records) {
        log::info!("{} {:?}", r.id, v.kind);
    }
    let body = ClassifiedBody {
        space_digest: digest_of(&space),
        config: cfg.clone(),
        space,
        annotations,
    };
    write_document(&path, &Document::new(CLASSIFIED_KIND, &cfg.digest(), body))?;
    println!("classified -> {}", path.display());
    Ok(true)
}

pub fn diagnose(space_path: &Path, flags: &RunFlags) -> Result<bool> {
    let (base, space) = read_space(space_path)?;
    let cfg = resolve_flags(Some(&base), flags)?;
    let diagnosis = diagnose_space(&space, &cfg.params.scales(), cfg.params.density_radius)?;
    let components = epsilon_components(&space, 2.0 * space.mesh)?;
    let dir = &cfg.output_dir;
    let mut csv = String::from("record,component\n");
    for (id, label) in components.labels() {
        csv.push_str(&format!("{id},{label}\n"));
    }
    write_atomic(&dir.join("components.csv"), csv.as_bytes())?;
    let path = dir.join("diagnostics.json");
    let fires = diagnosis.predictions.iter().filter(|p| p.fires).count();
    let body = DiagnosticsBody {
        space_digest: digest_of(&space),
        records: space.ids().into_iter().map(String::from).collect(),
        config: cfg.clone(),
        diagnosis,
        components,
    };
    write_document(&path, &Document::new(DIAGNOSTICS_KIND, &cfg.digest(), body))?;
    println!(
        "{fires} of {} records predicted unstable -> {}",
        space.len(),
        path.display()
    );
    Ok(true)
}

pub fn crossvalidate(classified: &Path, diagnosed: &Path, out: Option<&Path>) -> Result<bool> {
    let c: Document<ClassifiedBody> = read_document(classified, CLASSIFIED_KIND)?;
    let d: Document<DiagnosticsBody> = read_document(diagnosed, DIAGNOSTICS_KIND)?;
    if c.body.space_digest != d.body.space_digest {
        bail!("classified and diagnosed files describe different spaces");
    }
    let report = crossvalidate_space(&c.body.space, &c.body.annotations, &d.body.diagnosis)?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| {
        classified
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default()
    });
    let digest = digest_of(&(&c.header.config_digest, &d.header.config_digest));
    let text = report.to_string();
    write_atomic(&dir.join("confusion.txt"), text.as_bytes())?;
    let body = ConfusionBody {
        space_digest: c.body.space_digest,
        report,
    };
    write_document(
        &dir.join("confusion.json"),
        &Document::new(CONFUSION_KIND, &digest, body),
    )?;
    print!("{text}");
    Ok(true)
}

pub fn gallery_list() -> Result<bool> {
    for e in all_entries() {
        println!(
            "{:<22} {:>3} seeds  {} expectations",
            e.name,
            e.params.seeds.len(),
            e.expected.len()
        );
    }
    println!("run by name: {}", ENTRY_NAMES.join(", "));
    Ok(true)
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect::<String>()
        .trim_end_matches('_')
        .to_string()
}

pub fn gallery_run(name: Option<&str>, all: bool, out: Option<&Path>) -> Result<bool> {
    let entries = match (name, all) {
        (_, true) => all_entries(),
        (Some(n), false) => entries_named(n)?,
        (None, false) => bail!("name an entry or pass --all"),
    };
    let dir = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("cmin-out/gallery"));
    let mut ok = true;
    let mut summary: Vec<GalleryReport> = vec![];
    for (entry, res) in entries.iter().zip(run_entries(&entries)) {
        let (report, _) = res.with_context(|| format!("running {}", entry.name))?;
        println!(
            "{}: {}/{} pass",
            report.entry,
            report.pass_count(),
            report.results.len()
        );
        for r in &report.results {
            println!(
                "  [{}] {} ({})",
                if r.passed { "pass" } else { "FAIL" },
                r.id,
                r.detail
            );
        }
        ok &= report.passed;
        let digest = digest_of(&(&entry.name, &entry.params));
        write_document(
            &dir.join(format!("{}.json", file_stem(&entry.name))),
            &Document::new(GALLERY_KIND, &digest, &report),
        )?;
        summary.push(report);
    }
    let digest = digest_of(&summary.iter().map(|r| &r.entry).collect::<Vec<_>>());
    write_document(
        &dir.join("summary.json"),
        &Document::new("gallery-summary", &digest, &summary),
    )?;
    println!(
        "{}",
        if ok {
            "all expectations pass"
        } else {
            "some expectations failed"
        }
    );
    Ok(ok)
}

pub fn orbit(
    point: &[f64],
    span: f64,
    step: f64,
    output: Option<&Path>,
    flags: &RunFlags,
) -> Result<bool> {
    let cfg = resolve_flags(None, flags)?;
    let entry = cfg.entry()?;
    let sample = entry
        .flow
        .orbit_sample(&PhasePoint::new(point.to_vec()), span, step)?;
    match output {
        Some(p) => {
            let mut buf = vec![];
            sample.write_csv(&mut buf)?;
            write_atomic(p, &buf)?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            sample.write_csv(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(true)
}

pub fn dmatrix(space_path: &Path, output: Option<&Path>) -> Result<bool> {
    let (_, space) = read_space(space_path)?;
    let mut buf = vec![];
    space.write_dmatrix_csv(&mut buf)?;
    match output {
        Some(p) => write_atomic(p, &buf)?,
        None => std::io::stdout().write_all(&buf)?,
    }
    Ok(true)
}
