//! Experiment orchestration: configuration, deterministic seeding,
//! record emission (CSV/JSON) and summaries.

pub mod experiments;

use crate::density::Family;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

/// SplitMix64 output function; the basis of all seed derivation.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Replicate/fold seed: chained SplitMix64 mixes of (base, replicate, fold).
/// Fixed so results are reproducible across parallelism and platforms.
pub fn derive_seed(base: u64, replicate: u64, stream: u64) -> u64 {
    let s = splitmix64(base);
    let s = splitmix64(s ^ replicate);
    splitmix64(s ^ stream)
}

/// One emitted measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub experiment: String,
    pub family: String,
    pub n: u64,
    pub n_t: u64,
    #[serde(rename = "V")]
    pub v: u64,
    pub replicate: u64,
    pub statistic: String,
    pub value: f64,
    pub seed: u64,
}

impl ExperimentRecord {
    fn sort_key(&self) -> (String, String, u64, u64, u64, u64, String) {
        (
            self.experiment.clone(),
            self.family.clone(),
            self.n,
            self.n_t,
            self.v,
            self.replicate,
            self.statistic.clone(),
        )
    }
}

/// Normalize record order so emission is independent of scheduling.
pub fn sort_records(records: &mut [ExperimentRecord]) {
    records.sort_by_key(|a| a.sort_key());
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EmitFormat {
    #[default]
    Csv,
    Json,
}

pub const CSV_HEADER: &str = "experiment,family,n,n_t,V,replicate,statistic,value,seed";

/// Records as CSV text: fixed header, floats with 17 significant digits.
pub fn to_csv(records: &[ExperimentRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        debug_assert!(!r.experiment.contains(','));
        debug_assert!(!r.family.contains(','));
        debug_assert!(!r.statistic.contains(','));
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{:.16e},{}\n",
            r.experiment, r.family, r.n, r.n_t, r.v, r.replicate, r.statistic, r.value, r.seed
        ));
    }
    out
}

/// Parse the CSV produced by [`to_csv`].
pub fn from_csv(text: &str) -> Result<Vec<ExperimentRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => {
            return Err(Error::Data(format!("bad CSV header: {other:?}")));
        }
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(Error::Data(format!("line {}: expected 9 fields", i + 2)));
        }
        let parse_u =
            |s: &str, what: &str| -> Result<u64> {
                s.parse()
                    .map_err(|e| Error::Data(format!("line {}: {what}: {e}", i + 2)))
            };
        out.push(ExperimentRecord {
            experiment: f[0].to_string(),
            family: f[1].to_string(),
            n: parse_u(f[2], "n")?,
            n_t: parse_u(f[3], "n_t")?,
            v: parse_u(f[4], "V")?,
            replicate: parse_u(f[5], "replicate")?,
            statistic: f[6].to_string(),
            value: f[7]
                .parse()
                .map_err(|e| Error::Data(format!("line {}: value: {e}", i + 2)))?,
            seed: parse_u(f[8], "seed")?,
        });
    }
    Ok(out)
}

/// Write records to a file in the requested format.
pub fn emit(records: &[ExperimentRecord], format: EmitFormat, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    match format {
        EmitFormat::Csv => file.write_all(to_csv(records).as_bytes())?,
        EmitFormat::Json => {
            serde_json::to_writer(&mut file, records)
                .map_err(|e| Error::Data(format!("json: {e}")))?;
            file.write_all(b"\n")?;
        }
    }
    Ok(())
}

/// Which record fields participate in a summary group key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GroupBy {
    pub experiment: bool,
    pub family: bool,
    pub n: bool,
    pub n_t: bool,
    pub v: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub key: Vec<String>,
    pub mean: f64,
    pub stderr: f64,
    pub count: u64,
}

/// Per-group mean / standard error / count of one statistic.
/// stderr is 0 for singleton groups (visible through count = 1).
pub fn summarize(
    records: &[ExperimentRecord],
    statistic: &str,
    group_by: GroupBy,
) -> Vec<GroupSummary> {
    let mut groups: BTreeMap<Vec<String>, Vec<f64>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.statistic == statistic) {
        let mut key = Vec::new();
        if group_by.experiment {
            key.push(r.experiment.clone());
        }
        if group_by.family {
            key.push(r.family.clone());
        }
        if group_by.n {
            key.push(format!("{}", r.n));
        }
        if group_by.n_t {
            key.push(format!("{}", r.n_t));
        }
        if group_by.v {
            key.push(format!("{}", r.v));
        }
        groups.entry(key).or_default().push(r.value);
    }
    groups
        .into_iter()
        .map(|(key, vals)| {
            let count = vals.len() as u64;
            let mean = vals.iter().sum::<f64>() / count as f64;
            let stderr = if count > 1 {
                let var =
                    vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count as f64 - 1.0);
                (var / count as f64).sqrt()
            } else {
                0.0
            };
            GroupSummary {
                key,
                mean,
                stderr,
                count,
            }
        })
        .collect()
}

/// The experiments the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Unbiasedness,
    VarianceRatio,
    CovMatch,
    ExcessRiskShape,
    ArgminLaw,
    LemmaSweep,
    CouplingCheck,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Unbiasedness => "unbiasedness",
            ExperimentKind::VarianceRatio => "variance_ratio",
            ExperimentKind::CovMatch => "cov_match",
            ExperimentKind::ExcessRiskShape => "excess_risk_shape",
            ExperimentKind::ArgminLaw => "argmin_law",
            ExperimentKind::LemmaSweep => "lemma_sweep",
            ExperimentKind::CouplingCheck => "coupling_check",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "unbiasedness" => ExperimentKind::Unbiasedness,
            "variance_ratio" => ExperimentKind::VarianceRatio,
            "cov_match" => ExperimentKind::CovMatch,
            "excess_risk_shape" => ExperimentKind::ExcessRiskShape,
            "argmin_law" => ExperimentKind::ArgminLaw,
            "lemma_sweep" => ExperimentKind::LemmaSweep,
            "coupling_check" => ExperimentKind::CouplingCheck,
            other => {
                return Err(Error::Config {
                    path: "experiment.name".into(),
                    msg: format!("unknown experiment `{other}`"),
                })
            }
        })
    }
}

/// How n_t is chosen for each n.
#[derive(Debug, Clone, PartialEq)]
pub enum NtRule {
    /// Explicit values, parallel to the n ladder (or one value broadcast).
    Explicit(Vec<u64>),
    /// n_t = n - midpoint of the admissible window for (δ4, δ5).
    WindowMidpoint { delta4: f64, delta5: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsOptions {
    pub c: f64,
    pub u: f64,
}

/// A fully resolved experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub label: String,
    pub family: Family,
    pub n: Vec<u64>,
    pub nt_rule: NtRule,
    pub v: Vec<u64>,
    pub x: f64,
    pub replicates: u64,
    pub base_seed: u64,
    pub k_max: Option<u64>,
    pub training_sets: u64,
    pub path_replicates: u64,
    pub correction: crate::limit::CorrectionMode,
    pub eps: EpsOptions,
    pub output: PathBuf,
    pub format: EmitFormat,
}

impl ExperimentConfig {
    /// Defaults for a named experiment; sizes chosen at desk scale.
    pub fn default_for(kind: ExperimentKind) -> Self {
        let family = match kind {
            ExperimentKind::Unbiasedness
            | ExperimentKind::VarianceRatio
            | ExperimentKind::CovMatch
            | ExperimentKind::ExcessRiskShape
            | ExperimentKind::ArgminLaw => Family::Polynomial {
                exponent: 1.5,
                scale: 0.5,
            },
            _ => Family::Geometric { ratio: 1.0 / 3.0 },
        };
        let (n, nt_rule, v, replicates, x, k_max) = match kind {
            ExperimentKind::Unbiasedness => (
                vec![300],
                NtRule::Explicit(vec![250]),
                vec![1],
                10_000,
                1.0,
                Some(10),
            ),
            ExperimentKind::VarianceRatio => (
                vec![5000],
                NtRule::WindowMidpoint {
                    delta4: 0.2,
                    delta5: 0.05,
                },
                vec![1, 2, 5],
                2000,
                1.0,
                None,
            ),
            ExperimentKind::CovMatch => (
                vec![500, 2000, 8000],
                NtRule::WindowMidpoint {
                    delta4: 0.2,
                    delta5: 0.05,
                },
                vec![1],
                20,
                3.0,
                None,
            ),
            ExperimentKind::ExcessRiskShape => (
                vec![500, 2000, 8000],
                NtRule::WindowMidpoint {
                    delta4: 0.2,
                    delta5: 0.05,
                },
                vec![1],
                200,
                3.0,
                None,
            ),
            ExperimentKind::ArgminLaw => (
                vec![2000],
                NtRule::Explicit(vec![1800]),
                vec![1, 5],
                500,
                3.0,
                None,
            ),
            ExperimentKind::LemmaSweep => {
                (vec![0], NtRule::Explicit(vec![0]), vec![1], 200, 2.0, None)
            }
            ExperimentKind::CouplingCheck => {
                (vec![0], NtRule::Explicit(vec![0]), vec![1], 20, 1.0, None)
            }
        };
        let path_replicates = match kind {
            ExperimentKind::CouplingCheck => 100_000,
            _ => 2000,
        };
        Self {
            kind,
            label: kind.name().to_string(),
            family,
            n,
            nt_rule,
            v,
            x,
            replicates,
            base_seed: 20_260_810,
            k_max,
            training_sets: 20,
            path_replicates,
            correction: crate::limit::CorrectionMode::Lemma,
            eps: EpsOptions { c: 1.0, u: 0.1 },
            output: PathBuf::from(format!("{}.csv", kind.name())),
            format: EmitFormat::Csv,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates < 1 {
            return Err(Error::Config {
                path: "experiment.replicates".into(),
                msg: "must be >= 1".into(),
            });
        }
        if self.n.is_empty() {
            return Err(Error::Config {
                path: "sizes.n".into(),
                msg: "n ladder is empty".into(),
            });
        }
        for (i, &(n, n_t)) in self.resolved_sizes()?.iter().enumerate() {
            let needs_sizes = !matches!(
                self.kind,
                ExperimentKind::LemmaSweep | ExperimentKind::CouplingCheck
            );
            if needs_sizes && (n_t < 1 || n_t + 1 > n) {
                return Err(Error::Config {
                    path: format!("sizes.n_t[{i}]"),
                    msg: format!("need 1 <= n_t <= n-1, got n={n}, n_t={n_t}"),
                });
            }
        }
        if self.v.iter().any(|&v| v < 1) {
            return Err(Error::Config {
                path: "sizes.v".into(),
                msg: "V values must be >= 1".into(),
            });
        }
        Ok(())
    }

    /// The (n, n_t) pairs this run covers.
    pub fn resolved_sizes(&self) -> Result<Vec<(u64, u64)>> {
        match &self.nt_rule {
            NtRule::Explicit(list) => {
                if list.len() == 1 {
                    Ok(self.n.iter().map(|&n| (n, list[0])).collect())
                } else if list.len() == self.n.len() {
                    Ok(self.n.iter().cloned().zip(list.iter().cloned()).collect())
                } else {
                    Err(Error::Config {
                        path: "sizes.n_t".into(),
                        msg: format!(
                            "{} values for an n ladder of {}",
                            list.len(),
                            self.n.len()
                        ),
                    })
                }
            }
            NtRule::WindowMidpoint { delta4, delta5 } => self
                .n
                .iter()
                .map(|&n| {
                    let w = crate::density::nt_window(n, *delta4, *delta5)?;
                    let nv = w.midpoint().ok_or_else(|| Error::Config {
                        path: "sizes".into(),
                        msg: format!("empty n_t window for n = {n}"),
                    })?;
                    Ok((n, n - nv))
                })
                .collect(),
        }
    }
}

// ---- TOML config file schema ----

#[derive(Debug, Deserialize)]
struct RawConfig {
    experiment: RawExperiment,
    family: Option<Family>,
    sizes: Option<RawSizes>,
    options: Option<RawOptions>,
}

#[derive(Debug, Deserialize)]
struct RawExperiment {
    name: String,
    label: Option<String>,
    replicates: Option<u64>,
    base_seed: Option<u64>,
    x: Option<f64>,
    output: Option<String>,
    format: Option<EmitFormat>,
}

#[derive(Debug, Deserialize)]
struct RawSizes {
    n: Option<Vec<u64>>,
    n_t: Option<Vec<u64>>,
    delta4: Option<f64>,
    delta5: Option<f64>,
    v: Option<Vec<u64>>,
}

#[derive(Debug, Deserialize)]
struct RawOptions {
    k_max: Option<u64>,
    training_sets: Option<u64>,
    path_replicates: Option<u64>,
    correction: Option<String>,
    eps_c: Option<f64>,
    eps_u: Option<f64>,
}

/// Parse a TOML experiment config, filling unset fields from the
/// experiment's defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config {
        path: "<toml>".into(),
        msg: e.to_string(),
    })?;
    let kind = ExperimentKind::parse(&raw.experiment.name)?;
    let mut cfg = ExperimentConfig::default_for(kind);
    if let Some(label) = raw.experiment.label {
        cfg.label = label;
    }
    if let Some(r) = raw.experiment.replicates {
        cfg.replicates = r;
    }
    if let Some(s) = raw.experiment.base_seed {
        cfg.base_seed = s;
    }
    if let Some(x) = raw.experiment.x {
        cfg.x = x;
    }
    if let Some(o) = raw.experiment.output {
        cfg.output = PathBuf::from(o);
    }
    if let Some(f) = raw.experiment.format {
        cfg.format = f;
    }
    if let Some(fam) = raw.family {
        cfg.family = fam;
    }
    if let Some(sizes) = raw.sizes {
        if let Some(n) = sizes.n {
            cfg.n = n;
        }
        match (sizes.n_t, sizes.delta4, sizes.delta5) {
            (Some(list), None, None) => cfg.nt_rule = NtRule::Explicit(list),
            (None, Some(d4), Some(d5)) => {
                cfg.nt_rule = NtRule::WindowMidpoint {
                    delta4: d4,
                    delta5: d5,
                }
            }
            (None, None, None) => {}
            _ => {
                return Err(Error::Config {
                    path: "sizes".into(),
                    msg: "give either n_t = [...] or both delta4 and delta5".into(),
                })
            }
        }
        if let Some(v) = sizes.v {
            cfg.v = v;
        }
    }
    if let Some(opt) = raw.options {
        if opt.k_max.is_some() {
            cfg.k_max = opt.k_max;
        }
        if let Some(t) = opt.training_sets {
            cfg.training_sets = t;
        }
        if let Some(p) = opt.path_replicates {
            cfg.path_replicates = p;
        }
        if let Some(c) = opt.correction {
            cfg.correction = match c.as_str() {
                "lemma" => crate::limit::CorrectionMode::Lemma,
                "isotonic" => crate::limit::CorrectionMode::Isotonic,
                other => {
                    return Err(Error::Config {
                        path: "options.correction".into(),
                        msg: format!("unknown mode `{other}` (lemma | isotonic)"),
                    })
                }
            };
        }
        if let Some(c) = opt.eps_c {
            cfg.eps.c = c;
        }
        if let Some(u) = opt.eps_u {
            cfg.eps.u = u;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}
