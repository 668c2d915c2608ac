//! Flat `key = value` experiment configuration.
//!
//! Lines starting with `#` and blank lines are ignored; arrays are comma
//! separated. A topology file named as `file:<path>` is resolved relative to
//! the configuration file's directory. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::estimator::{default_q, AlgorithmParams, InitialEstimate};
use crate::graph::{connectivity_and_diameter, Topology};
use crate::signals::{NoiseKind, NoiseModel};

#[derive(Debug, Clone, PartialEq)]
pub enum TopologySource {
    Ring28Plus,
    Ring,
    Path,
    Complete,
    File(PathBuf),
}

impl TopologySource {
    pub fn build(&self, n: usize) -> Result<Topology> {
        let t = match self {
            TopologySource::Ring28Plus => Topology::ring28plus(),
            TopologySource::Ring => Topology::ring(n)?,
            TopologySource::Path => Topology::path(n)?,
            TopologySource::Complete => Topology::complete(n)?,
            TopologySource::File(p) => Topology::read_edge_list(p)?,
        };
        if t.n() != n {
            return Err(Error::Invalid(format!("topology has {} nodes but n = {n}", t.n())));
        }
        Ok(t)
    }

    fn echo(&self) -> String {
        match self {
            TopologySource::Ring28Plus => "ring28plus".into(),
            TopologySource::Ring => "ring".into(),
            TopologySource::Path => "path".into(),
            TopologySource::Complete => "complete".into(),
            TopologySource::File(p) => format!("file:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RegressorSpec {
    /// Single-direction state-space ensemble with `A = growth I`.
    Example1 { growth: f64, xi_std: f64 },
    IidGaussian { std: f64 },
    /// The same vector at every sensor and step.
    Constant(DVector<f64>),
}

/// Sizes of the random-instance sweeps run by `lemma-check`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSettings {
    pub instances: usize,
    pub window: usize,
    pub max_n: usize,
    pub max_m: usize,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self { instances: 100, window: 30, max_n: 3, max_m: 2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub m: usize,
    pub theta: DVector<f64>,
    pub theta_hat_0: InitialEstimate,
    pub topology: TopologySource,
    pub params: AlgorithmParams,
    pub regressor: RegressorSpec,
    pub noise: NoiseModel,
    pub steps: usize,
    pub runs: usize,
    pub seed: u64,
    /// Number of leading runs whose full trajectories are retained.
    pub keep_trajectories: usize,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    pub outputs: PathBuf,
    pub sweep: SweepSettings,
}

const KEYS: &[&str] = &[
    "n",
    "m",
    "theta",
    "theta_hat_0",
    "topology",
    "mu",
    "nu",
    "q",
    "regressor",
    "regressor_growth",
    "xi_std",
    "regressor_std",
    "regressor_vector",
    "noise",
    "noise_std",
    "noise_epsilon_exponent",
    "steps",
    "runs",
    "seed",
    "keep_trajectories",
    "workers",
    "outputs",
    "sweep_instances",
    "sweep_window",
    "sweep_max_n",
    "sweep_max_m",
];

struct Entries<'a> {
    map: BTreeMap<String, (usize, String)>,
    path: &'a Path,
}

impl Entries<'_> {
    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Config { path: self.path.display().to_string(), line, message: message.into() }
    }

    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.map.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    fn required(&self, key: &str) -> Result<(usize, &str)> {
        self.raw(key).ok_or_else(|| self.err(0, format!("missing required key `{key}`")))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, default: Option<T>) -> Result<T> {
        match self.raw(key) {
            Some((line, v)) => v.parse().map_err(|_| self.err(line, format!("cannot parse `{key}` value `{v}`"))),
            None => default.ok_or_else(|| self.err(0, format!("missing required key `{key}`"))),
        }
    }

    fn vector(&self, key: &str) -> Result<Option<DVector<f64>>> {
        let Some((line, v)) = self.raw(key) else { return Ok(None) };
        let values: std::result::Result<Vec<f64>, _> = v.split(',').map(|s| s.trim().parse::<f64>()).collect();
        let values = values.map_err(|_| self.err(line, format!("cannot parse `{key}` as a comma-separated list")))?;
        if values.iter().any(|x| !x.is_finite()) {
            return Err(self.err(line, format!("`{key}` has a non-finite entry")));
        }
        Ok(Some(DVector::from_vec(values)))
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        Self::parse(&text, path, base)
    }

    /// Parses configuration text; `base` anchors relative topology files.
    pub fn parse(text: &str, origin: &Path, base: &Path) -> Result<Self> {
        let mut entries = Entries { map: BTreeMap::new(), path: origin };
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) =
                content.split_once('=').ok_or_else(|| entries.err(line, format!("expected `key = value`, got `{content}`")))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(entries.err(line, format!("unknown key `{key}`")));
            }
            if entries.map.insert(key.to_string(), (line, value.trim().to_string())).is_some() {
                return Err(entries.err(line, format!("duplicate key `{key}`")));
            }
        }
        let e = &entries;

        let n: usize = e.parse("n", None)?;
        let m: usize = e.parse("m", None)?;
        if n == 0 || m == 0 {
            return Err(e.err(0, "n and m must be at least 1"));
        }
        let theta = e.vector("theta")?.ok_or_else(|| e.err(0, "missing required key `theta`"))?;
        if theta.len() != m {
            return Err(e.err(e.required("theta")?.0, format!("theta has {} entries, expected m = {m}", theta.len())));
        }
        let theta_hat_0 = match e.vector("theta_hat_0")? {
            None => InitialEstimate::Zero,
            Some(v) if v.len() == 1 && v[0] == 0.0 => InitialEstimate::Zero,
            Some(v) if v.len() == m => InitialEstimate::Shared(v),
            Some(v) => {
                return Err(e.err(e.required("theta_hat_0")?.0, format!("theta_hat_0 has {} entries, expected {m}", v.len())))
            }
        };

        let topology = match e.raw("topology") {
            None => return Err(e.err(0, "missing required key `topology`")),
            Some((_, "ring28plus")) => TopologySource::Ring28Plus,
            Some((_, "ring")) => TopologySource::Ring,
            Some((_, "path")) => TopologySource::Path,
            Some((_, "complete")) => TopologySource::Complete,
            Some((line, v)) => match v.strip_prefix("file:") {
                Some(p) if !p.trim().is_empty() => {
                    let p = Path::new(p.trim());
                    TopologySource::File(if p.is_absolute() { p.to_path_buf() } else { base.join(p) })
                }
                _ => return Err(e.err(line, format!("unknown topology `{v}`"))),
            },
        };

        let mu: f64 = e.parse("mu", None)?;
        let nu: f64 = e.parse("nu", None)?;
        let q = match e.raw("q") {
            None | Some((_, "auto")) => None,
            Some(_) => Some(e.parse::<usize>("q", None)?),
        };
        let q = match q {
            Some(q) => q,
            None => {
                let t = topology.build(n)?;
                default_q(connectivity_and_diameter(&t).diameter.ok_or(Error::Disconnected)?)
            }
        };
        let params = AlgorithmParams::new(mu, nu, q)?;

        let regressor = match e.raw("regressor") {
            None | Some((_, "example1")) => RegressorSpec::Example1 {
                growth: e.parse("regressor_growth", Some(1.2))?,
                xi_std: e.parse("xi_std", Some(0.3))?,
            },
            Some((_, "iid")) => RegressorSpec::IidGaussian { std: e.parse("regressor_std", Some(1.0))? },
            Some((line, "constant")) => {
                let v = e.vector("regressor_vector")?.ok_or_else(|| e.err(line, "constant regressor needs `regressor_vector`"))?;
                if v.len() != m {
                    return Err(e.err(line, format!("regressor_vector has {} entries, expected {m}", v.len())));
                }
                RegressorSpec::Constant(v)
            }
            Some((line, v)) => return Err(e.err(line, format!("unknown regressor `{v}`"))),
        };

        let noise_kind = match e.raw("noise") {
            None | Some((_, "gaussian")) => NoiseKind::GaussianIid,
            Some((_, "zero")) => NoiseKind::Zero,
            Some((line, v)) => return Err(e.err(line, format!("unknown noise `{v}`"))),
        };
        let noise = match noise_kind {
            NoiseKind::Zero => NoiseModel::zero(),
            NoiseKind::GaussianIid => NoiseModel::new(
                NoiseKind::GaussianIid,
                e.parse("noise_std", Some(1.2))?,
                e.parse("noise_epsilon_exponent", Some(0.0))?,
            )?,
        };

        let steps: usize = e.parse("steps", Some(600))?;
        let runs: usize = e.parse("runs", Some(100))?;
        if steps == 0 || runs == 0 {
            return Err(e.err(0, "steps and runs must be at least 1"));
        }
        let sweep = SweepSettings {
            instances: e.parse("sweep_instances", Some(SweepSettings::default().instances))?,
            window: e.parse("sweep_window", Some(SweepSettings::default().window))?,
            max_n: e.parse("sweep_max_n", Some(SweepSettings::default().max_n))?,
            max_m: e.parse("sweep_max_m", Some(SweepSettings::default().max_m))?,
        };
        if sweep.instances == 0 || sweep.window == 0 || sweep.max_n == 0 || sweep.max_m == 0 {
            return Err(e.err(0, "sweep sizes must be at least 1"));
        }

        Ok(Self {
            n,
            m,
            theta,
            theta_hat_0,
            topology,
            params,
            regressor,
            noise,
            steps,
            runs,
            seed: e.parse("seed", Some(1))?,
            keep_trajectories: e.parse("keep_trajectories", Some(1))?,
            workers: e.parse("workers", Some(0))?,
            outputs: PathBuf::from(e.parse::<String>("outputs", Some("out".into()))?),
            sweep,
        })
    }

    /// Fully resolved configuration text that parses back to `self`.
    pub fn echo(&self) -> String {
        let list = |v: &DVector<f64>| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("n", self.n.to_string());
        kv("m", self.m.to_string());
        kv("theta", list(&self.theta));
        match &self.theta_hat_0 {
            InitialEstimate::Shared(v) => kv("theta_hat_0", list(v)),
            _ => kv("theta_hat_0", "0".into()),
        }
        kv("topology", self.topology.echo());
        kv("mu", format!("{:?}", self.params.mu));
        kv("nu", format!("{:?}", self.params.nu));
        kv("q", self.params.q.to_string());
        match &self.regressor {
            RegressorSpec::Example1 { growth, xi_std } => {
                kv("regressor", "example1".into());
                kv("regressor_growth", format!("{growth:?}"));
                kv("xi_std", format!("{xi_std:?}"));
            }
            RegressorSpec::IidGaussian { std } => {
                kv("regressor", "iid".into());
                kv("regressor_std", format!("{std:?}"));
            }
            RegressorSpec::Constant(v) => {
                kv("regressor", "constant".into());
                kv("regressor_vector", list(v));
            }
        }
        match self.noise.kind {
            NoiseKind::Zero => kv("noise", "zero".into()),
            NoiseKind::GaussianIid => {
                kv("noise", "gaussian".into());
                kv("noise_std", format!("{:?}", self.noise.std));
                kv("noise_epsilon_exponent", format!("{:?}", self.noise.epsilon_exponent));
            }
        }
        kv("steps", self.steps.to_string());
        kv("runs", self.runs.to_string());
        kv("seed", self.seed.to_string());
        kv("keep_trajectories", self.keep_trajectories.to_string());
        kv("workers", self.workers.to_string());
        kv("outputs", self.outputs.display().to_string());
        kv("sweep_instances", self.sweep.instances.to_string());
        kv("sweep_window", self.sweep.window.to_string());
        kv("sweep_max_n", self.sweep.max_n.to_string());
        kv("sweep_max_m", self.sweep.max_m.to_string());
        s
    }

    /// Example 1 defaults on the 28-node stand-in topology.
    pub fn example1() -> Self {
        let text = "n = 28\nm = 10\ntheta = 1,2,3,4,5,6,7,8,9,10\ntopology = ring28plus\nmu = 0.25\nnu = 0.7\n";
        Self::parse(text, Path::new("<example1>"), Path::new("")).expect("built-in configuration is valid")
    }
}
