use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, ValueEnum};
use gibbs_spectral::graph::{load_edge_list, LoadedGraph};
use gibbs_spectral::{Error, GibbsSpec};
use sha2::{Digest, Sha256};

/// Failure classes, one per nonzero exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Resource(String),
    Violation(String),
}

impl Failure {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Failure::Usage(_) => 2,
            Failure::Resource(_) => 4,
            Failure::Violation(_) => 5,
        })
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Resource(m) => write!(f, "{m}"),
            Failure::Violation(m) => write!(f, "violation: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Resource { .. } => Failure::Resource(e.to_string()),
            Error::Convergence(_) => Failure::Violation(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(format!("io: {e}"))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Violation(format!("serialization: {e}"))
    }
}

pub type CliResult<T> = Result<T, Failure>;

pub fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Failure::Usage(msg.into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelName {
    Hardcore,
    Ising,
}

#[derive(Args, Clone, Debug)]
pub struct ModelArgs {
    /// Shorthand model; without it --beta, --gamma and --lambda are all required.
    #[arg(long, value_enum)]
    pub model: Option<ModelName>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// External field (defaults to 1 for the Ising shorthand).
    #[arg(long)]
    pub lambda: Option<f64>,
}

impl ModelArgs {
    pub fn spec(&self) -> CliResult<GibbsSpec> {
        let spec = match self.model {
            Some(ModelName::Hardcore) => {
                if self.beta.is_some() || self.gamma.is_some() {
                    return usage("--model hardcore fixes beta=0 and gamma=1; pass only --lambda");
                }
                let Some(l) = self.lambda else {
                    return usage("--model hardcore needs --lambda");
                };
                GibbsSpec::hard_core(l)
            }
            Some(ModelName::Ising) => {
                if self.gamma.is_some() {
                    return usage("--model ising sets gamma=beta; pass only --beta and --lambda");
                }
                let Some(b) = self.beta else {
                    return usage("--model ising needs --beta");
                };
                GibbsSpec::ising(b, self.lambda.unwrap_or(1.0))
            }
            None => match (self.beta, self.gamma, self.lambda) {
                (Some(b), Some(g), Some(l)) => GibbsSpec::new(b, g, l),
                _ => return usage("give --model, or all of --beta, --gamma and --lambda"),
            },
        };
        Ok(spec?)
    }
}

/// Canonical flag record hashed into every artifact.
pub struct Provenance {
    fields: BTreeMap<&'static str, String>,
}

impl Provenance {
    pub fn new(command: &str) -> Self {
        let mut fields = BTreeMap::new();
        fields.insert("command", command.to_string());
        Provenance { fields }
    }

    pub fn set(&mut self, key: &'static str, value: impl ToString) -> &mut Self {
        self.fields.insert(key, value.to_string());
        self
    }

    pub fn spec(&mut self, spec: &GibbsSpec) -> &mut Self {
        self.set("beta", spec.beta()).set("gamma", spec.gamma()).set("lambda", spec.lambda())
    }

    pub fn file(&mut self, key: &'static str, path: &Path) -> CliResult<&mut Self> {
        let bytes = std::fs::read(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        Ok(self.set(key, hex::encode(Sha256::digest(&bytes))))
    }

    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in &self.fields {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }
}

#[derive(Args, Clone, Debug)]
pub struct GraphArgs {
    /// Edge-list file: header "n m", then one "u v" pair per line.
    #[arg(long)]
    pub graph: PathBuf,
}

impl GraphArgs {
    pub fn load(&self, prov: &mut Provenance) -> CliResult<LoadedGraph> {
        let loaded = load_edge_list(&self.graph).map_err(|e| match e {
            Error::Io(io) => Failure::Usage(format!("{}: {io}", self.graph.display())),
            other => Failure::Usage(format!("{}: {other}", self.graph.display())),
        })?;
        prov.file("graph_sha256", &self.graph)?;
        Ok(loaded)
    }
}

/// Writes `content` to `out`, or to standard output when absent.
pub fn emit(out: Option<&Path>, content: &str) -> CliResult<()> {
    match out {
        Some(p) => std::fs::write(p, content).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}
