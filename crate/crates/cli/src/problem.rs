//! Problem files: schema, parsing and validation.

use std::collections::BTreeMap;
use std::path::Path;

use rno_core::qmath::{c64, CMatrix};
use rno_core::static_measures::RobustnessKind;
use rno_core::{Channel, ChoiNormalization, DensityMatrix, FreeSetModel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const FORMAT_VERSION: u32 = 1;

/// Rows of `[re, im]` pairs.
pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    pub dims: Vec<usize>,
    pub matrix: JsonMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KrausSpec {
    pub in_dims: Vec<usize>,
    pub out_dims: Vec<usize>,
    pub operators: Vec<JsonMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChoiSpec {
    pub in_dims: Vec<usize>,
    pub out_dims: Vec<usize>,
    pub normalization: ChoiNormalization,
    pub matrix: JsonMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ObjectSpec {
    State(StateSpec),
    Kraus(KrausSpec),
    Choi(ChoiSpec),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Solver stopping tolerance.
    #[serde(default)]
    pub solver: Option<f64>,
    #[serde(default)]
    pub max_iter: Option<usize>,
}

fn default_samples() -> usize {
    200
}
fn one() -> usize {
    1
}
fn two() -> usize {
    2
}
fn default_trials() -> usize {
    50
}
fn default_epsilon() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Command {
    Robustness {
        state: String,
    },
    StdRobustness {
        state: String,
    },
    Geometric {
        state: String,
    },
    Transform {
        psi: String,
        sigma: String,
        #[serde(default)]
        tight: bool,
        #[serde(default = "default_samples")]
        samples: usize,
    },
    ChannelRobustness {
        channel: String,
    },
    SmoothChannelRobustness {
        channel: String,
        epsilons: Vec<f64>,
    },
    Diamond {
        first: String,
        second: String,
    },
    Divergence {
        channel: String,
    },
    ErasureSweep {
        ps: Vec<f64>,
        ns: Vec<usize>,
        #[serde(default = "one")]
        pairs: usize,
        #[serde(default = "two")]
        d: usize,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        /// Largest `n` at which the diamond program also runs.
        #[serde(default = "two")]
        diamond_max_n: usize,
    },
    CostBounds {
        state: String,
        ns: Vec<usize>,
        #[serde(default)]
        epsilon: f64,
    },
    DestructionBounds {
        channel: String,
        epsilon: f64,
        eta: f64,
    },
    CapacityBound {
        channel: String,
        theta: f64,
        delta: f64,
        /// When set, the see-saw runs for `m = 2..=max_messages` and a verdict is reported.
        #[serde(default)]
        max_messages: Option<usize>,
    },
    Seesaw {
        channel: String,
        messages: usize,
        #[serde(default = "one")]
        ancilla_dim: usize,
        #[serde(default)]
        rounds: Option<usize>,
    },
    Axioms {
        kind: RobustnessKind,
        #[serde(default = "default_trials")]
        trials: usize,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Robustness { .. } => "robustness",
            Command::StdRobustness { .. } => "std-robustness",
            Command::Geometric { .. } => "geometric",
            Command::Transform { .. } => "transform",
            Command::ChannelRobustness { .. } => "channel-robustness",
            Command::SmoothChannelRobustness { .. } => "smooth-channel-robustness",
            Command::Diamond { .. } => "diamond",
            Command::Divergence { .. } => "divergence",
            Command::ErasureSweep { .. } => "erasure-sweep",
            Command::CostBounds { .. } => "cost-bounds",
            Command::DestructionBounds { .. } => "destruction-bounds",
            Command::CapacityBound { .. } => "capacity-bound",
            Command::Seesaw { .. } => "seesaw",
            Command::Axioms { .. } => "axioms",
        }
    }

    fn state_refs(&self) -> Vec<&str> {
        match self {
            Command::Robustness { state }
            | Command::StdRobustness { state }
            | Command::Geometric { state }
            | Command::CostBounds { state, .. } => vec![state],
            Command::Transform { psi, sigma, .. } => vec![psi, sigma],
            _ => vec![],
        }
    }

    fn channel_refs(&self) -> Vec<&str> {
        match self {
            Command::ChannelRobustness { channel }
            | Command::SmoothChannelRobustness { channel, .. }
            | Command::Divergence { channel }
            | Command::DestructionBounds { channel, .. }
            | Command::CapacityBound { channel, .. }
            | Command::Seesaw { channel, .. } => vec![channel],
            Command::Diamond { first, second } => vec![first, second],
            _ => vec![],
        }
    }

    fn needs_model(&self) -> bool {
        !self.state_refs().is_empty() || matches!(self, Command::Axioms { .. })
    }
}

/// The file as written, before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawProblemFile {
    pub version: u32,
    #[serde(default)]
    pub model: Option<FreeSetModel>,
    #[serde(default)]
    pub objects: BTreeMap<String, ObjectSpec>,
    pub command: Command,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone)]
pub enum Object {
    State(DensityMatrix),
    Channel(Channel),
}

/// A validated problem: every referenced object has passed its type checks.
#[derive(Debug, Clone)]
pub struct ProblemFile {
    pub raw: RawProblemFile,
    pub objects: BTreeMap<String, Object>,
    /// SHA-256 of the file bytes.
    pub file_sha256: String,
    /// SHA-256 of each object's canonical JSON.
    pub object_sha256: BTreeMap<String, String>,
}

impl ProblemFile {
    pub fn command(&self) -> &Command {
        &self.raw.command
    }

    pub fn model(&self) -> Option<&FreeSetModel> {
        self.raw.model.as_ref()
    }

    pub fn state(&self, name: &str) -> &DensityMatrix {
        match &self.objects[name] {
            Object::State(s) => s,
            Object::Channel(_) => unreachable!("checked during validation"),
        }
    }

    pub fn channel(&self, name: &str) -> &Channel {
        match &self.objects[name] {
            Object::Channel(c) => c,
            Object::State(_) => unreachable!("checked during validation"),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

/// Reads and fully validates a problem file.
pub fn parse_problem_file(path: &Path) -> Result<ProblemFile, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_problem_bytes(&bytes)
}

pub fn parse_problem_bytes(bytes: &[u8]) -> Result<ProblemFile, CliError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let raw: RawProblemFile = match serde_path_to_error::deserialize(de) {
        Ok(raw) => raw,
        Err(e) => {
            let pointer = json_pointer(e.path());
            return Err(refine_object_error(bytes, &pointer).unwrap_or(CliError::Parse {
                pointer,
                message: e.inner().to_string(),
            }));
        }
    };
    validate(raw, sha256_hex(bytes))
}

fn body_error<T: serde::de::DeserializeOwned>(value: serde_json::Value, prefix: &str) -> Option<CliError> {
    serde_path_to_error::deserialize::<_, T>(value).err().map(|e| {
        let inner = json_pointer(e.path());
        CliError::Parse {
            pointer: if inner == "/" { prefix.to_string() } else { format!("{prefix}{inner}") },
            message: e.inner().to_string(),
        }
    })
}

/// Tagged objects are buffered before dispatch, which hides the location of
/// errors inside them; re-read the offending object by its tag to recover it.
fn refine_object_error(bytes: &[u8], pointer: &str) -> Option<CliError> {
    let rest = pointer.strip_prefix("/objects/")?;
    let name_end = rest.find('/').unwrap_or(rest.len());
    let prefix = &pointer[..("/objects/".len() + name_end)];
    let root: serde_json::Value = serde_json::from_slice(bytes).ok()?;
    let mut obj = root.pointer(prefix)?.as_object()?.clone();
    let tag = obj.remove("type")?;
    let body = serde_json::Value::Object(obj);
    match tag.as_str()? {
        "state" => body_error::<StateSpec>(body, prefix),
        "kraus" => body_error::<KrausSpec>(body, prefix),
        "choi" => body_error::<ChoiSpec>(body, prefix),
        _ => None,
    }
}

fn to_matrix(name: &str, m: &JsonMatrix) -> Result<CMatrix, CliError> {
    let rows = m.len();
    if rows == 0 {
        return Err(CliError::validation(name, "empty matrix"));
    }
    let cols = m[0].len();
    if m.iter().any(|r| r.len() != cols) {
        return Err(CliError::validation(name, "rows have different lengths"));
    }
    if m.iter().flatten().flatten().any(|x| !x.is_finite()) {
        return Err(CliError::validation(name, "non-finite entry"));
    }
    Ok(CMatrix::from_fn(rows, cols, |i, j| c64(m[i][j][0], m[i][j][1])))
}

/// Converts a matrix to rows of `[re, im]` pairs.
pub fn from_matrix(m: &CMatrix) -> JsonMatrix {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn build_object(name: &str, spec: &ObjectSpec) -> Result<Object, CliError> {
    match spec {
        ObjectSpec::State(StateSpec { dims, matrix }) => {
            let m = to_matrix(name, matrix)?;
            DensityMatrix::new(m, dims.clone()).map(Object::State).map_err(|e| CliError::validation(name, e))
        }
        ObjectSpec::Kraus(KrausSpec {
            in_dims,
            out_dims,
            operators,
        }) => {
            let ks = operators.iter().map(|k| to_matrix(name, k)).collect::<Result<Vec<_>, _>>()?;
            Channel::from_kraus(in_dims.clone(), out_dims.clone(), ks)
                .map(Object::Channel)
                .map_err(|e| CliError::validation(name, e))
        }
        ObjectSpec::Choi(ChoiSpec {
            in_dims,
            out_dims,
            normalization,
            matrix,
        }) => {
            let m = to_matrix(name, matrix)?;
            Channel::from_choi(in_dims.clone(), out_dims.clone(), m, *normalization)
                .map(Object::Channel)
                .map_err(|e| CliError::validation(name, e))
        }
    }
}

fn validate(raw: RawProblemFile, file_sha256: String) -> Result<ProblemFile, CliError> {
    if raw.version != FORMAT_VERSION {
        return Err(CliError::validation("version", format!("unsupported version {}", raw.version)));
    }
    if let Some(m) = &raw.model {
        let rebuilt = match *m {
            FreeSetModel::Incoherent { d } => FreeSetModel::incoherent(d),
            FreeSetModel::SeparablePpt { d_a, d_b } => FreeSetModel::separable_ppt(d_a, d_b),
        };
        rebuilt.map_err(|e| CliError::validation("model", e))?;
    }
    if let Some(t) = raw.tolerances.solver {
        if !(t.is_finite() && t > 0.0) {
            return Err(CliError::validation("tolerances", format!("solver tolerance {t} must be positive")));
        }
    }
    if raw.tolerances.max_iter == Some(0) {
        return Err(CliError::validation("tolerances", "max_iter must be positive"));
    }
    let mut objects = BTreeMap::new();
    let mut object_sha256 = BTreeMap::new();
    for (name, spec) in &raw.objects {
        objects.insert(name.clone(), build_object(name, spec)?);
        let canonical = serde_json::to_vec(spec).map_err(|e| CliError::validation(name, e))?;
        object_sha256.insert(name.clone(), sha256_hex(&canonical));
    }
    let cmd = &raw.command;
    if cmd.needs_model() && raw.model.is_none() {
        return Err(CliError::validation("model", format!("{} needs a model", cmd.name())));
    }
    for name in cmd.state_refs() {
        match objects.get(name) {
            Some(Object::State(s)) => {
                let m = raw.model.as_ref().expect("checked above");
                if s.dims() != m.dims().as_slice() {
                    return Err(CliError::validation(
                        name,
                        format!("dims {:?} do not match the model {:?}", s.dims(), m.dims()),
                    ));
                }
            }
            Some(Object::Channel(_)) => return Err(CliError::validation(name, "expected a state, found a channel")),
            None => return Err(CliError::validation(name, "no such object")),
        }
    }
    for name in cmd.channel_refs() {
        match objects.get(name) {
            Some(Object::Channel(_)) => {}
            Some(Object::State(_)) => return Err(CliError::validation(name, "expected a channel, found a state")),
            None => return Err(CliError::validation(name, "no such object")),
        }
    }
    Ok(ProblemFile {
        raw,
        objects,
        file_sha256,
        object_sha256,
    })
}
