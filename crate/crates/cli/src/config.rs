//! Batch job description, one per invocation.

use std::f64::consts::PI;
use std::path::PathBuf;

use planar_ising::continuum::{Discretization, Quantity};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Partition,
    Spin,
    Disorder,
    Mixed,
    Fermion,
    Energy,
    SholoCheck,
    Diagonal,
    Opuc,
    Theta,
    Converge,
    OracleVerify,
}

impl Command {
    pub const ALL: [Command; 12] = [
        Command::Partition,
        Command::Spin,
        Command::Disorder,
        Command::Mixed,
        Command::Fermion,
        Command::Energy,
        Command::SholoCheck,
        Command::Diagonal,
        Command::Opuc,
        Command::Theta,
        Command::Converge,
        Command::OracleVerify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Partition => "partition",
            Command::Spin => "spin",
            Command::Disorder => "disorder",
            Command::Mixed => "mixed",
            Command::Fermion => "fermion",
            Command::Energy => "energy",
            Command::SholoCheck => "sholo-check",
            Command::Diagonal => "diagonal",
            Command::Opuc => "opuc",
            Command::Theta => "theta",
            Command::Converge => "converge",
            Command::OracleVerify => "oracle-verify",
        }
    }

    pub fn parse(s: &str) -> Option<Command> {
        Command::ALL.into_iter().find(|c| c.name() == s)
    }

    /// Whether the command runs on a lattice domain.
    pub fn needs_domain(self) -> bool {
        matches!(
            self,
            Command::Partition
                | Command::Spin
                | Command::Disorder
                | Command::Mixed
                | Command::Fermion
                | Command::Energy
                | Command::SholoCheck
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DomainSpec {
    /// `width` faces per row, `height` rows.
    Rectangle {
        width: usize,
        height: usize,
        #[serde(default)]
        centered: bool,
    },
    /// Faces of mesh `delta` inside the disk of the given radius.
    Disk {
        radius: f64,
        delta: f64,
        #[serde(default)]
        inscribed: bool,
    },
    Faces { faces: Vec<[i32; 2]> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub k_min: i32,
    pub k_max: i32,
    pub s_max: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub quantity: Quantity,
    pub radius: f64,
    /// Inverse meshes, coarse to fine.
    pub meshes: Vec<u32>,
    pub discretization: Discretization,
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    pub domains: usize,
    pub max_edges: usize,
}

fn default_theta() -> f64 {
    PI / 4.0
}

fn always() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
    #[serde(default = "default_theta")]
    pub theta: f64,
    /// Spin insertions.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub faces: Vec<[i32; 2]>,
    /// Disorder insertions.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub vertices: Vec<[i32; 2]>,
    /// Edges as `[tail, head]` vertex pairs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edges: Vec<[[i32; 2]; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// `None` selects the critical point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Window>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<Suite>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    /// List every index up to `n` rather than `n` alone; for `sholo-check`,
    /// also run the three-term identity on every interior edge.
    #[serde(default)]
    pub all: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Outputs never depend on a seed or on thread counts; `false` is rejected.
    #[serde(default = "always")]
    pub deterministic: bool,
}

impl JobConfig {
    pub fn new(command: Command) -> JobConfig {
        JobConfig {
            command,
            domain: None,
            theta: default_theta(),
            faces: Vec::new(),
            vertices: Vec::new(),
            edges: Vec::new(),
            n: None,
            q: None,
            window: None,
            sweep: None,
            suite: None,
            tolerance: None,
            all: false,
            output: None,
            deterministic: true,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_json(s: &str) -> Result<JobConfig, serde_json::Error> {
        serde_json::from_str(s)
    }
}
