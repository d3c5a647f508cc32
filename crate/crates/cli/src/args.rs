use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "stplab", version, about = "Singlet/triplet measurement simulator and checks")]
pub struct Cli {
    /// Master seed; every subcommand derives its streams from it.
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Artifact formats to write.
    #[arg(long, global = true, value_delimiter = ',', default_value = "csv,json,svg")]
    pub format: Vec<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Protocol demos.
    #[command(subcommand)]
    Demo(Demo),
    /// Permutational computing on recoupling trees.
    #[command(subcommand)]
    Pqc(Pqc),
    /// Post-selected Heisenberg evolution.
    #[command(subcommand)]
    Post(Post),
    /// Projector-sequence checks.
    #[command(subcommand)]
    Seq(Seq),
    /// Random-sequence experiments.
    #[command(subcommand)]
    Exp(Exp),
    /// Rotation-angle multiples.
    #[command(subcommand)]
    Angle(Angle),
    /// Runs every acceptance criterion twice and compares the artifacts.
    VerifyAll(VerifyAllArgs),
}

impl Command {
    /// Space-separated subcommand path, also the stream label root.
    pub fn path(&self) -> String {
        let (group, leaf) = match self {
            Command::Demo(d) => ("demo", d.name()),
            Command::Pqc(p) => ("pqc", p.name()),
            Command::Post(p) => ("post", p.name()),
            Command::Seq(s) => ("seq", s.name()),
            Command::Exp(e) => ("exp", e.name()),
            Command::Angle(a) => ("angle", a.name()),
            Command::VerifyAll(_) => return "verify-all".into(),
        };
        format!("{group} {leaf}")
    }
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Demo {
    /// Bell measurement on random Bell states.
    Bell(TrialArgs),
    /// Teleported CNOT through prepared resources.
    Cnot(CnotArgs),
    /// Magic-state preparation.
    Magic(TrialArgs),
    /// Standards pool construction.
    Standards(StandardsArgs),
}

impl Demo {
    fn name(&self) -> &'static str {
        match self {
            Demo::Bell(_) => "bell",
            Demo::Cnot(_) => "cnot",
            Demo::Magic(_) => "magic",
            Demo::Standards(_) => "standards",
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct TrialArgs {
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct CnotArgs {
    #[arg(long, default_value_t = 100)]
    pub trials: u64,
    /// Post-select the resource instead of repeating until success.
    #[arg(long)]
    pub forced: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct StandardsArgs {
    #[arg(long, default_value_t = 10)]
    pub trials: u64,
    /// Pool size.
    #[arg(long, default_value_t = 6)]
    pub target: usize,
    #[arg(long, value_enum, default_value_t = Variant::Quadratic)]
    pub variant: Variant,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Quadratic,
    Linear,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pqc {
    /// Prepares a labelled tree state by splitting.
    Prepare(PrepareArgs),
    /// Measures a tree on the exact tree state once.
    Measure(MeasureArgs),
    /// Weak-model sampling of a tree against a prepared state.
    Sample(SampleArgs),
}

impl Pqc {
    fn name(&self) -> &'static str {
        match self {
            Pqc::Prepare(_) => "prepare",
            Pqc::Measure(_) => "measure",
            Pqc::Sample(_) => "sample",
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct SpinArgs {
    /// Sample spin sectors from exact weights instead of s/t statistics.
    #[arg(long)]
    pub exact: bool,
    /// Spin estimates on M qubits use this many times M^2 measurements.
    #[arg(long, default_value_t = 20)]
    pub n_meas_factor: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct PrepareArgs {
    /// Labelled tree JSON; defaults to ((0 1)_1 2)_1/2 with 2S_z = 1.
    #[arg(long)]
    pub tree: Option<PathBuf>,
    #[command(flatten)]
    pub spin: SpinArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct MeasureArgs {
    /// Labelled tree JSON for the state.
    #[arg(long)]
    pub lambda: Option<PathBuf>,
    /// Tree JSON to measure; labels are ignored. Defaults to ((1 2) 0).
    #[arg(long)]
    pub tree: Option<PathBuf>,
    #[command(flatten)]
    pub spin: SpinArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct SampleArgs {
    #[arg(long)]
    pub lambda: Option<PathBuf>,
    #[arg(long)]
    pub tree: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub shots: u64,
    #[command(flatten)]
    pub spin: SpinArgs,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Post {
    /// Teleports 1 + eps S.S through its resource state.
    Resource(ResourceArgs),
    /// Plans and executes an approximate 1 + eps S.S.
    Epsilon(EpsilonArgs),
    /// Trotterized imaginary-time evolution.
    Evolve(EvolveArgs),
    /// Amplitude lower bound on random forced transcripts.
    Bound(BoundArgs),
}

impl Post {
    fn name(&self) -> &'static str {
        match self {
            Post::Resource(_) => "resource",
            Post::Epsilon(_) => "epsilon",
            Post::Evolve(_) => "evolve",
            Post::Bound(_) => "bound",
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct ResourceArgs {
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub eps: f64,
    /// Qubits in the random input state.
    #[arg(long, default_value_t = 3)]
    pub qubits: usize,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct EpsilonArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub target: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub delta: f64,
    /// Run the plan through teleported resources rather than directly.
    #[arg(long)]
    pub protocol: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct EvolveArgs {
    /// Schedule JSON; overrides the ring options.
    #[arg(long)]
    pub schedule: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub ring: usize,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub j: f64,
    #[arg(long, default_value_t = 5.0)]
    pub time: f64,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    #[arg(long, value_enum, default_value_t = Mode::Direct)]
    pub mode: Mode,
    /// Plan tolerance for the planned and protocol modes.
    #[arg(long, default_value_t = 0.01)]
    pub delta: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Direct,
    Planned,
    Protocol,
}

#[derive(Args, Debug, Serialize)]
pub struct BoundArgs {
    /// Even spin count.
    #[arg(long, default_value_t = 6)]
    pub spins: usize,
    #[arg(long, default_value_t = 20)]
    pub len: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Seq {
    /// Leakage, equiangularity and signed-permutation checks of one sequence.
    Check(CheckArgs),
    /// Operator eigenvalues and nested-commutator distances for O1, O2.
    AppendixD(AppendixArgs),
    /// Random search for no-leakage sequences that are not signed permutations.
    Search(SearchArgs),
}

impl Seq {
    fn name(&self) -> &'static str {
        match self {
            Seq::Check(_) => "check",
            Seq::AppendixD(_) => "appendix-d",
            Seq::Search(_) => "search",
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct CheckArgs {
    /// Sequence JSON.
    #[arg(long, conflicts_with = "named")]
    pub file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Named::FourAncilla)]
    pub named: Named,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Named {
    SixAncilla,
    FourAncilla,
    Relaxed,
    O1,
    O2,
    Swap,
}

#[derive(Args, Debug, Serialize)]
pub struct AppendixArgs {
    /// Deepest nested commutator.
    #[arg(long, default_value_t = 8)]
    pub depth: usize,
    #[arg(long, value_enum, default_value_t = Norm::Frobenius)]
    pub norm: Norm,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    Frobenius,
    Operator,
}

#[derive(Args, Debug, Serialize)]
pub struct SearchArgs {
    #[arg(long, default_value_t = 10_000)]
    pub count: usize,
    #[arg(long, default_value_t = 8)]
    pub max_len: usize,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exp {
    /// Triplet probability of every pair after random measurements.
    Profile(ProfileArgs),
    /// Singlet-probability histograms after detangling.
    Detangle(DetangleArgs),
    /// One STSample instance and its last-bit conditional.
    Stsample(StsampleArgs),
    /// Histogram of cos^2 of a uniform angle with its KS distance.
    Cos2(Cos2Args),
}

impl Exp {
    fn name(&self) -> &'static str {
        match self {
            Exp::Profile(_) => "profile",
            Exp::Detangle(_) => "detangle",
            Exp::Stsample(_) => "stsample",
            Exp::Cos2(_) => "cos2",
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct ProfileArgs {
    #[arg(long, default_value_t = 18)]
    pub spins: usize,
    #[arg(long, default_value_t = 1000)]
    pub meas: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct DetangleArgs {
    #[arg(long, default_value_t = 14)]
    pub spins: usize,
    #[arg(long, default_value_t = 1000)]
    pub meas: usize,
    #[arg(long, default_value_t = 1000)]
    pub sequences: usize,
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    #[arg(long, default_value_t = 100)]
    pub bins: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct StsampleArgs {
    #[arg(long, default_value_t = 6)]
    pub spins: usize,
    /// Measurement rounds before detangling.
    #[arg(long, default_value_t = 3)]
    pub rounds: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct Cos2Args {
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 100)]
    pub bins: usize,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Angle {
    /// Smallest m with m theta within delta of phi.
    MinMultiple(MinMultipleArgs),
    /// m(delta) for a list of tolerances.
    Probe(ProbeArgs),
}

impl Angle {
    fn name(&self) -> &'static str {
        match self {
            Angle::MinMultiple(_) => "min-multiple",
            Angle::Probe(_) => "probe",
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct AngleArgs {
    /// Step angle in radians; defaults to arctan(1/3).
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    /// Target in radians; defaults to pi/8.
    #[arg(long, allow_negative_numbers = true)]
    pub phi: Option<f64>,
    #[arg(long, default_value_t = 10_000_000)]
    pub m_max: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct MinMultipleArgs {
    #[command(flatten)]
    pub angle: AngleArgs,
    #[arg(long, default_value_t = 0.01)]
    pub delta: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct ProbeArgs {
    #[command(flatten)]
    pub angle: AngleArgs,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.03,0.01,0.003,0.001,0.0003,0.0001")]
    pub deltas: Vec<f64>,
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyAllArgs {
    /// Run only these criteria (1..13); criterion 14 always runs.
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<u8>,
    /// Criteria whose failure still exits 0.
    #[arg(long, value_delimiter = ',')]
    pub allow_fail: Vec<u8>,
}
