use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Wide field-of-view fisheye stereo: warping, sample generation, depth and
/// disparity conversion, evaluation.
#[derive(Debug, Parser)]
#[command(name = "fdepth", version)]
pub struct Cli {
    /// Worker threads; 0 uses one per core.
    #[arg(long, global = true, env = "FDEPTH_THREADS", default_value_t = 0)]
    pub threads: usize,

    /// JSON file with default values for any long flag; explicit flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Resample an image between projections sharing a camera center.
    Warp(WarpArgs),
    /// Render stereo samples for every rig of the benchmark grid.
    GenStereo(GenStereoArgs),
    /// Convert a disparity PFM to depth.
    Disp2depth(ConvertArgs),
    /// Convert depth (PNG or PFM) to a disparity PFM.
    Depth2disp(ConvertArgs),
    /// Compare a prediction with ground truth, or sweep a sample index.
    Eval(EvalArgs),
    /// Depth histogram and mean local entropy of a sample index.
    Stats(StatsArgs),
    /// Crop empty borders and rotate for horizontal stereo matchers.
    PrepStereoInput(PrepArgs),
    /// Write a synthetic occluder scene (three scans and a manifest).
    SynthScene(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SampleKind {
    Rgb,
    Depth,
    Disparity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InterpArg {
    Nearest,
    Bilinear,
}

#[derive(Debug, Args)]
pub struct WarpArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Source projection JSON (camera or panorama).
    #[arg(long)]
    pub source: PathBuf,
    /// Target projection JSON.
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Optional validity mask PNG for an RGB input.
    #[arg(long)]
    pub input_mask: Option<PathBuf>,
    /// Where to write the target validity mask PNG.
    #[arg(long)]
    pub mask_output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SampleKind::Rgb)]
    pub kind: SampleKind,
    /// Defaults to bilinear for RGB and nearest for depth and disparity.
    #[arg(long, value_enum)]
    pub interp: Option<InterpArg>,
}

#[derive(Debug, Args)]
pub struct GenStereoArgs {
    /// Scene manifest JSON.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory; samples land in `<out>/<scene>/<sample>/`.
    #[arg(long)]
    pub out: PathBuf,
    /// Benchmark grid JSON; the default grid yields 50 samples.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Equirectangular height of the rendered pairs.
    #[arg(long, default_value_t = 512)]
    pub height: usize,
    #[arg(long, default_value_t = 1.0)]
    pub splat_radius: f64,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// `.png` writes millimeter depth, `.pfm` writes floats.
    #[arg(long)]
    pub output: PathBuf,
    /// Panorama height in pixels; must match the input.
    #[arg(long)]
    pub height: usize,
    #[arg(long)]
    pub baseline_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalKind {
    Disparity,
    Depth,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_enum, default_value_t = EvalKind::Disparity)]
    pub kind: EvalKind,
    #[arg(long, required_unless_present = "index")]
    pub pred: Option<PathBuf>,
    #[arg(long, required_unless_present = "index")]
    pub gt: Option<PathBuf>,
    /// Sweep mode: sample index JSON written by gen-stereo.
    #[arg(long, conflicts_with_all = ["pred", "gt"], requires = "pred_dir")]
    pub index: Option<PathBuf>,
    /// Sweep mode: predictions laid out like the index's artifacts.
    #[arg(long)]
    pub pred_dir: Option<PathBuf>,
    /// Sweep mode: metric tabulated per FOV and baseline.
    #[arg(long)]
    pub metric: Option<String>,
    #[arg(long)]
    pub fov_deg: Option<f64>,
    #[arg(long)]
    pub baseline_m: Option<f64>,
    /// Also write the report here.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub index: PathBuf,
    /// Histogram bin edges in meters; `inf` closes the last bin.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,5,10,inf")]
    pub bin_edges: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct PrepArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Crop sidecar JSON: written forward, read with `--undo`.
    #[arg(long)]
    pub crop_info: PathBuf,
    /// Validity mask PNG for RGB input; otherwise nonblack pixels are valid.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[arg(long)]
    pub undo: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Scan panorama height; each scan casts `2 * h * h` rays.
    #[arg(long, default_value_t = 1024)]
    pub scan_height: usize,
}
