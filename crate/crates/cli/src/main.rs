//! `smoothedge` command-line front end.
//!
//! Exit codes: 0 success, 1 I/O error, 2 configuration error, 3 processing
//! error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use smoothedge::denoise::denoise;
use smoothedge::detectors::baseline_detect;
use smoothedge::pipeline::{compare_detectors, to_working_frame, DetectorKind};
use smoothedge::{canny, read_pgm, run_pipeline, scale_dpg, write_pgm, BaselineKind, Frame, PipelineConfig};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Processing(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Processing(_) => 3,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(name = "smoothedge", version, about = "Smoothness-ranked edge detection for thermal frames")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scale a raw 14/16-bit frame to 8 bits around its median.
    Scale {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        factor: f64,
        #[arg(long, default_value_t = 127.0)]
        offset: f64,
    },
    /// Run a single edge detector.
    Detect {
        input: PathBuf,
        output: PathBuf,
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 0.05)]
        low: f64,
        #[arg(long, default_value_t = 0.15)]
        high: f64,
        /// Fraction of the maximum response for prewitt/roberts/sobel/log.
        #[arg(long, default_value_t = 0.2)]
        threshold: f64,
        /// Denoiser applied before detection: none, gaussian or nlmeans.
        #[arg(long, default_value = "none")]
        denoiser: String,
    },
    /// Run the full pipeline and keep the best-scoring edges.
    Pipeline {
        input: PathBuf,
        output: PathBuf,
        /// Write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        opts: PipelineOpts,
    },
    /// Run several detectors on the same denoised frame.
    Compare {
        input: PathBuf,
        outdir: PathBuf,
        /// Comma-separated: prewitt,roberts,sobel,log,canny,proposed
        #[arg(long, default_value = "prewitt,roberts,sobel,log,canny,proposed")]
        kinds: String,
        #[arg(long, default_value_t = 0.2)]
        threshold: f64,
        #[command(flatten)]
        opts: PipelineOpts,
    },
}

#[derive(Args, Default)]
struct PipelineOpts {
    /// Key-value config file (`key = value` lines, `#` comments).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    et: Option<usize>,
    #[arg(long)]
    gap_link: Option<f64>,
    #[arg(long = "loop-T", alias = "loop-t")]
    loop_t: Option<f64>,
    #[arg(long)]
    phi_loop: Option<f64>,
    #[arg(long)]
    phi_line: Option<f64>,
    #[arg(long)]
    denoiser: Option<String>,
    #[arg(long)]
    nlm_h: Option<f64>,
    #[arg(long)]
    low: Option<f64>,
    #[arg(long)]
    high: Option<f64>,
    #[arg(long)]
    factor: Option<f64>,
    #[arg(long)]
    offset: Option<f64>,
    /// Any other config key, as key=value. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl PipelineOpts {
    fn build(&self) -> CliResult<PipelineConfig> {
        let mut cfg = PipelineConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            cfg.apply_text(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        }
        let mut pairs: Vec<(String, String)> = Vec::new();
        // the denoiser kind goes first so parameter flags refine it
        if let Some(d) = &self.denoiser {
            pairs.push(("denoiser".into(), d.clone()));
        }
        let numeric = [
            ("et", self.et.map(|v| v.to_string())),
            ("gap_link", self.gap_link.map(|v| v.to_string())),
            ("loop_t", self.loop_t.map(|v| v.to_string())),
            ("phi_loop", self.phi_loop.map(|v| v.to_string())),
            ("phi_line", self.phi_line.map(|v| v.to_string())),
            ("nlm_h", self.nlm_h.map(|v| v.to_string())),
            ("low", self.low.map(|v| v.to_string())),
            ("high", self.high.map(|v| v.to_string())),
            ("factor", self.factor.map(|v| v.to_string())),
            ("offset", self.offset.map(|v| v.to_string())),
        ];
        pairs.extend(numeric.into_iter().filter_map(|(k, v)| v.map(|v| (k.to_string(), v))));
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--set expects key=value, got '{kv}'")))?;
            pairs.push((k.to_string(), v.to_string()));
        }
        for (k, v) in pairs {
            cfg.set(&k, &v).map_err(|e| CliError::Config(e.to_string()))?;
        }
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }
}

fn load(path: &Path) -> CliResult<Frame> {
    let bytes = fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    read_pgm(&bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn save(path: &Path, frame: &Frame) -> CliResult<()> {
    let bytes = write_pgm(frame).map_err(|e| CliError::Processing(e.to_string()))?;
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn processing(e: impl std::fmt::Display) -> CliError {
    CliError::Processing(e.to_string())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Scale { input, output, factor, offset } => {
            let cfg = smoothedge::ScaleConfig { factor, offset };
            cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
            let gray = match load(&input)? {
                Frame::Raw(raw) => scale_dpg(&raw, &cfg).map_err(processing)?,
                Frame::Gray(_) => return Err(CliError::Processing("input is already 8-bit".into())),
            };
            save(&output, &Frame::Gray(gray))
        }
        Command::Detect { input, output, kind, low, high, threshold, denoiser } => {
            let mut cfg = PipelineConfig::default();
            cfg.set("denoiser", &denoiser).map_err(|e| CliError::Config(e.to_string()))?;
            cfg.canny.low = low;
            cfg.canny.high = high;
            cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
            if !(0.0..=1.0).contains(&threshold) {
                return Err(CliError::Config(format!("threshold must be in [0, 1], got {threshold}")));
            }
            let frame = load(&input)?;
            let working = to_working_frame(&frame, &cfg).map_err(processing)?;
            let working = denoise(&working, &cfg.denoiser).map_err(processing)?;
            let map = if kind.eq_ignore_ascii_case("canny") {
                canny(&working, &cfg.canny).map_err(processing)?
            } else {
                let kind: BaselineKind = kind.parse().map_err(|e: smoothedge::Error| CliError::Config(e.to_string()))?;
                baseline_detect(&working, kind, threshold).map_err(processing)?
            };
            save(&output, &Frame::Gray(map.to_gray()))
        }
        Command::Pipeline { input, output, report, opts } => {
            let cfg = opts.build()?;
            let frame = load(&input)?;
            let (map, rep) = run_pipeline(&frame, &cfg).map_err(processing)?;
            save(&output, &Frame::Gray(map.to_gray()))?;
            if let Some(path) = report {
                fs::write(&path, rep.to_json()).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            }
            let kept = rep.kept().count();
            println!("{} edges, {kept} kept, {} edge pixels", rep.edges.len(), map.count());
            Ok(())
        }
        Command::Compare { input, outdir, kinds, threshold, opts } => {
            let cfg = opts.build()?;
            let kinds = kinds
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.parse::<DetectorKind>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::Config(e.to_string()))?;
            if kinds.is_empty() {
                return Err(CliError::Config("no detector kinds given".into()));
            }
            let frame = load(&input)?;
            let outputs = compare_detectors(&frame, &kinds, &cfg, threshold).map_err(processing)?;
            fs::create_dir_all(&outdir).map_err(|e| CliError::Io(format!("{}: {e}", outdir.display())))?;
            let mut summary = Vec::new();
            for out in &outputs {
                save(&outdir.join(format!("{}.pgm", out.kind)), &Frame::Gray(out.map.to_gray()))?;
                println!("{:<9} {:>7} pixels {:>5} components", out.kind.name(), out.edge_pixels, out.components);
                summary.push(serde_json::json!({
                    "kind": out.kind.name(),
                    "edge_pixels": out.edge_pixels,
                    "components": out.components,
                }));
            }
            let path = outdir.join("summary.json");
            let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
            fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_set_pairs_apply_last() {
        let opts = PipelineOpts { et: Some(4), set: vec!["et=9".into()], denoiser: Some("gaussian".into()), ..Default::default() };
        let cfg = opts.build().unwrap();
        assert_eq!(cfg.score.et, 9);
    }

    #[test]
    fn malformed_set_is_config_error() {
        let opts = PipelineOpts { set: vec!["et".into()], ..Default::default() };
        assert_eq!(opts.build().unwrap_err().code(), 2);
    }

    #[test]
    fn nlm_flag_switches_denoiser() {
        let opts = PipelineOpts { denoiser: Some("gaussian".into()), nlm_h: Some(5.0), ..Default::default() };
        assert!(opts.build().is_ok());
    }
}
