use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rigidflow::evalbench::{
    compute_metrics, format_sweep_table, generate_scene, sensitivity_sweep, CameraIntrinsics, SyntheticSceneSpec,
};
use rigidflow::flowembed::{baseline_initial_flow, flow_embedding, format_weights, parse_weights, FlowEmbedder};
use rigidflow::io::{read_ply, read_sfl, write_labels, write_ply, write_sfl};
use rigidflow::pipeline::{parse_config, run_pipeline, write_metrics_report, PipelineConfig, PipelinePaths};
use rigidflow::{estimate_normals, knn_search, segment, Error, Result};

#[derive(Parser)]
#[command(
    name = "rigidflow",
    version,
    about = "Scene flow refinement with rigid supervoxel constraints"
)]
struct Cli {
    /// Global seed for every seeded stage.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads, or "auto".
    #[arg(long, global = true, default_value = "auto")]
    threads: String,
    /// key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Over-segment a cloud into supervoxels and write one label per line.
    Segment {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        desired: Option<usize>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Softmax nearest-neighbor initial flow between two frames.
    BaselineFlow {
        #[arg(long)]
        frame_t: PathBuf,
        #[arg(long)]
        frame_t1: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Flow embeddings of frame t, one row per point.
    Embed {
        #[arg(long)]
        frame_t: PathBuf,
        #[arg(long)]
        frame_t1: PathBuf,
        /// Weight file with nets h, ms and ma; seeded weights when omitted.
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Also write the weights that were used.
        #[arg(long)]
        save_weights: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Refine an initial flow with mean-field inference.
    Refine {
        #[arg(long)]
        frame_t: PathBuf,
        #[arg(long)]
        frame_t1: Option<PathBuf>,
        #[arg(long)]
        initial_flow: PathBuf,
        /// Label file, or "auto" to segment.
        #[arg(long, default_value = "auto")]
        labels: String,
        #[arg(long)]
        gt: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Compare a predicted flow against ground truth.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        positions: PathBuf,
        /// Pinhole intrinsics "fx,fy,cx,cy" for the image-space metrics.
        #[arg(long)]
        intrinsics: Option<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Generate a synthetic multi-body scene.
    Synth {
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Refined EPE3D as a function of supervoxel size.
    Sweep {
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long, value_delimiter = ',', default_value = "80,100,140,200")]
        desired: Vec<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Segment, build or read an initial flow, refine, and optionally evaluate.
    Pipeline {
        #[arg(long)]
        frame_t: PathBuf,
        #[arg(long)]
        frame_t1: Option<PathBuf>,
        #[arg(long)]
        initial_flow: Option<PathBuf>,
        #[arg(long, default_value = "auto")]
        labels: String,
        #[arg(long)]
        gt: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SceneArgs {
    #[arg(long, default_value_t = 5)]
    bodies: usize,
    #[arg(long, default_value_t = 200)]
    points_per_body: usize,
    /// Degrees.
    #[arg(long, default_value_t = 20.0)]
    rotation_max: f64,
    #[arg(long, default_value_t = 1.0)]
    translation_max: f64,
    #[arg(long, default_value_t = 0.5)]
    cluster_radius: f64,
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
}

impl SceneArgs {
    fn spec(&self, seed: u64) -> SyntheticSceneSpec {
        SyntheticSceneSpec {
            body_count: self.bodies,
            points_per_body: self.points_per_body,
            rotation_max: self.rotation_max,
            translation_max: self.translation_max,
            cluster_radius: self.cluster_radius,
            noise_sigma: self.noise,
            seed,
            ..Default::default()
        }
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Config {
                line: 0,
                message: format!("cannot read {}: {e}", path.display()),
            })?;
            parse_config(&text)?
        }
        None => PipelineConfig::default(),
    };
    Ok(match cli.seed {
        Some(seed) => cfg.with_seed(seed),
        None => cfg,
    })
}

fn set_threads(spec: &str) -> Result<()> {
    if spec == "auto" {
        return Ok(());
    }
    let n: usize = spec
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("--threads expects a count or 'auto', got '{spec}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidArgument(e.to_string()))
}

fn labels_path(labels: &str) -> Option<PathBuf> {
    (labels != "auto").then(|| PathBuf::from(labels))
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    set_threads(&cli.threads)?;
    let cfg = load_config(&cli)?;
    match cli.command {
        Command::Segment { input, desired, output } => {
            let data = read_ply(&input)?;
            let mut seg = cfg.segmenter.clone();
            if let Some(d) = desired {
                seg.desired_point_count = d;
            }
            let normals = match data.normals {
                Some(n) => n,
                None => estimate_normals(&data.cloud, cfg.normal_k.min(data.cloud.len()))?,
            };
            let partition = segment(&data.cloud, &normals, &seg)?;
            write_labels(output, &partition)?;
        }
        Command::BaselineFlow {
            frame_t,
            frame_t1,
            k,
            tau,
            output,
        } => {
            let a = read_ply(frame_t)?;
            let b = read_ply(frame_t1)?;
            let flow = baseline_initial_flow(
                &a.cloud,
                &b.cloud,
                k.unwrap_or(cfg.baseline_k),
                tau.unwrap_or(cfg.baseline_tau),
            )?;
            write_sfl(output, &flow)?;
        }
        Command::Embed {
            frame_t,
            frame_t1,
            weights,
            save_weights,
            output,
        } => {
            let mut a = read_ply(frame_t)?.cloud;
            let mut b = read_ply(frame_t1)?.cloud;
            for c in [&mut a, &mut b] {
                if c.features().is_none() {
                    let f = c.coordinate_features();
                    c.set_features(f)?;
                }
            }
            let embedder = match weights {
                Some(path) => {
                    FlowEmbedder::from_weights(cfg.embedding.neighbor_k, &parse_weights(&fs::read_to_string(path)?)?)?
                }
                None => {
                    let mut ecfg = cfg.embedding.clone();
                    ecfg.feature_dim = a.feature_dim().unwrap_or(3);
                    FlowEmbedder::seeded(&ecfg)?
                }
            };
            let graph = knn_search(&b, &a, embedder.neighbor_k)?;
            let emb = flow_embedding(&a, &b, &graph, &embedder)?;
            let mut text = String::new();
            for row in &emb.vectors {
                let cells: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
                text.push_str(&cells.join(" "));
                text.push('\n');
            }
            fs::write(output, text)?;
            if let Some(path) = save_weights {
                fs::write(path, format_weights(&embedder.to_weights()))?;
            }
        }
        Command::Refine {
            frame_t,
            frame_t1,
            initial_flow,
            labels,
            gt,
            output,
            report,
        } => {
            let config = PipelineConfig {
                paths: PipelinePaths {
                    frame_t,
                    frame_t1,
                    initial_flow: Some(initial_flow),
                    labels: labels_path(&labels),
                    ground_truth: gt,
                    output_flow: Some(output),
                    report,
                },
                ..cfg
            };
            run_pipeline(&config)?;
        }
        Command::Pipeline {
            frame_t,
            frame_t1,
            initial_flow,
            labels,
            gt,
            output,
            report,
        } => {
            let config = PipelineConfig {
                paths: PipelinePaths {
                    frame_t,
                    frame_t1,
                    initial_flow,
                    labels: labels_path(&labels),
                    ground_truth: gt,
                    output_flow: Some(output),
                    report,
                },
                ..cfg
            };
            run_pipeline(&config)?;
        }
        Command::Eval {
            pred,
            gt,
            positions,
            intrinsics,
            output,
        } => {
            let cam = intrinsics.map(|s| parse_intrinsics(&s)).transpose()?;
            let cloud = read_ply(positions)?.cloud;
            let pred = read_sfl(pred)?;
            let gt = read_sfl(gt)?;
            let m = compute_metrics(&pred, &gt, &cloud, cam.as_ref())?;
            write_text(output.as_deref(), &write_metrics_report(&m))?;
        }
        Command::Synth { scene, out_dir } => {
            let s = generate_scene(&scene.spec(cfg.seed))?;
            fs::create_dir_all(&out_dir)?;
            write_ply(out_dir.join("frame_t.ply"), &s.cloud_t, None)?;
            write_ply(out_dir.join("frame_t1.ply"), &s.cloud_t1, None)?;
            write_sfl(out_dir.join("gt.sfl"), &s.gt_flow)?;
            write_sfl(out_dir.join("initial.sfl"), &s.initial_flow)?;
            write_labels(out_dir.join("labels.txt"), &s.body_labels)?;
        }
        Command::Sweep { scene, desired, output } => {
            let rows = sensitivity_sweep(&scene.spec(cfg.seed), &desired, &cfg.crf, &cfg.segmenter)?;
            write_text(output.as_deref(), &format_sweep_table(&rows))?;
        }
    }
    Ok(())
}

fn parse_intrinsics(s: &str) -> Result<CameraIntrinsics> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::InvalidArgument(format!("bad intrinsics '{s}'")))?;
    match v.as_slice() {
        [fx, fy, cx, cy] => CameraIntrinsics::new(*fx, *fy, *cx, *cy),
        _ => Err(Error::InvalidArgument("intrinsics need fx,fy,cx,cy".into())),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
