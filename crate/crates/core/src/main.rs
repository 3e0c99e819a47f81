use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tpsaug::augment::service::SampleServer;
use tpsaug::augment::{
    generate_dataset_with, Dataset, DatasetOptions, SourcePair, StrategyRegistry, DEFAULT_STRATEGY,
};
use tpsaug::config::AugmentConfig;
use tpsaug::metrics::MetricReport;
use tpsaug::primitive::ImagePair;
use tpsaug::primitives::{extract_edges, save_edge_map, EdgeParams, PrimitiveFiles};
use tpsaug::{load_image, Result, SeedSpec};

#[derive(Parser)]
#[command(
    name = "tpsaug",
    version,
    about = "Thin-plate-spline augmentation of a single training pair"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an augmented dataset from one (primitive, image) pair.
    Augment(AugmentArgs),
    /// Serve samples of a generated dataset over HTTP.
    Serve {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8791")]
        bind: String,
    },
    /// Extract a binary edge map from an image.
    ExtractEdges {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0.1)]
        low: f64,
        #[arg(long, default_value_t = 0.2)]
        high: f64,
    },
    /// Compare two images and print L1 / PSNR / SSIM as JSON.
    Eval {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        test: PathBuf,
    },
}

#[derive(clap::Args)]
struct AugmentArgs {
    #[arg(long)]
    image: PathBuf,
    /// Edge map PNG.
    #[arg(long)]
    primitive: Option<PathBuf>,
    /// Indexed segmentation PNG; needs --palette.
    #[arg(long, requires = "palette")]
    segmentation: Option<PathBuf>,
    #[arg(long)]
    palette: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    stream: u64,
    #[arg(long, default_value_t = 0.01)]
    lambda: f64,
    #[arg(long = "max-shift", default_value_t = 0.10)]
    max_shift: f64,
    #[arg(long, default_value_t = 3)]
    grid: usize,
    #[arg(long, default_value_t = 0.9)]
    crop: f64,
    #[arg(long = "flip-prob", default_value_t = 0.5)]
    flip_prob: f64,
    /// Augmentation strategy name.
    #[arg(long, default_value = DEFAULT_STRATEGY)]
    augment: String,
    /// Also write each sample's dense backward field.
    #[arg(long)]
    save_fields: bool,
    #[arg(long)]
    out: PathBuf,
}

fn display(p: &Option<PathBuf>) -> Option<String> {
    p.as_ref().map(|p| p.display().to_string())
}

fn augment(a: AugmentArgs) -> Result<()> {
    let strategies = StrategyRegistry::with_builtins();
    strategies.get(&a.augment)?;
    let files = PrimitiveFiles {
        edge: a.primitive.clone(),
        segmentation: a.segmentation.clone(),
        palette: a.palette.clone(),
    };
    let (prim, palette) = files.load()?;
    let pair = ImagePair::new(prim, load_image(&a.image)?)?;
    let cfg = AugmentConfig {
        grid_n: a.grid,
        max_shift_frac: a.max_shift,
        lambda: a.lambda,
        crop_frac: a.crop,
        flip_prob: a.flip_prob,
        ..AugmentConfig::default()
    };
    let opts = DatasetOptions {
        strategy: a.augment,
        palette,
        source: SourcePair {
            image: Some(a.image.display().to_string()),
            edge: display(&a.primitive),
            segmentation: display(&a.segmentation),
            palette: display(&a.palette),
        },
        save_fields: a.save_fields,
    };
    let manifest = generate_dataset_with(
        &pair,
        a.n,
        SeedSpec::with_stream(a.seed, a.stream),
        &cfg,
        &a.out,
        &opts,
    )?;
    println!(
        "wrote {} samples to {}",
        manifest.len(),
        a.out.join("manifest.json").display()
    );
    Ok(())
}

fn serve(manifest: PathBuf, bind: String) -> Result<()> {
    let dataset = Dataset::open(&manifest)?;
    let rt = tokio::runtime::Runtime::new().map_err(|e| tpsaug::Error::io("<runtime>", e))?;
    rt.block_on(async move {
        let server = SampleServer::bind(dataset, &bind).await?;
        println!("listening on http://{}", server.local_addr()?);
        let _ = std::io::stdout().flush();
        server.run().await
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Augment(a) => augment(a),
        Command::Serve { manifest, bind } => serve(manifest, bind),
        Command::ExtractEdges {
            image,
            out,
            sigma,
            low,
            high,
        } => {
            let params = EdgeParams {
                gaussian_sigma: sigma,
                low_threshold: low,
                high_threshold: high,
            };
            let edges = extract_edges(&load_image(&image)?, &params)?;
            save_edge_map(&edges, &out)
        }
        Command::Eval { reference, test } => {
            let report = MetricReport::compute(&load_image(&reference)?, &load_image(&test)?)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
