use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dimweight::datasets::{
    load_csv, preprocess, synthetic_gene_like_with_shift, synthetic_two_class, LabelColumn, LabeledDataset,
    GENE_LIKE_SHIFT,
};
use dimweight::evaluation::{cross_validate, summarize, Aggregation, EvaluationReport, ExperimentSpec, Method};
use dimweight::geometry::{
    boundary_family, default_norms, default_weights, knn_region, weights_label, write_boundaries_csv,
    BoundarySample, DEFAULT_RESOLUTION,
};
use dimweight::weighting::{class_statistics, fitness, weights_from_fitness_with, DegeneratePolicy};
use dimweight::{Error, Kappa, KnnModel, KnnParams, Norm, PreprocessSpec, WeightVector};
use serde_json::{json, Value};

/// Weighted-Minkowski KNN experiments and boundary exports.
#[derive(Debug, Parser)]
#[command(name = "dimweight", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cross-validate the uniform and fitted-weight classifiers.
    Evaluate(EvaluateArgs),
    /// Print per-dimension fitness and weights fitted on a whole dataset.
    Weights(WeightsArgs),
    /// Export unidistant boundaries, or the two-class neighbourhood overlay with --fig4.
    Boundaries(BoundariesArgs),
    /// Write a synthetic dataset to CSV.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Labelled CSV file (repeatable).
    #[arg(long = "data", value_name = "PATH")]
    data: Vec<PathBuf>,
    /// Label column: a header name, a 0-based index, or "last".
    #[arg(long, default_value = "last")]
    label_col: LabelColumn,
    /// The CSV has no header row.
    #[arg(long)]
    no_header: bool,
    /// Z-score each dimension using statistics of the fitting rows.
    #[arg(long)]
    standardize: bool,
}

impl DataArgs {
    fn load(&self, extra: &[PathBuf]) -> anyhow::Result<Vec<LabeledDataset>> {
        let paths: Vec<&PathBuf> = self.data.iter().chain(extra).collect();
        if paths.is_empty() {
            return Err(Error::InvalidParameter("no dataset given (use --data PATH)".into()).into());
        }
        paths
            .into_iter()
            .map(|p| Ok(load_csv(p, &self.label_col, !self.no_header)?))
            .collect()
    }

    fn json(&self) -> Value {
        json!({
            "data": self.data,
            "label_col": self.label_col.to_string(),
            "header": !self.no_header,
            "standardize": self.standardize,
        })
    }
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Dataset files, same as --data.
    #[arg(value_name = "DATASET")]
    datasets: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "1,3,5")]
    k: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "3,5,10")]
    folds: Vec<usize>,
    /// Norm of the weighted method: a number ≥ 1 or "inf".
    #[arg(long, default_value = "2")]
    p: Norm,
    /// Norm of the uniform baseline.
    #[arg(long, default_value = "2")]
    baseline_p: Norm,
    #[arg(long, default_value = "0", value_parser = parse_kappa)]
    kappa: Kappa,
    #[arg(long, value_delimiter = ',', default_value = "baseline,proposed")]
    methods: Vec<Method>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Average per-fold accuracies instead of pooling predictions.
    #[arg(long)]
    per_fold_mean: bool,
    /// Fail instead of falling back to uniform weights when fitness is all zero.
    #[arg(long)]
    strict: bool,
    /// Directory for report.txt, cells.csv and config.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct WeightsArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "0", value_parser = parse_kappa)]
    kappa: Kappa,
    #[arg(long)]
    strict: bool,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BoundariesArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Norms to draw (default 1,2,3,10,100,inf). With --fig4, the single norm of both models.
    #[arg(long, value_delimiter = ',')]
    p: Vec<Norm>,
    /// Weight pair such as 1.5,0.5 (repeatable; default three pairs).
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    weights: Vec<[f64; 2]>,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[arg(long, value_parser = parse_pair, default_value = "0,0", allow_hyphen_values = true)]
    center: [f64; 2],
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    resolution: usize,
    /// Generate the two-class set and export its scatter plus the uniform
    /// and fitted-weight k-neighbourhoods of --center.
    #[arg(long)]
    fig4: bool,
    #[arg(long, default_value_t = 9)]
    k: usize,
    #[arg(long, default_value = "0", value_parser = parse_kappa)]
    kappa: Kappa,
    #[command(flatten)]
    two_class: TwoClassArgs,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    TwoClass,
    GeneLike,
}

#[derive(Debug, Args)]
struct TwoClassArgs {
    #[arg(long, default_value_t = 100)]
    n_per_class: usize,
    #[arg(long, default_value_t = 4.0)]
    x_spread: f64,
    #[arg(long, default_value_t = 1.0)]
    y_spread: f64,
    #[arg(long, default_value_t = 8.0)]
    separation: f64,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long, value_enum, default_value = "two-class")]
    kind: Kind,
    /// Output CSV path. A `<stem>.config.json` is written beside it.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    two_class: TwoClassArgs,
    #[arg(long, default_value_t = 72)]
    n_samples: usize,
    #[arg(long, default_value_t = 2000)]
    n_dims: usize,
    #[arg(long, default_value_t = 50)]
    n_informative: usize,
    /// Class-mean shift on informative dimensions, in noise sd.
    #[arg(long, default_value_t = GENE_LIKE_SHIFT)]
    shift: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

fn parse_kappa(s: &str) -> Result<Kappa, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    Kappa::new(v).map_err(|e| e.to_string())
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => {
            let a = a.parse().map_err(|_| format!("not a number: {a:?}"))?;
            let b = b.parse().map_err(|_| format!("not a number: {b:?}"))?;
            Ok([a, b])
        }
        _ => Err(format!("expected two comma-separated numbers, got {s:?}")),
    }
}

fn policy(strict: bool) -> DegeneratePolicy {
    if strict {
        DegeneratePolicy::Strict
    } else {
        DegeneratePolicy::Uniform
    }
}

fn write_config(path: &Path, config: &Value) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(config)? + "\n";
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn evaluate(args: EvaluateArgs) -> anyhow::Result<()> {
    let spec = ExperimentSpec {
        k_values: args.k.clone(),
        fold_counts: args.folds.clone(),
        norm: args.p,
        baseline_norm: args.baseline_p,
        kappa: args.kappa,
        methods: args.methods.clone(),
        seed: args.seed,
        preprocess: PreprocessSpec {
            standardize: args.data.standardize,
        },
        aggregation: if args.per_fold_mean {
            Aggregation::MeanOfFolds
        } else {
            Aggregation::Pooled
        },
        degenerate: policy(args.strict),
    };
    spec.validate()?;
    let datasets = args.data.load(&args.datasets)?;

    let mut reports: Vec<EvaluationReport> = Vec::with_capacity(datasets.len());
    for data in &datasets {
        log::info!("evaluating {} ({} × {})", data.id(), data.n_samples(), data.n_dims());
        reports.push(cross_validate(&spec, data)?);
    }

    let mut text = String::new();
    for r in &reports {
        text.push_str(&r.render_table());
        text.push('\n');
    }
    if reports.len() > 1 {
        text.push_str(&summarize(&reports)?.render());
    }
    print!("{text}");

    if let Some(dir) = &args.out {
        create_dir(dir)?;
        fs::write(dir.join("report.txt"), &text).context("writing report.txt")?;
        let mut csv = Vec::new();
        for (i, r) in reports.iter().enumerate() {
            let mut buf = Vec::new();
            r.write_csv(&mut buf)?;
            let skip = if i == 0 { 0 } else { buf.iter().position(|&b| b == b'\n').map_or(0, |n| n + 1) };
            csv.extend_from_slice(&buf[skip..]);
        }
        fs::write(dir.join("cells.csv"), csv).context("writing cells.csv")?;
        let mut data = args.data.json();
        data["data"] = json!(args.data.data.iter().chain(&args.datasets).collect::<Vec<_>>());
        write_config(
            &dir.join("config.json"),
            &json!({
                "command": "evaluate",
                "dataset": data,
                "k": spec.k_values,
                "folds": spec.fold_counts,
                "p": spec.norm.to_string(),
                "baseline_p": spec.baseline_norm.to_string(),
                "kappa": spec.kappa.value(),
                "methods": spec.methods.iter().map(|m| m.name()).collect::<Vec<_>>(),
                "seed": spec.seed,
                "aggregation": if args.per_fold_mean { "mean_of_folds" } else { "pooled" },
                "strict": args.strict,
            }),
        )?;
    }
    Ok(())
}

fn weights(args: WeightsArgs) -> anyhow::Result<()> {
    let mut datasets = args.data.load(&[])?;
    if datasets.len() != 1 {
        bail!(Error::InvalidParameter("weights takes exactly one --data".into()));
    }
    let mut data = datasets.remove(0);
    if args.data.standardize {
        let all: Vec<usize> = (0..data.n_samples()).collect();
        data = preprocess(&data, PreprocessSpec { standardize: true }, &all)?.0;
    }
    let lambdas = fitness(&class_statistics(&data)?)?;
    let w = weights_from_fitness_with(&lambdas, args.kappa, policy(args.strict))?;

    let mut out = String::from("dimension,name,lambda,weight\n");
    for (i, (l, w)) in lambdas.as_slice().iter().zip(w.as_slice()).enumerate() {
        out.push_str(&format!("{i},{},{l},{w}\n", data.dim_name(i)));
    }
    match &args.out {
        Some(path) => {
            fs::write(path, &out).with_context(|| format!("writing {}", path.display()))?;
            let config = path.with_extension("config.json");
            write_config(
                &config,
                &json!({
                    "command": "weights",
                    "dataset": args.data.json(),
                    "kappa": args.kappa.value(),
                    "strict": args.strict,
                }),
            )?;
        }
        None => io::stdout().write_all(out.as_bytes())?,
    }
    Ok(())
}

fn series_id(b: &BoundarySample) -> String {
    format!("p{}_w{}", b.spec.norm, weights_label(&b.spec).replace(';', "_"))
}

fn save_boundaries(path: &Path, series: &[(String, &BoundarySample)]) -> anyhow::Result<()> {
    let mut buf = Vec::new();
    write_boundaries_csv(&mut buf, series)?;
    fs::write(path, buf).with_context(|| format!("writing {}", path.display()))
}

fn boundaries(args: BoundariesArgs) -> anyhow::Result<()> {
    if args.fig4 {
        return fig4(args);
    }
    let norms = if args.p.is_empty() { default_norms() } else { args.p.clone() };
    let weight_list = if args.weights.is_empty() {
        default_weights()
    } else {
        args.weights
            .iter()
            .map(|w| WeightVector::new(w.to_vec()))
            .collect::<Result<_, _>>()?
    };
    let family = boundary_family(args.center, args.radius, &norms, &weight_list, args.resolution)?;

    create_dir(&args.out)?;
    let series: Vec<(String, &BoundarySample)> = family.iter().map(|b| (series_id(b), b)).collect();
    for (id, b) in &series {
        save_boundaries(&args.out.join(format!("boundary_{id}.csv")), &[(id.clone(), *b)])?;
    }
    save_boundaries(&args.out.join("boundaries.csv"), &series)?;
    write_config(
        &args.out.join("config.json"),
        &json!({
            "command": "boundaries",
            "p": norms.iter().map(Norm::to_string).collect::<Vec<_>>(),
            "weights": weight_list.iter().map(WeightVector::as_slice).collect::<Vec<_>>(),
            "radius": args.radius,
            "center": args.center,
            "resolution": args.resolution,
        }),
    )
}

fn fig4(args: BoundariesArgs) -> anyhow::Result<()> {
    let norm = match args.p.as_slice() {
        [] => Norm::EUCLIDEAN,
        [p] => *p,
        _ => bail!(Error::InvalidParameter("--fig4 takes a single --p".into())),
    };
    let tc = &args.two_class;
    let data = synthetic_two_class(tc.n_per_class, tc.x_spread, tc.y_spread, tc.separation, args.seed)?;
    let uniform = KnnModel::fit(&data, &KnnParams::uniform(args.k, norm))?;
    let proposed = KnnModel::fit(&data, &KnnParams::proposed(args.k, norm, args.kappa))?;
    let regions = [
        ("uniform".to_string(), knn_region(&uniform, args.center, args.resolution)?),
        ("proposed".to_string(), knn_region(&proposed, args.center, args.resolution)?),
    ];

    create_dir(&args.out)?;
    data.save_csv(args.out.join("points.csv"), "class")?;
    let series: Vec<(String, &BoundarySample)> = regions.iter().map(|(id, b)| (id.clone(), b)).collect();
    save_boundaries(&args.out.join("regions.csv"), &series)?;
    write_config(
        &args.out.join("config.json"),
        &json!({
            "command": "boundaries",
            "fig4": true,
            "n_per_class": tc.n_per_class,
            "x_spread": tc.x_spread,
            "y_spread": tc.y_spread,
            "separation": tc.separation,
            "seed": args.seed,
            "k": args.k,
            "p": norm.to_string(),
            "kappa": args.kappa.value(),
            "center": args.center,
            "resolution": args.resolution,
            "fitted_weights": proposed.weights(),
            "radius": { "uniform": regions[0].1.radius, "proposed": regions[1].1.radius },
        }),
    )
}

fn generate(args: GenerateArgs) -> anyhow::Result<()> {
    let (data, params) = match args.kind {
        Kind::TwoClass => {
            let tc = &args.two_class;
            (
                synthetic_two_class(tc.n_per_class, tc.x_spread, tc.y_spread, tc.separation, args.seed)?,
                json!({
                    "kind": "two-class",
                    "n_per_class": tc.n_per_class,
                    "x_spread": tc.x_spread,
                    "y_spread": tc.y_spread,
                    "separation": tc.separation,
                }),
            )
        }
        Kind::GeneLike => (
            synthetic_gene_like_with_shift(args.n_samples, args.n_dims, args.n_informative, args.shift, args.seed)?,
            json!({
                "kind": "gene-like",
                "n_samples": args.n_samples,
                "n_dims": args.n_dims,
                "n_informative": args.n_informative,
                "shift": args.shift,
            }),
        ),
    };
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    data.save_csv(&args.out, "class")?;
    let mut config = params;
    config["command"] = json!("generate");
    config["seed"] = json!(args.seed);
    write_config(&args.out.with_extension("config.json"), &config)
}

/// 1 for bad parameters, 2 for unreadable or malformed data, 3 otherwise.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_data_error() => 2,
        Some(
            Error::InvalidNorm(_)
            | Error::InvalidKappa(_)
            | Error::InvalidWeights(_)
            | Error::InvalidParameter(_)
            | Error::UnboundedAxis { .. },
        ) => 1,
        _ => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Evaluate(a) => evaluate(a),
        Command::Weights(a) => weights(a),
        Command::Boundaries(a) => boundaries(a),
        Command::Generate(a) => generate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match e.downcast_ref::<Error>() {
                // already carries its own detail
                Some(inner) => eprintln!("error: {inner}"),
                None => eprintln!("error: {e:#}"),
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
