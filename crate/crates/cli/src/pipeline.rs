//! Verb implementations: each one reads its inputs from the output
//! directory, writes its artifacts atomically, and updates the manifest.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sharpshooter::classifier::{train_classifier, ClassifierModel};
use sharpshooter::data::{dataset_from_csv, generate_synthetic_dataset, Dataset, Split};
use sharpshooter::io::{
    self, load_model, read_results_jsonl, to_json_bytes, write_results_jsonl, ModelDocument,
    ModelPayload,
};
use sharpshooter::methods::{
    CounterfactualResult, ExplainContext, Method, MethodRegistry,
};
use sharpshooter::metrics::{evaluate_batch, MetricsTable};
use sharpshooter::nn::AdamConfig;
use sharpshooter::vae::{train_vae, VaeModel, VaeRole, VaeTrainConfig};
use sharpshooter::viz::{
    derive_seed, sample_boundary_cloud, sweep_and_pareto, trace_interpolation, write_hexbin_csv,
    write_scatter_csv, write_segments_csv, write_sweep_csv, write_trace_csv, CodeClass,
    HexbinGrid, LineSegment, PcaProjector, ScatterPoint, SweepConfig,
};
use sharpshooter::Matrix;

use crate::config::{DatasetConfig, ExperimentConfig, Seeds};
use crate::error::CliError;
use crate::manifest::{sha256_hex, RunManifest};

pub const DATASET_FILE: &str = "dataset.json";
pub const CLASSIFIER_FILE: &str = "models/classifier.json";
pub const TVAE_FILE: &str = "models/tvae.json";
pub const UVAE_FILE: &str = "models/uvae.json";
pub const TABLE_JSON: &str = "reports/metrics.json";
pub const TABLE_TEXT: &str = "reports/metrics.txt";
pub const TRAINING_FILE: &str = "reports/training.json";
pub const SWEEP_JSON: &str = "reports/sweep.json";
pub const HEXBIN_CSV: &str = "viz/hexbin.csv";
pub const CODES_CSV: &str = "viz/codes.csv";
pub const SEGMENTS_CSV: &str = "viz/segments.csv";
pub const SWEEP_CSV: &str = "viz/sweep.csv";

pub fn results_file(method: Method) -> String {
    format!("results/{method}.jsonl")
}

pub fn report_file(method: Method) -> String {
    format!("reports/metrics-{method}.json")
}

pub fn trace_file(index: usize) -> String {
    format!("viz/trace-{index}.csv")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verb {
    GenData,
    Train,
    Explain,
    Evaluate,
    Visualize,
    Sweep,
    All,
}

impl Verb {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verb::GenData => "gen-data",
            Verb::Train => "train",
            Verb::Explain => "explain",
            Verb::Evaluate => "evaluate",
            Verb::Visualize => "visualize",
            Verb::Sweep => "sweep",
            Verb::All => "all",
        }
    }
}

/// Flag-level overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub methods: Option<Vec<Method>>,
    pub jobs: Option<usize>,
}

/// Runs one verb (or the whole pipeline for [`Verb::All`]) and returns the
/// updated manifest.
pub fn run_command(
    verb: Verb,
    config: &ExperimentConfig,
    opts: &RunOptions,
) -> Result<RunManifest, CliError> {
    let mut config = config.clone();
    if let Some(master) = opts.seed {
        config.seeds = Seeds {
            data: derive_seed(master, 0),
            classifier: derive_seed(master, 1),
            tvae: derive_seed(master, 2),
            uvae: derive_seed(master, 3),
            sweep: derive_seed(master, 4),
        };
    }
    let out_dir = opts
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(&config.output.dir));
    let jobs = opts.jobs.unwrap_or(1).max(1);
    let methods = match &opts.methods {
        Some(ms) => ms.clone(),
        None => config
            .explain
            .methods
            .iter()
            .map(|m| m.parse().expect("validated at load"))
            .collect(),
    };

    let config_hash = sha256_hex(&config.canonical_bytes()?);
    let mut manifest = RunManifest::load_or_new(&out_dir, &config_hash);

    let verbs: Vec<Verb> = match verb {
        Verb::All => vec![
            Verb::GenData,
            Verb::Train,
            Verb::Explain,
            Verb::Evaluate,
            Verb::Visualize,
        ],
        single => vec![single],
    };

    for v in verbs {
        match v {
            Verb::GenData => gen_data(&config, &out_dir, &mut manifest)?,
            Verb::Train => train(&config, &out_dir, &mut manifest)?,
            Verb::Explain => explain(&config, &out_dir, &methods, jobs, &mut manifest)?,
            Verb::Evaluate => evaluate(&config, &out_dir, &methods, &mut manifest)?,
            Verb::Visualize => visualize(&config, &out_dir, &mut manifest)?,
            Verb::Sweep => sweep(&config, &out_dir, &mut manifest)?,
            Verb::All => unreachable!("expanded above"),
        }
        manifest.record_verb(v.as_str());
        manifest.save(&out_dir)?;
    }
    Ok(manifest)
}

fn load_dataset(out_dir: &Path) -> Result<Dataset, CliError> {
    let path = out_dir.join(DATASET_FILE);
    let file = std::fs::File::open(&path).map_err(|_| {
        CliError::Prerequisite(format!(
            "dataset {} not found; run `gen-data` first",
            path.display()
        ))
    })?;
    Ok(io::from_json_reader(std::io::BufReader::new(file))?)
}

struct Models {
    classifier: ClassifierModel,
    tvae: VaeModel,
    uvae: VaeModel,
}

fn load_models(out_dir: &Path) -> Result<Models, CliError> {
    let load = |rel: &str| -> Result<ModelDocument, CliError> {
        load_model(&out_dir.join(rel)).map_err(|_| {
            CliError::Prerequisite(format!(
                "model {} not found; run `train` first",
                out_dir.join(rel).display()
            ))
        })
    };
    let classifier = match load(CLASSIFIER_FILE)?.payload {
        ModelPayload::Classifier(c) => c,
        _ => return Err(CliError::Other("classifier file holds a VAE".into())),
    };
    let tvae = match load(TVAE_FILE)?.payload {
        ModelPayload::Vae(v) => v,
        _ => return Err(CliError::Other("tvae file holds a classifier".into())),
    };
    let uvae = match load(UVAE_FILE)?.payload {
        ModelPayload::Vae(v) => v,
        _ => return Err(CliError::Other("uvae file holds a classifier".into())),
    };
    Ok(Models {
        classifier,
        tvae,
        uvae,
    })
}

/// Held-out base-class rows in dataset order, capped at `n`.
fn explain_rows(dataset: &Dataset, n: usize) -> Vec<Vec<f64>> {
    let mut rows = Vec::new();
    for i in 0..dataset.rows.rows() {
        if dataset.split[i] == Split::Test && dataset.labels[i] == 0 {
            rows.push(dataset.rows.row(i).to_vec());
            if rows.len() == n {
                break;
            }
        }
    }
    rows
}

fn gen_data(
    config: &ExperimentConfig,
    out_dir: &Path,
    manifest: &mut RunManifest,
) -> Result<(), CliError> {
    let mut dataset = match &config.dataset {
        DatasetConfig::Synthetic(spec) => generate_synthetic_dataset(spec, config.seeds.data)
            .map_err(|e| CliError::Config(format!("dataset.synthetic: {e}")))?,
        DatasetConfig::Csv {
            path,
            train_fraction,
        } => {
            let csv_path = Path::new(path);
            if !csv_path.exists() {
                return Err(CliError::Prerequisite(format!(
                    "csv file {path} does not exist"
                )));
            }
            dataset_from_csv(csv_path, *train_fraction, config.seeds.data)?
        }
    };
    dataset.standardize()?;
    manifest.write_artifact(out_dir, DATASET_FILE, &to_json_bytes(&dataset)?)?;
    Ok(())
}

fn train(
    config: &ExperimentConfig,
    out_dir: &Path,
    manifest: &mut RunManifest,
) -> Result<(), CliError> {
    let dataset = load_dataset(out_dir)?;
    let (train_rows, train_labels) = dataset.select(Split::Train);
    let schema = dataset.schema.clone();

    let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seeds.classifier, 0));
    let mut classifier =
        ClassifierModel::glorot(schema.clone(), &config.classifier.hidden, &mut init_rng)?;
    let classifier_history = train_classifier(
        &mut classifier,
        &train_rows,
        &train_labels,
        config.classifier.epochs,
        derive_seed(config.seeds.classifier, 1),
        AdamConfig::with_learning_rate(config.classifier.learning_rate),
    )?;

    let target_rows = dataset.select_class(Split::Train, 1);
    let mut tvae_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seeds.tvae, 0));
    let mut tvae = VaeModel::glorot(
        schema.clone(),
        &config.tvae.hidden,
        config.tvae.latent_dim,
        config.tvae.beta,
        config.tvae.categorical_weight,
        VaeRole::Target,
        &mut tvae_rng,
    )?;
    let tvae_history = train_vae(
        &mut tvae,
        &target_rows,
        &VaeTrainConfig {
            epochs: config.tvae.epochs,
            batch_size: config.tvae.batch_size,
            seed: derive_seed(config.seeds.tvae, 1),
            optimizer: AdamConfig::with_learning_rate(config.tvae.learning_rate),
        },
    )?;

    let mut uvae_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seeds.uvae, 0));
    let mut uvae = VaeModel::glorot(
        schema,
        &config.uvae.hidden,
        config.uvae.latent_dim,
        config.uvae.beta,
        config.uvae.categorical_weight,
        VaeRole::Unified,
        &mut uvae_rng,
    )?;
    let uvae_history = train_vae(
        &mut uvae,
        &train_rows,
        &VaeTrainConfig {
            epochs: config.uvae.epochs,
            batch_size: config.uvae.batch_size,
            seed: derive_seed(config.seeds.uvae, 1),
            optimizer: AdamConfig::with_learning_rate(config.uvae.learning_rate),
        },
    )?;

    let (test_rows, test_labels) = dataset.select(Split::Test);
    let test_scores = classifier.classify(&test_rows)?;
    let test_auc = sharpshooter::auc(&test_scores, &test_labels)?;

    manifest.write_artifact(
        out_dir,
        CLASSIFIER_FILE,
        &to_json_bytes(&ModelDocument::classifier(classifier))?,
    )?;
    manifest.write_artifact(out_dir, TVAE_FILE, &to_json_bytes(&ModelDocument::vae(tvae))?)?;
    manifest.write_artifact(out_dir, UVAE_FILE, &to_json_bytes(&ModelDocument::vae(uvae))?)?;

    #[derive(serde::Serialize)]
    #[serde(rename_all = "kebab-case")]
    struct TrainingReport {
        test_auc: f64,
        classifier_loss: Vec<f64>,
        tvae_loss: Vec<sharpshooter::VaeLossBreakdown>,
        uvae_loss: Vec<sharpshooter::VaeLossBreakdown>,
    }
    manifest.write_artifact(
        out_dir,
        TRAINING_FILE,
        &to_json_bytes(&TrainingReport {
            test_auc,
            classifier_loss: classifier_history,
            tvae_loss: tvae_history,
            uvae_loss: uvae_history,
        })?,
    )?;
    Ok(())
}

fn explain(
    config: &ExperimentConfig,
    out_dir: &Path,
    methods: &[Method],
    jobs: usize,
    manifest: &mut RunManifest,
) -> Result<(), CliError> {
    let dataset = load_dataset(out_dir)?;
    let models = load_models(out_dir)?;
    let rows = explain_rows(&dataset, config.explain.n_samples);
    if rows.is_empty() {
        return Err(CliError::Config(
            "explain.n-samples: no held-out base-class rows available".to_string(),
        ));
    }

    let registry = MethodRegistry::standard(&config.sharpshooter, &config.gdi, &config.gdl)?;
    let ctx = ExplainContext {
        classifier: &models.classifier,
        tvae: &models.tvae,
        uvae: &models.uvae,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Other(format!("thread pool: {e}")))?;

    for &method in methods {
        let generator = registry
            .get(method.as_str())
            .expect("standard registry holds all methods");
        let results: Result<Vec<CounterfactualResult>, sharpshooter::Error> = pool.install(|| {
            rows.par_iter()
                .map(|x| generator.generate(&ctx, x))
                .collect()
        });
        let mut results = results?;
        if !config.output.include_timing {
            for r in &mut results {
                r.wall_time_secs = 0.0;
            }
        }
        let mut bytes = Vec::new();
        write_results_jsonl(&mut bytes, &results)?;
        manifest.write_artifact(out_dir, &results_file(method), &bytes)?;
    }
    Ok(())
}

fn evaluate(
    config: &ExperimentConfig,
    out_dir: &Path,
    methods: &[Method],
    manifest: &mut RunManifest,
) -> Result<(), CliError> {
    let models = load_models(out_dir)?;
    let mut reports = Vec::with_capacity(methods.len());
    for &method in methods {
        let rel = results_file(method);
        let path = out_dir.join(&rel);
        let file = std::fs::File::open(&path).map_err(|_| {
            CliError::Prerequisite(format!(
                "results {} not found; run `explain` first",
                path.display()
            ))
        })?;
        let results = read_results_jsonl(std::io::BufReader::new(file))?;
        let p = match method {
            Method::SsLine | Method::SsGd => config.sharpshooter.p,
            Method::Gdi => config.gdi.p,
            Method::Gdl => config.gdl.p,
        };
        let report = evaluate_batch(&models.classifier, &models.uvae, &results, p)?;
        manifest.write_artifact(out_dir, &report_file(method), &to_json_bytes(&report)?)?;
        reports.push(report);
    }
    let table = MetricsTable::new(reports);
    manifest.write_artifact(out_dir, TABLE_JSON, &to_json_bytes(&table)?)?;
    manifest.write_artifact(out_dir, TABLE_TEXT, table.render().as_bytes())?;
    Ok(())
}

fn visualize(
    config: &ExperimentConfig,
    out_dir: &Path,
    manifest: &mut RunManifest,
) -> Result<(), CliError> {
    let dataset = load_dataset(out_dir)?;
    let models = load_models(out_dir)?;
    let uvae = &models.uvae;

    let base_rows = dataset.select_class(Split::Test, 0);
    let target_rows = dataset.select_class(Split::Test, 1);
    if base_rows.rows() == 0 || target_rows.rows() == 0 {
        return Err(CliError::Config(
            "dataset: test split must contain both classes".to_string(),
        ));
    }

    let (base_codes, _) = uvae.encode(&base_rows)?;
    let (target_codes, _) = uvae.encode(&target_rows)?;
    let projected_rows = models.tvae.reconstruct_mean(&base_rows)?;
    let (projected_codes, _) = uvae.encode(&projected_rows)?;

    // PCA on the union of base, target, and projected codes.
    let mut union_rows: Vec<Vec<f64>> = Vec::new();
    for m in [&base_codes, &target_codes, &projected_codes] {
        for r in 0..m.rows() {
            union_rows.push(m.row(r).to_vec());
        }
    }
    let union = Matrix::from_rows(&union_rows)?;
    let (pca, _) = PcaProjector::fit(&union)?;

    // Scatter of all code populations, counterfactuals included when the
    // line-search results exist.
    let mut scatter = Vec::new();
    let push_codes = |codes: &Matrix, class: CodeClass, scatter: &mut Vec<ScatterPoint>| {
        for r in 0..codes.rows() {
            let p = pca.project(codes.row(r));
            scatter.push(ScatterPoint {
                x: p[0],
                y: p[1],
                class,
            });
        }
    };
    push_codes(&base_codes, CodeClass::Base, &mut scatter);
    push_codes(&target_codes, CodeClass::Target, &mut scatter);
    push_codes(&projected_codes, CodeClass::Projected, &mut scatter);
    if let Ok(file) = std::fs::File::open(out_dir.join(results_file(Method::SsLine))) {
        let results = read_results_jsonl(std::io::BufReader::new(file))?;
        for r in results.iter().filter(|r| r.x_cf.is_some()) {
            let code = uvae.encode_mean_row(r.x_cf.as_ref().unwrap())?;
            let p = pca.project(&code);
            scatter.push(ScatterPoint {
                x: p[0],
                y: p[1],
                class: CodeClass::Counterfactual,
            });
        }
    }
    let mut codes_csv = Vec::new();
    write_scatter_csv(&mut codes_csv, &scatter)?;
    manifest.write_artifact(out_dir, CODES_CSV, &codes_csv)?;

    // Interpolation pairs for the explain selection: base code to the code
    // of its target projection.
    let selection = explain_rows(&dataset, config.explain.n_samples);
    let mut pairs = Vec::with_capacity(selection.len());
    let mut segments = Vec::with_capacity(selection.len());
    for x in &selection {
        let projected = models.tvae.reconstruct_mean(&Matrix::from_row(x)?)?;
        let z_base = uvae.encode_mean_row(x)?;
        let z_target = uvae.encode_mean_row(projected.row(0))?;
        let p0 = pca.project(&z_base);
        let p1 = pca.project(&z_target);
        segments.push(LineSegment {
            x0: p0[0],
            y0: p0[1],
            x1: p1[0],
            y1: p1[1],
        });
        pairs.push((z_base, z_target));
    }
    let mut segments_csv = Vec::new();
    write_segments_csv(&mut segments_csv, &segments)?;
    manifest.write_artifact(out_dir, SEGMENTS_CSV, &segments_csv)?;

    let cloud = sample_boundary_cloud(
        &models.classifier,
        uvae,
        &pca,
        &pairs,
        config.viz.alpha_count,
    )?;
    let weighted: Vec<(f64, f64, f64)> =
        cloud.iter().map(|((x, y), s)| (*x, *y, *s)).collect();
    let grid = HexbinGrid::build(&weighted, config.viz.hex_cell_size)?;
    let mut hexbin_csv = Vec::new();
    write_hexbin_csv(&mut hexbin_csv, &grid)?;
    manifest.write_artifact(out_dir, HEXBIN_CSV, &hexbin_csv)?;

    // Per-sample interpolation traces.
    let ctx = ExplainContext {
        classifier: &models.classifier,
        tvae: &models.tvae,
        uvae,
    };
    let grid_points: Vec<f64> = (1..=config.viz.trace_alpha_count)
        .map(|i| i as f64 / config.viz.trace_alpha_count as f64)
        .collect();
    for (i, x) in selection.iter().take(config.viz.trace_samples).enumerate() {
        let trace = trace_interpolation(&ctx, x, &grid_points)?;
        let mut trace_csv = Vec::new();
        write_trace_csv(&mut trace_csv, &dataset.schema.encoded_columns(), &trace)?;
        manifest.write_artifact(out_dir, &trace_file(i), &trace_csv)?;
    }
    Ok(())
}

fn sweep(
    config: &ExperimentConfig,
    out_dir: &Path,
    manifest: &mut RunManifest,
) -> Result<(), CliError> {
    let dataset = load_dataset(out_dir)?;
    let models = load_models(out_dir)?;
    let sweep_config = SweepConfig {
        hidden: config.sweep.hidden.clone(),
        categorical_weight: config.sweep.categorical_weight,
        role: config.sweep.role,
        epochs: config.sweep.epochs,
        batch_size: config.sweep.batch_size,
        seed: config.seeds.sweep,
        learning_rate: config.sweep.learning_rate,
    };
    let records = sweep_and_pareto(
        &dataset,
        &models.classifier,
        &config.sweep.betas,
        &config.sweep.latent_dims,
        &sweep_config,
    )?;
    let mut csv = Vec::new();
    write_sweep_csv(&mut csv, &records)?;
    manifest.write_artifact(out_dir, SWEEP_CSV, &csv)?;
    manifest.write_artifact(out_dir, SWEEP_JSON, &to_json_bytes(&records)?)?;
    Ok(())
}
