use clap::{Args, Parser, Subcommand};
use relustab_cli::report::{
    self, config_hash, rows_jsonl, run_rows_csv, table_csv, tool_info, Manifest,
};
use relustab_cli::runs::{
    self, analytic_tables, init_scale_study, mnist_sweep, pyramid_demo, synthetic_sweep,
    CmdError, Flattest, InitScaleSpec, MnistSpec, PyramidSpec, SweepSpec,
};
use relustab_cli::selftest;
use serde::Deserialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "relustab", version, about = "Shallow ReLU step-size stability experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train a single network and print its stability report row.
    Train(TrainArgs),
    /// Step-size/seed grid on the synthetic Gaussian task.
    Sweep(SweepArgs),
    /// SGD runs on a binary MNIST subset (IDX files required).
    Mnist(MnistArgs),
    /// Sharpness-vs-eta tables across initialization scales.
    InitScale(InitScaleArgs),
    /// Gaussian analytic weight tables: (b, g(b)) and (r, rho(r)).
    AnalyticWeights(AnalyticArgs),
    /// Exact pyramid net stability demo and one-layer depth-separation trend.
    PyramidDemo(PyramidArgs),
    /// Run the acceptance checks (no network or MNIST files needed).
    Selftest(SelftestArgs),
}

#[derive(Args, Clone)]
struct OutputArgs {
    /// Report file; stdout when omitted. Relative paths resolve against
    /// RELUSTAB_OUT_DIR when that variable is set.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

#[derive(Args, Clone)]
struct TaskArgs {
    /// Optional JSON config file; explicit flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// Mini-batch size; 0 means full-batch GD.
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    init_scale: Option<f64>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long)]
    stop_loss: Option<f64>,
    #[arg(long, value_enum)]
    flattest: Option<Flattest>,
    #[arg(long)]
    data_seed: Option<u64>,
}

/// JSON config file shape shared by train/sweep; unknown keys are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepPatch {
    n: Option<usize>,
    d: Option<usize>,
    k: Option<usize>,
    batch: Option<usize>,
    init_scale: Option<f64>,
    etas: Option<Vec<f64>>,
    seeds: Option<u64>,
    max_steps: Option<usize>,
    stop_loss: Option<f64>,
    diverge_loss: Option<f64>,
    flattest: Option<Flattest>,
    data_seed: Option<u64>,
}

fn load_patch(path: &Option<PathBuf>) -> Result<SweepPatch, CmdError> {
    let Some(path) = path else {
        return Ok(SweepPatch::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CmdError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CmdError::Config(format!("{}: {e}", path.display())))
}

fn apply_task_args(spec: &mut SweepSpec, patch: &SweepPatch, args: &TaskArgs) {
    if let Some(v) = patch.n {
        spec.n = v;
    }
    if let Some(v) = patch.d {
        spec.d = v;
    }
    if let Some(v) = patch.k {
        spec.k = v;
    }
    if let Some(v) = patch.batch {
        spec.batch = v;
    }
    if let Some(v) = patch.init_scale {
        spec.init_scale = v;
    }
    if let Some(v) = &patch.etas {
        spec.etas = v.clone();
    }
    if let Some(v) = patch.seeds {
        spec.seeds = (0..v).collect();
    }
    if let Some(v) = patch.max_steps {
        spec.max_steps = v;
    }
    if let Some(v) = patch.stop_loss {
        spec.stop_loss = v;
    }
    if let Some(v) = patch.diverge_loss {
        spec.diverge_loss = v;
    }
    if let Some(v) = patch.flattest {
        spec.flattest = v;
    }
    if let Some(v) = patch.data_seed {
        spec.data_seed = v;
    }
    if let Some(v) = args.n {
        spec.n = v;
    }
    if let Some(v) = args.d {
        spec.d = v;
    }
    if let Some(v) = args.k {
        spec.k = v;
    }
    if let Some(v) = args.batch {
        spec.batch = v;
    }
    if let Some(v) = args.init_scale {
        spec.init_scale = v;
    }
    if let Some(v) = args.max_steps {
        spec.max_steps = v;
    }
    if let Some(v) = args.stop_loss {
        spec.stop_loss = v;
    }
    if let Some(v) = args.flattest {
        spec.flattest = v;
    }
    if let Some(v) = args.data_seed {
        spec.data_seed = v;
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    task: TaskArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated step sizes; default is a 7-point log grid over
    /// [1e-3, 1e-1].
    #[arg(long, value_delimiter = ',')]
    etas: Option<Vec<f64>>,
    /// Number of seeds (0..seeds).
    #[arg(long)]
    seeds: Option<u64>,
    #[command(flatten)]
    task: TaskArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct MnistArgs {
    #[arg(long)]
    mnist_images: PathBuf,
    #[arg(long)]
    mnist_labels: PathBuf,
    #[arg(long, value_delimiter = ',')]
    etas: Option<Vec<f64>>,
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    class_pos: Option<u8>,
    #[arg(long)]
    class_neg: Option<u8>,
    #[arg(long)]
    val_n: Option<usize>,
    #[command(flatten)]
    task: TaskArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct InitScaleArgs {
    /// Comma-separated initialization scales.
    #[arg(long, value_delimiter = ',', default_value = "1,5,10,15")]
    scales: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    etas: Option<Vec<f64>>,
    #[arg(long)]
    seeds: Option<u64>,
    #[command(flatten)]
    task: TaskArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct AnalyticArgs {
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct PyramidArgs {
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    perturb: Option<f64>,
    #[arg(long)]
    eta_factor: Option<f64>,
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    widths: Option<Vec<usize>>,
    #[arg(long)]
    grid_n: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SelftestArgs {
    /// Optional MNIST IDX files; without them the MNIST check is skipped.
    #[arg(long)]
    mnist_images: Option<PathBuf>,
    #[arg(long)]
    mnist_labels: Option<PathBuf>,
}

fn emit(
    output: &OutputArgs,
    command: &str,
    config: serde_json::Value,
    hash: String,
    csv_body: String,
    jsonl_body: String,
    extra: serde_json::Value,
) -> Result<(), CmdError> {
    let body = match output.format {
        Format::Csv => csv_body,
        Format::Jsonl => jsonl_body,
    };
    match &output.out {
        None => {
            print!("{body}");
            Ok(())
        }
        Some(path) => {
            let manifest = Manifest {
                command: command.into(),
                config,
                config_hash: hash,
                tool: tool_info(),
                outputs: vec![path.display().to_string()],
                extra,
            };
            report::write_with_manifest(path, &body, &manifest)
                .map(|p| eprintln!("wrote {}", p.display()))
                .map_err(|e| CmdError::Run(e.to_string()))
        }
    }
}

fn cmd_train(args: &TrainArgs) -> Result<(), CmdError> {
    let patch = load_patch(&args.task.config)?;
    let mut spec = SweepSpec::default();
    let file_eta = patch.etas.as_ref().and_then(|v| v.first().copied());
    apply_task_args(&mut spec, &patch, &args.task);
    let eta = args
        .eta
        .or(file_eta)
        .ok_or_else(|| CmdError::Config("--eta is required".into()))?;
    spec.etas = vec![eta];
    spec.seeds = vec![args.seed];
    let config = serde_json::to_value(&spec).unwrap();
    let hash = config_hash("train", &config);
    let rows = synthetic_sweep(&spec, &hash)?;
    emit(
        &args.output,
        "train",
        config,
        hash,
        run_rows_csv(&rows),
        rows_jsonl(&rows),
        serde_json::Value::Null,
    )
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), CmdError> {
    let patch = load_patch(&args.task.config)?;
    let mut spec = SweepSpec::default();
    apply_task_args(&mut spec, &patch, &args.task);
    if let Some(etas) = &args.etas {
        spec.etas = etas.clone();
    }
    if let Some(seeds) = args.seeds {
        spec.seeds = (0..seeds).collect();
    }
    let config = serde_json::to_value(&spec).unwrap();
    let hash = config_hash("sweep", &config);
    let rows = synthetic_sweep(&spec, &hash)?;
    emit(
        &args.output,
        "sweep",
        config,
        hash,
        run_rows_csv(&rows),
        rows_jsonl(&rows),
        serde_json::Value::Null,
    )
}

fn cmd_mnist(args: &MnistArgs) -> Result<(), CmdError> {
    let patch = load_patch(&args.task.config)?;
    let mut spec = MnistSpec::new(args.mnist_images.clone(), args.mnist_labels.clone());
    let mut task = SweepSpec {
        n: spec.n,
        d: 784,
        k: spec.k,
        batch: spec.batch,
        init_scale: spec.init_scale,
        etas: spec.etas.clone(),
        seeds: spec.seeds.clone(),
        max_steps: spec.max_steps,
        stop_loss: spec.stop_loss,
        diverge_loss: 1e9,
        flattest: spec.flattest,
        data_seed: spec.data_seed,
    };
    apply_task_args(&mut task, &patch, &args.task);
    spec.n = task.n;
    spec.k = task.k;
    spec.batch = task.batch;
    spec.init_scale = task.init_scale;
    spec.max_steps = task.max_steps;
    spec.stop_loss = task.stop_loss;
    spec.flattest = task.flattest;
    spec.data_seed = task.data_seed;
    if let Some(etas) = &args.etas {
        spec.etas = etas.clone();
    } else if let Some(etas) = &patch.etas {
        spec.etas = etas.clone();
    }
    if let Some(seeds) = args.seeds.or(patch.seeds) {
        spec.seeds = (0..seeds).collect();
    }
    if let Some(v) = args.class_pos {
        spec.class_pos = v;
    }
    if let Some(v) = args.class_neg {
        spec.class_neg = v;
    }
    if let Some(v) = args.val_n {
        spec.val_n = v;
    }
    let config = serde_json::to_value(&spec).unwrap();
    let hash = config_hash("mnist", &config);
    let rows = mnist_sweep(&spec, &hash)?;
    emit(
        &args.output,
        "mnist",
        config,
        hash,
        run_rows_csv(&rows),
        rows_jsonl(&rows),
        serde_json::Value::Null,
    )
}

fn cmd_init_scale(args: &InitScaleArgs) -> Result<(), CmdError> {
    let patch = load_patch(&args.task.config)?;
    let mut task = SweepSpec::default();
    apply_task_args(&mut task, &patch, &args.task);
    let mut spec = InitScaleSpec {
        scales: args.scales.clone(),
        n: task.n,
        d: task.d,
        k: task.k,
        max_steps: task.max_steps,
        stop_loss: task.stop_loss,
        data_seed: task.data_seed,
        ..InitScaleSpec::default()
    };
    if let Some(etas) = args.etas.clone().or(patch.etas.clone()) {
        spec.etas = etas;
    }
    if let Some(seeds) = args.seeds.or(patch.seeds) {
        spec.seeds = (0..seeds).collect();
    }
    let config = serde_json::to_value(&spec).unwrap();
    let hash = config_hash("init-scale", &config);
    let (rows, crossovers) = init_scale_study(&spec)?;
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                report::fmt_float(r.init_scale),
                report::fmt_float(r.eta),
                report::fmt_float(r.two_over_eta),
                r.lambda_median.map(report::fmt_float).unwrap_or_default(),
                r.pinned.map(|b| b.to_string()).unwrap_or_default(),
                r.n_converged.to_string(),
                r.n_runs.to_string(),
            ]
        })
        .collect();
    emit(
        &args.output,
        "init-scale",
        config,
        hash,
        table_csv(&runs::SCALE_COLUMNS, &csv_rows),
        rows_jsonl(&rows),
        serde_json::json!({ "crossover_eta": crossovers }),
    )
}

fn cmd_analytic(args: &AnalyticArgs) -> Result<(), CmdError> {
    let (g_rows, rho_rows) = analytic_tables()?;
    let config = serde_json::json!({
        "g_grid": {"lo": -3.0, "hi": 3.0, "points": g_rows.len()},
        "rho_grid": {"lo": 1e-2, "hi": 1e1, "points": rho_rows.len(), "spacing": "log"},
    });
    let hash = config_hash("analytic-weights", &config);
    let mut csv_rows = Vec::new();
    for (b, g) in &g_rows {
        csv_rows.push(vec![
            "g".to_string(),
            report::fmt_float(*b),
            report::fmt_float(*g),
        ]);
    }
    for (r, rho) in &rho_rows {
        csv_rows.push(vec![
            "rho".to_string(),
            report::fmt_float(*r),
            report::fmt_float(*rho),
        ]);
    }
    #[derive(serde::Serialize)]
    struct AnalyticRow {
        table: &'static str,
        arg: f64,
        value: f64,
    }
    let jsonl: Vec<AnalyticRow> = g_rows
        .iter()
        .map(|&(b, g)| AnalyticRow { table: "g", arg: b, value: g })
        .chain(rho_rows.iter().map(|&(r, rho)| AnalyticRow {
            table: "rho",
            arg: r,
            value: rho,
        }))
        .collect();
    emit(
        &args.output,
        "analytic-weights",
        config,
        hash,
        table_csv(&["table", "arg", "value"], &csv_rows),
        rows_jsonl(&jsonl),
        serde_json::Value::Null,
    )
}

fn cmd_pyramid(args: &PyramidArgs) -> Result<(), CmdError> {
    let mut spec = PyramidSpec::default();
    if let Some(v) = args.d {
        spec.d = v;
    }
    if let Some(v) = args.n {
        spec.n = v;
    }
    if let Some(v) = args.perturb {
        spec.perturb = v;
    }
    if let Some(v) = args.eta_factor {
        spec.eta_factor = v;
    }
    if let Some(v) = args.seeds {
        spec.seeds = (0..v).collect();
    }
    if let Some(v) = &args.widths {
        spec.widths = v.clone();
    }
    if let Some(v) = args.grid_n {
        spec.grid_n = v;
    }
    if let Some(v) = args.restarts {
        spec.restarts = v;
    }
    if let Some(v) = args.max_steps {
        spec.max_steps = v;
    }
    let config = serde_json::to_value(&spec).unwrap();
    let hash = config_hash("pyramid-demo", &config);
    let out = pyramid_demo(&spec)?;
    let mut csv_rows = Vec::new();
    for rep in &out.demos {
        csv_rows.push(vec![
            "demo".to_string(),
            rep.seed.to_string(),
            runs::status_str(rep.status).to_string(),
            report::fmt_float(rep.lambda_max),
            report::fmt_float(rep.eta),
            rep.steps.to_string(),
            report::fmt_float(rep.final_loss),
            report::fmt_float(rep.probe_rmse),
        ]);
    }
    for row in &out.trend {
        csv_rows.push(vec![
            "trend".to_string(),
            row.k.to_string(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            report::fmt_float(row.fit_rmse),
            report::fmt_float(row.s_theta),
        ]);
    }
    #[derive(serde::Serialize)]
    #[serde(tag = "table", rename_all = "lowercase")]
    enum PyramidRow {
        Demo {
            seed: u64,
            status: &'static str,
            lambda_max: f64,
            eta: f64,
            steps: usize,
            final_loss: f64,
            probe_rmse: f64,
        },
        Trend {
            k: usize,
            fit_rmse: f64,
            s_theta: f64,
        },
    }
    let jsonl: Vec<PyramidRow> = out
        .demos
        .iter()
        .map(|r| PyramidRow::Demo {
            seed: r.seed,
            status: runs::status_str(r.status),
            lambda_max: r.lambda_max,
            eta: r.eta,
            steps: r.steps,
            final_loss: r.final_loss,
            probe_rmse: r.probe_rmse,
        })
        .chain(out.trend.iter().map(|t| PyramidRow::Trend {
            k: t.k,
            fit_rmse: t.fit_rmse,
            s_theta: t.s_theta,
        }))
        .collect();
    emit(
        &args.output,
        "pyramid-demo",
        config,
        hash,
        table_csv(
            &["table", "id", "status", "lambda_max", "eta", "steps", "final_loss_or_rmse", "probe_rmse_or_s_theta"],
            &csv_rows,
        ),
        rows_jsonl(&jsonl),
        serde_json::json!({
            "lambda_two_layer": out.lambda_two_layer,
            "s_theta_threshold": out.s_theta_threshold,
        }),
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Train(a) => cmd_train(a),
        Cmd::Sweep(a) => cmd_sweep(a),
        Cmd::Mnist(a) => cmd_mnist(a),
        Cmd::InitScale(a) => cmd_init_scale(a),
        Cmd::AnalyticWeights(a) => cmd_analytic(a),
        Cmd::PyramidDemo(a) => cmd_pyramid(a),
        Cmd::Selftest(a) => {
            let ok = selftest::run_all(a.mnist_images.clone(), a.mnist_labels.clone());
            return if ok { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
