use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use hclust_cert::harness::{certify, fmt_f64, Achieved, run_sweep, CertifyRequest, SweepConfig, TargetSpec};
use hclust_cert::inequalities::{alpha_sup, sample_ineq_2, sample_ineq_avg, IneqBatch, IneqSample};
use hclust_cert::instances::{
    gen_literal_adversary, gen_random_euclidean, gen_random_metric, gen_single_link_adversary,
};
use hclust_cert::metric::InstanceFile;
use hclust_cert::oracle::DEFAULT_N_MAX;
use hclust_cert::{
    extract_clustering, opt_both, run_linkage, threshold_opt_dm, Clustering,
    DistanceMatrix, Error, LinkageMethod,
};

const EXIT_USAGE: u8 = 2;
const EXIT_ASSERTION: u8 = 3;
const EXIT_GUARD: u8 = 4;

#[derive(Parser)]
#[command(name = "hclust-cert", version, about = "Linkage clustering with approximation certificates")]
struct Cli {
    /// Seed for generators and samplers.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Largest instance the exhaustive oracle will enumerate.
    #[arg(long, global = true, default_value_t = DEFAULT_N_MAX)]
    n_max_oracle: usize,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated instance as JSON.
    #[command(subcommand)]
    Generate(Generate),
    /// Run one linkage method and cut its dendrogram at k.
    Run(RunArgs),
    /// Bounds and per-merge certificates for one (instance, method, k) cell.
    Certify(CertifyArgs),
    /// Run a TOML-configured grid and write a CSV report.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Sample the auxiliary inequalities.
    Inequalities {
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 1_000_000)]
        i_max: usize,
    },
    /// Exact OPT_DM and OPT_AV by enumeration.
    Oracle {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        k: usize,
        /// Also compute OPT_DM with the clique-cover oracle and compare.
        #[arg(long)]
        cross_check: bool,
    },
}

#[derive(Subcommand)]
enum Generate {
    Adversary {
        #[arg(long)]
        k: usize,
        #[arg(long = "B")]
        b: f64,
        #[arg(long)]
        eps: f64,
        /// Keep the outer distance at exactly 2B even when that breaks the metric.
        #[arg(long)]
        literal: bool,
    },
    Euclidean {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
    },
    Metric {
        #[arg(long)]
        n: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value = "CL")]
    method: String,
    #[arg(long)]
    k: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetKind {
    Oracle,
    OracleDm,
    OracleAv,
    File,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value = "CL")]
    method: String,
    #[arg(long, value_enum, default_value = "oracle")]
    target: TargetKind,
    /// Target clustering for `--target file`: a list of blocks, or a sidecar with a `target` field.
    #[arg(long)]
    target_file: Option<PathBuf>,
}

/// Assertion failures collected during a command.
#[derive(Serialize)]
struct Manifest {
    command: String,
    failures: Vec<serde_json::Value>,
}

enum Outcome {
    Ok,
    Failed(Manifest),
}

fn instance_id(path: &Path) -> String {
    path.file_stem().map_or_else(|| "instance".into(), |s| s.to_string_lossy().into_owned())
}

fn read_instance(path: &Path) -> anyhow::Result<DistanceMatrix> {
    let file = InstanceFile::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(file.to_matrix()?)
}

fn read_target(path: &Path, n: usize) -> anyhow::Result<Clustering> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let blocks = match value {
        serde_json::Value::Object(mut o) => o.remove("target").ok_or_else(|| {
            Error::Format(format!("{} has no `target` field", path.display()))
        })?,
        other => other,
    };
    let blocks: Vec<Vec<usize>> = serde_json::from_value(blocks)?;
    Ok(Clustering::new(n, blocks)?)
}

fn write(out_dir: &Path, name: &str, contents: &str) -> anyhow::Result<PathBuf> {
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn generate(cli: &Cli, g: &Generate) -> anyhow::Result<Outcome> {
    let (name, file, sidecar) = match *g {
        Generate::Adversary { k, b, eps, literal } => {
            let inst = if literal {
                gen_literal_adversary(k, b, eps)?
            } else {
                gen_single_link_adversary(k, b, eps)?
            };
            let mut labels = vec!["a".to_string(), "b".to_string()];
            labels.extend((2..k).map(|i| format!("x{i}")));
            labels.extend((1..k).map(|i| format!("y{i}")));
            let name = format!("adversary-k{k}{}", if literal { "-literal" } else { "" });
            let sidecar = serde_json::to_string_pretty(&inst.sidecar())?;
            (name, InstanceFile::new(&inst.d, Some(labels)), Some(sidecar))
        }
        Generate::Euclidean { n, dim } => (
            format!("euclidean-n{n}-d{dim}-s{}", cli.seed),
            InstanceFile::new(&gen_random_euclidean(n, dim, cli.seed)?, None),
            None,
        ),
        Generate::Metric { n } => (
            format!("metric-n{n}-s{}", cli.seed),
            InstanceFile::new(&gen_random_metric(n, cli.seed)?, None),
            None,
        ),
    };
    println!("{}", write(&cli.out_dir, &format!("{name}.json"), &file.to_json()?)?.display());
    if let Some(s) = sidecar {
        println!("{}", write(&cli.out_dir, &format!("{name}.target.json"), &s)?.display());
    }
    Ok(Outcome::Ok)
}

fn run(cli: &Cli, a: &RunArgs) -> anyhow::Result<Outcome> {
    let d = read_instance(&a.instance)?;
    let method: LinkageMethod = a.method.parse()?;
    let dg = run_linkage(&method, &d)?;
    let c = extract_clustering(&dg, a.k)?;
    let id = instance_id(&a.instance);
    let path = write(&cli.out_dir, &format!("{id}-{}.dendrogram.json", method.name()), &dg.to_json()?)?;
    let out = json!({
        "instance": id,
        "method": method.name(),
        "k": a.k,
        "tie_rule": dg.tie_rule(),
        "dendrogram": path,
        "clustering": c.blocks(),
        "scores": Achieved::of(&c, &d),
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(Outcome::Ok)
}

fn certify_cmd(cli: &Cli, a: &CertifyArgs) -> anyhow::Result<Outcome> {
    let d = read_instance(&a.instance)?;
    let method: LinkageMethod = a.method.parse()?;
    let target = match a.target {
        TargetKind::Oracle => TargetSpec::Oracle,
        TargetKind::OracleDm => TargetSpec::OracleDm,
        TargetKind::OracleAv => TargetSpec::OracleAv,
        TargetKind::File => {
            let p = a.target_file.as_ref().ok_or_else(|| {
                Error::Format("--target file needs --target-file".into())
            })?;
            TargetSpec::Given(read_target(p, d.n())?)
        }
    };
    let id = instance_id(&a.instance);
    let out = certify(CertifyRequest {
        instance: &id,
        provenance: &a.instance.display().to_string(),
        d: &d,
        method: &method,
        k: a.k,
        target,
        n_max: cli.n_max_oracle,
        oracle: None,
        dendrogram: None,
        certificates: true,
    })?;
    let stem = format!("{id}-{}-k{}", method.name(), a.k);
    write(&cli.out_dir, &format!("{stem}.dendrogram.json"), &out.dendrogram.to_json()?)?;
    if let Some(t) = &out.alg1 {
        write(&cli.out_dir, &format!("{stem}.forest.json"), &serde_json::to_string_pretty(t)?)?;
    }
    if let Some(t) = &out.alg2 {
        write(&cli.out_dir, &format!("{stem}.graph.json"), &serde_json::to_string_pretty(t)?)?;
    }
    let report = serde_json::to_string_pretty(&out.report)?;
    write(&cli.out_dir, &format!("{stem}.report.json"), &report)?;
    println!("{report}");
    if out.report.ok() {
        Ok(Outcome::Ok)
    } else {
        Ok(Outcome::Failed(Manifest {
            command: "certify".into(),
            failures: vec![json!({ "cell": stem, "violations": out.report.violations })],
        }))
    }
}

fn sweep(cli: &Cli, config: &Path) -> anyhow::Result<Outcome> {
    let cfg = SweepConfig::read(config)?;
    let out = run_sweep(&cfg, cli.n_max_oracle, Some(&cli.out_dir))?;
    println!("{}", cli.out_dir.join("sweep.csv").display());
    eprintln!("{} rows, {} with violations", out.rows.len(), out.failures().len());
    let failures: Vec<_> = out
        .failures()
        .into_iter()
        .map(|r| json!({ "instance": r.instance, "method": r.method, "k": r.k, "violations": r.violations }))
        .collect();
    if failures.is_empty() {
        Ok(Outcome::Ok)
    } else {
        Ok(Outcome::Failed(Manifest { command: "sweep".into(), failures }))
    }
}

fn sample_rows(name: &str, batch: &IneqBatch, w: &mut csv::Writer<Vec<u8>>) -> anyhow::Result<()> {
    let row = |kind: &str, s: &IneqSample| {
        let inputs: Vec<String> = s.inputs.iter().map(|&x| fmt_f64(x)).collect();
        vec![name.to_string(), kind.to_string(), inputs.join(";"), fmt_f64(s.lhs), fmt_f64(s.rhs), fmt_f64(s.slack)]
    };
    for s in &batch.failures {
        w.write_record(row("failure", s))?;
    }
    if let Some(s) = &batch.tightest {
        w.write_record(row("tightest", s))?;
    }
    Ok(())
}

fn inequalities(cli: &Cli, samples: usize, i_max: usize) -> anyhow::Result<Outcome> {
    let avg = sample_ineq_avg(samples, cli.seed);
    let two = sample_ineq_2(samples, cli.seed.wrapping_add(1));
    let sup = alpha_sup(i_max)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["inequality", "kind", "inputs", "lhs", "rhs", "slack"])?;
    sample_rows("avg", &avg, &mut w)?;
    sample_rows("two", &two, &mut w)?;
    let csv = String::from_utf8(w.into_inner()?)?;
    write(&cli.out_dir, "inequalities.csv", &csv)?;
    let summary = json!({
        "avg": { "checked": avg.checked, "failures": avg.failures.len() },
        "two": { "checked": two.checked, "failures": two.failures.len() },
        "alpha_sup": sup,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    let mut failures = Vec::new();
    if !avg.failures.is_empty() || !two.failures.is_empty() {
        failures.push(json!({ "samples": summary }));
    }
    if !sup.maximizer_ok || !sup.tail_ok {
        failures.push(json!({ "alpha_sup": sup }));
    }
    Ok(if failures.is_empty() {
        Outcome::Ok
    } else {
        Outcome::Failed(Manifest { command: "inequalities".into(), failures })
    })
}

fn oracle(cli: &Cli, instance: &Path, k: usize, cross_check: bool) -> anyhow::Result<Outcome> {
    let d = read_instance(instance)?;
    let both = opt_both(&d, k, cli.n_max_oracle)?;
    let threshold = if cross_check { Some(threshold_opt_dm(&d, k)?) } else { None };
    let out = json!({
        "instance": instance_id(instance),
        "k": k,
        "opt_dm": both.opt_dm.value,
        "opt_dm_witness": both.opt_dm.witness,
        "opt_av": both.opt_av.value,
        "opt_av_witness": both.opt_av.witness,
        "enumerated": both.opt_dm.enumerated,
        "threshold_opt_dm": threshold,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    match threshold {
        Some(t) if t != both.opt_dm.value => Ok(Outcome::Failed(Manifest {
            command: "oracle".into(),
            failures: vec![json!({ "opt_dm": both.opt_dm.value, "threshold_opt_dm": t })],
        })),
        _ => Ok(Outcome::Ok),
    }
}

fn dispatch(cli: &Cli) -> anyhow::Result<Outcome> {
    match &cli.command {
        Command::Generate(g) => generate(cli, g),
        Command::Run(a) => run(cli, a),
        Command::Certify(a) => certify_cmd(cli, a),
        Command::Sweep { config } => sweep(cli, config),
        Command::Inequalities { samples, i_max } => inequalities(cli, *samples, *i_max),
        Command::Oracle { instance, k, cross_check } => oracle(cli, instance, *k, *cross_check),
    }
}

fn error_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::ResourceGuard { .. }) => EXIT_GUARD,
        Some(Error::Io(_) | Error::Internal(_)) => 1,
        Some(_) => EXIT_USAGE,
        None if e.downcast_ref::<std::io::Error>().is_some() => 1,
        None => EXIT_USAGE,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    if let Some(w) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    match dispatch(&cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Failed(manifest)) => {
            let text = serde_json::to_string_pretty(&manifest).unwrap_or_default();
            match write(&cli.out_dir, "failures.json", &text) {
                Ok(p) => eprintln!("assertion failures recorded in {}", p.display()),
                Err(e) => eprintln!("{text}\nerror: {e:#}"),
            }
            ExitCode::from(EXIT_ASSERTION)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(error_code(&e))
        }
    }
}
