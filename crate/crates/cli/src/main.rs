//! Command-line front end: run the full simulation grid, enumerate
//! hierarchy profiles, simulate single data sets, cluster a capability
//! CSV with one method, and plot results.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use skillscape_core::capability::{capability_scores, sum_scores, CapabilityMatrix};
use skillscape_core::cluster::{
    centers_pseudo, centers_random, centers_rescaled, cut_largest_gap, derive_constraints,
    empty_kmeans, hclust_complete, kmeans, lcvqe, partition_to_result, CenterSet,
    ClusteringResult,
};
use skillscape_core::experiment::{
    read_csv, render_figures, run_experiment, write_outputs, ExperimentConfig, Method,
};
use skillscape_core::hierarchy::{
    build_canonical_hierarchy, enumerate_profiles, select_subset, Hierarchy, HierarchyFile,
    HierarchyKind, Profile, ProfileSet, SubsetMode,
};
use skillscape_core::seeds::derive_rng;
use skillscape_core::sim::{
    assign_students, sample_cdm, sample_q_matrix, simulate_responses, ModelKind, QMatrix,
};

#[derive(Parser)]
#[command(
    name = "skillscape",
    about = "Simulate students under skill hierarchies and cluster their capability scores",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full simulation grid from a JSON config.
    Run(RunArgs),
    /// Print the profiles consistent with a hierarchy.
    Enumerate(EnumerateArgs),
    /// Simulate one data set and write it as CSV files.
    Simulate(SimulateArgs),
    /// Run one clustering method on a capability-score CSV.
    Cluster(ClusterArgs),
    /// Render SVG figures from a results CSV.
    Plot(PlotArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to the experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for results.csv, figures/, run_meta.json.
    #[arg(long)]
    out: PathBuf,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct EnumerateArgs {
    /// Canonical name (linear, convergent, divergent, unstructured, null)
    /// or path to a hierarchy JSON file.
    #[arg(long)]
    hierarchy: String,
    /// Number of skills (ignored when a file is given).
    #[arg(long, default_value_t = 6)]
    k: usize,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    hierarchy: String,
    #[arg(long, default_value_t = 6)]
    k: usize,
    /// Generating model: dina or nida.
    #[arg(long, default_value = "dina")]
    model: ModelKind,
    #[arg(long, default_value_t = 250)]
    students: usize,
    #[arg(long, default_value_t = 30)]
    items: usize,
    /// Number of profiles present (defaults to all of them). Prefix of the
    /// canonical order for linear/convergent/divergent, random otherwise.
    #[arg(long)]
    subset_size: Option<usize>,
    /// Q-matrix mix as "<skills>x<items>,..." e.g. "1x9,2x18,3x3".
    #[arg(long)]
    mix: Option<String>,
    #[arg(long, default_value_t = 0.30)]
    slip_max: f64,
    #[arg(long, default_value_t = 0.15)]
    guess_max: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output directory for q_matrix.csv, responses.csv, capability.csv,
    /// truth.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClusterArgs {
    /// Method: hc, kmeans, emptyk_random, emptyk_rescaled,
    /// emptyk_pseudo_dina, emptyk_pseudo_nida, semisup_dina, semisup_nida.
    #[arg(long)]
    method: Method,
    /// Capability-score CSV (one row per student, one column per skill).
    #[arg(long)]
    input: PathBuf,
    /// Hierarchy (name or file); required for rescaled/pseudo/semisup
    /// methods and used for the cluster cap elsewhere.
    #[arg(long)]
    hierarchy: Option<String>,
    #[arg(long, default_value_t = 6)]
    k: usize,
    /// Cap on the number of clusters; defaults to the hierarchy's profile
    /// count.
    #[arg(long)]
    max_clusters: Option<usize>,
    /// Q-matrix CSV; required for pseudo/semisup methods.
    #[arg(long)]
    q: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pseudo_m: usize,
    #[arg(long, default_value_t = 0.30)]
    slip_max: f64,
    #[arg(long, default_value_t = 0.15)]
    guess_max: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Assignment CSV destination (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dump per-iteration objectives to this CSV for debugging.
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// results.csv from a previous run.
    #[arg(long)]
    results: PathBuf,
    /// Directory for the SVG files.
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    if let Err(e) = real_main() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn real_main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => cmd_run(args),
        Command::Enumerate(args) => cmd_enumerate(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Cluster(args) => cmd_cluster(args),
        Command::Plot(args) => cmd_plot(args),
    }
}

/// A hierarchy argument is a canonical name or a path to a JSON file.
fn load_hierarchy(arg: &str, k: usize) -> Result<Hierarchy> {
    if let Ok(kind) = arg.parse::<HierarchyKind>() {
        return Ok(build_canonical_hierarchy(kind, k)?);
    }
    let path = Path::new(arg);
    if !path.exists() {
        bail!(
            "'{arg}' is neither a canonical hierarchy name (linear, convergent, divergent, \
             unstructured, null) nor an existing file"
        );
    }
    let raw = std::fs::read_to_string(path).with_context(|| format!("reading {arg}"))?;
    let file: HierarchyFile = serde_json::from_str(&raw).with_context(|| format!("parsing {arg}"))?;
    Ok(file.to_hierarchy()?)
}

fn subset_mode_for(arg: &str) -> SubsetMode {
    match arg.parse::<HierarchyKind>() {
        Ok(HierarchyKind::Linear) | Ok(HierarchyKind::Convergent) | Ok(HierarchyKind::Divergent) => {
            SubsetMode::Prefix
        }
        _ => SubsetMode::Random,
    }
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::from_file(&args.config)
        .with_context(|| format!("loading config {}", args.config.display()))?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let started = Instant::now();
    let output = run_experiment(&cfg)?;
    let paths = write_outputs(&output, &args.out)?;
    println!(
        "wrote {} rows to {} ({} figures, meta at {}) in {:.1?}",
        output.rows.len(),
        paths.results_csv.display(),
        paths.figures.len(),
        paths.run_meta.display(),
        started.elapsed()
    );
    for note in &output.meta.skipped_cells {
        eprintln!("note: {note}");
    }
    Ok(())
}

fn cmd_enumerate(args: EnumerateArgs) -> Result<()> {
    let hierarchy = load_hierarchy(&args.hierarchy, args.k)?;
    let profiles = enumerate_profiles(&hierarchy)?;
    for p in profiles.iter() {
        println!("{p}");
    }
    println!("{} profiles", profiles.len());
    Ok(())
}

fn parse_mix(raw: &str) -> Result<Vec<(usize, usize)>> {
    raw.split(',')
        .map(|part| {
            let (skills, items) = part
                .trim()
                .split_once(['x', 'X'])
                .with_context(|| format!("mix entry '{part}' is not <skills>x<items>"))?;
            Ok((
                skills.trim().parse().with_context(|| format!("mix entry '{part}'"))?,
                items.trim().parse().with_context(|| format!("mix entry '{part}'"))?,
            ))
        })
        .collect()
}

fn default_mix(items: usize, skills: usize) -> Result<Vec<(usize, usize)>> {
    if items == 30 && skills >= 3 {
        return Ok(vec![(1, 9), (2, 18), (3, 3)]);
    }
    bail!("no default q-matrix mix for J = {items}; pass --mix, e.g. --mix 1x{items}")
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let hierarchy = load_hierarchy(&args.hierarchy, args.k)?;
    let k = hierarchy.num_skills();
    let profiles = enumerate_profiles(&hierarchy)?;
    let subset = match args.subset_size {
        Some(size) => select_subset(
            &profiles,
            size,
            subset_mode_for(&args.hierarchy),
            &mut derive_rng(args.seed, &["cli", "simulate", "subset"]),
        )?,
        None => profiles.clone(),
    };
    let mix = match &args.mix {
        Some(raw) => parse_mix(raw)?,
        None => default_mix(args.items, k)?,
    };
    let q = sample_q_matrix(
        args.items,
        k,
        &mix,
        &mut derive_rng(args.seed, &["cli", "simulate", "q"]),
    )?;
    let students = assign_students(
        args.students,
        &subset,
        &mut derive_rng(args.seed, &["cli", "simulate", "students"]),
    )?;
    let model = sample_cdm(
        args.model,
        &q,
        args.slip_max,
        args.guess_max,
        &mut derive_rng(args.seed, &["cli", "simulate", "params"]),
    )?;
    let responses = simulate_responses(
        &students,
        &q,
        &model,
        &mut derive_rng(args.seed, &["cli", "simulate", "responses"]),
    )?;
    let scores = capability_scores(&sum_scores(&responses, &q)?, &q)?;

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    q.to_csv(&args.out.join("q_matrix.csv"))?;
    responses.to_csv(&args.out.join("responses.csv"))?;
    scores.to_csv(&args.out.join("capability.csv"))?;
    write_truth_csv(&args.out.join("truth.csv"), &students, &subset)?;
    let meta = serde_json::json!({
        "seed": args.seed,
        "hierarchy": args.hierarchy,
        "subset": subset.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
        "model": model,
        "slip_max": args.slip_max,
        "guess_max": args.guess_max,
    });
    std::fs::write(
        args.out.join("sim_meta.json"),
        serde_json::to_string_pretty(&meta)? + "\n",
    )
    .with_context(|| format!("writing {}", args.out.join("sim_meta.json").display()))?;
    println!(
        "simulated {} students x {} items ({} of {} profiles present) into {}",
        args.students,
        args.items,
        subset.len(),
        profiles.len(),
        args.out.display()
    );
    Ok(())
}

fn write_truth_csv(path: &Path, students: &[Profile], subset: &ProfileSet) -> Result<()> {
    let mut out = String::from("student,profile,profile_index\n");
    for (i, p) in students.iter().enumerate() {
        let idx = subset.position(p).expect("student profiles come from the subset");
        out.push_str(&format!("{},{},{}\n", i + 1, p, idx));
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn cmd_cluster(args: ClusterArgs) -> Result<()> {
    let scores = CapabilityMatrix::from_csv(&args.input)?;
    let points = scores.points().to_vec();
    let dim = scores.num_skills();

    let hierarchy = args
        .hierarchy
        .as_ref()
        .map(|h| load_hierarchy(h, args.k))
        .transpose()?;
    let profiles = hierarchy.as_ref().map(enumerate_profiles).transpose()?;
    if let Some(ps) = &profiles {
        if ps.num_skills() != dim {
            bail!(
                "capability data has {dim} skills but the hierarchy has {}",
                ps.num_skills()
            );
        }
    }
    let max_clusters = match (args.max_clusters, &profiles) {
        (Some(m), _) => m,
        (None, Some(ps)) => ps.len(),
        (None, None) => bail!("pass --hierarchy or --max-clusters to bound the cluster count"),
    };
    let need_profiles = || {
        profiles
            .clone()
            .with_context(|| format!("method {} needs --hierarchy", args.method))
    };
    let need_q = || -> Result<QMatrix> {
        let path = args
            .q
            .as_ref()
            .with_context(|| format!("method {} needs --q <q_matrix.csv>", args.method))?;
        let q = QMatrix::from_csv(path)?;
        if q.num_skills() != dim {
            bail!("Q-matrix covers {} skills but data has {dim}", q.num_skills());
        }
        Ok(q)
    };
    let mut rng = derive_rng(args.seed, &["cli", "cluster", args.method.name()]);

    let result: ClusteringResult = match args.method {
        Method::Hc => {
            let dendrogram = hclust_complete(&points)?;
            let cut = cut_largest_gap(&dendrogram, max_clusters)?;
            partition_to_result(&points, cut, "hc")?
        }
        Method::Kmeans => kmeans(&points, max_clusters, 5, &mut rng)?,
        Method::EmptyKRandom => {
            let init = centers_random(&points, max_clusters, &mut rng)?;
            empty_kmeans(&points, &init)?
        }
        Method::EmptyKRescaled => {
            let init = centers_rescaled(&points, &need_profiles()?)?;
            empty_kmeans(&points, &init)?
        }
        Method::EmptyKPseudoDina | Method::EmptyKPseudoNida => {
            let init = centers_pseudo(
                &need_profiles()?,
                &need_q()?,
                args.method.pseudo_model().unwrap(),
                args.pseudo_m,
                args.slip_max,
                args.guess_max,
                &mut rng,
            )?;
            empty_kmeans(&points, &init)?
        }
        Method::SemisupDina | Method::SemisupNida => {
            let ps = need_profiles()?;
            let q = need_q()?;
            let model = sample_cdm(
                args.method.pseudo_model().unwrap(),
                &q,
                args.slip_max,
                args.guess_max,
                &mut rng,
            )?;
            let cohort: Vec<Profile> = ps
                .iter()
                .flat_map(|p| std::iter::repeat_n(p.clone(), args.pseudo_m))
                .collect();
            let responses = simulate_responses(&cohort, &q, &model, &mut rng)?;
            let pseudo = capability_scores(&sum_scores(&responses, &q)?, &q)?;
            let mut all = pseudo.points().to_vec();
            all.extend(points.iter().cloned());
            let mut labels: Vec<Option<Profile>> = cohort.into_iter().map(Some).collect();
            labels.extend(std::iter::repeat_n(None, points.len()));
            let mut centers = Vec::with_capacity(ps.len());
            for p_idx in 0..ps.len() {
                let mut mean = vec![0.0; dim];
                for i in 0..args.pseudo_m {
                    for (acc, v) in mean.iter_mut().zip(pseudo.row(p_idx * args.pseudo_m + i)) {
                        *acc += v;
                    }
                }
                for acc in mean.iter_mut() {
                    *acc /= args.pseudo_m as f64;
                }
                centers.push(mean);
            }
            let init = CenterSet::labeled(centers, ps.profiles().to_vec())?;
            let constraints = derive_constraints(&labels)?;
            lcvqe(&all, &labels, ps.len(), &constraints, &init)?
        }
    };

    let mut out = String::from(if result.labels.is_empty() {
        "student,cluster\n"
    } else {
        "student,cluster,profile\n"
    });
    for (i, &c) in result.assignment.iter().enumerate() {
        if result.labels.is_empty() {
            out.push_str(&format!("{},{}\n", i + 1, c));
        } else {
            let label = result.labels[c]
                .as_ref()
                .map(|p| p.to_string())
                .unwrap_or_default();
            out.push_str(&format!("{},{},{}\n", i + 1, c, label));
        }
    }
    match &args.out {
        Some(path) => std::fs::write(path, out)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{out}"),
    }
    if let Some(path) = &args.trace_out {
        let mut trace = String::from("iteration,objective\n");
        for (i, obj) in result.objective_trace.iter().enumerate() {
            trace.push_str(&format!("{},{obj:.6}\n", i + 1));
        }
        std::fs::write(path, trace).with_context(|| format!("writing {}", path.display()))?;
    }
    eprintln!(
        "{}: {} clusters, objective {:.6}, {} iterations",
        result.method_tag,
        result.num_clusters(),
        result.objective,
        result.iterations
    );
    Ok(())
}

fn cmd_plot(args: PlotArgs) -> Result<()> {
    let rows = read_csv(&args.results)?;
    let paths = render_figures(&rows, &args.out)?;
    println!("wrote {} figures to {}", paths.len(), args.out.display());
    Ok(())
}
