use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use blink::approx::{ApproxParams, Variation};
use blink::exact::exact_blink_score;
use blink::graph::{split_node_weights, NodeId, WeightedGraph};
use blink::harness::{
    evaluate, nodes_within_hops, pooled_precision_metric, rank_candidates, score_tasks,
    synthetic_temporal_benchmark, CollaborationRule, LinkRule, Measure, Protocol, SyntheticSpec,
    TemporalDataset,
};
use blink::io::{
    format_score, graph_from_records, knowledge_from_records, read_edge_file, read_group_file,
    read_node_file, write_roc_csv, Config,
};
use blink::mc::mc_blink_estimate;
use blink::weighting::{ParamGrid, SchemeKind, WeightScheme};
use blink::BlinkError;

#[derive(Parser)]
#[command(
    name = "blink",
    version,
    about = "Proximity scores from reachability probabilities in unreliable graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score one node pair, optionally under every measure at once.
    Score {
        #[command(flatten)]
        graph: GraphArgs,
        src: String,
        dst: String,
        /// Measures to run; repeatable. Defaults to `blink`.
        #[arg(long, value_enum)]
        measure: Vec<MeasureArg>,
        /// Run the full battery of measures.
        #[arg(long)]
        all: bool,
        #[command(flatten)]
        knobs: MeasureKnobs,
        /// Write CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank candidate targets from one source node.
    Rank {
        #[command(flatten)]
        graph: GraphArgs,
        src: String,
        #[arg(long, value_enum, default_value_t = MeasureArg::Blink)]
        measure: MeasureArg,
        #[command(flatten)]
        knobs: MeasureKnobs,
        /// Candidate universe: nodes within this many hops of the source.
        #[arg(long, default_value_t = 4)]
        hops: usize,
        /// Rank every node instead of the hop neighborhood.
        #[arg(long)]
        all_nodes: bool,
        /// Keep only the best K rows.
        #[arg(long)]
        top: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a full benchmark described by a config file.
    Predict {
        config: PathBuf,
        /// Write the score CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grid-search weighting parameters against a benchmark config.
    Scan {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact score for one pair (subject to the reduction cap).
    Oracle {
        #[command(flatten)]
        graph: GraphArgs,
        src: String,
        dst: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo estimate for one pair.
    Mc {
        #[command(flatten)]
        graph: GraphArgs,
        src: String,
        dst: String,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// How file values turn into edge and node probabilities.
#[derive(ValueEnum, Clone, Copy, Debug)]
enum SchemeArg {
    /// Values already are probabilities in (0, 1].
    Direct,
    /// Values are frequencies, realized as 1 - (1-b)^f.
    Exponential,
    /// Values are frequencies, realized as b * f.
    Linear,
}

#[derive(Args, Debug)]
struct GraphArgs {
    /// Edge file: `src<TAB>dst[<TAB>value]`, `#` comments allowed.
    graph: PathBuf,
    /// Optional node value file: `node<TAB>value`.
    #[arg(long)]
    nodes: Option<PathBuf>,
    /// Optional group file: one interaction per line, members tab-separated.
    #[arg(long)]
    groups: Option<PathBuf>,
    /// Read each edge line as a connection in both directions.
    #[arg(long)]
    undirected: bool,
    #[arg(long, value_enum, default_value_t = SchemeArg::Direct)]
    scheme: SchemeArg,
    /// Relation base probability for the frequency schemes.
    #[arg(long, default_value_t = 0.5)]
    b1: f64,
    /// Entity base probability for the frequency schemes.
    #[arg(long, default_value_t = 0.5)]
    b2: f64,
    /// Log base for frequency damping when groups derive frequencies.
    #[arg(long, default_value_t = 4.0)]
    gamma: f64,
}

impl GraphArgs {
    fn load(&self) -> Result<WeightedGraph, BlinkError> {
        let edges = read_edge_file(&self.graph)?;
        let nodes = match &self.nodes {
            Some(p) => read_node_file(p)?,
            None => Vec::new(),
        };
        let groups = match &self.groups {
            Some(p) => read_group_file(p)?,
            None => Vec::new(),
        };
        match self.scheme {
            SchemeArg::Direct => graph_from_records(&edges, &nodes, &groups, self.undirected),
            SchemeArg::Exponential | SchemeArg::Linear => {
                let kind = match self.scheme {
                    SchemeArg::Linear => SchemeKind::Linear,
                    _ => SchemeKind::Exponential,
                };
                let k =
                    knowledge_from_records(&edges, &nodes, &groups, self.gamma, self.undirected);
                k.apply_weights(WeightScheme::new(kind, self.b1, self.b2))
            }
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum MeasureArg {
    Blink,
    Hybrid,
    Mc,
    Erd,
    Ppr,
    Katz,
    AdamicAdar,
    Conductance,
    ShortestPath,
}

impl MeasureArg {
    const ALL: [MeasureArg; 9] = [
        MeasureArg::Blink,
        MeasureArg::Hybrid,
        MeasureArg::Mc,
        MeasureArg::Erd,
        MeasureArg::Ppr,
        MeasureArg::Katz,
        MeasureArg::AdamicAdar,
        MeasureArg::Conductance,
        MeasureArg::ShortestPath,
    ];

    fn label(self) -> &'static str {
        match self {
            MeasureArg::Blink => "blink",
            MeasureArg::Hybrid => "hybrid",
            MeasureArg::Mc => "mc",
            MeasureArg::Erd => "erd",
            MeasureArg::Ppr => "ppr",
            MeasureArg::Katz => "katz",
            MeasureArg::AdamicAdar => "adamic-adar",
            MeasureArg::Conductance => "conductance",
            MeasureArg::ShortestPath => "shortest-path",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum VariationArg {
    High,
    Medium,
    Low,
}

impl From<VariationArg> for Variation {
    fn from(v: VariationArg) -> Variation {
        match v {
            VariationArg::High => Variation::High,
            VariationArg::Medium => Variation::Medium,
            VariationArg::Low => Variation::Low,
        }
    }
}

/// Scalar knobs shared by the pair and ranking commands.
#[derive(Args, Debug)]
struct MeasureKnobs {
    #[arg(long, value_enum, default_value_t = VariationArg::High)]
    variation: VariationArg,
    /// Samples for the Monte Carlo measures and the high-tier fallback.
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    /// Round-distance sampling treats the pair symmetrically.
    #[arg(long)]
    symmetric: bool,
    /// Restart probability of the random-walk measure.
    #[arg(long, default_value_t = 0.15)]
    alpha: f64,
    /// Decay of the walk-counting measure; must stay below 1/spectral radius.
    #[arg(long, default_value_t = 0.005)]
    beta: f64,
    /// Exact refinement size for the hybrid measure.
    #[arg(long, default_value_t = 20)]
    hybrid_k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl MeasureKnobs {
    fn measure(&self, which: MeasureArg) -> Measure {
        match which {
            MeasureArg::Blink => Measure::Blink {
                variation: self.variation.into(),
            },
            MeasureArg::Hybrid => Measure::BlinkHybrid {
                coarse: self.variation.into(),
                top_k: self.hybrid_k,
            },
            MeasureArg::Mc => Measure::BlinkMc {
                samples: self.samples,
            },
            MeasureArg::Erd => Measure::Erd {
                samples: self.samples,
                symmetric: self.symmetric,
            },
            MeasureArg::Ppr => Measure::Ppr { alpha: self.alpha },
            MeasureArg::Katz => Measure::Katz { beta: self.beta },
            MeasureArg::AdamicAdar => Measure::AdamicAdar,
            MeasureArg::Conductance => Measure::EffectiveConductance,
            MeasureArg::ShortestPath => Measure::ShortestPath,
        }
    }

    fn params(&self) -> ApproxParams {
        ApproxParams {
            seed: self.seed,
            mc_budget: self.samples,
            ..ApproxParams::default()
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                BlinkError::Parse { .. } => 2u8,
                BlinkError::CapExceeded { .. } | BlinkError::BudgetExceeded { .. } => 3,
                _ => 1,
            })
        }
    }
}

fn run(cli: Cli) -> Result<(), BlinkError> {
    match cli.command {
        Command::Score {
            graph,
            src,
            dst,
            measure,
            all,
            knobs,
            out,
        } => {
            let g = graph.load()?;
            let a = resolve(&g, &src)?;
            let b = resolve(&g, &dst)?;
            let split = split_node_weights(&g);
            let chosen: Vec<MeasureArg> = if all {
                MeasureArg::ALL.to_vec()
            } else if measure.is_empty() {
                vec![MeasureArg::Blink]
            } else {
                measure
            };
            let mut text = String::from("measure,score\n");
            let targets: BTreeSet<NodeId> = [b].into_iter().collect();
            for m in chosen {
                let ranked =
                    rank_candidates(&g, &split, a, &targets, knobs.measure(m), &knobs.params())?;
                let score = ranked.first().map(|&(_, s)| s).unwrap_or(0.0);
                text.push_str(&format!("{},{}\n", m.label(), format_score(score)));
            }
            emit(out.as_deref(), &text)
        }
        Command::Rank {
            graph,
            src,
            measure,
            knobs,
            hops,
            all_nodes,
            top,
            out,
        } => {
            let g = graph.load()?;
            let a = resolve(&g, &src)?;
            let candidates: BTreeSet<NodeId> = if all_nodes {
                g.nodes().filter(|&v| v != a).collect()
            } else {
                nodes_within_hops(&g, a, hops)
            };
            let split = split_node_weights(&g);
            let mut ranked =
                rank_candidates(&g, &split, a, &candidates, knobs.measure(measure), &knobs.params())?;
            if let Some(k) = top {
                ranked.truncate(k);
            }
            let mut text = String::from("node,score\n");
            for (v, s) in ranked {
                text.push_str(&format!("{},{}\n", g.node_name(v), format_score(s)));
            }
            emit(out.as_deref(), &text)
        }
        Command::Predict { config, out } => {
            let cfg = Config::from_file(&config)?;
            let run = BenchmarkRun::from_config(&cfg)?;
            let dataset = run.load()?;
            report_gaps(&dataset);
            let scheme = run.scheme(run.b1, run.b2);
            let ranked = score_tasks(
                &dataset.knowledge,
                &dataset.tasks,
                run.measure,
                scheme,
                &run.params,
            )?;
            let g = dataset.knowledge.apply_weights(scheme)?;
            let report = evaluate(&ranked, &g, run.measure.score_order(), run.max_roc);
            let baseline = blink::harness::random_precision_baseline(&dataset.tasks);

            let mut text = String::from("source,average_precision\n");
            for &(v, ap) in &report.per_task_ap {
                text.push_str(&format!("{},{}\n", g.node_name(v), format_score(ap)));
            }
            text.push_str(&format!("# map {}\n", format_score(report.map)));
            text.push_str(&format!("# precision {}\n", format_score(report.precision)));
            text.push_str(&format!("# baseline {}\n", format_score(baseline)));
            text.push_str(&format!("# tasks {}\n", ranked.len()));
            text.push_str(&format!("# truth {}\n", report.truth_count));
            emit(out.as_deref(), &text)?;

            let roc_path = roc_path(out.as_deref(), &run.name);
            let mut buf = Vec::new();
            write_roc_csv(&mut buf, &report.roc)?;
            std::fs::write(roc_path, buf)?;
            Ok(())
        }
        Command::Scan { config, out } => {
            let cfg = Config::from_file(&config)?;
            let run = BenchmarkRun::from_config(&cfg)?;
            let grid = run.grid(&cfg)?;
            // Gamma shapes the derived frequencies, so each gamma level is a
            // fresh dataset build. Tasks are structural and stay identical.
            let mut datasets: std::collections::BTreeMap<u64, TemporalDataset> =
                std::collections::BTreeMap::new();
            for &gamma in &grid.gamma {
                if let std::collections::btree_map::Entry::Vacant(slot) =
                    datasets.entry(gamma.to_bits())
                {
                    slot.insert(run.load_with_gamma(gamma)?);
                }
            }
            if let Some(first) = datasets.values().next() {
                report_gaps(first);
            }
            let mut text = String::from("b1,b2,gamma,metric\n");
            let best = blink::weighting::grid_search(&grid, |b1, b2, gamma| {
                let dataset = &datasets[&gamma.to_bits()];
                let value = match run.metric(&dataset.knowledge, &dataset.tasks, run.scheme(b1, b2))
                {
                    Ok(v) => v,
                    Err(e) => {
                        eprintln!("scan point b1={b1} b2={b2} gamma={gamma}: {e}");
                        f64::NEG_INFINITY
                    }
                };
                text.push_str(&format!(
                    "{},{},{},{}\n",
                    b1,
                    b2,
                    gamma,
                    format_score(value)
                ));
                value
            });
            text.push_str(&format!(
                "# best b1={} b2={} gamma={} metric={}\n",
                best.b1,
                best.b2,
                best.gamma,
                format_score(best.metric)
            ));
            emit(out.as_deref(), &text)
        }
        Command::Oracle {
            graph,
            src,
            dst,
            out,
        } => {
            let g = graph.load()?;
            let a = resolve(&g, &src)?;
            let b = resolve(&g, &dst)?;
            let s = exact_blink_score(&g, a, b)?;
            let text = format!("source,target,score\n{},{},{}\n", src, dst, format_score(s));
            emit(out.as_deref(), &text)
        }
        Command::Mc {
            graph,
            src,
            dst,
            samples,
            seed,
            out,
        } => {
            let g = graph.load()?;
            let a = resolve(&g, &src)?;
            let b = resolve(&g, &dst)?;
            let est = mc_blink_estimate(&g, a, b, samples, seed);
            let text = format!(
                "mean,stderr,hits,samples,score\n{},{},{},{},{}\n",
                format_score(est.mean),
                format_score(est.stderr),
                est.hits,
                est.samples,
                format_score(blink::score_from_probability(est.mean))
            );
            emit(out.as_deref(), &text)
        }
    }
}

fn resolve(g: &WeightedGraph, name: &str) -> Result<NodeId, BlinkError> {
    g.node_id(name)
        .ok_or_else(|| BlinkError::UnknownNode(name.to_owned()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), BlinkError> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

/// `<dir of the score csv>/<name>.roc.csv`.
fn roc_path(out: Option<&Path>, name: &str) -> PathBuf {
    let file = format!("{name}.roc.csv");
    match out.and_then(Path::parent) {
        Some(dir) if !dir.as_os_str().is_empty() => dir.join(file),
        _ => PathBuf::from(file),
    }
}

fn report_gaps(dataset: &TemporalDataset) {
    for name in &dataset.mapping_gaps {
        eprintln!("unmapped test node: {name}");
    }
}

/// Everything a benchmark run needs, parsed from one config file. Keys and
/// defaults are documented in the README.
struct BenchmarkRun {
    protocol: ProtocolChoice,
    measure: Measure,
    kind: SchemeKind,
    b1: f64,
    b2: f64,
    gamma: f64,
    params: ApproxParams,
    candidate_hops: usize,
    max_roc: usize,
    metric_is_map: bool,
    name: String,
}

enum ProtocolChoice {
    Synthetic(SyntheticSpec),
    File {
        train: String,
        test: String,
        mapping: Option<String>,
        protocol: Protocol,
    },
}

impl BenchmarkRun {
    fn from_config(cfg: &Config) -> Result<BenchmarkRun, BlinkError> {
        let bad = |message: String| BlinkError::Parse { line: 0, message };

        let variation = match cfg.get("variation").unwrap_or("medium") {
            "high" => Variation::High,
            "medium" => Variation::Medium,
            "low" => Variation::Low,
            other => return Err(bad(format!("unknown variation: {other:?}"))),
        };
        let samples = cfg.get_u64("samples")?.unwrap_or(10_000);
        let measure = match cfg.get("measure").unwrap_or("blink") {
            "blink" => Measure::Blink { variation },
            "hybrid" => Measure::BlinkHybrid {
                coarse: variation,
                top_k: cfg.get_usize("hybrid_k")?.unwrap_or(20),
            },
            "mc" => Measure::BlinkMc { samples },
            "erd" => Measure::Erd {
                samples,
                symmetric: cfg.get("symmetric") == Some("true"),
            },
            "ppr" => Measure::Ppr {
                alpha: cfg.get_f64("alpha")?.unwrap_or(0.15),
            },
            "katz" => Measure::Katz {
                beta: cfg.get_f64("beta")?.unwrap_or(0.005),
            },
            "adamic-adar" => Measure::AdamicAdar,
            "conductance" => Measure::EffectiveConductance,
            "shortest-path" => Measure::ShortestPath,
            other => return Err(bad(format!("unknown measure: {other:?}"))),
        };

        let kind = match cfg.get("scheme") {
            None => measure.default_scheme_kind(),
            Some("exponential") => SchemeKind::Exponential,
            Some("linear") => SchemeKind::Linear,
            Some(other) => return Err(bad(format!("unknown scheme: {other:?}"))),
        };

        let mut params = ApproxParams {
            seed: cfg.get_u64("seed")?.unwrap_or(0),
            mc_budget: samples,
            ..ApproxParams::default()
        };
        if let Some(t1) = cfg.get_f64("t1")? {
            params.filters.t1 = t1;
        }
        if let Some(t2) = cfg.get_f64("t2")? {
            params.filters.t2 = t2;
        }

        let gamma = cfg.get_f64("gamma")?.unwrap_or(4.0);
        let candidate_hops = cfg.get_usize("candidate_hops")?.unwrap_or(4);

        let protocol = match cfg.get("protocol").unwrap_or("synthetic") {
            "synthetic" => {
                let mut spec = SyntheticSpec::default();
                if let Some(n) = cfg.get_usize("nodes")? {
                    spec.nodes = n;
                }
                if let Some(c) = cfg.get_usize("chords")? {
                    spec.chords = c;
                }
                if let Some(s) = cfg.get_usize("sources")? {
                    spec.sources = s;
                }
                if let Some(b) = cfg.get_f64("truth_b1")? {
                    spec.truth_b1 = b;
                }
                if let Some(b) = cfg.get_f64("node_b2")? {
                    spec.node_b2 = b;
                }
                if let Some(d) = cfg.get_usize("draws")? {
                    spec.draws = d;
                }
                if let Some(s) = cfg.get_u64("benchmark_seed")? {
                    spec.seed = s;
                }
                spec.candidate_hops = candidate_hops;
                ProtocolChoice::Synthetic(spec)
            }
            kind @ ("collaboration" | "links") => {
                let train = cfg
                    .get("train")
                    .ok_or_else(|| bad("missing key: train".into()))?
                    .to_owned();
                let test = cfg
                    .get("test")
                    .ok_or_else(|| bad("missing key: test".into()))?
                    .to_owned();
                let protocol = if kind == "collaboration" {
                    Protocol::Collaboration {
                        rule: CollaborationRule {
                            min_train: cfg.get_usize("min_train")?.unwrap_or(3),
                            min_test: cfg.get_usize("min_test")?.unwrap_or(3),
                        },
                        bipartite: cfg.get("bipartite") == Some("true"),
                    }
                } else {
                    Protocol::Links {
                        rule: LinkRule {
                            min_new: cfg.get_usize("min_new")?.unwrap_or(5),
                            max_frac: cfg.get_f64("max_frac")?.unwrap_or(0.2),
                        },
                    }
                };
                ProtocolChoice::File {
                    train,
                    test,
                    mapping: cfg.get("mapping").map(str::to_owned),
                    protocol,
                }
            }
            other => return Err(bad(format!("unknown protocol: {other:?}"))),
        };

        Ok(BenchmarkRun {
            protocol,
            measure,
            kind,
            b1: cfg.get_f64("b1")?.unwrap_or(0.5),
            b2: cfg.get_f64("b2")?.unwrap_or(0.5),
            gamma,
            params,
            candidate_hops,
            max_roc: cfg.get_usize("max_roc")?.unwrap_or(1_000),
            metric_is_map: match cfg.get("metric") {
                None | Some("precision") => false,
                Some("map") => true,
                Some(other) => return Err(bad(format!("unknown metric: {other:?}"))),
            },
            name: cfg.get("name").unwrap_or("run").to_owned(),
        })
    }

    fn load(&self) -> Result<TemporalDataset, BlinkError> {
        self.load_with_gamma(self.gamma)
    }

    fn load_with_gamma(&self, gamma: f64) -> Result<TemporalDataset, BlinkError> {
        match &self.protocol {
            ProtocolChoice::Synthetic(spec) => Ok(synthetic_temporal_benchmark(spec)),
            ProtocolChoice::File {
                train,
                test,
                mapping,
                protocol,
            } => blink::harness::load_temporal_dataset(
                train,
                test,
                mapping.as_deref(),
                protocol,
                gamma,
                self.candidate_hops,
            ),
        }
    }

    fn scheme(&self, b1: f64, b2: f64) -> WeightScheme {
        WeightScheme::new(self.kind, b1, b2)
    }

    fn grid(&self, cfg: &Config) -> Result<ParamGrid, BlinkError> {
        let mut grid = ParamGrid::default();
        if let Some(v) = cfg.get_f64_list("b1_grid")? {
            grid.b1 = v;
        }
        if let Some(v) = cfg.get_f64_list("b2_grid")? {
            grid.b2 = v;
        }
        if let Some(v) = cfg.get_f64_list("gamma_grid")? {
            grid.gamma = v;
        }
        Ok(grid)
    }

    fn metric(
        &self,
        knowledge: &blink::weighting::DomainKnowledge,
        tasks: &[blink::harness::PredictionTask],
        scheme: WeightScheme,
    ) -> Result<f64, BlinkError> {
        if self.metric_is_map {
            let ranked = score_tasks(knowledge, tasks, self.measure, scheme, &self.params)?;
            Ok(blink::harness::mean_average_precision(&ranked))
        } else {
            pooled_precision_metric(knowledge, tasks, self.measure, scheme, &self.params)
        }
    }
}
