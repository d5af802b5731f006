use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use terp::config::QaConfig;
use terp::experiment::{ablation_run, ablation_table, lambda_sweep, prepare, standard_variants, sweep_table, toy_config, Variant};
use terp::infer::{evaluate, question_subgraph, two_stage_infer, InferenceStats};
use terp::kg::{load_triples, KnowledgeGraph};
use terp::kge::{train_kge, EmbeddingTable, ModelKind};
use terp::model::{QaEnv, QaModel};
use terp::paths::enumerate_shortest_paths;
use terp::qa::{load_qa, QaDataset, QuestionInstance};
use terp::toy::{generate_toy, ToyConfig};
use terp::train::train_qa;

#[derive(Parser)]
#[command(name = "terp", version, about = "Multi-hop KGQA over relation paths")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Removes a random fraction of the triples.
    DropEdges {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Trains RotatE or ComplEx embeddings.
    TrainKge {
        #[arg(long)]
        triples: PathBuf,
        #[arg(long, default_value = "rotate")]
        model: String,
        #[arg(long, default_value_t = 64)]
        dim: usize,
        #[arg(long, default_value_t = 100)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Config file; its kge_* keys fill in anything not given on the command line.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Trains the QA model on top of a KGE checkpoint.
    TrainQa {
        #[arg(long)]
        kg: PathBuf,
        #[arg(long)]
        qa: PathBuf,
        #[arg(long)]
        kge: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Hits@1 with two-stage inference.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        kg: PathBuf,
        #[arg(long)]
        qa: PathBuf,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        k: Option<usize>,
        /// Per-question TSV report.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Ranks answers for one question.
    Answer {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        kg: PathBuf,
        #[arg(long)]
        question: String,
        /// Topic entity label; repeat for several.
        #[arg(long, required = true)]
        topic: Vec<String>,
        #[arg(long, default_value_t = 5)]
        top: usize,
    },
    /// Writes the synthetic benchmark.
    GenToy {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Hits@1 per λ and hop bucket, without retraining.
    SweepLambda {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        kg: PathBuf,
        #[arg(long)]
        qa: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0])]
        lambdas: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Trains and evaluates model variants with shared data and seed.
    Ablate {
        /// Directory with kg.tsv, train.txt and test.txt; the toy benchmark if absent.
        #[arg(long)]
        data_dir: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// e.g. `full;without_path;rotate`; the standard five if absent.
        #[arg(long, value_delimiter = ';')]
        variants: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Prints the shortest relation paths between two entities.
    Paths {
        #[arg(long)]
        kg: PathBuf,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long, default_value_t = 3)]
        max_len: usize,
        #[arg(long, default_value_t = 32)]
        max_paths: usize,
    },
}

fn augmented(path: &Path) -> Result<KnowledgeGraph> {
    let kg = load_triples(path).with_context(|| format!("loading {}", path.display()))?;
    Ok(kg.add_inverse_relations()?)
}

fn load_config(path: Option<&Path>, base: QaConfig) -> Result<QaConfig> {
    let mut c = base;
    if let Some(p) = path {
        c.apply_text(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?;
    }
    Ok(c)
}

fn tokenized(path: &Path, kg: &KnowledgeGraph, model: &QaModel) -> Result<QaDataset> {
    let mut ds = load_qa(path, kg)?;
    if ds.skipped > 0 {
        eprintln!("skipped {} unresolvable lines in {}", ds.skipped, path.display());
    }
    ds.tokenize(&model.tokenizer);
    Ok(ds)
}

fn env_for(kg: KnowledgeGraph, model: &QaModel) -> Result<QaEnv> {
    let inf = &model.config.inference;
    Ok(QaEnv::new(kg, &model.tokenizer, inf.max_path_length, inf.max_paths)?)
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::DropEdges { input, out, fraction, seed } => {
            let kg = load_triples(&input)?;
            let kept = kg.drop_edges(fraction, seed)?;
            kept.write_triples(&out)?;
            println!("kept {} of {} triples", kept.triples().len(), kg.triples().len());
        }
        Cmd::TrainKge { triples, model, dim, epochs, seed, config, out } => {
            let mut c = load_config(config.as_deref(), QaConfig::default())?.kge;
            c.model = ModelKind::parse(&model).with_context(|| format!("unknown model {model:?}"))?;
            c.dim = dim;
            c.epochs = epochs;
            c.seed = seed;
            let kg = augmented(&triples)?;
            let trained = train_kge(&kg, &c)?;
            if let Some(l) = trained.epoch_losses.last() {
                println!("final loss {l:.4}");
            }
            trained.table.save(&out)?;
        }
        Cmd::TrainQa { kg, qa, kge, config, out } => {
            let config = load_config(config.as_deref(), QaConfig::default())?;
            let graph = augmented(&kg)?;
            let train = load_qa(&qa, &graph)?;
            if train.skipped > 0 {
                eprintln!("skipped {} unresolvable lines", train.skipped);
            }
            let prep = prepare(graph, train.instances, Vec::new(), Vec::new(), &config.inference)?;
            let table = EmbeddingTable::load(&kge)?;
            let (mut model, report) = train_qa(&prep.env, table, prep.tokenizer.clone(), &prep.train, &config)?;
            for (i, l) in report.epoch_losses.iter().enumerate() {
                println!("epoch {}\tloss {l:.4}", i + 1);
            }
            model.kge_source = kge.display().to_string();
            model.save(&out)?;
            let vocab = out.with_extension("vocab");
            model.tokenizer.save(&vocab)?;
        }
        Cmd::Eval { model, kg, qa, lambda, k, report } => {
            let model = QaModel::load(&model)?;
            let env = env_for(augmented(&kg)?, &model)?;
            let ds = tokenized(&qa, &env.kg, &model)?;
            let mut cfg = model.config.inference;
            if let Some(l) = lambda {
                cfg.lambda = l;
            }
            if let Some(k) = k {
                cfg.stage1_k = k;
            }
            let r = evaluate(&model, &env, &ds, &cfg)?;
            print!("{}", r.summary());
            if let Some(p) = report {
                r.write(&p, |e| env.kg.entity_label(e).to_string())?;
            }
        }
        Cmd::Answer { model, kg, question, topic, top } => {
            let model = QaModel::load(&model)?;
            let env = env_for(augmented(&kg)?, &model)?;
            let topics = topic.iter().map(|t| env.kg.entity_id(t)).collect::<terp::Result<Vec<_>>>()?;
            let mut q = QuestionInstance::new(question, topics.iter().copied(), topics.iter().copied(), None)?;
            q.answers.clear();
            q.tokenize(&model.tokenizer);
            let sg = question_subgraph(&model, &env, &q)?;
            let ranked = two_stage_infer(&model, &env, &q, &sg, &model.config.inference, &mut InferenceStats::default())?;
            for c in ranked.iter().take(top) {
                let sp = c.s_p.map_or("-".to_string(), |v| format!("{v:.4}"));
                println!("{}\t{:.4}\t{:.4}\t{sp}", env.kg.entity_label(c.entity), c.s, c.s_q);
            }
        }
        Cmd::GenToy { out_dir, seed } => {
            let b = generate_toy(&ToyConfig { seed, ..ToyConfig::default() })?;
            b.write_to_dir(&out_dir)?;
            fs::write(out_dir.join("toy.conf"), toy_config(seed).to_text())?;
            println!(
                "{} entities, {} triples, {}/{}/{} questions",
                b.kg.num_entities(),
                b.kg.triples().len(),
                b.train.len(),
                b.valid.len(),
                b.test.len()
            );
        }
        Cmd::SweepLambda { model, kg, qa, lambdas, out } => {
            let model = QaModel::load(&model)?;
            let env = env_for(augmented(&kg)?, &model)?;
            let ds = tokenized(&qa, &env.kg, &model)?;
            let reports = lambda_sweep(&model, &env, &ds, &lambdas, &model.config.inference)?;
            write_or_print(out.as_deref(), &sweep_table(&reports))?;
        }
        Cmd::Ablate { data_dir, config, seed, variants, out } => {
            let base = load_config(config.as_deref(), toy_config(seed))?;
            let variants = if variants.is_empty() {
                standard_variants()
            } else {
                variants.iter().map(|v| Variant::parse(v)).collect::<terp::Result<_>>()?
            };
            let prep = match data_dir {
                Some(d) => {
                    let kg = augmented(&d.join("kg.tsv"))?;
                    let train = load_qa(&d.join("train.txt"), &kg)?.instances;
                    let test = load_qa(&d.join("test.txt"), &kg)?.instances;
                    prepare(kg, train, Vec::new(), test, &base.inference)?
                }
                None => {
                    let b = generate_toy(&ToyConfig { seed, ..ToyConfig::default() })?;
                    prepare(b.kg, b.train, b.valid, b.test, &base.inference)?
                }
            };
            let rows = ablation_run(&prep, &base, &variants)?;
            write_or_print(out.as_deref(), &ablation_table(&rows))?;
        }
        Cmd::Paths { kg, from, to, max_len, max_paths } => {
            let kg = augmented(&kg)?;
            let (h, c) = (kg.entity_id(&from)?, kg.entity_id(&to)?);
            let paths = enumerate_shortest_paths(&kg, h, c, max_len, max_paths)?;
            if paths.is_empty() {
                bail!("no path of length <= {max_len} from {from} to {to}");
            }
            for p in paths {
                println!("{}", p.describe(&kg));
            }
        }
    }
    Ok(())
}
