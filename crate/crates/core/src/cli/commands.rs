use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::config::RunConfig;
use crate::corpus::{
    generate_toy_corpus, load_dataset, save_dataset, toy_embeddings, tokenize, EmbeddingStore,
    ItemKind, KnowledgeBase, QAPair,
};
use crate::eval::{breakdown, mrr_at_k, EvalReport, QuestionBreakdown};
use crate::linker::{link, load_index, save_index, LinkConfig, LinkIndices, LinkResult, TrigramIndex};
use crate::mdp::{Action, EnvConfig};
use crate::policy::{
    greedy_actions, init_policy, load_policy, save_policy, train, Architecture, PolicyParams,
};
use crate::{Error, Result};

pub const ENTITY_INDEX_FILE: &str = "entity.idx";
pub const RELATION_INDEX_FILE: &str = "relation.idx";

/// `path` with `suffix` appended to the file name.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s: OsString = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn load_kb(cfg: &RunConfig) -> Result<KnowledgeBase> {
    KnowledgeBase::load_dir(cfg.require(&cfg.kg, "kg")?)
}

pub fn load_store(cfg: &RunConfig) -> Result<EmbeddingStore> {
    EmbeddingStore::load(cfg.require(&cfg.embeddings, "embeddings")?, cfg.oov())
}

pub fn load_questions(path: &Path) -> Result<Vec<QAPair>> {
    let ds = load_dataset(path)?;
    if ds.skipped > 0 {
        log::warn!("{}: skipped {} questions without linked items", path.display(), ds.skipped);
    }
    Ok(ds.pairs)
}

pub fn load_indices(cfg: &RunConfig) -> Result<LinkIndices> {
    let dir = cfg.require(&cfg.index, "index")?;
    let read = |name: &str, kind: ItemKind| -> Result<TrigramIndex> {
        let (idx, _) = load_index(dir.join(name))?;
        if idx.kind() != kind {
            return Err(Error::Format(format!("{name} holds a {} index", idx.kind())));
        }
        if idx.case_mode() != cfg.case_mode {
            return Err(Error::InvalidConfig(format!(
                "{name} was built with case mode {} but the run uses {}; rebuild the index",
                idx.case_mode(),
                cfg.case_mode
            )));
        }
        Ok(idx)
    };
    Ok(LinkIndices {
        entity: read(ENTITY_INDEX_FILE, ItemKind::Entity)?,
        relation: read(RELATION_INDEX_FILE, ItemKind::Relation)?,
    })
}

fn env_for(cfg: &RunConfig, params: &PolicyParams, store: &EmbeddingStore) -> Result<EnvConfig> {
    if params.word_dim() != store.dim() {
        return Err(Error::InvalidDims(format!(
            "policy expects {}-dimensional word vectors, embeddings have {}",
            params.word_dim(),
            store.dim()
        )));
    }
    EnvConfig::new(params.h(), cfg.gamma, cfg.combine_weight, cfg.case_mode.folds())
}

/// Greedy labeling followed by linking, one result per question.
#[allow(clippy::too_many_arguments)]
pub fn predict_links(
    params: &PolicyParams,
    pairs: &[QAPair],
    store: &EmbeddingStore,
    env: &EnvConfig,
    indices: &LinkIndices,
    kb: &KnowledgeBase,
    link_cfg: &LinkConfig,
    k: usize,
) -> Result<Vec<LinkResult>> {
    pairs
        .iter()
        .map(|qa| {
            let actions = greedy_actions(params, qa, store, env)?;
            link(&qa.id, &qa.tokens, &actions, indices, kb, store, link_cfg, k)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ToyOptions {
    pub seed: u64,
    pub entities: usize,
    pub relations: usize,
    pub train: usize,
    pub test: usize,
    pub dim: usize,
}

impl Default for ToyOptions {
    fn default() -> Self {
        ToyOptions {
            seed: 7,
            entities: 10,
            relations: 6,
            train: 80,
            test: 20,
            dim: 16,
        }
    }
}

/// Generated toy data, split into train and test.
pub struct ToyData {
    pub kb: KnowledgeBase,
    pub train: Vec<QAPair>,
    pub test: Vec<QAPair>,
    pub store: EmbeddingStore,
}

pub fn toy_data(opts: &ToyOptions) -> Result<ToyData> {
    let (kb, mut pairs) =
        generate_toy_corpus(opts.seed, opts.entities, opts.relations, opts.train + opts.test);
    let store = toy_embeddings(opts.seed, opts.dim, &kb, &pairs)?;
    let test = pairs.split_off(opts.train.min(pairs.len()));
    Ok(ToyData {
        kb,
        train: pairs,
        test,
        store,
    })
}

/// Writes `train.jsonl`, `test.jsonl`, `kg/`, `embeddings.txt` and a
/// `run.toml` pointing at them. Returns that config.
pub fn cmd_gen_toy(opts: &ToyOptions, out: &Path) -> Result<RunConfig> {
    let data = toy_data(opts)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    save_dataset(out.join("train.jsonl"), &data.train)?;
    save_dataset(out.join("test.jsonl"), &data.test)?;
    data.kb.save_dir(out.join("kg"))?;
    data.store.save(out.join("embeddings.txt"))?;

    let rel = RunConfig {
        dataset: Some("train.jsonl".into()),
        eval_dataset: Some("test.jsonl".into()),
        kg: Some("kg".into()),
        embeddings: Some("embeddings.txt".into()),
        index: Some("index".into()),
        policy: Some("policy.bin".into()),
        seed: opts.seed,
        ..RunConfig::default()
    };
    let path = out.join("run.toml");
    fs::write(&path, rel.to_toml()).map_err(|e| Error::io(&path, e))?;
    RunConfig::load(&path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexSummary {
    pub entities: usize,
    pub relations: usize,
    pub entity_path: PathBuf,
    pub relation_path: PathBuf,
}

pub fn cmd_index(cfg: &RunConfig) -> Result<IndexSummary> {
    let kb = load_kb(cfg)?;
    let dir = cfg.output(&cfg.index, "index")?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let idx = LinkIndices::build(&kb, cfg.case_mode);
    let entity_path = dir.join(ENTITY_INDEX_FILE);
    let relation_path = dir.join(RELATION_INDEX_FILE);
    save_index(&idx.entity, cfg.seed, &entity_path)?;
    save_index(&idx.relation, cfg.seed, &relation_path)?;
    Ok(IndexSummary {
        entities: idx.entity.len(),
        relations: idx.relation.len(),
        entity_path,
        relation_path,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub policy_path: PathBuf,
    pub best_path: PathBuf,
    pub log_path: PathBuf,
    pub epochs: usize,
    pub best_reward: f64,
    pub final_reward: Option<f64>,
}

/// Trains from scratch and writes the final policy, the best-epoch policy
/// (`<policy>.best`) and the per-epoch log (`<policy>.log`).
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainSummary> {
    let pairs = load_questions(cfg.require(&cfg.dataset, "dataset")?)?;
    let store = load_store(cfg)?;
    let policy_path = cfg.output(&cfg.policy, "policy")?.to_path_buf();
    let tcfg = cfg.train_config();
    tcfg.validate()?;
    let init = init_policy(cfg.arch, cfg.h, store.dim(), cfg.hidden, cfg.seed)?;
    let env = env_for(cfg, &init, &store)?;

    let log_path = sibling(&policy_path, ".log");
    let file = fs::File::create(&log_path).map_err(|e| Error::io(&log_path, e))?;
    let mut log = BufWriter::new(file);
    let header = format!(
        "# seed={} arch={} h={} hidden={} dim={} gamma={} lr={} epochs={} batch={} entropy={} questions={}\n\
         # epoch\tmean_reward\tgrad_norm\tentropy\n",
        cfg.seed,
        cfg.arch.name(),
        cfg.h,
        cfg.hidden,
        store.dim(),
        cfg.gamma,
        cfg.lr,
        cfg.epochs,
        cfg.batch_episodes,
        cfg.entropy_bonus,
        pairs.len()
    );
    log.write_all(header.as_bytes()).map_err(|e| Error::io(&log_path, e))?;

    let start = Instant::now();
    let mut write_err = None;
    let outcome = train(init, &pairs, &store, &env, &tcfg, cfg.seed, |r| {
        let line = format!(
            "{}\t{:.6}\t{:.6}\t{:.6}\n",
            r.epoch, r.mean_reward, r.grad_norm, r.mean_entropy
        );
        if let Err(e) = log.write_all(line.as_bytes()) {
            write_err.get_or_insert(e);
        }
        log::info!(
            "epoch {:>4}  reward {:.4}  grad {:.4}  {:.1}s",
            r.epoch,
            r.mean_reward,
            r.grad_norm,
            start.elapsed().as_secs_f64()
        );
    })?;
    if let Some(e) = write_err {
        return Err(Error::io(&log_path, e));
    }
    log.flush().map_err(|e| Error::io(&log_path, e))?;

    let best_path = sibling(&policy_path, ".best");
    save_policy(&outcome.params, &policy_path)?;
    save_policy(&outcome.best, &best_path)?;
    Ok(TrainSummary {
        policy_path,
        best_path,
        log_path,
        epochs: outcome.log.len(),
        best_reward: outcome.best_reward,
        final_reward: outcome.log.last().map(|r| r.mean_reward),
    })
}

pub struct EvalOutput {
    pub report: EvalReport,
    pub results: Vec<LinkResult>,
    pub breakdown: Vec<QuestionBreakdown>,
}

pub fn cmd_eval(cfg: &RunConfig) -> Result<EvalOutput> {
    let pairs = load_questions(cfg.require(&cfg.dataset, "dataset")?)?;
    let params = load_policy(cfg.require(&cfg.policy, "policy")?)?;
    let indices = load_indices(cfg)?;
    let kb = load_kb(cfg)?;
    let store = load_store(cfg)?;
    let env = env_for(cfg, &params, &store)?;
    let results = predict_links(&params, &pairs, &store, &env, &indices, &kb, &cfg.link_config(), cfg.k)?;
    Ok(EvalOutput {
        report: EvalReport::compute(&results, &pairs, cfg.k, cfg.case_mode, cfg.seed)?,
        breakdown: breakdown(&results, &pairs, cfg.k)?,
        results,
    })
}

/// Labels `question` (with the policy, or with `labels` when given) and
/// links its mentions.
pub fn cmd_link(cfg: &RunConfig, question: &str, labels: Option<&[Action]>) -> Result<LinkResult> {
    let tokens = tokenize(question, false)?;
    let indices = load_indices(cfg)?;
    let kb = load_kb(cfg)?;
    let store = load_store(cfg)?;
    let actions = match labels {
        Some(a) => a.to_vec(),
        None => {
            let params = load_policy(cfg.require(&cfg.policy, "policy")?)?;
            let env = env_for(cfg, &params, &store)?;
            let qa = QAPair {
                id: "input".into(),
                question: question.to_string(),
                tokens: tokens.clone(),
                items: Vec::new(),
            };
            greedy_actions(&params, &qa, &store, &env)?
        }
    };
    link("input", &tokens, &actions, &indices, &kb, &store, &cfg.link_config(), cfg.k)
}

pub fn format_link(result: &LinkResult) -> String {
    if result.mentions.is_empty() {
        return "no mentions found\n".into();
    }
    let mut out = String::new();
    for m in &result.mentions {
        let (s, e) = m.mention.span;
        let _ = writeln!(out, "{} \"{}\" [{s}..{e}]", m.mention.label, m.mention.text);
        if m.candidates.is_empty() {
            let _ = writeln!(out, "    (no candidates)");
        }
        for (i, c) in m.candidates.iter().enumerate() {
            let _ = writeln!(out, "    {}. {}  {:.4}  ({})", i + 1, c.uri, c.score(), c.kg_label);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRun {
    pub seed: u64,
    pub entity_mrr: f64,
    pub relation_mrr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationCell {
    pub h: usize,
    pub arch: Architecture,
    pub runs: Vec<AblationRun>,
}

/// Sample mean and standard error of the mean (0 for a single value).
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

impl AblationCell {
    pub fn entity(&self) -> (f64, f64) {
        mean_se(&self.runs.iter().map(|r| r.entity_mrr).collect::<Vec<_>>())
    }

    pub fn relation(&self) -> (f64, f64) {
        mean_se(&self.runs.iter().map(|r| r.relation_mrr).collect::<Vec<_>>())
    }
}

/// Trains and evaluates one policy per `(h, arch, seed)`. Uses the
/// configured dataset / eval dataset / KG / embeddings when all are set,
/// otherwise the default toy corpus generated from `cfg.seed`.
pub fn cmd_ablation(
    cfg: &RunConfig,
    h_values: &[usize],
    archs: &[Architecture],
    seeds: &[u64],
) -> Result<Vec<AblationCell>> {
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("ablation needs at least one seed".into()));
    }
    let (kb, train_set, test_set, store) = if cfg.dataset.is_some() {
        (
            load_kb(cfg)?,
            load_questions(cfg.require(&cfg.dataset, "dataset")?)?,
            load_questions(cfg.require(&cfg.eval_dataset, "eval dataset")?)?,
            load_store(cfg)?,
        )
    } else {
        let d = toy_data(&ToyOptions {
            seed: cfg.seed,
            ..ToyOptions::default()
        })?;
        (d.kb, d.train, d.test, d.store)
    };
    let indices = LinkIndices::build(&kb, cfg.case_mode);
    let tcfg = cfg.train_config();
    let link_cfg = cfg.link_config();

    let mut cells = Vec::new();
    for &h in h_values {
        for &arch in archs {
            let mut runs = Vec::new();
            for &seed in seeds {
                let init = init_policy(arch, h, store.dim(), cfg.hidden, seed)?;
                let env = env_for(cfg, &init, &store)?;
                let out = train(init, &train_set, &store, &env, &tcfg, seed, |_| {})?;
                let res = predict_links(&out.params, &test_set, &store, &env, &indices, &kb, &link_cfg, cfg.k)?;
                let run = AblationRun {
                    seed,
                    entity_mrr: mrr_at_k(&res, &test_set, ItemKind::Entity, cfg.k)?,
                    relation_mrr: mrr_at_k(&res, &test_set, ItemKind::Relation, cfg.k)?,
                };
                log::info!(
                    "h={h} arch={} seed={seed}: entity MRR {:.4}, relation MRR {:.4}",
                    arch.name(),
                    run.entity_mrr,
                    run.relation_mrr
                );
                runs.push(run);
            }
            cells.push(AblationCell { h, arch, runs });
        }
    }
    Ok(cells)
}

pub fn ablation_table(cells: &[AblationCell], k: usize) -> String {
    let mut out = String::new();
    let e_head = format!("entity MRR@{k}");
    let r_head = format!("relation MRR@{k}");
    let _ = writeln!(out, "{:>2}  {:<12}  {:>5}  {:>17}  {:>17}", "h", "arch", "runs", e_head, r_head);
    for c in cells {
        let (em, es) = c.entity();
        let (rm, rs) = c.relation();
        let _ = writeln!(
            out,
            "{:>2}  {:<12}  {:>5}  {:>8.4} ± {:<6.4}  {:>8.4} ± {:<6.4}",
            c.h,
            c.arch.name(),
            c.runs.len(),
            em,
            es,
            rm,
            rs
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_standard_error() {
        assert_eq!(mean_se(&[]), (0.0, 0.0));
        assert_eq!(mean_se(&[0.5]), (0.5, 0.0));
        let (m, se) = mean_se(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn sibling_appends_suffix() {
        assert_eq!(sibling(Path::new("out/policy.bin"), ".log"), PathBuf::from("out/policy.bin.log"));
    }

    #[test]
    fn toy_split_sizes() {
        let d = toy_data(&ToyOptions::default()).unwrap();
        assert_eq!((d.train.len(), d.test.len()), (80, 20));
        assert_eq!(d.kb.entities().len(), 10);
        assert_eq!(d.store.dim(), 16);
    }

    #[test]
    fn table_has_one_row_per_cell() {
        let cells = vec![AblationCell {
            h: 1,
            arch: Architecture::Recurrent,
            runs: vec![AblationRun {
                seed: 1,
                entity_mrr: 0.9,
                relation_mrr: 0.8,
            }],
        }];
        let t = ablation_table(&cells, 5);
        assert_eq!(t.lines().count(), 2);
        assert!(t.contains("recurrent"));
    }
}
