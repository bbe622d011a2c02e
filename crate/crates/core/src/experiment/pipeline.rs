// SPDX-License-Identifier: MIT OR Apache-2.0

//! Pipeline stages. Each reads its inputs from the run directory and writes
//! stamped artifacts back into it.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::run_dir::{stamp_value, RunDir};
use crate::analysis::{
    circuit_entropy, classify_heads, detect_phase_shift, edge_activation_ratio, edge_set, forgetting_analysis,
    head_counts, jaccard, logit_lens_trace, metrics_csv, node_set, transfer_matrix, whole_model_accuracies,
    HeadClass, MetricsRow, PhaseShift, DLA_PROJECTION, ENTROPY_BASE, SMOOTHING_WINDOW,
};
use crate::attribution::{
    calibrate_edge_budget, eap_ig_scores, evaluate_circuit, extract_circuit, scores_from_text, scores_to_text,
    Calibration, Circuit, EdgeScores, PreparedSet, ScoreMeta,
};
use crate::corpus::{
    corpus_from_text, corpus_to_text, examples_from_text, examples_to_text, make_task_split, manifest_from_text,
    manifest_to_text, synthesize, FrequencyBand, Pools, TaskExample, TaskFilter, Templates, Tokenizer,
};
use crate::error::{Error, Result};
use crate::graph::{CompGraph, NodeId};
use crate::model::{Checkpoint, Model, Phase};
use crate::rng;
use crate::training::{train as train_stage, LossRecord, TrainJob};

pub const STAGES: [&str; 9] = [
    "synth", "train", "discover", "analyze", "lens", "heads", "transfer", "forget", "report",
];

/// File-name form of a task filter, e.g. `k_rel` or `high-freq`.
pub fn slug(filter: TaskFilter) -> String {
    filter.name().to_ascii_lowercase()
}

fn vocab_path() -> &'static str {
    "synth/vocab.txt"
}

fn corpus_path(phase: Phase) -> String {
    format!("synth/corpus_{phase}.txt")
}

fn task_path(filter: TaskFilter, split: &str) -> String {
    format!("synth/tasks/{}.{split}.jsonl", slug(filter))
}

pub fn checkpoint_path(phase: Phase, epoch: usize) -> String {
    format!("train/{phase}/epoch_{epoch:03}.ckpt")
}

fn scores_path(filter: TaskFilter, epoch: usize) -> String {
    format!("discover/{}/epoch_{epoch:03}.scores.tsv", slug(filter))
}

fn circuit_path(filter: TaskFilter, epoch: usize) -> String {
    format!("discover/{}/epoch_{epoch:03}.circuit.tsv", slug(filter))
}

fn calibration_path(filter: TaskFilter) -> String {
    format!("discover/{}/calibration.toml", slug(filter))
}

pub const METRICS_CSV: &str = "analyze/metrics.csv";
pub const PHASE_TSV: &str = "analyze/phase_shift.tsv";
pub const ALIGNED_CSV: &str = "analyze/aligned.csv";
pub const LENS_CSV: &str = "lens/lens.csv";
pub const HEADS_CSV: &str = "heads/heads.csv";
pub const TRANSFER_CSV: &str = "transfer/transfer.csv";
pub const FORGET_CSV: &str = "forget/forget.csv";

fn filters(run: &RunDir) -> Vec<TaskFilter> {
    run.config.analysis.filters.iter().map(|f| f.0).collect()
}

fn continual_epochs(run: &RunDir) -> std::ops::RangeInclusive<usize> {
    0..=run.config.train.continual.epochs
}

// ---------------------------------------------------------------- synth

pub fn synth(run: &RunDir) -> Result<()> {
    let cfg = &run.config;
    let pools = Pools::builtin();
    let templates = Templates::builtin(cfg.corpus.templates_per_relation)?;
    let syn = synthesize(&pools, &templates, &cfg.corpus, cfg.seed)?;
    let tok = &syn.tokenizer;
    log::info!(
        "synth: vocab {}, segments base {} continual {} forgetting {}",
        tok.len(),
        syn.base_corpus.len(),
        syn.continual_corpus.len(),
        syn.forget_corpus.len()
    );
    run.write_text(vocab_path(), &tok.to_text())?;
    for (phase, corpus) in [
        (Phase::Base, &syn.base_corpus),
        (Phase::Continual, &syn.continual_corpus),
        (Phase::Forgetting, &syn.forget_corpus),
    ] {
        run.write_text(&corpus_path(phase), &corpus_to_text(corpus))?;
    }
    for (name, entities) in [
        ("base", &syn.base_entities),
        ("anchors", &syn.anchors),
        ("continual", &syn.continual_entities),
        ("forgetting", &syn.forget_entities),
    ] {
        run.write_text(&format!("synth/entities_{name}.tsv"), &manifest_to_text(entities))?;
    }
    let d = &cfg.discovery;
    for filter in filters(run) {
        let mut r = rng::stream(cfg.seed, &format!("tasks/{}", slug(filter)));
        let (mut val, mut test) = make_task_split(
            tok,
            &syn.continual_entities,
            &syn.continual_entities,
            &cfg.analysis.relations,
            filter,
            d.val_examples.max(d.test_examples),
            &mut r,
        )?;
        val.truncate(d.val_examples);
        test.truncate(d.test_examples);
        if val.is_empty() || test.is_empty() {
            return Err(Error::Corpus(format!("no task examples for {filter}")));
        }
        for ex in val.iter().chain(&test) {
            ex.check(tok.len())?;
        }
        run.write_text(&task_path(filter, "val"), &examples_to_text(&val))?;
        run.write_text(&task_path(filter, "test"), &examples_to_text(&test))?;
    }
    Ok(())
}

pub fn load_tokenizer(run: &RunDir) -> Result<Tokenizer> {
    Tokenizer::from_text(&run.read_text("synth", vocab_path())?)
}

pub fn load_segments(run: &RunDir, tok: &Tokenizer, phase: Phase) -> Result<Vec<Vec<usize>>> {
    corpus_from_text(&run.read_text("synth", &corpus_path(phase))?)
        .iter()
        .map(|s| tok.encode_known(s))
        .collect()
}

pub fn load_tasks(run: &RunDir, filter: TaskFilter) -> Result<(Vec<TaskExample>, Vec<TaskExample>)> {
    Ok((
        examples_from_text(&run.read_text("synth", &task_path(filter, "val"))?)?,
        examples_from_text(&run.read_text("synth", &task_path(filter, "test"))?)?,
    ))
}

pub fn load_entities(run: &RunDir, name: &str) -> Result<Vec<crate::corpus::EntityProfile>> {
    manifest_from_text(&run.read_text("synth", &format!("synth/entities_{name}.tsv"))?)
}

// ---------------------------------------------------------------- train

fn losses_csv(losses: &[LossRecord]) -> String {
    let mut s = String::from("epoch,step,loss\n");
    for l in losses {
        let _ = writeln!(s, "{},{},{:.6}", l.epoch, l.step, l.loss);
    }
    s
}

fn save_checkpoint(run: &RunDir, ck: &Checkpoint, rel: &str) -> Result<()> {
    let path = run.path(rel);
    if let Some(p) = path.parent() {
        std::fs::create_dir_all(p)?;
    }
    let mut bytes = Vec::new();
    ck.write_to(&mut bytes)?;
    run.write_raw(rel, &bytes)
}

pub fn train(run: &RunDir) -> Result<()> {
    let cfg = &run.config;
    let tok = load_tokenizer(run)?;
    let base = load_segments(run, &tok, Phase::Base)?;
    let continual = load_segments(run, &tok, Phase::Continual)?;
    let mc = cfg.model.config(tok.len());
    let init = Model::init(mc, &mut rng::stream(cfg.seed, "model/init"))?;
    log::info!("train: {} parameters", init.params.numel());

    let mut base_final = None;
    let losses = train_stage(
        &init,
        TrainJob {
            config: &cfg.train.base,
            phase: Phase::Base,
            segments: &base,
            prior: None,
        },
        |ck| {
            base_final = Some(ck.clone());
            Ok(())
        },
    )?;
    let base_final = base_final.expect("train hands out at least the initial state");
    save_checkpoint(run, &base_final, "train/base/final.ckpt")?;
    run.write_text("train/base/losses.csv", &losses_csv(&losses))?;

    let start = base_final.model()?;
    let mut index = String::from("epoch\tfile\n");
    let losses = train_stage(
        &start,
        TrainJob {
            config: &cfg.train.continual,
            phase: Phase::Continual,
            segments: &continual,
            prior: Some(&base),
        },
        |ck| {
            let rel = checkpoint_path(Phase::Continual, ck.epoch);
            save_checkpoint(run, ck, &rel)?;
            let _ = writeln!(index, "{}\t{rel}", ck.epoch);
            Ok(())
        },
    )?;
    run.write_text("train/continual/losses.csv", &losses_csv(&losses))?;
    run.write_text("train/continual/checkpoints.tsv", &index)?;
    Ok(())
}

pub fn load_model(run: &RunDir, phase: Phase, epoch: usize) -> Result<Model> {
    let path = run.require("train", &checkpoint_path(phase, epoch))?;
    Checkpoint::load(&path)?.model()
}

// ---------------------------------------------------------------- discover

fn score_header(run: &RunDir, meta: &ScoreMeta) -> Vec<String> {
    let mut h = run.stamp();
    h.push(format!("steps: {}", meta.steps));
    h.push(format!("examples: {}", meta.examples));
    h.push(format!("checkpoint: {}", meta.checkpoint));
    h.push(format!("position_contraction: {}", meta.position_contraction));
    h
}

fn write_stamped_raw(run: &RunDir, rel: &str, text: String) -> Result<()> {
    run.write_raw(rel, text.as_bytes())
}

fn checkpoint_id(phase: Phase, epoch: usize) -> String {
    format!("{phase}/epoch_{epoch:03}")
}

pub fn load_scores(run: &RunDir, graph: &CompGraph, filter: TaskFilter, epoch: usize) -> Result<EdgeScores> {
    let rel = scores_path(filter, epoch);
    let raw = std::fs::read_to_string(run.require("discover", &rel)?)?;
    check_hash(run, &rel, &raw)?;
    let get = |k: &str| stamp_value(&raw, k).unwrap_or_default();
    let meta = ScoreMeta {
        steps: get("steps").parse().unwrap_or(0),
        examples: get("examples").parse().unwrap_or(0),
        checkpoint: get("checkpoint"),
        position_contraction: get("position_contraction"),
    };
    scores_from_text(graph, &raw, meta)
}

pub fn load_circuit(run: &RunDir, graph: &CompGraph, filter: TaskFilter, epoch: usize) -> Result<Circuit> {
    let rel = circuit_path(filter, epoch);
    let raw = std::fs::read_to_string(run.require("discover", &rel)?)?;
    check_hash(run, &rel, &raw)?;
    Circuit::from_text(graph, &raw, &format!("{} {}", checkpoint_id(Phase::Continual, epoch), filter))
}

fn check_hash(run: &RunDir, rel: &str, raw: &str) -> Result<()> {
    let found = stamp_value(raw, "config_hash").unwrap_or_default();
    if found != run.hash() && !run.stage_override {
        return Err(Error::ConfigMismatch {
            path: run.path(rel),
            expected: run.hash().to_string(),
            found,
        });
    }
    Ok(())
}

pub fn load_calibration(run: &RunDir, filter: TaskFilter) -> Result<Calibration> {
    let text = run.read_text("discover", &calibration_path(filter))?;
    toml::from_str(&text).map_err(|e| Error::format("calibration", e.to_string()))
}

/// Score every continual checkpoint for every filter, fix one edge budget per
/// filter on the final checkpoint, and write the circuits.
pub fn discover(run: &RunDir, jobs: usize) -> Result<()> {
    let cfg = &run.config;
    let d = &cfg.discovery;
    let last = cfg.train.continual.epochs;
    let final_model = load_model(run, Phase::Continual, last)?;
    let graph = final_model.graph().clone();
    let mut models: Vec<Option<Model>> = continual_epochs(run).map(|_| None).collect();
    models[last] = Some(final_model);

    for filter in filters(run) {
        let (val, _) = load_tasks(run, filter)?;
        let mut all_scores = Vec::new();
        for epoch in continual_epochs(run) {
            let model = match &models[epoch] {
                Some(m) => m.clone(),
                None => load_model(run, Phase::Continual, epoch)?,
            };
            let s = eap_ig_scores(&model, &val, d.steps, jobs, &checkpoint_id(Phase::Continual, epoch))?;
            write_stamped_raw(run, &scores_path(filter, epoch), scores_to_text(&graph, &s, &score_header(run, &s.meta)))?;
            all_scores.push(s);
            log::info!("discover: {filter} epoch {epoch} scored");
        }
        let final_model = models[last].as_ref().expect("final model loaded");
        let calibration = match d.edge_budget {
            Some(n) => Calibration {
                n_edges: n.min(graph.n_edges()),
                target: d.calibration_target,
                whole_model_hit: f64::NAN,
                circuit_hit: f64::NAN,
                degenerate: false,
                sweep: Vec::new(),
            },
            None => {
                let prepared = PreparedSet::new(final_model, &val, jobs)?;
                calibrate_edge_budget(final_model, &all_scores[last], &prepared, d.calibration_target, jobs)?
            }
        };
        log::info!("discover: {filter} budget {} edges", calibration.n_edges);
        run.write_text(
            &calibration_path(filter),
            &toml::to_string(&calibration).map_err(|e| Error::format("calibration", e.to_string()))?,
        )?;
        for (epoch, s) in all_scores.iter().enumerate() {
            let c = extract_circuit(&graph, s, calibration.n_edges)?;
            let mut header = score_header(run, &s.meta);
            header.push(format!("filter: {filter}"));
            header.push(format!("n_edges: {}", c.len()));
            write_stamped_raw(run, &circuit_path(filter, epoch), c.to_text(&graph, &header))?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- analyze

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignedSummary {
    pub filter: String,
    pub breakpoint: usize,
    /// Mean final-checkpoint Hit@10 of topologies from epochs before the breakpoint.
    pub pre_mean: f64,
    /// Same for epochs after the breakpoint.
    pub post_mean: f64,
}

fn circuit_heads(c: &Circuit) -> HashSet<NodeId> {
    c.nodes.iter().copied().filter(|n| matches!(n, NodeId::Head { .. })).collect()
}

pub fn analyze(run: &RunDir, jobs: usize) -> Result<()> {
    let cfg = &run.config;
    let last = cfg.train.continual.epochs;
    let n_layers = cfg.model.n_layers;
    let mut rows = Vec::new();
    let mut phase_tsv = String::from("filter\tbreakpoint\tslope_before\tslope_after\tslope_ratio\tshift\n");
    let mut aligned_csv = String::from("filter,topology_epoch,hit_at_10\n");
    let mut summaries = Vec::new();

    let models: Vec<Model> = continual_epochs(run)
        .map(|e| load_model(run, Phase::Continual, e))
        .collect::<Result<_>>()?;
    let graph = models[last].graph().clone();

    for filter in filters(run) {
        let (_, test) = load_tasks(run, filter)?;
        let circuits: Vec<Circuit> = continual_epochs(run)
            .map(|e| load_circuit(run, &graph, filter, e))
            .collect::<Result<_>>()?;
        let final_edges = edge_set(&circuits[last]);
        let final_nodes = node_set(&circuits[last]);
        let mut entropies = Vec::new();
        for (epoch, (model, circuit)) in models.iter().zip(&circuits).enumerate() {
            let prepared = PreparedSet::new(model, &test, jobs)?;
            let eval = evaluate_circuit(model, circuit, &prepared, jobs)?;
            let entropy = circuit_entropy(&circuit.scores)?;
            entropies.push(entropy);
            let ratios = edge_activation_ratio(circuit, &graph)?;
            let heads = circuit_heads(circuit);
            let classes: Vec<HeadClass> = classify_heads(model, &test, cfg.analysis.tau)?
                .into_iter()
                .filter(|h| heads.contains(&h.head))
                .collect();
            let acc = whole_model_accuracies(model, &test, jobs)?;
            let row = MetricsRow {
                epoch,
                stage: Phase::Continual,
                filter: filter.name().to_string(),
                hit_at_10: eval.hit_at_10,
                circuit_entropy: entropy,
                jaccard_edges_vs_final: jaccard(&edge_set(circuit), &final_edges),
                jaccard_nodes_vs_final: jaccard(&node_set(circuit), &final_nodes),
                activation_ratios: std::iter::once(ratios.input).chain(ratios.layers).collect(),
                head_counts: head_counts(&classes, n_layers),
                first_token_accuracy: acc.first_token,
                query_accuracy: acc.query,
            };
            row.validate()?;
            log::info!("analyze: {filter} epoch {epoch} hit@10 {:.3} entropy {entropy:.3}", row.hit_at_10);
            rows.push(row);
        }

        let shift: Option<PhaseShift> = if entropies.len() >= crate::analysis::MIN_POINTS {
            Some(detect_phase_shift(&entropies, SMOOTHING_WINDOW)?)
        } else {
            None
        };
        let prepared = PreparedSet::new(&models[last], &test, jobs)?;
        let aligned: Vec<f64> = circuits
            .iter()
            .map(|c| Ok(evaluate_circuit(&models[last], c, &prepared, jobs)?.hit_at_10))
            .collect::<Result<_>>()?;
        for (epoch, h) in aligned.iter().enumerate() {
            let _ = writeln!(aligned_csv, "{},{epoch},{h:.6}", filter.name());
        }
        if let Some(p) = shift {
            let _ = writeln!(
                phase_tsv,
                "{}\t{}\t{:.6}\t{:.6}\t{:.4}\t{}",
                filter.name(),
                p.breakpoint,
                p.slope_before,
                p.slope_after,
                p.slope_ratio(),
                p.shift
            );
            let mean = |xs: &[f64]| if xs.is_empty() { f64::NAN } else { xs.iter().sum::<f64>() / xs.len() as f64 };
            summaries.push(AlignedSummary {
                filter: filter.name().to_string(),
                breakpoint: p.breakpoint,
                pre_mean: mean(&aligned[..p.breakpoint]),
                post_mean: mean(&aligned[p.breakpoint + 1..]),
            });
        }
    }
    let mut comments = run.stamp();
    comments.push(format!("entropy_base: {ENTROPY_BASE}"));
    comments.push(format!("head_tau: {}", cfg.analysis.tau));
    comments.push("head_counts: heads inside the circuit".into());
    run.write_raw(METRICS_CSV, metrics_csv(&rows, n_layers, &comments).as_bytes())?;
    run.write_text(PHASE_TSV, &phase_tsv)?;
    run.write_text(ALIGNED_CSV, &aligned_csv)?;
    let mut s = String::from("filter\tbreakpoint\tpre_mean\tpost_mean\n");
    for a in &summaries {
        let _ = writeln!(s, "{}\t{}\t{:.6}\t{:.6}", a.filter, a.breakpoint, a.pre_mean, a.post_mean);
    }
    run.write_text("analyze/aligned_summary.tsv", &s)?;
    Ok(())
}

// ---------------------------------------------------------------- lens / heads

pub fn lens(run: &RunDir) -> Result<()> {
    let cfg = &run.config;
    let mut s = String::from("epoch,filter,layer,median_rank,mean_probability\n");
    for epoch in continual_epochs(run) {
        let model = load_model(run, Phase::Continual, epoch)?;
        for filter in filters(run) {
            let (_, test) = load_tasks(run, filter)?;
            for p in logit_lens_trace(&model, &test, cfg.analysis.lens_final_norm)? {
                let _ = writeln!(
                    s,
                    "{epoch},{},{},{},{:.6e}",
                    filter.name(),
                    p.layer,
                    p.median_rank,
                    p.mean_probability
                );
            }
        }
    }
    let mut out = String::new();
    let _ = writeln!(out, "# final_norm: {}", cfg.analysis.lens_final_norm);
    out.push_str("# rank: median over examples; probability: mean over examples\n");
    out.push_str(&s);
    run.write_text(LENS_CSV, &out)
}

pub fn heads(run: &RunDir) -> Result<()> {
    let cfg = &run.config;
    let mut s = String::from("epoch,filter,layer,head,dla_subject,dla_relation,ratio,class,degenerate,in_circuit\n");
    for epoch in continual_epochs(run) {
        let model = load_model(run, Phase::Continual, epoch)?;
        for filter in filters(run) {
            let (_, test) = load_tasks(run, filter)?;
            let circuit = load_circuit(run, model.graph(), filter, epoch)?;
            let inside = circuit_heads(&circuit);
            for h in classify_heads(&model, &test, cfg.analysis.tau)? {
                let NodeId::Head { layer, head } = h.head else { continue };
                let _ = writeln!(
                    s,
                    "{epoch},{},{layer},{head},{:.6e},{:.6e},{:.6e},{},{},{}",
                    filter.name(),
                    h.dla_subject,
                    h.dla_relation,
                    h.ratio,
                    h.class.name(),
                    h.degenerate,
                    inside.contains(&h.head)
                );
            }
        }
    }
    let mut out = format!("# tau: {}\n# dla_projection: {DLA_PROJECTION}\n", cfg.analysis.tau);
    out.push_str(&s);
    run.write_text(HEADS_CSV, &out)
}

// ---------------------------------------------------------------- transfer

pub fn transfer(run: &RunDir, jobs: usize) -> Result<()> {
    let bands: Vec<TaskFilter> = FrequencyBand::ALL.into_iter().map(TaskFilter::Band).collect();
    let present = filters(run);
    if let Some(b) = bands.iter().find(|b| !present.contains(b)) {
        return Err(Error::Config(format!("transfer needs every frequency band; {b} is not configured")));
    }
    let tests: Vec<Vec<TaskExample>> = bands
        .iter()
        .map(|&b| Ok(load_tasks(run, b)?.1))
        .collect::<Result<_>>()?;
    let mut s = String::from("epoch,circuit,test,hit_at_10\n");
    for epoch in continual_epochs(run) {
        let model = load_model(run, Phase::Continual, epoch)?;
        let circuits: Vec<Circuit> = bands
            .iter()
            .map(|&b| load_circuit(run, model.graph(), b, epoch))
            .collect::<Result<_>>()?;
        let prepared: Vec<PreparedSet<'_>> = tests
            .iter()
            .map(|t| PreparedSet::new(&model, t, jobs))
            .collect::<Result<_>>()?;
        let m = transfer_matrix(&model, &circuits, &prepared, jobs)?;
        for (i, row) in m.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let _ = writeln!(s, "{epoch},{},{},{v:.6}", bands[i].name(), bands[j].name());
            }
        }
    }
    run.write_text(TRANSFER_CSV, &s)
}

// ---------------------------------------------------------------- forget

pub fn forget(run: &RunDir, jobs: usize) -> Result<()> {
    let cfg = &run.config;
    let filter = cfg.analysis.forget_filter.0;
    let last = cfg.train.continual.epochs;
    let tok = load_tokenizer(run)?;
    let new_segments = load_segments(run, &tok, Phase::Forgetting)?;
    let prior_segments = load_segments(run, &tok, Phase::Continual)?;
    let start = load_model(run, Phase::Continual, last)?;
    let graph = start.graph().clone();
    let prior = load_circuit(run, &graph, filter, last)?;
    let n = prior.len();
    let (val, test) = load_tasks(run, filter)?;
    let mut s = String::from("replay_ratio,epoch,jaccard_edges,jaccard_nodes,whole_model_hit_at_10\n");
    for &ratio in &cfg.analysis.replay_ratios {
        let tc = crate::training::TrainConfig {
            replay_ratio: ratio,
            ..cfg.train.forgetting.clone()
        };
        let mut hits = Vec::new();
        let points = forgetting_analysis(
            &start,
            &tc,
            &new_segments,
            &prior_segments,
            &prior,
            |model, epoch| {
                let s = eap_ig_scores(model, &val, cfg.discovery.steps, jobs, &checkpoint_id(Phase::Forgetting, epoch))?;
                extract_circuit(&graph, &s, n)
            },
            |ck, _| {
                let model = ck.model()?;
                hits.push(PreparedSet::new(&model, &test, jobs)?.whole_model()?.hit_at_10);
                log::info!("forget: replay {ratio} epoch {} done", ck.epoch);
                Ok(())
            },
        )?;
        for (p, h) in points.iter().zip(&hits) {
            let _ = writeln!(
                s,
                "{},{},{:.6},{:.6},{h:.6}",
                p.replay_ratio, p.epoch, p.jaccard_edges, p.jaccard_nodes
            );
        }
    }
    let mut out = format!("# filter: {filter}\n# n_edges: {n}\n");
    out.push_str(&s);
    run.write_text(FORGET_CSV, &out)
}

// ---------------------------------------------------------------- all

pub fn run_stage(run: &RunDir, stage: &str, jobs: usize) -> Result<()> {
    log::info!("stage {stage}");
    match stage {
        "synth" => synth(run),
        "train" => train(run),
        "discover" => discover(run, jobs),
        "analyze" => analyze(run, jobs),
        "lens" => lens(run),
        "heads" => heads(run),
        "transfer" => transfer(run, jobs),
        "forget" => forget(run, jobs),
        "report" => super::report::report(run),
        _ => Err(Error::Config(format!("unknown stage `{stage}`"))),
    }
}

pub fn run_all(run: &RunDir, jobs: usize) -> Result<()> {
    for stage in STAGES {
        run_stage(run, stage, jobs)?;
    }
    Ok(())
}
