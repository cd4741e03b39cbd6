use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Subcommand};
use serde::Serialize;
use serde_json::json;

use super::analyze::load_latency_model;
use super::{emit, invalid, CliError, Ctx, Format};
use crate::archspec::{builtin, AnalysisConfig, ModelSpec};
use crate::nas::{
    evaluator_from_spec, filter_candidates, rank, read_candidates_jsonl, read_rows, run_training_loop, score_all, write_rows,
    BudgetCheck, Budgets, Candidate, CandidateRow, NormBounds, SearchSpace, SpaceConfig,
};

#[derive(Debug, Subcommand)]
pub enum NasCmd {
    /// Cross layouts with widths and check every candidate against the budgets.
    Enumerate {
        /// Space config JSON (built-in defaults when omitted).
        config: Option<PathBuf>,
        #[command(flatten)]
        budgets: BudgetArgs,
        /// Candidates JSONL destination (stdout when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Filter, then run the thresholded training loop on every survivor.
    Search {
        config: Option<PathBuf>,
        /// `builtin:SEED` or a shell command reading a model on stdin and printing a loss.
        #[arg(long)]
        evaluator: Option<String>,
        /// Candidates JSONL from `nas enumerate` instead of enumerating again.
        #[arg(long)]
        candidates: Option<PathBuf>,
        #[command(flatten)]
        budgets: BudgetArgs,
        /// Outcomes CSV destination (stdout when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Score outcomes by normalized loss plus normalized latency and rank them.
    Score {
        /// Outcomes CSV from `nas search`.
        outcomes: PathBuf,
        /// Restrict to candidates in this JSONL from `nas enumerate`.
        #[arg(long)]
        candidates: Option<PathBuf>,
        /// `MIN,MAX` validation loss bounds (default: population range).
        #[arg(long, value_parser = parse_pair)]
        loss_bounds: Option<(f64, f64)>,
        /// `MIN,MAX` latency bounds in ms (default: population range).
        #[arg(long, value_parser = parse_pair)]
        latency_bounds: Option<(f64, f64)>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct BudgetArgs {
    #[arg(long)]
    pub max_macs: Option<u64>,
    #[arg(long)]
    pub max_arena: Option<u64>,
    #[arg(long)]
    pub max_flash: Option<u64>,
}

impl BudgetArgs {
    fn apply(&self, b: Budgets) -> Budgets {
        Budgets {
            max_macs: self.max_macs.unwrap_or(b.max_macs),
            max_arena_bytes: self.max_arena.unwrap_or(b.max_arena_bytes),
            max_flash_bytes: self.max_flash.unwrap_or(b.max_flash_bytes),
        }
    }
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected MIN,MAX")?;
    let p = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok((p(a)?, p(b)?))
}

fn load_config(path: Option<&PathBuf>) -> Result<SpaceConfig, CliError> {
    path.map_or(Ok(SpaceConfig::default()), |p| SpaceConfig::load(p).map_err(invalid))
}

fn enumerate(cfg: &SpaceConfig) -> Result<Vec<Candidate>, CliError> {
    let backbone = match &cfg.backbone {
        Some(p) => ModelSpec::load(p).map_err(invalid)?,
        None => builtin::pilotnet_ds_68(),
    };
    let space = SearchSpace::new(backbone, cfg.widths.clone()).map_err(invalid)?;
    let lm = load_latency_model(cfg.latency_model.as_ref())?;
    space.enumerate_candidates(&lm, &AnalysisConfig::default()).map_err(invalid)
}

#[derive(Serialize)]
struct EnumRecord<'a> {
    #[serde(flatten)]
    candidate: &'a Candidate,
    budget: BudgetCheck,
    pass: bool,
}

pub fn run(ctx: &mut Ctx, cmd: NasCmd) -> Result<(), CliError> {
    match cmd {
        NasCmd::Enumerate { config, budgets, output } => {
            let cfg = load_config(config.as_ref())?;
            let budgets = budgets.apply(cfg.budgets);
            let cands = enumerate(&cfg)?;
            let (_, counts) = filter_candidates(&cands, &budgets);
            let mut buf = Vec::new();
            for c in &cands {
                let budget = budgets.check(c);
                serde_json::to_writer(&mut buf, &EnumRecord {
                    candidate: c,
                    budget,
                    pass: budget.passes(),
                })
                .map_err(invalid)?;
                buf.push(b'\n');
            }
            emit(ctx, output.as_ref(), &buf)?;
            let summary = format!(
                "{} candidates, {} passing (over budget: macs {}, arena {}, flash {})",
                counts.total, counts.kept, counts.over_macs, counts.over_arena, counts.over_flash
            );
            if output.is_none() {
                ctx.note(&summary);
                return Ok(());
            }
            match ctx.format {
                Format::Json => ctx.json(&json!({"candidates": counts.total, "passing": counts.kept, "counts": counts})),
                _ => ctx.print(&summary),
            }
        }
        NasCmd::Search {
            config,
            evaluator,
            candidates,
            budgets,
            output,
        } => {
            let cfg = load_config(config.as_ref())?;
            let budgets = budgets.apply(cfg.budgets);
            let spec = evaluator
                .or(cfg.evaluator.clone())
                .ok_or_else(|| CliError::Usage("search needs --evaluator CMD or --evaluator builtin:SEED".into()))?;
            let evaluator = evaluator_from_spec(&spec).map_err(invalid)?;
            let cands = match &candidates {
                Some(p) => {
                    let f = std::fs::File::open(p).map_err(|e| invalid(format!("{}: {e}", p.display())))?;
                    read_candidates_jsonl(std::io::BufReader::new(f)).map_err(invalid)?
                }
                None => enumerate(&cfg)?,
            };
            let (kept, counts) = filter_candidates(&cands, &budgets);
            let outcomes = run_training_loop(&kept, evaluator.as_ref(), &cfg.training, ctx.jobs).map_err(invalid)?;
            let mut verdicts = BTreeMap::<String, usize>::new();
            for o in &outcomes {
                *verdicts.entry(o.verdict.to_string()).or_default() += 1;
                if o.failures > 0 {
                    ctx.note(&format!("candidate {}: {} of {} evaluator attempts failed", o.id, o.failures, o.attempts));
                }
            }
            let rows: Vec<CandidateRow> = kept
                .iter()
                .zip(&outcomes)
                .map(|(c, o)| CandidateRow::new(c, o.val_loss, None))
                .collect();
            let mut buf = Vec::new();
            write_rows(&mut buf, &rows).map_err(invalid)?;
            emit(ctx, output.as_ref(), &buf)?;
            let summary = format!(
                "{} candidates, {} trained: {}",
                counts.total,
                counts.kept,
                verdicts.iter().map(|(k, v)| format!("{k} {v}")).collect::<Vec<_>>().join(", ")
            );
            if output.is_none() {
                ctx.note(&summary);
                return Ok(());
            }
            match ctx.format {
                Format::Json => ctx.json(&json!({"candidates": counts.total, "trained": counts.kept, "verdicts": verdicts})),
                _ => ctx.print(&summary),
            }
        }
        NasCmd::Score {
            outcomes,
            candidates,
            loss_bounds,
            latency_bounds,
            output,
        } => {
            let f = std::fs::File::open(&outcomes).map_err(|e| invalid(format!("{}: {e}", outcomes.display())))?;
            let mut rows = read_rows(f).map_err(invalid)?;
            if let Some(p) = &candidates {
                let f = std::fs::File::open(p).map_err(|e| invalid(format!("{}: {e}", p.display())))?;
                let known: BTreeMap<u32, Candidate> = read_candidates_jsonl(std::io::BufReader::new(f))
                    .map_err(invalid)?
                    .into_iter()
                    .map(|c| (c.id, c))
                    .collect();
                if let Some(r) = rows.iter().find(|r| !known.contains_key(&r.id)) {
                    return Err(CliError::Invalid(format!("outcome id {} is not among the candidates", r.id)));
                }
                for r in &mut rows {
                    *r = CandidateRow::new(&known[&r.id], r.val_loss, None);
                }
            }
            let population = NormBounds::from_population(rows.iter().map(|r| (r.val_loss, r.latency_ms)));
            let bounds = match (loss_bounds, latency_bounds) {
                (Some(l), Some(t)) => NormBounds::new(l.0, l.1, t.0, t.1),
                (l, t) => population.and_then(|p| {
                    let l = l.unwrap_or((p.loss_min, p.loss_max));
                    let t = t.unwrap_or((p.lat_min, p.lat_max));
                    NormBounds::new(l.0, l.1, t.0, t.1)
                }),
            }
            .map_err(invalid)?;
            let items: Vec<(u32, f64, f64)> = rows.iter().map(|r| (r.id, r.val_loss, r.latency_ms)).collect();
            let ranked = rank(score_all(&items, &bounds));
            let by_id: BTreeMap<u32, &CandidateRow> = rows.iter().map(|r| (r.id, r)).collect();
            let out_rows: Vec<CandidateRow> = ranked
                .iter()
                .map(|s| CandidateRow {
                    score: Some(s.score),
                    ..by_id[&s.id].clone()
                })
                .collect();
            if ctx.format == Format::Json && output.is_none() {
                return ctx.json(&json!({"bounds": bounds, "ranked": out_rows}));
            }
            let mut buf = Vec::new();
            write_rows(&mut buf, &out_rows).map_err(invalid)?;
            emit(ctx, output.as_ref(), &buf)?;
            if output.is_some() {
                let best = out_rows.first().map(|r| format!(", best id {} score {:.3}", r.id, r.score.unwrap_or(f64::NAN)));
                ctx.print(&format!("{} scored{}", out_rows.len(), best.unwrap_or_default()))?;
            }
            Ok(())
        }
    }
}
