use std::fs;
use std::io::Write;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use viewagg::asl::gradient_battery;
use viewagg::ingest::{read_class_subset, write_labels, write_predictions};
use viewagg::ratio::parse_ratio_list;
use viewagg::{
    aggregate_all, aggregate_all_pooled, evaluate as evaluate_predictions, group_by_study, read_labels,
    read_predictions, read_study_predictions, write_study_predictions, AggregationConfig, AslParams,
    EnsembleConfig, MissingViewPolicy, PpRatio, PredictionSet, SynthConfig,
};

use crate::report::{self, SweepRow};
use crate::{
    AggregateArgs, EnsembleArgs, EvaluateArgs, LossCheckArgs, MissingView, OutputFormat, ReportFormat,
    SweepArgs, SynthArgs,
};

/// Largest relative gradient error accepted by `loss-check`.
pub const GRAD_TOLERANCE: f64 = 1e-6;
/// Largest deviation from binary cross-entropy accepted when the loss reduces to it.
pub const BCE_TOLERANCE: f64 = 1e-12;

fn policy(m: MissingView) -> MissingViewPolicy {
    match m {
        MissingView::UsePresent => MissingViewPolicy::UsePresentView,
        MissingView::Error => MissingViewPolicy::Error,
    }
}

fn emit(text: &str) -> Result<()> {
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(text.as_bytes())?;
    stdout.flush()?;
    Ok(())
}

fn load_predictions(path: &std::path::Path) -> Result<PredictionSet> {
    read_predictions(path).with_context(|| format!("reading {}", path.display()))
}

pub fn synth(args: &SynthArgs) -> Result<ExitCode> {
    let k = args.classes as usize;
    let config = SynthConfig {
        frontal_noise: args.frontal_noise,
        lateral_noise: args.lateral_noise,
        p_has_lateral: args.p_has_lateral,
        p_extra_frontal: args.p_extra_frontal,
        signal: args.signal,
        ..SynthConfig::new(args.studies, k, args.seed)
    };
    let data = viewagg::generate_ensemble(&config, args.models as usize)?;
    fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    if data.members.len() == 1 {
        write_predictions(args.out_dir.join("predictions.csv"), &data.members[0])?;
    } else {
        for (m, set) in data.members.iter().enumerate() {
            write_predictions(args.out_dir.join(format!("predictions_{m}.csv")), set)?;
        }
    }
    write_labels(args.out_dir.join("labels.csv"), &data.labels)?;
    Ok(ExitCode::SUCCESS)
}

pub fn aggregate(args: &AggregateArgs) -> Result<ExitCode> {
    let ratio = args.pp_ratio.as_deref().map(str::parse::<PpRatio>).transpose()?;
    let set = load_predictions(&args.predictions)?;
    let groups = group_by_study(set.records());
    let rows = if args.no_view_weighting {
        aggregate_all_pooled(&groups)?
    } else {
        let config = match ratio {
            Some(r) => r.to_config(policy(args.missing_view)),
            None => AggregationConfig::new(1.0, 1.0, policy(args.missing_view))?,
        };
        aggregate_all(&groups, &config)?
    };
    write_study_predictions(&args.out, set.class_names(), &rows)
        .with_context(|| format!("writing {}", args.out.display()))?;
    Ok(ExitCode::SUCCESS)
}

fn parse_weights(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|w| {
            w.trim()
                .parse::<f64>()
                .with_context(|| format!("invalid ensemble weight {w:?}"))
        })
        .collect()
}

pub fn ensemble(args: &EnsembleArgs) -> Result<ExitCode> {
    let config = match &args.weights {
        Some(text) => {
            let weights = parse_weights(text)?;
            if weights.len() != args.predictions.len() {
                bail!(
                    "{} weights given for {} prediction files",
                    weights.len(),
                    args.predictions.len()
                );
            }
            EnsembleConfig::new(weights)?
        }
        None => EnsembleConfig::equal(args.predictions.len())?,
    };
    let sets = args
        .predictions
        .iter()
        .map(|p| load_predictions(p))
        .collect::<Result<Vec<_>>>()?;
    let out = viewagg::ensemble(&sets, &config)?;
    write_predictions(&args.out, &out).with_context(|| format!("writing {}", args.out.display()))?;
    Ok(ExitCode::SUCCESS)
}

fn load_subset(path: Option<&std::path::Path>) -> Result<Option<Vec<String>>> {
    path.map(|p| read_class_subset(p).with_context(|| format!("reading {}", p.display())))
        .transpose()
}

pub fn evaluate(args: &EvaluateArgs) -> Result<ExitCode> {
    let subset = load_subset(args.classes.as_deref())?;
    let (classes, preds) = read_study_predictions(&args.predictions)
        .with_context(|| format!("reading {}", args.predictions.display()))?;
    let labels = read_labels(&args.labels).with_context(|| format!("reading {}", args.labels.display()))?;
    let report = evaluate_predictions(&classes, &preds, &labels, subset.as_deref())?;
    emit(&match args.report {
        OutputFormat::Table => report::eval_to_table(&report),
        OutputFormat::Json => report::eval_to_json(&report),
    })?;
    Ok(ExitCode::SUCCESS)
}

pub fn sweep(args: &SweepArgs) -> Result<ExitCode> {
    let ratios = parse_ratio_list(&args.ratios)?;
    let subset = load_subset(args.classes.as_deref())?;
    let set = load_predictions(&args.predictions)?;
    let labels = read_labels(&args.labels).with_context(|| format!("reading {}", args.labels.display()))?;
    let groups = group_by_study(set.records());

    let mut rows = Vec::with_capacity(ratios.len());
    for ratio in ratios {
        let preds = aggregate_all(&groups, &ratio.to_config(policy(args.missing_view)))?;
        let report = evaluate_predictions(set.class_names(), &preds, &labels, subset.as_deref())?;
        rows.push(SweepRow {
            ratio,
            macro_map: report.macro_map,
            n_included: report.n_included,
        });
    }
    emit(&match args.report {
        ReportFormat::Table => report::sweep_to_table(&rows),
        ReportFormat::Json => report::sweep_to_json(&rows),
        ReportFormat::Csv => report::sweep_to_csv(&rows),
    })?;
    Ok(ExitCode::SUCCESS)
}

pub fn loss_check(args: &LossCheckArgs) -> Result<ExitCode> {
    let params = AslParams {
        gamma_pos: args.gamma_pos,
        gamma_neg: args.gamma_neg,
        margin: args.margin,
        clip_eps: args.clip_eps,
    };
    let report = gradient_battery(&params, args.n as usize, args.seed)?;
    let pass = report.max_rel_grad_error <= GRAD_TOLERANCE
        && report.max_bce_deviation.is_none_or(|d| d <= BCE_TOLERANCE);
    emit(&match args.report {
        OutputFormat::Table => report::loss_check_to_table(&params, args.seed, &report, pass),
        OutputFormat::Json => report::loss_check_to_json(&params, args.seed, &report, pass),
    })?;
    Ok(if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
