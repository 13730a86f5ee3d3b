//! Human-readable and JSON renderings of evaluation results.

use std::fmt::Write as _;

use serde::Serialize;
use viewagg::asl::BatteryReport;
use viewagg::{AslParams, EvalReport, PpRatio};

#[derive(Debug, Serialize)]
struct ClassJson<'a> {
    name: &'a str,
    ap: Option<f64>,
    n_pos: usize,
    n_neg: usize,
}

#[derive(Debug, Serialize)]
struct EvalJson<'a> {
    classes: Vec<ClassJson<'a>>,
    macro_map: f64,
    n_included: usize,
}

fn eval_json(report: &EvalReport) -> EvalJson<'_> {
    EvalJson {
        classes: report
            .per_class
            .iter()
            .map(|c| ClassJson {
                name: &c.name,
                ap: c.ap.value(),
                n_pos: c.n_pos,
                n_neg: c.n_neg,
            })
            .collect(),
        macro_map: report.macro_map,
        n_included: report.n_included,
    }
}

pub fn eval_to_json(report: &EvalReport) -> String {
    serde_json::to_string_pretty(&eval_json(report)).expect("report serializes") + "\n"
}

pub fn eval_to_table(report: &EvalReport) -> String {
    let width = report
        .per_class
        .iter()
        .map(|c| c.name.len())
        .max()
        .unwrap_or(0)
        .max(5);
    let mut out = String::new();
    writeln!(
        out,
        "{:<width$}  {:>8}  {:>8}  {:>8}",
        "class", "AP", "n_pos", "n_neg"
    )
    .unwrap();
    for c in &report.per_class {
        let ap =
            c.ap.value()
                .map_or_else(|| "excluded".to_owned(), |v| format!("{v:.6}"));
        writeln!(
            out,
            "{:<width$}  {:>8}  {:>8}  {:>8}",
            c.name, ap, c.n_pos, c.n_neg
        )
        .unwrap();
    }
    writeln!(
        out,
        "macro mAP: {:.6} over {} of {} classes",
        report.macro_map,
        report.n_included,
        report.per_class.len()
    )
    .unwrap();
    out
}

pub struct SweepRow {
    pub ratio: PpRatio,
    pub macro_map: f64,
    pub n_included: usize,
}

#[derive(Serialize)]
struct SweepRowJson {
    ratio: String,
    w_f: f64,
    w_l: f64,
    macro_map: f64,
    n_included: usize,
}

#[derive(Serialize)]
struct SweepJson {
    ratios: Vec<SweepRowJson>,
}

pub fn sweep_to_json(rows: &[SweepRow]) -> String {
    let doc = SweepJson {
        ratios: rows
            .iter()
            .map(|r| SweepRowJson {
                ratio: r.ratio.to_string(),
                w_f: r.ratio.w_f,
                w_l: r.ratio.w_l,
                macro_map: r.macro_map,
                n_included: r.n_included,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("sweep serializes") + "\n"
}

pub fn sweep_to_table(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    writeln!(out, "{:<10}  {:>10}  {:>10}", "PP ratio", "mAP", "classes").unwrap();
    for r in rows {
        writeln!(
            out,
            "{:<10}  {:>10.6}  {:>10}",
            r.ratio.to_string(),
            r.macro_map,
            r.n_included
        )
        .unwrap();
    }
    out
}

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("ratio,w_f,w_l,macro_map,n_included\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.ratio, r.ratio.w_f, r.ratio.w_l, r.macro_map, r.n_included
        )
        .unwrap();
    }
    out
}

#[derive(Serialize)]
struct LossCheckJson {
    gamma_pos: f64,
    gamma_neg: f64,
    margin: f64,
    clip_eps: f64,
    seed: u64,
    draws: usize,
    elements: usize,
    mean_loss: f64,
    max_rel_grad_error: f64,
    max_bce_deviation: Option<f64>,
    pass: bool,
}

pub fn loss_check_to_json(params: &AslParams, seed: u64, report: &BatteryReport, pass: bool) -> String {
    let doc = LossCheckJson {
        gamma_pos: params.gamma_pos,
        gamma_neg: params.gamma_neg,
        margin: params.margin,
        clip_eps: params.clip_eps,
        seed,
        draws: report.draws,
        elements: report.elements,
        mean_loss: report.mean_loss,
        max_rel_grad_error: report.max_rel_grad_error,
        max_bce_deviation: report.max_bce_deviation,
        pass,
    };
    serde_json::to_string_pretty(&doc).expect("loss check serializes") + "\n"
}

pub fn loss_check_to_table(params: &AslParams, seed: u64, report: &BatteryReport, pass: bool) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "params: gamma_pos={} gamma_neg={} margin={} clip_eps={}",
        params.gamma_pos, params.gamma_neg, params.margin, params.clip_eps
    )
    .unwrap();
    writeln!(
        out,
        "draws: {} ({} elements), seed {}",
        report.draws, report.elements, seed
    )
    .unwrap();
    writeln!(out, "mean loss: {:.12}", report.mean_loss).unwrap();
    writeln!(
        out,
        "max relative gradient error: {:.3e}",
        report.max_rel_grad_error
    )
    .unwrap();
    if let Some(dev) = report.max_bce_deviation {
        writeln!(out, "max |loss - bce|: {dev:.3e}").unwrap();
    }
    writeln!(out, "{}", if pass { "PASS" } else { "FAIL" }).unwrap();
    out
}
