//! The five subcommands. Each validates its parameters, computes rows
//! (in parallel where cells are independent) and returns a [`Table`].

use std::sync::Arc;

use critasym::hopf::{breaking_point, hopf_solve, DataRef, InitialData, Scaled, Sech2, Tabulated};
use critasym::kdv_asym::{
    kdv_phase_diagram, leading_edge_approx_with, leading_edge_constants, solve_leading_edge, EdgeSolution,
    LeadingEdgeConstants,
};
use critasym::kdv_direct::{probe, solve_kdv_with, KdvOptions};
use critasym::orthopoly::{
    asym_edge, asym_interior, asym_onecut, compute_recurrence_with, partition_log, InteriorCritical, RecurrenceConfig,
};
use critasym::painleve::{solve_hastings_mcleod, HMGrid};
use critasym::rmt_eq::{rmt_phase_diagram, solve_onecut_endpoints, CellStatus, QuarticField};
use critasym::toda::{flow_hierarchy, spectrum_drift, TodaState, SPECTRUM_TOL};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{DataSpec, KdvCompare, KdvPhase, OpTable, RmtPhase, TodaRun};
use crate::output::{error_kind, field, num, Failure, Table};

fn check_finite(name: &str, xs: &[f64]) -> Result<(), Failure> {
    match xs.iter().find(|x| !x.is_finite()) {
        Some(x) => Err(Failure::validation(format!("{name} contains a non-finite value {x}"))),
        None => Ok(()),
    }
}

fn load_data(spec: &DataSpec, file: Option<&[u8]>) -> Result<DataRef, Failure> {
    if !(spec.lambda > 0.0 && spec.lambda.is_finite()) {
        return Err(Failure::validation("data.lambda must be positive"));
    }
    let base: DataRef = match spec.kind.as_str() {
        "sech2" => Arc::new(Sech2),
        "table" => {
            let bytes = file.ok_or_else(|| Failure::validation("data.kind = \"table\" needs data.file"))?;
            let text = std::str::from_utf8(bytes).map_err(|e| Failure::validation(format!("data.file: {e}")))?;
            Arc::new(Tabulated::from_csv_str(text)?)
        }
        other => return Err(Failure::validation(format!("unknown data.kind {other:?}"))),
    };
    Ok(if spec.lambda == 1.0 { base } else { Arc::new(Scaled { base, lambda: spec.lambda }) })
}

pub fn kdv_phase(cfg: &KdvPhase, data_file: Option<&[u8]>) -> Result<Table, Failure> {
    let data = load_data(&cfg.data, data_file)?;
    check_finite("t_grid", &cfg.t_grid)?;
    if cfg.t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Failure::validation("t_grid must increase strictly"));
    }
    let cp = breaking_point(&*data)?;
    if let Some(&t) = cfg.t_grid.iter().find(|&&t| !(t > cp.t_c)) {
        return Err(Failure::validation(format!("t = {t} is not past the breaking time t_c = {}", cp.t_c)));
    }
    let diagram = kdv_phase_diagram(&*data, &cfg.t_grid)?;
    let mut rows: Vec<Vec<String>> = diagram
        .rows
        .iter()
        .map(|r| vec![num(r.t), num(r.x_minus), num(r.x_plus), num(r.x_plus - r.x_minus), "ok".into()])
        .collect();
    let mut failed = 0;
    let mut stopped = serde_json::Value::Null;
    if let Some((t_stop, e)) = &diagram.stopped {
        stopped = json!({ "t": t_stop, "kind": error_kind(e), "message": e.to_string() });
        for &t in cfg.t_grid.iter().filter(|&&t| t >= *t_stop) {
            let mark = if t == *t_stop { error_kind(e) } else { "not_reached" };
            rows.push(vec![num(t), num(f64::NAN), num(f64::NAN), num(f64::NAN), mark.into()]);
            failed += 1;
        }
    }
    Ok(Table {
        name: "kdv_phase",
        header: vec!["t", "x_minus", "x_plus", "width", "status"],
        rows,
        failed_rows: failed,
        tolerances: json!({ "edge_continuation_halvings": 12 }),
        summary: json!({ "t_c": cp.t_c, "x_c": cp.x_c, "u_c": cp.u_c, "stopped": stopped }),
    })
}

enum Window {
    Hopf(f64),
    Edge(EdgeSolution, LeadingEdgeConstants, Box<HMGrid>),
}

impl Window {
    fn range(&self, eps: f64, width: f64) -> (f64, f64) {
        match self {
            Window::Hopf(h) => (-h, *h),
            Window::Edge(e, ..) => {
                let w = width * eps.powf(2.0 / 3.0);
                (e.x_edge - w, e.x_edge + w)
            }
        }
    }

    fn reference(&self, x: f64, t: f64, eps: f64, data: &dyn InitialData) -> critasym::Result<f64> {
        match self {
            Window::Hopf(_) => hopf_solve(x, t, data),
            Window::Edge(e, k, hm) => Ok(leading_edge_approx_with(x, eps, e, k, hm)),
        }
    }
}

pub fn kdv_compare(cfg: &KdvCompare, data_file: Option<&[u8]>, tol_scale: f64) -> Result<Table, Failure> {
    let data = load_data(&cfg.data, data_file)?;
    check_finite("eps", &cfg.eps)?;
    check_finite("t", &[cfg.t, cfg.hopf_halfwidth, cfg.edge_width, cfg.half_period])?;
    if let Some(e) = cfg.eps.iter().find(|&&e| !(e > 0.0)) {
        return Err(Failure::validation(format!("eps = {e} must be positive")));
    }
    if cfg.samples < 2 || !(cfg.t > 0.0) || !(cfg.hopf_halfwidth > 0.0) || !(cfg.edge_width > 0.0) {
        return Err(Failure::validation("need samples ≥ 2 and positive t and window widths"));
    }
    if !(6..=20).contains(&cfg.log2_points) {
        return Err(Failure::validation("log2_points must lie in 6..=20"));
    }
    let cp = breaking_point(&*data)?;
    let window = match cfg.window.as_str() {
        "hopf" if cfg.t < cp.t_c => Window::Hopf(cfg.hopf_halfwidth),
        "leading_edge" if cfg.t > cp.t_c => {
            let edge = solve_leading_edge(cfg.t, &*data)?;
            let k = leading_edge_constants(&edge, &*data)?;
            Window::Edge(edge, k, Box::new(solve_hastings_mcleod(10.0, 2001)?))
        }
        "hopf" | "leading_edge" => {
            return Err(Failure::validation(format!(
                "window {:?} is not valid at t = {} (t_c = {})",
                cfg.window, cfg.t, cp.t_c
            )))
        }
        other => return Err(Failure::validation(format!("unknown window {other:?}"))),
    };
    let opts = KdvOptions { rtol: KdvOptions::default().rtol * tol_scale, ..KdvOptions::default() };
    let rows: Vec<(Vec<String>, bool)> = cfg
        .eps
        .par_iter()
        .map(|&eps| {
            let run = || -> critasym::Result<(f64, f64)> {
                let f = solve_kdv_with(&*data, eps, cfg.t, cfg.half_period, cfg.log2_points, &opts)?;
                let (lo, hi) = window.range(eps, cfg.edge_width);
                let (mut max, mut sq) = (0.0f64, 0.0);
                for i in 0..cfg.samples {
                    let x = lo + (hi - lo) * i as f64 / (cfg.samples - 1) as f64;
                    let d = (probe(&f, x) - window.reference(x, cfg.t, eps, &*data)?).abs();
                    max = max.max(d);
                    sq += d * d;
                }
                Ok((max, (sq / cfg.samples as f64).sqrt()))
            };
            match run() {
                Ok((max, rms)) => (vec![num(eps), num(max), num(rms), cfg.samples.to_string(), "ok".into()], false),
                Err(e) => {
                    let nan = num(f64::NAN);
                    (vec![num(eps), nan.clone(), nan, "0".into(), error_kind(&e).into()], true)
                }
            }
        })
        .collect();
    let failed = rows.iter().filter(|r| r.1).count();
    Ok(Table {
        name: "kdv_compare",
        header: vec!["eps", "max_error", "rms_error", "samples", "status"],
        rows: rows.into_iter().map(|r| r.0).collect(),
        failed_rows: failed,
        tolerances: json!({ "rtol": opts.rtol, "tail_limit": opts.tail_limit, "drift_limit": opts.drift_limit }),
        summary: json!({ "t_c": cp.t_c, "window": cfg.window }),
    })
}

pub fn rmt_phase(cfg: &RmtPhase) -> Result<Table, Failure> {
    check_finite("x_grid", &cfg.x_grid)?;
    check_finite("t_grid", &cfg.t_grid)?;
    let cells = rmt_phase_diagram(&cfg.x_grid, &cfg.t_grid);
    let mut failed = 0;
    let rows = cells
        .iter()
        .map(|c| {
            let (a, b) = c.support.unwrap_or((f64::NAN, f64::NAN));
            let (status, location, ambiguous, error) = match &c.status {
                CellStatus::OneCut(r) => (r.kind.label(), r.location, r.ambiguous, String::new()),
                CellStatus::Failed(e) => {
                    failed += 1;
                    ("failed", f64::NAN, false, field(e))
                }
            };
            vec![
                num(c.x),
                num(c.t),
                status.into(),
                num(location),
                num(c.margin),
                num(a),
                num(b),
                ambiguous.to_string(),
                error,
            ]
        })
        .collect();
    Ok(Table {
        name: "rmt_phase",
        header: vec!["x", "t", "status", "location", "margin", "a", "b", "ambiguous", "error"],
        rows,
        failed_rows: failed,
        tolerances: json!({ "singular_tol": 1e-6, "exterior_probe_fraction": 0.02 }),
        summary: json!({ "cells": cfg.x_grid.len() * cfg.t_grid.len() }),
    })
}

/// Formula values `(γ, β)`.
type Limits = (f64, f64);

/// `γ_n`, `β_n` for `e^{-N V_{x,t}}` equal those of `e^{-n V_{x + log(N/n), t}}`,
/// so each row is compared with the formula at the shifted `x`.
fn op_formula(which: &str, x: f64, t: f64, n: usize, n_scale: usize) -> critasym::Result<Limits> {
    let xn = x + (n_scale as f64 / n as f64).ln();
    match which {
        "regular" => {
            let (a, b) = solve_onecut_endpoints(&QuarticField::new(xn, t)?)?;
            Ok(asym_onecut(a, b))
        }
        "interior" => asym_interior(xn, n, &InteriorCritical::t9()).map(|r| (r.gamma, r.beta)),
        "edge" => asym_edge(xn, t, n).map(|r| (r.gamma, r.beta)),
        _ => unreachable!("validated"),
    }
}

pub fn op_table(cfg: &OpTable) -> Result<Table, Failure> {
    check_finite("x, t", &[cfg.x, cfg.t])?;
    let which = cfg.asymptotics.as_str();
    if !matches!(which, "none" | "regular" | "interior" | "edge") {
        return Err(Failure::validation(format!("unknown asymptotics {which:?}")));
    }
    if which == "interior" && cfg.t != 9.0 {
        return Err(Failure::validation("interior asymptotics are defined for t = 9"));
    }
    if cfg.n_scale == 0 || cfg.n_max == 0 || cfg.digits < 20 {
        return Err(Failure::validation("need n_scale ≥ 1, n_max ≥ 1 and digits ≥ 20"));
    }
    let rc = RecurrenceConfig { digits: cfg.digits, ..RecurrenceConfig::default() };
    let v = QuarticField::new(cfg.x, cfg.t)?.potential();
    let table = compute_recurrence_with(&v, cfg.n_scale, cfg.n_max, &rc)?;
    let ns: Vec<usize> = (1..=cfg.n_max).collect();
    let formulas: Vec<Option<critasym::Result<Limits>>> =
        ns.par_iter().map(|&n| (which != "none").then(|| op_formula(which, cfg.x, cfg.t, n, cfg.n_scale))).collect();
    let mut failed = 0;
    let mut rows = Vec::with_capacity(ns.len());
    for (&n, formula) in ns.iter().zip(formulas) {
        let (g, b) = (table.gamma[n], table.beta[n]);
        let mut row =
            vec![n.to_string(), num(g), num(b), num(table.log_kappa[n]), num(partition_log(&table, n)?.log_z)];
        match formula {
            None => row.push("ok".into()),
            Some(Ok((gf, bf))) => {
                row.extend([num(gf), num(bf), num((g - gf).abs()), num((b - bf).abs()), "ok".into()]);
            }
            Some(Err(e)) => {
                failed += 1;
                row.extend(std::iter::repeat_n(num(f64::NAN), 4));
                row.push(error_kind(&e).into());
            }
        }
        rows.push(row);
    }
    let mut header = vec!["n", "gamma", "beta", "log_kappa", "log_z"];
    if which != "none" {
        header.extend(["gamma_formula", "beta_formula", "gamma_error", "beta_error"]);
    }
    header.push("status");
    Ok(Table {
        name: "op_table",
        header,
        rows,
        failed_rows: failed,
        tolerances: json!({
            "digits": table.digits,
            "order": rc.order,
            "nodes": table.nodes,
            "tail": rc.tail,
            "interval": [table.interval.0, table.interval.1],
        }),
        summary: json!({ "n_scale": cfg.n_scale, "n_max": cfg.n_max }),
    })
}

fn parse_lattice(bytes: &[u8]) -> Result<(Vec<f64>, Vec<f64>), Failure> {
    let text = std::str::from_utf8(bytes).map_err(|e| Failure::validation(format!("toda file: {e}")))?;
    let (mut gamma, mut beta) = (Vec::new(), Vec::new());
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Option<(usize, f64, f64)> = match cols.as_slice() {
            [n, g, b, ..] => n.parse().ok().zip(g.parse().ok()).zip(b.parse().ok()).map(|((n, g), b)| (n, g, b)),
            _ => None,
        };
        match parsed {
            Some((n, g, b)) if n == beta.len() => {
                gamma.push(g);
                beta.push(b);
            }
            Some((n, ..)) => return Err(Failure::validation(format!("toda file: row n = {n} out of order"))),
            None if beta.is_empty() => continue, // header
            None => return Err(Failure::validation(format!("toda file: bad line {line:?}"))),
        }
    }
    Ok((gamma, beta))
}

pub fn toda_run(cfg: &TodaRun, file: Option<&[u8]>) -> Result<Table, Failure> {
    if !(cfg.dt > 0.0 && cfg.dt.is_finite()) || !(1..=4).contains(&cfg.k) {
        return Err(Failure::validation("need dt > 0 and k in 1..=4"));
    }
    let state = match cfg.initial.as_str() {
        "gaussian" => TodaState::gaussian(cfg.eps, cfg.m)?,
        "table" => {
            let bytes = file.ok_or_else(|| Failure::validation("initial = \"table\" needs file"))?;
            let (gamma, beta) = parse_lattice(bytes)?;
            TodaState::new(cfg.eps, gamma, beta)?
        }
        other => return Err(Failure::validation(format!("unknown initial {other:?}"))),
    };
    let out = flow_hierarchy(&state, cfg.k, cfg.dt, cfg.steps)?;
    let drift = spectrum_drift(&state.spectrum(), &out.spectrum());
    let rows = (0..=out.m()).map(|n| vec![n.to_string(), num(out.gamma[n]), num(out.beta[n])]).collect();
    Ok(Table {
        name: "toda_run",
        header: vec!["n", "gamma", "beta"],
        rows,
        failed_rows: 0,
        tolerances: json!({ "spectrum_tol": SPECTRUM_TOL, "dt": cfg.dt }),
        summary: json!({ "m": out.m(), "k": cfg.k, "t_k": out.times.get(&cfg.k).copied().unwrap_or(0.0), "spectrum_drift": drift }),
    })
}
