//! Dispatch of a validated configuration to the computational modules.

use nalgebra::DMatrix;
use num_complex::Complex;
use serde_json::{json, Value};
use std::collections::BTreeMap;

use semiclassic_core::{
    abs_det, block_abs_det, block_eta, cartan_decompose, classify_sl2, cohomology_trace_oracle, eta,
    eta_of_operator, eta_trace_formula, extrapolated_det_oracle, fixed_point_weight, lefschetz_sum,
    log_generator, path_samples, projective_line_fixed_points, spectral_flow_linear,
    build_mapping_torus_report, witten_stationary_phase, CartanBlock, CartanDecomposition,
    ComplexStructure, Error as CoreError, FixedPointDatum, FlatConnectionDatum, Group, MappingClass,
    MappingTorusOptions, OperatorSpec, Sl2Class, StabilizerClass, SymplecticMatrix, Tolerances,
    ToyModelSpec, DEFAULT_S_VALUES,
};

use crate::config::*;
use crate::error::CliError;
use crate::report::{Diagnostic, Report, Table, SCHEMA_VERSION};

fn cjson(z: Complex<f64>) -> Value {
    json!({"re": z.re, "im": z.im})
}

fn dmatrix(m: &Matrix) -> DMatrix<f64> {
    let n = m.len();
    DMatrix::from_row_iterator(n, n, m.iter().flatten().copied())
}

fn symplectic(m: &Matrix, tol: &Tolerances) -> Result<SymplecticMatrix<f64>, CliError> {
    Ok(SymplecticMatrix::new(dmatrix(m), tol.symp)?)
}

/// Distance between two eta values modulo 2.
fn eta_distance_mod2(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0);
    d.min(2.0 - d)
}

struct Ctx {
    diagnostics: Vec<Diagnostic>,
    mismatch: bool,
}

impl Ctx {
    fn warn(&mut self, kind: &str, msg: impl Into<String>) {
        self.diagnostics.push(Diagnostic::warning(kind, msg));
    }

    /// Records a failed oracle comparison; the run still reports its results.
    fn check(&mut self, what: &str, deviation: f64, tol: f64) -> bool {
        let ok = deviation <= tol;
        if !ok {
            self.mismatch = true;
            self.diagnostics.push(Diagnostic::error(&CliError::Domain(CoreError::OracleMismatch(format!(
                "{what}: deviation {deviation:.3e} exceeds {tol:.1e}"
            )))));
        }
        ok
    }
}

struct Output {
    results: Value,
    table: Table,
    plot: Option<Table>,
}

/// Runs a configuration. Domain errors never escape: they are recorded as
/// diagnostics and reflected in `exit_code`.
pub fn run(config: &RunConfig) -> Report {
    let mut ctx = Ctx {
        diagnostics: Vec::new(),
        mismatch: false,
    };
    let out = match &config.payload {
        Payload::Classify(p) => classify(p, &mut ctx),
        Payload::Determinant(p) => determinant(p, &mut ctx),
        Payload::Eta(p) => eta_cmd(p, &mut ctx),
        Payload::SpectralFlow(p) => spectral_flow(p, &mut ctx),
        Payload::Lefschetz(p) => lefschetz(p, &mut ctx),
        Payload::MappingTorus(p) => mapping_torus(p, &mut ctx),
        Payload::WittenSum(p) => witten_sum(p, &mut ctx),
    };
    let (results, table, plot, exit_code) = match out {
        Ok(o) => (o.results, o.table, o.plot, if ctx.mismatch { 5 } else { 0 }),
        Err(e) => {
            ctx.diagnostics.push(Diagnostic::error(&e));
            (Value::Null, Table::default(), None, e.exit_code())
        }
    };
    Report {
        version: SCHEMA_VERSION.into(),
        config_echo: config.clone(),
        results,
        diagnostics: ctx.diagnostics,
        table,
        plot,
        exit_code,
    }
}

fn kind_name(b: &CartanBlock<f64>) -> &'static str {
    match b {
        CartanBlock::Unitary { .. } => "unitary",
        CartanBlock::Hyperbolic { .. } => "hyperbolic",
        CartanBlock::ComplexQuad { .. } => "complex_quad",
        CartanBlock::NegHyperbolic { .. } => "neg_hyperbolic",
    }
}

fn block_parameter(b: &CartanBlock<f64>) -> Complex<f64> {
    match *b {
        CartanBlock::Unitary { h } | CartanBlock::Hyperbolic { h } | CartanBlock::NegHyperbolic { h } => {
            Complex::new(h, 0.0)
        }
        CartanBlock::ComplexQuad { z } => z,
    }
}

fn block_table(dec: &CartanDecomposition<f64>) -> Result<(Vec<Value>, Table), CliError> {
    let mut table = Table::new(&["index", "kind", "parameter_re", "parameter_im", "abs_det", "eta"]);
    let mut list = Vec::new();
    for (i, b) in dec.blocks.iter().enumerate() {
        let z = block_parameter(b);
        let d = block_abs_det(b)?;
        let e = block_eta(b)?;
        table.push(vec![json!(i), json!(kind_name(b)), json!(z.re), json!(z.im), json!(d), json!(e)]);
        list.push(json!({"kind": kind_name(b), "parameter": cjson(z), "abs_det": d, "eta": e}));
    }
    Ok((list, table))
}

fn classify(p: &ClassifyPayload, ctx: &mut Ctx) -> Result<Output, CliError> {
    let tol = p.tolerances.to_core();
    let m = symplectic(&p.matrix, &tol)?;
    let sl2 = if m.half_dim() == 1 {
        Some(match classify_sl2(&m, tol.trace)? {
            Sl2Class::Hyperbolic => "hyperbolic",
            Sl2Class::Unitary => "unitary",
            Sl2Class::Parabolic => "parabolic",
        })
    } else {
        None
    };
    let dec = cartan_decompose(&m, &tol)?;
    let (blocks, table) = block_table(&dec)?;
    let closed_eta = eta(&dec)?;
    let trace_eta = eta_trace_formula(&OperatorSpec::from_decomposition(&dec));
    let dev = eta_distance_mod2(closed_eta, trace_eta);
    ctx.check("eta trace formula", dev, tol.trace);
    let reassembly = (dec.reassemble() - m.matrix()).amax();
    Ok(Output {
        results: json!({
            "dim": m.dim(),
            "sl2_class": sl2,
            "blocks": blocks,
            "abs_det": abs_det(&dec)?,
            "eta": closed_eta,
            "eta_oracle": trace_eta,
            "eta_deviation_mod2": dev,
            "reassembly_defect": reassembly,
        }),
        table,
        plot: None,
    })
}

fn determinant(p: &DeterminantPayload, ctx: &mut Ctx) -> Result<Output, CliError> {
    let tol = p.tolerances.to_core();
    let m = symplectic(&p.matrix, &tol)?;
    let dec = cartan_decompose(&m, &tol)?;
    let closed = abs_det(&dec)?;
    let spec = log_generator(&m, &tol)?;
    let oracle = extrapolated_det_oracle(&spec, p.oracle_m_max);
    let dev = (closed - oracle).abs();
    let rel = dev / closed.abs();
    ctx.check("|det D| oracle", rel, p.oracle_tol);
    let (blocks, table) = block_table(&dec)?;
    Ok(Output {
        results: json!({
            "abs_det": closed,
            "oracle": oracle,
            "deviation": dev,
            "relative_deviation": rel,
            "oracle_tol": p.oracle_tol,
            "oracle_method": "truncated mode product, Richardson extrapolated",
            "oracle_m_max": p.oracle_m_max,
            "blocks": blocks,
        }),
        table,
        plot: None,
    })
}

fn eta_cmd(p: &EtaPayload, ctx: &mut Ctx) -> Result<Output, CliError> {
    let tol = p.tolerances.to_core();
    let m = symplectic(&p.matrix, &tol)?;
    let dec = cartan_decompose(&m, &tol)?;
    let closed = eta(&dec)?;
    let spec = log_generator(&m, &tol)?;
    let s_values = p.s_values.clone().unwrap_or_else(|| DEFAULT_S_VALUES.to_vec());
    let est = eta_of_operator(&spec, p.m_range, &s_values, tol.kernel)?;
    let dev = (closed - est.value).abs();
    ctx.check("regularized eta", dev, p.oracle_tol);
    let trace = eta_trace_formula(&spec);
    let (blocks, table) = block_table(&dec)?;
    let curve: Vec<Value> = est.curve.iter().map(|(s, v)| json!({"s": s, "value": v})).collect();
    Ok(Output {
        results: json!({
            "eta": closed,
            "oracle": est.value,
            "deviation": dev,
            "oracle_tol": p.oracle_tol,
            "oracle_method": "mollified mode sum, extrapolated to s = 0",
            "cutoff": est.cutoff,
            "curve": curve,
            "eta_trace_formula_mod2": trace,
            "m_range": p.m_range,
            "blocks": blocks,
        }),
        table,
        plot: None,
    })
}

fn spectral_flow(p: &SpectralFlowPayload, ctx: &mut Ctx) -> Result<Output, CliError> {
    let tol = p.tolerances.to_core();
    let n = p.start.len() / 2;
    let j = match &p.complex_structure {
        Some(j) => ComplexStructure::new(dmatrix(j), tol.symp)?,
        None => ComplexStructure::standard(n),
    };
    let s0 = OperatorSpec::from_real(j.clone(), &dmatrix(&p.start), &tol)?;
    let s1 = OperatorSpec::from_real(j, &dmatrix(&p.end), &tol)?;
    let r = spectral_flow_linear(&s0, &s1, p.steps, p.m_range, &tol)?;
    if r.refinements > 0 {
        ctx.warn("AdaptiveRefinement", format!("{} path intervals were refined", r.refinements));
    }
    let mut table = Table::new(&["tau", "mode", "index", "direction"]);
    let crossings: Vec<Value> = r
        .crossings
        .iter()
        .map(|c| {
            table.push(vec![json!(c.tau), json!(c.mode), json!(c.index), json!(c.direction)]);
            json!({"tau": c.tau, "mode": c.mode, "index": c.index, "direction": c.direction})
        })
        .collect();
    let mut results = json!({
        "flow": r.flow,
        "endpoint_count": r.endpoint_count,
        "crossings": crossings,
        "kernel_hits": r.kernel_hits,
        "refinements": r.refinements,
        "steps": p.steps,
        "m_range": p.m_range,
    });
    if p.eta_check {
        let e0 = eta_of_operator(&s0, p.m_range, &DEFAULT_S_VALUES, tol.kernel)?.value;
        let e1 = eta_of_operator(&s1, p.m_range, &DEFAULT_S_VALUES, tol.kernel)?.value;
        let jump = e1 - e0;
        let expected = 2.0 * r.flow as f64;
        let dev = (jump - expected).abs();
        ctx.check("eta jump vs 2 * flow", dev, p.oracle_tol);
        let obj = results.as_object_mut().expect("object");
        obj.insert("eta_start".into(), json!(e0));
        obj.insert("eta_end".into(), json!(e1));
        obj.insert("eta_jump".into(), json!(jump));
        obj.insert("eta_jump_oracle".into(), json!(expected));
        obj.insert("eta_jump_deviation".into(), json!(dev));
        obj.insert("oracle_tol".into(), json!(p.oracle_tol));
    }
    let mut plot = Table::new(&["tau", "mode", "index", "eigenvalue"]);
    for s in path_samples(&s0, &s1, p.steps, &p.plot_modes, &tol)? {
        for (i, v) in s.eigenvalues.iter().enumerate() {
            plot.push(vec![json!(s.tau), json!(s.mode), json!(i), json!(v)]);
        }
    }
    Ok(Output {
        results,
        table,
        plot: Some(plot),
    })
}

fn point_rows(points: &[FixedPointDatum<f64>], tol: &Tolerances) -> Result<(Vec<Value>, Table), CliError> {
    let mut table = Table::new(&["label", "weight_re", "weight_im", "abs_det", "eta", "lift_re", "lift_im"]);
    let mut list = Vec::new();
    for q in points {
        let w = fixed_point_weight(&q.df, q.lift_trace, tol)?;
        table.push(vec![
            json!(q.label),
            json!(w.re),
            json!(w.im),
            json!(q.abs_det),
            json!(q.eta),
            json!(q.lift_trace.re),
            json!(q.lift_trace.im),
        ]);
        list.push(json!({
            "label": q.label,
            "weight": cjson(w),
            "abs_det": q.abs_det,
            "eta": q.eta,
            "lift": cjson(q.lift_trace),
        }));
    }
    Ok((list, table))
}

fn lefschetz(p: &LefschetzPayload, ctx: &mut Ctx) -> Result<Output, CliError> {
    let tol = p.tolerances.to_core();
    let (points, oracle) = match (&p.model, &p.points) {
        (Some(ToyModel::ProjectiveLine), _) => {
            let (level, theta) = (p.level.unwrap_or(0), p.theta.unwrap_or(0.0));
            let pts = projective_line_fixed_points(level, theta, &tol)?;
            let o = cohomology_trace_oracle(&ToyModelSpec::ProjectiveLine { level, theta })?;
            (pts, Some(o))
        }
        (None, Some(list)) => {
            let pts = list
                .iter()
                .map(|q| {
                    let df = symplectic(&q.matrix, &tol)?;
                    Ok(FixedPointDatum::from_df(
                        q.label.clone(),
                        df,
                        Complex::new(q.lift[0], q.lift[1]),
                        0.0,
                        0,
                        &tol,
                    )?)
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            ctx.warn("NoOracle", "explicit fixed-point lists have no independent cohomology oracle");
            (pts, None)
        }
        _ => return Err(CliError::Schema { field: "model".into(), message: "missing model or points".into() }),
    };
    let sum = lefschetz_sum(&points, &tol)?;
    let (list, table) = point_rows(&points, &tol)?;
    let mut results = json!({"value": cjson(sum), "points": list});
    if let Some(o) = oracle {
        let dev = (sum - o).norm();
        ctx.check("Lefschetz sum vs cohomology trace", dev, p.oracle_tol);
        let obj = results.as_object_mut().expect("object");
        obj.insert("oracle".into(), cjson(o));
        obj.insert("deviation".into(), json!(dev));
        obj.insert("oracle_tol".into(), json!(p.oracle_tol));
        obj.insert("oracle_method".into(), json!("trace on the monomial basis of H^0(O(k))"));
    }
    Ok(Output {
        results,
        table,
        plot: None,
    })
}

fn mapping_torus(p: &MappingTorusPayload, ctx: &mut Ctx) -> Result<Output, CliError> {
    let tol = p.tolerances.to_core();
    let mc = MappingClass::new(p.beta)?;
    let opts = MappingTorusOptions {
        omega_scale: p.omega_scale,
        m_range: p.m_range,
        steps: p.steps,
        mu_power: p.mu_power,
        tol,
    };
    let rep = build_mapping_torus_report(&mc, p.k, &opts)?;
    for d in &rep.diagnostics {
        let kind = if d.starts_with("skipped central") {
            "SkippedCentralPoint"
        } else if d.contains("refinement") {
            "AdaptiveRefinement"
        } else {
            "EmptySum"
        };
        ctx.warn(kind, d.clone());
    }
    let weights: BTreeMap<&str, Complex<f64>> = rep
        .partition
        .as_ref()
        .map(|pr| pr.per_point.iter().map(|(l, c)| (l.as_str(), *c)).collect())
        .unwrap_or_default();
    let mut table = Table::new(&[
        "label",
        "weyl_sign",
        "x",
        "y",
        "torsion_sqrt",
        "torsion_oracle",
        "abs_det",
        "eta",
        "action_difference",
        "flow_index",
        "weight_re",
        "weight_im",
    ]);
    let mut list = Vec::new();
    let mut worst = 0.0f64;
    for (q, info) in rep.points.iter().zip(&rep.info) {
        let oracle = q.abs_det.powf(-0.5);
        let dev = (info.torsion_sqrt - oracle).abs();
        worst = worst.max(dev);
        let w = weights.get(q.label.as_str()).copied().unwrap_or_default();
        let [x, y] = info.point.coords;
        table.push(vec![
            json!(q.label),
            json!(info.point.weyl_sign),
            json!(x.to_string()),
            json!(y.to_string()),
            json!(info.torsion_sqrt),
            json!(oracle),
            json!(q.abs_det),
            json!(q.eta),
            json!(info.action_difference),
            json!(q.flow_index),
            json!(w.re),
            json!(w.im),
        ]);
        list.push(json!({
            "label": q.label,
            "weyl_sign": info.point.weyl_sign,
            "coords": [x.to_string(), y.to_string()],
            "torsion_sqrt": info.torsion_sqrt,
            "torsion_oracle": oracle,
            "torsion_deviation": dev,
            "abs_det": q.abs_det,
            "eta": q.eta,
            "action_difference": info.action_difference,
            "flow_index": q.flow_index,
            "weight": cjson(w),
        }));
    }
    ctx.check("torsion vs |det D|^(-1/2)", worst, p.oracle_tol);
    let skipped: Vec<Value> = rep
        .skipped_central
        .iter()
        .map(|q| {
            debug_assert_eq!(q.stabilizer_class, StabilizerClass::Central);
            json!({"label": q.label(), "weyl_sign": q.weyl_sign})
        })
        .collect();
    let reference = rep.points.first().map(|q| q.label.clone());
    let flags: serde_json::Map<String, Value> = rep
        .partition
        .as_ref()
        .map(|pr| pr.convention_flags.iter().map(|(k, v)| (k.clone(), json!(v))).collect())
        .unwrap_or_default();
    let value = rep.value();
    Ok(Output {
        results: json!({
            "beta": rep.beta,
            "k": rep.k,
            "shifted_level": rep.shifted_level,
            "value": cjson(value),
            "abs_value": value.norm(),
            "reference": reference,
            "points": list,
            "skipped_central": skipped,
            "torsion_deviation_max": worst,
            "oracle_tol": p.oracle_tol,
            "convention_flags": flags,
        }),
        table,
        plot: None,
    })
}

fn witten_sum(p: &WittenSumPayload, ctx: &mut Ctx) -> Result<Output, CliError> {
    let group = if p.group_n == 2 { Group::SU2 } else { Group::SUn(p.group_n) };
    let h = group.dual_coxeter();
    let conns: Vec<FlatConnectionDatum<f64>> = p
        .connections
        .iter()
        .map(|c| FlatConnectionDatum {
            label: c.label.clone(),
            cs_value: c.cs,
            torsion_sqrt: c.torsion_sqrt,
            dim_h0: c.h0,
            dim_h1: c.h1,
            spectral_flow: c.spectral_flow,
        })
        .collect();
    let w = witten_stationary_phase(&conns, p.k, h, p.b1)?;
    // The sum is invariant under I_A → I_A + 4 and CS → CS + 1.
    let shifted: Vec<_> = conns
        .iter()
        .map(|c| FlatConnectionDatum {
            cs_value: c.cs_value + 1.0,
            spectral_flow: c.spectral_flow + 4,
            ..c.clone()
        })
        .collect();
    let ws = witten_stationary_phase(&shifted, p.k, h, p.b1)?;
    let dev = (ws.value - w.value).norm();
    ctx.check("Witten sum shift invariance", dev, 1e-12 * w.value.norm().max(1.0));
    let mut table = Table::new(&["label", "term_re", "term_im"]);
    let terms: Vec<Value> = w
        .terms
        .iter()
        .map(|(l, t)| {
            table.push(vec![json!(l), json!(t.re), json!(t.im)]);
            json!({"label": l, "term": cjson(*t)})
        })
        .collect();
    Ok(Output {
        results: json!({
            "value": cjson(w.value),
            "abs_value": w.value.norm(),
            "k": p.k,
            "dual_coxeter": h,
            "b1": p.b1,
            "terms": terms,
            "invariance_deviation": dev,
        }),
        table,
        plot: None,
    })
}
