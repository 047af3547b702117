use log::{info, warn};
use otoc_core::channel::{build_channel, diagnose};
use otoc_core::freeprob::steady_state_terms;
use otoc_core::gates::haar_random;
use otoc_core::linalg::loglog_slope;
use otoc_core::markov::{kotoc_transfer, kotoc_transfer_with, steady_state, subleading_eigenoperators};
use otoc_core::montecarlo::{estimate, extended_bath_estimate, BathLayout, McConfig, McEstimate};
use otoc_core::mps::export_influence_mps;
use otoc_core::multichain::kotoc_multichain_with;
use otoc_core::ncpart::{catalan, combined_singletons, kreweras, mobius, num_singletons};
use otoc_core::{Gate, NcLattice, Observable, ReplicaKernel, C64};
use serde_json::{json, Value};

use crate::args::*;
use crate::io::*;

/// Agreement demanded between exact methods, relative to `max_t |C(t)|`.
pub const VALIDATE_TOL: f64 = 1e-10;

pub fn lattice(a: &LatticeArgs, cfg: &Value) -> CliResult<()> {
    let lat = NcLattice::new(a.k)?;
    let parts: Vec<Value> = lat
        .partitions()
        .iter()
        .map(|p| {
            let mut e = json!({
                "label": p.to_string(),
                "blocks": p.blocks_one_based(),
                "rank": p.rank(),
                "singletons": num_singletons(p),
                "combined_singletons": combined_singletons(p),
            });
            if a.kreweras {
                let kr = kreweras(p);
                e["kreweras_blocks"] = json!(kr.blocks_one_based());
                e["kreweras_index"] = json!(lat.index_of(&kr));
            }
            e
        })
        .collect();
    let mut out = json!({ "k": a.k, "catalan": catalan(a.k), "partitions": parts });
    if a.mobius {
        let n = lat.len();
        let mut mu = vec![vec![0i64; n]; n];
        for (i, row) in mu.iter_mut().enumerate() {
            for &j in lat.up_set(i) {
                row[j] = mobius(lat.get(i), lat.get(j))?;
            }
        }
        out["mobius"] = json!(mu);
    }
    out["provenance"] = provenance(cfg, json!({}));
    emit_json(a.output.out.as_deref(), &out)
}

pub fn channel(a: &ChannelArgs, cfg: &Value) -> CliResult<()> {
    let gate = parse_gate(&a.gate)?;
    let diag = diagnose(&gate, a.tol)?;
    let ch = build_channel(&gate);
    let out = json!({
        "d_a": gate.d_a(),
        "d_c": gate.d_c(),
        "eigenvalues": diag.eigenvalues.iter().map(|&z| cjson(z)).collect::<Vec<_>>(),
        "trivial_index": diag.trivial_index,
        "lambda_sub": cjson(diag.lambda_sub),
        "abs_lambda_sub": diag.lambda_sub.norm(),
        "restricted_norm": diag.restricted_norm,
        "op_entropy": diag.op_entropy,
        "mixing_bound": diag.mixing_bound,
        "ergodicity_class": diag.ergodicity_class.as_str(),
        "dual_unitary": diag.dual_unitary,
        "unitality_violation": ch.unitality_violation(),
        "trace_violation": ch.trace_violation(),
        "choi_min_eigenvalue": ch.choi_min_eigenvalue(),
        "provenance": provenance(cfg, json!({ "gate_hash": gate_hash(&gate) })),
    });
    if a.json {
        return emit_json(a.output.out.as_deref(), &out);
    }
    let mut text = format!(
        "d_A = {}, d_C = {}\nclass: {}\nlambda_sub: {} (|lambda| = {:.6})\nrestricted norm: {:.6}\noperator entropy: {:.6}\n",
        gate.d_a(),
        gate.d_c(),
        diag.ergodicity_class.as_str(),
        diag.lambda_sub,
        diag.lambda_sub.norm(),
        diag.restricted_norm,
        diag.op_entropy,
    );
    if let Some(b) = diag.mixing_bound {
        text += &format!("mixing bound: {b:.6}\n");
    }
    if let Some(du) = diag.dual_unitary {
        text += &format!("dual-unitary: {du}\n");
    }
    emit(a.output.out.as_deref(), text.as_bytes())
}

pub fn steady(a: &SteadyArgs, cfg: &Value) -> CliResult<()> {
    let gate = a.gate.as_deref().map(parse_gate).transpose()?;
    let d = match (&gate, a.d, a.obs.obs_a.first()) {
        (Some(g), _, _) => g.d_a(),
        (None, Some(d), _) => d,
        (None, None, Some(f)) => read_observable(f)?.d(),
        _ => return input_err("steady needs --gate, --d or observable files"),
    };
    let (oa, ob) = observables(&a.obs, gate.as_ref(), d, a.k)?;
    let terms = steady_state_terms(a.k, &oa, &ob)?;
    let prediction: C64 = terms.iter().map(|t| t.1 * t.2).sum();
    let mut out = json!({
        "k": a.k,
        "d_a": d,
        "prediction": cjson(prediction),
        "terms": terms.iter().map(|(s, kap, phi)| json!({
            "sigma": s.to_string(),
            "kreweras": kreweras(s).to_string(),
            "kappa_a": cjson(*kap),
            "phi_b": cjson(*phi),
            "product": cjson(kap * phi),
        })).collect::<Vec<_>>(),
    });
    let mut extra = json!({});
    if let Some(g) = &gate {
        let proj = steady_state(g, &oa, &ob, a.k)?;
        out["projector"] = cjson(proj);
        out["projector_minus_prediction"] = json!((proj - prediction).norm());
        extra = json!({ "gate_hash": gate_hash(g) });
    }
    out["provenance"] = provenance(cfg, extra);
    emit_json(a.output.out.as_deref(), &out)
}

fn mc_config(gate: &Gate, k: usize, t_max: usize, d_e: usize, samples: usize, seed: u64, sites: Option<usize>) -> McConfig {
    McConfig {
        d_a: gate.d_a(),
        d_c: gate.d_c(),
        d_e,
        k,
        t_max,
        n_samples: samples,
        base_seed: seed,
        bath: sites.map_or(BathLayout::Single, BathLayout::Brickwork),
    }
}

fn run_mc(cfg: &McConfig, gate: &Gate, a: &[Observable], b: &[Observable]) -> CliResult<McEstimate> {
    Ok(match cfg.bath {
        BathLayout::Single => estimate(cfg, gate, a, b)?,
        BathLayout::Brickwork(_) => extended_bath_estimate(cfg, gate, a, b)?,
    })
}

/// Largest deviation between two series relative to the larger series' peak.
fn scaled_diff(x: &[C64], y: &[C64]) -> f64 {
    let scale = x.iter().chain(y).map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    x.iter().zip(y).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max) / scale
}

pub fn otoc(a: &OtocArgs, cfg: &Value) -> CliResult<()> {
    let mut methods = a.method.clone();
    methods.dedup();
    if methods.is_empty() {
        return input_err("--method needs at least one of multichain, transfer, montecarlo");
    }
    let gate = parse_gate(&a.gate)?;
    let (oa, ob) = observables(&a.obs, Some(&gate), gate.d_a(), a.k)?;
    let exact = methods.iter().any(|m| *m != MethodArg::Montecarlo);
    let kernel = if exact { Some(ReplicaKernel::new(gate.clone(), a.k)?) } else { None };

    let hash = gate_hash(&gate);
    if methods == [MethodArg::Montecarlo] {
        let mc = mc_config(&gate, a.k, a.t_max, a.d_e, a.samples, a.seed, a.bath_sites);
        let est = run_mc(&mc, &gate, &oa, &ob)?;
        let mut table = Table::new(
            provenance(cfg, json!({ "gate_hash": hash })),
            &["t", "mean_re", "mean_im", "stderr", "variance", "d_e", "samples", "seed"],
        )?;
        for t in est.t_values.iter().copied() {
            let m = est.mean[t];
            table.row(&[
                t.to_string(),
                num(m.re),
                num(m.im),
                num(est.stderr[t]),
                num(est.variance[t]),
                a.d_e.to_string(),
                a.samples.to_string(),
                a.seed.to_string(),
            ])?;
        }
        return table.finish(a.output.out.as_deref());
    }
    let mut table = Table::new(
        provenance(cfg, json!({ "gate_hash": hash })),
        &["t", "value_re", "value_im", "method", "k", "gate_hash", "stderr"],
    )?;
    let mut series: Vec<(&str, Vec<C64>)> = Vec::new();
    for m in &methods {
        let (name, values, stderr) = match m {
            MethodArg::Multichain => ("multichain", kotoc_multichain_with(kernel.as_ref().unwrap(), &oa, &ob, a.t_max)?.values, None),
            MethodArg::Transfer => ("transfer", kotoc_transfer_with(kernel.as_ref().unwrap(), &oa, &ob, a.t_max)?.values, None),
            MethodArg::Montecarlo => {
                let mc = mc_config(&gate, a.k, a.t_max, a.d_e, a.samples, a.seed, a.bath_sites);
                let est = run_mc(&mc, &gate, &oa, &ob)?;
                ("montecarlo", est.mean, Some(est.stderr))
            }
        };
        info!("{name}: {} points", values.len());
        for (t, v) in values.iter().enumerate() {
            let se = stderr.as_ref().map_or(String::new(), |s| num(s[t]));
            table.row(&[t.to_string(), num(v.re), num(v.im), name.to_string(), a.k.to_string(), hash.clone(), se])?;
        }
        series.push((name, values));
    }
    table.finish(a.output.out.as_deref())?;

    if a.validate {
        let exact: Vec<&(&str, Vec<C64>)> = series.iter().filter(|s| s.0 != "montecarlo").collect();
        if exact.len() < 2 {
            warn!("--validate needs two exact methods; nothing compared");
        }
        for pair in exact.windows(2) {
            let dev = scaled_diff(&pair[0].1, &pair[1].1);
            info!("{} vs {}: {dev:.3e}", pair[0].0, pair[1].0);
            if dev > VALIDATE_TOL {
                return Err(Failure::Numeric(format!(
                    "{} and {} differ by {dev:.3e} of max |C| (tolerance {VALIDATE_TOL:e})",
                    pair[0].0, pair[1].0
                )));
            }
        }
    }
    Ok(())
}

pub fn scan(a: &ScanArgs, cfg: &Value) -> CliResult<()> {
    if a.d_e_list.len() < 2 {
        return input_err("--d-e-list needs at least two bath dimensions");
    }
    let gate = parse_gate(&a.gate)?;
    let (oa, ob) = observables(&a.obs, Some(&gate), gate.d_a(), a.k)?;
    let exact = kotoc_transfer(&gate, &oa, &ob, a.k, a.t)?.values[a.t];
    let prov = provenance(cfg, json!({ "gate_hash": gate_hash(&gate) }));
    let mut table = Table::new(
        prov.clone(),
        &["d_e", "mean_re", "mean_im", "stderr", "variance", "exact_re", "exact_im", "abs_bias"],
    )?;
    let (mut bias, mut var, mut z) = (Vec::new(), Vec::new(), 0.0);
    for &d_e in &a.d_e_list {
        let est = run_mc(&mc_config(&gate, a.k, a.t, d_e, a.samples, a.seed, None), &gate, &oa, &ob)?;
        let (m, se, v) = (est.mean[a.t], est.stderr[a.t], est.variance[a.t]);
        let dev = (m - exact).norm();
        info!("d_e={d_e}: |mean-C|={dev:.3e} stderr={se:.3e}");
        bias.push(dev);
        var.push(v);
        z = dev / se;
        table.row(&[d_e.to_string(), num(m.re), num(m.im), num(se), num(v), num(exact.re), num(exact.im), num(dev)])?;
    }
    table.finish(a.output.out.as_deref())?;
    let xs: Vec<f64> = a.d_e_list.iter().map(|&x| x as f64).collect();
    let summary = json!({
        "t": a.t,
        "slope_abs_bias": loglog_slope(&xs, &bias),
        "slope_variance": loglog_slope(&xs, &var),
        "last_deviation_in_stderr": z,
        "provenance": prov,
    });
    match &a.summary {
        Some(path) => emit_json(Some(path), &summary),
        None => {
            eprintln!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(())
        }
    }
}

pub fn export_mps(a: &ExportArgs, cfg: &Value) -> CliResult<()> {
    let m = export_influence_mps(a.k, a.d_a, a.d_c, a.t)?;
    let lat = NcLattice::new(a.k)?;
    let mut out = json!({
        "k": m.k,
        "d_a": m.d_a,
        "d_c": m.d_c,
        "t": m.t,
        "bond_dim": m.bond_dim,
        "phys_dim": m.phys_dim,
        "step_scale": m.step_scale,
        "partitions": lat.partitions().iter().map(|p| p.to_string()).collect::<Vec<_>>(),
        "phys": m.phys,
        "bottom": m.bottom,
        "top": m.top,
        "sites": m.sites.iter().map(|s| json!({ "kind": s.kind.as_str(), "bond": s.bond })).collect::<Vec<_>>(),
    });
    let mut extra = json!({});
    let mut failure = None;
    if let Some(spec) = &a.verify {
        let gate = parse_gate(spec)?;
        if gate.d_a() != a.d_a || gate.d_c() != a.d_c {
            return input_err(format!("--verify gate is {}x{}, export is {}x{}", gate.d_a(), gate.d_c(), a.d_a, a.d_c));
        }
        let (oa, ob) = (random_tuple(a.d_a, a.k, 1, false)?, random_tuple(a.d_a, a.k, 1 + a.k as u64, false)?);
        let got = m.recontract(&gate, &oa, &ob)?;
        let want = kotoc_transfer(&gate, &oa, &ob, a.k, a.t)?.values;
        let dev = scaled_diff(&got, &want[1..]);
        out["verify"] = json!({ "scaled_deviation": dev, "tolerance": VALIDATE_TOL, "pass": dev <= VALIDATE_TOL });
        extra = json!({ "gate_hash": gate_hash(&gate) });
        if dev > VALIDATE_TOL {
            failure = Some(Failure::Numeric(format!("recontraction deviates from transfer by {dev:.3e}")));
        }
    }
    out["provenance"] = provenance(cfg, extra);
    emit_json(a.output.out.as_deref(), &out)?;
    failure.map_or(Ok(()), Err)
}

/// First Haar gate from `seed` on whose subleading eigenvalue is real and
/// nondegenerate.
fn recipe_gate(d: usize, seed: u64) -> CliResult<(u64, Gate, Observable, Observable, f64)> {
    for s in seed..seed.saturating_add(1000) {
        let g = haar_random(d, d, s)?;
        if let Ok(e) = subleading_eigenoperators(&g) {
            let (a, b) = eigen_observables(&e)?;
            return Ok((s, g, a, b, e.lambda.re));
        }
    }
    input_err(format!("no gate with a real subleading eigenvalue in seeds {seed}..{}", seed.saturating_add(1000)))
}

/// `(k, observables label, ε, a, b)`.
type Run = (usize, &'static str, f64, Vec<Observable>, Vec<Observable>);

pub fn recipe(a: &RecipeArgs, cfg: &Value) -> CliResult<()> {
    let d = a.d.unwrap_or(if a.figure == Figure::Fig2 { 2 } else { 3 });
    let t_max = a.t_max.unwrap_or(if a.figure == Figure::Fig3 { 40 } else { 20 });
    let (seed, gate, ea, eb, lambda) = recipe_gate(d, a.seed)?;
    info!("gate seed {seed}, lambda = {lambda}");
    eprintln!("lambda = {lambda:.6} (gate seed {seed})");
    let mut runs: Vec<Run> = Vec::new();
    match a.figure {
        Figure::Fig1 | Figure::Fig2 => {
            for k in 1..=4 {
                runs.push((k, "eigen", 0.0, vec![ea.clone(); k], vec![eb.clone(); k]));
                let ta = random_tuple(d, k, a.obs_seed, true)?;
                let tb = random_tuple(d, k, a.obs_seed.wrapping_add(k as u64), true)?;
                runs.push((k, "random-traceless", 0.0, ta, tb));
            }
        }
        Figure::Fig3 => {
            for (k, eps) in [(2, 1e-4), (2, 0.0), (3, 1e-5), (3, 0.0)] {
                let mut av = vec![ea.clone(); k];
                av[0] = shifted(&ea, eps)?;
                runs.push((k, "eigen-plus-identity", eps, av, vec![eb.clone(); k]));
            }
        }
    }
    let prov = provenance(cfg, json!({ "gate_hash": gate_hash(&gate), "gate_seed": seed, "d": d, "lambda": lambda }));
    let mut table = Table::new(prov, &["k", "observables", "eps", "t", "value_re", "value_im", "abs", "guide"])?;
    for (k, label, eps, oa, ob) in &runs {
        let s = kotoc_transfer(&gate, oa, ob, *k, t_max)?;
        for (t, v) in s.values.iter().enumerate() {
            // λ^t for k = 1, λ^{kt} on qubits, λ^{2t} otherwise
            let rate = if *k == 1 { 1 } else if d == 2 { *k } else { 2 };
            let guide = lambda.abs().powi((rate * t) as i32);
            table.row(&[k.to_string(), label.to_string(), num(*eps), t.to_string(), num(v.re), num(v.im), num(v.norm()), num(guide)])?;
        }
    }
    table.finish(a.output.out.as_deref())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaled_difference() {
        let x = [C64::new(2.0, 0.0), C64::new(1.0, 0.0)];
        let y = [C64::new(2.0, 0.0), C64::new(1.0, 1e-3)];
        assert!((scaled_diff(&x, &y) - 5e-4).abs() < 1e-15);
        assert_eq!(scaled_diff(&[C64::new(0.0, 0.0)], &[C64::new(0.0, 0.0)]), 0.0);
    }
}
