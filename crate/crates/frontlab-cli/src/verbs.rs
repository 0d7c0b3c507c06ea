//! Stand-alone verbs: speed, constants, check, calibrate, diagnose, export,
//! reaction dump.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde_json::json;

use frontlab::diagnostics::*;
use frontlab::pdesim::Snapshot;
use frontlab::reaction::ReactionSpec;
use frontlab::wavesolve::*;
use frontlab::VerdictReport;

use crate::config::{Calibration, ReactionDesc, SchemaError};
use crate::fmt::{g, write_json, Csv};
use crate::pipeline::{constants_for, hypothesis_for, trace_options, write_trace, VerdictsFile};

fn print_json(v: &serde_json::Value) -> Result<()> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{}", serde_json::to_string_pretty(v)?)?;
    Ok(())
}

/// Front speed of the reaction (homogeneous) or of its lower envelope.
pub fn speed(desc: &ReactionDesc, tol: f64, out: Option<&Path>) -> Result<()> {
    let spec = desc.build(0.05).context("reaction")?.spec;
    let (target, prof) = if spec.is_homogeneous() {
        ("reaction", front_speed(&spec, tol)?.1)
    } else {
        let opts = ShootOptions { tol, ..ShootOptions::default() };
        ("lower_envelope", front_speed_with(&*spec.envelope.f0_curve(), spec.lipschitz_k, opts)?)
    };
    let margins = json!({
        "closed_form": desc.closed_form_speed(),
        "closed_form_error": desc.closed_form_speed().map(|c| (prof.speed - c).abs()),
        "bracket_width": prof.bracket.1 - prof.bracket.0,
    });
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        let mut csv = Csv::create(&dir.join("profile.csv"), &["s", "w", "dw"])?;
        for i in 0..prof.s.len() {
            csv.row(&[g(prof.s[i]), g(prof.w[i]), g(prof.dw[i])])?;
        }
        csv.finish()?;
    }
    print_json(&json!({
        "target": target,
        "speed": prof.speed,
        "bracket": [prof.bracket.0, prof.bracket.1],
        "residual_max": prof.residual_max,
        "margins": margins,
    }))
}

pub fn constants(desc: &ReactionDesc) -> Result<()> {
    let spec = desc.build(0.05).context("reaction")?.spec;
    let c0 = envelope_speed(&spec.envelope, spec.lipschitz_k)?;
    let k = constants_for(&spec, c0)?;
    let check = k.verify(&spec.envelope);
    let mut v = serde_json::to_value(&k)?;
    v.as_object_mut().expect("struct").remove("f0_table");
    print_json(&json!({ "constants": v, "verify": check }))
}

/// Hypothesis verdicts; returns the exit status.
pub fn check(desc: &ReactionDesc, which: &str, eta: Option<f64>) -> Result<i32> {
    let spec = desc.build(0.05).context("reaction")?.spec;
    let mut reps: Vec<VerdictReport> = Vec::new();
    let all = which == "all";
    if all || which == "envelope" {
        reps.push(spec.validate(256, 256, 1e-6));
    }
    if all || which == "front" {
        reps.push(hypothesis_for(&spec)?);
    }
    if all || which == "ignition" {
        reps.push(ignition_report(&spec, eta)?);
    }
    if reps.is_empty() {
        bail!("unknown check `{which}` (expected envelope, front, ignition or all)");
    }
    let file = VerdictsFile::new(&spec.name, reps);
    print_json(&serde_json::to_value(&file)?)?;
    Ok(file.exit_status())
}

fn ignition_report(spec: &ReactionSpec, eta: Option<f64>) -> Result<VerdictReport> {
    let c0 = envelope_speed(&spec.envelope, spec.lipschitz_k)?;
    let zeta = 0.125 * c0 * c0;
    let eta = match eta {
        Some(e) => e,
        None => best_eta(spec, zeta, IgnitionCheckOptions::default())?,
    };
    if !(eta > 0.0) {
        let mut rep = VerdictReport::new("ignition_hypothesis");
        rep.fail_at(0.0, eta, "no positive eta found".into());
        return Ok(rep.finish());
    }
    Ok(check_ignition_hypothesis(spec, zeta, eta)?)
}

/// Calibration of the spatial or temporal terrace reaction; returns the exit status.
pub fn calibrate(which: &str, dx: f64, reaction_cfl: f64, out: &Path) -> Result<i32> {
    std::fs::create_dir_all(out)?;
    let desc = match which {
        "spatial" => ReactionDesc::SpatialCounterexample { base_a: 0.25, theta0: 0.25, delta: None, a: None, k: None },
        "temporal" => ReactionDesc::TemporalCounterexample { delta: None, k: None, reaction_cfl },
        other => bail!("unknown calibration `{other}` (expected spatial or temporal)"),
    };
    let built = desc.build(dx).context("calibration")?;
    let cal = built.calibration.expect("calibrated constructor");
    write_json(&out.join("calibration.json"), &cal)?;
    let status = VerdictsFile::new(which, cal.verdicts().to_vec()).exit_status();
    let summary = match &cal {
        Calibration::Spatial(c) => json!({ "M": c.period, "delta": c.delta, "kappa": c.kappa, "a": c.a, "K": c.k }),
        Calibration::Temporal(c) => json!({ "M": c.m, "a": c.a, "K": c.k, "delta": c.delta }),
    };
    print_json(&json!({ "calibration": which, "constants": summary, "pass": status == 0 }))?;
    Ok(status)
}

/// Reads a long-format snapshots.csv back into snapshots.
pub fn read_snapshots(path: &Path) -> Result<Vec<Snapshot>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| anyhow!("{}: empty file", path.display()))?;
    if header.trim() != "t,x,u" {
        bail!("{}: expected header t,x,u, found {header}", path.display());
    }
    let mut snaps: Vec<(f64, Vec<f64>, Vec<f64>)> = Vec::new();
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| anyhow!("line {}: {e}", i + 2));
        let [t, x, u] = cells[..] else { bail!("line {}: expected three cells", i + 2) };
        let (t, x, u) = (parse(t)?, parse(x)?, parse(u)?);
        match snaps.last_mut() {
            Some((tl, xs, us)) if *tl == t => {
                xs.push(x);
                us.push(u);
            }
            _ => snaps.push((t, vec![x], vec![u])),
        }
    }
    snaps
        .into_iter()
        .map(|(t, x, u)| {
            if x.len() < 2 {
                bail!("snapshot at t = {t} has fewer than two nodes");
            }
            let dx = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
            Ok(Snapshot { t, x0: x[0], dx, u })
        })
        .collect()
}

/// Trace and verdicts for snapshots produced elsewhere; returns the exit status.
pub fn diagnose(desc: &ReactionDesc, snapshots: &Path, eps: Option<Vec<f64>>, out: &Path) -> Result<i32> {
    std::fs::create_dir_all(out)?;
    let snaps = read_snapshots(snapshots)?;
    let spec = desc.build(snaps[0].dx).context("reaction")?.spec;
    let c0 = envelope_speed(&spec.envelope, spec.lipschitz_k).ok();
    let k = c0.and_then(|c| constants_for(&spec, c).ok());
    let eps = eps.unwrap_or_else(|| k.as_ref().map_or(vec![0.1, 0.01], |k| default_eps_list(k.epsilon0)));
    let tr = trace_interfaces_with(&snaps, &trace_options(&spec, k.as_ref(), c0, eps, false));
    write_trace(&out.join("trace.csv"), &tr)?;
    let mut reps = vec![y_minus_x_bounded(&tr, 1e-6)];
    if let Some(k) = &k {
        for &e in &tr.eps {
            // Too short a run leaves the bound undetermined, not violated.
            match width_bound(&tr, k.c_xi, e) {
                Ok((_, rep)) => reps.push(rep),
                Err(err) => eprintln!("width bound at eps = {} skipped: {err}", g(e)),
            }
        }
    }
    let file = VerdictsFile::new(&spec.name, reps);
    write_json(&out.join("verdicts.json"), &file)?;
    Ok(file.exit_status())
}

/// Side CSVs included verbatim in the report, in order.
const REPORT_CSVS: &[(&str, &str)] = &[
    ("shift.csv", "Shift-convergence curve (t, optimal time shift, sup-norm)"),
    ("width_bound.csv", "Interface width bound per eps"),
    ("block_gain.csv", "Width at period checkpoints"),
    ("ergodic.csv", "Per-seed speed table"),
];

/// Single-file summary of an artifact directory.
pub fn export(dir: &Path, out: Option<&Path>) -> Result<std::path::PathBuf> {
    for needed in ["verdicts.json", "meta.json"] {
        if !dir.join(needed).is_file() {
            return Err(SchemaError(format!("missing artifact {}; run the scenario first", dir.join(needed).display())).into());
        }
    }
    let verdicts = VerdictsFile::read(&dir.join("verdicts.json"))?;
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("meta.json"))?)?;
    let mut r = String::new();
    r += &format!("# {}\n\n", verdicts.scenario);
    if let Some(claim) = meta["claim"].as_str() {
        r += &format!("{claim}\n\n");
    }
    r += &format!("Overall: {}\n\n", if verdicts.pass { "PASS" } else { "FAIL" });
    r += "## Verdicts\n\n| verdict | result | margin | first witness |\n|---|---|---|---|\n";
    for v in &verdicts.verdicts {
        let w = v.witnesses.first().map_or(String::new(), |w| format!("({}, {}) {}", g(w.coordinate), g(w.value), w.note));
        r += &format!("| {} | {} | {} | {} |\n", v.name, if v.pass { "PASS" } else { "FAIL" }, g(v.margin), w);
    }
    if let Some(h) = meta.get("hypothesis").filter(|h| !h.is_null()) {
        r += &format!(
            "\n## Hypothesis margin\n\n{}: {} (margin {})\n",
            h["name"].as_str().unwrap_or("hypothesis"),
            if h["pass"].as_bool() == Some(true) { "holds" } else { "fails" },
            h["margin"].as_f64().map_or("n/a".into(), g)
        );
    }
    let mut facts = BTreeMap::new();
    for key in ["c0", "dt", "wall_seconds", "frontlab_version"] {
        if !meta[key].is_null() {
            facts.insert(key, meta[key].to_string());
        }
    }
    r += "\n## Run\n\n";
    for (k, v) in facts {
        r += &format!("- {k}: {v}\n");
    }
    for (file, title) in REPORT_CSVS {
        let path = dir.join(file);
        if let Ok(text) = std::fs::read_to_string(&path) {
            r += &format!("\n## {title}\n\nSource: {file}\n\n```csv\n{text}```\n");
        }
    }
    let target = out.map_or_else(|| dir.join("report.md"), Path::to_path_buf);
    std::fs::write(&target, r).with_context(|| format!("writing {}", target.display()))?;
    Ok(target)
}

/// `(coordinate, u, f)` triples.
pub fn dump(desc: &ReactionDesc, n_coord: usize, n_u: usize, out: Option<&Path>) -> Result<()> {
    let spec = desc.build(0.05).context("reaction")?.spec;
    let coords = spec.sample_coords(n_coord);
    let n_u = n_u.max(2);
    let mut rows = String::from("coordinate,u,f\n");
    for &z in &coords {
        for i in 0..n_u {
            let u = i as f64 / (n_u - 1) as f64;
            rows += &format!("{},{},{}\n", g(z), g(u), g(spec.eval(z, u)));
        }
    }
    match out {
        Some(p) => std::fs::write(p, rows).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().lock().write_all(rows.as_bytes())?,
    }
    Ok(())
}
