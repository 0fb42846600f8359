use serde_json::{json, Value};
use std::fs;
use std::path::{Path, PathBuf};

use tripledeck_core::audit::{audit_lemma_bounds, AuditReport, LemmaRecord};
use tripledeck_core::bo::{bo_invariants, bo_soliton};
use tripledeck_core::checkpoint::Checkpoint;
use tripledeck_core::config::{Format, Physics, RunConfig};
use tripledeck_core::ledger::EnergyLedger;
use tripledeck_core::presets::{build_model, prepare, preset_config, Prepared};
use tripledeck_core::reconstruct::{blasius_solve, blasius_solve_with, log_log_slope, reconstruct as reconstruct_decks};
use tripledeck_core::spectral::inverse_transform;
use tripledeck_core::stepper::{run_to_end, Model, RunHooks, RunOutcome, RunState, Termination};
use tripledeck_core::Error;

use crate::RunArgs;

pub const OUTPUT_ENV: &str = "TRIPLEDECK_OUTPUT";

pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_BLOW_UP: u8 = 2;
pub const EXIT_RADIUS: u8 = 3;
pub const EXIT_CORRUPT: u8 = 4;
/// Certified run finished but violated E ≤ 2E₀ or τ ≥ τ₀/2.
pub const EXIT_CERTIFIED_BOUND: u8 = 5;

const CONSTANTS_CAVEAT: &str = "the constants C0, C0~, C1, C2, C1~ of the energy estimates have no known values; \
     this run uses the configured values (default 1), so the certified check validates the selection \
     mechanism rather than sharp constants";
const SCHEME_NOTES: &str = "Fourier in x with 2/3 dealiasing; second-order finite differences in y; \
     Crank-Nicolson for dyy, exact integrating factors for the dispersion and transport symbols, \
     second-order explicit treatment of nonlinear and coupling terms; explicit update of the radius";
const SOLITON_CONVENTION: &str = "A_t + A A_x + dx|dx|A = 0 on the torus; sign = -1 is a depression wave";

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::CorruptCheckpoint(_) => EXIT_CORRUPT,
            Error::BlowUp { .. } => EXIT_BLOW_UP,
            Error::RadiusExhausted { .. } => EXIT_RADIUS,
            _ => EXIT_CONFIG,
        };
        Self { code, message: e.to_string() }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::config(format!("{}: {e}", path.display()))
}

fn output_dir(flag: Option<&PathBuf>, fallback: &Path) -> PathBuf {
    flag.cloned()
        .or_else(|| std::env::var_os(OUTPUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| fallback.to_path_buf())
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| io_failure(path, e))
}

fn write_json(path: &Path, v: &Value) -> Result<(), Failure> {
    write(path, serde_json::to_string_pretty(v).expect("json serializes") + "\n")
}

fn read_checkpoint(path: &Path) -> Result<Checkpoint, Failure> {
    Checkpoint::read(path).map_err(|e| match e {
        Error::Io(io) => io_failure(path, io),
        other => other.into(),
    })
}

fn resolve_config(args: &RunArgs, bo_mode: bool) -> Result<RunConfig, Failure> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(_), Some(_)) => return Err(Failure::config("give either --config or --preset, not both")),
        (Some(path), None) => RunConfig::load(path)?,
        (None, Some(name)) => preset_config(name)?,
        (None, None) if args.certified => preset_config("small-data-certified")?,
        (None, None) if bo_mode => preset_config("bo-soliton")?,
        (None, None) => return Err(Failure::config("a run needs --config, --preset or --certified")),
    };
    if args.certified {
        cfg.stepper.certified = true;
        cfg.stepper.t_end = None;
    }
    if bo_mode {
        cfg.model.physics = Physics::BoOnly;
    }
    cfg.validate()?;
    Ok(cfg)
}

struct Collected {
    outcome: RunOutcome,
    lemma: Vec<(f64, Vec<LemmaRecord>)>,
    checkpoints: Vec<String>,
}

fn checkpoint_name(step: usize) -> String {
    format!("checkpoint_{step:08}.tdk")
}

fn integrate(p: &Prepared, dir: &Path) -> Result<Collected, Failure> {
    let model = &p.model;
    let mut lemma = Vec::new();
    let mut names: Vec<String> = Vec::new();
    let mut save = |rs: &RunState| -> tripledeck_core::Result<()> {
        let name = checkpoint_name(rs.step);
        Checkpoint { state: rs.deck.clone(), tau: rs.tau, delta: model.delta, r: model.r }.write(&dir.join(&name))?;
        if names.last() != Some(&name) {
            lemma.push((rs.t(), audit_lemma_bounds(&rs.deck, rs.tau, model)?));
            names.push(name);
        }
        Ok(())
    };
    let outcome = if p.stepper.n_steps() == 0 {
        run_to_end(p.run.clone(), &p.stepper, model, RunHooks::default())?
    } else {
        save(&p.run)?;
        run_to_end(p.run.clone(), &p.stepper, model, RunHooks { on_checkpoint: Some(&mut save), ..Default::default() })?
    };
    Ok(Collected { outcome, lemma, checkpoints: names })
}

fn certified_check(p: &Prepared, ledger: &EnergyLedger, reason: Termination) -> Option<Value> {
    let sel = p.selection?;
    let tau0 = p.config.model.tau0;
    let e_max = ledger.rows.iter().map(|r| r.e).fold(0.0, f64::max);
    let tau_min = ledger.rows.iter().map(|r| r.tau).fold(f64::INFINITY, f64::min);
    let energy_ok = e_max <= 2.0 * p.e0;
    let radius_ok = tau_min >= tau0 / 2.0;
    Some(json!({
        "e0": p.e0,
        "max_energy": e_max,
        "energy_bound": 2.0 * p.e0,
        "energy_ok": energy_ok,
        "min_tau": tau_min,
        "tau_bound": tau0 / 2.0,
        "tau_ok": radius_ok,
        "t_star": sel.t_star,
        "reached_t_star": reason == Termination::TEnd,
        "pass": energy_ok && radius_ok && reason == Termination::TEnd,
    }))
}

fn soliton_report(p: &Prepared, final_state: &RunState) -> Result<Option<Value>, Failure> {
    let Some(info) = p.soliton else { return Ok(None) };
    let wave = bo_soliton(p.grid(), info.speed, 0.0)?;
    let t = final_state.t();
    let num = inverse_transform(&final_state.deck.a);
    let exact = inverse_transform(&wave.at_time(t));
    let linf = num.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let (i0, i1) = (bo_invariants(&p.run.deck.a), bo_invariants(&final_state.deck.a));
    Ok(Some(json!({
        "t": t,
        "speed": info.speed,
        "sign": info.sign,
        "velocity": info.velocity,
        "traveling_residual": info.residual,
        "linf_error": linf,
        "mean_drift": (i1.mean - i0.mean).abs(),
        "l2_mass_relative_drift": (i1.l2_mass - i0.l2_mass).abs() / i0.l2_mass,
    })))
}

fn write_audit(dir: &Path, formats: &[Format], report: &AuditReport) -> Result<(), Failure> {
    if formats.contains(&Format::Csv) {
        write(&dir.join("audit_identities.csv"), report.identities_csv())?;
        write(&dir.join("audit_lemma.csv"), report.lemma_csv())?;
    }
    if formats.contains(&Format::Json) {
        write_json(&dir.join("audit.json"), &report.summary_json())?;
    }
    Ok(())
}

pub fn run(args: &RunArgs, bo_mode: bool) -> Result<(), Failure> {
    let cfg = resolve_config(args, bo_mode)?;
    let resume = args.resume.as_deref().map(read_checkpoint).transpose()?;
    let p = prepare(&cfg, resume)?;
    let dir = output_dir(args.output.as_ref(), &cfg.output.directory);
    fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
    for note in &p.notes {
        log::info!("{note}");
    }
    log::info!("{} steps of dt = {:e} to t_end = {:e}", p.stepper.n_steps(), p.stepper.dt, p.stepper.t_end);

    let Collected { outcome, lemma, checkpoints } = integrate(&p, &dir)?;
    let ledger = &outcome.ledger;
    ledger.write_csv(&dir.join("ledger.csv"))?;

    let audit = if ledger.len() >= 3 {
        write(&dir.join("ledger_identities.csv"), ledger.identities_to_csv())?;
        let report = AuditReport::from_ledger(ledger, lemma)?;
        write_audit(&dir, &cfg.output.formats, &report)?;
        report.summary_json()
    } else {
        json!({ "skipped": format!("{} ledger rows, identities need 3", ledger.len()) })
    };
    let certified = certified_check(&p, ledger, outcome.reason);
    let soliton = if bo_mode { soliton_report(&p, &outcome.state)? } else { None };
    if let Some(s) = &soliton {
        write_json(&dir.join("soliton.json"), s)?;
    }

    let g = p.grid();
    let manifest = json!({
        "tool": "tripledeck",
        "version": env!("CARGO_PKG_VERSION"),
        "command": if bo_mode { "bo" } else { "run" },
        "config": cfg.to_toml(),
        "resumed_from": args.resume.as_ref().map(|r| r.display().to_string()),
        "parameters": {
            "grid": { "n_modes": g.n_modes(), "lx": g.lx(), "n_y": g.n_y(), "y_max": g.y_max() },
            "dt": p.stepper.dt,
            "n_steps": p.stepper.n_steps(),
            "t_start": p.run.t(),
            "t_end": p.run.t() + p.stepper.t_end,
            "scheme": p.stepper.scheme,
            "sample_every": p.stepper.sample_every,
            "checkpoint_every": p.stepper.checkpoint_every,
            "tau_start": p.run.tau,
            "eps": p.run.deck.eps,
            "delta": p.model.delta,
            "r": p.model.r,
            "e0": if args.resume.is_some() || cfg.initial.file.is_some() { Value::Null } else { json!(p.e0) },
            "constants": cfg.model.constants,
            "physics": cfg.model.physics,
            "freeze_tau": p.model.freeze_tau,
            "selection": p.selection,
        },
        "scheme_notes": SCHEME_NOTES,
        "soliton_convention": SOLITON_CONVENTION,
        "soliton": p.soliton,
        "constants_caveat": CONSTANTS_CAVEAT,
        "termination": outcome.reason,
        "final": { "t": outcome.state.t(), "tau": outcome.state.tau, "step": outcome.state.step },
        "certified_check": certified,
        "audit": audit,
        "checkpoints": checkpoints,
        "notes": p.notes,
    });
    write_json(&dir.join("manifest.json"), &manifest)?;

    let last = ledger.last().map(|r| (r.t, r.e, r.tau));
    if let Some((t, e, tau)) = last {
        println!("t = {t:.6e}  E = {e:.6e}  tau = {tau:.6e}  ({:?})", outcome.reason);
    }
    if let Some(s) = &soliton {
        println!("soliton: Linf error {:.3e}, L2 mass drift {:.3e}", s["linf_error"].as_f64().unwrap_or(f64::NAN), s["l2_mass_relative_drift"].as_f64().unwrap_or(f64::NAN));
    }
    match outcome.reason {
        Termination::BlowUp => return Err(Failure { code: EXIT_BLOW_UP, message: "blow-up detected".into() }),
        Termination::RadiusExhausted => return Err(Failure { code: EXIT_RADIUS, message: "analyticity radius exhausted".into() }),
        _ => {}
    }
    if let Some(c) = certified {
        println!("certified check: max E {} <= {}, min tau {} >= {}: {}", c["max_energy"], c["energy_bound"], c["min_tau"], c["tau_bound"], c["pass"]);
        if c["pass"] != json!(true) {
            return Err(Failure { code: EXIT_CERTIFIED_BOUND, message: "certified bounds violated".into() });
        }
    }
    Ok(())
}

fn manifest_model(manifest: &Value, cfg: &RunConfig) -> Result<(Model, f64), Failure> {
    let params = &manifest["parameters"];
    let num = |key: &str| params[key].as_f64().ok_or_else(|| Failure::config(format!("manifest lacks parameters.{key}")));
    let mut model = build_model(&cfg.model, num("delta")?);
    model.r = num("r")?;
    Ok((model, num("eps")?))
}

pub fn audit(dir: &Path) -> Result<(), Failure> {
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|e| io_failure(&path, e))?;
    let manifest: Value = serde_json::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    let cfg_text = manifest["config"].as_str().ok_or_else(|| Failure::config("manifest lacks the run configuration"))?;
    let cfg = RunConfig::from_toml(cfg_text)?;
    let (model, eps) = manifest_model(&manifest, &cfg)?;

    let ledger_path = dir.join("ledger.csv");
    let ledger_text = fs::read_to_string(&ledger_path).map_err(|e| io_failure(&ledger_path, e))?;
    let mut ledger = EnergyLedger::from_csv(&ledger_text, eps)?;
    let side_path = dir.join("ledger_identities.csv");
    let side = fs::read_to_string(&side_path).map_err(|e| io_failure(&side_path, e))?;
    ledger.attach_identities_csv(&side)?;

    let mut names: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_failure(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("checkpoint_") && n.ends_with(".tdk")))
        .collect();
    names.sort();
    let mut lemma = Vec::with_capacity(names.len());
    for p in &names {
        let c = read_checkpoint(p)?;
        lemma.push((c.state.t, audit_lemma_bounds(&c.state, c.tau, &model)?));
    }
    let report = AuditReport::from_ledger(&ledger, lemma)?;
    write_audit(dir, &cfg.output.formats, &report)?;
    let [a, w, v] = report.max_residuals();
    println!(
        "{} samples, {} checkpoints; max residuals A {a:.3e}, w {w:.3e}, vort {v:.3e}; worst oddness {:.3e} ({})",
        report.a.len(),
        names.len(),
        report.worst_oddness,
        if report.oddness_pass { "pass" } else { "FAIL" }
    );
    Ok(())
}

pub fn blasius(eta_max: f64, step: f64, tol: f64, output: Option<PathBuf>) -> Result<(), Failure> {
    let b = blasius_solve_with(eta_max, tol, step)?;
    println!("f''(0) = {:.12}  displacement = {:.12}", b.fpp0, b.displacement());
    let dir = output_dir(output.as_ref(), Path::new("out"));
    fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
    let mut csv = String::from("eta,f,fp,fpp\n");
    for i in 0..b.eta.len() {
        csv.push_str(&format!("{:.17e},{:.17e},{:.17e},{:.17e}\n", b.eta[i], b.f[i], b.fp[i], b.fpp[i]));
    }
    write(&dir.join("blasius.csv"), csv)?;
    write_json(
        &dir.join("blasius.json"),
        &json!({ "fpp0": b.fpp0, "displacement": b.displacement(), "eta_max": eta_max, "step": step, "tol": tol }),
    )
}

pub fn reconstruct(checkpoint: &Path, nus: &[f64], y_match: f64, output: Option<PathBuf>) -> Result<(), Failure> {
    let c = read_checkpoint(checkpoint)?;
    let b = blasius_solve(10.0, 1e-10)?;
    let comps = nus.iter().map(|&nu| reconstruct_decks(&c.state, &b, nu)).collect::<Result<Vec<_>, _>>()?;
    let dir = output_dir(output.as_ref(), Path::new("out"));
    fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
    let mut rows = Vec::new();
    let mut errs = Vec::new();
    for (nu, comp) in nus.iter().zip(&comps) {
        let name = format!("decks_nu_{nu:e}.csv");
        write(&dir.join(&name), comp.physical_csv(&b))?;
        let err = comp.matching_error(&b, y_match);
        errs.push(err);
        println!("nu = {nu:e}: matching error {err:.4e}, written to {name}");
        rows.push(json!({
            "nu": nu,
            "file": name,
            "matching_error": err,
            "cauchy_riemann_residual": comp.cauchy_riemann_residual,
            "no_slip_defect": comp.lower_no_slip_defect(),
        }));
    }
    let slope = (nus.len() >= 2).then(|| log_log_slope(nus, &errs));
    if let Some(s) = slope {
        println!("matching error slope in nu: {s:.4} (leading-order prediction 0.125)");
    }
    write_json(
        &dir.join("reconstruct.json"),
        &json!({
            "order": "leading order in each deck",
            "t": c.state.t,
            "y_match": y_match,
            "blasius_fpp0": b.fpp0,
            "levels": rows,
            "slope": slope,
        }),
    )
}

pub fn selftest() -> Result<(), Failure> {
    let checks = tripledeck_core::selftest::run_all()?;
    let mut failed = 0;
    for c in &checks {
        println!("[{}] {}: {:.3e} (limit {:.1e})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.limit);
        failed += usize::from(!c.pass);
    }
    if failed > 0 {
        return Err(Failure::config(format!("{failed} of {} checks failed", checks.len())));
    }
    println!("all {} checks passed", checks.len());
    Ok(())
}
