//! Command bodies. Output assembly is single-threaded and ordered, so equal
//! configurations produce byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::{parse_mode, parse_test_function, CommandKind, ConfigError, IdentityKind, RunConfig};
use super::{EXIT_FAILURE, EXIT_OK, EXIT_USAGE};
use crate::asymptotics::{fit_exponent, scan_family, verify_bounds, Band, BoundReport, Column, ExponentFit, Family, ScanTable};
use crate::identities::{
    check_abs_pair_symmetry, check_coarea, check_level_corollary, check_level_identity, check_localized_identity,
    check_multiplicity_orthogonality, check_nodal_identity, check_pair_identity, check_weighted_identity,
    IdentityReport,
};
use crate::levelset::{export, extract, hausdorff_measure};
use crate::Error;

/// Why a command stopped early.
enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NonFinite(_) | Error::LengthMismatch { .. } => Failure::Numerical(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

fn io_fail(path: &Path, e: std::io::Error) -> Failure {
    Failure::Numerical(format!("cannot write {}: {e}", path.display()))
}

pub(super) fn execute(cfg: &RunConfig) -> i32 {
    let result = match cfg.command {
        CommandKind::Verify => verify(cfg),
        CommandKind::Scan => scan(cfg),
        CommandKind::Extract => extract_cmd(cfg),
        CommandKind::Report => report(cfg),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            EXIT_FAILURE
        }
    }
}

fn environment() -> Value {
    json!({ "version": env!("CARGO_PKG_VERSION") })
}

/// The top-level output document.
fn document(cfg: &RunConfig, reports: Value, tables: Value, fits: Value) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("config".into(), cfg.to_json());
    m.insert("reports".into(), reports);
    m.insert("tables".into(), tables);
    m.insert("fits".into(), fits);
    m.insert("environment".into(), environment());
    m
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf, Failure> {
    let dir = PathBuf::from(&cfg.out);
    fs::create_dir_all(&dir).map_err(|e| io_fail(&dir, e))?;
    Ok(dir)
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| io_fail(path, e))
}

fn write_json(path: &Path, v: &Value) -> Result<(), Failure> {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    write_file(path, &s)
}

fn run_identity(cfg: &RunConfig, id: IdentityKind) -> Result<Vec<IdentityReport>, Failure> {
    let check = cfg.check_config()?;
    let mode = parse_mode(&cfg.mode)?;
    let m = cfg.manifold()?;
    let pair = || -> Result<_, Failure> { Ok((parse_mode(&cfg.mode_j)?, parse_mode(&cfg.mode_k)?)) };
    Ok(match id {
        IdentityKind::Nodal => vec![check_nodal_identity(&mode, &check)?],
        IdentityKind::Weighted => {
            let f = parse_test_function(&cfg.test_function, m)?;
            vec![check_weighted_identity(&mode, &f, &check)?]
        }
        IdentityKind::Level => {
            let f = parse_test_function(&cfg.test_function, m)?;
            cfg.levels
                .iter()
                .map(|c| check_level_identity(&mode, *c, &f, &check))
                .collect::<crate::Result<_>>()?
        }
        IdentityKind::Corollary => cfg
            .levels
            .iter()
            .map(|c| check_level_corollary(&mode, *c, &check))
            .collect::<crate::Result<_>>()?,
        IdentityKind::Coarea => vec![check_coarea(&mode, cfg.n_levels, &check)?],
        IdentityKind::Pair => {
            let (j, k) = pair()?;
            vec![check_pair_identity(&j, &k, &check)?]
        }
        IdentityKind::Curious => {
            let (j, k) = pair()?;
            vec![check_multiplicity_orthogonality(&j, &k, &check)?]
        }
        IdentityKind::Abspair => {
            let (j, k) = pair()?;
            vec![check_abs_pair_symmetry(&j, &k, &check)?]
        }
        IdentityKind::Localized => {
            let (center, radius) = cfg.bump()?;
            vec![check_localized_identity(&mode, center, radius, &check)?]
        }
    })
}

fn reports_csv(reports: &[IdentityReport]) -> Result<String, Failure> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let fail = |e: csv::Error| Failure::Numerical(format!("csv: {e}"));
    w.write_record([
        "identity_name",
        "lhs",
        "rhs",
        "abs_residual",
        "rel_residual",
        "scaled_residual",
        "resolution",
        "tolerance",
        "passed",
    ])
    .map_err(fail)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in reports {
        w.write_record([
            r.identity_name.clone(),
            r.lhs.to_string(),
            r.rhs.to_string(),
            r.abs_residual.to_string(),
            r.rel_residual.to_string(),
            opt(r.scaled_residual),
            r.resolution.to_string(),
            opt(r.tolerance),
            r.passed.map(|p| p.to_string()).unwrap_or_default(),
        ])
        .map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Numerical(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn verify(cfg: &RunConfig) -> Result<i32, Failure> {
    let mut reports = Vec::new();
    for id in &cfg.identities {
        let tol = cfg.tolerance(*id);
        reports.extend(run_identity(cfg, *id)?.into_iter().map(|r| r.judge(tol)));
    }
    let dir = out_dir(cfg)?;
    if cfg.formats.json {
        let doc = document(cfg, serde_json::to_value(&reports).expect("reports serialize"), json!([]), json!([]));
        write_json(&dir.join("verify.json"), &Value::Object(doc))?;
    }
    if cfg.formats.csv {
        write_file(&dir.join("verify.csv"), &reports_csv(&reports)?)?;
    }
    let mut failed = 0;
    for r in &reports {
        let ok = r.passed == Some(true);
        println!(
            "{} {} residual={:.3e} tol={:.1e} lhs={:.12e} rhs={:.12e}",
            if ok { "PASS" } else { "FAIL" },
            r.identity_name,
            r.judged_residual(),
            r.tolerance.unwrap_or(f64::NAN),
            r.lhs,
            r.rhs
        );
        if !ok {
            failed += 1;
            eprintln!(
                "failed: {} ({}) residual {:e} ≥ tolerance {:e}",
                r.identity_name,
                r.metadata.get("mode").and_then(Value::as_str).unwrap_or("-"),
                r.judged_residual(),
                r.tolerance.unwrap_or(f64::NAN)
            );
        }
    }
    Ok(if failed == 0 { EXIT_OK } else { EXIT_FAILURE })
}

/// A fitted column with its optional acceptance band.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitEntry {
    pub family: Family,
    #[serde(flatten)]
    pub fit: ExponentFit,
    pub band: Option<Band>,
    /// Slope, or relative variation for a constancy band.
    pub observed: Option<f64>,
    pub passed: Option<bool>,
}

#[derive(Serialize)]
struct TableEntry<'a> {
    #[serde(flatten)]
    table: &'a ScanTable,
    bounds: &'a BoundReport,
}

fn scan(cfg: &RunConfig) -> Result<i32, Failure> {
    let table = scan_family(cfg.family, &cfg.range.indices(), &cfg.scan_config())?;
    let bounds = verify_bounds(&table, table.manifold())?;
    let mut fits = Vec::new();
    for spec in &cfg.fits {
        let entry = match spec.band {
            Some(band) => {
                let c = band.check(&table, spec.x, spec.y)?;
                FitEntry { family: table.family, fit: c.fit, band: Some(band), observed: Some(c.observed), passed: Some(c.passed) }
            }
            None => FitEntry {
                family: table.family,
                fit: fit_exponent(&table, spec.x, spec.y)?,
                band: None,
                observed: None,
                passed: None,
            },
        };
        fits.push(entry);
    }
    let dir = out_dir(cfg)?;
    if cfg.formats.csv {
        write_file(&dir.join(format!("scan_{}.csv", table.family.name())), &table.to_csv()?)?;
    }
    if cfg.formats.json {
        let tables = serde_json::to_value([TableEntry { table: &table, bounds: &bounds }]).expect("tables serialize");
        let doc = document(cfg, json!([]), tables, serde_json::to_value(&fits).expect("fits serialize"));
        write_json(&dir.join(format!("scan_{}.json", table.family.name())), &Value::Object(doc))?;
    }
    let mut failed = 0;
    for f in &fits {
        let verdict = match f.passed {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "INFO",
        };
        println!(
            "{verdict} {} {}~{} slope={:.4} stderr={:.2e} r2={:.6}{}",
            f.family,
            f.fit.y,
            f.fit.x,
            f.fit.slope,
            f.fit.stderr,
            f.fit.r_squared,
            match (f.band, f.observed) {
                (Some(Band::Constant { max_variation }), Some(o)) => format!(" variation={o:.3e} max={max_variation}"),
                (Some(Band::Slope { target, tol }), _) => format!(" band={target}±{tol}"),
                _ => String::new(),
            }
        );
        if f.passed == Some(false) {
            failed += 1;
            eprintln!("failed: {} {} vs {} outside its band", f.family, f.fit.y, f.fit.x);
        }
    }
    for r in &bounds.ratios {
        println!(
            "{} bound {} min={:.4e} max={:.4e} variation={:.3e}",
            if r.passed { "PASS" } else { "WARN" },
            r.name,
            r.min,
            r.max,
            r.variation
        );
    }
    let flagged = table.records.iter().filter(|r| r.flagged).count();
    if flagged > 0 {
        eprintln!("note: {flagged} row(s) used an ambiguity fallback");
    }
    Ok(if failed == 0 { EXIT_OK } else { EXIT_FAILURE })
}

fn extract_cmd(cfg: &RunConfig) -> Result<i32, Failure> {
    let mode = parse_mode(&cfg.mode)?;
    let ex = cfg.extraction(cfg.resolution);
    let dir = out_dir(cfg)?;
    let mut meshes = Vec::new();
    for (i, c) in cfg.levels.iter().enumerate() {
        let mesh = extract(&mode, *c, &ex)?;
        let stem = format!("mesh_{i}");
        if cfg.formats.mesh {
            write_file(&dir.join(format!("{stem}.txt")), &export::to_text(&mesh))?;
            write_json(&dir.join(format!("{stem}.json")), &export::to_json(&mesh))?;
        }
        let measure = hausdorff_measure(&mesh);
        println!(
            "level c={c} measure={measure:.12e} vertices={} elements={} fallbacks={}",
            mesh.vertices.len(),
            mesh.n_elements(),
            mesh.stats.decider_fallbacks
        );
        meshes.push(json!({
            "file": stem,
            "mode": mode.label(),
            "level": c,
            "measure": measure,
            "vertex_count": mesh.vertices.len(),
            "element_count": mesh.n_elements(),
            "ambiguous_cells": mesh.stats.ambiguous_cells,
            "ambiguity_fallbacks": mesh.stats.decider_fallbacks,
            "pole_cap_colatitude": mesh.stats.pole_ring_colatitude,
        }));
    }
    if cfg.formats.json {
        let mut doc = document(cfg, json!([]), json!([]), json!([]));
        doc.insert("meshes".into(), Value::Array(meshes));
        write_json(&dir.join("extract.json"), &Value::Object(doc))?;
    }
    Ok(EXIT_OK)
}

/// Name of the merged document; excluded from its own inputs.
pub const SUMMARY_FILE: &str = "summary.json";

fn is_output_document(v: &Value) -> bool {
    v.get("config").is_some_and(Value::is_object) && v.get("environment").is_some() && v.get("sources").is_none()
}

fn as_array(v: Option<&Value>) -> Vec<Value> {
    v.and_then(Value::as_array).cloned().unwrap_or_default()
}

fn report(cfg: &RunConfig) -> Result<i32, Failure> {
    let input = PathBuf::from(&cfg.input);
    let entries = fs::read_dir(&input).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", input.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json") && p.file_name().is_some_and(|n| n != SUMMARY_FILE))
        .collect();
    files.sort();
    let mut docs = Vec::new();
    for path in files {
        let Ok(text) = fs::read_to_string(&path) else { continue };
        let Ok(v) = serde_json::from_str::<Value>(&text) else { continue };
        if is_output_document(&v) {
            let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            docs.push((name, v));
        }
    }
    if docs.is_empty() {
        eprintln!("error: no reports found in {}", input.display());
        return Ok(EXIT_USAGE);
    }

    let (mut reports, mut tables, mut fits, mut summary, mut sources) = (vec![], vec![], vec![], vec![], vec![]);
    let dir = out_dir(cfg)?;
    let mut failed = 0;
    for (source, doc) in &docs {
        sources.push(json!(source));
        let command = doc["config"].get("command").and_then(Value::as_str).unwrap_or("unknown").to_string();
        for r in as_array(doc.get("reports")) {
            let passed = r.get("passed").and_then(Value::as_bool);
            failed += usize::from(passed == Some(false));
            summary.push(json!({
                "source": source,
                "section": command,
                "name": r.get("identity_name").cloned().unwrap_or(Value::Null),
                "passed": passed,
            }));
            reports.push(r);
        }
        let doc_tables = as_array(doc.get("tables"));
        for f in as_array(doc.get("fits")) {
            let passed = f.get("passed").and_then(Value::as_bool);
            failed += usize::from(passed == Some(false));
            let entry: Option<FitEntry> = serde_json::from_value(f.clone()).ok();
            if let Some(e) = &entry {
                summary.push(json!({
                    "source": source,
                    "section": command,
                    "name": format!("{} {}~{}", e.family, e.fit.y, e.fit.x),
                    "passed": passed,
                }));
                write_fit_data(&dir, e, &doc_tables)?;
            }
            fits.push(f);
        }
        tables.extend(doc_tables);
    }
    let mut doc = document(cfg, Value::Array(reports), Value::Array(tables), Value::Array(fits));
    doc.insert("sources".into(), Value::Array(sources));
    doc.insert("summary".into(), Value::Array(summary.clone()));
    if cfg.formats.json {
        write_json(&dir.join(SUMMARY_FILE), &Value::Object(doc))?;
    }
    for s in &summary {
        let verdict = match s["passed"].as_bool() {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "INFO",
        };
        println!("{verdict} {} {} ({})", s["section"].as_str().unwrap_or("-"), s["name"].as_str().unwrap_or("-"), s["source"].as_str().unwrap_or("-"));
    }
    Ok(if failed == 0 { EXIT_OK } else { EXIT_FAILURE })
}

/// Two-column `(ln x, ln y)` file for one fit, from the matching table.
fn write_fit_data(dir: &Path, fit: &FitEntry, tables: &[Value]) -> Result<(), Failure> {
    let (Ok(x), Ok(y)) = (Column::parse(&fit.fit.x), Column::parse(&fit.fit.y)) else {
        return Ok(());
    };
    let Some(table) = tables
        .iter()
        .filter_map(|t| serde_json::from_value::<ScanTable>(t.clone()).ok())
        .find(|t| t.family == fit.family)
    else {
        return Ok(());
    };
    let mut text = format!("# family={} x=ln({}) y=ln({})\n", fit.family, fit.fit.x, fit.fit.y);
    for r in &table.records {
        if let (Some(a), Some(b)) = (x.value(r), y.value(r)) {
            if a > 0.0 && b > 0.0 {
                text.push_str(&format!("{:.16e} {:.16e}\n", a.ln(), b.ln()));
            }
        }
    }
    write_file(&dir.join(format!("{}_{}_vs_{}.dat", fit.family, fit.fit.y, fit.fit.x)), &text)
}
