//! The five subcommands. Each returns its rendered report and an exit code.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use tvbound::basis::BasisKind;
use tvbound::certificate::{gaussian_comparison, verify_certificate, ComparisonBounds, DualCertificate};
use tvbound::extraction::recover_hahn_jordan;
use tvbound::measures::{self, exact_tv_atomic, AtomicMeasure, MeasureSpec};
use tvbound::quadrature::{exact_tv_univariate_density, QuadratureSettings};
use tvbound::relaxation::{assemble_with, solve_problem};
use tvbound::solver::dump::write_program;
use tvbound::{HierarchyResult, TvError};

use crate::config::{ConfigError, Format, RunConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_SOLVER: u8 = 2;
pub const EXIT_CONFIG: u8 = 3;

/// Certified values may exceed `ρ_n` by at most this much.
const WEAK_DUALITY_SLACK: f64 = 1e-6;

pub struct Outcome {
    pub report: String,
    pub code: u8,
}

#[derive(Debug)]
pub enum CommandError {
    Config(ConfigError),
    Io(String),
}

impl From<ConfigError> for CommandError {
    fn from(e: ConfigError) -> Self {
        CommandError::Config(e)
    }
}

impl From<TvError> for CommandError {
    fn from(e: TvError) -> Self {
        CommandError::Config(e.into())
    }
}

impl std::fmt::Display for CommandError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CommandError::Config(e) => write!(f, "config error: {e}"),
            CommandError::Io(e) => write!(f, "{e}"),
        }
    }
}

type CmdResult = Result<Outcome, CommandError>;

fn csv_table<R: AsRef<[String]>>(header: &[&str], rows: &[R]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r.as_ref()).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

fn pretty_table<R: AsRef<[String]>>(header: &[&str], rows: &[R]) -> String {
    let mut width: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, cell) in width.iter_mut().zip(r.as_ref()) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let line = |cells: Vec<&str>, out: &mut String| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&width)
            .map(|(c, &w)| format!("{c:>w$}"))
            .collect();
        out.push_str(padded.join("  ").trim_end());
        out.push('\n');
    };
    line(header.to_vec(), &mut out);
    let rule: Vec<String> = width.iter().map(|&w| "-".repeat(w)).collect();
    line(rule.iter().map(String::as_str).collect(), &mut out);
    for r in rows {
        line(r.as_ref().iter().map(String::as_str).collect(), &mut out);
    }
    out
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn opt(v: Option<f64>, f: impl Fn(f64) -> String) -> String {
    v.map(f).unwrap_or_default()
}

fn fixed(v: f64) -> String {
    let s = format!("{v:.10}");
    // No "-0.0000000000" for values that round to zero.
    match s.strip_prefix('-') {
        Some(rest) if rest.bytes().all(|b| b == b'0' || b == b'.') => rest.to_string(),
        _ => s,
    }
}

#[derive(Serialize)]
struct LevelsReport<'a, T> {
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    rank_tol: Option<f64>,
    levels: &'a [T],
}

fn sci(v: f64) -> String {
    format!("{v:.3e}")
}

fn comparison(cfg: &RunConfig, mu: &MeasureSpec, nu: &MeasureSpec) -> Option<ComparisonBounds> {
    gaussian_comparison(mu, nu).map(|c| ComparisonBounds {
        nishiyama: cfg.distance(c.nishiyama),
        pinsker_upper: cfg.distance(c.pinsker_upper),
        hellinger_lower: cfg.distance(c.hellinger_lower),
        hellinger_upper: cfg.distance(c.hellinger_upper),
    })
}

// ---------------------------------------------------------------- bound

#[derive(Serialize)]
struct BoundRow {
    n: usize,
    rho_n: Option<f64>,
    dual_value: Option<f64>,
    gap: Option<f64>,
    status: String,
    trusted: bool,
    primal_residual: Option<f64>,
    dual_residual: Option<f64>,
    iterations: Option<usize>,
    wall_ms: Option<f64>,
}

#[derive(Serialize)]
struct BoundReport<'a> {
    command: &'static str,
    levels: &'a [BoundRow],
    monotone: bool,
    normalized: bool,
    seed: u64,
    comparison: Option<ComparisonBounds>,
}

pub struct BoundOptions<'a> {
    pub timing: bool,
    pub dump_dir: Option<&'a Path>,
}

pub fn bound(cfg: &RunConfig, opts: &BoundOptions) -> CmdResult {
    let nu = cfg.nu()?;
    let mu = &cfg.mu;
    if let Some(dir) = opts.dump_dir {
        std::fs::create_dir_all(dir).map_err(|e| CommandError::Io(format!("cannot create {}: {e}", dir.display())))?;
    }
    let levels: Vec<usize> = cfg.levels.range().collect();
    let solved: Vec<Result<(BoundRow, u8), CommandError>> = levels
        .par_iter()
        .map(|&n| {
            let start = Instant::now();
            let problem = assemble_with(mu, nu, n, cfg.relaxation.scale)?;
            if let Some(dir) = opts.dump_dir {
                let path = dir.join(format!("level-{n}.sdp"));
                std::fs::write(&path, write_program(&problem.program))
                    .map_err(|e| CommandError::Io(format!("cannot write {}: {e}", path.display())))?;
            }
            let outcome = solve_problem(&problem, &cfg.relaxation.solver);
            let wall_ms = opts.timing.then(|| start.elapsed().as_secs_f64() * 1e3);
            match outcome {
                Ok((h, _)) => Ok((
                    BoundRow {
                        n,
                        rho_n: Some(cfg.distance(h.rho_n)),
                        dual_value: Some(cfg.distance(h.dual_value)),
                        gap: Some(h.gap),
                        status: h.status.to_string(),
                        trusted: true,
                        primal_residual: Some(h.primal_residual),
                        dual_residual: Some(h.dual_residual),
                        iterations: Some(h.iterations),
                        wall_ms,
                    },
                    EXIT_OK,
                )),
                Err(TvError::SolverFailure {
                    status, last_objective, ..
                }) => Ok((
                    BoundRow {
                        n,
                        rho_n: last_objective.map(|v| cfg.distance(v)),
                        dual_value: None,
                        gap: None,
                        status: format!("untrusted:{status}"),
                        trusted: false,
                        primal_residual: None,
                        dual_residual: None,
                        iterations: None,
                        wall_ms,
                    },
                    EXIT_SOLVER,
                )),
                Err(e) => Err(e.into()),
            }
        })
        .collect();
    let mut rows = Vec::with_capacity(solved.len());
    let mut code = EXIT_OK;
    for r in solved {
        let (row, c) = r?;
        code = code.max(c);
        rows.push(row);
    }
    let ok: Vec<f64> = rows.iter().filter(|r| r.trusted).filter_map(|r| r.rho_n).collect();
    let slack = 2.0 * cfg.relaxation.solver.tol;
    let monotone = ok.windows(2).all(|w| w[1] >= w[0] - slack);
    let comparison = comparison(cfg, mu, nu);

    let header = ["n", "rho_n", "dual_value", "gap", "status", "wall_ms"];
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                opt(r.rho_n, fixed),
                opt(r.dual_value, fixed),
                opt(r.gap, sci),
                r.status.clone(),
                opt(r.wall_ms, |v| format!("{v:.3}")),
            ]
        })
        .collect();
    let report = match cfg.format {
        Format::Csv => csv_table(&header, &cells),
        Format::Json => json(&BoundReport {
            command: "bound",
            levels: &rows,
            monotone,
            normalized: cfg.normalized,
            seed: cfg.seed,
            comparison,
        }),
        Format::Pretty => {
            let mut s = pretty_table(&header, &cells);
            for r in &rows {
                if let (Some(p), Some(d), Some(it)) = (r.primal_residual, r.dual_residual, r.iterations) {
                    let _ = writeln!(s, "n={}: primal residual {p:.2e}, dual residual {d:.2e}, {it} iterations", r.n);
                }
            }
            let _ = writeln!(s, "monotone: {}", if monotone { "yes" } else { "no" });
            if let Some(c) = comparison {
                let _ = writeln!(
                    s,
                    "closed form: nishiyama {:.6}, hellinger [{:.6}, {:.6}], pinsker upper {:.6}",
                    c.nishiyama, c.hellinger_lower, c.hellinger_upper, c.pinsker_upper
                );
            }
            s
        }
    };
    Ok(Outcome { report, code })
}

// ---------------------------------------------------------------- exact

#[derive(Serialize)]
struct ExactReport {
    command: &'static str,
    tv: f64,
    method: &'static str,
    normalized: bool,
    comparison: Option<ComparisonBounds>,
}

fn mass(spec: &MeasureSpec) -> Result<f64, CommandError> {
    Ok(measures::moments(spec, 1, 0)?.mass())
}

fn exact_value(mu: &MeasureSpec, nu: &MeasureSpec) -> Result<(f64, &'static str), CommandError> {
    match (mu.as_atomic(), nu.as_atomic()) {
        (Some(a), Some(b)) => return Ok((exact_tv_atomic(&a, &b), "atomic")),
        // An atomic measure and a density are mutually singular.
        (Some(a), None) if nu.has_density() => return Ok((a.mass() + mass(nu)?, "singular")),
        (None, Some(b)) if mu.has_density() => return Ok((mass(mu)? + b.mass(), "singular")),
        _ => {}
    }
    if mu.has_density() && nu.has_density() {
        let tv = exact_tv_univariate_density(mu, nu, &QuadratureSettings::default())?;
        return Ok((tv, "quadrature"));
    }
    Err(ConfigError("no exact oracle: both measures must be atomic or univariate densities".into()).into())
}

pub fn exact(cfg: &RunConfig) -> CmdResult {
    let nu = cfg.nu()?;
    let (tv, method) = exact_value(&cfg.mu, nu)?;
    let tv = cfg.distance(tv);
    let comparison = comparison(cfg, &cfg.mu, nu);
    let report = match cfg.format {
        Format::Csv => csv_table(&["tv", "method"], &[vec![fixed(tv), method.to_string()]]),
        Format::Json => json(&ExactReport {
            command: "exact",
            tv,
            method,
            normalized: cfg.normalized,
            comparison,
        }),
        Format::Pretty => {
            let mut s = format!("total variation: {tv:.10} ({method})\n");
            if let Some(c) = comparison {
                let _ = writeln!(
                    s,
                    "closed form: nishiyama {:.6}, hellinger [{:.6}, {:.6}], pinsker upper {:.6}",
                    c.nishiyama, c.hellinger_lower, c.hellinger_upper, c.pinsker_upper
                );
            }
            s
        }
    };
    Ok(Outcome { report, code: EXIT_OK })
}

// ---------------------------------------------------------------- extract

#[derive(Serialize)]
struct AtomOut {
    point: f64,
    weight: f64,
}

#[derive(Serialize)]
struct ExtractLevel {
    n: usize,
    rho_n: Option<f64>,
    status: String,
    phi: Vec<AtomOut>,
    psi: Vec<AtomOut>,
}

fn atoms_out(a: &AtomicMeasure) -> Vec<AtomOut> {
    a.atoms
        .iter()
        .map(|x| AtomOut {
            point: x.point[0],
            weight: x.weight,
        })
        .collect()
}

pub fn extract(cfg: &RunConfig) -> CmdResult {
    let nu = cfg.nu()?;
    if cfg.mu.dim() != 1 {
        return Err(ConfigError(format!("atom extraction is univariate only (dimension {})", cfg.mu.dim())).into());
    }
    let levels: Vec<usize> = cfg.levels.range().collect();
    let solved: Vec<(usize, tvbound::Result<HierarchyResult>)> = levels
        .par_iter()
        .map(|&n| (n, tvbound::solve_level(&cfg.mu, nu, n, &cfg.relaxation)))
        .collect();
    let mut out = Vec::new();
    let mut code = EXIT_OK;
    for (n, r) in solved {
        let level = match r {
            Ok(h) => match recover_hahn_jordan(&h, cfg.rank_tol) {
                Ok((phi, psi)) => ExtractLevel {
                    n,
                    rho_n: Some(cfg.distance(h.rho_n)),
                    status: "flat".into(),
                    phi: atoms_out(&phi),
                    psi: atoms_out(&psi),
                },
                Err(e) => ExtractLevel {
                    n,
                    rho_n: Some(cfg.distance(h.rho_n)),
                    status: match e {
                        TvError::NotFlat { ranks } => format!("not-flat ranks {ranks:?}"),
                        other => other.to_string(),
                    },
                    phi: Vec::new(),
                    psi: Vec::new(),
                },
            },
            Err(TvError::SolverFailure { status, .. }) => {
                code = EXIT_SOLVER;
                ExtractLevel {
                    n,
                    rho_n: None,
                    status: format!("untrusted:{status}"),
                    phi: Vec::new(),
                    psi: Vec::new(),
                }
            }
            Err(e) => return Err(e.into()),
        };
        out.push(level);
    }
    let header = ["n", "part", "point", "weight", "status"];
    let mut cells: Vec<Vec<String>> = Vec::new();
    for l in &out {
        if l.phi.is_empty() && l.psi.is_empty() {
            cells.push(vec![l.n.to_string(), String::new(), String::new(), String::new(), l.status.clone()]);
        }
        for (part, atoms) in [("phi", &l.phi), ("psi", &l.psi)] {
            for a in atoms.iter() {
                cells.push(vec![l.n.to_string(), part.into(), fixed(a.point), fixed(a.weight), l.status.clone()]);
            }
        }
    }
    let report = match cfg.format {
        Format::Csv => csv_table(&header, &cells),
        Format::Pretty => pretty_table(&header, &cells),
        Format::Json => json(&LevelsReport {
            command: "extract",
            rank_tol: Some(cfg.rank_tol),
            levels: &out,
        }),
    };
    Ok(Outcome { report, code })
}

// ---------------------------------------------------------------- moments

#[derive(Serialize)]
struct MomentDump {
    measure: &'static str,
    dim: usize,
    degree: usize,
    alpha: Vec<Vec<u32>>,
    values: Vec<f64>,
}

#[derive(Serialize)]
struct MomentsReport<'a> {
    command: &'static str,
    sequences: &'a [MomentDump],
}

pub fn moments(cfg: &RunConfig) -> CmdResult {
    let degree = 2 * cfg.levels.last;
    let mut dumps = Vec::new();
    for (name, spec) in std::iter::once(("mu", &cfg.mu)).chain(cfg.nu.as_ref().map(|s| ("nu", s))) {
        let seq = measures::moments(spec, spec.dim(), degree)?;
        dumps.push(MomentDump {
            measure: name,
            dim: seq.dimension(),
            degree,
            alpha: seq.basis().indices().iter().map(|a| a.exponents().to_vec()).collect(),
            values: seq.values().to_vec(),
        });
    }
    let alpha_text = |a: &[u32]| a.iter().map(u32::to_string).collect::<Vec<_>>().join(" ");
    let cells: Vec<Vec<String>> = dumps
        .iter()
        .flat_map(|d| {
            d.alpha
                .iter()
                .zip(&d.values)
                .map(|(a, v)| vec![d.measure.to_string(), alpha_text(a), format!("{v:.15e}")])
                .collect::<Vec<_>>()
        })
        .collect();
    let header = ["measure", "alpha", "value"];
    let report = match cfg.format {
        Format::Csv => csv_table(&header, &cells),
        Format::Pretty => pretty_table(&header, &cells),
        Format::Json => json(&MomentsReport {
            command: "moments",
            sequences: &dumps,
        }),
    };
    Ok(Outcome { report, code: EXIT_OK })
}

// ---------------------------------------------------------------- certify

#[derive(Serialize)]
struct GramOut {
    name: &'static str,
    matrix: Vec<Vec<f64>>,
    eigenvalues: Vec<f64>,
}

#[derive(Serialize)]
struct CertificateOut {
    basis: BasisKind,
    center: Vec<f64>,
    half_width: Vec<f64>,
    p: Vec<f64>,
    p_monomial: Vec<(Vec<u32>, f64)>,
    grams: Vec<GramOut>,
    identity_residual_sigma: f64,
    identity_residual_psi: f64,
}

#[derive(Serialize)]
struct CertifyLevel {
    n: usize,
    rho_n: Option<f64>,
    dual_value: Option<f64>,
    certified_value: Option<f64>,
    verdict: String,
    certificate: Option<CertificateOut>,
}

fn certificate_out(c: &DualCertificate) -> CertificateOut {
    let r = c.identity_residuals();
    CertificateOut {
        basis: c.basis.kind(),
        center: c.basis.frame().center.clone(),
        half_width: c.basis.frame().half_width.clone(),
        p: c.p.clone(),
        p_monomial: c
            .p_polynomial()
            .terms()
            .map(|(a, v)| (a.exponents().to_vec(), v))
            .collect(),
        grams: c
            .grams()
            .into_iter()
            .map(|(name, g)| {
                let mut eig: Vec<f64> = g.clone().symmetric_eigenvalues().iter().copied().collect();
                eig.sort_by(f64::total_cmp);
                GramOut {
                    name,
                    matrix: g.row_iter().map(|row| row.iter().copied().collect()).collect(),
                    eigenvalues: eig,
                }
            })
            .collect(),
        identity_residual_sigma: r.sigma,
        identity_residual_psi: r.psi,
    }
}

pub fn certify(cfg: &RunConfig) -> CmdResult {
    let nu = cfg.nu()?;
    let mu = &cfg.mu;
    let levels: Vec<usize> = cfg.levels.range().collect();
    let solved: Vec<(usize, tvbound::Result<HierarchyResult>)> = levels
        .par_iter()
        .map(|&n| (n, tvbound::solve_level(mu, nu, n, &cfg.relaxation)))
        .collect();
    let mut out = Vec::new();
    let mut code = EXIT_OK;
    for (n, r) in solved {
        let h = match r {
            Ok(h) => h,
            Err(TvError::SolverFailure { status, .. }) => {
                code = EXIT_SOLVER;
                out.push(CertifyLevel {
                    n,
                    rho_n: None,
                    dual_value: None,
                    certified_value: None,
                    verdict: format!("untrusted:{status}"),
                    certificate: None,
                });
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let (certified, verdict) = match &h.certificate {
            None => (None, "FAIL: no certificate recovered".to_string()),
            Some(c) => match verify_certificate(c, mu, nu) {
                Ok(v) if v <= h.rho_n + WEAK_DUALITY_SLACK => (Some(v), "OK".to_string()),
                Ok(v) => (Some(v), format!("FAIL: certified {v} exceeds rho_n {}", h.rho_n)),
                Err(e) => (None, format!("FAIL: {e}")),
            },
        };
        if verdict != "OK" {
            code = code.max(EXIT_SOLVER);
        }
        out.push(CertifyLevel {
            n,
            rho_n: Some(cfg.distance(h.rho_n)),
            dual_value: Some(cfg.distance(h.dual_value)),
            certified_value: certified.map(|v| cfg.distance(v)),
            verdict,
            certificate: h.certificate.as_ref().map(certificate_out),
        });
    }
    let header = [
        "n",
        "rho_n",
        "certified_value",
        "min_eig_sigma0",
        "min_eig_sigma1",
        "min_eig_psi0",
        "min_eig_psi1",
        "identity_sigma",
        "identity_psi",
        "verdict",
    ];
    let cells: Vec<Vec<String>> = out
        .iter()
        .map(|l| {
            let mut row = vec![l.n.to_string(), opt(l.rho_n, fixed), opt(l.certified_value, fixed)];
            match &l.certificate {
                Some(c) => {
                    row.extend(c.grams.iter().map(|g| sci(g.eigenvalues.first().copied().unwrap_or(0.0))));
                    row.push(sci(c.identity_residual_sigma));
                    row.push(sci(c.identity_residual_psi));
                }
                None => row.extend(std::iter::repeat_n(String::new(), 6)),
            }
            row.push(l.verdict.clone());
            row
        })
        .collect();
    let report = match cfg.format {
        Format::Csv => csv_table(&header, &cells),
        Format::Pretty => pretty_table(&header, &cells),
        Format::Json => json(&LevelsReport {
            command: "certify",
            rank_tol: None,
            levels: &out,
        }),
    };
    Ok(Outcome { report, code })
}
