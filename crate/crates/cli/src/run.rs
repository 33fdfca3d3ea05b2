//! Command implementations: load the system, run the requested analysis
//! inside a configured thread pool, assemble the artifact in memory, and
//! only then write it out.

use std::fs;
use std::io::{self, Write};

use num_complex::Complex64;
use serde::Serialize;

use tailpole::distkit::SourceDistribution;
use tailpole::dpa::{
    bound_check_k, build_contour_k, front_factor_exact, tail_corrected, tail_dpa,
};
use tailpole::exact::{stationary_lindley, tail_exact};
use tailpole::grw::{grw_tail, h_beta, map_scalings, prob_max_zero, spitzer_oracle, GrwError};
use tailpole::roots::{find_poles, phi_residual, ratio_w, RootKind};
use tailpole::scaling::{capacity_for, derive_params, SystemParams};

use crate::{Cli, Cmd, Format, GrwArgs, OutputArgs, PolesArgs, SystemArgs, TailArgs};

/// A failed run, already sorted into its exit-code class.
pub enum RunError {
    /// Bad input or configuration — exit code 2.
    Config(String),
    /// The analysis itself failed — exit code 3.
    Numerical(String),
}

pub fn dispatch(cli: Cli) -> Result<(), RunError> {
    match cli.cmd {
        Cmd::Poles(a) => {
            let pool = build_pool(&a.output.threads)?;
            let artifact = pool.install(|| poles_artifact(&a))?;
            write_artifact(&a.output, &artifact)
        }
        Cmd::Tail(a) => {
            let pool = build_pool(&a.output.threads)?;
            let artifact = pool.install(|| tail_artifact(&a))?;
            write_artifact(&a.output, &artifact)
        }
        Cmd::Contour(a) => {
            let pool = build_pool(&a.output.threads)?;
            let artifact = pool.install(|| contour_artifact(&a))?;
            write_artifact(&a.output, &artifact)
        }
        Cmd::Grw(a) => {
            let pool = build_pool(&a.output.threads)?;
            let artifact = pool.install(|| grw_artifact(&a))?;
            write_artifact(&a.output, &artifact)
        }
    }
}

/// Builds the worker pool: `TAILPOLE_THREADS`, when set, overrides the
/// `--threads` flag; "auto" defers to the runtime default.
fn build_pool(flag: &str) -> Result<rayon::ThreadPool, RunError> {
    let effective = std::env::var("TAILPOLE_THREADS")
        .ok()
        .filter(|v| !v.is_empty())
        .unwrap_or_else(|| flag.to_string());
    let mut builder = rayon::ThreadPoolBuilder::new();
    if effective != "auto" {
        let threads: usize = effective
            .parse()
            .map_err(|_| RunError::Config(format!("invalid thread count {effective:?}")))?;
        if threads == 0 {
            return Err(RunError::Config("thread count must be at least 1".into()));
        }
        builder = builder.num_threads(threads);
    }
    builder.build().map_err(|e| RunError::Config(format!("cannot build thread pool: {e}")))
}

fn write_artifact(output: &OutputArgs, artifact: &str) -> Result<(), RunError> {
    if output.out == "-" {
        let mut stdout = io::stdout().lock();
        match stdout.write_all(artifact.as_bytes()).and_then(|()| stdout.flush()) {
            Ok(()) => Ok(()),
            // A closed pipe (e.g. piping into `head`) is not a failure.
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
            Err(e) => Err(RunError::Config(format!("cannot write to stdout: {e}"))),
        }
    } else {
        fs::write(&output.out, artifact)
            .map_err(|e| RunError::Config(format!("cannot write {}: {e}", output.out)))
    }
}

/// Exterior conjugate pairs the instance actually possesses:
/// `z^s − X(z)^n` has exactly `n·deg X − s` roots outside the unit disk —
/// the real dominant one plus at most `(count − 1)/2` conjugate pairs.
/// Asking for more is a configuration error, not a solver failure.
fn check_pair_cap(p: &SystemParams, k_max: u32) -> Result<(), RunError> {
    let cap = (i64::from(p.n) * p.dist.degree() as i64 - i64::from(p.s) - 1) / 2;
    if i64::from(k_max) > cap {
        return Err(RunError::Config(format!(
            "this instance has only {cap} exterior conjugate pair(s); got --k-max {k_max}"
        )));
    }
    Ok(())
}

fn load_system(args: &SystemArgs) -> Result<SystemParams, RunError> {
    let text = fs::read_to_string(&args.dist)
        .map_err(|e| RunError::Config(format!("cannot read {}: {e}", args.dist.display())))?;
    let dist = SourceDistribution::from_json_str(&text)
        .map_err(|e| RunError::Config(format!("{}: {e}", args.dist.display())))?;
    let s = match (args.s, args.beta) {
        (Some(s), None) => s,
        (None, Some(beta)) => {
            if !beta.is_finite() || beta <= 0.0 {
                return Err(RunError::Config("--beta must be positive and finite".into()));
            }
            capacity_for(args.n, beta, &dist)
        }
        _ => unreachable!("clap enforces exactly one of --s / --beta"),
    };
    derive_params(args.n, s, dist).map_err(|e| RunError::Config(e.to_string()))
}

/// Inclusive-range-aware integer list: "0..5,10,20" → 0,1,2,3,4,5,10,20.
fn parse_n_list(text: &str) -> Result<Vec<u64>, RunError> {
    let mut out = Vec::new();
    for piece in text.split(',') {
        let piece = piece.trim();
        if piece.is_empty() {
            continue;
        }
        if let Some((lo, hi)) = piece.split_once("..") {
            let lo: u64 = lo
                .trim()
                .parse()
                .map_err(|_| RunError::Config(format!("invalid tail level {piece:?}")))?;
            let hi: u64 = hi
                .trim()
                .parse()
                .map_err(|_| RunError::Config(format!("invalid tail level {piece:?}")))?;
            if hi < lo {
                return Err(RunError::Config(format!("empty range {piece:?}")));
            }
            out.extend(lo..=hi);
        } else {
            out.push(
                piece
                    .parse()
                    .map_err(|_| RunError::Config(format!("invalid tail level {piece:?}")))?,
            );
        }
    }
    if out.is_empty() {
        return Err(RunError::Config("--n-list must name at least one tail level".into()));
    }
    Ok(out)
}

#[derive(Clone, Copy)]
struct MethodSet {
    exact: bool,
    dpa: bool,
    corrected: bool,
    grw: bool,
}

fn parse_methods(text: &str) -> Result<MethodSet, RunError> {
    if text.trim() == "all" {
        return Ok(MethodSet { exact: true, dpa: true, corrected: true, grw: true });
    }
    let mut m = MethodSet { exact: false, dpa: false, corrected: false, grw: false };
    let mut any = false;
    for piece in text.split(',') {
        match piece.trim() {
            "" => continue,
            "exact" => m.exact = true,
            "dpa" => m.dpa = true,
            "corrected" => m.corrected = true,
            "grw" => m.grw = true,
            other => {
                return Err(RunError::Config(format!(
                    "unknown method {other:?} (expected exact, dpa, corrected, grw, or all)"
                )))
            }
        }
        any = true;
    }
    if !any {
        return Err(RunError::Config("--methods must name at least one method".into()));
    }
    Ok(m)
}

fn parse_betas(text: &str) -> Result<Vec<f64>, RunError> {
    let mut out = Vec::new();
    for piece in text.split(',') {
        let piece = piece.trim();
        if piece.is_empty() {
            continue;
        }
        let beta: f64 = piece
            .parse()
            .map_err(|_| RunError::Config(format!("invalid drift value {piece:?}")))?;
        if !beta.is_finite() || beta <= 0.0 {
            return Err(RunError::Config(format!("drift must be positive, got {piece}")));
        }
        out.push(beta);
    }
    if out.is_empty() {
        return Err(RunError::Config("--betas must name at least one drift".into()));
    }
    Ok(out)
}

/// Shortest round-trip decimal — `f64`'s `Display` — so artifact diffs are
/// byte-stable and values parse back exactly.
fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

// ---------------------------------------------------------------- poles --

#[derive(Serialize)]
struct PoleRow {
    kind: String,
    index: i64,
    re: f64,
    im: f64,
    residual: f64,
    asym_re: f64,
    asym_im: f64,
    abs_err: f64,
}

/// The closed-form seed belonging to a root (or the saddle landmark).
fn seed_for(p: &SystemParams, kind: RootKind, index: i64) -> Complex64 {
    match kind {
        RootKind::Interior => {
            if index >= 0 {
                p.asym_interior_zero(index as u32)
            } else {
                p.asym_interior_zero(index.unsigned_abs() as u32).conj()
            }
        }
        RootKind::Exterior => {
            if index >= 0 {
                p.asym_exterior_zero(index as f64)
            } else {
                p.asym_exterior_zero(-index as f64).conj()
            }
        }
        RootKind::Saddle => Complex64::new(p.asym_landmarks().0, 0.0),
    }
}

/// Residual grade of the saddle landmark: `|(n/s)·z·X′(z)/X(z) − 1|`.
fn saddle_residual_at(p: &SystemParams, z: f64) -> f64 {
    let (x, xp, _) = p.dist.pgf_derivs(Complex64::new(z, 0.0));
    ((f64::from(p.n) / f64::from(p.s)) * z * (xp.re / x.re) - 1.0).abs()
}

fn poles_artifact(args: &PolesArgs) -> Result<String, RunError> {
    let p = load_system(&args.system)?;
    check_pair_cap(&p, args.k_max)?;
    let mut rows = Vec::new();

    if args.seed_asymptotics_only {
        // The same inventory, but every row *is* its seed, graded by the
        // branch residual at the seed itself.
        let s = p.s as i64;
        for j in 0..s {
            let index = if 2 * j <= s { j } else { j - s };
            let z = seed_for(&p, RootKind::Interior, index);
            rows.push(PoleRow {
                kind: RootKind::Interior.to_string(),
                index,
                re: z.re,
                im: z.im,
                residual: phi_residual(&p, index, z),
                asym_re: z.re,
                asym_im: z.im,
                abs_err: 0.0,
            });
        }
        for k in -i64::from(args.k_max)..=i64::from(args.k_max) {
            let z = seed_for(&p, RootKind::Exterior, k);
            rows.push(PoleRow {
                kind: RootKind::Exterior.to_string(),
                index: k,
                re: z.re,
                im: z.im,
                residual: phi_residual(&p, k, z),
                asym_re: z.re,
                asym_im: z.im,
                abs_err: 0.0,
            });
        }
        let z = seed_for(&p, RootKind::Saddle, 0);
        rows.push(PoleRow {
            kind: RootKind::Saddle.to_string(),
            index: 0,
            re: z.re,
            im: z.im,
            residual: saddle_residual_at(&p, z.re),
            asym_re: z.re,
            asym_im: z.im,
            abs_err: 0.0,
        });
    } else {
        let poles = find_poles(&p, args.k_max).map_err(|e| RunError::Numerical(e.to_string()))?;
        for zero in poles.interior.iter().chain(poles.exterior.iter()) {
            let seed = seed_for(&p, zero.kind, zero.index);
            rows.push(PoleRow {
                kind: zero.kind.to_string(),
                index: zero.index,
                re: zero.value.re,
                im: zero.value.im,
                residual: zero.residual,
                asym_re: seed.re,
                asym_im: seed.im,
                abs_err: (zero.value - seed).norm(),
            });
        }
        let seed = seed_for(&p, RootKind::Saddle, 0);
        rows.push(PoleRow {
            kind: RootKind::Saddle.to_string(),
            index: 0,
            re: poles.saddle.value.re,
            im: poles.saddle.value.im,
            residual: poles.saddle.residual,
            asym_re: seed.re,
            asym_im: seed.im,
            abs_err: (poles.saddle.value - seed).norm(),
        });
    }

    match args.output.format {
        Format::Csv => {
            let mut out = String::from("kind,index,re,im,residual,asym_re,asym_im,abs_err\n");
            for r in &rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    r.kind,
                    r.index,
                    num(r.re),
                    num(r.im),
                    num(r.residual),
                    num(r.asym_re),
                    num(r.asym_im),
                    num(r.abs_err),
                ));
            }
            Ok(out)
        }
        Format::Json => to_json(&rows),
    }
}

// ----------------------------------------------------------------- tail --

#[derive(Serialize)]
struct TailRow {
    #[serde(rename = "N")]
    n: u64,
    #[serde(rename = "L")]
    l: f64,
    exact: Option<f64>,
    dpa: Option<f64>,
    #[serde(rename = "corrected_M")]
    corrected_m: Option<f64>,
    grw: Option<f64>,
    rel_err_dpa: Option<f64>,
    rel_err_corrected: Option<f64>,
    rel_err_grw: Option<f64>,
}

fn rel_against(value: f64, exact: f64) -> f64 {
    if exact == 0.0 {
        if value == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (value / exact - 1.0).abs()
    }
}

fn tail_artifact(args: &TailArgs) -> Result<String, RunError> {
    let methods = parse_methods(&args.methods)?;
    let levels = parse_n_list(&args.n_list)?;
    if methods.corrected && args.m > args.k_max {
        return Err(RunError::Config(format!(
            "corrected series needs M <= k-max, got M = {} > k-max = {}",
            args.m, args.k_max
        )));
    }
    let p = load_system(&args.system)?;
    // Only the corrected series consumes conjugate pairs; the leading term
    // needs just Z0, so a plain dpa run never chases higher poles.
    let pole_depth = if methods.corrected { args.k_max } else { 0 };
    if methods.corrected {
        check_pair_cap(&p, args.k_max)?;
    }

    let oracle = if methods.exact {
        Some(stationary_lindley(&p).map_err(|e| RunError::Numerical(e.to_string()))?)
    } else {
        None
    };
    let poles = if methods.dpa || methods.corrected {
        Some(find_poles(&p, pole_depth).map_err(|e| RunError::Numerical(e.to_string()))?)
    } else {
        None
    };
    let ff0 = poles.as_ref().map(|set| front_factor_exact(&p, set, 0));

    let sqrt_s = f64::from(p.s).sqrt();
    let mut rows = Vec::with_capacity(levels.len());
    for &n in &levels {
        let exact = oracle
            .as_ref()
            .map(|q| tail_exact(q, n).map_err(|e| RunError::Numerical(e.to_string())))
            .transpose()?;
        let dpa = if methods.dpa {
            Some(tail_dpa(ff0.as_ref().unwrap(), poles.as_ref().unwrap().z0(), n).value)
        } else {
            None
        };
        let corrected = if methods.corrected {
            Some(
                tail_corrected(&p, poles.as_ref().unwrap(), n, args.m)
                    .map_err(|e| RunError::Numerical(e.to_string()))?
                    .value,
            )
        } else {
            None
        };
        let grw = if methods.grw {
            let (gp, _) = map_scalings(&p, n);
            Some(grw_tail(gp.beta, gp.k).map_err(|e| RunError::Numerical(e.to_string()))?)
        } else {
            None
        };
        rows.push(TailRow {
            n,
            l: (n + 1) as f64 / sqrt_s,
            exact,
            dpa,
            corrected_m: corrected,
            grw,
            rel_err_dpa: exact.zip(dpa).map(|(e, v)| rel_against(v, e)),
            rel_err_corrected: exact.zip(corrected).map(|(e, v)| rel_against(v, e)),
            rel_err_grw: exact.zip(grw).map(|(e, v)| rel_against(v, e)),
        });
    }

    match args.output.format {
        Format::Csv => {
            let mut out = String::from(
                "N,L,exact,dpa,corrected_M,grw,rel_err_dpa,rel_err_corrected,rel_err_grw\n",
            );
            for r in &rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    r.n,
                    num(r.l),
                    opt(r.exact),
                    opt(r.dpa),
                    opt(r.corrected_m),
                    opt(r.grw),
                    opt(r.rel_err_dpa),
                    opt(r.rel_err_corrected),
                    opt(r.rel_err_grw),
                ));
            }
            Ok(out)
        }
        Format::Json => to_json(&rows),
    }
}

// -------------------------------------------------------------- contour --

#[derive(Serialize)]
struct ContourSample {
    re: f64,
    im: f64,
    bound_ratio: f64,
}

#[derive(Serialize)]
struct ContourArtifact {
    x0: f64,
    y0: f64,
    xi: f64,
    #[serde(rename = "R")]
    r: f64,
    min_bound_ratio: f64,
    samples: Vec<ContourSample>,
}

fn contour_artifact(args: &crate::ContourArgs) -> Result<String, RunError> {
    let p = load_system(&args.system)?;
    let spec = build_contour_k(&p);
    let min_bound = bound_check_k(&p, &spec);
    let samples: Vec<ContourSample> = spec
        .segment_points
        .iter()
        .chain(spec.arc_points.iter())
        .map(|&z| ContourSample { re: z.re, im: z.im, bound_ratio: ratio_w(&p, z).norm() })
        .collect();
    let artifact = ContourArtifact {
        x0: spec.x0,
        y0: spec.y0,
        xi: spec.xi,
        r: spec.r,
        min_bound_ratio: min_bound,
        samples,
    };

    match args.output.format {
        Format::Csv => {
            let mut out = String::from("x0,y0,xi,R,min_bound_ratio\n");
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                num(artifact.x0),
                num(artifact.y0),
                num(artifact.xi),
                num(artifact.r),
                num(artifact.min_bound_ratio),
            ));
            out.push_str("re,im,bound_ratio\n");
            for s in &artifact.samples {
                out.push_str(&format!("{},{},{}\n", num(s.re), num(s.im), num(s.bound_ratio)));
            }
            Ok(out)
        }
        Format::Json => to_json(&artifact),
    }
}

// ------------------------------------------------------------------ grw --

#[derive(Serialize)]
struct GrwRow {
    beta: f64,
    p_max_zero_series: Option<f64>,
    p_max_zero_spitzer: f64,
    h_beta: Option<f64>,
    abs_diff: Option<f64>,
}

fn grw_artifact(args: &GrwArgs) -> Result<String, RunError> {
    let betas = parse_betas(&args.betas)?;
    let mut rows = Vec::with_capacity(betas.len());
    for beta in betas {
        let spitzer = spitzer_oracle(beta);
        let row = match (prob_max_zero(beta), h_beta(beta)) {
            (Ok(series), Ok(h)) => GrwRow {
                beta,
                p_max_zero_series: Some(series),
                p_max_zero_spitzer: spitzer,
                h_beta: Some(h),
                abs_diff: Some((series - spitzer).abs()),
            },
            // Past the series' domain edge the Spitzer oracle still stands;
            // the series fields degrade to NA rather than failing the run.
            (Err(GrwError::DomainError { .. }), _) | (_, Err(GrwError::DomainError { .. })) => {
                GrwRow {
                    beta,
                    p_max_zero_series: None,
                    p_max_zero_spitzer: spitzer,
                    h_beta: None,
                    abs_diff: None,
                }
            }
            (Err(e), _) | (_, Err(e)) => return Err(RunError::Numerical(e.to_string())),
        };
        rows.push(row);
    }

    match args.output.format {
        Format::Csv => {
            let mut out = String::from("beta,p_max_zero_series,p_max_zero_spitzer,h_beta,abs_diff\n");
            for r in &rows {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    num(r.beta),
                    r.p_max_zero_series.map_or_else(|| "NA".to_string(), num),
                    num(r.p_max_zero_spitzer),
                    r.h_beta.map_or_else(|| "NA".to_string(), num),
                    r.abs_diff.map_or_else(|| "NA".to_string(), num),
                ));
            }
            Ok(out)
        }
        Format::Json => to_json(&rows),
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, RunError> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| RunError::Numerical(format!("cannot serialize artifact: {e}")))
}
