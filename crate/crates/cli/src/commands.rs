use std::io::Write;
use std::path::Path;

use qbm_core::bath::{default_omega_c, BathSpec, CutoffKind, KernelTable};
use qbm_core::decoherence::{
    figure1_study, find_tc, log_spaced, pointer_weight, propagate, EvolutionContext, EvolutionOptions,
};
use qbm_core::green::{inverse_laplace_check, solve_green, RESIDUAL_TOL};
use qbm_core::grid::TimeGrid;
use qbm_core::io::{green_rows, write_green_csv, write_json, write_kernel_csv, write_moments_csv};
use qbm_core::linalg::Mat2;
use qbm_core::moments::DEFAULT_DECIMATION;
use qbm_core::phase_space::{cat_wigner, gaussian_wigner, negativity_volume, GaussianState, GridSpec, WignerGrid};
use qbm_core::{Error, Result};
use serde::Serialize;

use crate::config::Settings;

const GREEN_ROWS: usize = 1000;
const GREEN_STEP: f64 = 0.2;

fn bath(s: &mut Settings) -> Result<BathSpec> {
    let p = s.require_f64("p")?;
    let zeta = s.require_f64("zeta")?;
    let beta = s.require_f64("beta")?;
    let cutoff: CutoffKind = s.string_or("cutoff", "exponential").parse()?;
    let omega_c = match cutoff {
        CutoffKind::None => {
            s.record_value("omega_c", f64::INFINITY);
            f64::INFINITY
        }
        CutoffKind::Exponential => s.f64_or("omega_c", default_omega_c(p, zeta, beta))?,
    };
    BathSpec::new(p, zeta, beta, omega_c, cutoff)
}

/// `(T_max, h)`; the default step is `per_cutoff/ω_c` with at least 64 steps.
fn horizon_step(s: &mut Settings, spec: &BathSpec, per_cutoff: f64) -> Result<(f64, f64)> {
    let tmax = s.f64_or("tmax", spec.default_horizon())?;
    if !(tmax > 0.0 && tmax.is_finite()) {
        return Err(Error::Domain(format!("tmax must be positive, got {tmax}")));
    }
    let default_step = if spec.omega_c.is_finite() {
        (per_cutoff / spec.omega_c).min(tmax / 64.0)
    } else {
        tmax / 1000.0
    };
    let step = s.f64_or("step", default_step)?;
    if !(step > 0.0 && step <= tmax / 64.0) {
        return Err(Error::Domain(format!("step must lie in (0, tmax/64], got {step}")));
    }
    Ok((tmax, step))
}

fn context(s: &mut Settings) -> Result<EvolutionContext> {
    let spec = bath(s)?;
    let (tmax, step) = horizon_step(s, &spec, 0.5)?;
    let decimation = s.usize_or("decimation", DEFAULT_DECIMATION)?;
    if decimation == 0 {
        return Err(Error::Config("decimation must be at least 1".into()));
    }
    EvolutionContext::build(
        &spec,
        EvolutionOptions {
            horizon: Some(tmax),
            step: Some(step),
            decimation,
        },
    )
}

fn announce(path: &Path) {
    println!("wrote {}", path.display());
}

#[derive(Serialize)]
struct TalbotCheck {
    max_abs_diff: f64,
    at: f64,
    samples: usize,
}

#[derive(Serialize)]
struct GreenDiagnostics {
    method: &'static str,
    n_steps: usize,
    h: f64,
    horizon: f64,
    max_residual: f64,
    max_residual_at: f64,
    relative_residual: f64,
    tolerance: f64,
    talbot: Option<TalbotCheck>,
}

pub fn green(s: &mut Settings, out: &Path) -> Result<()> {
    let spec = bath(s)?;
    let (tmax, step) = horizon_step(s, &spec, GREEN_STEP)?;
    let n_steps = (tmax / step).round().max(64.0) as usize;
    let table = solve_green(&spec, tmax, n_steps)?;
    let every = s.usize_or("every", n_steps.div_ceil(GREEN_ROWS))?;
    if every == 0 {
        return Err(Error::Config("every must be at least 1".into()));
    }
    let check = s.opt_string("check");
    let rows = green_rows(&table, every);
    let talbot = match check.as_deref() {
        None => None,
        Some("talbot") => {
            let times: Vec<f64> = rows.iter().map(|&i| table.grid.t(i)).filter(|&t| t > 0.0).collect();
            let mut col = inverse_laplace_check(&spec, &times)?;
            if rows[0] == 0 {
                col.insert(0, 0.0);
            }
            Some(col)
        }
        Some(other) => return Err(Error::Config(format!("unknown check `{other}` (expected `talbot`)"))),
    };

    let (method, max_residual, max_residual_at) = if spec.is_strictly_ohmic() {
        ("closed_form", 0.0, 0.0)
    } else {
        let gamma = KernelTable::damping(&spec, table.grid)?;
        let (r, at) = table.max_residual(&gamma.values);
        ("volterra_march", r, at)
    };
    let scale = table.g_ddot.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let talbot_check = talbot.as_ref().map(|col| {
        let (mut worst, mut at) = (0.0f64, 0.0);
        for (k, &i) in rows.iter().enumerate() {
            let d = (col[k] - table.g[i]).abs();
            if d > worst {
                worst = d;
                at = table.grid.t(i);
            }
        }
        TalbotCheck {
            max_abs_diff: worst,
            at,
            samples: rows.len(),
        }
    });

    let header = s.header("green");
    let csv = out.join("green.csv");
    write_green_csv(&csv, &table, every, talbot.as_deref().map(|c| ("G_talbot", c)), &header)?;
    announce(&csv);
    let diag = GreenDiagnostics {
        method,
        n_steps,
        h: table.grid.h,
        horizon: table.horizon(),
        max_residual,
        max_residual_at,
        relative_residual: max_residual / scale,
        tolerance: RESIDUAL_TOL,
        talbot: talbot_check,
    };
    let json = out.join("green_residuals.json");
    write_json(&json, &diag, &header)?;
    announce(&json);
    Ok(())
}

pub fn kernel(s: &mut Settings, out: &Path) -> Result<()> {
    let spec = bath(s)?;
    let (tmax, step) = horizon_step(s, &spec, 0.5)?;
    let grid = TimeGrid::new(tmax, (tmax / step).round() as usize)?;
    let gamma = KernelTable::damping(&spec, grid)?;
    let noise = KernelTable::noise(&spec, grid)?;
    let header = s.header("kernel");
    for (name, col, table) in [("damping_kernel.csv", "gamma", &gamma), ("noise_kernel.csv", "K", &noise)] {
        let path = out.join(name);
        write_kernel_csv(&path, table, col, &header)?;
        announce(&path);
    }
    Ok(())
}

fn write_moment_files(ctx: &EvolutionContext, out: &Path, header: &[String]) -> Result<()> {
    let csv = out.join("moments.csv");
    write_moments_csv(&csv, &ctx.moments, header)?;
    announce(&csv);
    let json = out.join("pointer_basis.json");
    write_json(&json, &ctx.basis, header)?;
    announce(&json);
    Ok(())
}

pub fn moments(s: &mut Settings, out: &Path) -> Result<()> {
    let ctx = context(s)?;
    write_moment_files(&ctx, out, &s.header("moments"))
}

pub fn tc(s: &mut Settings, out: &Path) -> Result<()> {
    let ctx = context(s)?;
    let header = s.header("tc");
    write_moment_files(&ctx, out, &header)?;
    let report = find_tc(&ctx)?;
    let json = out.join("localization.json");
    write_json(&json, &report, &header)?;
    announce(&json);
    match report.t_c {
        Some(t) => println!("t_c {t:.10e}"),
        None => println!("t_c none within horizon {}", report.horizon),
    }
    Ok(())
}

fn pair(s: &mut Settings, key: &str, default: [f64; 2]) -> Result<[f64; 2]> {
    match s.list(key)? {
        None => {
            s.record_list(key, &default);
            Ok(default)
        }
        Some(v) if v.len() == 2 => Ok([v[0], v[1]]),
        Some(v) => Err(Error::Config(format!("`{key}` expects 2 numbers, got {}", v.len()))),
    }
}

fn covariance(s: &mut Settings) -> Result<Mat2> {
    match s.list("sigma")? {
        None => {
            s.record_list("sigma", &[0.5, 0.0, 0.5]);
            Ok(Mat2::diag(0.5, 0.5))
        }
        Some(v) if v.len() == 3 => Ok(Mat2::symmetric(v[0], v[1], v[2])),
        Some(v) => Err(Error::Config(format!("`sigma` expects xx,xp,pp, got {} numbers", v.len()))),
    }
}

fn initial_state(s: &mut Settings) -> Result<WignerGrid> {
    let n = s.usize_or("grid_n", 256)?;
    let kind = s.string_or("state", "gaussian");
    let sigma = covariance(s)?;
    match kind.as_str() {
        "gaussian" => {
            let state = GaussianState::new(pair(s, "d", [0.0, 0.0])?, sigma)?;
            gaussian_wigner(&state, GridSpec::covering(n, &[state])?)
        }
        "cat" => {
            let x0 = s.require_f64("x0")?;
            let lobes = [GaussianState::new([x0, 0.0], sigma)?, GaussianState::new([-x0, 0.0], sigma)?];
            cat_wigner(x0, sigma, GridSpec::covering(n, &lobes)?)
        }
        other => Err(Error::Config(format!("unknown state `{other}` (expected gaussian or cat)"))),
    }
}

pub fn evolve(s: &mut Settings, out: &Path) -> Result<()> {
    let times = s
        .list("times")?
        .ok_or_else(|| Error::Config("missing required setting `times` (flag --times)".into()))?;
    let w0 = initial_state(s)?;
    let ctx = context(s)?;
    if let Some(&t) = times.iter().find(|&&t| !(t >= 0.0 && t <= ctx.horizon)) {
        return Err(Error::OutOfRange { t, horizon: ctx.horizon });
    }
    let header = s.header("evolve");
    let mut summary = Vec::with_capacity(times.len());
    for (i, &t) in times.iter().enumerate() {
        let mut h = header.clone();
        h.push(format!("t {t:?}"));
        let w = propagate(&w0, &ctx, t)?;
        let path = out.join(format!("wigner_{i:03}.bin"));
        w.write_raster(&path, &h)?;
        announce(&path);
        let min_w1 = match pointer_weight(&w0, &ctx, t) {
            Ok(w1) => {
                let path = out.join(format!("pointer_weight_{i:03}.bin"));
                w1.write_raster(&path, &h)?;
                announce(&path);
                w1.min_value()
            }
            Err(Error::NotYetDefined { .. }) => f64::NAN,
            Err(e) => return Err(e),
        };
        summary.push((t, negativity_volume(&w), min_w1));
    }
    let path = out.join("evolve_summary.csv");
    let mut f = std::io::BufWriter::new(std::fs::File::create(&path)?);
    for line in &header {
        writeln!(f, "# {line}")?;
    }
    writeln!(f, "t,negativity_volume_W0,min_W1")?;
    for (t, neg, min_w1) in summary {
        writeln!(f, "{t:.12e},{neg:.12e},{min_w1:.12e}")?;
    }
    f.flush()?;
    announce(&path);
    Ok(())
}

pub fn figure1(s: &mut Settings, out: &Path) -> Result<()> {
    let zetas = match s.list("zetas")? {
        Some(z) => z,
        None => {
            let lo = s.f64_or("zeta_min", 0.1)?;
            let hi = s.f64_or("zeta_max", 10.0)?;
            let n = s.usize_or("n_zeta", 17)?;
            if !(lo > 0.0 && hi > lo) {
                return Err(Error::Domain(format!("need 0 < zeta_min < zeta_max, got {lo}, {hi}")));
            }
            let z = log_spaced(lo, hi, n);
            s.record_list("zetas", &z);
            z
        }
    };
    if zetas.len() < 8 {
        return Err(Error::Domain(format!("figure 1 needs at least 8 couplings, got {}", zetas.len())));
    }
    if let Some(&z) = zetas.iter().find(|&&z| !(z > 0.0 && z.is_finite())) {
        return Err(Error::Domain(format!("couplings must be positive, got {z}")));
    }
    let probes = s.list("probes")?.unwrap_or_default();
    let table = figure1_study(&zetas, &probes)?;
    let header = s.header("figure1");
    let csv = out.join("figure1.csv");
    table.write_csv(&csv, &header)?;
    announce(&csv);
    let gp = out.join("figure1.gp");
    table.write_gnuplot(&gp, "figure1.csv", &header)?;
    announce(&gp);
    let json = out.join("figure1.json");
    write_json(&json, &table, &header)?;
    announce(&json);
    println!("slope {:.6}", table.slope);
    Ok(())
}
