//! One function per experiment kind. Each writes its tables into the run
//! directory and returns the scalar metrics the checks refer to.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};
use wavemap::conservation::{conservation_report, energy_momentum, pohlmeyer_check};
use wavemap::geometry::TargetManifold;
use wavemap::norms::{
    l11_norm, track_rescaled_solution_norms, verify_estimate, verify_rellich, EnsembleSpec, EstimateParams,
};
use wavemap::nullsolver::io::{write_field, write_slices_csv};
use wavemap::nullsolver::{picard_iterate, solve, wave_map_residual, CauchyData, GridField, SolveOptions};
use wavemap::oracles::{
    critical_counterexample, log_sweep, nonscattering_witness, riccati_blowup, s1_data, s1_exact, GrowthTable,
    NonscatteringWitness,
};
use wavemap::scattering::{
    concentration_profile, free_resolution_check, interaction_integral, scattering_defect, scattering_states,
};

use crate::config::{
    CausalitySpec, DataSpec, GridSpec, Kind, NormsSection, OracleSection, PicardSpec, RunConfig,
};
use crate::error::{CliError, CliResult};

pub type Metrics = BTreeMap<String, f64>;

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn create(out: &Path, name: &str) -> CliResult<BufWriter<File>> {
    let path = out.join(name);
    File::create(&path).map(BufWriter::new).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub(crate) fn write_json<T: Serialize + ?Sized>(out: &Path, name: &str, value: &T) -> CliResult<()> {
    let mut w = create(out, name)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_with<F>(out: &Path, name: &str, f: F) -> CliResult<()>
where
    F: FnOnce(&mut BufWriter<File>) -> wavemap::Result<()>,
{
    let mut w = create(out, name)?;
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Builds Cauchy data at `spacing` on the grid interval.
pub fn build_data(spec: &DataSpec, grid: &GridSpec, spacing: f64) -> CliResult<CauchyData> {
    let (a, b) = (grid.x_min, grid.x_max);
    let data = match spec {
        DataSpec::Circle { profile } => s1_data(profile, a, b, spacing)?,
        DataSpec::SphereRotation { angle, velocity } => {
            angle.validate()?;
            velocity.validate()?;
            CauchyData::from_fn(
                a,
                b,
                spacing,
                3,
                |x, o| {
                    let th = angle.value(x);
                    o.copy_from_slice(&[th.sin(), 0.0, th.cos()]);
                },
                |x, o| o.copy_from_slice(&[0.0, velocity.value(x), 0.0]),
            )?
        }
        DataSpec::Constant { point } => {
            if point.is_empty() {
                return Err(CliError::Config("constant data needs a point".into()));
            }
            CauchyData::from_fn(a, b, spacing, point.len(), |_, o| o.copy_from_slice(point), |_, o| o.fill(0.0))?
        }
        DataSpec::Components { f, g } => {
            if f.is_empty() || f.len() != g.len() {
                return Err(CliError::Config("components data needs matching nonempty f and g lists".into()));
            }
            for p in f.iter().chain(g) {
                p.validate()?;
            }
            let fill = |ps: &[wavemap::oracles::ScalarProfile], x: f64, o: &mut [f64]| {
                o.iter_mut().zip(ps).for_each(|(v, p)| *v = p.value(x));
            };
            CauchyData::from_fn(a, b, spacing, f.len(), |x, o| fill(f, x, o), |x, o| fill(g, x, o))?
        }
    };
    Ok(data)
}

struct Setup {
    target: TargetManifold,
    data: CauchyData,
    grid: GridSpec,
}

fn setup(cfg: &RunConfig, h: Option<f64>) -> CliResult<Setup> {
    let missing = || CliError::Config(format!("kind `{}` needs target, data and grid", cfg.kind.name()));
    let target = cfg.target.as_ref().ok_or_else(missing)?.build()?;
    let mut grid = cfg.grid.ok_or_else(missing)?;
    if let Some(h) = h {
        grid.h = h;
    }
    let data = build_data(cfg.data.as_ref().ok_or_else(missing)?, &grid, 0.5 * grid.h)?;
    data.validate_for(&target)?;
    Ok(Setup { target, data, grid })
}

pub fn dispatch(cfg: &RunConfig, out: &Path) -> CliResult<Metrics> {
    match cfg.kind {
        Kind::Solve => run_solve(cfg, out),
        Kind::Conserve => run_conserve(cfg, out),
        Kind::Norms => run_norms(cfg, out),
        Kind::Estimate => run_estimate(cfg, out),
        Kind::Oracle => run_oracle(cfg, out),
        Kind::Scatter => run_scatter(cfg, out),
        Kind::Counterexample => run_counterexample(cfg, out),
    }
}

fn conservation_metrics(phi: &GridField, t_max: f64, m: &mut Metrics, suffix: &str) -> CliResult<()> {
    let rep = conservation_report(phi, Some(t_max))?;
    m.insert(format!("pohlmeyer_residual_u{suffix}"), rep.pohlmeyer_residual_u);
    m.insert(format!("pohlmeyer_residual_v{suffix}"), rep.pohlmeyer_residual_v);
    m.insert(format!("energy_drift{suffix}"), rep.energy_drift);
    m.insert(format!("relative_energy_drift{suffix}"), rep.relative_energy_drift);
    m.insert(format!("traceless_residual{suffix}"), rep.traceless_residual);
    if let (Some(hw), Some(anti)) = (rep.hardwire_residual, rep.antisymmetry_residual) {
        m.insert(format!("hardwire_residual{suffix}"), hw);
        m.insert(format!("antisymmetry_residual{suffix}"), anti);
    }
    Ok(())
}

fn run_solve(cfg: &RunConfig, out: &Path) -> CliResult<Metrics> {
    let s = setup(cfg, None)?;
    let sec = cfg.solve.clone().unwrap_or_default();
    let phi = solve(&s.data, &s.target, s.grid.t_max, s.grid.h, &sec.options)?;
    let mut m = Metrics::new();
    m.insert("nodes".into(), phi.grid.node_count() as f64);
    m.insert("wave_map_residual".into(), wave_map_residual(&phi)?);
    m.insert("data_energy".into(), s.data.energy());
    conservation_metrics(&phi, s.grid.t_max, &mut m, "")?;
    write_json(out, "conservation.json", &conservation_report(&phi, Some(s.grid.t_max))?)?;
    let em = energy_momentum(&phi)?;
    write_with(out, "energy.csv", |w| {
        writeln!(w, "t,energy")?;
        for (t, e) in em.energy_series() {
            writeln!(w, "{t},{e:e}")?;
        }
        Ok(())
    })?;
    if !cfg.sweeps.t.is_empty() {
        write_with(out, "slices.csv", |w| write_slices_csv(&phi, &cfg.sweeps.t, w))?;
    }
    if sec.write_field {
        write_with(out, "field.wmg", |w| write_field(&phi, w))?;
    }
    if let Some(c) = &sec.causality {
        causality(&s, &phi, c, &sec.options, out, &mut m)?;
    }
    if let Some(p) = &sec.picard {
        picard(&s, p, out, &mut m)?;
    }
    Ok(m)
}

/// Data equal to `data` on `[a, b]` and moved by `amplitude` outside.
pub fn perturb_outside(data: &CauchyData, target: &TargetManifold, c: &CausalitySpec) -> CliResult<CauchyData> {
    let dim = data.dim;
    let mut sf = Vec::with_capacity(data.len() * dim);
    let mut sg = Vec::with_capacity(data.len() * dim);
    for k in 0..data.len() {
        let x = data.x(k);
        let mut f = data.f(k).to_vec();
        let mut g = data.g(k).to_vec();
        if x < c.a || x > c.b {
            for (m, (a, b)) in f.iter_mut().zip(g.iter_mut()).enumerate() {
                *a += c.amplitude * (1.3 * x + m as f64).sin();
                *b += c.amplitude * (0.7 * x - m as f64).cos();
            }
            if target.is_sphere() {
                target.retract_in_place(&mut f);
                let d: f64 = f.iter().zip(&g).map(|(a, b)| a * b).sum();
                g.iter_mut().zip(&f).for_each(|(b, a)| *b -= d * a);
            }
        }
        sf.extend_from_slice(&f);
        sg.extend_from_slice(&g);
    }
    Ok(CauchyData::new(data.x_min, data.spacing, dim, sf, sg)?)
}

/// SHA-256 of the node values with `a ≤ min(u, v)` and `max(u, v) ≤ b`,
/// and the number of such nodes.
pub fn diamond_digest(phi: &GridField, a: f64, b: f64) -> (String, usize) {
    let g = &phi.grid;
    let slack = 1e-9 * g.h;
    let mut hasher = Sha256::new();
    let mut count = 0;
    for (i, j) in phi.nodes() {
        let (u, v) = (g.u(i), g.v(j));
        if u.min(v) >= a - slack && u.max(v) <= b + slack {
            hasher.update((i as u64).to_le_bytes());
            hasher.update((j as u64).to_le_bytes());
            for x in phi.at(i, j) {
                hasher.update(x.to_le_bytes());
            }
            count += 1;
        }
    }
    let hex = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
    (hex, count)
}

#[derive(Serialize)]
struct CausalityReport {
    a: f64,
    b: f64,
    amplitude: f64,
    nodes: usize,
    digest: String,
    perturbed_digest: String,
    outside_change: f64,
}

fn causality(s: &Setup, phi: &GridField, c: &CausalitySpec, opts: &SolveOptions, out: &Path, m: &mut Metrics) -> CliResult<()> {
    let moved = perturb_outside(&s.data, &s.target, c)?;
    let psi = solve(&moved, &s.target, s.grid.t_max, s.grid.h, opts)?;
    let (digest, nodes) = diamond_digest(phi, c.a, c.b);
    let (perturbed_digest, _) = diamond_digest(&psi, c.a, c.b);
    let outside_change = phi.difference(&psi)?.sup_norm();
    m.insert("causality_identical".into(), flag(digest == perturbed_digest));
    m.insert("causality_nodes".into(), nodes as f64);
    m.insert("causality_outside_change".into(), outside_change);
    write_json(
        out,
        "causality.json",
        &CausalityReport { a: c.a, b: c.b, amplitude: c.amplitude, nodes, digest, perturbed_digest, outside_change },
    )
}

fn picard(s: &Setup, p: &PicardSpec, out: &Path, m: &mut Metrics) -> CliResult<()> {
    let l11 = l11_norm(&s.data, &s.target)?;
    let rep = picard_iterate(&s.data, &s.target, s.grid.t_max, s.grid.h, p.iterations)?;
    let inc = &rep.x_increments;
    let max_ratio = (1..inc.len())
        .filter(|&k| inc[k] > p.floor && inc[k - 1] > 0.0)
        .map(|k| inc[k] / inc[k - 1])
        .fold(0.0, f64::max);
    m.insert("picard_l11".into(), l11);
    m.insert("picard_max_ratio".into(), max_ratio);
    if let Some(k) = inc.iter().position(|&x| x <= 1e-8) {
        m.insert("picard_iterations_to_1e-8".into(), (k + 1) as f64);
    }
    write_with(out, "picard.csv", |w| {
        writeln!(w, "k,x_increment,sup_increment")?;
        for (k, (x, s)) in inc.iter().zip(&rep.sup_increments).enumerate() {
            writeln!(w, "{},{x:e},{s:e}", k + 1)?;
        }
        Ok(())
    })
}

#[derive(Serialize)]
struct ConserveRow {
    h: f64,
    relative_energy_drift: f64,
    pohlmeyer_constant: f64,
    hardwire_residual: Option<f64>,
    antisymmetry_residual: Option<f64>,
}

fn spread(xs: &[f64]) -> f64 {
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    hi / lo - 1.0
}

fn run_conserve(cfg: &RunConfig, out: &Path) -> CliResult<Metrics> {
    let grid = cfg.grid.ok_or_else(|| CliError::Config("conserve needs a grid".into()))?;
    let hs = if cfg.sweeps.h.is_empty() { vec![grid.h] } else { cfg.sweeps.h.clone() };
    let opts = cfg.conserve.clone().unwrap_or_default().options;
    let mut m = Metrics::new();
    let mut rows = Vec::new();
    for (k, &h) in hs.iter().enumerate() {
        let s = setup(cfg, Some(h))?;
        let phi = solve(&s.data, &s.target, grid.t_max, h, &opts)?;
        let rep = conservation_report(&phi, Some(grid.t_max))?;
        conservation_metrics(&phi, grid.t_max, &mut m, &format!("_h{k}"))?;
        rows.push(ConserveRow {
            h,
            relative_energy_drift: rep.relative_energy_drift,
            pohlmeyer_constant: rep.pohlmeyer_residual_u.max(rep.pohlmeyer_residual_v) / (h * h),
            hardwire_residual: rep.hardwire_residual,
            antisymmetry_residual: rep.antisymmetry_residual,
        });
    }
    let (first, last) = (&rows[0], &rows[rows.len() - 1]);
    if rows.len() > 1 {
        m.insert("drift_improvement".into(), first.relative_energy_drift / last.relative_energy_drift);
        let c: Vec<f64> = rows.iter().map(|r| r.pohlmeyer_constant).collect();
        m.insert("pohlmeyer_c_spread".into(), spread(&c));
        if let (Some(a), Some(b)) = (first.hardwire_residual, last.hardwire_residual) {
            m.insert("hardwire_order".into(), (a / b).ln() / (first.h / last.h).ln());
        }
    }
    if rows.iter().all(|r| r.antisymmetry_residual.is_some()) {
        let anti = rows.iter().filter_map(|r| r.antisymmetry_residual).fold(0.0, f64::max);
        m.insert("antisymmetry_max".into(), anti);
    }
    write_with(out, "conservation.csv", |w| {
        writeln!(w, "h,relative_energy_drift,pohlmeyer_constant,hardwire_residual,antisymmetry_residual")?;
        for r in &rows {
            let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:e}"));
            writeln!(
                w,
                "{},{:e},{:e},{},{}",
                r.h,
                r.relative_energy_drift,
                r.pohlmeyer_constant,
                opt(r.hardwire_residual),
                opt(r.antisymmetry_residual)
            )?;
        }
        Ok(())
    })?;
    write_json(out, "conservation.json", &rows)?;
    Ok(m)
}

fn run_norms(cfg: &RunConfig, out: &Path) -> CliResult<Metrics> {
    let lambdas = &cfg.sweeps.lambda;
    let mut m = Metrics::new();
    match cfg.norms.as_ref().expect("validated") {
        NormsSection::Rellich { delta, s_tilde, profiles, grid } => {
            let mut reports = Vec::new();
            for p in profiles {
                p.f.validate()?;
                p.g.validate()?;
                reports.push(verify_rellich(|x| p.f.value(x), |x| p.g.value(x), *delta, *s_tilde, lambdas, grid)?);
            }
            let mut worst = f64::NEG_INFINITY;
            for (k, r) in reports.iter().enumerate() {
                m.insert(format!("decay_exponent_{k}"), r.decay_exponent);
                worst = worst.max(r.decay_exponent);
            }
            m.insert("decay_exponent_max".into(), worst);
            write_with(out, "rellich.csv", |w| {
                writeln!(w, "profile,lambda,norm")?;
                for (k, r) in reports.iter().enumerate() {
                    for (l, n) in r.lambdas.iter().zip(&r.norms) {
                        writeln!(w, "{k},{l},{n:e}")?;
                    }
                }
                Ok(())
            })?;
            write_json(out, "rellich.json", &reports)?;
        }
        NormsSection::Rescaled { s } => {
            let st = setup(cfg, None)?;
            let opts = SolveOptions::default();
            let phi = solve(&st.data, &st.target, st.grid.t_max, st.grid.h, &opts)?;
            let rows = lambdas
                .iter()
                .map(|&l| track_rescaled_solution_norms(&phi, l, *s))
                .collect::<wavemap::Result<Vec<_>>>()?;
            let base = rows[0];
            let factor = |a: f64, b: f64| (a / b).max(b / a);
            let (mut fu, mut fv, mut fuv) = (1.0f64, 1.0f64, 1.0f64);
            for r in &rows {
                fu = fu.max(factor(r.u_quantity, base.u_quantity));
                fv = fv.max(factor(r.v_quantity, base.v_quantity));
                fuv = fuv.max(factor(r.uv_quantity, base.uv_quantity));
            }
            m.insert("factor_u".into(), fu);
            m.insert("factor_v".into(), fv);
            m.insert("factor_uv".into(), fuv);
            m.insert("factor_max".into(), fu.max(fv).max(fuv));
            m.insert("data_energy".into(), st.data.energy());
            write_with(out, "rescaled.csv", |w| {
                writeln!(w, "lambda,u_quantity,v_quantity,uv_quantity")?;
                for r in &rows {
                    writeln!(w, "{},{:e},{:e},{:e}", r.lambda, r.u_quantity, r.v_quantity, r.uv_quantity)?;
                }
                Ok(())
            })?;
            write_json(out, "rescaled.json", &rows)?;
        }
    }
    Ok(m)
}

fn run_estimate(cfg: &RunConfig, out: &Path) -> CliResult<Metrics> {
    let sec = cfg.estimate.as_ref().expect("validated");
    let defaults = EnsembleSpec::default();
    let spec = EnsembleSpec {
        size: sec.size,
        cutoffs: if cfg.sweeps.n.is_empty() { defaults.cutoffs.clone() } else { cfg.sweeps.n.clone() },
        seed: cfg.seed,
        smoothness: sec.smoothness.clone().unwrap_or(defaults.smoothness.clone()),
        max_rank: sec.max_rank.unwrap_or(defaults.max_rank),
        family: sec.family,
    };
    let mut m = Metrics::new();
    for &id in &sec.ids {
        let params = sec.params.unwrap_or_else(|| EstimateParams::default_for(id));
        let rep = verify_estimate(id, &params, &spec)?;
        let name = id.name();
        m.insert(format!("slope_{name}"), rep.cutoff_scaling_slope);
        m.insert(format!("max_ratio_{name}"), rep.max_ratio);
        m.insert(format!("verified_{name}"), flag(rep.verified));
        m.insert(format!("in_region_{name}"), flag(rep.in_region));
        write_json(out, &format!("estimate_{name}.json"), &rep)?;
        write_with(out, &format!("estimate_{name}.csv"), |w| rep.write_csv(w))?;
    }
    Ok(m)
}

#[derive(Serialize)]
struct ConvergenceRow {
    h: f64,
    error: f64,
    pohlmeyer_constant: f64,
    riccati_variation: Option<f64>,
}

fn run_oracle(cfg: &RunConfig, out: &Path) -> CliResult<Metrics> {
    let mut m = Metrics::new();
    match cfg.oracle.as_ref().expect("validated") {
        OracleSection::S1Convergence { profile, riccati_control } => {
            let grid = cfg.grid.expect("validated");
            let circle = TargetManifold::sphere_extrinsic(2)?;
            if let Some(t) = &cfg.target {
                if t.build()?.descriptor() != circle.descriptor() {
                    return Err(CliError::Config("s1_convergence runs on the circle `sphere` with m = 2".into()));
                }
            }
            let mut rows = Vec::new();
            for &h in &cfg.sweeps.h {
                let data = s1_data(profile, grid.x_min, grid.x_max, 0.5 * h)?;
                let phi = solve(&data, &circle, grid.t_max, h, &SolveOptions::default())?;
                let exact = s1_exact(profile, &phi.grid)?;
                let error = phi.difference(&exact)?.sup_norm();
                let p = pohlmeyer_check(&phi)?;
                let pohlmeyer_constant = p.residual_u().max(p.residual_v()) / (h * h);
                let riccati_variation = match riccati_control {
                    Some(c) => {
                        let r = riccati_blowup(c, grid.x_min, grid.x_max, h, grid.t_max)?;
                        let q = pohlmeyer_check(&r.field)?;
                        Some(q.residual_u().max(q.residual_v()))
                    }
                    None => None,
                };
                rows.push(ConvergenceRow { h, error, pohlmeyer_constant, riccati_variation });
            }
            let mut ratios = Vec::new();
            for (k, r) in rows.iter().enumerate() {
                m.insert(format!("error_h{k}"), r.error);
                m.insert(format!("pohlmeyer_c_h{k}"), r.pohlmeyer_constant);
                if k > 0 {
                    let ratio = rows[k - 1].error / r.error;
                    m.insert(format!("ratio_{k}"), ratio);
                    ratios.push(ratio);
                }
            }
            m.insert("ratio_min".into(), ratios.iter().cloned().fold(f64::INFINITY, f64::min));
            m.insert("ratio_max".into(), ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
            let c: Vec<f64> = rows.iter().map(|r| r.pohlmeyer_constant).collect();
            m.insert("pohlmeyer_c_spread".into(), spread(&c));
            if riccati_control.is_some() {
                let margin = rows
                    .iter()
                    .map(|r| r.riccati_variation.unwrap_or(0.0) / (10.0 * r.pohlmeyer_constant * r.h * r.h))
                    .fold(f64::INFINITY, f64::min);
                m.insert("riccati_margin_min".into(), margin);
            }
            write_with(out, "convergence.csv", |w| {
                writeln!(w, "h,error,pohlmeyer_constant,riccati_variation")?;
                for r in &rows {
                    let rv = r.riccati_variation.map_or(String::new(), |v| format!("{v:e}"));
                    writeln!(w, "{},{:e},{:e},{rv}", r.h, r.error, r.pohlmeyer_constant)?;
                }
                Ok(())
            })?;
            write_json(out, "convergence.json", &rows)?;
        }
        OracleSection::Riccati { profile } => {
            let g = cfg.grid.expect("validated");
            let rep = riccati_blowup(profile, g.x_min, g.x_max, g.h, g.t_max)?;
            if let Some(t) = rep.blowup_time {
                m.insert("blowup_time".into(), t);
            }
            if let Some(trip) = rep.trip {
                m.insert("guard_trip_t".into(), trip.t);
            }
            m.insert("upwind_error".into(), rep.upwind_error);
            write_json(out, "riccati.json", &rep)?;
        }
        OracleSection::Nonscattering { profile, control, t_min, t_max, count, options } => {
            let ts = log_sweep(*t_min, *t_max, *count);
            let w = nonscattering_witness(profile, &ts, options)?;
            m.insert("floor".into(), w.floor);
            m.insert("max_per_t_defect".into(), w.max_per_t_defect());
            write_witness(out, "nonscattering", &w)?;
            if let Some(c) = control {
                let wc = nonscattering_witness(c, &ts, options)?;
                m.insert("control_floor".into(), wc.floor);
                m.insert("control_max_per_t_defect".into(), wc.max_per_t_defect());
                write_witness(out, "control", &wc)?;
            }
        }
    }
    Ok(m)
}

fn write_witness(out: &Path, stem: &str, w: &NonscatteringWitness) -> CliResult<()> {
    write_with(out, &format!("{stem}.csv"), |f| w.write_csv(f))?;
    write_json(out, &format!("{stem}.json"), w)
}

fn run_scatter(cfg: &RunConfig, out: &Path) -> CliResult<Metrics> {
    let s = setup(cfg, None)?;
    let sec = cfg.scatter.as_ref().expect("validated");
    let phi = solve(&s.data, &s.target, s.grid.t_max, s.grid.h, &sec.options)?;
    let rep = free_resolution_check(&phi, &s.data, sec.radius)?;
    let states = scattering_states(&phi, sec.radius)?;
    let defects = scattering_defect(&phi, &states, &cfg.sweeps.t)?;
    let energy = s.data.energy();
    let tol = 5.0 * s.grid.h * s.grid.h * energy;
    let strip = rep.strip_u.max(rep.strip_v);
    let quadrant = rep.quadrant_variation.iter().cloned().fold(0.0, f64::max);
    let defect = defects.max_beyond(sec.defect_from);
    let mut m = Metrics::new();
    m.insert("data_energy".into(), energy);
    m.insert("tolerance".into(), tol);
    m.insert("strip_residual".into(), strip);
    m.insert("quadrant_residual".into(), quadrant);
    m.insert("strip_ratio".into(), strip / tol);
    m.insert("defect_beyond".into(), defect);
    m.insert("defect_ratio".into(), defect / tol);
    m.insert("plus_energy_error".into(), (states.plus.energy() - energy).abs() / energy);
    m.insert("minus_energy_error".into(), (states.minus.energy() - energy).abs() / energy);
    m.insert("interaction_integral".into(), interaction_integral(&phi)?);
    write_json(out, "resolution.json", &rep)?;
    write_with(out, "defects.csv", |w| defects.write_csv(w))?;
    write_with(out, "state_plus.txt", |w| states.plus.write_profiles(w))?;
    write_with(out, "state_minus.txt", |w| states.minus.write_profiles(w))?;
    if let Some(c) = &sec.concentration {
        let conc = concentration_profile(&s.data, &s.target, &sec.deltas, c.epsilon)?;
        if let Some(r) = conc.localization_radius {
            m.insert("localization_radius".into(), r);
        }
        write_with(out, "concentration.csv", |w| conc.write_csv(w))?;
    }
    Ok(m)
}

fn growth_metrics(t: &GrowthTable, prefix: &str, m: &mut Metrics) {
    m.insert(format!("{prefix}growth"), t.relative_growth());
    m.insert(format!("{prefix}monotone"), flag(t.is_monotone()));
    let lim: Vec<f64> = t.rows.iter().map(|r| r.g_norm_sq_limit).collect();
    m.insert(format!("{prefix}g_limit_spread"), spread(&lim));
    if let (Some(a), Some(b)) = (t.rows.first(), t.rows.last()) {
        m.insert(format!("{prefix}q_norm_sq_first"), a.q_norm_sq);
        m.insert(format!("{prefix}q_norm_sq_last"), b.q_norm_sq);
    }
}

fn run_counterexample(cfg: &RunConfig, out: &Path) -> CliResult<Metrics> {
    let sec = cfg.counterexample.expect("validated");
    let mut m = Metrics::new();
    let mut tables = vec![("growth", "", critical_counterexample(sec.epsilon, &cfg.sweeps.n, false)?)];
    if sec.control {
        tables.push(("control", "control_", critical_counterexample(sec.epsilon, &cfg.sweeps.n, true)?));
    }
    for (stem, prefix, t) in &tables {
        growth_metrics(t, prefix, &mut m);
        write_with(out, &format!("{stem}.csv"), |w| t.write_csv(w))?;
        write_json(out, &format!("{stem}.json"), t)?;
    }
    Ok(m)
}
