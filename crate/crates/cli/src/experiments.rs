//! Dispatch from validated configs to the numerical modules.

use std::f64::consts::TAU;

use glt_core::basis::BasisIndexer;
use glt_core::filters_qa::{connected_correlation, decay_fit, filtered_from_columns, qa_transport, FilterScale, GroundColumns, StepFilterParams};
use glt_core::hall::{berry_curvature_grid, chern_number, hall_conductance, FluxFamily, FluxGrid, HallOptions, TwistedFamily, TwoLevelFamily};
use glt_core::lieb_robinson::{light_cone_profile, Evolver};
use glt_core::linalg::C64;
use glt_core::lsm::{flux_insertion_study, lsm_experiment, theta_grid, LsmReport};
use glt_core::models::{Model, ModelSpec};
use glt_core::operator::{embed, op_norm, LocalTerm};
use glt_core::spectral::{full_spectrum, ground_state, indexer_for, lowest_eigenpairs, SolverOptions};
use glt_core::sparse::Csr;
use glt_core::spin::{pauli, spin_matrices};
use ndarray::Array2;
use serde::Serialize;
use serde_json::json;

use crate::config::{Axis, BerryParams, ConfigError, CorrParams, ExperimentConfig, FlowParams, HallParams, LrParams, LsmParams, Params, TransportParams};
use crate::output::{json, num, Artifact, Csv, Stamp};

/// Why a run stopped.
#[derive(Debug)]
pub enum RunError {
    /// The config is well-formed but names something the model cannot provide.
    Config(ConfigError),
    Numeric(glt_core::Error),
}

impl From<glt_core::Error> for RunError {
    fn from(e: glt_core::Error) -> Self {
        RunError::Numeric(e)
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

type Run<T> = std::result::Result<T, RunError>;

fn config_err(message: impl Into<String>) -> RunError {
    RunError::Config(ConfigError::new(message))
}

/// Model construction failures are schema problems, not numerical ones.
fn build(spec: &ModelSpec) -> Run<Option<Model>> {
    spec.build().map_err(|e| config_err(format!("[model]: {e}")))
}

fn lattice_model(spec: &ModelSpec) -> Run<Model> {
    build(spec)?.ok_or_else(|| config_err(format!("model `{}` has no lattice", spec.name())))
}

fn half_filling(m: &Model) -> i64 {
    (m.hamiltonian.lattice().n_sites() as f64 * m.charge.q_max() / 2.0).floor() as i64
}

/// Runs an experiment and returns its artifacts; nothing touches the disk.
pub fn run(cfg: &ExperimentConfig) -> Run<Vec<Artifact>> {
    let stamp = Stamp { experiment: cfg.kind, hash: cfg.hash.clone(), seed: cfg.seed };
    let opts = SolverOptions::with_seed(cfg.seed);
    match &cfg.params {
        Params::LrBound(p) => lr_bound(&stamp, &cfg.model, p),
        Params::CorrDecay(p) => corr_decay(&stamp, &cfg.model, p, &opts),
        Params::Lsm(p) => lsm(&stamp, &cfg.model, p, &opts),
        Params::SpectralFlow(p) => spectral_flow(&stamp, &cfg.model, p, &opts),
        Params::Berry(p) => berry(&stamp, &cfg.model, p, &opts),
        Params::Hall(p) => hall(&stamp, &cfg.model, p, &opts),
        Params::Transport(p) => transport(&stamp, &cfg.model, p),
    }
}

fn site_at_distance(m: &Model, site: usize, d: usize) -> Run<usize> {
    let lat = m.hamiltonian.lattice();
    if site >= lat.n_sites() {
        return Err(config_err(format!("params.site = {site} is outside the lattice")));
    }
    (0..lat.n_sites())
        .find(|&j| lat.dist(site, j) == d)
        .ok_or_else(|| config_err(format!("no site at distance {d} from site {site}")))
}

fn lr_bound(stamp: &Stamp, spec: &ModelSpec, p: &LrParams) -> Run<Vec<Artifact>> {
    let m = lattice_model(spec)?;
    let h = &m.hamiltonian;
    let lat = h.lattice();
    let targets: Vec<usize> = p.distances.iter().map(|&d| site_at_distance(&m, p.site, d)).collect::<Run<_>>()?;
    let sz = |k: usize| -> Run<LocalTerm> {
        let s = (lat.local_dim(k) - 1) as f64 / 2.0;
        Ok(LocalTerm::new(spin_matrices(s)?.2, &[k], lat)?)
    };
    let evolver = Evolver::new(h, Some(&m.charge))?;
    let a = sz(p.site)?;
    let mut cols = vec!["distance", "site_b", "t", "exact", "series_partial", "series_tail", "series_total", "series_k_max", "series_mu"];
    let mu_cols: Vec<String> = p.mu_grid.iter().map(|mu| format!("exp_bound_mu_{mu}")).collect();
    cols.extend(mu_cols.iter().map(String::as_str));
    cols.extend(["exp_min", "violations"]);
    let mut csv = Csv::new(stamp, &cols);
    for (&d, &j) in p.distances.iter().zip(&targets) {
        let prof = light_cone_profile(&evolver, h, &a, &sz(j)?, &p.times, p.k_max, &p.mu_grid)?;
        for (k, &t) in prof.times.iter().enumerate() {
            let e = prof.exact[k];
            let s = &prof.series[k];
            let slack = 1e-12 * (1.0 + e);
            let bounds = &prof.exp_bounds[k];
            let violations = usize::from(e > s.total() + slack) + bounds.iter().filter(|b| e > b.value + slack).count();
            let mut row = vec![d.to_string(), j.to_string(), num(t), num(e), num(s.partial_sum), num(s.tail), num(s.total()), s.k_max.to_string(), num(s.mu)];
            row.extend(bounds.iter().map(|b| num(b.value)));
            row.push(num(prof.exp_min(k)));
            row.push(violations.to_string());
            csv.row(&row);
        }
    }
    Ok(vec![csv.finish("lightcone.csv")])
}

fn single_site_operator(axis: Axis, local_dim: usize) -> Run<Array2<C64>> {
    let (x, y, z) = if local_dim == 2 { pauli() } else { spin_matrices((local_dim - 1) as f64 / 2.0)? };
    Ok(match axis {
        Axis::X => x,
        Axis::Y => y,
        Axis::Z => z,
    })
}

#[derive(Serialize)]
struct PairFit {
    a: Axis,
    b: Axis,
    #[serde(flatten)]
    fit: Fit,
}

#[derive(Serialize)]
struct Fit {
    correlation_length: Option<f64>,
    prefactor: Option<f64>,
    residual: Option<f64>,
    no_decay: Option<bool>,
    /// Set when some connected correlation vanishes and no fit is possible.
    skipped: bool,
}

/// Fit of `|C(ℓ)|` at `ℓ = 1, 2, ...`; skipped when some magnitude vanishes.
fn pair_fit_of(mags: &[f64]) -> Run<Fit> {
    let top = mags.iter().copied().fold(0.0, f64::max);
    let fit = if top > 1e-14 && mags.iter().all(|&x| x > 1e-13 * top) {
        let dists: Vec<f64> = (1..=mags.len()).map(|d| d as f64).collect();
        Some(decay_fit(&dists, mags)?)
    } else {
        None
    };
    Ok(Fit {
        correlation_length: fit.as_ref().map(|f| f.correlation_length),
        prefactor: fit.as_ref().map(|f| f.prefactor),
        residual: fit.as_ref().map(|f| f.residual),
        no_decay: fit.as_ref().map(|f| f.no_decay),
        skipped: fit.is_none(),
    })
}

fn pair_fit(a: Axis, b: Axis, mags: &[f64]) -> Run<PairFit> {
    Ok(PairFit { a, b, fit: pair_fit_of(mags)? })
}

fn corr_decay(stamp: &Stamp, spec: &ModelSpec, p: &CorrParams, opts: &SolverOptions) -> Run<Vec<Artifact>> {
    let m = lattice_model(spec)?;
    let h = &m.hamiltonian;
    let lat = h.lattice();
    let max_d = p.max_distance.unwrap_or(lat.n_sites() / 2);
    let targets: Vec<usize> = (1..=max_d).map(|d| site_at_distance(&m, p.site, d)).collect::<Run<_>>()?;
    // The antipode of a ring sees both images of the decay.
    let fit_max = p.fit_max_distance.unwrap_or(match lat.cycle_period() {
        Some(l) if 2 * max_d >= l => l.div_ceil(2) - 1,
        _ => max_d,
    });
    if fit_max > max_d || fit_max < 3 {
        return Err(config_err(format!("decay fit over distances 1..={fit_max} needs 3 <= fit_max_distance <= max_distance = {max_d}")));
    }
    let mut envelope = vec![0.0f64; max_d];
    let idx = BasisIndexer::full(lat.local_dims())?;
    let hm = h.to_csr(&idx);
    let spectrum = full_spectrum(&hm)?;
    let ground = lowest_eigenpairs(&hm, 2, opts)?;
    let gap = spectrum.values[1] - spectrum.values[0];
    let mut axes = p.operators.clone();
    axes.sort();
    axes.dedup();
    let mut csv = Csv::new(stamp, &["a", "b", "distance", "site_b", "alpha", "connected_re", "connected_im", "filtered_re", "filtered_im", "difference", "bound"]);
    let mut fits = Vec::new();
    let mut worst_ratio: f64 = 0.0;
    let mut ops = Vec::new();
    for &ax in &axes {
        let mut row = Vec::new();
        for &j in std::iter::once(&p.site).chain(&targets) {
            let op = embed(&single_site_operator(ax, lat.local_dim(j))?, &[j], lat, &idx)?;
            let cols = GroundColumns::new(&op, &spectrum)?;
            let norm = op_norm(&op.matrix)?;
            row.push((op, cols, norm));
        }
        ops.push(row);
    }
    for (ia, &ax) in axes.iter().enumerate() {
        for (ib, &bx) in axes.iter().enumerate() {
            let (a, a_cols, a_norm) = &ops[ia][0];
            let mut mags = Vec::new();
            for (d, &j) in (1..=max_d).zip(&targets) {
                let (b, b_cols, b_norm) = &ops[ib][d];
                let scale = 2.0 * a_norm * b_norm;
                let conn = connected_correlation(a, b, &ground)?;
                mags.push(conn.norm());
                for &f in &p.alpha_fractions {
                    let alpha = f * gap * gap;
                    let filt = filtered_from_columns(a_cols, b_cols, &spectrum, alpha)?;
                    let diff = (filt - conn).norm();
                    let bound = scale * StepFilterParams::new(alpha, gap)?.error_scale();
                    worst_ratio = worst_ratio.max(diff / bound);
                    csv.row(&[
                        format!("{ax:?}").to_lowercase(),
                        format!("{bx:?}").to_lowercase(),
                        d.to_string(),
                        j.to_string(),
                        num(alpha),
                        num(conn.re),
                        num(conn.im),
                        num(filt.re),
                        num(filt.im),
                        num(diff),
                        num(bound),
                    ]);
                }
            }
            fits.push(pair_fit(ax, bx, &mags[..fit_max])?);
            for (e, m) in envelope.iter_mut().zip(&mags) {
                *e = (*e).max(*m);
            }
        }
    }
    let envelope_fit = pair_fit_of(&envelope[..fit_max])?;
    let summary = json!({
        "gap": gap,
        "ground_energy": spectrum.values[0],
        "site": p.site,
        "max_distance": max_d,
        "fit_max_distance": fit_max,
        "max_difference_over_bound": worst_ratio,
        "envelope": envelope,
        "envelope_fit": envelope_fit,
        "fits": fits,
    });
    Ok(vec![csv.finish("correlations.csv"), json(stamp, "decay_fit.json", &summary)])
}

fn with_length(spec: &ModelSpec, l: usize) -> Run<ModelSpec> {
    let mut s = spec.clone();
    match &mut s {
        ModelSpec::MajumdarGhosh { l: x, .. } | ModelSpec::Heisenberg { l: x, .. } | ModelSpec::TransverseIsing { l: x, .. } => *x = l,
        _ => return Err(config_err(format!("model `{}` has no chain length", spec.name()))),
    }
    Ok(s)
}

fn model_length(spec: &ModelSpec) -> Option<usize> {
    match *spec {
        ModelSpec::MajumdarGhosh { l, .. } | ModelSpec::Heisenberg { l, .. } | ModelSpec::TransverseIsing { l, .. } => Some(l),
        _ => None,
    }
}

fn lsm(stamp: &Stamp, spec: &ModelSpec, p: &LsmParams, opts: &SolverOptions) -> Run<Vec<Artifact>> {
    let sizes = match &p.sizes {
        Some(s) => s.clone(),
        None => vec![model_length(spec).ok_or_else(|| config_err("model has no chain length"))?],
    };
    let mut reports: Vec<(Option<i64>, LsmReport)> = Vec::new();
    for &l in &sizes {
        let m = lattice_model(&with_length(spec, l)?)?;
        let sector = p.sector.unwrap_or_else(|| half_filling(&m));
        let idx = indexer_for(&m.hamiltonian, Some((&m.charge, sector)))?;
        let spectral = ground_state(&m.hamiltonian, Some((&m.charge, sector)), 4.min(idx.dim()), opts)?;
        reports.push((Some(sector), lsm_experiment(&m.hamiltonian, &m.charge, &idx, &spectral)?));
    }
    let mut csv = Csv::new(stamp, &["l", "sector", "e0", "gap", "e_var_avg_minus_e0", "scaled_gap", "bound_value", "bound_holds", "overlap", "phase_identity_error"]);
    for (sector, r) in &reports {
        csv.row(&[
            r.l.to_string(),
            sector.map_or(String::new(), |s| s.to_string()),
            num(r.e0),
            num(r.gap),
            num(r.e_var_avg - r.e0),
            num(r.scaled_gap),
            num(r.bound_value),
            r.bound_holds.to_string(),
            num(r.overlap),
            num(r.phase_identity_error),
        ]);
    }
    let scaled: Vec<f64> = reports.iter().map(|r| r.1.scaled_gap).collect();
    let lo = scaled.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let summary = json!({
        "reports": reports.iter().map(|r| &r.1).collect::<Vec<_>>(),
        "max_overlap": reports.iter().map(|r| r.1.overlap).fold(0.0, f64::max),
        "scaled_gap_spread": hi / lo,
        "all_bounds_hold": reports.iter().all(|r| r.1.bound_holds),
    });
    Ok(vec![json(stamp, "lsm_report.json", &summary), csv.finish("lsm_sweep.csv")])
}

fn spectral_flow(stamp: &Stamp, spec: &ModelSpec, p: &FlowParams, opts: &SolverOptions) -> Run<Vec<Artifact>> {
    let m = lattice_model(spec)?;
    let sector = p.sector.unwrap_or_else(|| half_filling(&m));
    let study = flux_insertion_study(&m.hamiltonian, &m.charge, sector, &theta_grid(p.grid_points), p.levels, opts)?;
    let mut csv = Csv::new(stamp, &["family", "theta", "level", "energy"]);
    for (family, flow) in [("single", &study.flow), ("opposite", &study.flow_opposite)] {
        for pt in flow {
            for (k, e) in pt.energies.iter().enumerate() {
                csv.row(&[family.to_string(), num(pt.theta), k.to_string(), num(*e)]);
            }
        }
    }
    let mut summary = serde_json::to_value(&study).expect("serializable study");
    if let Some(o) = summary.as_object_mut() {
        o.remove("flow");
        o.remove("flow_opposite");
        o.insert("sector".into(), sector.into());
        o.insert("grid_points".into(), p.grid_points.into());
    }
    Ok(vec![csv.finish("spectral_flow.csv"), json(stamp, "spectral_flow.json", &summary)])
}

#[allow(clippy::large_enum_variant)]
enum Family {
    TwoLevel(TwoLevelFamily),
    Twisted(TwistedFamily, i64),
}

impl Family {
    fn get(&self) -> &dyn FluxFamily {
        match self {
            Family::TwoLevel(f) => f,
            Family::Twisted(f, _) => f,
        }
    }

    fn sector(&self) -> Option<i64> {
        match self {
            Family::TwoLevel(_) => None,
            Family::Twisted(_, s) => Some(*s),
        }
    }
}

fn flux_family(spec: &ModelSpec, sector: Option<i64>) -> Run<Family> {
    if let ModelSpec::TwoLevel { mass } = *spec {
        return Ok(Family::TwoLevel(TwoLevelFamily::new(mass)));
    }
    let m = lattice_model(spec)?;
    let sector = sector.unwrap_or_else(|| half_filling(&m));
    Ok(Family::Twisted(TwistedFamily::new(m.hamiltonian, m.charge, sector)?, sector))
}

fn grid_csv(stamp: &Stamp, grid: &FluxGrid) -> Artifact {
    let mut csv = Csv::new(stamp, &["theta", "phi", "plaquette_phase", "gap"]);
    for k in 0..grid.n * grid.n {
        let (a, b) = (k / grid.n, k % grid.n);
        csv.row(&[num(grid.angle(a)), num(grid.angle(b)), num(grid.plaquettes[k]), num(grid.gaps[k])]);
    }
    csv.finish("berry_grid.csv")
}

fn berry(stamp: &Stamp, spec: &ModelSpec, p: &BerryParams, opts: &SolverOptions) -> Run<Vec<Artifact>> {
    let fam = flux_family(spec, p.sector)?;
    let grid = berry_curvature_grid(fam.get(), p.n, opts)?;
    let (chern, deviation) = chern_number(&grid)?;
    let summary = json!({
        "n": grid.n,
        "sector": fam.sector(),
        "chern": chern,
        "chern_sum": grid.chern,
        "deviation": deviation,
        "min_gap": grid.min_gap,
        "stokes_deviation": grid.stokes_deviation(),
        "under_resolved": grid.under_resolved,
        "max_residual": grid.max_residual,
    });
    Ok(vec![grid_csv(stamp, &grid), json(stamp, "berry_summary.json", &summary)])
}

fn hall(stamp: &Stamp, spec: &ModelSpec, p: &HallParams, opts: &SolverOptions) -> Run<Vec<Artifact>> {
    let fam = flux_family(spec, p.sector)?;
    let ho = HallOptions {
        n: p.n,
        radius: p.radius,
        steps: p.steps,
        scale: FilterScale::GapFraction(p.delta_fraction),
        tiling_steps: p.tiling_steps,
    };
    let (result, grid) = hall_conductance(fam.get(), &ho, opts)?;
    let summary = json!({
        "sector": fam.sector(),
        "n": p.n,
        "radius": p.radius.unwrap_or(TAU / p.n as f64),
        "hall": result,
        "chern_sum": grid.chern,
    });
    Ok(vec![json(stamp, "hall.json", &summary), grid_csv(stamp, &grid)])
}

#[derive(Serialize)]
struct TransportRow {
    steps: usize,
    fidelity: f64,
    phase: f64,
    delta: f64,
    min_gap: f64,
    unitarity_defect: f64,
    max_generator_norm: f64,
}

fn transport(stamp: &Stamp, spec: &ModelSpec, p: &TransportParams) -> Run<Vec<Artifact>> {
    let m0 = lattice_model(spec)?;
    let m1 = lattice_model(&p.target)?;
    let (h0, h1) = (&m0.hamiltonian, &m1.hamiltonian);
    if h0.lattice().local_dims() != h1.lattice().local_dims() {
        return Err(config_err("params.target must live on the same sites as [model]"));
    }
    let idx = match p.sector {
        Some(q) => {
            if !(h0.conserves(&m0.charge) && h1.conserves(&m0.charge)) {
                return Err(config_err("params.sector needs a charge conserved along the whole path"));
            }
            indexer_for(h0, Some((&m0.charge, q)))?
        }
        None => BasisIndexer::full(h0.lattice().local_dims())?,
    };
    let (a, b) = (h0.to_csr(&idx), h1.to_csr(&idx));
    let dh = b.sub(&a);
    let path = |s: f64| -> glt_core::Result<(Csr, Csr)> { Ok((a.lincomb(C64::new(1.0 - s, 0.0), &b, C64::new(s, 0.0)), dh.clone())) };
    let mut rows = Vec::new();
    for &n in &p.steps {
        let r = qa_transport(path, n, FilterScale::GapFraction(p.delta_fraction))?;
        rows.push(TransportRow {
            steps: n,
            fidelity: r.fidelity,
            phase: r.phase,
            delta: r.delta,
            min_gap: r.min_gap,
            unitarity_defect: r.unitarity_defect,
            max_generator_norm: r.generator_norms.iter().copied().fold(0.0, f64::max),
        });
    }
    let mut order: Vec<&TransportRow> = rows.iter().collect();
    order.sort_by_key(|r| r.steps);
    let monotone = order.windows(2).all(|w| w[1].fidelity >= w[0].fidelity);
    let summary = json!({
        "start": spec,
        "target": p.target,
        "sector": p.sector,
        "dimension": idx.dim(),
        "runs": rows,
        "fidelity_monotone_in_steps": monotone,
    });
    Ok(vec![json(stamp, "transport.json", &summary)])
}
