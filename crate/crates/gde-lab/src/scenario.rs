//! Scenario drivers. Each one builds its model from the config, runs the
//! pipeline against an independent reference, and returns checks plus
//! buffered artifacts; nothing touches the filesystem here except reading
//! a coupling CSV, so a failed run leaves no partial outputs behind.

use crate::config::{Scenario, ScenarioConfig};
use crate::report::Check;
use gde_core::basis::FreeBasis;
use gde_core::bound_states::{analyze_level, extract_channel, find_pole, ChannelFunctions};
use gde_core::energy::{
    dt_dz_residual, evolution_from_green, green_line_from_t, lippmann_schwinger_oracle,
    solve_t_ode, ZContour,
};
use gde_core::error::{GdeError, Result};
use gde_core::interaction::{operator_from_csv, InteractionModel};
use gde_core::linalg::{vdot, CMatrix};
use gde_core::ode::OdeSettings;
use gde_core::rng::SplitMix64;
use gde_core::shift::{
    divergence_demo, dynamical_shift_contour, partial_window_integral, scaling_report,
    SelfEnergyModel,
};
use gde_core::time_domain::{
    assemble_evolution, laplace_crosscheck, propagate_kernel, seed_kernel, TimeGrid,
};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

pub struct ScenarioOutcome {
    pub checks: Vec<Check>,
    pub results: BTreeMap<String, f64>,
    /// (file name, contents); the caller writes these only after the
    /// scenario finishes cleanly.
    pub artifacts: Vec<(String, String)>,
}

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn rel_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.sub(b).frobenius() / b.frobenius().max(1e-300)
}

/// Hermitian coupling drawn entrywise from the seeded generator, then
/// scaled to the requested Frobenius norm. The layout (diagonal first,
/// then the upper triangle row by row) is part of the reproducibility
/// contract: a config with the same seed always gets the same operator.
fn seeded_hermitian(rng: &mut SplitMix64, dim: usize, norm: f64) -> CMatrix {
    let mut h = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        h[(i, i)] = c64(rng.uniform(-1.0, 1.0), 0.0);
        for j in (i + 1)..dim {
            let v = c64(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
            h[(i, j)] = v;
            h[(j, i)] = v.conj();
        }
    }
    let f = h.frobenius();
    h.scale(c64(norm / f, 0.0))
}

struct BuiltModel {
    model: InteractionModel,
    /// Coupling operator for the matrix kinds; None for rank-one.
    coupling: Option<CMatrix>,
}

fn build_interaction(cfg: &ScenarioConfig, basis: &FreeBasis, config_dir: &Path) -> Result<BuiltModel> {
    let spec = cfg
        .interaction
        .as_ref()
        .ok_or_else(|| GdeError::InvalidModel("interaction section missing".into()))?;
    let dim = basis.dimension();

    if spec.kind == "rank-one" {
        let raw = spec
            .phi
            .as_ref()
            .ok_or_else(|| GdeError::InvalidModel("rank-one needs phi".into()))?;
        let phi: Vec<Complex64> = raw.chunks(2).map(|p| c64(p[0], p[1])).collect();
        let g = spec
            .g
            .ok_or_else(|| GdeError::InvalidModel("rank-one needs g".into()))?;
        let model = InteractionModel::rank_one(dim, &phi, g, spec.theta)?;
        return Ok(BuiltModel {
            model,
            coupling: None,
        });
    }

    let h = match (&spec.coupling_csv, spec.strength) {
        (Some(path), _) => {
            let resolved = config_dir.join(path);
            let text = std::fs::read_to_string(&resolved).map_err(|e| {
                GdeError::Parse(format!("coupling_csv {}: {e}", resolved.display()))
            })?;
            let h = operator_from_csv(&text)?;
            if h.rows() != dim {
                return Err(GdeError::InvalidModel(format!(
                    "coupling operator is {}x{}, basis dimension is {dim}",
                    h.rows(),
                    h.cols()
                )));
            }
            h
        }
        (None, Some(strength)) => {
            let mut rng = SplitMix64::new(cfg.seed);
            seeded_hermitian(&mut rng, dim, strength * basis.min_gap())
        }
        (None, None) => {
            return Err(GdeError::InvalidModel(
                "interaction needs strength or coupling_csv".into(),
            ))
        }
    };

    let model = match spec.kind.as_str() {
        "instantaneous" => InteractionModel::instantaneous(h.clone())?,
        "exponential" => InteractionModel::exponential(
            h.clone(),
            spec.theta
                .ok_or_else(|| GdeError::InvalidModel("exponential needs theta".into()))?,
        )?,
        other => {
            return Err(GdeError::InvalidModel(format!(
                "unknown interaction kind {other}"
            )))
        }
    };
    Ok(BuiltModel {
        model,
        coupling: Some(h),
    })
}

fn ode_settings(cfg: &ScenarioConfig) -> OdeSettings {
    OdeSettings {
        rtol: cfg.solver.rtol,
        atol: cfg.solver.atol,
        ..OdeSettings::default()
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

pub fn run_scenario(
    scenario: Scenario,
    cfg: &ScenarioConfig,
    config_dir: &Path,
) -> Result<ScenarioOutcome> {
    match scenario {
        Scenario::Equivalence => equivalence(cfg, config_dir),
        Scenario::BoundState => bound_state(cfg, config_dir),
        Scenario::Evolve => evolve(cfg, config_dir),
        Scenario::Shift => shift(cfg),
        Scenario::Divergence => divergence(cfg),
        Scenario::Crosscheck => crosscheck(cfg, config_dir),
    }
}

/// Flow solution against the direct resolvent solve at every contour
/// sample, flow defect at the interior points, and Green-operator poles
/// against the eigensolver.
fn equivalence(cfg: &ScenarioConfig, config_dir: &Path) -> Result<ScenarioOutcome> {
    const T_TOL: f64 = 1e-6;
    const DEFECT_TOL: f64 = 1e-6;
    const POLE_TOL: f64 = 1e-8;

    let basis = cfg.basis.build()?;
    let built = build_interaction(cfg, &basis, config_dir)?;
    let h = built
        .coupling
        .ok_or_else(|| GdeError::InvalidModel("equivalence needs a matrix coupling".into()))?;

    let radius = cfg.solver.radius_scale * basis.scale();
    let contour = ZContour::standard_sweep(&basis, radius, cfg.solver.contour_points)?;
    let sol = solve_t_ode(&built.model, &basis, &contour, &ode_settings(cfg))?;

    let mut csv = String::from("re_z,im_z,deviation\n");
    let mut worst_t = 0.0_f64;
    for (k, z) in contour.sample_points.iter().enumerate() {
        let oracle = lippmann_schwinger_oracle(&h, &basis, *z)?;
        let dev = rel_diff(&sol.samples[k], &oracle);
        worst_t = worst_t.max(dev);
        let _ = writeln!(csv, "{},{},{}", num(z.re), num(z.im), num(dev));
    }

    let mut worst_defect = 0.0_f64;
    for k in 1..contour.sample_points.len() - 1 {
        worst_defect = worst_defect.max(dt_dz_residual(&sol, contour.sample_points[k])?);
    }

    let (eigs, _) = basis.h0().add(&h).eigh();
    let z_a = c64(0.0, 10.0 * radius);
    let t_a = built.model.b_of_z(z_a)?;
    let mut worst_pole = 0.0_f64;
    for n in 0..basis.dimension() {
        let ch = ChannelFunctions::from_anchor(&basis, n, z_a, t_a.clone())?;
        let (pole, _) = find_pole(&ch)?;
        worst_pole = worst_pole.max((pole - eigs[n]).norm());
    }

    let mut results = BTreeMap::new();
    results.insert("dimension".into(), basis.dimension() as f64);
    results.insert("max_t_deviation".into(), worst_t);
    results.insert("max_flow_defect".into(), worst_defect);
    results.insert("max_pole_deviation".into(), worst_pole);

    Ok(ScenarioOutcome {
        checks: vec![
            Check::at_most("flow_vs_direct_solve", worst_t, T_TOL),
            Check::at_most("interior_flow_defect", worst_defect, DEFECT_TOL),
            Check::at_most("poles_vs_eigenvalues", worst_pole, POLE_TOL),
        ],
        results,
        artifacts: vec![("deviation.csv".into(), csv)],
    })
}

/// Single-level pipeline: pole, residue projector, reconstructed state.
/// For instantaneous couplings the pole is also checked against the
/// eigensolver and the state against the spectral evolution.
fn bound_state(cfg: &ScenarioConfig, config_dir: &Path) -> Result<ScenarioOutcome> {
    const RESIDUE_TOL: f64 = 1e-6;
    const NORM_TOL: f64 = 1e-8;
    const POLE_TOL: f64 = 1e-8;
    const WIDTH_TOL: f64 = 1e-8;
    const STATIONARITY_TOL: f64 = 1e-3;

    let basis = cfg.basis.build()?;
    let built = build_interaction(cfg, &basis, config_dir)?;
    let level = cfg.solver.level;
    let radius = cfg.solver.radius_scale * basis.scale();

    // anchor a decade above the sweep radius: the seed truncation there is
    // what limits the absolute pole position
    let z_a = c64(0.0, 10.0 * radius);
    let t_a = built.model.b_of_z(z_a)?;
    let ch = ChannelFunctions::from_anchor(&basis, level, z_a, t_a)?;
    let result = analyze_level(&ch)?;
    let norm_err = (vdot(&result.psi, &result.psi_prime) - 1.0).norm();

    let mut checks = vec![
        Check::at_most("residue_projector", result.residue_defect, RESIDUE_TOL),
        Check::at_most("state_normalization", norm_err, NORM_TOL),
    ];

    let contour = ZContour::standard_sweep(&basis, radius, cfg.solver.contour_points)?;
    let sol = solve_t_ode(&built.model, &basis, &contour, &ode_settings(cfg))?;
    let channel = extract_channel(&sol, level)?;
    let mut csv = String::from("re_z,im_z,re_c,im_c\n");
    for (z, c) in channel.z_points.iter().zip(&channel.c_samples) {
        let _ = writeln!(csv, "{},{},{},{}", num(z.re), num(z.im), num(c.re), num(c.im));
    }

    if !built.model.is_nonlocal() {
        let h = built.coupling.as_ref().expect("matrix kind");
        let (eigs, _) = basis.h0().add(h).eigh();
        let pole_dev = (result.energy - eigs[level]).norm();
        checks.push(Check::at_most("pole_vs_eigenvalue", pole_dev, POLE_TOL));
        checks.push(Check::at_most(
            "hermitian_width",
            result.width.abs(),
            WIDTH_TOL,
        ));

        let s = basis.scale();
        let dim = basis.dimension();
        let e_lo = basis.energies()[0] - 0.5 * s;
        let e_hi = basis.energies()[dim - 1] + 0.5 * s;
        let eps = cfg.solver.epsilon_scale * basis.span();
        let line = green_line_from_t(&sol, e_lo, e_hi, eps, eps / 5.0)?;
        let samples: Vec<(f64, CMatrix)> = (0..=10)
            .map(|k| {
                let t = k as f64;
                Ok((t, evolution_from_green(&line, &basis, t)?))
            })
            .collect::<Result<_>>()?;
        let drift = gde_core::bound_states::stationarity_diagnostic(
            &samples,
            result.energy,
            &result.psi_prime,
        );
        checks.push(Check::at_most("stationarity_drift", drift, STATIONARITY_TOL));
    }

    let mut results = BTreeMap::new();
    results.insert("pole_energy_re".into(), result.energy.re);
    results.insert("pole_energy_im".into(), result.energy.im);
    results.insert("width".into(), result.width);
    results.insert("c0_re".into(), result.c0.re);
    results.insert("c0_im".into(), result.c0.im);
    results.insert("residue_defect".into(), result.residue_defect);
    results.insert("newton_iterations".into(), result.newton_iterations as f64);

    let pole_json = result.to_json();
    Ok(ScenarioOutcome {
        checks,
        results,
        artifacts: vec![("pole.json".into(), pole_json), ("channel.csv".into(), csv)],
    })
}

/// Causal march at the configured step and at half of it: the evolution
/// must start at the identity, stay unitary to second order, and the
/// defect must shrink like the step squared.
fn evolve(cfg: &ScenarioConfig, config_dir: &Path) -> Result<ScenarioOutcome> {
    const IDENTITY_TOL: f64 = 1e-14;
    const RATIO_CENTER: f64 = 4.0;
    const RATIO_HALF_WIDTH: f64 = 1.0;

    let basis = cfg.basis.build()?;
    let built = build_interaction(cfg, &basis, config_dir)?;
    let step = cfg.solver.time_step;
    let defect_tol = step * step;

    let march = |dt: f64| -> Result<_> {
        let grid = TimeGrid::new(0.0, cfg.solver.t_max, dt)?;
        let kernel = propagate_kernel(&seed_kernel(&built.model, &basis, &grid)?)?;
        assemble_evolution(&kernel)
    };
    let evo = march(step)?;
    let fine = march(0.5 * step)?;

    let dim = basis.dimension();
    let identity_err = evo.u[0].sub(&CMatrix::identity(dim)).max_abs();
    let coarse_defect = evo.max_defect();
    let fine_defect = fine.max_defect();
    let ratio = coarse_defect / fine_defect.max(1e-300);

    let mut csv = String::from("t,defect");
    for n in 0..dim {
        let _ = write!(csv, ",re_u{n}{n},im_u{n}{n}");
    }
    csv.push('\n');
    for (k, t) in evo.times.iter().enumerate() {
        let _ = write!(csv, "{},{}", num(*t), num(evo.unitarity_defect[k]));
        for n in 0..dim {
            let u = evo.u[k][(n, n)];
            let _ = write!(csv, ",{},{}", num(u.re), num(u.im));
        }
        csv.push('\n');
    }

    let mut results = BTreeMap::new();
    results.insert("max_defect".into(), coarse_defect);
    results.insert("fine_defect".into(), fine_defect);
    results.insert("halving_ratio".into(), ratio);

    Ok(ScenarioOutcome {
        checks: vec![
            Check::at_most("initial_identity", identity_err, IDENTITY_TOL),
            Check::at_most("unitarity_defect", coarse_defect, defect_tol).with_detail(
                format!("second-order march at step {step}; gate is step^2"),
            ),
            Check::in_band("halving_ratio", ratio, RATIO_CENTER, RATIO_HALF_WIDTH),
        ],
        results,
        artifacts: vec![("evolution.csv".into(), csv)],
    })
}

/// Dynamical correction for the regulated family: the contour-jump
/// derivative against a finite-difference oracle, stability under window
/// doubling, and saturation of the window integral across decades.
fn shift(cfg: &ScenarioConfig) -> Result<ScenarioOutcome> {
    const DERIVATIVE_TOL: f64 = 1e-4;
    const DOUBLING_TOL: f64 = 1e-6;
    const SATURATION_TOL: f64 = 0.1;

    let spec = cfg
        .self_energy
        .as_ref()
        .ok_or_else(|| GdeError::InvalidModel("self_energy section missing".into()))?;
    let lambda = spec
        .lambda
        .ok_or_else(|| GdeError::InvalidModel("regulated family needs lambda".into()))?;
    let model = SelfEnergyModel::regulated(spec.alpha, spec.mass, lambda)?;
    let e0 = spec.e0;
    let eps = cfg.solver.epsilon_scale * spec.mass;
    let r = 10.0 * lambda;

    let report = scaling_report(&model, e0)?;
    let (sp, _) = dynamical_shift_contour(&model, e0, r, eps)?;

    let fd = |h: f64| -> Result<f64> {
        let a = model.sigma(c64(e0 + h, 0.0))?;
        let b = model.sigma(c64(e0 - h, 0.0))?;
        Ok(((a - b) / (2.0 * h)).re)
    };
    let h = 1e-4 * spec.mass;
    let oracle = (4.0 * fd(0.5 * h)? - fd(h)?) / 3.0;
    let derivative_rel = (sp - oracle).norm() / oracle.abs().max(1e-300);

    let (sp_wide, _) = dynamical_shift_contour(&model, e0, 2.0 * r, eps)?;
    let doubling = (sp_wide - sp).norm() / sp.norm().max(1e-300);

    let i1 = partial_window_integral(&model, e0, 1e2 * spec.mass, eps)?;
    let i2 = partial_window_integral(&model, e0, 1e3 * spec.mass, eps)?;
    let i3 = partial_window_integral(&model, e0, 1e4 * spec.mass, eps)?;
    let saturation = (i3 - i2).norm() / (i2 - i1).norm().max(1e-300);

    let mut sweep_csv = String::from("lambda,re_delta_d,im_delta_d\n");
    for (l, d) in &report.lambda_sweep {
        let _ = writeln!(sweep_csv, "{},{},{}", num(*l), num(d.re), num(d.im));
    }
    let mut report_json =
        serde_json::to_string_pretty(&report).map_err(|e| GdeError::Parse(e.to_string()))?;
    report_json.push('\n');

    let mut results = BTreeMap::new();
    results.insert("delta0_re".into(), report.delta0.re);
    results.insert("delta0_im".into(), report.delta0.im);
    results.insert("delta2_re".into(), report.delta2.re);
    results.insert("delta2_im".into(), report.delta2.im);
    results.insert("delta_d_re".into(), report.delta_d.re);
    results.insert("delta_d_im".into(), report.delta_d.im);
    results.insert("sigma_prime_re".into(), sp.re);
    results.insert("sigma_prime_im".into(), sp.im);
    if let Some(a0) = report.a0 {
        results.insert("a0_re".into(), a0.re);
        results.insert("a0_im".into(), a0.im);
    }

    Ok(ScenarioOutcome {
        checks: vec![
            Check::at_most(
                "derivative_contour_vs_finite_difference",
                derivative_rel,
                DERIVATIVE_TOL,
            ),
            Check::at_most("window_doubling_stability", doubling, DOUBLING_TOL),
            Check::at_most("regulated_window_saturation", saturation, SATURATION_TOL),
        ],
        results,
        artifacts: vec![
            ("shift_report.json".into(), report_json),
            ("lambda_sweep.csv".into(), sweep_csv),
        ],
    })
}

/// Window integral without the cutoff: strictly growing across decades,
/// correlated with the squared log of the window, with the expected
/// log slope.
fn divergence(cfg: &ScenarioConfig) -> Result<ScenarioOutcome> {
    const CORRELATION_FLOOR: f64 = 0.99;
    const SLOPE_REL_BAND: f64 = 0.05;

    let spec = cfg
        .self_energy
        .as_ref()
        .ok_or_else(|| GdeError::InvalidModel("self_energy section missing".into()))?;
    let model = SelfEnergyModel::unregulated(spec.alpha, spec.mass)?;
    let record = divergence_demo(&model, spec.e0)?;

    let min_growth = record
        .values
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    // per decade, the window integral picks up alpha/4pi per unit of ln R
    let expected_slope = spec.alpha / (4.0 * std::f64::consts::PI);

    // same integrals with their phases, for the artifact
    let eps = 1e-3 * spec.mass;
    let mut csv = String::from("r,re_i,im_i\n");
    for &r in &record.windows {
        let v = partial_window_integral(&model, spec.e0, r, eps)?;
        let _ = writeln!(csv, "{},{},{}", num(r), num(v.re), num(v.im));
    }

    let mut results = BTreeMap::new();
    results.insert("growth_correlation".into(), record.growth_correlation);
    results.insert("log_slope".into(), record.log_slope);
    for (k, (r, v)) in record.windows.iter().zip(&record.values).enumerate() {
        results.insert(format!("window_{k}_r"), *r);
        results.insert(format!("window_{k}_value"), *v);
    }

    Ok(ScenarioOutcome {
        checks: vec![
            Check::at_least("window_growth", min_growth, f64::MIN_POSITIVE)
                .with_detail("smallest difference between successive window integrals".into()),
            Check::at_least(
                "growth_correlation",
                record.growth_correlation,
                CORRELATION_FLOOR,
            ),
            Check::in_band(
                "log_slope",
                record.log_slope / expected_slope,
                1.0,
                SLOPE_REL_BAND,
            )
            .with_detail(format!("slope {} against alpha/4pi", num(record.log_slope))),
        ],
        results,
        artifacts: vec![("divergence.csv".into(), csv)],
    })
}

/// Laplace transform of the marched time kernel against the energy-side
/// solution continued from the seeding anchor.
fn crosscheck(cfg: &ScenarioConfig, config_dir: &Path) -> Result<ScenarioOutcome> {
    const REL_TOL: f64 = 1e-3;

    let basis = cfg.basis.build()?;
    let built = build_interaction(cfg, &basis, config_dir)?;
    let grid = TimeGrid::new(0.0, cfg.solver.t_max, cfg.solver.time_step)?;
    let kernel = propagate_kernel(&seed_kernel(&built.model, &basis, &grid)?)?;

    let s = basis.scale();
    let z_b = c64(0.0, 160.0 * s);
    let t_b = built.model.b_of_z(z_b)?;

    // transform needs Im z * t_max >= 20 for a damped tail
    let im_floor = 20.5 / cfg.solver.t_max;
    let base = [(2.0, 2.0), (-1.0, 2.5), (0.5, 3.0), (3.0, 2.2), (1.0, 4.0)];
    let mut csv = String::from("re_z,im_z,deviation\n");
    let mut worst = 0.0_f64;
    for (re, im) in base {
        let z = c64(re * s, (im * s).max(im_floor));
        let lap = laplace_crosscheck(&kernel, z)?;
        let energy = gde_core::energy::continue_t(&basis, z_b, &t_b, z)?;
        let dev = rel_diff(&lap, &energy);
        worst = worst.max(dev);
        let _ = writeln!(csv, "{},{},{}", num(z.re), num(z.im), num(dev));
    }

    let mut results = BTreeMap::new();
    results.insert("max_deviation".into(), worst);

    Ok(ScenarioOutcome {
        checks: vec![Check::at_most("laplace_vs_continuation", worst, REL_TOL)],
        results,
        artifacts: vec![("crosscheck.csv".into(), csv)],
    })
}
