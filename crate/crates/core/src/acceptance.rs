//! Empirical acceptance suite: twelve measured criteria covering the
//! convergence orders, extrapolation gains, maximum principle, elliptic
//! fixed point, degenerate decoupling, expansion remainders, and exact
//! special cases. Every tolerance is pinned here.

use crate::coeff::CoefficientField;
use crate::config::{ExtrapolationChoice, StudyConfig};
use crate::elliptic::{
    contraction_factor, iteration_matrix_radius, solve_elliptic, EllipticProblem, IterationConfig,
};
use crate::error::Result;
use crate::expansion::{expansion_remainder, solve_coefficient_system, ExpansionConfig};
use crate::grid::GridSpec;
use crate::operator::remainder_oj;
use crate::parabolic::{max_principle_bound, ParabolicProblem, TimeIntegratorConfig};
use crate::presets::preset_config;
use crate::richardson::{tilde_coeffs, vandermonde_coeffs};
use crate::stencil::{OperatorContext, Stencil};
use crate::study::{build_elliptic, build_grid, build_parabolic, fitted_order, run_study};

#[derive(Clone, Debug)]
pub struct CriterionResult {
    pub label: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct AcceptanceOutcome {
    pub criteria: Vec<CriterionResult>,
}

impl AcceptanceOutcome {
    pub fn all_pass(&self) -> bool {
        self.criteria.iter().all(|c| c.pass)
    }

    /// One line per criterion, `PASS`/`FAIL` first.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.criteria {
            out.push_str(&format!(
                "{} {} ({})\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.label,
                c.detail
            ));
        }
        out
    }
}

fn outcome(label: &str, result: Result<(bool, String)>) -> CriterionResult {
    match result {
        Ok((pass, detail)) => CriterionResult {
            label: label.into(),
            pass,
            detail,
        },
        Err(e) => CriterionResult {
            label: label.into(),
            pass: false,
            detail: format!("error: {e}"),
        },
    }
}

pub fn run_all() -> AcceptanceOutcome {
    AcceptanceOutcome {
        criteria: vec![
            outcome("first_order_drift_upwind", first_order_drift()),
            outcome("second_order_symmetric", second_order_symmetric()),
            outcome("tilde_fourth_order", tilde_fourth_order()),
            outcome("full_extrapolation_k2", full_extrapolation_k2()),
            outcome("max_principle_bound", max_principle()),
            outcome("elliptic_fixed_point", elliptic_fixed_point()),
            outcome("degenerate_decoupling", degenerate_decoupling()),
            outcome("expansion_remainder_bounded", expansion_bounded()),
            outcome("odd_coefficient_vanishing", odd_coefficient_vanishing()),
            outcome("remainder_operator_order", remainder_operator_order()),
            outcome("weight_identities", weight_identities()),
            outcome("exact_special_cases", exact_special_cases()),
        ],
    }
}

fn study_order(cfg: &StudyConfig) -> Result<Option<f64>> {
    let report = run_study(cfg, true)?;
    Ok(fitted_order(&report.rows))
}

// criterion 1: one-sided drift converges at first order over
// h = 1/16 .. 1/128
fn first_order_drift() -> Result<(bool, String)> {
    let mut cfg = preset_config("drift-upwind").expect("preset");
    cfg.levels = 4;
    let order = study_order(&cfg)?;
    let pass = order.is_some_and(|s| (0.8..=1.2).contains(&s));
    Ok((pass, format!("fitted order {order:?}, window [0.8, 1.2]")))
}

// criterion 2: symmetric diffusion with antisymmetric drift structure
// converges at second order over the same meshes
fn second_order_symmetric() -> Result<(bool, String)> {
    let mut cfg = preset_config("heat1d-sym").expect("preset");
    cfg.levels = 4;
    let order = study_order(&cfg)?;
    let pass = order.is_some_and(|s| (1.8..=2.2).contains(&s));
    Ok((pass, format!("fitted order {order:?}, window [1.8, 2.2]")))
}

// criterion 3: the two-mesh combination (4/3) u_{h/2} - (1/3) u_h reaches
// fourth order on the symmetric preset; meshes below the integrator floor
// are dropped from the fit and reported
fn tilde_fourth_order() -> Result<(bool, String)> {
    let mut cfg = preset_config("heat1d-sym").expect("preset");
    cfg.cells = vec![8];
    cfg.mesh = 0.125;
    cfg.levels = 4;
    cfg.extrapolation = ExtrapolationChoice::Tilde;
    cfg.order = 3;
    let report = run_study(&cfg, true)?;
    let floored = report
        .rows
        .iter()
        .filter(|r| r.error_sup <= crate::study::ORDER_FLOOR)
        .count();
    let order = fitted_order(&report.rows);
    let pass = order.is_some_and(|s| (3.5..=4.5).contains(&s));
    Ok((
        pass,
        format!("fitted order {order:?}, window [3.5, 4.5], {floored} mesh(es) at floor"),
    ))
}

// criterion 4: full weights (1/3, -2, 8/3) on the skew preset (zero
// weighted-direction sum) give fitted order >= 2.5
fn full_extrapolation_k2() -> Result<(bool, String)> {
    let mut cfg = preset_config("skew").expect("preset");
    cfg.levels = 3;
    cfg.extrapolation = ExtrapolationChoice::Full;
    cfg.order = 2;
    let order = study_order(&cfg)?;
    let pass = order.is_some_and(|s| s >= 2.5);
    Ok((pass, format!("fitted order {order:?}, threshold 2.5")))
}

// criterion 5: with F = 1, C = 0, c = 1, v(0) = 0 the a priori bound is 1
// and the integrated solution must not exceed it by more than 1e-8
fn max_principle() -> Result<(bool, String)> {
    let mut details = Vec::new();
    let mut pass = true;
    for name in ["decay", "heat1d-sym"] {
        let cfg = preset_config(name).expect("preset");
        let mut p = build_parabolic(&cfg)?;
        p.g = CoefficientField::constant(0.0);
        let t = p.horizon;
        let report = max_principle_bound(
            &p,
            &TimeIntegratorConfig::default(),
            &CoefficientField::constant(0.0),
            &CoefficientField::constant(1.0),
            &[t * 0.25, t * 0.5, t * 0.75, t],
        )?;
        pass &= report.pass && (report.bound - 1.0).abs() < 1e-14;
        details.push(format!("{name}: excess {:.3e}", report.max_excess));
    }
    Ok((pass, format!("{}, tolerance 1e-8", details.join("; "))))
}

// criterion 6: the fixed-point solve meets defect <= 1e-8 on the elliptic
// presets and its iteration count stays within a factor 3 of the count
// predicted from the contraction factor
fn elliptic_fixed_point() -> Result<(bool, String)> {
    let cfg = preset_config("degenerate-ode").expect("preset");
    let p = build_elliptic(&cfg)?;
    let icfg = IterationConfig {
        tol: 1e-10,
        max_iters: Some(10_000_000),
    };
    let sol = solve_elliptic(&p, &icfg)?;
    let rho = contraction_factor(&p)?;
    // the asymptotic sweep contraction is the spectral radius of the
    // fixed-point map; the worst-row constant rho only upper-bounds it
    let radius = iteration_matrix_radius(&p, 5000)?;
    // first sweep from zero produces h^2 xi f; increments then shrink at
    // the asymptotic rate until they cross the stopping threshold
    let grid = build_grid(&cfg);
    let h2 = grid.mesh() * grid.mesh();
    let c = p.ctx.stencil.c().sample(&grid, 0.0)?;
    let f = p.f.sample(&grid, 0.0)?;
    let chis = p
        .ctx
        .stencil
        .directions()
        .iter()
        .map(|l| crate::stencil::chi(&p.ctx, l))
        .collect::<Result<Vec<_>>>()?;
    let mut d1 = 0.0f64;
    for k in 0..grid.len() {
        let chi_sum: f64 = chis.iter().map(|g| g.values()[k]).sum();
        d1 = d1.max(h2 * f.values()[k] / (h2 * c.values()[k] + chi_sum));
    }
    let stop = icfg.tol * (1.0 - rho) / rho;
    let predicted = 1.0 + (stop / d1).ln() / radius.ln();
    let bound = 1.0 + (stop / d1).ln() / rho.ln();
    let ratio = sol.iterations as f64 / predicted;
    let pass = sol.defect <= 1e-8
        && ratio <= 3.0
        && ratio >= 1.0 / 3.0
        && (sol.iterations as f64) <= bound.ceil() + 1.0;
    Ok((
        pass,
        format!(
            "defect {:.3e} (<= 1e-8), {} iterations vs {:.0} predicted (ratio {:.2}, window [1/3, 3]), \
             contraction-constant cap {:.0} respected",
            sol.defect, sol.iterations, predicted, ratio, bound
        ),
    ))
}

// criterion 7: with diffusion vanishing at x = +-1 the values on (-1, 1)
// are bitwise unaffected by changing f outside [-1, 1]
fn degenerate_decoupling() -> Result<(bool, String)> {
    let cfg = preset_config("degenerate-ode").expect("preset");
    let base = build_elliptic(&cfg)?;
    let mut perturbed = base.clone();
    // ((|x|-1)_+)^2: zero on [-1, 1], positive outside
    let bump = CoefficientField::parse("((abs(x1) - 1 + abs(abs(x1) - 1))/2)^2")?;
    perturbed.f = perturbed.f.lin_comb(1.0, &bump, 1.0)?;
    let icfg = IterationConfig::default();
    let a = solve_elliptic(&base, &icfg)?;
    let b = solve_elliptic(&perturbed, &icfg)?;
    let grid = a.v.spec().clone();
    let mut max_diff = 0.0f64;
    let mut exterior_diff = 0.0f64;
    for i in 0..grid.len() {
        let x = grid.point(i)[0];
        let d = (a.v.values()[i] - b.v.values()[i]).abs();
        if x > -1.0 && x < 1.0 {
            max_diff = max_diff.max(d);
        } else if x.abs() > 1.0 {
            exterior_diff = exterior_diff.max(d);
        }
    }
    let pass = max_diff <= 1e-13 && exterior_diff > 1e-6;
    Ok((
        pass,
        format!(
            "interior max diff {max_diff:.3e} (<= 1e-13), exterior diff {exterior_diff:.3e} (> 1e-6), iterations {}/{}",
            a.iterations, b.iterations
        ),
    ))
}

// criterion 8: scaled expansion remainders stay bounded (ratio <= 3) on
// the symmetric preset with k = 1; the one-sided negative control with a
// nonzero weighted-direction sum shows ratio >= 3 and reports FAIL
fn expansion_bounded() -> Result<(bool, String)> {
    let mut cfg = preset_config("heat1d-sym").expect("preset");
    cfg.cells = vec![8];
    cfg.mesh = 0.125;
    cfg.horizon = 0.1;
    let p = build_parabolic(&cfg)?;
    let ecfg = ExpansionConfig::default();
    let report = expansion_remainder(&p, 1, 3, &ecfg)?;

    // negative control: one-sided pure diffusion, sum lambda q = 1 != 0,
    // so the h-power expansion around the continuum operator breaks down
    let control_stencil = Stencil::new(
        vec![vec![1]],
        vec![CoefficientField::constant(1.0)],
        vec![CoefficientField::constant(0.0)],
        CoefficientField::constant(1.0),
    )?;
    let control = ParabolicProblem {
        ctx: OperatorContext::new(control_stencil, GridSpec::cube(1, 8, 0.125), 0.0, 0.125),
        f: p.f.clone(),
        g: p.g.clone(),
        horizon: 0.1,
    };
    let control_report = expansion_remainder(&control, 1, 3, &ecfg)?;
    let pass = report.pass && !control_report.pass && control_report.ratio >= 3.0;
    Ok((
        pass,
        format!(
            "ratio {:.3} (<= 3); negative control ratio {:.3} reported FAIL as expected",
            report.ratio, control_report.ratio
        ),
    ))
}

// criterion 9: symmetric stencil with antisymmetric drift has a vanishing
// first expansion coefficient: |u1| <= 1e-6 |u0|
fn odd_coefficient_vanishing() -> Result<(bool, String)> {
    let mut cfg = preset_config("skew").expect("preset");
    cfg.horizon = 0.1;
    let p = build_parabolic(&cfg)?;
    let ref_spec = build_grid(&cfg).refine(16);
    let coeffs = solve_coefficient_system(&p, 1, &ref_spec, &ExpansionConfig::default())?;
    let rel = coeffs[1].sup_norm() / coeffs[0].sup_norm();
    Ok((rel <= 1e-6, format!("|u1|/|u0| = {rel:.3e} (<= 1e-6)")))
}

// criterion 10: the defect of the j-th order mesh expansion of the
// operator scales like h^{j+1} on trigonometric data
fn remainder_operator_order() -> Result<(bool, String)> {
    // two-direction stencil with zero weighted sum and every Taylor
    // operator nonzero
    let stencil = Stencil::new(
        vec![vec![1], vec![-2]],
        vec![
            CoefficientField::constant(2.0),
            CoefficientField::constant(1.0),
        ],
        vec![
            CoefficientField::constant(1.0),
            CoefficientField::constant(0.3),
        ],
        CoefficientField::constant(1.0),
    )?;
    let phi = CoefficientField::parse("sin(6.283185307179586 * x1 + 0.3)")?;
    let mut details = Vec::new();
    let mut pass = true;
    for j in 0..=2usize {
        let mut pts = Vec::new();
        for level in 0..4 {
            let n = 16 << level;
            let grid = GridSpec::cube(1, n, 1.0 / n as f64);
            let ctx = OperatorContext::new(stencil.clone(), grid, 0.0, 1.0);
            let r = remainder_oj(&ctx, j, &phi, 8)?;
            pts.push((1.0 / n as f64, r.sup_norm()));
        }
        let slope = match crate::expansion::observed_order(&pts) {
            crate::expansion::OrderEstimate::Slope(s) => s,
            crate::expansion::OrderEstimate::BelowFloor => f64::NAN,
        };
        let target = (j + 1) as f64;
        pass &= (slope - target).abs() <= 0.4;
        details.push(format!("j={j}: slope {slope:.3} vs {target}"));
    }
    Ok((pass, format!("{}, window +-0.4", details.join("; "))))
}

// criterion 11: extrapolation weights satisfy their moment identities to
// 1e-12 for k <= 8 (full) and odd k <= 11 (halved-mesh variant)
fn weight_identities() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for k in 0..=8usize {
        let b: Vec<f64> = vandermonde_coeffs(k)?;
        worst = worst.max((b.iter().sum::<f64>() - 1.0).abs());
        for i in 1..=k {
            let m: f64 = b
                .iter()
                .enumerate()
                .map(|(j, &bj)| bj * 2.0f64.powi(-((i * j) as i32)))
                .sum();
            worst = worst.max(m.abs());
        }
    }
    for k in (1..=11usize).step_by(2) {
        let b: Vec<f64> = tilde_coeffs(k)?;
        worst = worst.max((b.iter().sum::<f64>() - 1.0).abs());
        for i in 1..=(k - 1) / 2 {
            let m: f64 = b
                .iter()
                .enumerate()
                .map(|(j, &bj)| bj * 4.0f64.powi(-((i * j) as i32)))
                .sum();
            worst = worst.max(m.abs());
        }
    }
    Ok((worst <= 1e-12, format!("worst moment residual {worst:.3e} (<= 1e-12)")))
}

// criterion 12: with no spatial operator the parabolic solution is
// g + T f to 1e-10, and with q = p = 0 the elliptic solution is f/c to
// 1e-12
fn exact_special_cases() -> Result<(bool, String)> {
    let cfg = preset_config("freeflow").expect("preset");
    let p = build_parabolic(&cfg)?;
    let tcfg = TimeIntegratorConfig {
        dt: Some(cfg.horizon / 4.0),
        ..Default::default()
    };
    let sol = crate::parabolic::solve_parabolic(&p, &tcfg, &[cfg.horizon])?;
    let grid = build_grid(&cfg);
    let g = p.g.sample(&grid, 0.0)?;
    let f = p.f.sample(&grid, 0.0)?;
    let expect = g.zip_map(&f, |gv, fv| gv + cfg.horizon * fv);
    let parab_err = sol.final_state().sub(&expect).sup_norm();

    let stencil = Stencil::new(
        vec![vec![1]],
        vec![CoefficientField::constant(0.0)],
        vec![CoefficientField::constant(0.0)],
        CoefficientField::constant(2.0),
    )?;
    let ell = EllipticProblem {
        ctx: OperatorContext::new(stencil, GridSpec::cube(1, 16, 1.0 / 16.0), 0.0, 1.0),
        f: CoefficientField::constant(4.0),
        c_floor: 1.0,
    };
    let esol = solve_elliptic(&ell, &IterationConfig::default())?;
    let ell_err = esol
        .v
        .values()
        .iter()
        .fold(0.0f64, |m, &v| m.max((v - 2.0f64).abs()));
    let pass = parab_err <= 1e-10 && ell_err <= 1e-12;
    Ok((
        pass,
        format!("freeflow error {parab_err:.3e} (<= 1e-10), elliptic error {ell_err:.3e} (<= 1e-12)"),
    ))
}
