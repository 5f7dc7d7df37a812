//! Study orchestration: build problems from a configuration, run them
//! across nested meshes, measure errors, and emit CSV or text reports.

use std::time::Instant;

use crate::coeff::CoefficientField;
use crate::config::{ExtrapolationChoice, ProblemKind, StudyConfig, StudyMode};
use crate::elliptic::{solve_elliptic, EllipticProblem, IterationConfig};
use crate::error::{Error, Result};
use crate::expansion::{expansion_remainder, ExpansionConfig, OrderEstimate};
use crate::grid::{GridFunction, GridSpec};
use crate::parabolic::{solve_parabolic, ParabolicProblem, TimeIntegratorConfig};
use crate::richardson::{
    solve_accelerated_elliptic, solve_accelerated_parabolic, ExtrapolationPlan, Variant,
};
use crate::stencil::{
    validate_consistency, validate_monotone, OperatorContext, Stencil,
};

/// Errors below this are treated as numerical floor when fitting orders.
pub const ORDER_FLOOR: f64 = 1e-12;

pub fn build_grid(cfg: &StudyConfig) -> GridSpec<f64> {
    let cells = if cfg.cells.len() == 1 {
        vec![cfg.cells[0]; cfg.dim]
    } else {
        cfg.cells.clone()
    };
    GridSpec::new(cells, cfg.mesh, cfg.origin.clone())
}

pub fn build_stencil(cfg: &StudyConfig) -> Result<Stencil<f64>> {
    Stencil::new(
        cfg.directions.clone(),
        cfg.q
            .iter()
            .map(|s| CoefficientField::parse(s))
            .collect::<Result<_>>()?,
        cfg.p
            .iter()
            .map(|s| CoefficientField::parse(s))
            .collect::<Result<_>>()?,
        CoefficientField::parse(&cfg.c)?,
    )
}

pub fn build_context(cfg: &StudyConfig) -> Result<OperatorContext<f64>> {
    Ok(OperatorContext::new(
        build_stencil(cfg)?,
        build_grid(cfg),
        0.0,
        cfg.mesh,
    ))
}

pub fn build_parabolic(cfg: &StudyConfig) -> Result<ParabolicProblem<f64>> {
    Ok(ParabolicProblem {
        ctx: build_context(cfg)?,
        f: CoefficientField::parse(&cfg.f)?,
        g: CoefficientField::parse(&cfg.g)?,
        horizon: cfg.horizon,
    })
}

pub fn build_elliptic(cfg: &StudyConfig) -> Result<EllipticProblem<f64>> {
    Ok(EllipticProblem {
        ctx: build_context(cfg)?,
        f: CoefficientField::parse(&cfg.f)?,
        c_floor: cfg.c_floor,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OrderCell {
    Absent,
    Value(f64),
    BelowFloor,
}

#[derive(Clone, Debug)]
pub struct StudyRow {
    pub h: f64,
    pub error_sup: f64,
    pub observed_order: OrderCell,
    pub wall_ms: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct ValidationFlags {
    pub monotone: bool,
    pub consistency: bool,
    pub condition_s: bool,
    pub p_antisym: bool,
}

#[derive(Clone, Debug)]
pub struct StudyReport {
    pub rows: Vec<StudyRow>,
    pub flags: ValidationFlags,
    /// (label, pass) verdict lines.
    pub verdicts: Vec<(String, bool)>,
    /// Suppress the wall-time column for byte-stable output.
    pub deterministic: bool,
}

impl StudyReport {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|&(_, p)| p)
    }
}

fn pairwise_order(prev: Option<(f64, f64)>, h: f64, e: f64) -> OrderCell {
    match prev {
        None => OrderCell::Absent,
        Some((hp, ep)) => {
            if e <= ORDER_FLOOR || ep <= ORDER_FLOOR {
                OrderCell::BelowFloor
            } else {
                OrderCell::Value((ep / e).ln() / (hp / h).ln())
            }
        }
    }
}

/// Least-squares slope over rows whose errors sit above the floor;
/// `None` when fewer than two usable rows remain.
pub fn fitted_order(rows: &[StudyRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.error_sup.is_finite() && r.error_sup > ORDER_FLOOR)
        .map(|r| (r.h, r.error_sup))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    match crate::expansion::observed_order(&pts) {
        OrderEstimate::Slope(s) => Some(s),
        OrderEstimate::BelowFloor => None,
    }
}

fn exact_field(cfg: &StudyConfig) -> Result<Option<CoefficientField<f64>>> {
    cfg.exact
        .as_ref()
        .map(|s| CoefficientField::parse(s))
        .transpose()
}

fn flags_for(cfg: &StudyConfig) -> Result<ValidationFlags> {
    let ctx = build_context(cfg)?;
    let times = [0.0, cfg.horizon.max(0.0)];
    Ok(ValidationFlags {
        monotone: validate_monotone(&ctx, &times)?.pass,
        consistency: validate_consistency(&ctx, &times)?.pass,
        condition_s: ctx.stencil.condition_s(&ctx.grid, &times)?,
        p_antisym: ctx.stencil.p_antisym(&ctx.grid, &times)?,
    })
}

/// Solve one level (with extrapolation when configured) and return the
/// solution on that level's grid.
fn solve_level(cfg: &StudyConfig, grid: GridSpec<f64>) -> Result<GridFunction<f64>> {
    let plan = match cfg.extrapolation {
        ExtrapolationChoice::None => None,
        ExtrapolationChoice::Full => Some(ExtrapolationPlan::new(
            cfg.order,
            Variant::Full,
            grid.mesh(),
        )?),
        ExtrapolationChoice::Tilde => Some(ExtrapolationPlan::new(
            cfg.order,
            Variant::Tilde,
            grid.mesh(),
        )?),
    };
    match cfg.kind {
        ProblemKind::Parabolic => {
            let mut p = build_parabolic(cfg)?;
            p.ctx = p.ctx.on_grid(grid);
            let tcfg = TimeIntegratorConfig::default();
            match plan {
                Some(plan) => solve_accelerated_parabolic(&p, &plan, &tcfg),
                None => Ok(solve_parabolic(&p, &tcfg, &[p.horizon])?
                    .final_state()
                    .clone()),
            }
        }
        ProblemKind::Elliptic => {
            let mut p = build_elliptic(cfg)?;
            p.ctx = p.ctx.on_grid(grid);
            let icfg = IterationConfig::default();
            match plan {
                Some(plan) => solve_accelerated_elliptic(&p, &plan, &icfg),
                None => Ok(solve_elliptic(&p, &icfg)?.v),
            }
        }
    }
}

fn error_against_exact(
    cfg: &StudyConfig,
    solution: &GridFunction<f64>,
    exact: &CoefficientField<f64>,
) -> Result<f64> {
    let t = match cfg.kind {
        ProblemKind::Parabolic => cfg.horizon,
        ProblemKind::Elliptic => 0.0,
    };
    let reference = exact.sample(solution.spec(), t)?;
    Ok(solution.sub(&reference).sup_norm())
}

/// Run the configured study. Per-mesh failures are recorded as failed
/// verdict lines without aborting the remaining meshes.
pub fn run_study(cfg: &StudyConfig, deterministic: bool) -> Result<StudyReport> {
    let flags = flags_for(cfg)?;
    let mut rows: Vec<StudyRow> = Vec::new();
    let mut verdicts: Vec<(String, bool)> = Vec::new();

    match cfg.mode {
        StudyMode::Acceptance => {
            let outcome = crate::acceptance::run_all();
            for c in &outcome.criteria {
                verdicts.push((c.label.clone(), c.pass));
            }
        }
        StudyMode::Expansion => {
            let p = build_parabolic(cfg)?;
            let report = expansion_remainder(&p, cfg.order, cfg.levels, &ExpansionConfig::default())?;
            let mut prev = None;
            for (i, &h) in report.mesh_sizes.iter().enumerate() {
                let e = report.error_norms[i];
                rows.push(StudyRow {
                    h,
                    error_sup: e,
                    observed_order: pairwise_order(prev, h, e),
                    wall_ms: 0.0,
                });
                prev = Some((h, e));
            }
            verdicts.push((
                format!("expansion_remainder_bounded(ratio={:.3})", report.ratio),
                report.pass,
            ));
        }
        StudyMode::Single | StudyMode::Convergence => {
            let base = build_grid(cfg);
            let exact = exact_field(cfg)?;
            let levels = if cfg.mode == StudyMode::Single {
                1
            } else {
                cfg.levels
            };
            // without a manufactured solution, compare against one extra
            // refinement of the finest mesh
            let reference = if exact.is_none() && levels > 1 {
                Some(solve_level(cfg, base.refine(1 << levels))?)
            } else {
                None
            };
            let mut prev = None;
            let mut solved_all = true;
            for level in 0..levels {
                let grid = base.refine(1 << level);
                let h = grid.mesh();
                let started = Instant::now();
                match solve_level(cfg, grid.clone()) {
                    Ok(solution) => {
                        let wall_ms = started.elapsed().as_secs_f64() * 1e3;
                        let error_sup = match (&exact, &reference) {
                            (Some(ex), _) => error_against_exact(cfg, &solution, ex)?,
                            (None, Some(r)) => {
                                solution.sub(&r.restrict_to(&grid)?).sup_norm()
                            }
                            (None, None) => match cfg.kind {
                                ProblemKind::Elliptic => {
                                    let mut p = build_elliptic(cfg)?;
                                    p.ctx = p.ctx.on_grid(grid.clone());
                                    solve_elliptic(&p, &IterationConfig::default())?.defect
                                }
                                ProblemKind::Parabolic => 0.0,
                            },
                        };
                        rows.push(StudyRow {
                            h,
                            error_sup,
                            observed_order: pairwise_order(prev, h, error_sup),
                            wall_ms,
                        });
                        prev = Some((h, error_sup));
                    }
                    Err(e) => {
                        solved_all = false;
                        verdicts.push((format!("mesh h={h}: {e}"), false));
                        prev = None;
                    }
                }
            }
            verdicts.push(("all_meshes_solved".into(), solved_all));
        }
    }

    Ok(StudyReport {
        rows,
        flags,
        verdicts,
        deterministic,
    })
}

fn fmt(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else {
        format!("{v:.12e}")
    }
}

fn order_text(cell: OrderCell) -> String {
    match cell {
        OrderCell::Absent => String::new(),
        OrderCell::Value(v) => format!("{v:.4}"),
        OrderCell::BelowFloor => "below_floor".into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    TextTable,
}

/// Render the report. CSV carries the data rows only; the text table adds
/// flag and verdict lines.
pub fn emit_report(report: &StudyReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => {
            let mut out = String::new();
            if report.deterministic {
                out.push_str("h,error_sup,observed_order\n");
                for r in &report.rows {
                    out.push_str(&format!(
                        "{},{},{}\n",
                        fmt(r.h),
                        fmt(r.error_sup),
                        order_text(r.observed_order)
                    ));
                }
            } else {
                out.push_str("h,error_sup,observed_order,wall_ms\n");
                for r in &report.rows {
                    out.push_str(&format!(
                        "{},{},{},{:.3}\n",
                        fmt(r.h),
                        fmt(r.error_sup),
                        order_text(r.observed_order),
                        r.wall_ms
                    ));
                }
            }
            out
        }
        ReportFormat::TextTable => {
            let mut out = String::new();
            out.push_str(&format!(
                "{:<18} {:<22} {:<14} {:<10}\n",
                "h", "error_sup", "order", "wall_ms"
            ));
            for r in &report.rows {
                let wall = if report.deterministic {
                    "-".to_string()
                } else {
                    format!("{:.3}", r.wall_ms)
                };
                out.push_str(&format!(
                    "{:<18} {:<22} {:<14} {:<10}\n",
                    fmt(r.h),
                    fmt(r.error_sup),
                    order_text(r.observed_order),
                    wall
                ));
            }
            if let Some(s) = fitted_order(&report.rows) {
                out.push_str(&format!("fitted order: {s:.4}\n"));
            }
            out.push_str(&format!(
                "flags: monotone={} consistency={} condition_s={} p_antisym={}\n",
                report.flags.monotone,
                report.flags.consistency,
                report.flags.condition_s,
                report.flags.p_antisym
            ));
            for (label, pass) in &report.verdicts {
                out.push_str(&format!(
                    "{} {}\n",
                    if *pass { "PASS" } else { "FAIL" },
                    label
                ));
            }
            out
        }
    }
}

/// Write the rendered report to `path`.
pub fn write_report(report: &StudyReport, format: ReportFormat, path: &str) -> Result<()> {
    std::fs::write(path, emit_report(report, format)).map_err(Error::Io)
}
