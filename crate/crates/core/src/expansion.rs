//! Expansion coefficients of the discrete solution in powers of the mesh
//! size: the triangular coefficient system, the measured remainder
//! `r_h = h^{-(k+1)} (u_h - sum_j h^j/j! u^(j))`, and empirical order fits.

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};
use crate::linalg::{centered_offsets, fd_weights};
use crate::operator::DIFF_CAP;
use crate::parabolic::{solve_parabolic, ParabolicProblem, TimeIntegratorConfig};
use crate::stencil::{OperatorContext, Stencil};
use crate::Scalar;

#[derive(Clone, Debug)]
pub struct ExpansionConfig<S> {
    /// The coefficient system is integrated on the finest study grid
    /// refined by this factor.
    pub ref_factor: usize,
    /// Step-size safety factor for the coefficient integration.
    pub safety: S,
    /// Integrator settings for the per-mesh discrete solves.
    pub time_cfg: TimeIntegratorConfig<S>,
}

impl<S: Scalar> Default for ExpansionConfig<S> {
    fn default() -> Self {
        ExpansionConfig {
            ref_factor: 8,
            safety: S::from_f64_c(0.5),
            time_cfg: TimeIntegratorConfig::default(),
        }
    }
}

/// Exact binomial coefficient in integer arithmetic.
fn binomial(n: usize, k: usize) -> u64 {
    let k = k.min(n - k);
    let mut acc = 1u64;
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

/// Grid-sampled linear operator: a sum of shift tables with pointwise
/// weights, assembled once so the inner integration loop stays cheap.
struct CompiledLinear<S> {
    tables: Vec<Vec<usize>>,
    weights: Vec<Vec<S>>,
}

impl<S: Scalar> CompiledLinear<S> {
    fn apply_into(&self, u: &[S], out: &mut [S]) {
        for o in out.iter_mut() {
            *o = S::zero();
        }
        for (table, w) in self.tables.iter().zip(&self.weights) {
            for k in 0..out.len() {
                out[k] = out[k] + w[k] * u[table[k]];
            }
        }
    }

    fn push_derivative(
        &mut self,
        grid: &GridSpec<S>,
        lambda: &[i64],
        deriv: usize,
        coef: &GridFunction<S>,
        scale: S,
    ) -> Result<()> {
        let offsets = centered_offsets(deriv);
        let w: Vec<S> = fd_weights(&offsets, deriv)?;
        let s_pow = grid.mesh().powi(deriv as i32);
        for (&off, &wj) in offsets.iter().zip(&w) {
            if wj == S::zero() {
                continue;
            }
            self.tables.push(grid.shift_table(lambda, off)?);
            self.weights
                .push(coef.values().iter().map(|&c| scale * c * wj / s_pow).collect());
        }
        Ok(())
    }
}

/// Sampled form of `(1/2) sum q d_l^2 + sum p d_l - c` with 4th-order
/// directional differences on the grid's own mesh.
fn compile_continuum<S: Scalar>(ctx: &OperatorContext<S>, t: S) -> Result<CompiledLinear<S>> {
    let grid = &ctx.grid;
    let mut op = CompiledLinear {
        tables: Vec::new(),
        weights: Vec::new(),
    };
    let half = S::from_f64_c(0.5);
    for (i, lambda) in ctx.stencil.directions().iter().enumerate() {
        let q = ctx.stencil.q(i).sample(grid, t)?;
        let p = ctx.stencil.p(i).sample(grid, t)?;
        op.push_derivative(grid, lambda, 2, &q, half)?;
        op.push_derivative(grid, lambda, 1, &p, S::one())?;
    }
    let c = ctx.stencil.c().sample(grid, t)?;
    op.tables.push((0..grid.len()).collect());
    op.weights.push(c.values().iter().map(|&v| -v).collect());
    Ok(op)
}

/// Sampled form of the `i`-th Taylor operator
/// `(1/((i+1)(i+2))) sum q d_l^{i+2} + (1/(i+1)) sum p d_l^{i+1}`.
fn compile_taylor<S: Scalar>(
    stencil: &Stencil<S>,
    grid: &GridSpec<S>,
    i: usize,
    t: S,
) -> Result<CompiledLinear<S>> {
    let mut op = CompiledLinear {
        tables: Vec::new(),
        weights: Vec::new(),
    };
    let qc = S::one() / S::from_usize_c((i + 1) * (i + 2));
    let pc = S::one() / S::from_usize_c(i + 1);
    for (idx, lambda) in stencil.directions().iter().enumerate() {
        let q = stencil.q(idx).sample(grid, t)?;
        let p = stencil.p(idx).sample(grid, t)?;
        op.push_derivative(grid, lambda, i + 2, &q, qc)?;
        op.push_derivative(grid, lambda, i + 1, &p, pc)?;
    }
    Ok(op)
}

struct SystemOps<S> {
    continuum: CompiledLinear<S>,
    taylor: Vec<CompiledLinear<S>>,
}

fn build_system_ops<S: Scalar>(
    ctx: &OperatorContext<S>,
    k: usize,
    t: S,
) -> Result<SystemOps<S>> {
    Ok(SystemOps {
        continuum: compile_continuum(&ctx.at_time(t), t)?,
        taylor: (1..=k)
            .map(|i| compile_taylor(&ctx.stencil, &ctx.grid, i, t))
            .collect::<Result<_>>()?,
    })
}

/// Integrate the triangular coefficient system on `ref_spec`:
/// `u^(0)' = L u^(0) + f` from `g`, and for j >= 1
/// `u^(j)' = L u^(j) + sum_{i=1..j} C(j,i) L^(i) u^(j-i)` from zero data,
/// all fields stepped together with one RK4 step size. Returns the
/// coefficients at the horizon.
pub fn solve_coefficient_system<S: Scalar>(
    p: &ParabolicProblem<S>,
    k: usize,
    ref_spec: &GridSpec<S>,
    cfg: &ExpansionConfig<S>,
) -> Result<Vec<GridFunction<S>>> {
    if k + 2 > DIFF_CAP {
        return Err(Error::OrderCapExceeded {
            requested: k + 2,
            cap: DIFF_CAP,
        });
    }
    let ctx = p.ctx.on_grid(ref_spec.clone());
    let dt = reference_dt(p, ref_spec, cfg)?;
    let n_steps = (p.horizon / dt)
        .ceil()
        .to_f64()
        .map(|v| v as usize)
        .unwrap_or(1)
        .max(1);
    let dt = p.horizon / S::from_usize_c(n_steps);

    let mut state: Vec<GridFunction<S>> = Vec::with_capacity(k + 1);
    state.push(p.g.sample(ref_spec, S::zero())?);
    for _ in 1..=k {
        state.push(GridFunction::constant(ref_spec.clone(), S::zero()));
    }

    let time_dep = p.ctx.stencil.is_time_dependent();
    let cached_ops = if time_dep {
        None
    } else {
        Some(build_system_ops(&ctx, k, S::zero())?)
    };
    let f_static = if p.f.depends_on_t() {
        None
    } else {
        Some(p.f.sample(ref_spec, S::zero())?)
    };
    let n = ref_spec.len();
    let rhs = |s: S, fields: &[GridFunction<S>]| -> Result<Vec<GridFunction<S>>> {
        let local;
        let ops = match &cached_ops {
            Some(o) => o,
            None => {
                local = build_system_ops(&ctx, k, s)?;
                &local
            }
        };
        let mut out = Vec::with_capacity(fields.len());
        let mut scratch = vec![S::zero(); n];
        for (j, uj) in fields.iter().enumerate() {
            let mut dj = vec![S::zero(); n];
            ops.continuum.apply_into(uj.values(), &mut dj);
            if j == 0 {
                match &f_static {
                    Some(fs) => {
                        for (d, &fv) in dj.iter_mut().zip(fs.values()) {
                            *d = *d + fv;
                        }
                    }
                    None => {
                        let fs = p.f.sample(ref_spec, s)?;
                        for (d, &fv) in dj.iter_mut().zip(fs.values()) {
                            *d = *d + fv;
                        }
                    }
                }
            } else {
                for i in 1..=j {
                    ops.taylor[i - 1].apply_into(fields[j - i].values(), &mut scratch);
                    let coeff = S::from_f64_c(binomial(j, i) as f64);
                    for (d, &sv) in dj.iter_mut().zip(&scratch) {
                        *d = *d + coeff * sv;
                    }
                }
            }
            out.push(GridFunction::new(ref_spec.clone(), dj));
        }
        Ok(out)
    };

    let half = S::from_f64_c(0.5);
    let sixth = S::one() / S::from_f64_c(6.0);
    let two = S::from_f64_c(2.0);
    let mut t = S::zero();
    for _ in 0..n_steps {
        let k1 = rhs(t, &state)?;
        let s2: Vec<_> = state
            .iter()
            .zip(&k1)
            .map(|(u, d)| {
                let mut v = u.clone();
                v.axpy(half * dt, d);
                v
            })
            .collect();
        let k2 = rhs(t + half * dt, &s2)?;
        let s3: Vec<_> = state
            .iter()
            .zip(&k2)
            .map(|(u, d)| {
                let mut v = u.clone();
                v.axpy(half * dt, d);
                v
            })
            .collect();
        let k3 = rhs(t + half * dt, &s3)?;
        let s4: Vec<_> = state
            .iter()
            .zip(&k3)
            .map(|(u, d)| {
                let mut v = u.clone();
                v.axpy(dt, d);
                v
            })
            .collect();
        let k4 = rhs(t + dt, &s4)?;
        for j in 0..state.len() {
            for i in 0..state[j].len() {
                let incr = k1[j].values()[i]
                    + two * k2[j].values()[i]
                    + two * k3[j].values()[i]
                    + k4[j].values()[i];
                state[j].values_mut()[i] = state[j].values()[i] + sixth * dt * incr;
            }
        }
        t = t + dt;
        for (j, f) in state.iter().enumerate() {
            if !f.all_finite() {
                return Err(Error::NonFinite {
                    time: t.to_f64().unwrap_or(f64::NAN),
                });
            }
            let _ = j;
        }
    }
    Ok(state)
}

/// Step bound for the 4th-order differences used by the continuum
/// operator on the reference grid: row sums 8/3 q / s^2 + 3/2 |p| / s.
fn reference_dt<S: Scalar>(
    p: &ParabolicProblem<S>,
    ref_spec: &GridSpec<S>,
    cfg: &ExpansionConfig<S>,
) -> Result<S> {
    let s = ref_spec.mesh();
    let times = if p.ctx.stencil.is_time_dependent() {
        vec![S::zero(), p.horizon * S::from_f64_c(0.5), p.horizon]
    } else {
        vec![S::zero()]
    };
    let mut lambda = S::zero();
    for &t in &times {
        let mut rows = vec![S::zero(); ref_spec.len()];
        for i in 0..p.ctx.stencil.directions().len() {
            let q = p.ctx.stencil.q(i).sample(ref_spec, t)?;
            let pd = p.ctx.stencil.p(i).sample(ref_spec, t)?;
            for (k, r) in rows.iter_mut().enumerate() {
                *r = *r
                    + S::from_f64_c(8.0 / 3.0) * q.values()[k].abs() / (s * s)
                    + S::from_f64_c(1.5) * pd.values()[k].abs() / s;
            }
        }
        let c = p.ctx.stencil.c().sample(ref_spec, t)?;
        for (k, r) in rows.iter_mut().enumerate() {
            *r = *r + c.values()[k].abs();
        }
        lambda = rows.iter().fold(lambda, |m, &v| m.max(v));
    }
    if lambda == S::zero() {
        return Ok(p.horizon);
    }
    Ok(cfg.safety / lambda)
}

#[derive(Clone, Debug, PartialEq)]
pub enum OrderEstimate<S> {
    /// Least-squares slope of log(error) against log(h).
    Slope(S),
    /// Errors at or below the numerical floor; no slope is meaningful.
    BelowFloor,
}

/// Empirical convergence order from `(h, error)` pairs with h strictly
/// decreasing. With two points this is `log2(e1/e2)` for halved meshes.
pub fn observed_order<S: Scalar>(errors: &[(S, S)]) -> OrderEstimate<S> {
    assert!(errors.len() >= 2, "need at least two mesh levels");
    assert!(
        errors.windows(2).all(|w| w[0].0 > w[1].0),
        "mesh sizes must be strictly decreasing"
    );
    if errors.iter().any(|&(_, e)| e <= S::zero()) {
        return OrderEstimate::BelowFloor;
    }
    let n = S::from_usize_c(errors.len());
    let lx: Vec<S> = errors.iter().map(|&(h, _)| h.ln()).collect();
    let ly: Vec<S> = errors.iter().map(|&(_, e)| e.ln()).collect();
    let mx = lx.iter().copied().sum::<S>() / n;
    let my = ly.iter().copied().sum::<S>() / n;
    let mut num = S::zero();
    let mut den = S::zero();
    for (x, y) in lx.iter().zip(&ly) {
        num = num + (*x - mx) * (*y - my);
        den = den + (*x - mx) * (*x - mx);
    }
    OrderEstimate::Slope(num / den)
}

#[derive(Clone, Debug)]
pub struct ExpansionReport<S> {
    pub order: usize,
    /// Coefficients at the horizon on the reference grid.
    pub coefficients: Vec<GridFunction<S>>,
    pub mesh_sizes: Vec<S>,
    /// Per-mesh `sup |r_h|`.
    pub remainder_norms: Vec<S>,
    /// Per-mesh `sup |u_h - sum_j h^j/j! u^(j)|` (the unscaled defect).
    pub error_norms: Vec<S>,
    /// max/min of the remainder norms.
    pub ratio: S,
    /// Bounded-remainder verdict: ratio <= 3.
    pub pass: bool,
    pub fitted_exponent: OrderEstimate<S>,
}

/// Solve the coefficient system once on a shared reference grid, then for
/// each study mesh solve the discrete problem and measure the scaled
/// remainder. `levels` counts dyadic meshes starting from the problem's
/// own grid.
pub fn expansion_remainder<S: Scalar>(
    p: &ParabolicProblem<S>,
    k: usize,
    levels: usize,
    cfg: &ExpansionConfig<S>,
) -> Result<ExpansionReport<S>> {
    assert!(levels >= 2, "need at least two mesh levels");
    assert!(cfg.ref_factor >= 1);
    let finest = p.ctx.grid.refine(1 << (levels - 1));
    let ref_spec = finest.refine(cfg.ref_factor);
    let coefficients = solve_coefficient_system(p, k, &ref_spec, cfg)?;

    let mut mesh_sizes = Vec::with_capacity(levels);
    let mut remainder_norms = Vec::with_capacity(levels);
    let mut error_norms = Vec::with_capacity(levels);
    for level in 0..levels {
        let grid = p.ctx.grid.refine(1 << level);
        let h = grid.mesh();
        let sub = ParabolicProblem {
            ctx: p.ctx.on_grid(grid.clone()),
            f: p.f.clone(),
            g: p.g.clone(),
            horizon: p.horizon,
        };
        let u_h = solve_parabolic(&sub, &cfg.time_cfg, &[p.horizon])?
            .final_state()
            .clone();
        let mut defect = u_h;
        let mut h_pow = S::one();
        let mut factorial = S::one();
        for (j, coeff) in coefficients.iter().enumerate() {
            if j > 0 {
                h_pow = h_pow * h;
                factorial = factorial * S::from_usize_c(j);
            }
            let restricted = coeff.restrict_to(&grid)?;
            defect.axpy(-(h_pow / factorial), &restricted);
        }
        let e = defect.sup_norm();
        mesh_sizes.push(h);
        error_norms.push(e);
        remainder_norms.push(e / h.powi(k as i32 + 1));
    }

    let r_min = remainder_norms
        .iter()
        .fold(S::infinity(), |m, &v| m.min(v));
    let r_max = remainder_norms.iter().fold(S::zero(), |m, &v| m.max(v));
    let ratio = if r_min > S::zero() {
        r_max / r_min
    } else if r_max == S::zero() {
        S::one()
    } else {
        S::infinity()
    };
    let pairs: Vec<(S, S)> = mesh_sizes
        .iter()
        .zip(&error_norms)
        .map(|(&h, &e)| (h, e))
        .collect();
    let floor = S::from_f64_c(1e-13);
    let fitted_exponent = if error_norms.iter().all(|&e| e > floor) {
        observed_order(&pairs)
    } else {
        OrderEstimate::BelowFloor
    };
    Ok(ExpansionReport {
        order: k,
        coefficients,
        mesh_sizes,
        remainder_norms,
        error_norms,
        ratio,
        pass: ratio <= S::from_f64_c(3.0),
        fitted_exponent,
    })
}
