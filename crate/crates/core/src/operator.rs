//! Application of the discrete operator `L_h`, the continuum operator it
//! approximates, the Taylor correction operators, and the remainder
//! operator measuring the defect between them.

use crate::coeff::CoefficientField;
use crate::error::{Error, Result};
use crate::grid::{self, GridFunction};
use crate::linalg::{centered_offsets, fd_weights};
use crate::stencil::OperatorContext;
use crate::Scalar;

/// Cap on directional-derivative order used by the Taylor operators.
pub const DIFF_CAP: usize = 6;

/// Grid-sampled form of `L_h` at a fixed time: per-direction shift tables
/// and combined weights `q/h^2 + p/h`, plus the zero-order coefficient.
pub struct CompiledOperator<S> {
    tables: Vec<Vec<usize>>,
    weights: Vec<Vec<S>>,
    zero_order: Vec<S>,
}

impl<S: Scalar> CompiledOperator<S> {
    /// Sample the stencil coefficients on the grid at time `t`.
    /// `c_extra` is added to the zero-order coefficient (exponential shift).
    pub fn build(ctx: &OperatorContext<S>, t: S, c_extra: S) -> Result<CompiledOperator<S>> {
        let grid = &ctx.grid;
        let h = grid.mesh();
        let h2 = h * h;
        let mut tables = Vec::new();
        let mut weights = Vec::new();
        for (i, lambda) in ctx.stencil.directions().iter().enumerate() {
            let q = ctx.stencil.q(i).sample(grid, t)?;
            if q.values().iter().any(|&v| v < S::zero()) {
                return Err(Error::CoefficientEval(format!(
                    "q coefficient negative for direction {lambda:?}"
                )));
            }
            let p = ctx.stencil.p(i).sample(grid, t)?;
            let w: Vec<S> = q
                .values()
                .iter()
                .zip(p.values())
                .map(|(&qv, &pv)| qv / h2 + pv / h)
                .collect();
            tables.push(grid.shift_table(lambda, 1)?);
            weights.push(w);
        }
        let c = ctx.stencil.c().sample(grid, t)?;
        let zero_order = c.values().iter().map(|&v| v + c_extra).collect();
        Ok(CompiledOperator {
            tables,
            weights,
            zero_order,
        })
    }

    pub fn apply_into(&self, u: &[S], out: &mut [S]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = -self.zero_order[k] * u[k];
        }
        for (table, w) in self.tables.iter().zip(&self.weights) {
            for k in 0..out.len() {
                out[k] = out[k] + w[k] * (u[table[k]] - u[k]);
            }
        }
    }

    /// Worst-case row magnitude: an upper bound for the spectral radius of
    /// the sampled operator, used by explicit time stepping.
    pub fn row_bound(&self) -> S {
        let n = self.zero_order.len();
        let mut sup = S::zero();
        for k in 0..n {
            let mut row = self.zero_order[k].abs();
            for w in &self.weights {
                row = row + S::from_f64_c(2.0) * w[k].abs();
            }
            sup = sup.max(row);
        }
        sup
    }
}

/// Apply `L_h f = (1/h) sum q delta f + sum p delta f - c f` at the context
/// time. When condition (S) holds the q-part is cross-checked against the
/// centered-second-difference form; the two must agree to 1e-12 relative.
pub fn apply_lh<S: Scalar>(
    ctx: &OperatorContext<S>,
    f: &GridFunction<S>,
) -> Result<GridFunction<S>> {
    if f.spec() != &ctx.grid {
        return Err(Error::MeshMismatch(
            "grid function does not live on the context grid".into(),
        ));
    }
    let op = CompiledOperator::build(ctx, ctx.time, S::zero())?;
    let mut out = vec![S::zero(); f.len()];
    op.apply_into(f.values(), &mut out);
    let result = GridFunction::new(ctx.grid.clone(), out);

    if ctx.stencil.condition_s(&ctx.grid, &[ctx.time])? {
        let forward = q_part_forward(ctx, f)?;
        let centered = q_part_centered(ctx, f)?;
        let scale = forward.sup_norm().max(centered.sup_norm());
        let gap = forward.sub(&centered).sup_norm();
        if gap > S::from_f64_c(1e-12) * (S::one() + scale) {
            return Err(Error::FormMismatch(
                (gap / (S::one() + scale)).to_f64().unwrap_or(f64::NAN),
            ));
        }
    }
    Ok(result)
}

fn q_part_forward<S: Scalar>(
    ctx: &OperatorContext<S>,
    f: &GridFunction<S>,
) -> Result<GridFunction<S>> {
    let h = ctx.grid.mesh();
    let mut acc = GridFunction::constant(ctx.grid.clone(), S::zero());
    for (i, lambda) in ctx.stencil.directions().iter().enumerate() {
        let q = ctx.stencil.q(i).sample(&ctx.grid, ctx.time)?;
        let df = grid::delta(f, lambda)?;
        acc = acc.zip_map(&q.zip_map(&df, |a, b| a * b), |x, y| x + y / h);
    }
    Ok(acc)
}

fn q_part_centered<S: Scalar>(
    ctx: &OperatorContext<S>,
    f: &GridFunction<S>,
) -> Result<GridFunction<S>> {
    let half = S::from_f64_c(0.5);
    let mut acc = GridFunction::constant(ctx.grid.clone(), S::zero());
    for (i, lambda) in ctx.stencil.directions().iter().enumerate() {
        let q = ctx.stencil.q(i).sample(&ctx.grid, ctx.time)?;
        let d2 = grid::delta2(f, lambda)?;
        acc = acc.zip_map(&q.zip_map(&d2, |a, b| a * b), |x, y| x + half * y);
    }
    Ok(acc)
}

/// `n`-th directional derivative along the integer direction `lambda`,
/// approximated by a centered difference of order >= 4 using the grid's
/// own mesh as step.
pub fn directional_derivative<S: Scalar>(
    f: &GridFunction<S>,
    lambda: &[i64],
    order: usize,
) -> Result<GridFunction<S>> {
    if order == 0 {
        return Ok(f.clone());
    }
    if order > DIFF_CAP {
        return Err(Error::OrderCapExceeded {
            requested: order,
            cap: DIFF_CAP,
        });
    }
    let offsets = centered_offsets(order);
    let w: Vec<S> = fd_weights(&offsets, order)?;
    let s = f.spec().mesh();
    let scale = s.powi(order as i32);
    let mut out = vec![S::zero(); f.len()];
    for (&off, &wj) in offsets.iter().zip(&w) {
        if wj == S::zero() {
            continue;
        }
        let table = f.spec().shift_table(lambda, off)?;
        for k in 0..out.len() {
            out[k] = out[k] + wj * f.values()[table[k]];
        }
    }
    for v in &mut out {
        *v = *v / scale;
    }
    Ok(GridFunction::new(f.spec().clone(), out))
}

/// Apply the continuum operator `(1/2) sum q d_l^2 + sum p d_l - c` to a
/// sample of `f` on the grid refined by `fine_factor`, returning values on
/// the base grid. Directional derivatives use 4th-order centered
/// differences with the fine mesh as step, so the result is exact on
/// polynomials of degree <= 3 along each direction.
pub fn apply_continuum_l<S: Scalar>(
    ctx: &OperatorContext<S>,
    f_fine: &GridFunction<S>,
    fine_factor: usize,
) -> Result<GridFunction<S>> {
    if fine_factor < 1 {
        return Err(Error::MeshMismatch("fine_factor must be >= 1".into()));
    }
    let expected = ctx.grid.refine(fine_factor);
    if f_fine.spec() != &expected {
        return Err(Error::MeshMismatch(format!(
            "expected f on the {fine_factor}x refinement of the base grid"
        )));
    }
    let half = S::from_f64_c(0.5);
    let base_f = f_fine.restrict_to(&ctx.grid)?;
    let c = ctx.stencil.c().sample(&ctx.grid, ctx.time)?;
    let mut acc = c.zip_map(&base_f, |cv, fv| -cv * fv);
    for (i, lambda) in ctx.stencil.directions().iter().enumerate() {
        let q = ctx.stencil.q(i).sample(&ctx.grid, ctx.time)?;
        let p = ctx.stencil.p(i).sample(&ctx.grid, ctx.time)?;
        let d1 = directional_derivative(f_fine, lambda, 1)?.restrict_to(&ctx.grid)?;
        let d2 = directional_derivative(f_fine, lambda, 2)?.restrict_to(&ctx.grid)?;
        for k in 0..acc.len() {
            let v = half * q.values()[k] * d2.values()[k] + p.values()[k] * d1.values()[k];
            acc.values_mut()[k] = acc.values()[k] + v;
        }
    }
    Ok(acc)
}

/// Apply the `i`-th Taylor operator
/// `(1/((i+1)(i+2))) sum q d_l^{i+2} + (1/(i+1)) sum p d_l^{i+1}`
/// on the grid `f` lives on, with coefficients sampled there at time `t`.
pub fn apply_taylor_l<S: Scalar>(
    stencil: &crate::stencil::Stencil<S>,
    i: usize,
    f: &GridFunction<S>,
    t: S,
) -> Result<GridFunction<S>> {
    assert!(i >= 1, "Taylor operators start at i = 1");
    if i + 2 > DIFF_CAP {
        return Err(Error::OrderCapExceeded {
            requested: i + 2,
            cap: DIFF_CAP,
        });
    }
    let spec = f.spec();
    let qc = S::one() / S::from_usize_c((i + 1) * (i + 2));
    let pc = S::one() / S::from_usize_c(i + 1);
    let mut acc = GridFunction::constant(spec.clone(), S::zero());
    for (idx, lambda) in stencil.directions().iter().enumerate() {
        let q = stencil.q(idx).sample(spec, t)?;
        let p = stencil.p(idx).sample(spec, t)?;
        let dq = directional_derivative(f, lambda, i + 2)?;
        let dp = directional_derivative(f, lambda, i + 1)?;
        for k in 0..acc.len() {
            let v = qc * q.values()[k] * dq.values()[k] + pc * p.values()[k] * dp.values()[k];
            acc.values_mut()[k] = acc.values()[k] + v;
        }
    }
    Ok(acc)
}

/// Remainder operator: `L_h f - L f - sum_{1<=i<=j} (h^i/i!) L^(i) f`,
/// with the continuum and Taylor parts approximated on the `fine_factor`
/// refinement. The sup norm scales as O(h^{j+1}) on smooth data.
pub fn remainder_oj<S: Scalar>(
    ctx: &OperatorContext<S>,
    j: usize,
    phi: &CoefficientField<S>,
    fine_factor: usize,
) -> Result<GridFunction<S>> {
    let base = phi.sample(&ctx.grid, ctx.time)?;
    let fine_spec = ctx.grid.refine(fine_factor);
    let fine = phi.sample(&fine_spec, ctx.time)?;
    let lh = apply_lh(ctx, &base)?;
    let cl = apply_continuum_l(ctx, &fine, fine_factor)?;
    let mut out = lh.sub(&cl);
    let h = ctx.grid.mesh();
    let mut h_pow = S::one();
    let mut factorial = S::one();
    for i in 1..=j {
        h_pow = h_pow * h;
        factorial = factorial * S::from_usize_c(i);
        let ti = apply_taylor_l(&ctx.stencil, i, &fine, ctx.time)?.restrict_to(&ctx.grid)?;
        out.axpy(-(h_pow / factorial), &ti);
    }
    Ok(out)
}
