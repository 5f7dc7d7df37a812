//! Extrapolation weights over dyadically nested meshes and the machinery
//! to run a solver across the mesh family and combine the results.

use crate::elliptic::{solve_elliptic, EllipticProblem, IterationConfig};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};
use crate::linalg::solve_dense;
use crate::parabolic::{solve_parabolic, ParabolicProblem, TimeIntegratorConfig};
use crate::Scalar;

/// Conditioning guard for the full variant.
pub const FULL_ORDER_GUARD: usize = 12;
/// Conditioning guard for the tilde variant (odd orders only).
pub const TILDE_ORDER_GUARD: usize = 15;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// Weights cancelling h, h^2, ..., h^k error terms; k + 1 meshes.
    Full,
    /// Weights cancelling h^2, h^4, ... only, valid when odd error terms
    /// vanish; (k - 1)/2 + 1 meshes for odd k.
    Tilde,
}

/// Solve the moment system `sum_j b_j r^{-ij} = delta(i, 0)`, i = 0..=m.
fn moment_weights<S: Scalar>(m: usize, ratio: f64) -> Result<Vec<S>> {
    let n = m + 1;
    let mut a = vec![vec![S::zero(); n]; n];
    for (i, row) in a.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            *entry = S::from_f64_c(ratio.powi(-((i * j) as i32)));
        }
    }
    let mut b = vec![S::zero(); n];
    b[0] = S::one();
    solve_dense(a, b)
}

/// Full-variant weights `(b_0, ..., b_k)`.
pub fn vandermonde_coeffs<S: Scalar>(k: usize) -> Result<Vec<S>> {
    if k > FULL_ORDER_GUARD {
        return Err(Error::OrderBeyondGuard {
            requested: k,
            guard: FULL_ORDER_GUARD,
        });
    }
    moment_weights(k, 2.0)
}

/// Tilde-variant weights `(b_0, ..., b_ktilde)`, `ktilde = (k - 1)/2`,
/// for odd k.
pub fn tilde_coeffs<S: Scalar>(k: usize) -> Result<Vec<S>> {
    if k % 2 == 0 {
        return Err(Error::TildeOrderEven(k));
    }
    if k > TILDE_ORDER_GUARD {
        return Err(Error::OrderBeyondGuard {
            requested: k,
            guard: TILDE_ORDER_GUARD,
        });
    }
    moment_weights((k - 1) / 2, 4.0)
}

/// Mesh family 2^{-j} h with the weights that combine solutions on it.
#[derive(Clone, Debug)]
pub struct ExtrapolationPlan<S> {
    pub order: usize,
    pub variant: Variant,
    pub base_mesh: S,
    pub weights: Vec<S>,
}

impl<S: Scalar> ExtrapolationPlan<S> {
    pub fn new(order: usize, variant: Variant, base_mesh: S) -> Result<Self> {
        assert!(base_mesh > S::zero());
        let weights = match variant {
            Variant::Full => vandermonde_coeffs(order)?,
            Variant::Tilde => tilde_coeffs(order)?,
        };
        Ok(ExtrapolationPlan {
            order,
            variant,
            base_mesh,
            weights,
        })
    }

    /// Number of nested meshes (and solutions) the plan consumes.
    pub fn levels(&self) -> usize {
        self.weights.len()
    }

    /// Grid for level j: the base grid refined 2^j times.
    pub fn grid_for_level(&self, base: &GridSpec<S>, level: usize) -> GridSpec<S> {
        base.refine(1 << level)
    }
}

/// Weighted pointwise combination restricted to the coarsest grid.
pub fn combine<S: Scalar>(
    plan: &ExtrapolationPlan<S>,
    solutions: &[GridFunction<S>],
) -> Result<GridFunction<S>> {
    if solutions.len() != plan.levels() {
        return Err(Error::MeshMismatch(format!(
            "plan needs {} solutions, got {}",
            plan.levels(),
            solutions.len()
        )));
    }
    let base = solutions[0].spec().clone();
    let two = S::from_f64_c(2.0);
    let mut acc = GridFunction::constant(base.clone(), S::zero());
    for (j, sol) in solutions.iter().enumerate() {
        let expected_mesh = base.mesh() / two.powi(j as i32);
        let rel = (sol.spec().mesh() - expected_mesh).abs() / expected_mesh;
        if rel > S::from_f64_c(1e-12) {
            return Err(Error::MeshMismatch(format!(
                "solution {j} has mesh {:?}, expected {:?}",
                sol.spec().mesh(),
                expected_mesh
            )));
        }
        let restricted = sol.restrict_to(&base)?;
        acc.axpy(plan.weights[j], &restricted);
    }
    Ok(acc)
}

/// Run the parabolic solver on each nested mesh and combine the final
/// states. The tilde variant requires the symmetry and drift-antisymmetry
/// structure that makes odd error terms vanish.
pub fn solve_accelerated_parabolic<S: Scalar>(
    p: &ParabolicProblem<S>,
    plan: &ExtrapolationPlan<S>,
    cfg: &TimeIntegratorConfig<S>,
) -> Result<GridFunction<S>> {
    check_tilde_flags(plan, &p.ctx, &[p.ctx.time, p.horizon])?;
    let mut solutions = Vec::with_capacity(plan.levels());
    for level in 0..plan.levels() {
        let grid = plan.grid_for_level(&p.ctx.grid, level);
        let sub = ParabolicProblem {
            ctx: p.ctx.on_grid(grid),
            f: p.f.clone(),
            g: p.g.clone(),
            horizon: p.horizon,
        };
        solutions.push(solve_parabolic(&sub, cfg, &[p.horizon])?.final_state().clone());
    }
    combine(plan, &solutions)
}

/// Elliptic counterpart of `solve_accelerated_parabolic`.
pub fn solve_accelerated_elliptic<S: Scalar>(
    p: &EllipticProblem<S>,
    plan: &ExtrapolationPlan<S>,
    cfg: &IterationConfig<S>,
) -> Result<GridFunction<S>> {
    check_tilde_flags(plan, &p.ctx, &[p.ctx.time])?;
    let mut solutions = Vec::with_capacity(plan.levels());
    for level in 0..plan.levels() {
        let grid = plan.grid_for_level(&p.ctx.grid, level);
        let sub = EllipticProblem {
            ctx: p.ctx.on_grid(grid),
            f: p.f.clone(),
            c_floor: p.c_floor,
        };
        solutions.push(solve_elliptic(&sub, cfg)?.v);
    }
    combine(plan, &solutions)
}

fn check_tilde_flags<S: Scalar>(
    plan: &ExtrapolationPlan<S>,
    ctx: &crate::stencil::OperatorContext<S>,
    times: &[S],
) -> Result<()> {
    if plan.variant != Variant::Tilde {
        return Ok(());
    }
    if !ctx.stencil.condition_s(&ctx.grid, times)? {
        return Err(Error::FlagRequirementUnmet(
            "tilde weights need a symmetric stencil with q(l) = q(-l)".into(),
        ));
    }
    if !ctx.stencil.p_antisym(&ctx.grid, times)? {
        return Err(Error::FlagRequirementUnmet(
            "tilde weights need antisymmetric drift p(-l) = -p(l)".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::CoefficientField;
    use crate::stencil::{OperatorContext, Stencil};

    #[test]
    fn full_weights_small_orders() {
        let b0: Vec<f64> = vandermonde_coeffs(0).unwrap();
        assert_eq!(b0, vec![1.0]);
        let b1: Vec<f64> = vandermonde_coeffs(1).unwrap();
        assert!((b1[0] + 1.0).abs() < 1e-14 && (b1[1] - 2.0).abs() < 1e-14);
        let b2: Vec<f64> = vandermonde_coeffs(2).unwrap();
        let expect = [1.0 / 3.0, -2.0, 8.0 / 3.0];
        for (a, e) in b2.iter().zip(expect) {
            assert!((a - e).abs() < 1e-13, "{a} vs {e}");
        }
    }

    #[test]
    fn tilde_weights_small_orders() {
        let b1: Vec<f64> = tilde_coeffs(1).unwrap();
        assert_eq!(b1, vec![1.0]);
        let b3: Vec<f64> = tilde_coeffs(3).unwrap();
        assert!((b3[0] + 1.0 / 3.0).abs() < 1e-14);
        assert!((b3[1] - 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn moment_identities_across_guard_range() {
        for k in 0..=FULL_ORDER_GUARD {
            let b: Vec<f64> = vandermonde_coeffs(k).unwrap();
            let sum: f64 = b.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12, "k={k}: sum {sum}");
            for i in 1..=k {
                let m: f64 = b
                    .iter()
                    .enumerate()
                    .map(|(j, &bj)| bj * 2.0f64.powi(-((i * j) as i32)))
                    .sum();
                assert!(m.abs() < 1e-12, "k={k} moment {i}: {m}");
            }
        }
        for k in (1..=TILDE_ORDER_GUARD).step_by(2) {
            let b: Vec<f64> = tilde_coeffs(k).unwrap();
            let sum: f64 = b.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            for i in 1..=(k - 1) / 2 {
                let m: f64 = b
                    .iter()
                    .enumerate()
                    .map(|(j, &bj)| bj * 4.0f64.powi(-((i * j) as i32)))
                    .sum();
                assert!(m.abs() < 1e-12, "k={k} moment {i}: {m}");
            }
        }
    }

    #[test]
    fn guards_reject_out_of_range_orders() {
        assert!(vandermonde_coeffs::<f64>(13).is_err());
        assert!(matches!(tilde_coeffs::<f64>(4), Err(Error::TildeOrderEven(4))));
        assert!(tilde_coeffs::<f64>(17).is_err());
    }

    #[test]
    fn combine_order_zero_is_identity() {
        let plan = ExtrapolationPlan::new(0, Variant::Full, 0.25).unwrap();
        let base = GridSpec::cube(1, 4, 0.25);
        let f = GridFunction::from_fn(base, |x| x[0] + 1.0);
        let out = combine(&plan, &[f.clone()]).unwrap();
        assert_eq!(out, f);
    }

    #[test]
    fn combine_weighted_point_values() {
        // weights (-1, 2), shared-point values 3 and 5 combine to 7
        let plan = ExtrapolationPlan::new(1, Variant::Full, 0.25).unwrap();
        let base = GridSpec::cube(1, 4, 0.25);
        let fine = base.refine(2);
        let coarse_f = GridFunction::constant(base, 3.0f64);
        let fine_f = GridFunction::constant(fine, 5.0);
        let out = combine(&plan, &[coarse_f, fine_f]).unwrap();
        assert!(out.values().iter().all(|&v| (v - 7.0).abs() < 1e-14));
    }

    #[test]
    fn combine_is_partition_of_unity() {
        let plan = ExtrapolationPlan::new(2, Variant::Full, 0.25).unwrap();
        let base = GridSpec::cube(1, 8, 0.25);
        let phi = |x: &[f64]| (x[0] * 1.3).sin();
        let sols: Vec<_> = (0..3)
            .map(|j| GridFunction::from_fn(base.refine(1 << j), phi))
            .collect();
        let out = combine(&plan, &sols).unwrap();
        let expect = GridFunction::from_fn(base, phi);
        assert!(out.sub(&expect).sup_norm() < 1e-13);
    }

    #[test]
    fn combine_cancels_synthetic_power_law() {
        // u_h = A + B h^s for s <= k is reproduced as A to 1e-10
        let base = GridSpec::cube(1, 8, 0.5);
        for (k, s) in [(1usize, 1i32), (2, 1), (2, 2), (3, 3)] {
            let plan = ExtrapolationPlan::new(k, Variant::Full, 0.5).unwrap();
            let sols: Vec<_> = (0..plan.levels())
                .map(|j| {
                    let g = base.refine(1 << j);
                    let h = g.mesh();
                    GridFunction::from_fn(g, move |x: &[f64]| 2.0 + (x[0] + 3.0) * h.powi(s))
                })
                .collect();
            let out = combine(&plan, &sols).unwrap();
            let expect = GridFunction::constant(base.clone(), 2.0);
            let err = out.sub(&expect).sup_norm();
            assert!(err < 1e-10, "k={k} s={s}: {err}");
        }
    }

    #[test]
    fn combine_commutes_with_lattice_shift() {
        let plan = ExtrapolationPlan::new(1, Variant::Full, 0.25).unwrap();
        let base = GridSpec::cube(1, 8, 0.25);
        let sols: Vec<GridFunction<f64>> = (0..2)
            .map(|j| {
                let g = base.refine(1 << j);
                GridFunction::from_fn(g, |x: &[f64]| (x[0] * 2.2).cos() + x[0])
            })
            .collect();
        let combined = combine(&plan, &sols).unwrap();
        let shifted_combined = crate::grid::shift(&combined, &[1], 1).unwrap();
        // shift each solution by the same physical distance (one coarse cell)
        let shifted_sols: Vec<_> = sols
            .iter()
            .enumerate()
            .map(|(j, s)| crate::grid::shift(s, &[1], 1 << j).unwrap())
            .collect();
        let combined_shifted = combine(&plan, &shifted_sols).unwrap();
        assert_eq!(shifted_combined, combined_shifted);
    }

    #[test]
    fn combine_rejects_wrong_mesh() {
        let plan = ExtrapolationPlan::new(1, Variant::Full, 0.25).unwrap();
        let base = GridSpec::cube(1, 4, 0.25);
        let sols = vec![
            GridFunction::constant(base.clone(), 0.0),
            GridFunction::constant(base.refine(4), 0.0),
        ];
        assert!(combine(&plan, &sols).is_err());
    }

    #[test]
    fn accelerated_freeflow_is_exact() {
        let s = Stencil::new(
            vec![vec![1]],
            vec![CoefficientField::zero()],
            vec![CoefficientField::zero()],
            CoefficientField::zero(),
        )
        .unwrap();
        let p = ParabolicProblem {
            ctx: OperatorContext::new(s, GridSpec::cube(1, 8, 0.125), 0.0, 1.0),
            f: CoefficientField::parse("sin(x1*6)").unwrap(),
            g: CoefficientField::parse("cos(x1*6)").unwrap(),
            horizon: 0.5,
        };
        let plan = ExtrapolationPlan::new(2, Variant::Full, 0.125).unwrap();
        let cfg = TimeIntegratorConfig {
            dt: Some(0.125),
            ..Default::default()
        };
        let out = solve_accelerated_parabolic(&p, &plan, &cfg).unwrap();
        let expect = GridFunction::from_fn(p.ctx.grid.clone(), |x: &[f64]| {
            (x[0] * 6.0).cos() + 0.5 * (x[0] * 6.0).sin()
        });
        assert!(out.sub(&expect).sup_norm() < 1e-11);
    }

    #[test]
    fn accelerated_elliptic_direct_case() {
        let s = Stencil::new(
            vec![vec![1]],
            vec![CoefficientField::zero()],
            vec![CoefficientField::zero()],
            CoefficientField::constant(2.0),
        )
        .unwrap();
        let p = EllipticProblem {
            ctx: OperatorContext::new(s, GridSpec::cube(1, 8, 0.125), 0.0, 1.0),
            f: CoefficientField::parse("2 + sin(x1*6)").unwrap(),
            c_floor: 1.0,
        };
        let plan = ExtrapolationPlan::new(1, Variant::Full, 0.125).unwrap();
        let out = solve_accelerated_elliptic(&p, &plan, &IterationConfig::default()).unwrap();
        let expect =
            GridFunction::from_fn(p.ctx.grid.clone(), |x: &[f64]| (2.0 + (x[0] * 6.0).sin()) / 2.0);
        assert!(out.sub(&expect).sup_norm() < 1e-12);
    }

    #[test]
    fn tilde_requires_symmetry_flags() {
        let s = Stencil::new(
            vec![vec![1]],
            vec![CoefficientField::constant(1.0)],
            vec![CoefficientField::zero()],
            CoefficientField::constant(1.0),
        )
        .unwrap();
        let p = ParabolicProblem {
            ctx: OperatorContext::new(s, GridSpec::cube(1, 8, 0.125), 0.0, 1.0),
            f: CoefficientField::zero(),
            g: CoefficientField::constant(1.0),
            horizon: 0.1,
        };
        let plan = ExtrapolationPlan::new(3, Variant::Tilde, 0.125).unwrap();
        let err = solve_accelerated_parabolic(&p, &plan, &TimeIntegratorConfig::default());
        assert!(matches!(err, Err(Error::FlagRequirementUnmet(_))));
    }
}
