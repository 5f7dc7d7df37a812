//! Stationary problem `L_h v + f = 0` solved by the contraction
//! fixed-point iteration `v <- h^2 xi f + xi sum_l chi_l v(. + h l)`,
//! `xi^{-1} = h^2 c + sum_l chi_l`.

use crate::coeff::CoefficientField;
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::operator::apply_lh;
use crate::stencil::{chi, validate_monotone, OperatorContext};
use crate::Scalar;

#[derive(Clone, Debug)]
pub struct EllipticProblem<S> {
    /// Time-independent coefficients; the context time is used for sampling.
    pub ctx: OperatorContext<S>,
    pub f: CoefficientField<S>,
    /// Positive lower bound c >= c_floor, checked against the samples.
    pub c_floor: S,
}

#[derive(Clone, Debug)]
pub struct IterationConfig<S> {
    /// Sup-norm tolerance on the distance to the fixed point.
    pub tol: S,
    /// Sweep cap; `None` selects 10^7 / grid size.
    pub max_iters: Option<usize>,
}

impl<S: Scalar> Default for IterationConfig<S> {
    fn default() -> Self {
        IterationConfig {
            tol: S::from_f64_c(1e-12),
            max_iters: None,
        }
    }
}

impl<S: Scalar> IterationConfig<S> {
    fn iter_cap(&self, grid_size: usize) -> usize {
        self.max_iters
            .unwrap_or_else(|| (10_000_000 / grid_size.max(1)).max(1))
    }
}

fn validate_problem<S: Scalar>(p: &EllipticProblem<S>) -> Result<Vec<GridFunction<S>>> {
    assert!(p.c_floor > S::zero(), "c_floor must be positive");
    let t = p.ctx.time;
    let c = p.ctx.stencil.c().sample(&p.ctx.grid, t)?;
    if let Some(&bad) = c.values().iter().find(|&&v| v < p.c_floor) {
        return Err(Error::CoefficientEval(format!(
            "c = {bad:?} drops below the declared floor"
        )));
    }
    let report = validate_monotone(&p.ctx, &[t])?;
    if !report.pass {
        return Err(Error::MonotonicityViolated {
            min_chi: report.min_chi.to_f64().unwrap_or(f64::NAN),
            direction: report.direction.clone(),
        });
    }
    p.ctx
        .stencil
        .directions()
        .iter()
        .map(|l| chi(&p.ctx, l))
        .collect()
}

/// Contraction factor `rho = max [sum chi] / [h^2 c + sum chi] < 1`.
pub fn contraction_factor<S: Scalar>(p: &EllipticProblem<S>) -> Result<S> {
    let chis = validate_problem(p)?;
    let grid = &p.ctx.grid;
    let h2 = grid.mesh() * grid.mesh();
    let c = p.ctx.stencil.c().sample(grid, p.ctx.time)?;
    let mut rho = S::zero();
    for k in 0..grid.len() {
        let chi_sum: S = chis.iter().map(|f| f.values()[k]).sum();
        let denom = h2 * c.values()[k] + chi_sum;
        if denom == S::zero() {
            return Err(Error::ZeroDenominator(k));
        }
        rho = rho.max(chi_sum / denom);
    }
    Ok(rho)
}

/// Asymptotic per-sweep contraction of the fixed-point map, estimated by
/// power iteration on its linear part `v <- xi sum_l chi_l v(. + h l)`.
/// With variable coefficients this sits below [`contraction_factor`], which
/// is the worst-row Lipschitz constant; the two agree when the coefficients
/// are constant.
pub fn iteration_matrix_radius<S: Scalar>(p: &EllipticProblem<S>, sweeps: usize) -> Result<S> {
    assert!(sweeps > 0, "need at least one sweep");
    let chis = validate_problem(p)?;
    let grid = &p.ctx.grid;
    let h2 = grid.mesh() * grid.mesh();
    let c = p.ctx.stencil.c().sample(grid, p.ctx.time)?;
    let n = grid.len();
    let mut xi = vec![S::zero(); n];
    for k in 0..n {
        let chi_sum: S = chis.iter().map(|g| g.values()[k]).sum();
        let denom = h2 * c.values()[k] + chi_sum;
        if denom == S::zero() {
            return Err(Error::ZeroDenominator(k));
        }
        xi[k] = S::one() / denom;
    }
    let tables: Vec<Vec<usize>> = p
        .ctx
        .stencil
        .directions()
        .iter()
        .map(|l| grid.shift_table(l, 1))
        .collect::<Result<_>>()?;
    let mut v = vec![S::one(); n];
    let mut next = vec![S::zero(); n];
    let mut ratio = S::zero();
    for _ in 0..sweeps {
        let mut sup = S::zero();
        for k in 0..n {
            let mut acc = S::zero();
            for (chi_l, table) in chis.iter().zip(&tables) {
                acc = acc + chi_l.values()[k] * v[table[k]];
            }
            next[k] = xi[k] * acc;
            sup = sup.max(next[k].abs());
        }
        if sup == S::zero() {
            return Ok(S::zero());
        }
        ratio = sup;
        for x in next.iter_mut() {
            *x = *x / sup;
        }
        std::mem::swap(&mut v, &mut next);
    }
    Ok(ratio)
}

#[derive(Clone, Debug)]
pub struct EllipticSolution<S> {
    pub v: GridFunction<S>,
    pub iterations: usize,
    pub rho: S,
    /// Final `sup |L_h v + f|`.
    pub defect: S,
    /// Defect threshold implied by the stopping rule.
    pub defect_bound: S,
}

/// Iterate the fixed-point map from `v = 0` (Jacobi ordering) until the
/// sweep increment guarantees `||v - v*|| <= tol`, then check the defect.
pub fn solve_elliptic<S: Scalar>(
    p: &EllipticProblem<S>,
    cfg: &IterationConfig<S>,
) -> Result<EllipticSolution<S>> {
    assert!(cfg.tol > S::zero(), "tolerance must be positive");
    let chis = validate_problem(p)?;
    let grid = &p.ctx.grid;
    let h2 = grid.mesh() * grid.mesh();
    let c = p.ctx.stencil.c().sample(grid, p.ctx.time)?;
    let f = p.f.sample(grid, p.ctx.time)?;

    let n = grid.len();
    let mut xi = vec![S::zero(); n];
    let mut rho = S::zero();
    let mut denom_max = S::zero();
    for k in 0..n {
        let chi_sum: S = chis.iter().map(|g| g.values()[k]).sum();
        let denom = h2 * c.values()[k] + chi_sum;
        if denom == S::zero() {
            return Err(Error::ZeroDenominator(k));
        }
        xi[k] = S::one() / denom;
        rho = rho.max(chi_sum / denom);
        denom_max = denom_max.max(denom);
    }
    let tables: Vec<Vec<usize>> = p
        .ctx
        .stencil
        .directions()
        .iter()
        .map(|l| grid.shift_table(l, 1))
        .collect::<Result<_>>()?;

    // stopping threshold on the sweep increment: for rho = 0 one sweep is
    // exact, otherwise ||v^n - v*|| <= rho/(1-rho) ||v^{n+1} - v^n||
    let stop = if rho == S::zero() {
        S::infinity()
    } else {
        cfg.tol * (S::one() - rho) / rho
    };
    let cap = cfg.iter_cap(n);

    let mut v = vec![S::zero(); n];
    let mut next = vec![S::zero(); n];
    let mut iterations = 0usize;
    loop {
        for k in 0..n {
            let mut acc = h2 * f.values()[k];
            for (chi_l, table) in chis.iter().zip(&tables) {
                acc = acc + chi_l.values()[k] * v[table[k]];
            }
            next[k] = xi[k] * acc;
        }
        iterations += 1;
        let incr = v
            .iter()
            .zip(&next)
            .fold(S::zero(), |m, (&a, &b)| m.max((a - b).abs()));
        std::mem::swap(&mut v, &mut next);
        if rho == S::zero() || incr <= stop {
            break;
        }
        if iterations >= cap {
            let vg = GridFunction::new(grid.clone(), v);
            let defect = apply_lh(&p.ctx, &vg)?
                .zip_map(&f, |a, b| a + b)
                .sup_norm();
            return Err(Error::MaxItersExceeded {
                max_iters: iterations,
                rho: rho.to_f64().unwrap_or(f64::NAN),
                defect: defect.to_f64().unwrap_or(f64::NAN),
            });
        }
    }

    let vg = GridFunction::new(grid.clone(), v);
    let defect = apply_lh(&p.ctx, &vg)?
        .zip_map(&f, |a, b| a + b)
        .sup_norm();
    let defect_bound = cfg.tol * denom_max / h2;
    if defect > defect_bound {
        return Err(Error::CoefficientEval(format!(
            "converged iterate fails the defect check: {:?} > {:?}",
            defect, defect_bound
        )));
    }
    Ok(EllipticSolution {
        v: vg,
        iterations,
        rho,
        defect,
        defect_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::stencil::Stencil;

    fn const_stencil(dirs: Vec<Vec<i64>>, q: Vec<f64>, p: Vec<f64>, c: f64) -> Stencil<f64> {
        Stencil::new(
            dirs,
            q.into_iter().map(CoefficientField::constant).collect(),
            p.into_iter().map(CoefficientField::constant).collect(),
            CoefficientField::constant(c),
        )
        .unwrap()
    }

    fn prob(
        stencil: Stencil<f64>,
        n: usize,
        h: f64,
        f: CoefficientField<f64>,
        c_floor: f64,
    ) -> EllipticProblem<f64> {
        EllipticProblem {
            ctx: OperatorContext::new(stencil, GridSpec::cube(1, n, h), 0.0, 1.0),
            f,
            c_floor,
        }
    }

    #[test]
    fn rho_zero_without_diffusion_or_drift() {
        let s = const_stencil(vec![vec![1]], vec![0.0], vec![0.0], 2.0);
        let p = prob(s, 8, 0.125, CoefficientField::constant(4.0), 1.0);
        assert_eq!(contraction_factor(&p).unwrap(), 0.0);
    }

    #[test]
    fn rho_formula_for_symmetric_diffusion() {
        let s = const_stencil(vec![vec![1], vec![-1]], vec![1.0, 1.0], vec![0.0, 0.0], 1.0);
        let p = prob(s, 10, 0.1, CoefficientField::zero(), 1.0);
        let rho = contraction_factor(&p).unwrap();
        assert!((rho - 2.0 / 2.01).abs() < 1e-14, "rho = {rho}");
    }

    #[test]
    fn rho_decreases_when_c_grows() {
        let make = |c: f64| {
            let s = const_stencil(vec![vec![1], vec![-1]], vec![1.0, 1.0], vec![0.0, 0.0], c);
            prob(s, 10, 0.1, CoefficientField::zero(), 1.0)
        };
        let r1 = contraction_factor(&make(1.0)).unwrap();
        let r10 = contraction_factor(&make(10.0)).unwrap();
        assert!(r10 < r1);
    }

    #[test]
    fn radius_equals_rho_for_constant_coefficients() {
        // the constant vector is the Perron eigenvector, so power iteration
        // reproduces the worst-row constant exactly
        let s = const_stencil(vec![vec![1], vec![-1]], vec![1.0, 1.0], vec![0.0, 0.0], 1.0);
        let p = prob(s, 10, 0.1, CoefficientField::zero(), 1.0);
        let rho = contraction_factor(&p).unwrap();
        let radius = iteration_matrix_radius(&p, 50).unwrap();
        assert!((radius - rho).abs() < 1e-14, "{radius} vs {rho}");
    }

    #[test]
    fn radius_below_rho_for_vanishing_diffusion() {
        // diffusion that dies on part of the torus acts like an absorbing
        // region, so the asymptotic sweep rate beats the worst-row constant
        let s = Stencil::new(
            vec![vec![1], vec![-1]],
            vec![
                CoefficientField::parse("((1 - x1^2 + abs(1 - x1^2))/2)^2").unwrap(),
                CoefficientField::parse("((1 - x1^2 + abs(1 - x1^2))/2)^2").unwrap(),
            ],
            vec![CoefficientField::zero(), CoefficientField::zero()],
            CoefficientField::constant(1.0),
        )
        .unwrap();
        let p = EllipticProblem {
            ctx: OperatorContext::new(
                s,
                GridSpec::new(vec![64], 0.0625, vec![-2.0]),
                0.0,
                1.0,
            ),
            f: CoefficientField::zero(),
            c_floor: 1.0,
        };
        let rho = contraction_factor(&p).unwrap();
        let radius = iteration_matrix_radius(&p, 2000).unwrap();
        assert!(radius < rho, "{radius} vs {rho}");
        assert!(radius > 0.9, "{radius}");
    }

    #[test]
    fn direct_solve_when_rho_zero() {
        let s = const_stencil(vec![vec![1]], vec![0.0], vec![0.0], 2.0);
        let p = prob(s, 8, 0.125, CoefficientField::constant(4.0), 1.0);
        let sol = solve_elliptic(&p, &IterationConfig::default()).unwrap();
        assert_eq!(sol.iterations, 1);
        for &v in sol.v.values() {
            assert!((v - 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn single_point_torus_is_direct() {
        // all shifts wrap to the point itself, so L_h v = -c v exactly
        let s = const_stencil(vec![vec![1], vec![-1]], vec![1.0, 1.0], vec![0.5, 0.0], 2.0);
        let p = prob(s, 1, 0.25, CoefficientField::constant(6.0), 1.0);
        let sol = solve_elliptic(&p, &IterationConfig::default()).unwrap();
        assert!((sol.v.values()[0] - 3.0).abs() < 1e-10);
    }

    #[test]
    fn solves_manufactured_trigonometric_problem() {
        // v = sin(2 pi x), L = d^2/dx^2 - 1: f = (4 pi^2 + 1) sin(2 pi x)
        // solved on a fine grid; compare with second-order accuracy.
        let tau = std::f64::consts::TAU;
        let n = 64;
        let s = const_stencil(vec![vec![1], vec![-1]], vec![1.0, 1.0], vec![0.0, 0.0], 1.0);
        let f = CoefficientField::parse(&format!("{} * sin({} * x1)", tau * tau + 1.0, tau))
            .unwrap();
        let p = prob(s, n, 1.0 / n as f64, f, 1.0);
        // rho is within 1e-4 of 1 here, so the sweep count runs into the
        // hundreds of thousands; give the solver an explicit budget
        let cfg = IterationConfig {
            tol: 1e-10,
            max_iters: Some(1_000_000),
        };
        let sol = solve_elliptic(&p, &cfg).unwrap();
        let exact = GridFunction::from_fn(p.ctx.grid.clone(), |x| (tau * x[0]).sin());
        let err = sol.v.sub(&exact).sup_norm();
        assert!(err < 5e-3, "err = {err}");
        assert!(sol.defect <= sol.defect_bound);
    }

    #[test]
    fn positivity_and_sup_bound() {
        let s = const_stencil(vec![vec![1], vec![-1]], vec![1.0, 1.0], vec![0.2, 0.0], 1.5);
        let f = CoefficientField::parse("1 + sin(x1*6)").unwrap();
        let p = prob(s, 32, 1.0 / 32.0, f.clone(), 1.0);
        let sol = solve_elliptic(&p, &IterationConfig::default()).unwrap();
        let f_sup = f.measured_sup(&p.ctx.grid, &[0.0]).unwrap();
        for &v in sol.v.values() {
            assert!(v >= -1e-15);
            assert!(v <= f_sup / 1.0 + 1e-10);
        }
    }

    #[test]
    fn parabolic_steady_state_consistency() {
        use crate::parabolic::{solve_parabolic, ParabolicProblem, TimeIntegratorConfig};
        let s = const_stencil(vec![vec![1], vec![-1]], vec![1.0, 1.0], vec![0.0, 0.0], 1.0);
        let f = CoefficientField::parse("sin(x1*6) + 2").unwrap();
        let p = prob(s.clone(), 16, 0.0625, f.clone(), 1.0);
        let sol = solve_elliptic(&p, &IterationConfig::default()).unwrap();
        let parab = ParabolicProblem {
            ctx: p.ctx.clone(),
            f,
            g: CoefficientField::sampled(sol.v.clone()),
            horizon: 0.5,
        };
        let u = solve_parabolic(&parab, &TimeIntegratorConfig::default(), &[0.25, 0.5]).unwrap();
        for state in &u.states {
            assert!(state.sub(&sol.v).sup_norm() < 1e-9);
        }
    }

    #[test]
    fn max_iters_exceeded_reports_rho() {
        let s = const_stencil(vec![vec![1], vec![-1]], vec![1.0, 1.0], vec![0.0, 0.0], 1.0);
        let p = prob(s, 32, 1.0 / 32.0, CoefficientField::constant(1.0), 1.0);
        let cfg = IterationConfig {
            tol: 1e-12,
            max_iters: Some(3),
        };
        assert!(matches!(
            solve_elliptic(&p, &cfg),
            Err(Error::MaxItersExceeded { .. })
        ));
    }

    #[test]
    fn rejects_c_below_floor() {
        let s = const_stencil(vec![vec![1]], vec![1.0], vec![0.0], 0.5);
        let p = prob(s, 8, 0.125, CoefficientField::zero(), 1.0);
        assert!(solve_elliptic(&p, &IterationConfig::default()).is_err());
    }

    #[test]
    fn defect_bound_scale() {
        let s = const_stencil(vec![vec![1], vec![-1]], vec![1.0, 1.0], vec![0.0, 0.0], 1.0);
        let p = prob(s, 16, 0.0625, CoefficientField::constant(1.0), 1.0);
        let sol = solve_elliptic(&p, &IterationConfig::default()).unwrap();
        // (h^2 c + sum chi)_max / h^2 = 1 + 2/h^2
        let expect = 1e-12 * (1.0 + 2.0 / (0.0625f64 * 0.0625));
        assert!((sol.defect_bound - expect).abs() < 1e-18);
    }
}
