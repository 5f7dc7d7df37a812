//! Stencils: the finite direction set with coefficient fields, the
//! structural validations behind the monotone difference operator, and the
//! symmetrization construction.

use crate::coeff::CoefficientField;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};
use crate::Scalar;

/// Relative tolerance scale for sampled structural checks.
fn check_tol<S: Scalar>(m0: S) -> S {
    S::from_f64_c(1e-12) * (S::one() + m0)
}

/// Direction set with per-direction diffusion (`q`) and drift (`p`)
/// coefficient fields plus the zero-order coefficient `c`.
#[derive(Clone, Debug)]
pub struct Stencil<S> {
    directions: Vec<Vec<i64>>,
    q: Vec<CoefficientField<S>>,
    p: Vec<CoefficientField<S>>,
    c: CoefficientField<S>,
    declared_m0: Option<S>,
}

impl<S: Scalar> Stencil<S> {
    pub fn new(
        directions: Vec<Vec<i64>>,
        q: Vec<CoefficientField<S>>,
        p: Vec<CoefficientField<S>>,
        c: CoefficientField<S>,
    ) -> Result<Self> {
        if directions.is_empty() {
            return Err(Error::InvalidStencil("empty direction set".into()));
        }
        let dim = directions[0].len();
        for d in &directions {
            if d.len() != dim {
                return Err(Error::InvalidStencil("mixed direction dimensions".into()));
            }
            if d.iter().all(|&c| c == 0) {
                return Err(Error::InvalidStencil("zero direction not allowed".into()));
            }
        }
        for i in 0..directions.len() {
            for j in i + 1..directions.len() {
                if directions[i] == directions[j] {
                    return Err(Error::InvalidStencil(format!(
                        "duplicate direction {:?}",
                        directions[i]
                    )));
                }
            }
        }
        if q.len() != directions.len() || p.len() != directions.len() {
            return Err(Error::InvalidStencil(
                "coefficient lists must match the direction set".into(),
            ));
        }
        Ok(Stencil {
            directions,
            q,
            p,
            c,
            declared_m0: None,
        })
    }

    /// Convenience constructor with zero drift.
    pub fn diffusion_only(
        directions: Vec<Vec<i64>>,
        q: Vec<CoefficientField<S>>,
        c: CoefficientField<S>,
    ) -> Result<Self> {
        let p = vec![CoefficientField::zero(); directions.len()];
        Self::new(directions, q, p, c)
    }

    pub fn with_declared_m0(mut self, m0: S) -> Self {
        self.declared_m0 = Some(m0);
        self
    }

    pub fn dim(&self) -> usize {
        self.directions[0].len()
    }

    pub fn directions(&self) -> &[Vec<i64>] {
        &self.directions
    }

    pub fn q(&self, idx: usize) -> &CoefficientField<S> {
        &self.q[idx]
    }

    pub fn p(&self, idx: usize) -> &CoefficientField<S> {
        &self.p[idx]
    }

    pub fn c(&self) -> &CoefficientField<S> {
        &self.c
    }

    pub fn index_of(&self, lambda: &[i64]) -> Option<usize> {
        self.directions.iter().position(|d| d == lambda)
    }

    pub fn is_time_dependent(&self) -> bool {
        self.q.iter().any(|f| f.depends_on_t())
            || self.p.iter().any(|f| f.depends_on_t())
            || self.c.depends_on_t()
    }

    /// Declared M0 or the sampled sup over all coefficient fields on the
    /// grid and listed times.
    pub fn m0(&self, grid: &GridSpec<S>, times: &[S]) -> Result<S> {
        if let Some(b) = self.declared_m0 {
            return Ok(b);
        }
        let mut sup = self.c.measured_sup(grid, times)?;
        for i in 0..self.directions.len() {
            sup = sup.max(self.q[i].measured_sup(grid, times)?);
            sup = sup.max(self.p[i].measured_sup(grid, times)?);
        }
        Ok(sup)
    }

    /// Symmetry condition (S): the direction set equals its negation and
    /// `q_lambda = q_{-lambda}` pointwise on the grid.
    pub fn condition_s(&self, grid: &GridSpec<S>, times: &[S]) -> Result<bool> {
        let tol = check_tol(self.m0(grid, times)?);
        for (i, d) in self.directions.iter().enumerate() {
            let neg: Vec<i64> = d.iter().map(|&c| -c).collect();
            let Some(j) = self.index_of(&neg) else {
                return Ok(false);
            };
            for &t in times {
                let qi = self.q[i].sample(grid, t)?;
                let qj = self.q[j].sample(grid, t)?;
                if qi.sub(&qj).sup_norm() > tol {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Drift antisymmetry: `p_{-lambda} = -p_lambda` pointwise.
    pub fn p_antisym(&self, grid: &GridSpec<S>, times: &[S]) -> Result<bool> {
        let tol = check_tol(self.m0(grid, times)?);
        for (i, d) in self.directions.iter().enumerate() {
            let neg: Vec<i64> = d.iter().map(|&c| -c).collect();
            let Some(j) = self.index_of(&neg) else {
                return Ok(false);
            };
            for &t in times {
                let pi = self.p[i].sample(grid, t)?;
                let pj = self.p[j].sample(grid, t)?;
                let residual = pi.zip_map(&pj, |a, b| a + b).sup_norm();
                if residual > tol {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Continuum data at `(t, x)`: diffusion matrix `a = 1/2 sum q l l^T`,
    /// drift `b = sum p l`, and the zero-order coefficient.
    #[allow(clippy::type_complexity)]
    pub fn continuum_coeffs(&self, t: S, x: &[S]) -> Result<(Vec<Vec<S>>, Vec<S>, S)> {
        let d = self.dim();
        let half = S::from_f64_c(0.5);
        let mut a = vec![vec![S::zero(); d]; d];
        let mut b = vec![S::zero(); d];
        for (idx, lambda) in self.directions.iter().enumerate() {
            let qv = self.q[idx].eval(t, x)?;
            let pv = self.p[idx].eval(t, x)?;
            for i in 0..d {
                let li = S::from_f64_c(lambda[i] as f64);
                b[i] = b[i] + pv * li;
                for j in 0..d {
                    let lj = S::from_f64_c(lambda[j] as f64);
                    a[i][j] = a[i][j] + half * qv * li * lj;
                }
            }
        }
        let cv = self.c.eval(t, x)?;
        Ok((a, b, cv))
    }

    /// Symmetrized stencil: direction set closed under negation, symmetric
    /// nonnegative `q`, nonnegative `p`, identical continuum data.
    pub fn symmetrize(&self, grid: &GridSpec<S>, times: &[S]) -> Result<Stencil<S>> {
        let m0 = self.m0(grid, times)?;
        // declared bound must dominate every sampled |p|
        for p in &self.p {
            let sampled = p.measured_sup(grid, times)?;
            if sampled > m0 {
                return Err(Error::BoundTooSmall {
                    declared: m0.to_f64().unwrap_or(f64::NAN),
                    sampled: sampled.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        let half = S::from_f64_c(0.5);
        let mut new_dirs: Vec<Vec<i64>> = Vec::new();
        for d in &self.directions {
            let neg: Vec<i64> = d.iter().map(|&c| -c).collect();
            if !new_dirs.contains(d) {
                new_dirs.push(d.clone());
            }
            if !new_dirs.contains(&neg) {
                new_dirs.push(neg);
            }
        }
        let mut new_q = Vec::with_capacity(new_dirs.len());
        let mut new_p = Vec::with_capacity(new_dirs.len());
        for d in &new_dirs {
            let neg: Vec<i64> = d.iter().map(|&c| -c).collect();
            let pos_idx = self.index_of(d);
            let neg_idx = self.index_of(&neg);
            let (qhat, phat) = match (pos_idx, neg_idx) {
                (Some(i), Some(j)) => {
                    let qhat = self.q[i].lin_comb(half, &self.q[j], half)?;
                    let phat = self.p[i].offset(m0)?;
                    (qhat, phat)
                }
                (Some(i), None) => {
                    // one-sided direction: this orientation carries +p/2
                    let qhat = self.q[i]
                        .lin_comb(half, &CoefficientField::zero(), S::zero())?;
                    let phat = self.p[i]
                        .lin_comb(half, &CoefficientField::constant(m0), S::one())?;
                    (qhat, phat)
                }
                (None, Some(j)) => {
                    let qhat = self.q[j]
                        .lin_comb(half, &CoefficientField::zero(), S::zero())?;
                    let phat = self.p[j]
                        .lin_comb(-half, &CoefficientField::constant(m0), S::one())?;
                    (qhat, phat)
                }
                (None, None) => unreachable!("direction came from the original set"),
            };
            new_q.push(qhat);
            new_p.push(phat);
        }
        Stencil::new(new_dirs, new_q, new_p, self.c.clone())
    }
}

/// Stencil + grid + evaluation time + mesh cap: everything an operator
/// application needs.
#[derive(Clone, Debug)]
pub struct OperatorContext<S> {
    pub stencil: Stencil<S>,
    pub grid: GridSpec<S>,
    pub time: S,
    pub h0: S,
}

impl<S: Scalar> OperatorContext<S> {
    pub fn new(stencil: Stencil<S>, grid: GridSpec<S>, time: S, h0: S) -> Self {
        assert!(grid.mesh() <= h0, "grid mesh exceeds the cap h0");
        OperatorContext {
            stencil,
            grid,
            time,
            h0,
        }
    }

    pub fn at_time(&self, time: S) -> Self {
        let mut ctx = self.clone();
        ctx.time = time;
        ctx
    }

    /// Same stencil and cap on a refined grid.
    pub fn on_grid(&self, grid: GridSpec<S>) -> Self {
        assert!(grid.mesh() <= self.h0);
        OperatorContext {
            stencil: self.stencil.clone(),
            grid,
            time: self.time,
            h0: self.h0,
        }
    }
}

/// Off-center weight field `chi_{h,lambda} = q_lambda + h p_lambda`.
pub fn chi<S: Scalar>(ctx: &OperatorContext<S>, lambda: &[i64]) -> Result<GridFunction<S>> {
    let idx = ctx
        .stencil
        .index_of(lambda)
        .ok_or_else(|| Error::DirectionNotInStencil(lambda.to_vec()))?;
    let h = ctx.grid.mesh();
    let q = ctx.stencil.q(idx).sample(&ctx.grid, ctx.time)?;
    let p = ctx.stencil.p(idx).sample(&ctx.grid, ctx.time)?;
    Ok(q.zip_map(&p, |qv, pv| qv + h * pv))
}

#[derive(Clone, Debug)]
pub struct MonotoneReport<S> {
    pub pass: bool,
    pub min_chi: S,
    pub direction: Vec<i64>,
    pub time: S,
    pub grid_index: usize,
}

/// Check the off-center weights `chi >= 0` on the grid at each listed time.
pub fn validate_monotone<S: Scalar>(
    ctx: &OperatorContext<S>,
    times: &[S],
) -> Result<MonotoneReport<S>> {
    let mut report = MonotoneReport {
        pass: true,
        min_chi: S::infinity(),
        direction: ctx.stencil.directions()[0].clone(),
        time: times.first().copied().unwrap_or(ctx.time),
        grid_index: 0,
    };
    for &t in times {
        let at_t = ctx.at_time(t);
        for lambda in ctx.stencil.directions() {
            let field = chi(&at_t, lambda)?;
            for (i, &v) in field.values().iter().enumerate() {
                if v < report.min_chi {
                    report.min_chi = v;
                    report.direction = lambda.clone();
                    report.time = t;
                    report.grid_index = i;
                }
            }
        }
    }
    report.pass = report.min_chi >= S::zero();
    Ok(report)
}

#[derive(Clone, Debug)]
pub struct ConsistencyReport<S> {
    /// Zero drift sum `sum lambda q_lambda = 0` within tolerance.
    pub pass: bool,
    /// Max over samples and components of `|sum lambda q_lambda|`.
    pub max_residual: S,
    /// Max spatial variation of the drift sum (x-independence check).
    pub max_x_variation: S,
    pub tolerance: S,
}

/// Check the zero weighted-direction sum and its x-independence by sampling.
pub fn validate_consistency<S: Scalar>(
    ctx: &OperatorContext<S>,
    times: &[S],
) -> Result<ConsistencyReport<S>> {
    let d = ctx.stencil.dim();
    let tol = check_tol(ctx.stencil.m0(&ctx.grid, times)?);
    let mut max_residual = S::zero();
    let mut max_x_variation = S::zero();
    for &t in times {
        let samples: Vec<GridFunction<S>> = (0..ctx.stencil.directions().len())
            .map(|i| ctx.stencil.q(i).sample(&ctx.grid, t))
            .collect::<Result<_>>()?;
        for axis in 0..d {
            let mut lo = S::infinity();
            let mut hi = S::neg_infinity();
            for point in 0..ctx.grid.len() {
                let mut sum = S::zero();
                for (i, lambda) in ctx.stencil.directions().iter().enumerate() {
                    sum = sum + S::from_f64_c(lambda[axis] as f64) * samples[i].values()[point];
                }
                max_residual = max_residual.max(sum.abs());
                lo = lo.min(sum);
                hi = hi.max(sum);
            }
            max_x_variation = max_x_variation.max(hi - lo);
        }
    }
    Ok(ConsistencyReport {
        pass: max_residual <= tol,
        max_residual,
        max_x_variation,
        tolerance: tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid1d(n: usize, h: f64) -> GridSpec<f64> {
        GridSpec::cube(1, n, h)
    }

    fn const_stencil(
        dirs: Vec<Vec<i64>>,
        q: Vec<f64>,
        p: Vec<f64>,
        c: f64,
    ) -> Stencil<f64> {
        Stencil::new(
            dirs,
            q.into_iter().map(CoefficientField::constant).collect(),
            p.into_iter().map(CoefficientField::constant).collect(),
            CoefficientField::constant(c),
        )
        .unwrap()
    }

    #[test]
    fn rejects_zero_direction() {
        let err = Stencil::new(
            vec![vec![0]],
            vec![CoefficientField::constant(1.0)],
            vec![CoefficientField::zero()],
            CoefficientField::zero(),
        );
        assert!(err.is_err());
    }

    #[test]
    fn chi_is_q_plus_h_p() {
        let s = const_stencil(vec![vec![1]], vec![1.0], vec![-2.0], 0.0);
        let ctx = OperatorContext::new(s, grid1d(4, 0.4), 0.0, 1.0);
        let field = chi(&ctx, &[1]).unwrap();
        for &v in field.values() {
            assert!((v - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn chi_reduces_to_q_without_drift() {
        let s = const_stencil(vec![vec![1]], vec![0.7], vec![0.0], 0.0);
        let ctx = OperatorContext::new(s, grid1d(4, 0.1), 0.0, 1.0);
        let field = chi(&ctx, &[1]).unwrap();
        assert!(field.values().iter().all(|&v| v == 0.7));
    }

    #[test]
    fn monotone_validation_cases() {
        let pass = const_stencil(vec![vec![1]], vec![1.0], vec![0.0], 0.0);
        let ctx = OperatorContext::new(pass, grid1d(4, 0.1), 0.0, 1.0);
        let r = validate_monotone(&ctx, &[0.0]).unwrap();
        assert!(r.pass);
        assert_eq!(r.min_chi, 1.0);

        let drift_only = const_stencil(vec![vec![1]], vec![0.0], vec![1.0], 0.0);
        let ctx = OperatorContext::new(drift_only, grid1d(4, 0.1), 0.0, 1.0);
        let r = validate_monotone(&ctx, &[0.0]).unwrap();
        assert!(r.pass);
        assert!((r.min_chi - 0.1).abs() < 1e-15);

        let bad = const_stencil(vec![vec![1]], vec![0.1], vec![-2.0], 0.0);
        let ctx = OperatorContext::new(bad, grid1d(4, 0.1), 0.0, 1.0);
        let r = validate_monotone(&ctx, &[0.0]).unwrap();
        assert!(!r.pass);
        assert!((r.min_chi + 0.1).abs() < 1e-15);
    }

    #[test]
    fn consistency_validation_cases() {
        let sym = const_stencil(vec![vec![1], vec![-1]], vec![2.0, 2.0], vec![0.0, 0.0], 0.0);
        let ctx = OperatorContext::new(sym, grid1d(8, 0.125), 0.0, 1.0);
        let r = validate_consistency(&ctx, &[0.0]).unwrap();
        assert!(r.pass);
        assert_eq!(r.max_residual, 0.0);

        let one_sided = const_stencil(vec![vec![1]], vec![1.0], vec![0.0], 0.0);
        let ctx = OperatorContext::new(one_sided, grid1d(8, 0.125), 0.0, 1.0);
        let r = validate_consistency(&ctx, &[0.0]).unwrap();
        assert!(!r.pass);
        assert!((r.max_residual - 1.0).abs() < 1e-15);
    }

    #[test]
    fn condition_s_detection() {
        let grid = grid1d(8, 0.125);
        let sym = const_stencil(vec![vec![1], vec![-1]], vec![3.0, 3.0], vec![0.0, 0.0], 0.0);
        assert!(sym.condition_s(&grid, &[0.0]).unwrap());
        let asym = const_stencil(vec![vec![1], vec![-1]], vec![3.0, 2.0], vec![0.0, 0.0], 0.0);
        assert!(!asym.condition_s(&grid, &[0.0]).unwrap());
        let one_sided = const_stencil(vec![vec![1]], vec![1.0], vec![0.0], 0.0);
        assert!(!one_sided.condition_s(&grid, &[0.0]).unwrap());
    }

    #[test]
    fn p_antisym_detection() {
        let grid = grid1d(8, 0.125);
        let skew = const_stencil(vec![vec![1], vec![-1]], vec![1.0, 1.0], vec![0.5, -0.5], 0.0);
        assert!(skew.p_antisym(&grid, &[0.0]).unwrap());
        let not = const_stencil(vec![vec![1], vec![-1]], vec![1.0, 1.0], vec![0.5, 0.5], 0.0);
        assert!(!not.p_antisym(&grid, &[0.0]).unwrap());
    }

    #[test]
    fn symmetrize_averages_q() {
        // q 2 and 4 on opposite directions average to 3 on both.
        let grid = grid1d(8, 0.125);
        let s = const_stencil(vec![vec![1], vec![-1]], vec![2.0, 4.0], vec![0.0, 0.0], 0.0)
            .with_declared_m0(4.0);
        let sym = s.symmetrize(&grid, &[0.0]).unwrap();
        for i in 0..2 {
            assert!((sym.q(i).eval(0.0, &[0.0]).unwrap() - 3.0).abs() < 1e-15);
        }
        assert!(sym.condition_s(&grid, &[0.0]).unwrap());
    }

    #[test]
    fn symmetrize_shifts_p_and_preserves_drift() {
        let grid = grid1d(8, 0.125);
        let s = const_stencil(vec![vec![1], vec![-1]], vec![2.0, 4.0], vec![1.0, 0.0], 0.0)
            .with_declared_m0(4.0);
        let sym = s.symmetrize(&grid, &[0.0]).unwrap();
        let i_pos = sym.index_of(&[1]).unwrap();
        let i_neg = sym.index_of(&[-1]).unwrap();
        assert!((sym.p(i_pos).eval(0.0, &[0.0]).unwrap() - 5.0).abs() < 1e-15);
        assert!((sym.p(i_neg).eval(0.0, &[0.0]).unwrap() - 4.0).abs() < 1e-15);
        // drift sum preserved by hand: 5 - 4 = 1 = original 1 - 0
        let (_, b_old, _) = s.continuum_coeffs(0.0, &[0.0]).unwrap();
        let (_, b_new, _) = sym.continuum_coeffs(0.0, &[0.0]).unwrap();
        assert!((b_old[0] - b_new[0]).abs() < 1e-15);
    }

    #[test]
    fn symmetrize_fixed_point() {
        let grid = grid1d(8, 0.125);
        let s = const_stencil(vec![vec![1], vec![-1]], vec![1.0, 1.0], vec![0.0, 0.0], 0.0)
            .with_declared_m0(0.0);
        let sym = s.symmetrize(&grid, &[0.0]).unwrap();
        for i in 0..2 {
            assert_eq!(sym.q(i).eval(0.0, &[0.0]).unwrap(), 1.0);
            assert_eq!(sym.p(i).eval(0.0, &[0.0]).unwrap(), 0.0);
        }
    }

    #[test]
    fn symmetrize_rejects_small_declared_bound() {
        let grid = grid1d(8, 0.125);
        let s = const_stencil(vec![vec![1]], vec![1.0], vec![3.0], 0.0).with_declared_m0(1.0);
        assert!(matches!(
            s.symmetrize(&grid, &[0.0]),
            Err(Error::BoundTooSmall { .. })
        ));
    }

    #[test]
    fn symmetrize_preserves_continuum_data_pointwise() {
        let grid = GridSpec::new(vec![8], 0.125, vec![0.0]);
        let s: Stencil<f64> = Stencil::new(
            vec![vec![1], vec![-1], vec![2]],
            vec![
                CoefficientField::parse("1 + x1^2").unwrap(),
                CoefficientField::parse("2 - x1").unwrap(),
                CoefficientField::parse("0.5").unwrap(),
            ],
            vec![
                CoefficientField::parse("x1").unwrap(),
                CoefficientField::zero(),
                CoefficientField::constant(0.25),
            ],
            CoefficientField::constant(1.0),
        )
        .unwrap()
        .with_declared_m0(4.0);
        let sym = s.symmetrize(&grid, &[0.0]).unwrap();
        for i in 0..grid.len() {
            let x = grid.point(i);
            let (a0, b0, c0) = s.continuum_coeffs(0.0, &x).unwrap();
            let (a1, b1, c1) = sym.continuum_coeffs(0.0, &x).unwrap();
            assert!((a0[0][0] - a1[0][0]).abs() < 1e-12);
            assert!((b0[0] - b1[0]).abs() < 1e-12);
            assert!((c0 - c1).abs() < 1e-12);
        }
        // and every new p is nonnegative on the grid
        for i in 0..sym.directions().len() {
            let sampled = sym.p(i).sample(&grid, 0.0).unwrap();
            assert!(sampled.values().iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn continuum_coeffs_examples() {
        let s = const_stencil(vec![vec![1], vec![-1]], vec![1.0, 1.0], vec![0.0, 0.0], 0.0);
        let (a, b, _) = s.continuum_coeffs(0.0, &[0.0]).unwrap();
        assert_eq!(a[0][0], 1.0);
        assert_eq!(b[0], 0.0);

        let drift = const_stencil(vec![vec![1]], vec![0.0], vec![3.0], 0.0);
        let (a, b, _) = drift.continuum_coeffs(0.0, &[0.0]).unwrap();
        assert_eq!(a[0][0], 0.0);
        assert_eq!(b[0], 3.0);

        // d = 2, diagonal pair with q = 2: a = [[2, 2], [2, 2]]
        let diag = const_stencil(
            vec![vec![1, 1], vec![-1, -1]],
            vec![2.0, 2.0],
            vec![0.0, 0.0],
            0.0,
        );
        let (a, _, _) = diag.continuum_coeffs(0.0, &[0.0, 0.0]).unwrap();
        for row in &a {
            for &v in row {
                assert_eq!(v, 2.0);
            }
        }
    }
}
