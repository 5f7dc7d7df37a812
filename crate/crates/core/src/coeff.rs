//! Space-time scalar coefficient fields: constants, closed-form
//! expressions, or arrays sampled on a reference grid.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::grid::{GridFunction, GridSpec};
use crate::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub enum FieldKind<S> {
    Constant(S),
    Expression(Expr),
    /// Time-independent samples on a fixed (usually finest) grid;
    /// evaluation on coarser dyadically nested grids restricts.
    Sampled(GridFunction<S>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientField<S> {
    kind: FieldKind<S>,
    /// Declared sup bound M0, if any; otherwise measured on demand.
    declared_bound: Option<S>,
}

impl<S: Scalar> CoefficientField<S> {
    pub fn constant(v: S) -> Self {
        CoefficientField {
            kind: FieldKind::Constant(v),
            declared_bound: None,
        }
    }

    pub fn zero() -> Self {
        Self::constant(S::zero())
    }

    pub fn expression(e: Expr) -> Self {
        CoefficientField {
            kind: FieldKind::Expression(e),
            declared_bound: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(Self::expression(Expr::parse(text)?))
    }

    pub fn sampled(g: GridFunction<S>) -> Self {
        CoefficientField {
            kind: FieldKind::Sampled(g),
            declared_bound: None,
        }
    }

    pub fn with_bound(mut self, bound: S) -> Self {
        self.declared_bound = Some(bound);
        self
    }

    pub fn kind(&self) -> &FieldKind<S> {
        &self.kind
    }

    pub fn declared_bound(&self) -> Option<S> {
        self.declared_bound
    }

    pub fn depends_on_t(&self) -> bool {
        match &self.kind {
            FieldKind::Constant(_) | FieldKind::Sampled(_) => false,
            FieldKind::Expression(e) => e.depends_on_t(),
        }
    }

    /// Point evaluation. Sampled fields require `x` to be (numerically) a
    /// point of their carrier grid.
    pub fn eval(&self, t: S, x: &[S]) -> Result<S> {
        match &self.kind {
            FieldKind::Constant(v) => Ok(*v),
            FieldKind::Expression(e) => e
                .eval(t, x)
                .map_err(|err| Error::CoefficientEval(format!("{err} at point {x:?}"))),
            FieldKind::Sampled(g) => {
                let spec = g.spec();
                if x.len() != spec.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: spec.dim(),
                        got: x.len(),
                    });
                }
                let mut coords = Vec::with_capacity(x.len());
                for a in 0..x.len() {
                    let rel = (x[a] - spec.origin()[a]) / spec.mesh();
                    let rounded = rel.round();
                    if (rel - rounded).abs() > S::from_f64_c(1e-9) {
                        return Err(Error::CoefficientEval(format!(
                            "point {x:?} is not on the sample grid"
                        )));
                    }
                    let n = spec.cells()[a] as i64;
                    let idx = rounded
                        .to_f64()
                        .map(|v| (v as i64).rem_euclid(n) as usize)
                        .ok_or_else(|| Error::CoefficientEval("index overflow".into()))?;
                    coords.push(idx);
                }
                Ok(g.values()[spec.linear(&coords)])
            }
        }
    }

    /// Sample the field on a grid at time `t`. Sampled fields restrict to
    /// dyadically nested coarser grids.
    pub fn sample(&self, spec: &GridSpec<S>, t: S) -> Result<GridFunction<S>> {
        match &self.kind {
            FieldKind::Constant(v) => Ok(GridFunction::constant(spec.clone(), *v)),
            FieldKind::Expression(e) => {
                let mut values = Vec::with_capacity(spec.len());
                for i in 0..spec.len() {
                    let x = spec.point(i);
                    let v = e
                        .eval(t, &x)
                        .map_err(|err| Error::CoefficientEval(format!("{err} at point {x:?}")))?;
                    if !v.is_finite() {
                        return Err(Error::CoefficientEval(format!(
                            "non-finite value at point {x:?}"
                        )));
                    }
                    values.push(v);
                }
                Ok(GridFunction::new(spec.clone(), values))
            }
            FieldKind::Sampled(g) => {
                if g.spec() == spec {
                    Ok(g.clone())
                } else {
                    g.restrict_to(spec)
                }
            }
        }
    }

    /// Sampled sup of |field| over the grid and the given times.
    pub fn measured_sup(&self, spec: &GridSpec<S>, times: &[S]) -> Result<S> {
        let eval_times: &[S] = if self.depends_on_t() { times } else { &times[..1] };
        let mut sup = S::zero();
        for &t in eval_times {
            sup = sup.max(self.sample(spec, t)?.sup_norm());
        }
        Ok(sup)
    }

    /// `ca * self + cb * other`, staying closed-form where possible.
    pub fn lin_comb(&self, ca: S, other: &Self, cb: S) -> Result<Self> {
        use FieldKind::*;
        let kind = match (&self.kind, &other.kind) {
            (Constant(a), Constant(b)) => Constant(ca * *a + cb * *b),
            (Sampled(a), Sampled(b)) => {
                if a.spec() != b.spec() {
                    return Err(Error::MeshMismatch(
                        "sampled fields live on different grids".into(),
                    ));
                }
                Sampled(a.zip_map(b, |x, y| ca * x + cb * y))
            }
            (Sampled(a), Constant(b)) => Sampled(a.map(|x| ca * x + cb * *b)),
            (Constant(a), Sampled(b)) => Sampled(b.map(|y| ca * *a + cb * y)),
            _ => {
                // fall back to an expression AST
                let ea = self.to_expr()?;
                let eb = other.to_expr()?;
                let scaled = |c: S, e: Expr| {
                    Expr::Binary(
                        crate::expr::BinOp::Mul,
                        Box::new(Expr::num(c.to_f64().unwrap())),
                        Box::new(e),
                    )
                };
                Expression(Expr::Binary(
                    crate::expr::BinOp::Add,
                    Box::new(scaled(ca, ea)),
                    Box::new(scaled(cb, eb)),
                ))
            }
        };
        Ok(CoefficientField {
            kind,
            declared_bound: None,
        })
    }

    /// `self + offset`.
    pub fn offset(&self, offset: S) -> Result<Self> {
        self.lin_comb(S::one(), &Self::constant(offset), S::one())
    }

    fn to_expr(&self) -> Result<Expr> {
        match &self.kind {
            FieldKind::Constant(v) => Ok(Expr::num(v.to_f64().unwrap())),
            FieldKind::Expression(e) => Ok(e.clone()),
            FieldKind::Sampled(_) => Err(Error::MeshMismatch(
                "cannot mix a sampled field with a closed-form field".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_samples_everywhere() {
        let spec = GridSpec::cube(1, 4, 0.25);
        let f = CoefficientField::constant(2.5);
        let g = f.sample(&spec, 0.0).unwrap();
        assert!(g.values().iter().all(|&v| v == 2.5));
    }

    #[test]
    fn expression_samples_points() {
        let spec = GridSpec::new(vec![4], 0.25, vec![0.0]);
        let f = CoefficientField::parse("x1*2 + t").unwrap();
        let g = f.sample(&spec, 1.0).unwrap();
        assert_eq!(g.values(), &[1.0, 1.5, 2.0, 2.5]);
    }

    #[test]
    fn sampled_restricts_to_coarse_grid() {
        let fine = GridSpec::new(vec![8], 0.125, vec![0.0]);
        let coarse = GridSpec::new(vec![4], 0.25, vec![0.0]);
        let stored = GridFunction::from_fn(fine, |x| x[0]);
        let f = CoefficientField::sampled(stored);
        let g = f.sample(&coarse, 0.0).unwrap();
        assert_eq!(g.values(), &[0.0, 0.25, 0.5, 0.75]);
        // refinement beyond the stored grid is rejected
        let finer = GridSpec::new(vec![16], 0.0625, vec![0.0]);
        assert!(f.sample(&finer, 0.0).is_err());
    }

    #[test]
    fn sampled_point_eval() {
        let spec = GridSpec::new(vec![4], 0.25, vec![0.0]);
        let f = CoefficientField::sampled(GridFunction::from_fn(spec, |x| x[0] + 1.0));
        assert_eq!(f.eval(0.0, &[0.5]).unwrap(), 1.5);
        assert!(f.eval(0.0, &[0.3]).is_err());
    }

    #[test]
    fn lin_comb_of_constants() {
        let a = CoefficientField::constant(2.0);
        let b = CoefficientField::constant(4.0);
        let c = a.lin_comb(0.5, &b, 0.5).unwrap();
        assert_eq!(c.eval(0.0, &[0.0]).unwrap(), 3.0);
    }

    #[test]
    fn lin_comb_of_expressions() {
        let a: CoefficientField<f64> = CoefficientField::parse("x1").unwrap();
        let b = CoefficientField::parse("x1^2").unwrap();
        let c = a.lin_comb(2.0, &b, -1.0).unwrap();
        assert!((c.eval(0.0, &[3.0]).unwrap() - (6.0 - 9.0)).abs() < 1e-14);
    }

    #[test]
    fn measured_sup_on_grid() {
        let spec = GridSpec::new(vec![8], 0.125, vec![0.0]);
        let f = CoefficientField::parse("x1 - 2").unwrap();
        let sup = f.measured_sup(&spec, &[0.0]).unwrap();
        assert_eq!(sup, 2.0);
    }
}
