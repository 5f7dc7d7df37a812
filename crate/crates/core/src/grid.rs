//! Periodic lattice grid functions and the shift/difference calculus.
//!
//! Grids are uniform periodic lattices on a d-dimensional torus with a
//! common origin. All difference operators wrap around periodically, so a
//! shift is an exact permutation of the stored values.

use crate::error::{Error, Result};
use crate::Scalar;

/// Maximum order of composed forward differences `delta_alpha` and of the
/// discrete seminorms.
pub const ORDER_CAP: usize = 4;

/// A uniform periodic lattice: `n[a]` cells along axis `a`, mesh size `h`,
/// per-axis extent `n[a] * h`, anchored at `origin`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec<S> {
    n: Vec<usize>,
    h: S,
    origin: Vec<S>,
}

impl<S: Scalar> GridSpec<S> {
    pub fn new(n: Vec<usize>, h: S, origin: Vec<S>) -> Self {
        assert!(!n.is_empty(), "grid must have at least one axis");
        assert!(n.iter().all(|&k| k >= 1), "every axis needs N >= 1");
        assert!(h > S::zero(), "mesh size must be positive");
        assert_eq!(n.len(), origin.len(), "origin must match dimension");
        GridSpec { n, h, origin }
    }

    /// Cube grid with `n` cells per axis and origin zero.
    pub fn cube(dim: usize, n: usize, h: S) -> Self {
        Self::new(vec![n; dim], h, vec![S::zero(); dim])
    }

    pub fn dim(&self) -> usize {
        self.n.len()
    }

    pub fn mesh(&self) -> S {
        self.h
    }

    pub fn cells(&self) -> &[usize] {
        &self.n
    }

    pub fn origin(&self) -> &[S] {
        &self.origin
    }

    pub fn period(&self, axis: usize) -> S {
        S::from_usize_c(self.n[axis]) * self.h
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Dyadic refinement: every factor-2 refinement shares this grid's
    /// point set (same origin).
    pub fn refine(&self, factor: usize) -> Self {
        assert!(factor >= 1);
        GridSpec {
            n: self.n.iter().map(|&k| k * factor).collect(),
            h: self.h / S::from_usize_c(factor),
            origin: self.origin.clone(),
        }
    }

    /// Integer stride of `self`'s points inside `fine`, if `fine` refines
    /// this grid with a shared origin.
    pub fn stride_in(&self, fine: &GridSpec<S>) -> Result<usize> {
        if self.dim() != fine.dim() || self.origin != fine.origin {
            return Err(Error::NonNestedGrids("different origin or dimension".into()));
        }
        for a in 0..self.dim() {
            if fine.n[a] % self.n[a] != 0 {
                return Err(Error::NonNestedGrids(format!(
                    "axis {a}: {} does not divide {}",
                    self.n[a], fine.n[a]
                )));
            }
        }
        let ratio = fine.n[0] / self.n[0];
        if self.n.iter().zip(&fine.n).any(|(&c, &f)| f / c != ratio) {
            return Err(Error::NonNestedGrids("anisotropic refinement".into()));
        }
        Ok(ratio)
    }

    pub fn coords(&self, mut linear: usize) -> Vec<usize> {
        let d = self.dim();
        let mut c = vec![0usize; d];
        for a in (0..d).rev() {
            c[a] = linear % self.n[a];
            linear /= self.n[a];
        }
        c
    }

    pub fn linear(&self, coords: &[usize]) -> usize {
        let mut idx = 0usize;
        for a in 0..self.dim() {
            idx = idx * self.n[a] + coords[a];
        }
        idx
    }

    /// Physical coordinates of the grid point with the given linear index.
    pub fn point(&self, linear: usize) -> Vec<S> {
        self.coords(linear)
            .iter()
            .enumerate()
            .map(|(a, &i)| self.origin[a] + S::from_usize_c(i) * self.h)
            .collect()
    }

    /// Linear index after a periodic move by `steps * lambda` lattice cells.
    pub fn shifted_linear(&self, linear: usize, lambda: &[i64], steps: i64) -> usize {
        let coords = self.coords(linear);
        let mut idx = 0usize;
        for a in 0..self.dim() {
            let n = self.n[a] as i64;
            let moved = (coords[a] as i64 + steps * lambda[a]).rem_euclid(n);
            idx = idx * self.n[a] + moved as usize;
        }
        idx
    }

    /// Precomputed permutation table for a shift by `steps * lambda`.
    pub fn shift_table(&self, lambda: &[i64], steps: i64) -> Result<Vec<usize>> {
        if lambda.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: lambda.len(),
            });
        }
        Ok((0..self.len())
            .map(|i| self.shifted_linear(i, lambda, steps))
            .collect())
    }
}

/// Multi-index of differentiation orders per axis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiIndex {
    alpha: Vec<usize>,
}

impl MultiIndex {
    pub fn new(alpha: Vec<usize>) -> Self {
        MultiIndex { alpha }
    }

    pub fn components(&self) -> &[usize] {
        &self.alpha
    }

    pub fn order(&self) -> usize {
        self.alpha.iter().sum()
    }
}

/// All multi-indices of dimension `d` with total order exactly `order`.
pub fn multi_indices(d: usize, order: usize) -> Vec<MultiIndex> {
    fn rec(d: usize, order: usize, prefix: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
        if d == 1 {
            prefix.push(order);
            out.push(MultiIndex::new(prefix.clone()));
            prefix.pop();
            return;
        }
        for k in 0..=order {
            prefix.push(k);
            rec(d - 1, order - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, order, &mut Vec::new(), &mut out);
    out
}

/// Real values sampled on a periodic lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction<S> {
    spec: GridSpec<S>,
    values: Vec<S>,
}

impl<S: Scalar> GridFunction<S> {
    pub fn new(spec: GridSpec<S>, values: Vec<S>) -> Self {
        assert_eq!(spec.len(), values.len());
        GridFunction { spec, values }
    }

    pub fn constant(spec: GridSpec<S>, value: S) -> Self {
        let len = spec.len();
        GridFunction {
            spec,
            values: vec![value; len],
        }
    }

    pub fn from_fn(spec: GridSpec<S>, f: impl Fn(&[S]) -> S) -> Self {
        let values = (0..spec.len()).map(|i| f(&spec.point(i))).collect();
        GridFunction { spec, values }
    }

    pub fn spec(&self) -> &GridSpec<S> {
        &self.spec
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [S] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<S> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn sup_norm(&self) -> S {
        self.values
            .iter()
            .fold(S::zero(), |m, &v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        GridFunction {
            spec: self.spec.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(S, S) -> S) -> Self {
        assert_eq!(self.spec, other.spec, "grid functions live on different grids");
        GridFunction {
            spec: self.spec.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, a: S) -> Self {
        self.map(|v| a * v)
    }

    /// `self += a * other`, in place.
    pub fn axpy(&mut self, a: S, other: &Self) {
        assert_eq!(self.spec, other.spec);
        for (v, &w) in self.values.iter_mut().zip(&other.values) {
            *v = *v + a * w;
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    /// Restriction to a coarser dyadically nested grid.
    pub fn restrict_to(&self, coarse: &GridSpec<S>) -> Result<GridFunction<S>> {
        let ratio = coarse.stride_in(&self.spec)?;
        let values = (0..coarse.len())
            .map(|i| {
                let cc = coarse.coords(i);
                let fine_coords: Vec<usize> = cc.iter().map(|&c| c * ratio).collect();
                self.values[self.spec.linear(&fine_coords)]
            })
            .collect();
        Ok(GridFunction::new(coarse.clone(), values))
    }
}

/// `T_{h,lambda}^steps`: periodic shift, an exact permutation of values.
pub fn shift<S: Scalar>(f: &GridFunction<S>, lambda: &[i64], steps: i64) -> Result<GridFunction<S>> {
    let table = f.spec.shift_table(lambda, steps)?;
    let values = table.iter().map(|&j| f.values[j]).collect();
    Ok(GridFunction::new(f.spec.clone(), values))
}

/// Forward difference quotient along `lambda`:
/// `(f(x + h*lambda) - f(x)) / h`.
pub fn delta<S: Scalar>(f: &GridFunction<S>, lambda: &[i64]) -> Result<GridFunction<S>> {
    let h = f.spec.mesh();
    let shifted = shift(f, lambda, 1)?;
    Ok(shifted.zip_map(f, |s, v| (s - v) / h))
}

/// Centered second difference along `lambda`:
/// `(f(x + h*lambda) - 2 f(x) + f(x - h*lambda)) / h^2`. Exact on
/// quadratics along the direction.
pub fn delta2<S: Scalar>(f: &GridFunction<S>, lambda: &[i64]) -> Result<GridFunction<S>> {
    let h = f.spec.mesh();
    let h2 = h * h;
    let plus = shift(f, lambda, 1)?;
    let minus = shift(f, lambda, -1)?;
    let two = S::from_f64_c(2.0);
    // grouping the shifts first makes the result bitwise invariant under
    // lambda -> -lambda
    let values = (0..f.len())
        .map(|i| ((plus.values[i] + minus.values[i]) - two * f.values[i]) / h2)
        .collect();
    Ok(GridFunction::new(f.spec.clone(), values))
}

/// Composed forward differences along the coordinate axes, axis order
/// 1..d: `delta_1^{a_1} ... delta_d^{a_d} f`.
pub fn delta_alpha<S: Scalar>(f: &GridFunction<S>, alpha: &MultiIndex) -> Result<GridFunction<S>> {
    if alpha.components().len() != f.spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.spec.dim(),
            got: alpha.components().len(),
        });
    }
    if alpha.order() > ORDER_CAP {
        return Err(Error::OrderCapExceeded {
            requested: alpha.order(),
            cap: ORDER_CAP,
        });
    }
    let d = f.spec.dim();
    let mut out = f.clone();
    for axis in 0..d {
        let mut e = vec![0i64; d];
        e[axis] = 1;
        for _ in 0..alpha.components()[axis] {
            out = delta(&out, &e)?;
        }
    }
    Ok(out)
}

/// Discrete seminorms `(s_0, ..., s_m)`: `s_k` is the grid maximum of the
/// Euclidean norm over all forward differences of total order `k`.
pub fn norms<S: Scalar>(f: &GridFunction<S>, m: usize) -> Result<Vec<S>> {
    if m > ORDER_CAP {
        return Err(Error::OrderCapExceeded {
            requested: m,
            cap: ORDER_CAP,
        });
    }
    let d = f.spec.dim();
    let mut out = Vec::with_capacity(m + 1);
    for k in 0..=m {
        let diffs: Vec<GridFunction<S>> = multi_indices(d, k)
            .iter()
            .map(|a| delta_alpha(f, a))
            .collect::<Result<_>>()?;
        let mut sup = S::zero();
        for i in 0..f.len() {
            let sq: S = diffs.iter().map(|g| g.values[i] * g.values[i]).sum();
            sup = sup.max(sq.sqrt());
        }
        out.push(sup);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize, h: f64) -> GridSpec<f64> {
        GridSpec::cube(1, n, h)
    }

    #[test]
    fn shift_zero_steps_is_identity() {
        let f = GridFunction::from_fn(line(8, 0.5), |x| x[0] * x[0] + 1.0);
        let s = shift(&f, &[1], 0).unwrap();
        assert_eq!(f, s);
    }

    #[test]
    fn shift_is_cyclic_permutation() {
        let f = GridFunction::new(line(4, 1.0), vec![1.0, 2.0, 3.0, 4.0]);
        let s = shift(&f, &[1], 1).unwrap();
        assert_eq!(s.values(), &[2.0, 3.0, 4.0, 1.0]);
    }

    #[test]
    fn shift_inverse_is_bitwise_exact() {
        let f = GridFunction::from_fn(line(16, 0.25), |x| (x[0] * 1.7).sin());
        let back = shift(&shift(&f, &[1], 1).unwrap(), &[1], -1).unwrap();
        assert_eq!(f, back);
    }

    #[test]
    fn delta_annihilates_constants() {
        let f = GridFunction::constant(line(10, 0.3), 7.5);
        let d = delta(&f, &[1]).unwrap();
        assert!(d.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn delta_exact_on_affine_interior() {
        // phi(x) = x on [0, 1); wraparound contaminates the last point only.
        let f = GridFunction::from_fn(line(8, 0.125), |x| x[0]);
        let d = delta(&f, &[1]).unwrap();
        for i in 0..7 {
            assert!((d.values()[i] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn delta_on_square_matches_identity() {
        // ((x+h)^2 - x^2)/h = 2x + h; at x = 1, h = 0.5 this is 2.5.
        let spec = GridSpec::new(vec![8], 0.5, vec![0.0]);
        let f = GridFunction::from_fn(spec.clone(), |x: &[f64]| x[0] * x[0]);
        let d = delta(&f, &[1]).unwrap();
        let at_one = spec.linear(&[2]);
        assert!((d.values()[at_one] - 2.5).abs() < 1e-14);
    }

    #[test]
    fn delta2_exact_on_quadratics_interior() {
        let f = GridFunction::from_fn(line(16, 0.25), |x| x[0] * x[0]);
        let d = delta2(&f, &[1]).unwrap();
        for i in 2..14 {
            assert!((d.values()[i] - 2.0).abs() < 1e-12, "i={i}: {}", d.values()[i]);
        }
    }

    #[test]
    fn delta2_on_quartic_interior() {
        // Oracle by symbolic expansion: ((x+h)^4 - 2x^4 + (x-h)^4)/h^2 = 12x^2 + 2h^2.
        let h = 0.125;
        let f = GridFunction::from_fn(line(32, h), |x| x[0].powi(4));
        let d = delta2(&f, &[1]).unwrap();
        for i in 4..28 {
            let x = i as f64 * h;
            let expect = 12.0 * x * x + 2.0 * h * h;
            assert!((d.values()[i] - expect).abs() < 1e-9 * (1.0 + expect.abs()));
        }
    }

    #[test]
    fn delta_alpha_zero_is_identity() {
        let f = GridFunction::from_fn(line(8, 0.5), |x| x[0].cos());
        let g = delta_alpha(&f, &MultiIndex::new(vec![0])).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn delta_alpha_second_order_on_square() {
        // Hand expansion: ((x+2h)^2 - 2(x+h)^2 + x^2)/h^2 = 2 everywhere.
        let f = GridFunction::from_fn(line(16, 0.1), |x| x[0] * x[0]);
        let g = delta_alpha(&f, &MultiIndex::new(vec![2])).unwrap();
        for i in 2..12 {
            assert!((g.values()[i] - 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn delta_alpha_mixed_on_product() {
        // Hand expansion of the mixed forward difference of xy is 1.
        let spec = GridSpec::cube(2, 8, 0.25);
        let f = GridFunction::from_fn(spec.clone(), |x: &[f64]| x[0] * x[1]);
        let g = delta_alpha(&f, &MultiIndex::new(vec![1, 1])).unwrap();
        for i in 0..spec.len() {
            let c = spec.coords(i);
            if c[0] < 6 && c[1] < 6 {
                assert!((g.values()[i] - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn delta_alpha_cap() {
        let f = GridFunction::constant(line(4, 1.0), 0.0);
        let err = delta_alpha(&f, &MultiIndex::new(vec![5]));
        assert!(matches!(err, Err(Error::OrderCapExceeded { .. })));
    }

    #[test]
    fn norms_of_constant() {
        let f = GridFunction::constant(line(6, 0.5), 5.0);
        let s = norms(&f, 2).unwrap();
        assert_eq!(s, vec![5.0, 0.0, 0.0]);
    }

    #[test]
    fn norms_sup_of_spike() {
        let mut values = vec![0.0; 8];
        values[3] = 3.0;
        let f = GridFunction::new(line(8, 1.0), values);
        let s = norms(&f, 0).unwrap();
        assert_eq!(s[0], 3.0);
    }

    #[test]
    fn norms_first_order_of_linear_on_interior() {
        // s_1 away from wraparound equals the delta example; measure on the
        // interior mask by recomputing the difference there.
        let f = GridFunction::from_fn(line(16, 0.125), |x| x[0]);
        let d = delta(&f, &[1]).unwrap();
        let interior_sup = d.values()[..15]
            .iter()
            .fold(0.0f64, |m, &v| m.max(v.abs()));
        assert!((interior_sup - 1.0).abs() < 1e-13);
        // and the full-grid seminorm is dominated by the wraparound column
        let s = norms(&f, 1).unwrap();
        assert!(s[1] >= interior_sup);
    }

    #[test]
    fn delta2_identity_with_nested_deltas() {
        let f = GridFunction::from_fn(line(12, 0.2), |x| (x[0] * 2.1).sin() + x[0]);
        let h = f.spec().mesh();
        let lhs = delta2(&f, &[1]).unwrap();
        let shifted_back = shift(&f, &[1], -1).unwrap();
        let rhs = delta(&f, &[1])
            .unwrap()
            .zip_map(&delta(&shifted_back, &[1]).unwrap(), |a, b| (a - b) / h);
        for i in 0..f.len() {
            assert!((lhs.values()[i] - rhs.values()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn refinement_contains_coarse_points() {
        let coarse = GridSpec::new(vec![8], 0.25, vec![-1.0]);
        let fine = coarse.refine(2);
        assert_eq!(coarse.stride_in(&fine).unwrap(), 2);
        let phi = |x: &[f64]| (x[0] * 0.9).cos();
        let fc = GridFunction::from_fn(coarse.clone(), phi);
        let ff = GridFunction::from_fn(fine, phi);
        let restricted = ff.restrict_to(&coarse).unwrap();
        assert_eq!(fc, restricted);
    }

    #[test]
    fn multi_index_enumeration() {
        let idx = multi_indices(2, 2);
        assert_eq!(idx.len(), 3);
        assert!(idx.iter().all(|a| a.order() == 2));
    }
}
