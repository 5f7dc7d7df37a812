//! Method-of-lines integration of `u' = L_h u + f`, `u(0) = g`, with a
//! classical 4-stage Runge-Kutta stepper and a maximum-principle check.

use crate::coeff::CoefficientField;
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::operator::CompiledOperator;
use crate::stencil::{validate_monotone, OperatorContext};
use crate::Scalar;

#[derive(Clone, Debug)]
pub struct ParabolicProblem<S> {
    pub ctx: OperatorContext<S>,
    /// Source term f(t, x).
    pub f: CoefficientField<S>,
    /// Initial data g(x).
    pub g: CoefficientField<S>,
    /// Final time T > 0.
    pub horizon: S,
}

#[derive(Clone, Debug)]
pub struct TimeIntegratorConfig<S> {
    /// Fixed step; `None` selects `stable_dt`.
    pub dt: Option<S>,
    /// Fraction of the stability limit used in auto mode, in (0, 1].
    pub safety: S,
    /// Exponential-shift parameter: integrate `v = u e^{-c_shift t}` and
    /// convert back, trading stiffness in c for a source rescaling.
    pub c_shift: S,
    /// Skip the monotonicity precheck.
    pub override_monotone: bool,
}

impl<S: Scalar> Default for TimeIntegratorConfig<S> {
    fn default() -> Self {
        TimeIntegratorConfig {
            dt: None,
            safety: S::from_f64_c(0.5),
            c_shift: S::zero(),
            override_monotone: false,
        }
    }
}

/// Largest time step used in auto mode: `safety / Lambda` where `Lambda`
/// bounds the operator's spectral radius row-wise. All-zero coefficients
/// give `Lambda = 0` and the step defaults to the horizon.
pub fn stable_dt<S: Scalar>(
    p: &ParabolicProblem<S>,
    cfg: &TimeIntegratorConfig<S>,
) -> Result<S> {
    let grid = &p.ctx.grid;
    let h = grid.mesh();
    let two = S::from_f64_c(2.0);
    let times = sample_coefficient_times(p);
    let mut lambda = S::zero();
    for &t in &times {
        let mut rows = vec![S::zero(); grid.len()];
        for i in 0..p.ctx.stencil.directions().len() {
            let q = p.ctx.stencil.q(i).sample(grid, t)?;
            let pd = p.ctx.stencil.p(i).sample(grid, t)?;
            for (k, r) in rows.iter_mut().enumerate() {
                *r = *r + two * q.values()[k] / (h * h) + two * pd.values()[k].abs() / h;
            }
        }
        let c = p.ctx.stencil.c().sample(grid, t)?;
        for (k, r) in rows.iter_mut().enumerate() {
            *r = *r + (c.values()[k] + cfg.c_shift).abs();
        }
        lambda = rows.iter().fold(lambda, |m, &v| m.max(v));
    }
    if lambda == S::zero() {
        return Ok(p.horizon);
    }
    Ok(cfg.safety / lambda)
}

fn sample_coefficient_times<S: Scalar>(p: &ParabolicProblem<S>) -> Vec<S> {
    if p.ctx.stencil.is_time_dependent() {
        let n = 17;
        (0..=n)
            .map(|i| p.horizon * S::from_usize_c(i) / S::from_usize_c(n))
            .collect()
    } else {
        vec![S::zero()]
    }
}

/// Solution snapshots at the requested times.
#[derive(Clone, Debug)]
pub struct ParabolicSolution<S> {
    pub times: Vec<S>,
    pub states: Vec<GridFunction<S>>,
    pub steps: usize,
    pub dt: S,
}

impl<S: Scalar> ParabolicSolution<S> {
    pub fn final_state(&self) -> &GridFunction<S> {
        self.states.last().expect("at least one sample time")
    }
}

/// Integrate the semidiscrete system with classical RK4, landing exactly
/// on every requested sample time. With `c_shift = gamma > 0` the shifted
/// unknown `v = u e^{-gamma t}` is integrated (its equation has zero-order
/// coefficient `c + gamma` and source `e^{-gamma t} f`) and converted back.
pub fn solve_parabolic<S: Scalar>(
    p: &ParabolicProblem<S>,
    cfg: &TimeIntegratorConfig<S>,
    sample_times: &[S],
) -> Result<ParabolicSolution<S>> {
    assert!(p.horizon > S::zero(), "horizon must be positive");
    assert!(
        sample_times.windows(2).all(|w| w[0] < w[1]),
        "sample times must be strictly increasing"
    );
    assert!(
        sample_times
            .last()
            .is_some_and(|&t| t <= p.horizon * (S::one() + S::from_f64_c(1e-12))),
        "sample times must lie in (0, horizon]"
    );
    if !cfg.override_monotone {
        let report = validate_monotone(&p.ctx, &sample_coefficient_times(p))?;
        if !report.pass {
            return Err(Error::MonotonicityViolated {
                min_chi: report.min_chi.to_f64().unwrap_or(f64::NAN),
                direction: report.direction.clone(),
            });
        }
    }
    let dt = match cfg.dt {
        Some(d) => {
            assert!(d > S::zero(), "dt must be positive");
            d
        }
        None => stable_dt(p, cfg)?,
    };

    let gamma = cfg.c_shift;
    let grid = &p.ctx.grid;
    let mut state = p.g.sample(grid, S::zero())?;
    if !state.all_finite() {
        return Err(Error::NonFinite { time: 0.0 });
    }
    let rebuild = p.ctx.stencil.is_time_dependent();
    let fixed_op = if rebuild {
        None
    } else {
        Some(CompiledOperator::build(&p.ctx, S::zero(), gamma)?)
    };
    let f_static = if p.f.depends_on_t() {
        None
    } else {
        Some(p.f.sample(grid, S::zero())?)
    };

    let mut out_states = Vec::with_capacity(sample_times.len());
    let mut t = S::zero();
    let mut steps = 0usize;
    let half = S::from_f64_c(0.5);
    let sixth = S::one() / S::from_f64_c(6.0);
    let two = S::from_f64_c(2.0);

    // shifted right-hand side: dv/dt = L_h^{+gamma} v + e^{-gamma s} f(s)
    let rhs = |s: S, v: &[S], out: &mut Vec<S>| -> Result<()> {
        let local;
        let op = match &fixed_op {
            Some(op) => op,
            None => {
                local = CompiledOperator::build(&p.ctx.at_time(s), s, gamma)?;
                &local
            }
        };
        op.apply_into(v, out);
        let decay = (-gamma * s).exp();
        match &f_static {
            Some(fs) => {
                for (o, &fv) in out.iter_mut().zip(fs.values()) {
                    *o = *o + decay * fv;
                }
            }
            None => {
                let fs = p.f.sample(grid, s)?;
                for (o, &fv) in out.iter_mut().zip(fs.values()) {
                    *o = *o + decay * fv;
                }
            }
        }
        Ok(())
    };

    let n = grid.len();
    let mut k1 = vec![S::zero(); n];
    let mut k2 = vec![S::zero(); n];
    let mut k3 = vec![S::zero(); n];
    let mut k4 = vec![S::zero(); n];
    let mut stage = vec![S::zero(); n];

    for &target in sample_times {
        while t < target - dt * S::from_f64_c(1e-12) {
            let step = dt.min(target - t);
            rhs(t, state.values(), &mut k1)?;
            for i in 0..n {
                stage[i] = state.values()[i] + half * step * k1[i];
            }
            rhs(t + half * step, &stage, &mut k2)?;
            for i in 0..n {
                stage[i] = state.values()[i] + half * step * k2[i];
            }
            rhs(t + half * step, &stage, &mut k3)?;
            for i in 0..n {
                stage[i] = state.values()[i] + step * k3[i];
            }
            rhs(t + step, &stage, &mut k4)?;
            for i in 0..n {
                let incr = k1[i] + two * k2[i] + two * k3[i] + k4[i];
                state.values_mut()[i] = state.values()[i] + sixth * step * incr;
            }
            t = t + step;
            steps += 1;
            if !state.all_finite() {
                return Err(Error::NonFinite {
                    time: t.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        // convert the shifted unknown back: u = v e^{gamma t}
        let grow = (gamma * target).exp();
        out_states.push(state.map(|v| v * grow));
    }

    Ok(ParabolicSolution {
        times: sample_times.to_vec(),
        states: out_states,
        steps,
        dt,
    })
}

#[derive(Clone, Debug)]
pub struct MaxPrincipleReport<S> {
    /// nu = sup (C - c), required negative.
    pub nu: S,
    /// A priori bound sup v_+(0) + |nu|^{-1} sup F.
    pub bound: S,
    /// Max over sampled times of sup_x v(t) - bound.
    pub max_excess: S,
    pub tolerance: S,
    pub pass: bool,
}

/// Integrate `v' = L_h v + C(t,x) sup_x v_+(t) + F(t)` from `v(0) = g` and
/// compare against the a priori bound `sup v_+(0) + |nu|^{-1} sup F`,
/// `nu = sup (C - c) < 0`.
pub fn max_principle_bound<S: Scalar>(
    p: &ParabolicProblem<S>,
    cfg: &TimeIntegratorConfig<S>,
    big_c: &CoefficientField<S>,
    big_f: &CoefficientField<S>,
    sample_times: &[S],
) -> Result<MaxPrincipleReport<S>> {
    let grid = &p.ctx.grid;
    let coeff_times = sample_coefficient_times(p);
    let mut nu = S::neg_infinity();
    let mut sup_f = S::zero();
    let origin = grid.origin().to_vec();
    let n_time = 64usize;
    for i in 0..=n_time {
        let t = p.horizon * S::from_usize_c(i) / S::from_usize_c(n_time);
        let fv = big_f.eval(t, &origin)?;
        if fv < S::zero() {
            return Err(Error::CoefficientEval("F must be nonnegative".into()));
        }
        sup_f = sup_f.max(fv);
    }
    for &t in coeff_times.iter().chain(std::iter::once(&p.horizon)) {
        let cs = p.ctx.stencil.c().sample(grid, t)?;
        let bigs = big_c.sample(grid, t)?;
        if bigs.values().iter().any(|&v| v < S::zero()) {
            return Err(Error::CoefficientEval("C must be nonnegative".into()));
        }
        let gap = bigs.sub(&cs).values().iter().fold(S::neg_infinity(), |m, &v| m.max(v));
        nu = nu.max(gap);
    }
    if nu >= S::zero() {
        return Err(Error::NonNegativeNu(nu.to_f64().unwrap_or(f64::NAN)));
    }

    if !cfg.override_monotone {
        let report = validate_monotone(&p.ctx, &coeff_times)?;
        if !report.pass {
            return Err(Error::MonotonicityViolated {
                min_chi: report.min_chi.to_f64().unwrap_or(f64::NAN),
                direction: report.direction.clone(),
            });
        }
    }

    let v0 = p.g.sample(grid, S::zero())?;
    let sup_v0_plus = v0
        .values()
        .iter()
        .fold(S::zero(), |m, &v| m.max(v));
    let bound = sup_v0_plus + sup_f / nu.abs();

    // integrate the nonlocal equation with RK4; the stages re-evaluate
    // sup_x v_+ from the stage state
    let dt = match cfg.dt {
        Some(d) => d,
        None => stable_dt(p, cfg)?,
    };
    let op = CompiledOperator::build(&p.ctx, S::zero(), S::zero())?;
    let rebuild = p.ctx.stencil.is_time_dependent();
    let n = grid.len();
    let mut state = v0;
    let mut t = S::zero();
    let half = S::from_f64_c(0.5);
    let sixth = S::one() / S::from_f64_c(6.0);
    let two = S::from_f64_c(2.0);
    let mut max_excess = state.values().iter().fold(S::neg_infinity(), |m, &v| m.max(v)) - bound;

    let mut k = vec![vec![S::zero(); n]; 4];
    let mut stage = vec![S::zero(); n];
    let rhs = |s: S, v: &[S], out: &mut Vec<S>| -> Result<()> {
        let local;
        let op_ref = if rebuild {
            local = CompiledOperator::build(&p.ctx.at_time(s), s, S::zero())?;
            &local
        } else {
            &op
        };
        op_ref.apply_into(v, out);
        let vbar_plus = v.iter().fold(S::zero(), |m, &x| m.max(x));
        let cs = big_c.sample(grid, s)?;
        let fv = big_f.eval(s, &origin)?;
        for (i, o) in out.iter_mut().enumerate() {
            *o = *o + cs.values()[i] * vbar_plus + fv;
        }
        Ok(())
    };

    for &target in sample_times {
        while t < target - dt * S::from_f64_c(1e-12) {
            let step = dt.min(target - t);
            rhs(t, state.values(), &mut k[0])?;
            for i in 0..n {
                stage[i] = state.values()[i] + half * step * k[0][i];
            }
            rhs(t + half * step, &stage, &mut k[1])?;
            for i in 0..n {
                stage[i] = state.values()[i] + half * step * k[1][i];
            }
            rhs(t + half * step, &stage, &mut k[2])?;
            for i in 0..n {
                stage[i] = state.values()[i] + step * k[2][i];
            }
            rhs(t + step, &stage, &mut k[3])?;
            for i in 0..n {
                let incr = k[0][i] + two * k[1][i] + two * k[2][i] + k[3][i];
                state.values_mut()[i] = state.values()[i] + sixth * step * incr;
            }
            t = t + step;
            if !state.all_finite() {
                return Err(Error::NonFinite {
                    time: t.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        let sup = state.values().iter().fold(S::neg_infinity(), |m, &v| m.max(v));
        max_excess = max_excess.max(sup - bound);
    }

    let tolerance = S::from_f64_c(1e-8);
    Ok(MaxPrincipleReport {
        nu,
        bound,
        max_excess,
        tolerance,
        pass: max_excess <= tolerance,
    })
}
