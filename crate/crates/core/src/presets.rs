//! Built-in problem catalog. Each preset carries a manufactured exact
//! solution where one exists, with the source term chosen so the equation
//! holds. Numeric literals are written out because the expression grammar
//! has no named constants.

use crate::config::{ExtrapolationChoice, ProblemKind, StudyConfig, StudyMode};

// 2*pi and powers, rounded to the nearest f64
const TAU: &str = "6.283185307179586";
const TAU_SQ: &str = "39.47841760435743";
const TWO_TAU_SQ: &str = "157.91367041742973";

pub fn preset_names() -> &'static [&'static str] {
    &[
        "freeflow",
        "decay",
        "heat1d-sym",
        "drift-upwind",
        "aniso2d",
        "degenerate-ode",
        "skew",
    ]
}

pub fn preset_config(name: &str) -> Option<StudyConfig> {
    let base = StudyConfig {
        kind: ProblemKind::Parabolic,
        preset: None,
        horizon: 0.25,
        c_floor: 1.0,
        dim: 1,
        cells: vec![16],
        mesh: 1.0 / 16.0,
        origin: vec![0.0],
        directions: Vec::new(),
        q: Vec::new(),
        p: Vec::new(),
        c: "0".into(),
        f: "0".into(),
        g: "0".into(),
        exact: None,
        mode: StudyMode::Convergence,
        levels: 4,
        extrapolation: ExtrapolationChoice::None,
        order: 0,
        output: None,
    };
    let cfg = match name {
        // no spatial operator at all: u(t) = g + t f
        "freeflow" => StudyConfig {
            directions: vec![vec![1]],
            q: vec!["0".into()],
            p: vec!["0".into()],
            c: "0".into(),
            f: format!("sin({TAU} * x1)"),
            g: format!("cos({TAU} * x1)"),
            exact: Some(format!("cos({TAU} * x1) + t * sin({TAU} * x1)")),
            levels: 3,
            ..base
        },
        // zero-order term only: pointwise exponential decay
        "decay" => StudyConfig {
            directions: vec![vec![1]],
            q: vec!["0".into()],
            p: vec!["0".into()],
            c: "1".into(),
            f: "0".into(),
            g: format!("cos({TAU} * x1)"),
            exact: Some(format!("exp(-t) * cos({TAU} * x1)")),
            levels: 3,
            ..base
        },
        // symmetric diffusion, u = exp(-t) sin(2 pi x):
        // f = u_t - u_xx + u = 4 pi^2 exp(-t) sin(2 pi x)
        "heat1d-sym" => StudyConfig {
            directions: vec![vec![1], vec![-1]],
            q: vec!["1".into(), "1".into()],
            p: vec!["0".into(), "0".into()],
            c: "1".into(),
            f: format!("{TAU_SQ} * exp(-t) * sin({TAU} * x1)"),
            g: format!("sin({TAU} * x1)"),
            exact: Some(format!("exp(-t) * sin({TAU} * x1)")),
            ..base
        },
        // one-sided drift, u = exp(-t) sin(2 pi x):
        // f = u_t - u_x + u = -2 pi exp(-t) cos(2 pi x)
        "drift-upwind" => StudyConfig {
            directions: vec![vec![1]],
            q: vec!["0".into()],
            p: vec!["1".into()],
            c: "1".into(),
            f: format!("-{TAU} * exp(-t) * cos({TAU} * x1)"),
            g: format!("sin({TAU} * x1)"),
            exact: Some(format!("exp(-t) * sin({TAU} * x1)")),
            ..base
        },
        // diagonal directions in d = 2 give a = 2 I;
        // u = exp(-t) sin(2 pi x1) sin(2 pi x2), f = u_t - 2 Lap u + u
        "aniso2d" => StudyConfig {
            dim: 2,
            cells: vec![8, 8],
            mesh: 0.125,
            origin: vec![0.0, 0.0],
            directions: vec![vec![1, 1], vec![-1, -1], vec![1, -1], vec![-1, 1]],
            q: vec!["1".into(), "1".into(), "1".into(), "1".into()],
            p: vec!["0".into(), "0".into(), "0".into(), "0".into()],
            c: "1".into(),
            f: format!("{TWO_TAU_SQ} * exp(-t) * sin({TAU} * x1) * sin({TAU} * x2)"),
            g: format!("sin({TAU} * x1) * sin({TAU} * x2)"),
            exact: Some(format!("exp(-t) * sin({TAU} * x1) * sin({TAU} * x2)")),
            levels: 3,
            ..base
        },
        // stationary equation on [-2, 2) with diffusion ((1 - x^2)_+)^2
        // vanishing at x = +-1 (grid points), so the interval (-1, 1)
        // decouples from the exterior
        "degenerate-ode" => StudyConfig {
            kind: ProblemKind::Elliptic,
            cells: vec![64],
            mesh: 0.0625,
            origin: vec![-2.0],
            directions: vec![vec![1], vec![-1]],
            q: vec![
                "((1 - x1^2 + abs(1 - x1^2))/2)^2".into(),
                "((1 - x1^2 + abs(1 - x1^2))/2)^2".into(),
            ],
            p: vec!["0".into(), "0".into()],
            c: "1".into(),
            f: "exp(-(x1^2))".into(),
            g: "0".into(),
            mode: StudyMode::Single,
            levels: 1,
            ..base
        },
        // symmetric diffusion with antisymmetric drift (b = 1), so odd
        // mesh-power error terms cancel; u = exp(-t) sin(2 pi x),
        // f = u_t - u_xx - u_x + u
        "skew" => StudyConfig {
            cells: vec![8],
            mesh: 0.125,
            directions: vec![vec![1], vec![-1]],
            q: vec!["1".into(), "1".into()],
            p: vec!["0.5".into(), "-0.5".into()],
            c: "1".into(),
            f: format!(
                "exp(-t) * ({TAU_SQ} * sin({TAU} * x1) - {TAU} * cos({TAU} * x1))"
            ),
            g: format!("sin({TAU} * x1)"),
            exact: Some(format!("exp(-t) * sin({TAU} * x1)")),
            levels: 3,
            ..base
        },
        _ => return None,
    };
    Some(cfg)
}
