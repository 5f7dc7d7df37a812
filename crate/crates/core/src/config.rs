//! Line-oriented study configuration: `[section]` headers, `key = value`
//! pairs, `#` comments, strict unknown-key handling, and a canonical
//! serializer whose output reparses to an equal configuration.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::presets;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemKind {
    Parabolic,
    Elliptic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StudyMode {
    Single,
    Convergence,
    Expansion,
    Acceptance,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtrapolationChoice {
    None,
    Full,
    Tilde,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyConfig {
    pub kind: ProblemKind,
    pub preset: Option<String>,
    pub horizon: f64,
    pub c_floor: f64,
    pub dim: usize,
    pub cells: Vec<usize>,
    pub mesh: f64,
    pub origin: Vec<f64>,
    pub directions: Vec<Vec<i64>>,
    /// Per-direction diffusion coefficient expressions.
    pub q: Vec<String>,
    /// Per-direction drift coefficient expressions.
    pub p: Vec<String>,
    pub c: String,
    pub f: String,
    pub g: String,
    /// Manufactured exact solution u(t, x), when available.
    pub exact: Option<String>,
    pub mode: StudyMode,
    /// Number of dyadic mesh levels in convergence/expansion studies.
    pub levels: usize,
    pub extrapolation: ExtrapolationChoice,
    /// Extrapolation or expansion order, depending on mode.
    pub order: usize,
    pub output: Option<String>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
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
        }
    }
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

fn parse_num(value: &str, line: usize, key: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| err(line, format!("key '{key}': expected a number, got '{value}'")))
}

fn parse_usize(value: &str, line: usize, key: &str) -> Result<usize> {
    value
        .parse::<usize>()
        .map_err(|_| err(line, format!("key '{key}': expected a nonnegative integer, got '{value}'")))
}

fn parse_usize_list(value: &str, line: usize, key: &str) -> Result<Vec<usize>> {
    value
        .split_whitespace()
        .map(|tok| parse_usize(tok, line, key))
        .collect()
}

fn parse_f64_list(value: &str, line: usize, key: &str) -> Result<Vec<f64>> {
    value
        .split_whitespace()
        .map(|tok| parse_num(tok, line, key))
        .collect()
}

fn parse_directions(value: &str, line: usize) -> Result<Vec<Vec<i64>>> {
    value
        .split(';')
        .map(|part| {
            part.split_whitespace()
                .map(|tok| {
                    tok.parse::<i64>().map_err(|_| {
                        err(line, format!("directions: expected an integer, got '{tok}'"))
                    })
                })
                .collect()
        })
        .collect()
}

fn parse_expr_list(value: &str, line: usize, key: &str) -> Result<Vec<String>> {
    value
        .split(';')
        .map(|part| {
            let text = part.trim().to_string();
            Expr::parse(&text)
                .map_err(|e| err(line, format!("key '{key}': {e}")))?;
            Ok(text)
        })
        .collect()
}

fn check_expr(value: &str, line: usize, key: &str) -> Result<String> {
    Expr::parse(value).map_err(|e| err(line, format!("key '{key}': {e}")))?;
    Ok(value.trim().to_string())
}

/// Parse the line-oriented format. Unknown sections and keys are errors,
/// reported with their line number. A `preset` key loads the catalog entry
/// first; later keys override its fields.
pub fn parse_config(text: &str) -> Result<StudyConfig> {
    #[derive(Clone)]
    struct Entry {
        section: String,
        key: String,
        value: String,
        line: usize,
    }
    let mut entries: Vec<Entry> = Vec::new();
    let mut section = String::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if content.is_empty() {
            continue;
        }
        if let Some(inner) = content.strip_prefix('[') {
            let Some(name) = inner.strip_suffix(']') else {
                return Err(err(line, "unterminated section header"));
            };
            section = name.trim().to_string();
            match section.as_str() {
                "problem" | "grid" | "stencil" | "data" | "study" => {}
                other => return Err(err(line, format!("unknown section '{other}'"))),
            }
            continue;
        }
        let Some(eq) = content.find('=') else {
            return Err(err(line, "expected 'key = value'"));
        };
        if section.is_empty() {
            return Err(err(line, "key before any [section] header"));
        }
        entries.push(Entry {
            section: section.clone(),
            key: content[..eq].trim().to_string(),
            value: content[eq + 1..].trim().to_string(),
            line,
        });
    }

    let mut cfg = StudyConfig::default();
    if let Some(e) = entries
        .iter()
        .find(|e| e.section == "problem" && e.key == "preset")
    {
        cfg = presets::preset_config(&e.value).ok_or_else(|| Error::UnknownPreset(e.value.clone()))?;
        cfg.preset = Some(e.value.clone());
    }

    for e in &entries {
        let line = e.line;
        let key = e.key.as_str();
        let value = e.value.as_str();
        match (e.section.as_str(), key) {
            ("problem", "preset") => {}
            ("problem", "kind") => {
                cfg.kind = match value {
                    "parabolic" => ProblemKind::Parabolic,
                    "elliptic" => ProblemKind::Elliptic,
                    other => return Err(err(line, format!("unknown kind '{other}'"))),
                }
            }
            ("problem", "horizon") => cfg.horizon = parse_num(value, line, key)?,
            ("problem", "c_floor") => cfg.c_floor = parse_num(value, line, key)?,
            ("grid", "dim") => cfg.dim = parse_usize(value, line, key)?,
            ("grid", "cells") => cfg.cells = parse_usize_list(value, line, key)?,
            ("grid", "mesh") => cfg.mesh = parse_num(value, line, key)?,
            ("grid", "origin") => cfg.origin = parse_f64_list(value, line, key)?,
            ("stencil", "directions") => cfg.directions = parse_directions(value, line)?,
            ("stencil", "q") => cfg.q = parse_expr_list(value, line, key)?,
            ("stencil", "p") => cfg.p = parse_expr_list(value, line, key)?,
            ("stencil", "c") => cfg.c = check_expr(value, line, key)?,
            ("data", "f") => cfg.f = check_expr(value, line, key)?,
            ("data", "g") => cfg.g = check_expr(value, line, key)?,
            ("data", "exact") => cfg.exact = Some(check_expr(value, line, key)?),
            ("study", "mode") => {
                cfg.mode = match value {
                    "single" => StudyMode::Single,
                    "convergence" => StudyMode::Convergence,
                    "expansion" => StudyMode::Expansion,
                    "acceptance" => StudyMode::Acceptance,
                    other => return Err(err(line, format!("unknown mode '{other}'"))),
                }
            }
            ("study", "levels") => cfg.levels = parse_usize(value, line, key)?,
            ("study", "extrapolation") => {
                cfg.extrapolation = match value {
                    "none" => ExtrapolationChoice::None,
                    "full" => ExtrapolationChoice::Full,
                    "tilde" => ExtrapolationChoice::Tilde,
                    other => return Err(err(line, format!("unknown extrapolation '{other}'"))),
                }
            }
            ("study", "order") => cfg.order = parse_usize(value, line, key)?,
            ("study", "output") => cfg.output = Some(value.to_string()),
            (section, key) => {
                return Err(err(line, format!("unknown key '{key}' in section [{section}]")))
            }
        }
    }
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &StudyConfig) -> Result<()> {
    let fail = |message: String| Err(err(0, message));
    if cfg.directions.is_empty() {
        return fail("no stencil: set [stencil] directions or a preset".into());
    }
    if cfg.directions.iter().any(|d| d.len() != cfg.dim) {
        return fail(format!("directions must have {} components", cfg.dim));
    }
    if cfg.q.len() != cfg.directions.len() || cfg.p.len() != cfg.directions.len() {
        return fail("q and p must list one expression per direction".into());
    }
    if cfg.cells.len() == 1 && cfg.dim > 1 {
        // a single cell count is allowed and applies to every axis
    } else if cfg.cells.len() != cfg.dim {
        return fail(format!("cells must have 1 or {} entries", cfg.dim));
    }
    if cfg.origin.len() != cfg.dim {
        return fail(format!("origin must have {} entries", cfg.dim));
    }
    if cfg.mesh <= 0.0 {
        return fail("mesh must be positive".into());
    }
    if cfg.kind == ProblemKind::Parabolic && cfg.horizon <= 0.0 {
        return fail("horizon must be positive".into());
    }
    if cfg.levels == 0 {
        return fail("levels must be at least 1".into());
    }
    if cfg.extrapolation == ExtrapolationChoice::Tilde && cfg.order % 2 == 0 {
        return fail("tilde extrapolation needs an odd order".into());
    }
    Ok(())
}

fn fmt_f64(v: f64) -> String {
    // shortest representation that round-trips through parse
    let s = format!("{v}");
    debug_assert_eq!(s.parse::<f64>().unwrap(), v);
    s
}

/// Canonical text form; `parse_config(serialize_config(c)) == c`.
pub fn serialize_config(cfg: &StudyConfig) -> String {
    let mut out = String::new();
    out.push_str("[problem]\n");
    if let Some(p) = &cfg.preset {
        out.push_str(&format!("preset = {p}\n"));
    }
    out.push_str(&format!(
        "kind = {}\n",
        match cfg.kind {
            ProblemKind::Parabolic => "parabolic",
            ProblemKind::Elliptic => "elliptic",
        }
    ));
    out.push_str(&format!("horizon = {}\n", fmt_f64(cfg.horizon)));
    out.push_str(&format!("c_floor = {}\n", fmt_f64(cfg.c_floor)));
    out.push_str("\n[grid]\n");
    out.push_str(&format!("dim = {}\n", cfg.dim));
    out.push_str(&format!(
        "cells = {}\n",
        cfg.cells
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    ));
    out.push_str(&format!("mesh = {}\n", fmt_f64(cfg.mesh)));
    out.push_str(&format!(
        "origin = {}\n",
        cfg.origin
            .iter()
            .map(|&v| fmt_f64(v))
            .collect::<Vec<_>>()
            .join(" ")
    ));
    out.push_str("\n[stencil]\n");
    out.push_str(&format!(
        "directions = {}\n",
        cfg.directions
            .iter()
            .map(|d| d
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(" "))
            .collect::<Vec<_>>()
            .join("; ")
    ));
    out.push_str(&format!("q = {}\n", cfg.q.join("; ")));
    out.push_str(&format!("p = {}\n", cfg.p.join("; ")));
    out.push_str(&format!("c = {}\n", cfg.c));
    out.push_str("\n[data]\n");
    out.push_str(&format!("f = {}\n", cfg.f));
    out.push_str(&format!("g = {}\n", cfg.g));
    if let Some(e) = &cfg.exact {
        out.push_str(&format!("exact = {e}\n"));
    }
    out.push_str("\n[study]\n");
    out.push_str(&format!(
        "mode = {}\n",
        match cfg.mode {
            StudyMode::Single => "single",
            StudyMode::Convergence => "convergence",
            StudyMode::Expansion => "expansion",
            StudyMode::Acceptance => "acceptance",
        }
    ));
    out.push_str(&format!("levels = {}\n", cfg.levels));
    out.push_str(&format!(
        "extrapolation = {}\n",
        match cfg.extrapolation {
            ExtrapolationChoice::None => "none",
            ExtrapolationChoice::Full => "full",
            ExtrapolationChoice::Tilde => "tilde",
        }
    ));
    out.push_str(&format!("order = {}\n", cfg.order));
    if let Some(o) = &cfg.output {
        out.push_str(&format!("output = {o}\n"));
    }
    out
}
