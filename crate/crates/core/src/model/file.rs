//! Parser for the plain-text problem file format.
//!
//! ```text
//! [name] ex22
//! [vars] x1 x2
//! [objective] x1^2 + x2^2
//! [g]            # one expression per line, meaning expr <= 0
//! x1
//! [h]            # one expression per line, meaning expr = 0
//! [vc]           # lines "G: <expr> ; H: <expr>", meaning H >= 0, G*H <= 0
//! G: -x1 ; H: x2
//! ```
//!
//! Sections may appear in any order; `#` starts a comment; missing `[g]` or
//! `[h]` sections mean empty families.

use super::{ModelError, MpvcProblem};
use crate::expr::{parse_expr, Expr, VarSpace};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Section {
    None,
    G,
    H,
    Vc,
}

fn fail(line: usize, msg: impl Into<String>) -> ModelError {
    ModelError::File {
        line,
        msg: msg.into(),
    }
}

fn parse_in(text: &str, vars: &VarSpace, line: usize) -> Result<Expr, ModelError> {
    parse_expr(text, vars).map_err(|e| fail(line, e.to_string()))
}

pub fn parse_problem(text: &str) -> Result<MpvcProblem, ModelError> {
    let mut name: Option<String> = None;
    let mut vars: Option<VarSpace> = None;
    let mut objective_src: Option<(usize, String)> = None;
    let mut g_src: Vec<(usize, String)> = Vec::new();
    let mut h_src: Vec<(usize, String)> = Vec::new();
    let mut vc_src: Vec<(usize, String)> = Vec::new();
    let mut section = Section::None;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let close = rest
                .find(']')
                .ok_or_else(|| fail(lineno, "unterminated section header"))?;
            let header = &rest[..close];
            let payload = rest[close + 1..].trim();
            match header {
                "name" => {
                    if name.is_some() {
                        return Err(fail(lineno, "duplicate [name] section"));
                    }
                    name = Some(payload.to_string());
                    section = Section::None;
                }
                "vars" => {
                    if vars.is_some() {
                        return Err(fail(lineno, "duplicate [vars] section"));
                    }
                    let names: Vec<&str> = payload.split_whitespace().collect();
                    vars = Some(
                        VarSpace::new(names).map_err(|e| fail(lineno, e.to_string()))?,
                    );
                    section = Section::None;
                }
                "objective" => {
                    if objective_src.is_some() {
                        return Err(fail(lineno, "duplicate [objective] section"));
                    }
                    if payload.is_empty() {
                        return Err(fail(lineno, "[objective] needs an expression"));
                    }
                    objective_src = Some((lineno, payload.to_string()));
                    section = Section::None;
                }
                "g" => section = Section::G,
                "h" => section = Section::H,
                "vc" => section = Section::Vc,
                other => return Err(fail(lineno, format!("unknown section [{other}]"))),
            }
            continue;
        }
        match section {
            Section::G => g_src.push((lineno, line.to_string())),
            Section::H => h_src.push((lineno, line.to_string())),
            Section::Vc => vc_src.push((lineno, line.to_string())),
            Section::None => {
                return Err(fail(lineno, "content outside of any section"));
            }
        }
    }

    let vars = vars.ok_or_else(|| fail(0, "missing [vars] section"))?;
    let (obj_line, obj_text) =
        objective_src.ok_or_else(|| fail(0, "missing [objective] section"))?;
    let objective = parse_in(&obj_text, &vars, obj_line)?;

    let g = g_src
        .iter()
        .map(|(l, s)| parse_in(s, &vars, *l))
        .collect::<Result<Vec<_>, _>>()?;
    let h = h_src
        .iter()
        .map(|(l, s)| parse_in(s, &vars, *l))
        .collect::<Result<Vec<_>, _>>()?;

    let mut vc = Vec::new();
    for (lineno, line) in &vc_src {
        let (g_part, h_part) = line
            .split_once(';')
            .ok_or_else(|| fail(*lineno, "expected `G: <expr> ; H: <expr>`"))?;
        let g_expr = g_part
            .trim()
            .strip_prefix("G:")
            .ok_or_else(|| fail(*lineno, "vanishing pair must start with `G:`"))?;
        let h_expr = h_part
            .trim()
            .strip_prefix("H:")
            .ok_or_else(|| fail(*lineno, "second half of a vanishing pair must start with `H:`"))?;
        vc.push((
            parse_in(g_expr, &vars, *lineno)?,
            parse_in(h_expr, &vars, *lineno)?,
        ));
    }

    MpvcProblem::new(
        name.unwrap_or_else(|| "unnamed".to_string()),
        vars,
        objective,
        g,
        h,
        vc,
    )
}
