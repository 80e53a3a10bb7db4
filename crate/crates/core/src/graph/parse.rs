use std::collections::HashMap;
use std::fmt::Write as _;

use super::{GraphBuilder, GraphError, WeightedDigraph};

fn parse_err(line: usize, message: impl Into<String>) -> GraphError {
    GraphError::Parse {
        line,
        message: message.into(),
    }
}

fn real(line: usize, tok: &str) -> Result<f64, GraphError> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(line, format!("invalid number `{tok}`")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite number `{tok}`")));
    }
    Ok(v)
}

/// Parses the line-oriented graph format.
///
/// ```text
/// graph <n_costs> <C_bound>
/// state <id> <from> <to> <length> <c1> .. <cn>
/// trans <id> <id> | transall
/// paircost <id> <id> <c1> .. <cn>
/// truncation <L>
/// ```
pub fn load_graph(source: &str) -> Result<WeightedDigraph, GraphError> {
    let mut builder: Option<GraphBuilder> = None;
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut dim = 0usize;

    for (idx, raw) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let kw = toks[0];
        if kw == "graph" {
            if builder.is_some() {
                return Err(parse_err(line_no, "duplicate header"));
            }
            if toks.len() != 3 {
                return Err(parse_err(line_no, "expected `graph <n_costs> <C_bound>`"));
            }
            dim = toks[1]
                .parse()
                .map_err(|_| parse_err(line_no, format!("invalid cost count `{}`", toks[1])))?;
            let bound = real(line_no, toks[2])?;
            if !(bound > 0.0) {
                return Err(parse_err(line_no, "cost bound must be positive"));
            }
            builder = Some(GraphBuilder::new(dim, bound));
            continue;
        }
        let b = builder
            .as_mut()
            .ok_or_else(|| parse_err(line_no, "missing `graph` header"))?;
        let lookup = |tok: &str| -> Result<usize, GraphError> {
            ids.get(tok)
                .copied()
                .ok_or_else(|| GraphError::UnknownState(tok.to_string()))
        };
        match kw {
            "state" => {
                if toks.len() != 5 + dim {
                    return Err(parse_err(
                        line_no,
                        format!("state line needs {} fields, found {}", 5 + dim, toks.len()),
                    ));
                }
                let length = real(line_no, toks[4])?;
                let costs = toks[5..]
                    .iter()
                    .map(|t| real(line_no, t))
                    .collect::<Result<Vec<_>, _>>()?;
                if ids.contains_key(toks[1]) {
                    return Err(GraphError::DuplicateState(toks[1].to_string()));
                }
                let i = b.add_state(toks[1], toks[2], toks[3], length, costs);
                ids.insert(toks[1].to_string(), i);
            }
            "trans" => {
                if toks.len() != 3 {
                    return Err(parse_err(line_no, "expected `trans <id> <id>`"));
                }
                let (a, c) = (lookup(toks[1])?, lookup(toks[2])?);
                b.add_transition(a, c);
            }
            "transall" => {
                if toks.len() != 1 {
                    return Err(parse_err(line_no, "`transall` takes no arguments"));
                }
                b.transall();
            }
            "paircost" => {
                if toks.len() != 3 + dim {
                    return Err(parse_err(
                        line_no,
                        format!("paircost line needs {} fields, found {}", 3 + dim, toks.len()),
                    ));
                }
                let (a, c) = (lookup(toks[1])?, lookup(toks[2])?);
                let costs = toks[3..]
                    .iter()
                    .map(|t| real(line_no, t))
                    .collect::<Result<Vec<_>, _>>()?;
                b.add_pair_cost(a, c, costs);
            }
            "truncation" => {
                if toks.len() != 2 {
                    return Err(parse_err(line_no, "expected `truncation <L>`"));
                }
                b.truncation(Some(real(line_no, toks[1])?));
            }
            other => return Err(parse_err(line_no, format!("unknown keyword `{other}`"))),
        }
    }
    builder.ok_or(GraphError::Empty)?.build()
}

/// Serialises a graph in the format accepted by [`load_graph`], with explicit
/// transitions. Reals are written in shortest round-trip form.
pub fn to_graph_text(g: &WeightedDigraph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "graph {} {:?}", g.cost_dim(), g.cost_bound());
    if let Some(l) = g.truncation() {
        let _ = writeln!(out, "truncation {l:?}");
    }
    for st in g.states() {
        let _ = write!(out, "state {} {} {} {:?}", st.label, st.from, st.to, st.length);
        for c in &st.costs {
            let _ = write!(out, " {c:?}");
        }
        out.push('\n');
    }
    for st in g.states() {
        for (slot, &to) in g.successors(st.id).iter().enumerate() {
            let _ = writeln!(out, "trans {} {}", st.label, g.state(to).label);
            if let Some(pc) = g.pair_cost_at(st.id, slot) {
                if pc.iter().any(|&c| c != 0.0) {
                    let _ = write!(out, "paircost {} {}", st.label, g.state(to).label);
                    for c in pc {
                        let _ = write!(out, " {c:?}");
                    }
                    out.push('\n');
                }
            }
        }
    }
    out
}
