//! Line-oriented manifest format.
//!
//! ```text
//! GRAPH v1
//! DOC id=<name> kind=<OM|STD|MSC|ITD> path=<relpath> hash=<hex> state=<active|redundant> validated=<0|1> [override=manual]
//! REC idx=<n> kind=<refine|preserve|edit|decompose> in=<id,...> out=<id,...> verdict=<holds|fails|none> bounds=<objects,trace,extras> note="<text>" ts=<secs>
//! ARC from=<id> to=<id> rec=<n>
//! ```
//!
//! Values containing whitespace, quotes or backslashes are double-quoted
//! with backslash escapes; records without evidence carry `bounds=-`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use super::{Arc, DevGraph, DocState, Evidence, GraphError, Node, TransformRecord};
use crate::checker::Outcome;

const HEADER: &str = "GRAPH v1";

fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn value(s: &str) -> String {
    if s.is_empty() || s.chars().any(|c| c.is_whitespace() || c == '"' || c == '\\') {
        quote(s)
    } else {
        s.to_string()
    }
}

pub(super) fn render(g: &DevGraph) -> String {
    let mut out = format!("{HEADER}\n");
    for (id, n) in &g.nodes {
        out.push_str(&format!(
            "DOC id={id} kind={} path={} hash={} state={} validated={}{}\n",
            n.kind,
            value(&n.path.to_string_lossy()),
            n.hash,
            if n.state.redundant { "redundant" } else { "active" },
            u8::from(n.state.validated),
            if n.state.manual_override { " override=manual" } else { "" }
        ));
    }
    for (i, r) in g.records.iter().enumerate() {
        let (verdict, bounds) = match &r.evidence {
            Some(e) => (
                match e.outcome {
                    Outcome::HoldsWithinBounds => "holds",
                    Outcome::Fails => "fails",
                },
                format!("{},{},{}", e.bounds.0, e.bounds.1, e.bounds.2),
            ),
            None => ("none", "-".to_string()),
        };
        out.push_str(&format!(
            "REC idx={i} kind={} in={} out={} verdict={verdict} bounds={bounds} note={} ts={}\n",
            r.kind.tag(),
            r.inputs.join(","),
            r.outputs.join(","),
            quote(&r.note),
            r.timestamp
        ));
    }
    for a in &g.arcs {
        out.push_str(&format!("ARC from={} to={} rec={}\n", a.from, a.to, a.rec));
    }
    out
}

/// Splits `key=value` fields, honouring quoted values.
fn fields(rest: &str) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    let mut chars = rest.chars().peekable();
    loop {
        while chars.peek().is_some_and(|c| c.is_whitespace()) {
            chars.next();
        }
        if chars.peek().is_none() {
            return Ok(out);
        }
        let mut key = String::new();
        for c in chars.by_ref() {
            if c == '=' {
                break;
            }
            if c.is_whitespace() {
                return Err(format!("expected `=` after `{key}`"));
            }
            key.push(c);
        }
        let mut val = String::new();
        if chars.peek() == Some(&'"') {
            chars.next();
            let mut closed = false;
            while let Some(c) = chars.next() {
                match c {
                    '"' => {
                        closed = true;
                        break;
                    }
                    '\\' => match chars.next() {
                        Some('n') => val.push('\n'),
                        Some(c) => val.push(c),
                        None => return Err("unterminated escape".into()),
                    },
                    c => val.push(c),
                }
            }
            if !closed {
                return Err(format!("unterminated quoted value for `{key}`"));
            }
        } else {
            while let Some(&c) = chars.peek() {
                if c.is_whitespace() {
                    break;
                }
                val.push(c);
                chars.next();
            }
        }
        if out.insert(key.clone(), val).is_some() {
            return Err(format!("duplicate field `{key}`"));
        }
    }
}

struct Fields {
    map: BTreeMap<String, String>,
}

impl Fields {
    fn take(&mut self, k: &str) -> Result<String, String> {
        self.map.remove(k).ok_or_else(|| format!("missing field `{k}`"))
    }

    fn num(&mut self, k: &str) -> Result<usize, String> {
        let v = self.take(k)?;
        v.parse().map_err(|_| format!("field `{k}`: expected a number, found `{v}`"))
    }

    fn done(self) -> Result<(), String> {
        match self.map.keys().next() {
            Some(k) => Err(format!("unknown field `{k}`")),
            None => Ok(()),
        }
    }
}

fn ids(s: &str) -> Vec<String> {
    s.split(',').filter(|x| !x.is_empty()).map(str::to_string).collect()
}

pub(super) fn parse(text: &str, root: PathBuf) -> Result<DevGraph, GraphError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, l)) if l.trim() == HEADER => {}
        Some((_, l)) if l.trim().starts_with("GRAPH ") => return Err(GraphError::Version(l.trim()[6..].to_string())),
        _ => {
            return Err(GraphError::Manifest {
                line: 1,
                message: format!("expected `{HEADER}`"),
            })
        }
    }
    let mut g = DevGraph::new(root);
    for (i, line) in lines {
        let err = |message: String| GraphError::Manifest { line: i + 1, message };
        let line = line.trim();
        let (tag, rest) = line.split_once(' ').unwrap_or((line, ""));
        let mut f = Fields {
            map: fields(rest).map_err(err)?,
        };
        let res: Result<(), String> = (|| {
            match tag {
                "DOC" => {
                    let id = f.take("id")?;
                    let kind = f.take("kind")?.parse()?;
                    let path = PathBuf::from(f.take("path")?);
                    let hash = f.take("hash")?;
                    let redundant = match f.take("state")?.as_str() {
                        "active" => false,
                        "redundant" => true,
                        s => return Err(format!("unknown state `{s}`")),
                    };
                    let validated = match f.take("validated")?.as_str() {
                        "0" => false,
                        "1" => true,
                        s => return Err(format!("validated must be 0 or 1, found `{s}`")),
                    };
                    let manual_override = match f.map.remove("override").as_deref() {
                        None => false,
                        Some("manual") => true,
                        Some(s) => return Err(format!("unknown override `{s}`")),
                    };
                    f.done()?;
                    let node = Node {
                        kind,
                        path,
                        hash,
                        state: DocState {
                            redundant,
                            validated,
                            manual_override,
                        },
                    };
                    if g.nodes.insert(id.clone(), node).is_some() {
                        return Err(format!("duplicate document `{id}`"));
                    }
                }
                "REC" => {
                    let idx = f.num("idx")?;
                    if idx != g.records.len() {
                        return Err(format!("record index {idx} out of order"));
                    }
                    let kind = f.take("kind")?.parse()?;
                    let inputs = ids(&f.take("in")?);
                    let outputs = ids(&f.take("out")?);
                    let verdict = f.take("verdict")?;
                    let bounds = f.take("bounds")?;
                    let outcome = match verdict.as_str() {
                        "holds" => Some(Outcome::HoldsWithinBounds),
                        "fails" => Some(Outcome::Fails),
                        "none" => None,
                        s => return Err(format!("unknown verdict `{s}`")),
                    };
                    let evidence = match outcome {
                        Some(outcome) => {
                            let parts: Vec<usize> = bounds
                                .split(',')
                                .map(|p| p.parse().map_err(|_| format!("bad bounds `{bounds}`")))
                                .collect::<Result<_, _>>()?;
                            let [o, t, e] = parts[..] else {
                                return Err(format!("bounds need three numbers, found `{bounds}`"));
                            };
                            Some(Evidence {
                                outcome,
                                bounds: (o, t, e),
                            })
                        }
                        None if bounds == "-" => None,
                        None => return Err("a record without verdict has bounds=-".into()),
                    };
                    let note = f.take("note")?;
                    let timestamp = f.num("ts")? as u64;
                    f.done()?;
                    g.records.push(TransformRecord {
                        kind,
                        inputs,
                        outputs,
                        evidence,
                        timestamp,
                        note,
                    });
                }
                "ARC" => {
                    let from = f.take("from")?;
                    let to = f.take("to")?;
                    let rec = f.num("rec")?;
                    f.done()?;
                    g.arcs.insert(Arc { from, to, rec });
                }
                t => return Err(format!("unknown line kind `{t}`")),
            }
            Ok(())
        })();
        res.map_err(err)?;
    }
    Ok(g)
}
