//! Line-oriented text format for attack graphs.
//!
//! ```text
//! # comment
//! af 3
//! rel
//! risk
//! fin
//! att risk rel
//! att fin rel
//! ```

use super::{ArgumentId, ArgumentationError, AttackGraph, Result};

fn parse_error(line: usize, message: impl Into<String>) -> ArgumentationError {
    ArgumentationError::Parse {
        line,
        message: message.into(),
    }
}

enum State {
    Header,
    Arguments { remaining: usize },
    Attacks,
}

pub fn parse_af(text: &str) -> Result<AttackGraph> {
    let mut graph = AttackGraph::new();
    let mut state = State::Header;
    let mut last_line = 0;

    for (number, raw) in text.lines().enumerate() {
        let line_no = number + 1;
        last_line = line_no;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();

        state = match state {
            State::Header => match tokens.as_slice() {
                ["af", count] => {
                    let remaining = count
                        .parse::<usize>()
                        .map_err(|_| parse_error(line_no, format!("invalid argument count `{count}`")))?;
                    if remaining == 0 {
                        State::Attacks
                    } else {
                        State::Arguments { remaining }
                    }
                }
                _ => return Err(parse_error(line_no, "expected header `af <n>`")),
            },
            State::Arguments { remaining } => {
                let [name] = tokens.as_slice() else {
                    return Err(parse_error(line_no, "expected a single argument name per line"));
                };
                let id = ArgumentId::new(*name).map_err(|e| parse_error(line_no, e.to_string()))?;
                graph
                    .add_argument(id)
                    .map_err(|_| parse_error(line_no, format!("duplicate declaration of `{name}`")))?;
                if remaining == 1 {
                    State::Attacks
                } else {
                    State::Arguments {
                        remaining: remaining - 1,
                    }
                }
            }
            State::Attacks => {
                let ["att", attacker, target] = tokens.as_slice() else {
                    return Err(parse_error(line_no, "expected `att <attacker> <target>`"));
                };
                let resolve = |name: &str| {
                    ArgumentId::new(name)
                        .ok()
                        .filter(|id| graph.contains(id))
                        .ok_or_else(|| parse_error(line_no, format!("unknown argument `{name}`")))
                };
                let attacker = resolve(attacker)?;
                let target = resolve(target)?;
                if !graph.add_attack(&attacker, &target)? {
                    return Err(parse_error(
                        line_no,
                        format!("duplicate declaration of attack {attacker} -> {target}"),
                    ));
                }
                State::Attacks
            }
        };
    }

    match state {
        State::Attacks => Ok(graph),
        State::Header => Err(parse_error(last_line.max(1), "missing header `af <n>`")),
        State::Arguments { remaining } => Err(parse_error(
            last_line,
            format!("document ended with {remaining} undeclared argument(s)"),
        )),
    }
}

/// Arguments in declaration order, attacks sorted by (attacker, target) name.
pub fn serialize_af(graph: &AttackGraph) -> String {
    let mut out = format!("af {}\n", graph.len());
    for id in graph.arguments() {
        out.push_str(id.as_str());
        out.push('\n');
    }
    let mut attacks: Vec<(&str, &str)> = graph.attacks().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    attacks.sort_unstable();
    for (a, b) in attacks {
        out.push_str(&format!("att {a} {b}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_risk_selection_document() {
        let doc = "# risk exposure query\naf 3\nrel\nrisk\nfin\natt risk rel\natt risk fin\natt fin rel\n";
        let graph = parse_af(doc).unwrap();
        let expected = AttackGraph::from_parts(
            ["rel", "risk", "fin"],
            [("risk", "rel"), ("risk", "fin"), ("fin", "rel")],
        )
        .unwrap();
        assert_eq!(graph, expected);
    }

    #[test]
    fn empty_framework() {
        assert_eq!(parse_af("af 0\n").unwrap(), AttackGraph::new());
        assert_eq!(serialize_af(&AttackGraph::new()), "af 0\n");
    }

    #[test]
    fn serialization_orders_edges_by_name() {
        let graph = AttackGraph::from_parts(["rel", "risk", "fin"], [("risk", "rel"), ("fin", "rel")]).unwrap();
        assert_eq!(
            serialize_af(&graph),
            "af 3\nrel\nrisk\nfin\natt fin rel\natt risk rel\n"
        );
    }

    #[test]
    fn inline_comments_and_blank_lines() {
        let doc = "\n# header follows\naf 2 # two args\n\na\nb # second\natt a b\n";
        let graph = parse_af(doc).unwrap();
        assert_eq!(graph.len(), 2);
        assert_eq!(graph.edge_count(), 1);
    }

    fn line_of(err: ArgumentationError) -> usize {
        match err {
            ArgumentationError::Parse { line, .. } => line,
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn error_paths_carry_line_numbers() {
        assert_eq!(line_of(parse_af("af 1\na\natt a b\n").unwrap_err()), 3);
        assert_eq!(line_of(parse_af("af 2\na\na\n").unwrap_err()), 3);
        assert_eq!(line_of(parse_af("af 1\na\natt a a\natt a a\n").unwrap_err()), 4);
        assert_eq!(line_of(parse_af("arguments 2\n").unwrap_err()), 1);
        assert_eq!(line_of(parse_af("af x\n").unwrap_err()), 1);
        assert_eq!(line_of(parse_af("af 1\na b\n").unwrap_err()), 2);
        assert_eq!(line_of(parse_af("af 2\na\n").unwrap_err()), 2);
        assert_eq!(line_of(parse_af("af 1\na\nattack a a\n").unwrap_err()), 3);
        assert!(parse_af("").is_err());
    }
}
