//! Mode-specific responses and contrastive explanations.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::argumentation::{ArgumentId, AttackGraph, CompositionKind, Extension, RetrievalMode};
use crate::perspective::{Attack, Proposal};

/// One perspective's contribution, quoted without merging or rewording.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Section {
    pub perspective_id: String,
    pub perspective_name: String,
    pub interpretation: String,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub recommendation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Response {
    Selection {
        primary: Section,
    },
    Composition {
        kind: CompositionKind,
        sections: Vec<Section>,
    },
    Surfacing {
        conflict: String,
        sections: Vec<Section>,
    },
}

impl Response {
    pub fn sections(&self) -> Vec<&Section> {
        match self {
            Response::Selection { primary } => vec![primary],
            Response::Composition { sections, .. } | Response::Surfacing { sections, .. } => sections.iter().collect(),
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        match self {
            Response::Selection { primary } => {
                let _ = writeln!(out, "[{}]\n{}", primary.perspective_name, primary.interpretation);
            }
            Response::Composition { sections, .. } => {
                for s in sections {
                    let _ = writeln!(out, "[{}]\n{}\n", s.perspective_name, s.interpretation);
                }
            }
            Response::Surfacing { conflict, sections } => {
                let _ = writeln!(out, "{conflict}\n");
                for s in sections {
                    let _ = writeln!(out, "[{}] (alternative)\n{}\n", s.perspective_name, s.interpretation);
                }
            }
        }
        out.trim_end().to_owned() + "\n"
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Selected {
    pub perspective_id: String,
    pub interpretation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Ground {
    pub attack: Attack,
    /// Whether the attacked perspective attacked its attacker in return.
    pub counterattacked: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectionKind {
    /// Outside the grounded extension while others survived.
    Defeated,
    /// Reported as an alternative because nothing survived.
    Contested,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rejected {
    pub perspective_id: String,
    pub interpretation: String,
    pub kind: RejectionKind,
    pub grounds: Vec<Ground>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Explanation {
    pub summary: String,
    pub selected: Vec<Selected>,
    pub rejected: Vec<Rejected>,
    pub graph: AttackGraph,
}

impl Explanation {
    pub fn render(&self) -> String {
        let mut out = self.summary.clone();
        out.push_str("\n\n");
        if !self.selected.is_empty() {
            out.push_str("Selected:\n");
            for s in &self.selected {
                let _ = writeln!(out, "  {}: {}", s.perspective_id, s.interpretation);
            }
        }
        if !self.rejected.is_empty() {
            out.push_str("Rejected:\n");
            for r in &self.rejected {
                let kind = match r.kind {
                    RejectionKind::Defeated => "defeated",
                    RejectionKind::Contested => "contested",
                };
                let _ = writeln!(out, "  {} ({kind}): {}", r.perspective_id, r.interpretation);
                for g in &r.grounds {
                    let status = if g.counterattacked {
                        "counterattacked"
                    } else {
                        "not counterattacked"
                    };
                    let _ = writeln!(
                        out,
                        "    attacked by {} [{status}]: {}",
                        g.attack.attacker, g.attack.justification
                    );
                }
            }
        }
        out
    }
}

/// Display names keyed by perspective id.
pub type Names = BTreeMap<String, String>;

fn name<'a>(names: &'a Names, id: &'a str) -> &'a str {
    names.get(id).map_or(id, String::as_str)
}

fn section(p: &Proposal, names: &Names) -> Section {
    Section {
        perspective_id: p.perspective_id.clone(),
        perspective_name: name(names, &p.perspective_id).to_owned(),
        interpretation: p.interpretation.clone(),
        recommendation: p.recommendation.clone(),
    }
}

fn number_word(n: usize) -> String {
    const WORDS: [&str; 11] = [
        "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
    ];
    WORDS.get(n).map_or_else(|| n.to_string(), |w| (*w).to_owned())
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    chars
        .next()
        .map_or_else(String::new, |c| c.to_uppercase().collect::<String>() + chars.as_str())
}

fn join_names(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [a, b] => format!("{a} and {b}"),
        [rest @ .., last] => format!("{}, and {last}", rest.join(", ")),
    }
}

fn in_grounded(grounded: &Extension, id: &str) -> bool {
    ArgumentId::new(id).is_ok_and(|a| grounded.contains(&a))
}

/// `proposals` is in registration order; sections follow it.
pub fn compose_response(mode: &RetrievalMode, grounded: &Extension, proposals: &[Proposal], names: &Names) -> Response {
    let surviving: Vec<Section> = proposals
        .iter()
        .filter(|p| in_grounded(grounded, &p.perspective_id))
        .map(|p| section(p, names))
        .collect();
    match mode {
        RetrievalMode::Selection => Response::Selection {
            primary: surviving.into_iter().next().expect("selection has one survivor"),
        },
        RetrievalMode::Composition { detail } => Response::Composition {
            kind: *detail,
            sections: surviving,
        },
        RetrievalMode::Surfacing => Response::Surfacing {
            conflict: format!(
                "{} strategic perspectives apply and they conflict.",
                capitalize(&number_word(proposals.len()))
            ),
            sections: proposals.iter().map(|p| section(p, names)).collect(),
        },
    }
}

fn frame_of(p: &Proposal) -> &str {
    if p.frame.is_empty() {
        "interpretation"
    } else {
        &p.frame
    }
}

fn quote(text: &str) -> String {
    format!("\"{}\"", text.trim())
}

fn counterattack_sentence(rejected: &[Rejected], names: &Names) -> String {
    let (countered, silent): (Vec<&Rejected>, Vec<&Rejected>) = rejected
        .iter()
        .partition(|r| r.grounds.iter().any(|g| g.counterattacked));
    let silent_names: Vec<String> = silent
        .iter()
        .map(|r| name(names, &r.perspective_id).to_owned())
        .collect();
    let countered_names: Vec<String> = countered
        .iter()
        .map(|r| name(names, &r.perspective_id).to_owned())
        .collect();
    let mut parts = Vec::new();
    match silent_names.len() {
        0 => {}
        1 => parts.push(format!("{} did not counterattack.", silent_names[0])),
        2 => parts.push("Neither perspective counterattacked.".to_owned()),
        _ => parts.push("None of these perspectives counterattacked.".to_owned()),
    }
    if !countered_names.is_empty() {
        parts.push(format!(
            "{} counterattacked but could not be defended.",
            join_names(&countered_names)
        ));
    }
    parts.join(" ")
}

/// Builds the contrastive explanation. Every proposal ends up in exactly one
/// of `selected` or `rejected`; every incoming attack on a rejected proposal
/// is kept with its justification verbatim.
pub fn assemble_explanation(
    mode: &RetrievalMode,
    graph: &AttackGraph,
    grounded: &Extension,
    proposals: &[Proposal],
    attacks: &[Attack],
    names: &Names,
) -> Explanation {
    let mut selected = Vec::new();
    let mut rejected = Vec::new();
    let kind = if matches!(mode, RetrievalMode::Surfacing) {
        RejectionKind::Contested
    } else {
        RejectionKind::Defeated
    };
    for p in proposals {
        if in_grounded(grounded, &p.perspective_id) {
            selected.push(Selected {
                perspective_id: p.perspective_id.clone(),
                interpretation: p.interpretation.clone(),
            });
            continue;
        }
        let grounds = attacks
            .iter()
            .filter(|a| a.target == p.perspective_id)
            .map(|a| Ground {
                attack: a.clone(),
                counterattacked: attacks
                    .iter()
                    .any(|b| b.attacker == p.perspective_id && b.target == a.attacker),
            })
            .collect();
        rejected.push(Rejected {
            perspective_id: p.perspective_id.clone(),
            interpretation: p.interpretation.clone(),
            kind,
            grounds,
        });
    }

    let by_id: BTreeMap<&str, &Proposal> = proposals.iter().map(|p| (p.perspective_id.as_str(), p)).collect();
    let summary = match mode {
        RetrievalMode::Selection => {
            let winner = name(names, &selected[0].perspective_id);
            let mut s = format!("This response is based on {winner}'s assessment.");
            push_rejections(&mut s, &rejected, &by_id, names);
            s
        }
        RetrievalMode::Composition {
            detail: CompositionKind::Complementary,
        } => {
            let all: Vec<String> = selected
                .iter()
                .map(|x| name(names, &x.perspective_id).to_owned())
                .collect();
            if all.len() == 1 {
                format!(
                    "{} was the only perspective to propose, so its interpretation stands alone.",
                    all[0]
                )
            } else {
                format!(
                    "All {} perspectives contributed: {}. No proposal was challenged, so each is reported in its own section.",
                    number_word(all.len()),
                    join_names(&all)
                )
            }
        }
        RetrievalMode::Composition {
            detail: CompositionKind::Filtered,
        } => {
            let kept: Vec<String> = selected
                .iter()
                .map(|x| name(names, &x.perspective_id).to_owned())
                .collect();
            let mut s = format!("This response combines the assessments of {}.", join_names(&kept));
            push_rejections(&mut s, &rejected, &by_id, names);
            s
        }
        RetrievalMode::Surfacing => {
            let mut s = format!(
                "{} strategic perspectives apply and they conflict.",
                capitalize(&number_word(proposals.len()))
            );
            for p in proposals {
                let _ = write!(s, " {}", name(names, &p.perspective_id));
                if p.recommendation.is_empty() {
                    let _ = write!(s, " proposes: {}", quote(&p.interpretation));
                } else {
                    let _ = write!(s, " recommends {}.", p.recommendation.trim_end_matches('.'));
                }
            }
            for r in &rejected {
                let attackers: Vec<String> = r
                    .grounds
                    .iter()
                    .map(|g| name(names, &g.attack.attacker).to_owned())
                    .collect();
                let _ = write!(
                    s,
                    " {} was challenged by {}.",
                    name(names, &r.perspective_id),
                    join_names(&attackers)
                );
            }
            s.push_str(
                " The system cannot recommend one framing over the others without knowing which strategic priority the team is currently optimizing for.",
            );
            s
        }
    };

    Explanation {
        summary,
        selected,
        rejected,
        graph: graph.clone(),
    }
}

fn push_rejections(s: &mut String, rejected: &[Rejected], by_id: &BTreeMap<&str, &Proposal>, names: &Names) {
    if rejected.is_empty() {
        return;
    }
    let set_aside: Vec<String> = rejected
        .iter()
        .map(|r| {
            let frame = by_id
                .get(r.perspective_id.as_str())
                .map_or("interpretation", |p| frame_of(p));
            format!("{}'s {frame}", name(names, &r.perspective_id))
        })
        .collect();
    let verb = if set_aside.len() == 1 { "was" } else { "were" };
    let _ = write!(s, " {} {verb} also considered but set aside.", join_names(&set_aside));
    for r in rejected {
        for g in &r.grounds {
            let _ = write!(
                s,
                " Against {}, {} argued: {}",
                name(names, &r.perspective_id),
                name(names, &g.attack.attacker),
                quote(&g.attack.justification)
            );
        }
    }
    let _ = write!(s, " {}", counterattack_sentence(rejected, names));
}
