//! Acceptance suite. Prints one `criterion N: PASS|FAIL` line per criterion
//! and exits non-zero if any fails.
//!
//! Expectations are written out here by hand from the scenario's recorded
//! results; they are not read back from the fixture's `expected` section.

mod common;

use std::collections::BTreeSet;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rashomon::arbiter::{QueryResult, RetrievalOutcome};
use rashomon::argumentation::{CompositionKind, RetrievalMode};
use rashomon::buffer::LogicalClock;
use rashomon::kgstore::{parse_turtle, serialize_turtle, write_turtle};
use rashomon::scenario::{ordered, run_scenario, ScenarioFile, ScenarioRun};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const SCRIPTED: &str = "meridian.json";
const RULES: &str = "meridian_rules.json";

fn run(name: &str) -> ScenarioRun {
    let scenario = ScenarioFile::load(common::fixture(name)).expect("fixture loads");
    run_scenario(&scenario, Arc::new(LogicalClock::default()), None).expect("scenario runs")
}

fn outcome<'a>(run: &'a ScenarioRun, q: &str) -> Result<&'a RetrievalOutcome, String> {
    run.result(q)
        .and_then(QueryResult::outcome)
        .ok_or_else(|| format!("{q} did not resolve"))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let spent = start.elapsed();
    ensure(spent < limit, || format!("took {spent:?}, limit {limit:?}"))
}

fn composition(kind: CompositionKind) -> RetrievalMode {
    RetrievalMode::Composition { detail: kind }
}

fn table_2() -> Outcome {
    let start = Instant::now();
    let run = run(SCRIPTED);
    let rows: [(&str, usize, &[&str], RetrievalMode); 4] = [
        ("q1", 2, &["risk", "fin"], composition(CompositionKind::Filtered)),
        (
            "q2",
            0,
            &["rel", "risk", "fin"],
            composition(CompositionKind::Complementary),
        ),
        ("q3", 3, &["risk"], RetrievalMode::Selection),
        ("q4", 6, &[], RetrievalMode::Surfacing),
    ];
    for (q, attacks, grounded, mode) in rows {
        let o = outcome(&run, q)?;
        ensure(o.attacks.len() == attacks, || {
            format!("{q}: {} attacks, want {attacks}", o.attacks.len())
        })?;
        let got = ordered(&o.graph, &o.grounded);
        ensure(got == grounded, || format!("{q}: grounded {got:?}, want {grounded:?}"))?;
        ensure(o.mode == mode, || format!("{q}: mode {}, want {mode}", o.mode))?;
    }
    within(start, Duration::from_secs(1))?;
    Ok(format!("attacks 2/0/3/6, modes match ({:?})", start.elapsed()))
}

// Rows are observations 1..8; columns rel, risk, fin.
const TABLE_1: [[bool; 3]; 8] = [
    [true, false, false],
    [true, true, true],
    [true, false, false],
    [false, true, true],
    [false, false, true],
    [true, false, true],
    [true, false, false],
    [false, true, true],
];

fn table_1() -> Outcome {
    let start = Instant::now();
    for name in [SCRIPTED, RULES] {
        let run = run(name);
        let report = &run.report;
        ensure(report.encoded == 13 && report.possible == 24, || {
            format!("{name}: {}/{}", report.encoded, report.possible)
        })?;
        for (i, row) in TABLE_1.iter().enumerate() {
            let obs = format!("obs-{}", i + 1);
            for (p, want) in ["rel", "risk", "fin"].iter().zip(row) {
                let got = report.cell(&obs, p).is_some_and(|c| c.is_encoded());
                ensure(got == *want, || {
                    format!("{name}: {p} x {obs} encoded={got}, want {want}")
                })?;
            }
        }
        let totals: Vec<(usize, usize)> = report.totals.iter().map(|t| (t.encoded, t.total)).collect();
        ensure(totals == [(5, 8), (3, 8), (5, 8)], || {
            format!("{name}: totals {totals:?}")
        })?;
    }
    within(start, Duration::from_secs(1))?;
    Ok(format!("13/24, 5/8 3/8 5/8 on both backends ({:?})", start.elapsed()))
}

fn preferred_singletons() -> Outcome {
    let run = run(SCRIPTED);
    let o = outcome(&run, "q4")?;
    let got: Vec<Vec<String>> = o.preferred.iter().map(|e| ordered(&o.graph, e)).collect();
    ensure(got == [vec!["rel"], vec!["risk"], vec!["fin"]], || {
        format!("preferred {got:?}")
    })?;
    Ok("{rel} {risk} {fin}".into())
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x00ac_ce97);
    let cases = 2000;
    for i in 0..cases {
        let frame = common::Bitframe::random(&mut rng, 6);
        let graph = frame.to_graph();
        let grounded = frame.to_mask(&graph.grounded_extension());
        ensure(
            grounded == frame.grounded_lfp() && grounded == frame.grounded_by_complete(),
            || format!("case {i}: grounded mismatch on {frame:?}"),
        )?;
        let preferred = graph.preferred_extensions();
        let masks: BTreeSet<u32> = preferred.iter().map(|e| frame.to_mask(e)).collect();
        ensure(masks.len() == preferred.len() && masks == frame.preferred(), || {
            format!("case {i}: preferred mismatch on {frame:?}")
        })?;
    }
    within(start, Duration::from_secs(30))?;
    Ok(format!("{cases} frameworks, 0 mismatches ({:?})", start.elapsed()))
}

fn invocation_budget() -> Outcome {
    let run = run(SCRIPTED);
    let (counts, _) = run.arbiter.calls();
    ensure(run.report.relevance_checks == 24 && counts.relevance == 24, || {
        format!(
            "relevance checks {} / {}",
            run.report.relevance_checks, counts.relevance
        )
    })?;
    ensure(run.report.encode_calls == 13 && counts.encode == 13, || {
        format!("encode calls {} / {}", run.report.encode_calls, counts.encode)
    })?;
    let mut worst = 0;
    for r in &run.results {
        let total = r.calls().total();
        worst = worst.max(total);
        ensure(total <= 7, || format!("a query used {total} calls"))?;
    }
    Ok(format!("24 + 13 encoding calls, at most {worst} per query"))
}

fn turtle_round_trip() -> Outcome {
    let mut graphs = 0;
    for name in [SCRIPTED, RULES] {
        let run = run(name);
        for agent in run.arbiter.agents() {
            let g = agent.graph();
            let doc = parse_turtle(&serialize_turtle(g)).map_err(|e| e.to_string())?;
            ensure(&doc.triples == g.abox(), || {
                format!("{name}/{} abox differs", agent.id())
            })?;
            let tbox = g.tbox().to_triples();
            let doc = parse_turtle(&write_turtle(g.prefixes(), &tbox)).map_err(|e| e.to_string())?;
            ensure(doc.triples == tbox, || format!("{name}/{} tbox differs", agent.id()))?;
            graphs += 2;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x0000_771e);
    let cases = 600;
    for i in 0..cases {
        let prefixes = common::random_prefixes(&mut rng);
        let triples = common::random_triples(&mut rng, 50);
        let text = write_turtle(&prefixes, &triples);
        let doc = parse_turtle(&text).map_err(|e| format!("case {i}: {e}"))?;
        ensure(doc.triples == triples, || format!("case {i} differs"))?;
    }
    Ok(format!("{graphs} fixture graphs and {cases} random graphs"))
}

const RISK_ON_REL: &str = "Relationship Strategy frames exposure through trust levels and reciprocity dynamics. \
These are valid relationship metrics, but they do not constitute risk exposure in the compliance, legal, \
or financial sense the query requires.";
const RISK_ON_FIN: &str =
    "Financial Planning quantifies margin erosion, but margin impact is a financial performance metric, not a risk exposure assessment.";

fn explanation_completeness() -> Outcome {
    let run = run(SCRIPTED);
    let mut checked = 0;
    for r in &run.results {
        let Some(o) = r.outcome() else { continue };
        let q = &o.ctx.id;
        let text = o.explanation.render();
        let selected: Vec<&str> = o
            .explanation
            .selected
            .iter()
            .map(|s| s.perspective_id.as_str())
            .collect();
        let rejected: Vec<&str> = o
            .explanation
            .rejected
            .iter()
            .map(|s| s.perspective_id.as_str())
            .collect();
        let mut union: Vec<&str> = selected.iter().chain(&rejected).copied().collect();
        union.sort_unstable();
        let mut proposers: Vec<&str> = o.proposals.iter().map(|p| p.perspective_id.as_str()).collect();
        proposers.sort_unstable();
        ensure(union == proposers, || {
            format!("{q}: selected {selected:?} + rejected {rejected:?} != {proposers:?}")
        })?;
        for rej in &o.explanation.rejected {
            ensure(!rej.grounds.is_empty(), || {
                format!("{q}: {} rejected without grounds", rej.perspective_id)
            })?;
            for g in &rej.grounds {
                ensure(o.attacks.contains(&g.attack), || {
                    format!("{q}: ground not among submitted attacks")
                })?;
                ensure(text.contains(&g.attack.justification), || {
                    format!("{q}: justification for {} not quoted", rej.perspective_id)
                })?;
            }
        }
        checked += 1;
    }
    let text = outcome(&run, "q3")?.explanation.render();
    ensure(text.contains(RISK_ON_REL), || {
        "q3 lacks Risk's text on Relationship".into()
    })?;
    ensure(text.contains(RISK_ON_FIN), || {
        "q3 lacks Risk's text on Financial".into()
    })?;
    Ok(format!(
        "{checked} queries partitioned and quoted; q3 carries both Risk texts"
    ))
}

fn replay_into(dir: &Path) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_rashomon"))
        .args(["replay", "--logical-clock", "--scenario"])
        .arg(common::fixture(SCRIPTED))
        .arg("--out")
        .arg(dir)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        String::from_utf8_lossy(&out.stderr).into_owned()
    })
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    replay_into(a.path())?;
    replay_into(b.path())?;
    let list = |d: &Path| -> Result<BTreeSet<String>, String> {
        fs::read_dir(d)
            .map_err(|e| e.to_string())?
            .map(|e| {
                e.map(|e| e.file_name().to_string_lossy().into_owned())
                    .map_err(|e| e.to_string())
            })
            .collect()
    };
    let files = list(a.path())?;
    ensure(files == list(b.path())?, || "artifact sets differ".into())?;
    ensure(files.len() >= 20, || format!("only {} artifacts", files.len()))?;
    for f in &files {
        let x = fs::read(a.path().join(f)).map_err(|e| e.to_string())?;
        let y = fs::read(b.path().join(f)).map_err(|e| e.to_string())?;
        ensure(x == y, || format!("{f} differs"))?;
    }
    Ok(format!("{} artifacts byte-identical", files.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("query table reproduction", table_2),
        ("encoding selectivity reproduction", table_1),
        ("preferred singletons on the surfacing query", preferred_singletons),
        ("semantics oracle equivalence", oracle_equivalence),
        ("invocation budget", invocation_budget),
        ("turtle round trip", turtle_round_trip),
        ("explanation contrastive completeness", explanation_completeness),
        ("replay determinism", determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| (*s).to_owned()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
