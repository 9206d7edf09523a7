//! Outcome traces of a policy and their SVG rendering.
//!
//! Traces are enumerated exactly, most probable first, by a best-first walk
//! over the outcome tree: a path's probability never grows as it is
//! extended, so the first `k` finished paths popped are the `k` most
//! probable ones. Whatever is not shown is reported as "other outcomes".

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::RecourseMdp;
use crate::schema::StateIndex;
use crate::solver::PolicyTable;

/// Cap on tree nodes expanded per panel.
pub const MAX_EXPANSIONS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub action: String,
    pub cost: f64,
    pub succeeded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub steps: Vec<TraceStep>,
    pub probability: f64,
    pub total_cost: f64,
    pub reached_goal: bool,
}

impl Trace {
    /// Segment labels with consecutive repeats folded, e.g. `quit-drinking ×2`.
    pub fn segments(&self) -> Vec<(String, f64)> {
        let mut out: Vec<(String, f64, usize)> = Vec::new();
        for s in &self.steps {
            match out.last_mut() {
                Some((name, cost, n)) if *name == s.action => {
                    *cost += s.cost;
                    *n += 1;
                }
                _ => out.push((s.action.clone(), s.cost, 1)),
            }
        }
        out.into_iter()
            .map(|(name, cost, n)| {
                let label = if n > 1 { format!("{name} ×{n}") } else { name };
                (label, cost)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePanel {
    pub title: String,
    pub traces: Vec<Trace>,
    /// Probability of every outcome not listed.
    pub other_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceFigure {
    pub panels: Vec<TracePanel>,
}

struct Node {
    probability: f64,
    seq: u64,
    state: StateIndex,
    h: usize,
    cost: f64,
    steps: Vec<TraceStep>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // max-heap on probability; earlier insertion wins ties
    fn cmp(&self, other: &Self) -> Ordering {
        self.probability
            .total_cmp(&other.probability)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// The `top_k` most probable outcome traces of `policy` from `s0`.
pub fn enumerate_traces(
    mdp: &RecourseMdp,
    policy: &PolicyTable,
    s0: StateIndex,
    top_k: usize,
    title: impl Into<String>,
) -> Result<TracePanel> {
    if top_k == 0 {
        return Err(Error::InvalidArgument("top_k must be at least 1".into()));
    }
    if s0.as_usize() >= mdp.num_states() {
        return Err(Error::IndexOutOfRange {
            index: s0.0,
            cardinality: mdp.num_states() as u64,
        });
    }
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    heap.push(Node {
        probability: 1.0,
        seq,
        state: s0,
        h: 1,
        cost: 0.0,
        steps: Vec::new(),
    });
    let mut traces = Vec::new();
    let mut expansions = 0usize;
    while let Some(node) = heap.pop() {
        let goal = mdp.is_goal(node.state);
        if goal || node.h > policy.horizon() {
            traces.push(Trace {
                probability: node.probability,
                total_cost: node.cost,
                reached_goal: goal,
                steps: node.steps,
            });
            if traces.len() == top_k {
                break;
            }
            continue;
        }
        expansions += 1;
        if expansions > MAX_EXPANSIONS {
            log::warn!("trace enumeration stopped after {MAX_EXPANSIONS} expansions");
            break;
        }
        let a = policy.action(node.h, node.state);
        let name = mdp.action_name(a).to_string();
        for o in mdp.transitions(node.state, a)? {
            let mut steps = node.steps.clone();
            steps.push(TraceStep {
                action: name.clone(),
                cost: o.cost,
                succeeded: o.successor != node.state,
            });
            seq += 1;
            heap.push(Node {
                probability: node.probability * o.probability,
                seq,
                state: o.successor,
                h: node.h + 1,
                cost: node.cost + o.cost,
                steps,
            });
        }
    }
    let shown: f64 = traces.iter().map(|t| t.probability).sum();
    Ok(TracePanel {
        title: title.into(),
        traces,
        other_probability: (1.0 - shown).max(0.0),
    })
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

const WIDTH: f64 = 900.0;
const LEFT: f64 = 40.0;
const PLOT: f64 = 560.0;
const ROW: f64 = 34.0;
const PANEL_HEAD: f64 = 40.0;

/// Deterministic SVG: one horizontal line per trace, length proportional
/// to total cost, stroke width proportional to probability. Goal-reaching
/// traces are green, others red. Panels stack vertically and share the
/// cost axis.
pub fn render_svg(figure: &TraceFigure) -> String {
    let max_cost = figure
        .panels
        .iter()
        .flat_map(|p| &p.traces)
        .map(|t| t.total_cost)
        .fold(0.0f64, f64::max)
        .max(1.0);
    let scale = PLOT / max_cost;
    let height: f64 = figure
        .panels
        .iter()
        .map(|p| PANEL_HEAD + ROW * (p.traces.len() + 1) as f64)
        .sum::<f64>()
        + 30.0;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{height:.0}" viewBox="0 0 {WIDTH:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let mut y0 = 0.0;
    for panel in &figure.panels {
        let _ = writeln!(
            svg,
            r#"<text x="{LEFT:.1}" y="{:.1}" font-size="13" font-weight="bold">{}</text>"#,
            y0 + 22.0,
            escape(&panel.title)
        );
        for (i, t) in panel.traces.iter().enumerate() {
            let y = y0 + PANEL_HEAD + ROW * i as f64 + ROW / 2.0;
            let width = 1.0 + 14.0 * t.probability;
            let color = if t.reached_goal { "#2b8a3e" } else { "#c92a2a" };
            let mut x = LEFT;
            for (label, cost) in t.segments() {
                let x1 = x + cost * scale;
                let _ = writeln!(
                    svg,
                    r#"<line x1="{x:.2}" y1="{y:.2}" x2="{x1:.2}" y2="{y:.2}" stroke="{color}" stroke-width="{width:.3}" stroke-linecap="butt"/>"#
                );
                let _ = writeln!(
                    svg,
                    r#"<line x1="{x1:.2}" y1="{:.2}" x2="{x1:.2}" y2="{:.2}" stroke="black" stroke-width="1"/>"#,
                    y - 6.0,
                    y + 6.0
                );
                let _ = writeln!(
                    svg,
                    r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                    (x + x1) / 2.0,
                    y - width / 2.0 - 3.0,
                    escape(&label)
                );
                x = x1;
            }
            let marker = if t.reached_goal { "goal" } else { "no goal" };
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.2}">p={:.4}  cost={:.2}  {marker}</text>"#,
                LEFT + PLOT + 20.0,
                y + 4.0,
                t.probability,
                t.total_cost
            );
        }
        let y = y0 + PANEL_HEAD + ROW * panel.traces.len() as f64 + ROW / 2.0;
        let _ = writeln!(
            svg,
            r##"<text x="{LEFT:.1}" y="{:.2}" fill="#666">other outcomes p={:.4}</text>"##,
            y + 4.0,
            panel.other_probability
        );
        y0 += PANEL_HEAD + ROW * (panel.traces.len() + 1) as f64;
    }
    let _ = writeln!(
        svg,
        r#"<text x="{LEFT:.1}" y="{:.1}">cost axis: 0 to {max_cost:.2}</text>"#,
        height - 10.0
    );
    svg.push_str("</svg>\n");
    svg
}
