//! CSV tables, structured diagnostics and static SVG plots.
//!
//! Every CSV carries a header row naming columns and units; floating values
//! are printed with 17 significant digits so reruns with the same seed are
//! byte-identical.

use crate::CliError;
use mftg_core::sim::PathEnsemble;
use mftg_core::solver::{PositivityReport, SolvedCoefficients};
use mftg_core::GameDefinition;
use std::fmt::Write as _;
use std::path::Path;

pub fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_file(dir: &Path, name: &str, content: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("creating {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, content)
        .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
    Ok(())
}

/// coefficients.csv: t (time), regime (label), component, value.
pub fn coefficients_csv(def: &GameDefinition, sol: &SolvedCoefficients) -> String {
    let mut out = String::from("t,regime,component,value\n");
    let labels: Vec<String> = match def.generator() {
        Some(g) => g.labels().to_vec(),
        None => (0..sol.layout.states).map(|s| format!("s{s}")).collect(),
    };
    for (c, desc) in sol.layout.components.iter().enumerate() {
        for node in 0..sol.grid.num_nodes() {
            let t = sol.grid.node(node);
            for (s, label) in labels.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{label},{},{}",
                    fmt_f(t),
                    desc.name,
                    fmt_f(sol.fields[c].at_node(node, s))
                );
            }
        }
    }
    out
}

/// feedback_gains.csv: t, regime, player, gain name, value.
pub fn feedback_gains_csv(def: &GameDefinition, sol: &SolvedCoefficients) -> String {
    let mut out = String::from("t,regime,player,gain,value\n");
    let states = sol.layout.states;
    let labels: Vec<String> = match def.generator() {
        Some(g) => g.labels().to_vec(),
        None => (0..states).map(|s| format!("s{s}")).collect(),
    };
    let grid = sol.grid;
    let mut push = |t: f64, s: usize, player: usize, gain: &str, v: f64| {
        let _ = writeln!(out, "{},{},{player},{gain},{}", fmt_f(t), labels[s], fmt_f(v));
    };
    for node in 0..grid.num_nodes() {
        let t = grid.node(node);
        for s in 0..states {
            match def {
                GameDefinition::LogState(g) => {
                    for i in 0..g.spec.players.len() {
                        push(t, s, i, "u_star", g.gain(sol.fields[2 * i].at_node(node, s), i, s));
                    }
                }
                GameDefinition::LogSquare(g) => {
                    for i in 0..g.spec.players.len() {
                        push(t, s, i, "log_slope", g.gain_coeff(sol.fields[i].at_node(node, s), i, s));
                    }
                }
                GameDefinition::LegendreFenchel(g) => {
                    for i in 0..g.spec.players.len() {
                        push(t, s, i, "state_slope", g.gain_coeff(sol.fields[2 * i].at_node(node, s), i, s));
                    }
                }
                GameDefinition::GeometricGv(g) => {
                    for i in 0..g.spec.players.len() {
                        push(t, s, i, "sqrt_gain", g.gain(sol.fields[i].at_node(node, s), i, s));
                    }
                }
                GameDefinition::ControlledSwitching(g) => {
                    for i in 0..g.spec.players.len() {
                        let (c, m) = g.feedback(&sol.fields, t, s, i);
                        push(t, s, i, "centered", c);
                        push(t, s, i, "mean", m);
                    }
                }
                GameDefinition::QuadraticQuadratic(g) => {
                    for i in 0..g.spec.players.len() {
                        let a = sol.fields[i].at_node(node, s);
                        push(t, s, i, "centered_slope", -g.centered_slope(a, i, s));
                        push(t, s, i, "mean", g.mean_control(a, i, s));
                    }
                }
                GameDefinition::Cotangent(g) | GameDefinition::HyperbolicCotangent(g) => {
                    for i in 0..g.spec.players.len() {
                        // tan/tanh slope coefficients of the two feedback parts
                        let a = sol.fields[3 * i].at_node(node, s);
                        let ab = sol.fields[3 * i + 1].at_node(node, s);
                        push(t, s, i, "centered_slope", -g.spec.players[i].b2.get(s) * a / 4.0);
                        push(t, s, i, "mean_slope", -g.spec.players[i].b2_bar.get(s) * ab / 4.0);
                    }
                }
                GameDefinition::DelayedTrend(g) => {
                    let a = sol.fields[0].at_node(node, s);
                    let beta = sol.fields[1].at_node(node, s);
                    push(t, s, 0, "centered_slope", a / g.spec.r1.get(s));
                    push(
                        t,
                        s,
                        0,
                        "consumption_slope",
                        (beta / g.spec.r1_bar).powf(1.0 / (g.spec.rho - 1.0)),
                    );
                    push(t, s, 1, "centered", g.u2_centered());
                }
                GameDefinition::GvPowerNash(g) => {
                    for b in 0..g.spec.blocks.len() {
                        push(t, s, b, "centered_gain", g.gain(sol.fields[2 * b].at_node(node, s), b, s));
                        push(t, s, b, "mean_gain", g.bar_gain(sol.fields[2 * b + 1].at_node(node, s), b, s));
                    }
                }
                GameDefinition::GvPowerCooperative(g) => {
                    for b in 0..g.spec.blocks.len() {
                        push(t, s, b, "centered_gain", g.gain(sol.fields[0].at_node(node, s), b, s));
                        push(t, s, b, "mean_gain", g.bar_gain(sol.fields[1].at_node(node, s), b, s));
                    }
                }
                GameDefinition::GvPowerAdversarial(g) => {
                    for b in 0..g.spec.blocks.len() {
                        push(t, s, b, "centered_gain", g.gain(sol.fields[0].at_node(node, s), b, s));
                        push(t, s, b, "mean_gain", g.bar_gain(sol.fields[1].at_node(node, s), b, s));
                    }
                }
            }
        }
    }
    out
}

/// diagnostics.json: escape flags, positivity, terminal residuals, steps.
pub fn diagnostics_json(
    def: &GameDefinition,
    sol: &SolvedCoefficients,
    positivity: &PositivityReport,
) -> String {
    let comps: Vec<String> = positivity
        .components
        .iter()
        .map(|(name, min, flagged)| {
            format!(
                "    {{\"component\": \"{name}\", \"min\": {}, \"flagged\": {flagged}}}",
                fmt_f(*min)
            )
        })
        .collect();
    format!(
        "{{\n  \"variant\": \"{}\",\n  \"steps\": {},\n  \"refined\": {},\n  \"refinement_change\": {},\n  \"max_abs\": {},\n  \"terminal_residual\": {},\n  \"escape\": false,\n  \"positivity_clean\": {},\n  \"components\": [\n{}\n  ]\n}}\n",
        def.variant_name(),
        sol.diagnostics.steps,
        sol.diagnostics.refined,
        fmt_f(sol.diagnostics.refinement_change),
        fmt_f(sol.diagnostics.max_abs),
        fmt_f(sol.diagnostics.terminal_residual),
        positivity.clean(),
        comps.join(",\n")
    )
}

/// paths.csv: sample trajectories (state, controls, regime) at grid nodes.
pub fn paths_csv(ens: &PathEnsemble) -> String {
    let players = ens.costs.len();
    let mut head = String::from("sample,common_path,t,regime,x");
    let n_controls = ens.sample_paths.first().map_or(players, |p| p.controls.len());
    for i in 0..n_controls {
        let _ = write!(head, ",u_{i}");
    }
    head.push('\n');
    let mut out = head;
    for (idx, sp) in ens.sample_paths.iter().enumerate() {
        for node in 0..sp.x.len() {
            let t = ens.grid.node(node);
            let _ = write!(
                out,
                "{idx},{},{},{},{}",
                sp.common,
                fmt_f(t),
                sp.regimes[node],
                fmt_f(sp.x[node])
            );
            for c in &sp.controls {
                let _ = write!(out, ",{}", fmt_f(c[node]));
            }
            out.push('\n');
        }
    }
    out
}

/// meanfield.csv: conditional-mean trajectories plus the ensemble mean |x|.
pub fn meanfield_csv(ens: &PathEnsemble) -> String {
    let mut out = String::from("t,mean_abs_x");
    for r in 0..ens.xbar_paths.len() {
        let _ = write!(out, ",xbar_path_{r}");
    }
    out.push('\n');
    for node in 0..ens.grid.num_nodes() {
        let _ = write!(out, "{},{}", fmt_f(ens.grid.node(node)), fmt_f(ens.mean_abs_state[node]));
        for xb in &ens.xbar_paths {
            let _ = write!(out, ",{}", fmt_f(xb[node]));
        }
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// minimal static SVG line plots

pub struct Series<'a> {
    pub label: &'a str,
    pub values: Vec<f64>,
}

const PALETTE: [&str; 6] = ["#1b6ca8", "#c23b22", "#2e8b57", "#8860d0", "#cc7722", "#444444"];

/// Render one or more series over the grid as a static SVG line plot.
pub fn svg_plot(title: &str, grid: &mftg_core::TimeGrid, series: &[Series]) -> String {
    let (w, h) = (760.0, 420.0);
    let (ml, mr, mt, mb) = (70.0, 20.0, 40.0, 50.0);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in series {
        for v in &s.values {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
    }
    if !lo.is_finite() || lo == hi {
        lo -= 1.0;
        hi += 1.0;
    }
    let pad = 0.05 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);
    let t_max = grid.horizon();
    let x_of = |t: f64| ml + (w - ml - mr) * t / t_max;
    let y_of = |v: f64| h - mb - (h - mt - mb) * (v - lo) / (hi - lo);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{title}</text>\n",
        0.5 * w
    );
    // axes
    let _ = writeln!(
        svg,
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        h - mb,
        w - mr,
        h - mb
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>",
        h - mb
    );
    for i in 0..=4 {
        let t = t_max * i as f64 / 4.0;
        let v = lo + (hi - lo) * i as f64 / 4.0;
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{t:.2}</text>",
            x_of(t),
            h - mb + 18.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{v:.3}</text>",
            ml - 6.0,
            y_of(v) + 4.0
        );
    }
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut d = String::new();
        let n = s.values.len();
        for (j, v) in s.values.iter().enumerate() {
            let t = grid.horizon() * j as f64 / (n - 1).max(1) as f64;
            let _ = write!(d, "{}{:.2},{:.2} ", if j == 0 { "M" } else { "L" }, x_of(t), y_of(*v));
        }
        let _ = writeln!(
            svg,
            "<path d=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.3\"/>",
            d.trim_end()
        );
        let ly = mt + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/><text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
            w - mr - 150.0,
            w - mr - 130.0,
            w - mr - 125.0,
            ly + 4.0,
            s.label
        );
    }
    svg.push_str("</svg>\n");
    svg
}
