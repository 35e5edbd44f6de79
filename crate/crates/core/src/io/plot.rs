//! Static SVG charts. Output is a pure function of the input numbers, so
//! figures can be checksummed like any other artifact.

use svg::node::element::{Circle, Group, Line, Polyline, Rectangle, Text};
use svg::Document;

use super::table::Table;
use crate::Result;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// Linear map from data bounds to the plotting area.
#[derive(Debug, Clone, Copy)]
struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit(points: impl Iterator<Item = (f64, f64)>) -> Option<Frame> {
        let mut f: Option<Frame> = None;
        for (x, y) in points.filter(|(x, y)| x.is_finite() && y.is_finite()) {
            f = Some(match f {
                None => Frame { x0: x, x1: x, y0: y, y1: y },
                Some(f) => Frame { x0: f.x0.min(x), x1: f.x1.max(x), y0: f.y0.min(y), y1: f.y1.max(y) },
            });
        }
        f.map(|mut f| {
            if f.x1 == f.x0 {
                f.x0 -= 0.5;
                f.x1 += 0.5;
            }
            if f.y1 == f.y0 {
                f.y0 -= 0.5;
                f.y1 += 0.5;
            }
            f
        })
    }

    fn px(&self, x: f64) -> f64 {
        round(LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT))
    }

    fn py(&self, y: f64) -> f64 {
        round(HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM))
    }
}

fn round(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

fn label(x: f64, y: f64, text: &str, anchor: &str) -> Text {
    Text::new(text).set("x", round(x)).set("y", round(y)).set("font-size", 12).set("text-anchor", anchor)
}

fn tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn canvas(title: &str, x_label: &str, y_label: &str, frame: Option<Frame>) -> Document {
    let mut doc = Document::new()
        .set("xmlns", "http://www.w3.org/2000/svg")
        .set("viewBox", (0, 0, WIDTH, HEIGHT))
        .set("width", WIDTH)
        .set("height", HEIGHT)
        .add(Rectangle::new().set("width", WIDTH).set("height", HEIGHT).set("fill", "white"))
        .add(label(WIDTH / 2.0, 22.0, title, "middle").set("font-size", 15))
        .add(label(WIDTH / 2.0, HEIGHT - 10.0, x_label, "middle"))
        .add(
            label(16.0, HEIGHT / 2.0, y_label, "middle")
                .set("transform", format!("rotate(-90 16 {})", round(HEIGHT / 2.0))),
        );
    let axes = Polyline::new()
        .set("points", format!("{LEFT},{TOP} {LEFT},{} {},{}", HEIGHT - BOTTOM, WIDTH - RIGHT, HEIGHT - BOTTOM))
        .set("fill", "none")
        .set("stroke", "black");
    doc = doc.add(axes);
    match frame {
        Some(f) => {
            let mut g = Group::new().set("font-family", "sans-serif");
            for i in 0..=4 {
                let u = i as f64 / 4.0;
                let xv = f.x0 + u * (f.x1 - f.x0);
                let yv = f.y0 + u * (f.y1 - f.y0);
                g = g.add(label(f.px(xv), HEIGHT - BOTTOM + 16.0, &tick(xv), "middle")).add(label(
                    LEFT - 6.0,
                    f.py(yv) + 4.0,
                    &tick(yv),
                    "end",
                ));
            }
            doc.add(g)
        }
        None => doc.add(label(WIDTH / 2.0, HEIGHT / 2.0, "warning: no data", "middle").set("fill", "#d62728")),
    }
}

fn legend(mut doc: Document, names: &[&str]) -> Document {
    for (i, name) in names.iter().enumerate() {
        let y = TOP + 14.0 + 16.0 * i as f64;
        let x = WIDTH - RIGHT - 150.0;
        doc = doc
            .add(
                Line::new()
                    .set("x1", x)
                    .set("x2", x + 18.0)
                    .set("y1", y - 4.0)
                    .set("y2", y - 4.0)
                    .set("stroke", PALETTE[i % PALETTE.len()])
                    .set("stroke-width", 2),
            )
            .add(label(x + 24.0, y, name, "start"));
    }
    doc
}

/// Line chart with one polyline per series.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let frame = Frame::fit(series.iter().flat_map(|s| s.points.iter().copied()));
    let mut doc = canvas(title, x_label, y_label, frame);
    if let Some(f) = frame {
        for (i, s) in series.iter().enumerate() {
            let pts: Vec<String> = s
                .points
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|&(x, y)| format!("{},{}", f.px(x), f.py(y)))
                .collect();
            doc = doc.add(
                Polyline::new()
                    .set("points", pts.join(" "))
                    .set("fill", "none")
                    .set("stroke", PALETTE[i % PALETTE.len()])
                    .set("stroke-width", 1.5),
            );
        }
        let names: Vec<&str> = series.iter().map(|s| s.name.as_str()).collect();
        doc = legend(doc, &names);
    }
    doc.to_string()
}

/// Overlaid histograms sharing bin edges.
pub fn histogram(title: &str, x_label: &str, edges: &[(f64, f64)], series: &[(&str, &[f64])]) -> String {
    let frame = Frame::fit(
        edges
            .iter()
            .flat_map(|&(l, r)| [(l, 0.0), (r, 0.0)])
            .chain(series.iter().flat_map(|(_, m)| m.iter().map(|&v| (edges.first().map_or(0.0, |e| e.0), v)))),
    );
    let mut doc = canvas(title, x_label, "mass", if edges.is_empty() { None } else { frame });
    if let (Some(f), false) = (frame, edges.is_empty()) {
        for (i, (_, masses)) in series.iter().enumerate() {
            let colour = PALETTE[i % PALETTE.len()];
            let mut g = Group::new().set("fill", colour).set("fill-opacity", 0.45);
            for (&(l, r), &m) in edges.iter().zip(masses.iter()) {
                if m > 0.0 {
                    let (x, w) = (f.px(l), round(f.px(r) - f.px(l)));
                    let (y, h) = (f.py(m), round(f.py(0.0) - f.py(m)));
                    g = g.add(Rectangle::new().set("x", x).set("y", y).set("width", w).set("height", h));
                }
            }
            doc = doc.add(g);
        }
        let names: Vec<&str> = series.iter().map(|(n, _)| *n).collect();
        doc = legend(doc, &names);
    }
    doc.to_string()
}

/// Start point, end point and group index of one arrow.
pub type Move = ((f64, f64), (f64, f64), usize);

/// One arrow per agent from initial to final skill, coloured by group.
pub fn arrows(title: &str, x_label: &str, y_label: &str, moves: &[Move], groups: &[&str]) -> String {
    let frame = Frame::fit(moves.iter().flat_map(|&(a, b, _)| [a, b]));
    let mut doc = canvas(title, x_label, y_label, frame);
    if let Some(f) = frame {
        for &((x0, y0), (x1, y1), g) in moves {
            let colour = PALETTE[g % PALETTE.len()];
            doc = doc
                .add(
                    Line::new()
                        .set("x1", f.px(x0))
                        .set("y1", f.py(y0))
                        .set("x2", f.px(x1))
                        .set("y2", f.py(y1))
                        .set("stroke", colour)
                        .set("stroke-opacity", 0.7),
                )
                .add(Circle::new().set("cx", f.px(x1)).set("cy", f.py(y1)).set("r", 2.5).set("fill", colour));
        }
        doc = legend(doc, groups);
    }
    doc.to_string()
}

/// Welfare against AI volume, one curve per `beta`.
pub fn welfare_figure(curves: &Table) -> Result<String> {
    let beta = curves.column_f64("beta")?;
    let d = curves.column_f64("d_a")?;
    let w = curves.column_f64("welfare")?;
    let mut series: Vec<Series> = Vec::new();
    for ((b, x), y) in beta.iter().zip(d).zip(w) {
        match series.last_mut() {
            Some(s) if s.name == format!("beta = {}", tick(*b)) => s.points.push((x, y)),
            _ => series.push(Series { name: format!("beta = {}", tick(*b)), points: vec![(x, y)] }),
        }
    }
    Ok(line_chart("Welfare against AI volume", "D_A", "welfare", &series))
}

/// Pre- and post-shock supplied-quality histograms.
pub fn quality_figure(hist: &Table) -> Result<String> {
    let l = hist.column_f64("bin_left")?;
    let r = hist.column_f64("bin_right")?;
    let pre = hist.column_f64("mass_pre")?;
    let post = hist.column_f64("mass_post")?;
    let edges: Vec<(f64, f64)> = l.into_iter().zip(r).collect();
    Ok(histogram("Supplied quality", "quality", &edges, &[("pre-shock", &pre), ("post-shock", &post)]))
}

/// Active humans, shares and exit rate over time.
pub fn population_figure(series: &Table) -> Result<String> {
    let t = series.column_f64("t")?;
    let n0 = series.column_f64("active_humans")?.first().copied().unwrap_or(1.0).max(1.0);
    let mk = |name: &str, ys: Vec<f64>| Series { name: name.to_string(), points: t.iter().copied().zip(ys).collect() };
    let active = series.column_f64("active_humans")?.into_iter().map(|v| v / n0).collect();
    Ok(line_chart(
        "Population and market shares",
        "period",
        "share",
        &[
            mk("active humans / initial", active),
            mk("human share", series.column_f64("human_share")?),
            mk("AI share", series.column_f64("ai_share")?),
            mk("exit rate", series.column_f64("exit_rate")?),
        ],
    ))
}

/// Skill trajectories of the initial cohort, survivors against exiters.
pub fn skills_figure(agents: &Table) -> Result<String> {
    let t0 = agents.column_f64("initial_s_tech")?;
    let c0 = agents.column_f64("initial_s_creative")?;
    let t1 = agents.column_f64("final_s_tech")?;
    let c1 = agents.column_f64("final_s_creative")?;
    let surv = agents.column_f64("survived")?;
    let moves: Vec<_> = (0..t0.len()).map(|i| ((t0[i], c0[i]), (t1[i], c1[i]), usize::from(surv[i] == 0.0))).collect();
    Ok(arrows("Skill reconfiguration", "s_tech", "s_creative", &moves, &["survivors", "exiters"]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_series_gives_annotated_axes() {
        let svg = line_chart("t", "x", "y", &[]);
        assert!(svg.contains("warning: no data"));
        assert!(svg.starts_with("<svg"));
    }

    #[test]
    fn v_shape_is_one_polyline_through_the_trough() {
        let pts: Vec<(f64, f64)> = (0..=100).map(|t| (t as f64, (t as f64 - 50.0).abs() / 50.0 * 45.0 + 5.0)).collect();
        let svg = line_chart("v", "t", "n", &[Series { name: "active".into(), points: pts }]);
        // one data polyline plus the axes
        assert_eq!(svg.matches("<polyline").count(), 2);
        // the trough maps to the bottom of the plotting area
        assert!(svg.contains(&format!("{},{}", LEFT + 0.5 * (WIDTH - LEFT - RIGHT), HEIGHT - BOTTOM)));
    }

    #[test]
    fn output_is_deterministic_and_escaped() {
        let s = [Series { name: "a < b".into(), points: vec![(0.0, 1.0), (1.0, 2.0)] }];
        let a = line_chart("t", "x", "y", &s);
        assert_eq!(a, line_chart("t", "x", "y", &s));
        assert!(a.contains("a &lt; b"));
    }

    #[test]
    fn missing_columns_are_reported() {
        let t = Table::new("abm_series", &["t", "active_humans"]);
        assert!(population_figure(&t).is_err());
    }
}
