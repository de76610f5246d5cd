//! Minimal standalone SVG scenes.
//!
//! Curves span several orders of magnitude in aspect (`x1 ~ eps^mbar`,
//! `x2 ~ eps`), so the horizontal coordinate is drawn as
//! `x1 * eps^(1 - mbar)`; the legend states this.

use mlab_core::PlanarPoint;
use std::fmt::Write as _;
use std::path::Path;

use crate::Failure;

#[derive(Debug, Clone)]
pub struct SceneCurve {
    pub label: String,
    pub points: Vec<PlanarPoint>,
    pub stroke: String,
    pub width: f64,
    pub dashed: bool,
    /// Extra class attribute, e.g. `"loop"` for highlighted loops.
    pub class: Option<String>,
}

impl SceneCurve {
    pub fn new(label: impl Into<String>, points: Vec<PlanarPoint>, stroke: &str) -> Self {
        Self {
            label: label.into(),
            points,
            stroke: stroke.into(),
            width: 1.5,
            dashed: false,
            class: None,
        }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }

    pub fn with_class(mut self, class: &str) -> Self {
        self.class = Some(class.into());
        self
    }

    pub fn with_width(mut self, w: f64) -> Self {
        self.width = w;
        self
    }
}

/// Axis tick: value in the original coordinate and its label.
#[derive(Debug, Clone)]
pub struct Tick {
    pub value: f64,
    pub label: String,
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub title: String,
    pub epsilon: f64,
    pub mbar: f64,
    pub curves: Vec<SceneCurve>,
    pub x1_ticks: Vec<Tick>,
    pub x2_ticks: Vec<Tick>,
}

impl Scene {
    pub fn new(title: impl Into<String>, epsilon: f64, mbar: f64) -> Self {
        Self {
            title: title.into(),
            epsilon,
            mbar,
            curves: Vec::new(),
            x1_ticks: Vec::new(),
            x2_ticks: Vec::new(),
        }
    }

    pub fn x1_tick(&mut self, value: f64, label: &str) {
        self.x1_ticks.push(Tick {
            value,
            label: label.into(),
        });
    }

    pub fn x2_tick(&mut self, value: f64, label: &str) {
        self.x2_ticks.push(Tick {
            value,
            label: label.into(),
        });
    }

    fn magnification(&self) -> f64 {
        self.epsilon.powf(1.0 - self.mbar)
    }
}

const W: f64 = 720.0;
const H: f64 = 540.0;
const MARGIN: f64 = 60.0;
const LEGEND: f64 = 200.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the scene as an SVG document.
pub fn render(scene: &Scene) -> Result<String, Failure> {
    if scene.curves.iter().all(|c| c.points.is_empty()) {
        return Err(Failure::config("plot scene has no curves"));
    }
    let mag = scene.magnification();
    let pts = scene.curves.iter().flat_map(|c| c.points.iter());
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for p in pts.filter(|p| p.is_finite()) {
        xmin = xmin.min(p.x1 * mag);
        xmax = xmax.max(p.x1 * mag);
        ymin = ymin.min(p.x2);
        ymax = ymax.max(p.x2);
    }
    let pad = 0.05 * (xmax - xmin).max(ymax - ymin).max(f64::MIN_POSITIVE);
    let (xmin, xmax, ymin, ymax) = (xmin - pad, xmax + pad, ymin - pad, ymax + pad);
    let plot_w = W - 2.0 * MARGIN - LEGEND;
    let plot_h = H - 2.0 * MARGIN;
    let scale = (plot_w / (xmax - xmin)).min(plot_h / (ymax - ymin));
    let sx = |x1: f64| MARGIN + (x1 * mag - xmin) * scale;
    let sy = |x2: f64| H - MARGIN - (x2 - ymin) * scale;

    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(w, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(w, r#"<text x="{MARGIN}" y="24" font-size="14">{}</text>"#, escape(&scene.title));

    // Axes through the origin.
    let (ox, oy) = (sx(0.0), sy(0.0));
    let _ = writeln!(
        w,
        r##"<g stroke="#888" stroke-width="0.8"><line x1="{:.2}" y1="{oy:.2}" x2="{:.2}" y2="{oy:.2}"/><line x1="{ox:.2}" y1="{:.2}" x2="{ox:.2}" y2="{:.2}"/></g>"##,
        MARGIN,
        W - MARGIN - LEGEND,
        H - MARGIN,
        MARGIN
    );
    let _ = writeln!(w, r#"<text x="{:.2}" y="{:.2}">x1</text>"#, W - MARGIN - LEGEND + 4.0, oy + 4.0);
    let _ = writeln!(w, r#"<text x="{:.2}" y="{:.2}">x2</text>"#, ox - 6.0, MARGIN - 8.0);
    for t in &scene.x1_ticks {
        let x = sx(t.value);
        let _ = writeln!(
            w,
            r##"<g class="tick-x1"><line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#888"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text></g>"##,
            oy - 4.0,
            oy + 4.0,
            oy + 18.0,
            escape(&t.label)
        );
    }
    for t in &scene.x2_ticks {
        let y = sy(t.value);
        let _ = writeln!(
            w,
            r##"<g class="tick-x2"><line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#888"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text></g>"##,
            ox - 4.0,
            ox + 4.0,
            ox - 8.0,
            y + 4.0,
            escape(&t.label)
        );
    }

    for c in &scene.curves {
        if c.points.is_empty() {
            continue;
        }
        let mut d = String::new();
        for (i, p) in c.points.iter().filter(|p| p.is_finite()).enumerate() {
            let _ = write!(d, "{}{:.2},{:.2}", if i == 0 { "M" } else { " L" }, sx(p.x1), sy(p.x2));
        }
        let class = c.class.as_deref().map(|k| format!(r#" class="{k}""#)).unwrap_or_default();
        let dash = if c.dashed { r#" stroke-dasharray="5,4""# } else { "" };
        let _ = writeln!(
            w,
            r#"<path{class} d="{d}" fill="none" stroke="{}" stroke-width="{}"{dash}><title>{}</title></path>"#,
            c.stroke,
            c.width,
            escape(&c.label)
        );
    }

    // Legend.
    let lx = W - LEGEND - MARGIN + 30.0;
    let mut ly = MARGIN;
    let mut seen = Vec::new();
    for c in &scene.curves {
        if seen.contains(&c.label) {
            continue;
        }
        seen.push(c.label.clone());
        let dash = if c.dashed { r#" stroke-dasharray="5,4""# } else { "" };
        let _ = writeln!(
            w,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}" stroke-width="{}"{dash}/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 24.0,
            c.stroke,
            c.width,
            lx + 30.0,
            ly + 4.0,
            escape(&c.label)
        );
        ly += 18.0;
    }
    let _ = writeln!(
        w,
        r#"<text class="scaling" x="{lx:.2}" y="{:.2}">x1 drawn magnified by eps^(1-m/2)</text>"#,
        ly + 10.0
    );
    let _ = writeln!(
        w,
        r#"<text x="{lx:.2}" y="{:.2}">eps = {}, m/2 = {}</text>"#,
        ly + 28.0,
        scene.epsilon,
        scene.mbar
    );
    let _ = writeln!(w, "</svg>");
    Ok(out)
}

pub fn plot_scene(scene: &Scene, path: &Path) -> Result<(), Failure> {
    let svg = render(scene)?;
    std::fs::write(path, svg).map_err(|e| Failure::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_scene_is_rejected() {
        assert!(render(&Scene::new("empty", 0.1, 2.5)).is_err());
    }

    #[test]
    fn curve_is_drawn_with_ticks_and_scaling_note() {
        let mut s = Scene::new("arc", 0.1, 2.5);
        let pts = (0..=10)
            .map(|i| {
                let t = 0.01 * f64::from(i);
                PlanarPoint::new(t.powf(2.5), t)
            })
            .collect();
        s.curves.push(SceneCurve::new("candidate", pts, "black"));
        s.x1_tick(0.1f64.powf(2.5), "eps^(m/2)");
        s.x2_tick(0.1, "eps");
        let svg = render(&s).unwrap();
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<path").count(), 1);
        assert_eq!(svg.matches(r#"class="tick-x1""#).count(), 1);
        assert!(svg.contains("magnified"));
    }

    #[test]
    fn labels_are_escaped() {
        let mut s = Scene::new("a < b & c", 0.1, 2.5);
        s.curves.push(SceneCurve::new("x", vec![PlanarPoint::new(0.0, 0.0), PlanarPoint::new(1e-3, 0.1)], "red"));
        let svg = render(&s).unwrap();
        assert!(svg.contains("a &lt; b &amp; c"));
    }
}
