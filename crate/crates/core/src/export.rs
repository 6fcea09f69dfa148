//! SVG cutting patterns (single strips and multi-strip kit pages), strain
//! heatmaps, and CSV strain dumps. All outputs are byte-deterministic:
//! numbers are printed with fixed six decimals and "-0.000000" normalized.

use crate::bspline::BSplineManifold2D;
use crate::error::{Error, Result};
use crate::solver::StrainField;
use nalgebra::Vector2;

/// One cubic Bezier segment in model units.
#[derive(Copy, Clone, Debug)]
pub struct CubicBezier {
    pub p: [Vector2<f64>; 4],
}

impl CubicBezier {
    pub fn point(&self, t: f64) -> Vector2<f64> {
        let s = 1.0 - t;
        self.p[0] * (s * s * s)
            + self.p[1] * (3.0 * s * s * t)
            + self.p[2] * (3.0 * s * t * t)
            + self.p[3] * (t * t * t)
    }
}

/// Closed boundary of a manifold as cubic Bezier segments: bottom edge,
/// right edge, top edge (reversed), left edge (reversed). Requires degrees
/// 1..=3 in both directions.
pub fn boundary_beziers(m: &BSplineManifold2D) -> Result<Vec<CubicBezier>> {
    let (p1, p2) = m.degrees();
    if p1 == 0 || p1 > 3 || p2 == 0 || p2 > 3 {
        return Err(Error::UnsupportedDegree(p1, p2));
    }
    let (n1, n2) = (m.n1(), m.n2());
    let row = |i2: usize| -> Vec<Vector2<f64>> { (0..n1).map(|i1| m.control_at(i1, i2)).collect() };
    let col = |i1: usize| -> Vec<Vector2<f64>> { (0..n2).map(|i2| m.control_at(i1, i2)).collect() };

    let mut path: Vec<CubicBezier> = Vec::new();
    let mut push = |segs: Vec<[Vector2<f64>; 4]>, reverse: bool| {
        if reverse {
            for s in segs.into_iter().rev() {
                path.push(CubicBezier {
                    p: [s[3], s[2], s[1], s[0]],
                });
            }
        } else {
            for s in segs {
                path.push(CubicBezier { p: s });
            }
        }
    };
    push(
        crate::bspline::cubic_bezier_segments(m.space1(), &row(0))?,
        false,
    );
    push(
        crate::bspline::cubic_bezier_segments(m.space2(), &col(n1 - 1))?,
        false,
    );
    push(
        crate::bspline::cubic_bezier_segments(m.space1(), &row(n2 - 1))?,
        true,
    );
    push(
        crate::bspline::cubic_bezier_segments(m.space2(), &col(0))?,
        true,
    );
    Ok(path)
}

/// Axis-aligned bounding box of the boundary, from the Bezier control
/// hulls (contains the curve).
pub fn boundary_bbox(path: &[CubicBezier]) -> (Vector2<f64>, Vector2<f64>) {
    let mut lo = Vector2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vector2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for seg in path {
        for p in &seg.p {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
    }
    (lo, hi)
}

/// Fixed-point millimeter formatting: six decimals, no exponent, -0
/// normalized.
pub fn fmt_mm(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

#[derive(Copy, Clone, Debug)]
pub struct SvgStyle {
    /// Millimeters per model unit.
    pub scale: f64,
    pub stroke_mm: f64,
    pub margin_mm: f64,
}

impl Default for SvgStyle {
    fn default() -> Self {
        SvgStyle {
            scale: 40.0,
            stroke_mm: 0.2,
            margin_mm: 5.0,
        }
    }
}

/// Maps model coordinates to page millimeters, flipping y so the model's
/// +y points up on the page.
struct PageMap {
    scale: f64,
    origin: Vector2<f64>,
    y_top: f64,
}

impl PageMap {
    fn to_page(&self, p: Vector2<f64>) -> Vector2<f64> {
        Vector2::new(
            (p.x - self.origin.x) * self.scale,
            (self.y_top - p.y) * self.scale,
        )
    }
}

fn path_data(path: &[CubicBezier], map: &PageMap, offset: Vector2<f64>) -> String {
    let mut d = String::new();
    let start = map.to_page(path[0].p[0]) + offset;
    d.push_str(&format!("M {},{}", fmt_mm(start.x), fmt_mm(start.y)));
    for seg in path {
        let c1 = map.to_page(seg.p[1]) + offset;
        let c2 = map.to_page(seg.p[2]) + offset;
        let p3 = map.to_page(seg.p[3]) + offset;
        d.push_str(&format!(
            " C {},{} {},{} {},{}",
            fmt_mm(c1.x),
            fmt_mm(c1.y),
            fmt_mm(c2.x),
            fmt_mm(c2.y),
            fmt_mm(p3.x),
            fmt_mm(p3.y)
        ));
    }
    d.push_str(" Z");
    d
}

fn svg_document(width_mm: f64, height_mm: f64, body: &str) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}mm\" height=\"{h}mm\" viewBox=\"0 0 {w} {h}\">\n{body}</svg>\n",
        w = fmt_mm(width_mm),
        h = fmt_mm(height_mm),
        body = body
    )
}

/// One strip as a standalone SVG cutting pattern.
pub fn export_strip_svg(m: &BSplineManifold2D, style: &SvgStyle) -> Result<String> {
    let path = boundary_beziers(m)?;
    let (lo, hi) = boundary_bbox(&path);
    let map = PageMap {
        scale: style.scale,
        origin: lo,
        y_top: hi.y,
    };
    let off = Vector2::new(style.margin_mm, style.margin_mm);
    let d = path_data(&path, &map, off);
    let w = (hi.x - lo.x) * style.scale + 2.0 * style.margin_mm;
    let h = (hi.y - lo.y) * style.scale + 2.0 * style.margin_mm;
    let body = format!(
        "<path d=\"{d}\" fill=\"none\" stroke=\"black\" stroke-width=\"{sw}\"/>\n",
        sw = fmt_mm(style.stroke_mm)
    );
    Ok(svg_document(w, h, &body))
}

/// Kit page geometry; A4 portrait with a 10 mm margin by default.
#[derive(Clone, Debug)]
pub struct KitLayout {
    pub page_width_mm: f64,
    pub page_height_mm: f64,
    pub margin_mm: f64,
    /// Millimeters per model unit.
    pub scale: f64,
    pub stroke_mm: f64,
    /// Gap between placed strips.
    pub gap_mm: f64,
    pub labels: bool,
    pub label_font_mm: f64,
}

impl Default for KitLayout {
    fn default() -> Self {
        KitLayout {
            page_width_mm: 210.0,
            page_height_mm: 297.0,
            margin_mm: 10.0,
            scale: 40.0,
            stroke_mm: 0.2,
            gap_mm: 5.0,
            labels: true,
            label_font_mm: 4.0,
        }
    }
}

/// Placement of one strip on a kit page (translation only).
#[derive(Clone, Debug)]
pub struct KitPlacement {
    pub strip_index: usize,
    pub page: usize,
    /// Top-left of the strip's bounding box, page mm.
    pub offset: Vector2<f64>,
    pub size: Vector2<f64>,
}

/// Shelf-packs the strips (in the given order) onto pages; returns the SVG
/// documents. Strips are laid left to right in rows; a full row drops down
/// by the row height, a full page starts a new document.
pub fn export_kit(
    strips: &[(usize, &BSplineManifold2D)],
    layout: &KitLayout,
) -> Result<(Vec<String>, Vec<KitPlacement>)> {
    let usable_w = layout.page_width_mm - 2.0 * layout.margin_mm;
    let usable_h = layout.page_height_mm - 2.0 * layout.margin_mm;
    let mut pages: Vec<String> = Vec::new();
    let mut placements = Vec::new();
    let mut body = String::new();
    let mut cursor = Vector2::new(0.0, 0.0);
    let mut row_h = 0.0f64;
    let mut page = 0usize;

    for &(index, m) in strips {
        let path = boundary_beziers(m)?;
        let (lo, hi) = boundary_bbox(&path);
        let size = Vector2::new(
            (hi.x - lo.x) * layout.scale,
            (hi.y - lo.y) * layout.scale,
        );
        if size.x > usable_w || size.y > usable_h {
            return Err(Error::StripTooLarge {
                index,
                width: usable_w,
                height: usable_h,
            });
        }
        if cursor.x + size.x > usable_w + 1e-9 {
            cursor.x = 0.0;
            cursor.y += row_h + layout.gap_mm;
            row_h = 0.0;
        }
        if cursor.y + size.y > usable_h + 1e-9 {
            pages.push(svg_document(layout.page_width_mm, layout.page_height_mm, &body));
            body = String::new();
            cursor = Vector2::new(0.0, 0.0);
            row_h = 0.0;
            page += 1;
        }
        let off = Vector2::new(layout.margin_mm + cursor.x, layout.margin_mm + cursor.y);
        let map = PageMap {
            scale: layout.scale,
            origin: lo,
            y_top: hi.y,
        };
        body.push_str(&format!(
            "<path d=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"{}\"/>\n",
            path_data(&path, &map, off),
            fmt_mm(layout.stroke_mm)
        ));
        if layout.labels {
            body.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-size=\"{}\" font-family=\"sans-serif\">{}</text>\n",
                fmt_mm(off.x + 1.0),
                fmt_mm(off.y + layout.label_font_mm),
                fmt_mm(layout.label_font_mm),
                index
            ));
        }
        placements.push(KitPlacement {
            strip_index: index,
            page,
            offset: off,
            size,
        });
        cursor.x += size.x + layout.gap_mm;
        row_h = row_h.max(size.y);
    }
    pages.push(svg_document(layout.page_width_mm, layout.page_height_mm, &body));
    Ok((pages, placements))
}

/// CSV dump of a strain field: header plus one row per sample, LF endings.
pub fn export_strain_csv(field: &StrainField) -> Result<String> {
    if field.samples.is_empty() {
        return Err(Error::EmptyField);
    }
    let mut out = String::from("u1,u2,x,y,E11o,E22o,E12o,density\n");
    for s in &field.samples {
        out.push_str(&format!(
            "{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e}\n",
            s.u1, s.u2, s.x, s.y, s.e11, s.e22, s.e12, s.density
        ));
    }
    Ok(out)
}

/// Symmetric diverging palette centered at zero (blue - white - red),
/// t clamped to [-1, 1].
pub fn diverging_color(t: f64) -> (u8, u8, u8) {
    let t = t.clamp(-1.0, 1.0);
    let lerp = |a: f64, b: f64, s: f64| a + (b - a) * s;
    let (lo, hi): ((f64, f64, f64), (f64, f64, f64)) = if t < 0.0 {
        ((255.0, 255.0, 255.0), (59.0, 76.0, 192.0))
    } else {
        ((255.0, 255.0, 255.0), (180.0, 4.0, 38.0))
    };
    let s = t.abs();
    (
        lerp(lo.0, hi.0, s).round() as u8,
        lerp(lo.1, hi.1, s).round() as u8,
        lerp(lo.2, hi.2, s).round() as u8,
    )
}

/// Heatmap of E11 over the embedded strip: one filled quad per sample
/// (cell edges at parameter midpoints), palette limits +-max|E11|, plus
/// the boundary outline.
pub fn export_strain_heatmap(
    m: &BSplineManifold2D,
    field: &StrainField,
    style: &SvgStyle,
) -> Result<String> {
    if field.samples.is_empty() || field.n1 < 2 || field.n2 < 2 {
        return Err(Error::EmptyField);
    }
    let path = boundary_beziers(m)?;
    let (lo, hi) = boundary_bbox(&path);
    let map = PageMap {
        scale: style.scale,
        origin: lo,
        y_top: hi.y,
    };
    let off = Vector2::new(style.margin_mm, style.margin_mm);
    let max_abs = field.max_abs_e11();
    let mut body = String::new();

    let u1s: Vec<f64> = (0..field.n1).map(|i| field.samples[i * field.n2].u1).collect();
    let u2s: Vec<f64> = (0..field.n2).map(|k| field.samples[k].u2).collect();
    let edges = |vals: &[f64]| -> Vec<f64> {
        let mut e = Vec::with_capacity(vals.len() + 1);
        e.push(vals[0]);
        for w in vals.windows(2) {
            e.push(0.5 * (w[0] + w[1]));
        }
        e.push(*vals.last().unwrap());
        e
    };
    let e1 = edges(&u1s);
    let e2 = edges(&u2s);

    for i in 0..field.n1 {
        for k in 0..field.n2 {
            let s = &field.samples[i * field.n2 + k];
            let t = if max_abs > 0.0 { s.e11 / max_abs } else { 0.0 };
            let (r, g, b) = diverging_color(t);
            let corners = [
                m.evaluate(e1[i], e2[k])?,
                m.evaluate(e1[i + 1], e2[k])?,
                m.evaluate(e1[i + 1], e2[k + 1])?,
                m.evaluate(e1[i], e2[k + 1])?,
            ];
            let pts: Vec<String> = corners
                .iter()
                .map(|&p| {
                    let q = map.to_page(p) + off;
                    format!("{},{}", fmt_mm(q.x), fmt_mm(q.y))
                })
                .collect();
            body.push_str(&format!(
                "<polygon points=\"{}\" fill=\"rgb({r},{g},{b})\" stroke=\"none\"/>\n",
                pts.join(" ")
            ));
        }
    }
    body.push_str(&format!(
        "<path d=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"{}\"/>\n",
        path_data(&path, &map, off),
        fmt_mm(style.stroke_mm)
    ));
    let w = (hi.x - lo.x) * style.scale + 2.0 * style.margin_mm;
    let h = (hi.y - lo.y) * style.scale + 2.0 * style.margin_mm;
    Ok(svg_document(w, h, &body))
}
