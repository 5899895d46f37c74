//! Deterministic SVG in millimetre user units. Sheet y runs down in SVG, so
//! pattern coordinates are flipped to keep the grain (+V) pointing up.

use std::fmt::Write as _;

use super::Pattern;

fn n(x: f64) -> String {
    let s = format!("{x:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

pub fn export_svg(pattern: &Pattern) -> String {
    let (w, h) = (pattern.sheet_width, pattern.sheet_height);
    let y = |v: f64| h - v;
    let pt = |p: &[f64; 2]| format!("{},{}", n(p[0]), n(y(p[1])));
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}mm" height="{}mm" viewBox="0 0 {} {}">"#,
        n(w),
        n(h),
        n(w),
        n(h)
    );
    let _ = writeln!(
        s,
        r#"<rect class="sheet" x="0" y="0" width="{}" height="{}" fill="none" stroke="black" stroke-width="0.5"/>"#,
        n(w),
        n(h)
    );
    for (i, piece) in pattern.pieces.iter().enumerate() {
        let _ = writeln!(s, r#"<g class="piece" id="piece-{i}">"#);
        if !piece.outline.is_empty() {
            let mut d = String::new();
            for (k, &v) in piece.outline.iter().enumerate() {
                let p = &piece.positions[v];
                let _ = write!(d, "{}{} {} ", if k == 0 { "M" } else { "L" }, n(p[0]), n(y(p[1])));
            }
            d.push('Z');
            let _ = writeln!(s, r#"<path class="outline" d="{d}" fill="none" stroke="black" stroke-width="0.3"/>"#);
        }
        let [t, hd] = piece.grain;
        let len = hd[1] - t[1];
        let a = 0.2 * len;
        let _ = writeln!(
            s,
            r#"<g class="grain" fill="none" stroke="blue" stroke-width="0.3"><line x1="{}" y1="{}" x2="{}" y2="{}"/><polyline points="{} {} {}"/></g>"#,
            n(t[0]),
            n(y(t[1])),
            n(hd[0]),
            n(y(hd[1])),
            pt(&[hd[0] - 0.5 * a, hd[1] - a]),
            pt(&hd),
            pt(&[hd[0] + 0.5 * a, hd[1] - a]),
        );
        let _ = writeln!(s, "</g>");
    }
    for seam in &pattern.seams {
        for (piece, side) in [(seam.piece_p, &seam.p), (seam.piece_q, &seam.q)] {
            let Some(m) = midpoint(&pattern.pieces[piece].positions, side) else { continue };
            let _ = writeln!(
                s,
                r#"<text class="seam" x="{}" y="{}" font-size="4" text-anchor="middle">{}</text>"#,
                n(m[0]),
                n(y(m[1])),
                seam.id
            );
        }
    }
    for (k, dart) in pattern.darts.iter().enumerate() {
        let pos = &pattern.pieces[dart.piece].positions;
        let (Some(&a), Some(&b)) = (dart.p.last(), dart.q.last()) else { continue };
        let _ = writeln!(
            s,
            r#"<polyline class="dart" id="dart-{k}" points="{} {} {}" fill="none" stroke="red" stroke-width="0.3"/>"#,
            pt(&pos[a]),
            pt(&pos[dart.tip]),
            pt(&pos[b]),
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Point halfway along a polyline of piece vertices.
fn midpoint(positions: &[[f64; 2]], side: &[usize]) -> Option<[f64; 2]> {
    let pts: Vec<[f64; 2]> = side.iter().map(|&v| positions[v]).collect();
    let seg = |a: &[f64; 2], b: &[f64; 2]| ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    let total: f64 = pts.windows(2).map(|w| seg(&w[0], &w[1])).sum();
    let mut left = 0.5 * total;
    for w in pts.windows(2) {
        let l = seg(&w[0], &w[1]);
        if l >= left && l > 0.0 {
            let t = left / l;
            return Some([w[0][0] + t * (w[1][0] - w[0][0]), w[0][1] + t * (w[1][1] - w[0][1])]);
        }
        left -= l;
    }
    pts.first().copied()
}
