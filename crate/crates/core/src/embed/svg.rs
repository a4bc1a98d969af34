use std::fmt::Write as _;
use std::io::Write;

use quick_xml::escape::escape;

use super::{EmbedError, Embedding};
use crate::metrics::rank_top;
use crate::network::CharGraph;

const SIZE: f64 = 500.0;
const RADIUS: f64 = 230.0;

/// Draws the unit disk with one dot per character, sized by strength, and
/// labels the `labels` strongest characters.
pub fn render_disk_svg<W: Write>(emb: &Embedding, g: &CharGraph, labels: usize, mut out: W) -> Result<(), EmbedError> {
    if emb.points.iter().any(|p| p.len() != 2) {
        return Err(EmbedError::Render("embedding must be two-dimensional".into()));
    }
    let strength: Vec<(usize, f64)> = emb.char_ids.iter().map(|&id| (id, g.strength(id))).collect();
    let max = strength.iter().map(|s| s.1).fold(0.0, f64::max);
    let labelled: Vec<usize> = rank_top(&strength, labels).into_iter().map(|s| s.0).collect();
    let c = SIZE / 2.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(s, r##"<circle cx="{c}" cy="{c}" r="{RADIUS}" fill="none" stroke="#444" stroke-width="1"/>"##);
    let mut text = String::new();
    for (i, (&id, p)) in emb.char_ids.iter().zip(&emb.points).enumerate() {
        let x = c + RADIUS * p[0];
        let y = c - RADIUS * p[1];
        let w = strength[i].1;
        let r = 2.5 + if max > 0.0 { 7.5 * (w / max).sqrt() } else { 0.0 };
        let _ = writeln!(s, r##"<circle cx="{x:.3}" cy="{y:.3}" r="{r:.3}" fill="#3a6ea5" fill-opacity="0.8"/>"##);
        if labelled.contains(&id) {
            let name = g.node(id).map_or_else(|| id.to_string(), |n| n.name.clone());
            let _ = writeln!(
                text,
                r#"<text x="{:.3}" y="{:.3}" font-size="11" font-family="sans-serif">{}</text>"#,
                x + r + 2.0,
                y + 4.0,
                escape(name.as_str())
            );
        }
    }
    s.push_str(&text);
    s.push_str("</svg>\n");
    out.write_all(s.as_bytes())?;
    Ok(())
}
