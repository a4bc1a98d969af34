use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::{self, Write};

use quick_xml::escape::escape;

use crate::metrics::rank_top;
use crate::network::CharGraph;
use crate::pipeline::NovelRun;
use crate::tagger::Component;

const COLORS: [&str; 6] = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"];

/// Stacked bars of the six component totals for the `top` characters with
/// the largest total score.
pub fn render_component_bars<W: Write>(run: &NovelRun, top: usize, mut out: W) -> io::Result<()> {
    let totals = run.book.totals();
    let sums: Vec<(usize, f64)> = totals.iter().map(|(&id, t)| (id, t.iter().sum::<u64>() as f64)).collect();
    let ranked = rank_top(&sums, top);
    let max = ranked.first().map_or(1.0, |r| r.1.max(1.0));
    let (bar, gap, left, plot_h, top_pad) = (36.0, 14.0, 50.0, 240.0, 30.0);
    let width = left + ranked.len() as f64 * (bar + gap) + 120.0;
    let height = top_pad + plot_h + 110.0;
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#);
    let _ = writeln!(
        s,
        r#"<text x="{left}" y="18" font-size="13" font-family="sans-serif">{}</text>"#,
        escape(format!("Component scores, top characters: {}", run.title).as_str())
    );
    let base = top_pad + plot_h;
    let _ = writeln!(s, r##"<line x1="{left}" y1="{base}" x2="{:.1}" y2="{base}" stroke="#444"/>"##, width - 110.0);
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-size="10" font-family="sans-serif" text-anchor="end">{max}</text>"#, left - 4.0, top_pad + 4.0);
    for (i, &(id, _)) in ranked.iter().enumerate() {
        let x = left + gap / 2.0 + i as f64 * (bar + gap);
        let mut y = base;
        for c in Component::ALL {
            let v = totals[&id][c.index()] as f64;
            if v == 0.0 {
                continue;
            }
            let h = plot_h * v / max;
            y -= h;
            let _ = writeln!(s, r#"<rect x="{x:.1}" y="{y:.3}" width="{bar}" height="{h:.3}" fill="{}"/>"#, COLORS[c.index()]);
        }
        let (lx, ly) = (x + bar / 2.0, base + 12.0);
        let _ = writeln!(
            s,
            r#"<text x="{lx:.1}" y="{ly:.1}" font-size="10" font-family="sans-serif" text-anchor="end" transform="rotate(-45 {lx:.1} {ly:.1})">{}</text>"#,
            escape(run.registry.name(id))
        );
    }
    let lx = width - 100.0;
    for c in Component::ALL {
        let y = top_pad + 16.0 * c.index() as f64;
        let _ = writeln!(s, r#"<rect x="{lx}" y="{y}" width="10" height="10" fill="{}"/>"#, COLORS[c.index()]);
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="10" font-family="sans-serif">{c}</text>"#, lx + 14.0, y + 9.0);
    }
    s.push_str("</svg>\n");
    out.write_all(s.as_bytes())
}

/// Circular layout of the `max_nodes` strongest characters; edge width
/// follows weight, node size follows strength.
pub fn render_network_svg<W: Write>(g: &CharGraph, max_nodes: usize, mut out: W) -> io::Result<()> {
    const SIZE: f64 = 520.0;
    const R: f64 = 200.0;
    let strength: Vec<(usize, f64)> = g.nodes.iter().map(|n| (n.char_id, g.strength(n.char_id))).collect();
    let shown = rank_top(&strength, max_nodes);
    let keep: BTreeSet<usize> = shown.iter().map(|s| s.0).collect();
    let pos = |id: usize| {
        let i = shown.iter().position(|s| s.0 == id).unwrap() as f64;
        let a = 2.0 * PI * i / shown.len().max(1) as f64 - PI / 2.0;
        (SIZE / 2.0 + R * a.cos(), SIZE / 2.0 + R * a.sin())
    };
    let max_w = g.edges.values().cloned().fold(0.0, f64::max);
    let max_s = shown.first().map_or(0.0, |s| s.1);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#);
    if g.directed {
        s.push_str(r##"<defs><marker id="arrow" viewBox="0 0 10 10" refX="10" refY="5" markerWidth="6" markerHeight="6" orient="auto"><path d="M0,0 L10,5 L0,10 z" fill="#777"/></marker></defs>"##);
        s.push('\n');
    }
    let _ = writeln!(
        s,
        r#"<text x="10" y="18" font-size="13" font-family="sans-serif">{} network ({} of {} characters)</text>"#,
        g.kind.as_str(),
        shown.len(),
        g.len()
    );
    for (&(u, v), &w) in &g.edges {
        if !keep.contains(&u) || !keep.contains(&v) {
            continue;
        }
        let ((x1, y1), (x2, y2)) = (pos(u), pos(v));
        let sw = 0.5 + 5.5 * w / max_w;
        let marker = if g.directed { r#" marker-end="url(#arrow)""# } else { "" };
        let _ = writeln!(
            s,
            r##"<line x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}" stroke="#777" stroke-opacity="0.6" stroke-width="{sw:.3}"{marker}/>"##
        );
    }
    for &(id, st) in &shown {
        let (x, y) = pos(id);
        let r = 3.0 + if max_s > 0.0 { 9.0 * (st / max_s).sqrt() } else { 0.0 };
        let _ = writeln!(s, r##"<circle cx="{x:.3}" cy="{y:.3}" r="{r:.3}" fill="#3a6ea5"/>"##);
        let name = g.node(id).map_or_else(|| id.to_string(), |n| n.name.clone());
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" font-size="10" font-family="sans-serif">{}</text>"#,
            x + r + 2.0,
            y + 3.0,
            escape(name.as_str())
        );
    }
    s.push_str("</svg>\n");
    out.write_all(s.as_bytes())
}
