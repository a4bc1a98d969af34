use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use quick_xml::events::{BytesDecl, BytesEnd, BytesStart, BytesText, Event};
use quick_xml::{Reader, Writer};
use thiserror::Error;

use super::{CharGraph, NetworkKind, Node};
use crate::annotation::Gender;
use crate::tagger::Component;

#[derive(Debug, Error)]
pub enum GraphIoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Xml(#[from] quick_xml::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("malformed graph: {0}")]
    Malformed(String),
}

const NS: &str = "http://graphml.graphdrawing.org/xmlns";

fn node_xml_id(id: usize) -> String {
    format!("n{id}")
}

fn data<W: Write>(w: &mut Writer<W>, key: &str, value: &str) -> Result<(), GraphIoError> {
    w.create_element("data")
        .with_attribute(("key", key))
        .write_text_content(BytesText::new(value))?;
    Ok(())
}

/// Writes GraphML with nodes and edges in id order, so equal graphs give
/// identical bytes. Weights use the shortest round-trip formatting.
pub fn write_graphml<W: Write>(out: W, g: &CharGraph) -> Result<(), GraphIoError> {
    let mut w = Writer::new_with_indent(out, b' ', 2);
    w.write_event(Event::Decl(BytesDecl::new("1.0", Some("UTF-8"), None)))?;
    let mut root = BytesStart::new("graphml");
    root.push_attribute(("xmlns", NS));
    w.write_event(Event::Start(root))?;
    let mut keys: Vec<(&str, &str, &str)> = vec![
        ("char_id", "node", "long"),
        ("name", "node", "string"),
        ("gender", "node", "string"),
    ];
    keys.extend(Component::ALL.iter().map(|c| (c.as_str(), "node", "long")));
    keys.push(("weight", "edge", "double"));
    for (id, target, ty) in keys {
        w.create_element("key")
            .with_attribute(("id", id))
            .with_attribute(("for", target))
            .with_attribute(("attr.name", id))
            .with_attribute(("attr.type", ty))
            .write_empty()?;
    }
    let mut graph = BytesStart::new("graph");
    graph.push_attribute(("id", g.kind.as_str()));
    graph.push_attribute(("edgedefault", if g.directed { "directed" } else { "undirected" }));
    w.write_event(Event::Start(graph))?;
    for n in &g.nodes {
        let mut el = BytesStart::new("node");
        el.push_attribute(("id", node_xml_id(n.char_id).as_str()));
        w.write_event(Event::Start(el))?;
        data(&mut w, "char_id", &n.char_id.to_string())?;
        data(&mut w, "name", &n.name)?;
        data(&mut w, "gender", n.gender.as_str())?;
        for c in Component::ALL {
            data(&mut w, c.as_str(), &n.components[c.index()].to_string())?;
        }
        w.write_event(Event::End(BytesEnd::new("node")))?;
    }
    for (&(u, v), &weight) in &g.edges {
        let mut el = BytesStart::new("edge");
        el.push_attribute(("source", node_xml_id(u).as_str()));
        el.push_attribute(("target", node_xml_id(v).as_str()));
        w.write_event(Event::Start(el))?;
        data(&mut w, "weight", &format!("{weight:?}"))?;
        w.write_event(Event::End(BytesEnd::new("edge")))?;
    }
    w.write_event(Event::End(BytesEnd::new("graph")))?;
    w.write_event(Event::End(BytesEnd::new("graphml")))?;
    w.get_mut().write_all(b"\n")?;
    Ok(())
}

fn attr(e: &BytesStart, name: &[u8]) -> Result<Option<String>, GraphIoError> {
    for a in e.attributes() {
        let a = a.map_err(|err| GraphIoError::Malformed(err.to_string()))?;
        if a.key.as_ref() == name {
            return Ok(Some(a.unescape_value()?.into_owned()));
        }
    }
    Ok(None)
}

/// Reads GraphML written by [`write_graphml`].
pub fn read_graphml<R: BufRead>(input: R) -> Result<CharGraph, GraphIoError> {
    let mut reader = Reader::from_reader(input);
    reader.trim_text(true);
    let mut buf = Vec::new();
    let mut kind = None;
    let mut directed = false;
    let mut nodes: Vec<BTreeMap<String, String>> = Vec::new();
    let mut edges: Vec<(String, String, BTreeMap<String, String>)> = Vec::new();
    let mut in_node = false;
    let mut in_edge = false;
    let mut key: Option<String> = None;
    loop {
        let event = reader.read_event_into(&mut buf)?;
        let empty = matches!(event, Event::Empty(_));
        match event {
            Event::Start(e) | Event::Empty(e) => match e.name().as_ref() {
                b"graph" => {
                    kind = attr(&e, b"id")?.as_deref().and_then(NetworkKind::parse);
                    directed = attr(&e, b"edgedefault")?.as_deref() == Some("directed");
                }
                b"node" => {
                    in_node = !empty;
                    let mut m = BTreeMap::new();
                    m.insert("@id".to_string(), attr(&e, b"id")?.unwrap_or_default());
                    nodes.push(m);
                }
                b"edge" => {
                    in_edge = !empty;
                    let s = attr(&e, b"source")?.ok_or_else(|| GraphIoError::Malformed("edge without source".into()))?;
                    let t = attr(&e, b"target")?.ok_or_else(|| GraphIoError::Malformed("edge without target".into()))?;
                    edges.push((s, t, BTreeMap::new()));
                }
                b"data" => key = attr(&e, b"key")?,
                _ => {}
            },
            Event::Text(t) => {
                if let Some(k) = key.take() {
                    let value = t.unescape()?.into_owned();
                    if in_edge {
                        edges.last_mut().unwrap().2.insert(k, value);
                    } else if in_node {
                        nodes.last_mut().unwrap().insert(k, value);
                    }
                }
            }
            Event::End(e) => match e.name().as_ref() {
                b"node" => in_node = false,
                b"edge" => in_edge = false,
                b"data" => key = None,
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    let kind = kind.unwrap_or(if directed {
        NetworkKind::Discussion
    } else {
        NetworkKind::Cooccurrence
    });
    let mut xml_to_id = BTreeMap::new();
    let mut out_nodes = Vec::new();
    for (i, m) in nodes.iter().enumerate() {
        let char_id = match m.get("char_id") {
            Some(s) => s.parse().map_err(|_| GraphIoError::Malformed(format!("bad char_id `{s}`")))?,
            None => i,
        };
        xml_to_id.insert(m["@id"].clone(), char_id);
        let mut components = [0u64; 6];
        for c in Component::ALL {
            if let Some(s) = m.get(c.as_str()) {
                components[c.index()] = s.parse().map_err(|_| GraphIoError::Malformed(format!("bad count `{s}`")))?;
            }
        }
        out_nodes.push(Node {
            char_id,
            name: m.get("name").cloned().unwrap_or_else(|| m["@id"].clone()),
            gender: m.get("gender").and_then(|s| Gender::parse(s)).unwrap_or(Gender::Unknown),
            components,
        });
    }
    let mut g = CharGraph::new(kind, out_nodes);
    g.directed = directed;
    for (s, t, m) in edges {
        let lookup = |x: &str| {
            xml_to_id
                .get(x)
                .copied()
                .ok_or_else(|| GraphIoError::Malformed(format!("edge endpoint `{x}` is not a node")))
        };
        let w: f64 = match m.get("weight") {
            Some(s) => s.parse().map_err(|_| GraphIoError::Malformed(format!("bad weight `{s}`")))?,
            None => 1.0,
        };
        g.add_weight(lookup(&s)?, lookup(&t)?, w);
    }
    Ok(g)
}

/// Square weight matrix with character names as header and first column.
pub fn write_adjacency_csv<W: Write>(out: W, g: &CharGraph) -> Result<(), GraphIoError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![String::new()];
    header.extend(g.nodes.iter().map(|n| n.name.clone()));
    w.write_record(&header)?;
    for (n, row) in g.nodes.iter().zip(g.matrix()) {
        let mut rec = vec![n.name.clone()];
        rec.extend(row.iter().map(|x| format!("{x:?}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
