//! Reader for the TNTP text format (network and trip-table files).

use std::collections::BTreeMap;

use super::{Network, NodeId};
use crate::error::{Error, Result};

/// Base demand keyed by internal (0-based) origin and destination.
pub type DemandTable = BTreeMap<(NodeId, NodeId), f64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TntpOptions {
    /// Multiplier applied to the free-flow time column when a link has no
    /// positive speed. TNTP files usually store minutes, so 1/60 yields hours.
    pub free_flow_time_scale: f64,
}

impl Default for TntpOptions {
    fn default() -> Self {
        TntpOptions { free_flow_time_scale: 1.0 }
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn strip_comment(line: &str) -> &str {
    match line.find('~') {
        Some(i) => &line[..i],
        None => line,
    }
}

/// Splits `<KEY> value` metadata lines up to `<END OF METADATA>`. Returns the
/// metadata and the 0-based index of the first body line.
fn read_metadata(lines: &[&str]) -> Result<(BTreeMap<String, String>, usize)> {
    let mut meta = BTreeMap::new();
    for (i, raw) in lines.iter().enumerate() {
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if !line.starts_with('<') {
            return Err(parse_err(i + 1, format!("expected metadata tag, found {line:?}")));
        }
        let close = line.find('>').ok_or_else(|| parse_err(i + 1, "unterminated metadata tag"))?;
        let key = line[1..close].trim().to_ascii_uppercase();
        if key == "END OF METADATA" {
            return Ok((meta, i + 1));
        }
        meta.insert(key, line[close + 1..].trim().to_string());
    }
    Err(parse_err(lines.len(), "missing <END OF METADATA>"))
}

fn meta_usize(meta: &BTreeMap<String, String>, key: &str, line: usize) -> Result<usize> {
    let raw = meta.get(key).ok_or_else(|| parse_err(line, format!("missing <{key}>")))?;
    raw.parse().map_err(|_| parse_err(line, format!("<{key}> is not an integer: {raw:?}")))
}

fn field(tokens: &[&str], idx: usize, name: &str, line: usize) -> Result<f64> {
    let raw = tokens.get(idx).ok_or_else(|| parse_err(line, format!("missing {name}")))?;
    raw.parse().map_err(|_| parse_err(line, format!("{name} is not a number: {raw:?}")))
}

fn node_label(tokens: &[&str], idx: usize, name: &str, line: usize, count: usize) -> Result<NodeId> {
    let raw = tokens.get(idx).ok_or_else(|| parse_err(line, format!("missing {name}")))?;
    let label: usize = raw
        .parse()
        .map_err(|_| parse_err(line, format!("{name} is not a node id: {raw:?}")))?;
    if label == 0 || label > count {
        return Err(parse_err(line, format!("{name} {label} outside 1..={count}")));
    }
    Ok(label - 1)
}

fn parse_network(text: &str, opts: &TntpOptions) -> Result<Network> {
    let lines: Vec<&str> = text.lines().collect();
    let (meta, body) = read_metadata(&lines)?;
    let nodes = meta_usize(&meta, "NUMBER OF NODES", body)?;
    let links = meta_usize(&meta, "NUMBER OF LINKS", body)?;
    let mut edges = Vec::with_capacity(links);
    for (i, raw) in lines.iter().enumerate().skip(body) {
        let line_no = i + 1;
        let line = strip_comment(raw).trim().trim_end_matches(';').trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let tail = node_label(&tokens, 0, "init node", line_no, nodes)?;
        let head = node_label(&tokens, 1, "term node", line_no, nodes)?;
        let capacity = field(&tokens, 2, "capacity", line_no)?;
        let length = field(&tokens, 3, "length", line_no)?;
        let free_flow = field(&tokens, 4, "free-flow time", line_no)?;
        let speed = if tokens.len() > 7 { field(&tokens, 7, "speed", line_no)? } else { 0.0 };
        if capacity < 0.0 {
            return Err(parse_err(line_no, format!("negative capacity {capacity}")));
        }
        if capacity == 0.0 {
            return Err(parse_err(line_no, "zero capacity"));
        }
        let latency = if speed > 0.0 { length / speed } else { free_flow * opts.free_flow_time_scale };
        if latency < 0.0 {
            return Err(parse_err(line_no, format!("negative travel time {latency}")));
        }
        edges.push((tail, head, latency, capacity));
    }
    if edges.len() != links {
        return Err(parse_err(
            lines.len(),
            format!("<NUMBER OF LINKS> is {links} but {} records found", edges.len()),
        ));
    }
    Ok(Network::from_edges(nodes, edges)?.with_node_offset(1))
}

fn parse_trips(text: &str, zones_limit: usize) -> Result<DemandTable> {
    let lines: Vec<&str> = text.lines().collect();
    let (meta, body) = read_metadata(&lines)?;
    let zones = match meta.get("NUMBER OF ZONES") {
        Some(_) => meta_usize(&meta, "NUMBER OF ZONES", body)?.min(zones_limit),
        None => zones_limit,
    };
    let mut table = DemandTable::new();
    let mut origin: Option<NodeId> = None;
    for (i, raw) in lines.iter().enumerate().skip(body) {
        let line_no = i + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("Origin") {
            let tokens: Vec<&str> = rest.split_whitespace().collect();
            origin = Some(node_label(&tokens, 0, "origin", line_no, zones)?);
            continue;
        }
        let o = origin.ok_or_else(|| parse_err(line_no, "demand entry before any Origin block"))?;
        for entry in line.split(';') {
            let entry = entry.trim();
            if entry.is_empty() {
                continue;
            }
            let (dest, value) = entry
                .split_once(':')
                .ok_or_else(|| parse_err(line_no, format!("expected `dest : demand`, found {entry:?}")))?;
            let d = node_label(&[dest.trim()], 0, "destination", line_no, zones)?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| parse_err(line_no, format!("demand is not a number: {value:?}")))?;
            if value < 0.0 {
                return Err(parse_err(line_no, format!("negative demand {value}")));
            }
            if value > 0.0 && o != d {
                *table.entry((o, d)).or_insert(0.0) += value;
            }
        }
    }
    Ok(table)
}

/// Parses a TNTP network and trip table. Latency is length/speed when the
/// speed column is positive and the free-flow time otherwise.
pub fn load_tntp(net_text: &str, trips_text: &str) -> Result<(Network, DemandTable)> {
    load_tntp_with(net_text, trips_text, &TntpOptions::default())
}

pub fn load_tntp_with(net_text: &str, trips_text: &str, opts: &TntpOptions) -> Result<(Network, DemandTable)> {
    let net = parse_network(net_text, opts)?;
    let demand = parse_trips(trips_text, net.node_count())?;
    Ok((net, demand))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY_NET: &str = "<NUMBER OF ZONES> 2\n<NUMBER OF NODES> 2\n<NUMBER OF LINKS> 1\n<END OF METADATA>\n\
~ init term cap len fft b p speed toll type ;\n\t1\t2\t100\t10\t3\t0.15\t4\t40\t0\t1\t;\n";

    #[test]
    fn length_over_speed() {
        let (net, demand) = load_tntp(TINY_NET, "<NUMBER OF ZONES> 2\n<END OF METADATA>\nOrigin 1\n").unwrap();
        assert_eq!(net.edge_count(), 1);
        assert_eq!(net.edge(0).latency, 0.25);
        assert_eq!(net.node_offset(), 1);
        assert!(demand.is_empty());
    }

    #[test]
    fn free_flow_fallback_and_demand() {
        let net_text = TINY_NET.replace("\t40\t", "\t0\t");
        let trips = "<NUMBER OF ZONES> 2\n<END OF METADATA>\nOrigin 1\n 1 : 0.0; 2 : 7.5;\nOrigin 2\n 1 : 2;\n";
        let opts = TntpOptions { free_flow_time_scale: 0.5 };
        let (net, demand) = load_tntp_with(&net_text, trips, &opts).unwrap();
        assert_eq!(net.edge(0).latency, 1.5);
        assert_eq!(demand.len(), 2);
        assert_eq!(demand[&(0, 1)], 7.5);
        assert_eq!(demand[&(1, 0)], 2.0);
    }

    #[test]
    fn errors_name_line() {
        let bad = TINY_NET.replace("\t1\t2\t100", "\t1\t3\t100");
        match load_tntp(&bad, "<END OF METADATA>\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("{other:?}"),
        }
        let neg = TINY_NET.replace("\t100\t", "\t-5\t");
        assert!(matches!(load_tntp(&neg, "<END OF METADATA>\n"), Err(Error::Parse { line: 6, .. })));
        let no_header = TINY_NET.replace("<END OF METADATA>\n", "");
        assert!(matches!(load_tntp(&no_header, "<END OF METADATA>\n"), Err(Error::Parse { .. })));
    }
}
