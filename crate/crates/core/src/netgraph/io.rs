//! Plain-text graph files.
//!
//! ```text
//! n 4 undirected selfloops
//! 1 2
//! 2 3
//! 3 4
//! ```
//!
//! Vertex ids are 1-based. Blank lines and lines starting with `#` are ignored.
//! Self-loops implied by the header need not be listed.

use std::path::Path;

use super::graph::DirectedGraph;
use crate::error::{Error, Result};

pub fn parse_graph(text: &str, origin: &str) -> Result<DirectedGraph> {
    let perr = |line: usize, msg: String| Error::Parse {
        path: origin.to_string(),
        line,
        msg,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines
        .next()
        .ok_or_else(|| perr(1, "missing header line".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != "n" {
        return Err(perr(
            hline,
            "header must be `n <N> directed|undirected selfloops|noselfloops`".into(),
        ));
    }
    let n: usize = fields[1]
        .parse()
        .map_err(|_| perr(hline, format!("bad vertex count `{}`", fields[1])))?;
    let undirected = match fields[2] {
        "directed" => false,
        "undirected" => true,
        other => return Err(perr(hline, format!("unknown orientation `{other}`"))),
    };
    let self_loops = match fields[3] {
        "selfloops" => true,
        "noselfloops" => false,
        other => return Err(perr(hline, format!("unknown self-loop flag `{other}`"))),
    };
    let mut g = DirectedGraph::new(n, self_loops).map_err(|e| perr(hline, e.to_string()))?;

    for (ln, line) in lines {
        let mut it = line.split_whitespace();
        let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
            return Err(perr(ln, format!("expected `i j`, got `{line}`")));
        };
        let parse_v = |s: &str| -> Result<usize> {
            let v: usize = s
                .parse()
                .map_err(|_| perr(ln, format!("bad vertex id `{s}`")))?;
            if v == 0 || v > n {
                return Err(perr(ln, format!("vertex {v} outside 1..={n}")));
            }
            Ok(v - 1)
        };
        let (a, b) = (parse_v(a)?, parse_v(b)?);
        if undirected {
            g.add_undirected_edge(a, b)?;
        } else {
            g.add_edge(a, b)?;
        }
    }
    Ok(g)
}

pub fn read_graph(path: &Path) -> Result<DirectedGraph> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_graph(&text, &path.display().to_string())
}

/// Serializes with the undirected header when every edge has its reverse.
pub fn format_graph(g: &DirectedGraph) -> String {
    let undirected = g.is_symmetric();
    let mut out = format!(
        "n {} {} {}\n",
        g.n_vertices(),
        if undirected { "undirected" } else { "directed" },
        if g.has_self_loops() { "selfloops" } else { "noselfloops" }
    );
    for (a, b) in g.edges() {
        if (a == b && g.has_self_loops()) || (undirected && b < a) {
            continue;
        }
        out.push_str(&format!("{} {}\n", a + 1, b + 1));
    }
    out
}
