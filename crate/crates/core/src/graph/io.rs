//! Plain-text graph files.
//!
//! ```text
//! BPG v1
//! <N> <M> <E>
//! <server> <dispatcher>     (E lines, 0-based)
//! ```
//!
//! Writers emit edges in ascending lexicographic order; readers accept any
//! order but reject duplicates.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{BipartiteGraph, GraphError};

const MAGIC: &str = "BPG v1";

pub fn render_graph<W: Write>(graph: &BipartiteGraph, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{MAGIC}")?;
    writeln!(
        out,
        "{} {} {}",
        graph.n_servers(),
        graph.n_dispatchers(),
        graph.n_edges()
    )?;
    for (v, w) in graph.edges() {
        writeln!(out, "{v} {w}")?;
    }
    Ok(())
}

pub fn write_graph(graph: &BipartiteGraph, path: impl AsRef<Path>) -> Result<(), GraphError> {
    let mut out = BufWriter::new(File::create(path)?);
    render_graph(graph, &mut out)?;
    out.flush()?;
    Ok(())
}

fn malformed(line: usize, message: impl Into<String>) -> GraphError {
    GraphError::Malformed {
        line,
        message: message.into(),
    }
}

fn parse_fields<const K: usize>(line_no: usize, line: &str) -> Result<[usize; K], GraphError> {
    let mut out = [0usize; K];
    let mut fields = line.split_whitespace();
    for slot in out.iter_mut() {
        let tok = fields
            .next()
            .ok_or_else(|| malformed(line_no, format!("expected {K} integers")))?;
        *slot = tok
            .parse()
            .map_err(|_| malformed(line_no, format!("not a non-negative integer: {tok:?}")))?;
    }
    if fields.next().is_some() {
        return Err(malformed(line_no, format!("expected {K} integers")));
    }
    Ok(out)
}

/// Leading `#` lines are skipped; line numbers in errors count them.
pub fn parse_graph<R: BufRead>(input: R) -> Result<BipartiteGraph, GraphError> {
    let mut lines = input.lines().peekable();
    let mut skipped = 0;
    while let Some(Ok(l)) = lines.peek() {
        if !l.starts_with('#') {
            break;
        }
        lines.next();
        skipped += 1;
    }
    let mut next = |expect: &str, line_no: usize| -> Result<String, GraphError> {
        match lines.next() {
            Some(l) => Ok(l?),
            None => Err(malformed(line_no, format!("unexpected end of file, expected {expect}"))),
        }
    };
    let magic = next("header", skipped + 1)?;
    if magic.trim_end() != MAGIC {
        return Err(malformed(skipped + 1, format!("expected {MAGIC:?}, found {magic:?}")));
    }
    let [n, m, e] = parse_fields::<3>(skipped + 2, &next("dimensions", skipped + 2)?)?;
    let mut edges = Vec::with_capacity(e);
    for i in 0..e {
        let line_no = skipped + i + 3;
        let [v, w] = parse_fields::<2>(line_no, &next("edge", line_no)?)?;
        edges.push((v, w));
    }
    for (i, rest) in lines.enumerate() {
        if !rest?.trim().is_empty() {
            return Err(malformed(skipped + e + 3 + i, "more edges than declared"));
        }
    }
    BipartiteGraph::from_edges(n, m, edges)
}

pub fn read_graph(path: impl AsRef<Path>) -> Result<BipartiteGraph, GraphError> {
    parse_graph(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{braess_example, perfect_matching};

    fn round_trip(g: &BipartiteGraph) -> BipartiteGraph {
        let mut buf = Vec::new();
        render_graph(g, &mut buf).unwrap();
        parse_graph(buf.as_slice()).unwrap()
    }

    #[test]
    fn round_trips() {
        let m = perfect_matching(2).unwrap();
        assert_eq!(round_trip(&m), m);
        let b = braess_example();
        let back = round_trip(&b);
        assert_eq!(back.n_edges(), 14);
        assert_eq!(back, b);
    }

    #[test]
    fn canonical_text() {
        let mut buf = Vec::new();
        render_graph(&perfect_matching(2).unwrap(), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "BPG v1\n2 2 2\n0 0\n1 1\n");
    }

    #[test]
    fn accepts_any_edge_order() {
        let text = "BPG v1\n2 2 3\n1 1\n0 1\n0 0\n";
        let g = parse_graph(text.as_bytes()).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 0), (0, 1), (1, 1)]);
    }

    #[test]
    fn skips_comment_block() {
        let text = "# seed = 3\n# kind = x\nBPG v1\n1 1 1\n0 0\n";
        assert_eq!(parse_graph(text.as_bytes()).unwrap().n_edges(), 1);
        let bad = "# c\nBPG v1\n1 1 1\n0 9\n";
        assert!(matches!(parse_graph(bad.as_bytes()), Err(GraphError::IndexOutOfRange { .. })));
        let junk = "# c\nBPG v1\n1 x 1\n";
        assert!(matches!(parse_graph(junk.as_bytes()), Err(GraphError::Malformed { line: 3, .. })));
    }

    #[test]
    fn rejects_bad_files() {
        let out_of_range = "BPG v1\n4 4 4\n0 0\n1 1\n2 2\n5 0\n";
        assert!(matches!(
            parse_graph(out_of_range.as_bytes()),
            Err(GraphError::IndexOutOfRange { server: 5, .. })
        ));
        let dup = "BPG v1\n1 1 2\n0 0\n0 0\n";
        assert!(matches!(parse_graph(dup.as_bytes()), Err(GraphError::DuplicateEdge { .. })));
        let bad_header = "BPG v2\n1 1 1\n0 0\n";
        assert!(matches!(parse_graph(bad_header.as_bytes()), Err(GraphError::Malformed { line: 1, .. })));
        let short = "BPG v1\n1 1 2\n0 0\n";
        assert!(matches!(parse_graph(short.as_bytes()), Err(GraphError::Malformed { .. })));
        let junk = "BPG v1\n1 x 1\n0 0\n";
        assert!(matches!(parse_graph(junk.as_bytes()), Err(GraphError::Malformed { line: 2, .. })));
    }

    #[test]
    fn file_round_trip() {
        let dir = std::env::temp_dir().join(format!("flexsim-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("braess.bpg");
        write_graph(&braess_example(), &path).unwrap();
        assert_eq!(read_graph(&path).unwrap(), braess_example());
        std::fs::remove_dir_all(dir).ok();
    }
}
