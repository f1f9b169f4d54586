use super::{Node, PhyloTree};
use crate::error::{Error, Result};

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

fn err<T>(position: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Newick {
        position,
        message: message.into(),
    })
}

const RESERVED: &[char] = &['(', ')', ',', ':', ';', '[', ']', '\''];

impl Parser<'_> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    /// Skips whitespace and `[...]` comments.
    fn skip(&mut self) -> Result<()> {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('[') => {
                    let start = self.pos;
                    match self.src[self.pos..].find(']') {
                        Some(end) => self.pos += end + 1,
                        None => return err(start, "unterminated comment"),
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn label(&mut self) -> Result<Option<String>> {
        self.skip()?;
        if self.peek() == Some('\'') {
            let start = self.pos;
            self.bump();
            let mut out = String::new();
            loop {
                match self.bump() {
                    Some('\'') if self.peek() == Some('\'') => {
                        self.bump();
                        out.push('\'');
                    }
                    Some('\'') => return Ok(Some(out)),
                    Some(c) => out.push(c),
                    None => return err(start, "unterminated quoted label"),
                }
            }
        }
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_whitespace() || RESERVED.contains(&c) {
                break;
            }
            self.bump();
        }
        Ok((self.pos > start).then(|| self.src[start..self.pos].to_string()))
    }

    fn length(&mut self) -> Result<Option<f64>> {
        self.skip()?;
        if self.peek() != Some(':') {
            return Ok(None);
        }
        self.bump();
        self.skip()?;
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E') {
                self.bump();
            } else {
                break;
            }
        }
        match self.src[start..self.pos].parse::<f64>() {
            Ok(x) if x.is_finite() && x >= 0.0 => Ok(Some(x)),
            _ => err(start, "expected a non-negative branch length"),
        }
    }

    fn subtree(&mut self, nodes: &mut Vec<Node>, parent: Option<usize>) -> Result<usize> {
        self.skip()?;
        let id = nodes.len();
        nodes.push(Node {
            label: None,
            children: Vec::new(),
            parent,
            height: 0.0,
            length: None,
        });
        if self.peek() == Some('(') {
            self.bump();
            loop {
                let child = self.subtree(nodes, Some(id))?;
                nodes[id].children.push(child);
                self.skip()?;
                match self.bump() {
                    Some(',') => continue,
                    Some(')') => break,
                    Some(c) => {
                        return err(
                            self.pos - c.len_utf8(),
                            format!("unexpected {c:?}, expected ',' or ')'"),
                        )
                    }
                    None => return err(self.pos, "unexpected end of input inside a group"),
                }
            }
            nodes[id].label = self.label()?;
        } else {
            match self.label()? {
                Some(l) => nodes[id].label = Some(l),
                None => return err(self.pos, "expected a leaf label or '('"),
            }
        }
        nodes[id].length = self.length()?;
        Ok(id)
    }
}

/// Parses a single Newick tree. Branch lengths are optional; quoted labels
/// and `[...]` comments are accepted.
pub fn parse_newick(src: &str) -> Result<PhyloTree> {
    let mut p = Parser { src, pos: 0 };
    let mut nodes = Vec::new();
    let root = p.subtree(&mut nodes, None)?;
    p.skip()?;
    if p.peek() != Some(';') {
        return err(p.pos, "expected ';' at end of tree");
    }
    p.bump();
    p.skip()?;
    if p.pos != src.len() {
        return err(p.pos, "trailing input after ';'");
    }
    nodes[root].length = None;
    PhyloTree::from_nodes(nodes, root)
}

fn quote(label: &str) -> String {
    if label.is_empty()
        || label
            .chars()
            .any(|c| c.is_whitespace() || RESERVED.contains(&c))
    {
        format!("'{}'", label.replace('\'', "''"))
    } else {
        label.to_string()
    }
}

/// Serializes with branch lengths where known and a trailing `;`.
pub fn to_newick(t: &PhyloTree) -> String {
    let mut out = String::new();
    write_node(t, t.root(), &mut out);
    out.push(';');
    out
}

fn write_node(t: &PhyloTree, id: usize, out: &mut String) {
    let node = t.node(id);
    if !node.children.is_empty() {
        out.push('(');
        for (k, &c) in node.children.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            write_node(t, c, out);
        }
        out.push(')');
    }
    if let Some(l) = &node.label {
        out.push_str(&quote(l));
    }
    if id != t.root() {
        if let Some(len) = node.length {
            out.push_str(&format!(":{len}"));
        }
    }
}
