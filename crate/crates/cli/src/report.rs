//! Flat key-value report representation. Commands build one ordered list
//! of dotted paths; CSV prints it as-is and JSON re-nests it, so both
//! formats always carry identical content.

use crate::emit::{fmt_float, json_escape};

#[derive(Debug, Clone, PartialEq)]
pub enum Val {
    F(f64),
    I(u64),
    S(String),
    B(bool),
    Null,
    /// an array key present in the schema but with no elements this run
    EmptyArray,
}

impl Val {
    pub fn render_csv(&self) -> String {
        match self {
            Val::F(x) if x.is_finite() => fmt_float(*x),
            Val::F(_) | Val::Null | Val::EmptyArray => String::new(),
            Val::I(x) => x.to_string(),
            Val::S(s) => s.clone(),
            Val::B(b) => b.to_string(),
        }
    }

    fn render_json(&self) -> String {
        match self {
            Val::F(x) if x.is_finite() => fmt_float(*x),
            Val::F(_) | Val::Null => "null".to_string(),
            Val::I(x) => x.to_string(),
            Val::S(s) => json_escape(s),
            Val::B(b) => b.to_string(),
            Val::EmptyArray => "[]".to_string(),
        }
    }
}

#[derive(Debug, Default)]
pub struct Flat {
    entries: Vec<(String, Val)>,
}

enum Node {
    Obj(Vec<(String, Node)>),
    Arr(Vec<Node>),
    Leaf(Val),
}

impl Flat {
    pub fn new() -> Self {
        Flat::default()
    }

    pub fn push(&mut self, key: &str, value: Val) {
        self.entries.push((key.to_string(), value));
    }

    pub fn entries(&self) -> &[(String, Val)] {
        &self.entries
    }

    /// Re-nests dotted paths into a JSON object. Numeric path segments
    /// are array indices and must arrive in order; the schemas here are
    /// fixed, so violations are bugs, not input errors.
    pub fn render_json(&self) -> String {
        let mut root = Node::Obj(Vec::new());
        for (path, value) in &self.entries {
            insert(&mut root, path.split('.'), value);
        }
        let mut out = String::new();
        render(&root, &mut out);
        out
    }
}

fn insert<'a>(node: &mut Node, mut path: impl Iterator<Item = &'a str>, value: &Val) {
    let segment = match path.next() {
        Some(s) => s,
        None => {
            *node = Node::Leaf(value.clone());
            return;
        }
    };
    if let Ok(index) = segment.parse::<usize>() {
        if matches!(node, Node::Obj(entries) if entries.is_empty()) {
            *node = Node::Arr(Vec::new());
        }
        let Node::Arr(items) = node else {
            panic!("path mixes array index '{segment}' into a non-array")
        };
        assert!(index <= items.len(), "array index {index} out of order");
        if index == items.len() {
            items.push(Node::Obj(Vec::new()));
        }
        insert(&mut items[index], path, value);
    } else {
        let Node::Obj(entries) = node else {
            panic!("path segment '{segment}' descends into a non-object")
        };
        let child = match entries.iter().position(|(k, _)| k == segment) {
            Some(i) => &mut entries[i].1,
            None => {
                entries.push((segment.to_string(), Node::Obj(Vec::new())));
                &mut entries.last_mut().unwrap().1
            }
        };
        insert(child, path, value);
    }
}

fn render(node: &Node, out: &mut String) {
    match node {
        Node::Leaf(v) => out.push_str(&v.render_json()),
        Node::Obj(entries) => {
            out.push('{');
            for (i, (key, child)) in entries.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&json_escape(key));
                out.push(':');
                render(child, out);
            }
            out.push('}');
        }
        Node::Arr(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                render(item, out);
            }
            out.push(']');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nests_objects_and_arrays() {
        let mut flat = Flat::new();
        flat.push("schema_version", Val::I(1));
        flat.push("inputs.beta", Val::F(0.5));
        flat.push("inputs.name", Val::S("x".to_string()));
        flat.push("rows.0.a", Val::I(1));
        flat.push("rows.0.b", Val::Null);
        flat.push("rows.1.a", Val::I(2));
        flat.push("notes", Val::EmptyArray);
        assert_eq!(
            flat.render_json(),
            "{\"schema_version\":1,\
             \"inputs\":{\"beta\":5.0000000000000000e-1,\"name\":\"x\"},\
             \"rows\":[{\"a\":1,\"b\":null},{\"a\":2}],\
             \"notes\":[]}"
        );
    }

    #[test]
    fn csv_rendering_of_values() {
        assert_eq!(Val::F(1.0).render_csv(), "1.0000000000000000e0");
        assert_eq!(Val::F(f64::NAN).render_csv(), "");
        assert_eq!(Val::I(7).render_csv(), "7");
        assert_eq!(Val::B(true).render_csv(), "true");
        assert_eq!(Val::Null.render_csv(), "");
        assert_eq!(Val::S("a,b".to_string()).render_csv(), "a,b");
    }
}
