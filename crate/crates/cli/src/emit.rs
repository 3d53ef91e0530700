//! Deterministic output primitives. All floating point goes through one
//! formatter (17 significant digits, round-trip exact) so identical runs
//! produce byte-identical CSV and JSON.

/// 17 significant digits in scientific notation.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// A JSON string literal, quotes included.
pub fn json_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Radian/degree conversion at the process boundary. Everything internal
/// stays in radians.
#[derive(Debug, Clone, Copy)]
pub struct AngleIo {
    pub degrees: bool,
}

impl AngleIo {
    pub fn input(&self, x: f64) -> f64 {
        if self.degrees {
            x.to_radians()
        } else {
            x
        }
    }

    pub fn output(&self, x: f64) -> f64 {
        if self.degrees {
            x.to_degrees()
        } else {
            x
        }
    }
}

/// Minimal JSON document writer with insertion-ordered keys. Numbers are
/// emitted through `fmt_float`, which serde-based serializers do not
/// guarantee; non-finite values become null.
pub struct JsonWriter {
    out: String,
    fresh: Vec<bool>,
}

impl JsonWriter {
    pub fn new() -> Self {
        JsonWriter {
            out: String::new(),
            fresh: vec![true],
        }
    }

    fn separate(&mut self) {
        if let Some(first) = self.fresh.last_mut() {
            if *first {
                *first = false;
            } else {
                self.out.push(',');
            }
        }
    }

    pub fn begin_object(&mut self) {
        self.separate();
        self.out.push('{');
        self.fresh.push(true);
    }

    pub fn end_object(&mut self) {
        self.fresh.pop();
        self.out.push('}');
    }

    pub fn begin_array(&mut self) {
        self.separate();
        self.out.push('[');
        self.fresh.push(true);
    }

    pub fn end_array(&mut self) {
        self.fresh.pop();
        self.out.push(']');
    }

    /// Key inside an object; the following value call supplies its value.
    pub fn key(&mut self, k: &str) {
        self.separate();
        self.push_escaped(k);
        self.out.push(':');
        // the value that follows must not emit a comma
        if let Some(first) = self.fresh.last_mut() {
            *first = true;
        }
    }

    pub fn num(&mut self, x: f64) {
        self.separate();
        if x.is_finite() {
            self.out.push_str(&fmt_float(x));
        } else {
            self.out.push_str("null");
        }
    }

    pub fn int(&mut self, x: u64) {
        self.separate();
        self.out.push_str(&x.to_string());
    }

    pub fn null(&mut self) {
        self.separate();
        self.out.push_str("null");
    }

    pub fn string(&mut self, s: &str) {
        self.separate();
        self.push_escaped(s);
    }

    fn push_escaped(&mut self, s: &str) {
        self.out.push_str(&json_escape(s));
    }

    pub fn finish(self) -> String {
        self.out
    }
}

/// CSV field quoting: wrap and double quotes only when the content needs
/// it, so numeric columns stay clean.
pub fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
