//! The channel spec text format.
//!
//! Specs are TOML documents with explicit tuple keys; omitted entries are zero.
//! Tuples list position 1 first. Alphabets are given either as a size or as a
//! list of labels, and tuple components may use either integers or labels.
//!
//! ```toml
//! n0 = 1
//!
//! [alphabets]
//! x = 2
//! y = 2
//! s = ["clean", "flip"]
//! u = ["clean", "flip"]
//! v = 1
//!
//! [[kernel]]          # p(y | x, s)
//! x = [0]
//! s = ["clean"]
//! y = [0]
//! p = 1.0
//!
//! [[joint]]           # p(s, u, v)
//! s = ["clean"]
//! u = ["clean"]
//! v = [0]
//! p = 0.5
//! ```

use std::collections::HashSet;
use std::fmt::Write as _;
use std::ops::Range;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;
use toml::Spanned;

use crate::channel::{validate_spec, BlockChannelSpec, Dims, Spaces, ValidationReport};
use crate::table::ConditionalTable;
use crate::tuple::TupleSpace;

#[derive(Debug, Error)]
pub enum SpecFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}:{line}:{column}: {message}")]
    Syntax {
        origin: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{origin}: spec violates channel invariants:\n{report}")]
    Invalid { origin: String, report: ValidationReport },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    n0: Spanned<usize>,
    alphabets: RawAlphabets,
    #[serde(default)]
    kernel: Vec<Spanned<RawKernelEntry>>,
    #[serde(default)]
    joint: Vec<Spanned<RawJointEntry>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlphabets {
    x: Spanned<AlphabetDecl>,
    y: Spanned<AlphabetDecl>,
    s: Spanned<AlphabetDecl>,
    u: Spanned<AlphabetDecl>,
    v: Spanned<AlphabetDecl>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AlphabetDecl {
    Size(usize),
    Labels(Vec<String>),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Symbol {
    Index(i64),
    Label(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKernelEntry {
    x: Vec<Symbol>,
    s: Vec<Symbol>,
    y: Vec<Symbol>,
    p: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJointEntry {
    s: Vec<Symbol>,
    u: Vec<Symbol>,
    v: Vec<Symbol>,
    p: f64,
}

struct Resolver {
    name: &'static str,
    size: usize,
    labels: Option<Vec<String>>,
    space: TupleSpace,
}

impl Resolver {
    fn tuple(&self, symbols: &[Symbol]) -> Result<usize, String> {
        if symbols.len() != self.space.len() {
            return Err(format!(
                "{} tuple has {} components, expected {}",
                self.name,
                symbols.len(),
                self.space.len()
            ));
        }
        let digits = symbols
            .iter()
            .map(|sym| match sym {
                Symbol::Index(i) if *i >= 0 && (*i as u64) < self.size as u64 => Ok(*i as usize),
                Symbol::Index(i) => Err(format!(
                    "{} symbol {i} is outside 0..{}",
                    self.name, self.size
                )),
                Symbol::Label(l) => self
                    .labels
                    .as_ref()
                    .and_then(|ls| ls.iter().position(|x| x == l))
                    .ok_or_else(|| format!("unknown {} label {l:?}", self.name)),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.space.encode(&digits))
    }
}

struct Located<'a> {
    origin: &'a str,
    text: &'a str,
}

impl Located<'_> {
    fn error(&self, span: Option<Range<usize>>, message: impl Into<String>) -> SpecFileError {
        let (line, column) = match span {
            Some(r) => line_col(self.text, r.start),
            None => (1, 1),
        };
        SpecFileError::Syntax {
            origin: self.origin.to_string(),
            line,
            column,
            message: message.into(),
        }
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, column)
}

/// Reads and validates a spec file.
pub fn parse_spec(path: impl AsRef<Path>) -> Result<BlockChannelSpec, SpecFileError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| SpecFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_spec_str(&text, &path.display().to_string())
}

/// Parses and validates spec text; `origin` names the source in errors.
pub fn parse_spec_str(text: &str, origin: &str) -> Result<BlockChannelSpec, SpecFileError> {
    let loc = Located { origin, text };
    let raw: RawSpec = toml::from_str(text).map_err(|e| loc.error(e.span(), e.message().trim()))?;

    let n0 = *raw.n0.get_ref();
    if n0 == 0 {
        return Err(loc.error(Some(raw.n0.span()), "n0 must be at least 1"));
    }
    let resolver = |name: &'static str, decl: &Spanned<AlphabetDecl>| -> Result<Resolver, SpecFileError> {
        let (size, labels) = match decl.get_ref() {
            AlphabetDecl::Size(n) => (*n, None),
            AlphabetDecl::Labels(ls) => {
                let mut seen = HashSet::new();
                if let Some(dup) = ls.iter().find(|l| !seen.insert(*l)) {
                    return Err(loc.error(Some(decl.span()), format!("duplicate {name} label {dup:?}")));
                }
                (ls.len(), Some(ls.clone()))
            }
        };
        if size == 0 {
            return Err(loc.error(Some(decl.span()), format!("alphabet {name} is empty")));
        }
        let space = TupleSpace::new(size, n0).ok_or_else(|| {
            loc.error(Some(decl.span()), format!("{size}^{n0} {name} tuples are too many"))
        })?;
        Ok(Resolver { name, size, labels, space })
    };
    let a = &raw.alphabets;
    let (rx, ry, rs, ru, rv) = (
        resolver("x", &a.x)?,
        resolver("y", &a.y)?,
        resolver("s", &a.s)?,
        resolver("u", &a.u)?,
        resolver("v", &a.v)?,
    );
    let dims = Dims::new(rx.size, ry.size, rs.size, ru.size, rv.size);
    let sp = Spaces::new(dims, n0).map_err(|e| loc.error(None, e.to_string()))?;

    let rows = sp.x.count() * sp.s.count();
    let mut kernel = vec![0.0; rows * sp.y.count()];
    let mut seen = HashSet::new();
    for entry in &raw.kernel {
        let e = entry.get_ref();
        let at = |m: String| loc.error(Some(entry.span()), m);
        let x = rx.tuple(&e.x).map_err(at)?;
        let s = rs.tuple(&e.s).map_err(at)?;
        let y = ry.tuple(&e.y).map_err(at)?;
        let idx = (x * sp.s.count() + s) * sp.y.count() + y;
        if !seen.insert(idx) {
            return Err(at("duplicate kernel entry".into()));
        }
        kernel[idx] = e.p;
    }

    let mut joint = vec![0.0; sp.s.count() * sp.u.count() * sp.v.count()];
    let mut seen = HashSet::new();
    for entry in &raw.joint {
        let e = entry.get_ref();
        let at = |m: String| loc.error(Some(entry.span()), m);
        let s = rs.tuple(&e.s).map_err(at)?;
        let u = ru.tuple(&e.u).map_err(at)?;
        let v = rv.tuple(&e.v).map_err(at)?;
        let idx = (s * sp.u.count() + u) * sp.v.count() + v;
        if !seen.insert(idx) {
            return Err(at("duplicate joint entry".into()));
        }
        joint[idx] = e.p;
    }

    let kernel = ConditionalTable::new(rows, sp.y.count(), kernel).expect("shape is consistent");
    let spec = BlockChannelSpec::new_unchecked(dims, n0, kernel, joint);
    let report = validate_spec(&spec);
    if !report.is_valid() {
        return Err(SpecFileError::Invalid {
            origin: origin.to_string(),
            report,
        });
    }
    Ok(spec)
}

/// Writes `spec` in the text format with integer symbols, skipping zero
/// entries. Parsing the output reproduces every table bit for bit.
pub fn serialize_spec(spec: &BlockChannelSpec) -> String {
    let sp = spec.spaces();
    let d = spec.dims();
    let mut out = String::new();
    let _ = writeln!(out, "n0 = {}\n", spec.n0());
    let _ = writeln!(out, "[alphabets]");
    for (name, size) in [("x", d.x), ("y", d.y), ("s", d.s), ("u", d.u), ("v", d.v)] {
        let _ = writeln!(out, "{name} = {size}");
    }
    let tuple = |t: Vec<usize>| {
        let parts: Vec<String> = t.iter().map(usize::to_string).collect();
        format!("[{}]", parts.join(", "))
    };
    let k = spec.channel_kernel();
    for x in 0..sp.x.count() {
        for s in 0..sp.s.count() {
            for (y, &p) in k.row(x * sp.s.count() + s).iter().enumerate() {
                if p.to_bits() == 0 {
                    continue;
                }
                let _ = writeln!(
                    out,
                    "\n[[kernel]]\nx = {}\ns = {}\ny = {}\np = {p:?}",
                    tuple(sp.x.decode(x)),
                    tuple(sp.s.decode(s)),
                    tuple(sp.y.decode(y))
                );
            }
        }
    }
    for (i, &p) in spec.side_info_joint().iter().enumerate() {
        if p.to_bits() == 0 {
            continue;
        }
        let v = i % sp.v.count();
        let su = i / sp.v.count();
        let _ = writeln!(
            out,
            "\n[[joint]]\ns = {}\nu = {}\nv = {}\np = {p:?}",
            tuple(sp.s.decode(su / sp.u.count())),
            tuple(sp.u.decode(su % sp.u.count())),
            tuple(sp.v.decode(v))
        );
    }
    out
}
