//! Text file formats: INI-style documents holding groups, chain-complex
//! models, and manifests, plus the versioned key-value report format that
//! the command-line front end emits and test harnesses re-parse.
//!
//! A document is a sequence of sections. Each section starts with a header
//! line `[kind NAME]`, where `kind` is `group`, `complex`, or `manifest`,
//! followed by `key = value` lines. Blank lines and lines starting with `#`
//! are ignored; values fit on one line. Groups in documents use the factor
//! grammar and its default generator-name pools, so every ring element in a
//! matrix value can be parsed back. Rendering is canonical: parsing a
//! rendered document and rendering again reproduces identical bytes.
//!
//! Section keys:
//!
//! * `[group NAME]`: `spec` (factor grammar, e.g. `C2*C2`).
//! * `[complex NAME]`: `group`, ranks `C0`..`C4`, differentials `d1`..`d4`
//!   as row-major matrices of ring elements, optional `form` (square matrix)
//!   and `basis` (list of degree-two vectors). A differential with zero rows
//!   or columns is written `[]`.
//! * `[manifest NAME]`: `sigma`, `ks`, `s` (a pair `(i, j)` or `n/a`),
//!   `w2type` (`inf|zero|x2|x2y2`), `form` (`restricted(tag, rank)` or
//!   `general(tag)`), optional `kinv` (a tuple of pairs).
//!
//! Consistency of manifest *contents* is not checked here; incoherent
//! manifests must survive the round trip so the classifier can reject them
//! with its own diagnostics.

use std::fmt;
use std::sync::Arc;

use crate::classify::{FormDescriptor, Manifest, W2Type};
use crate::groupring::{parse_ring_elt, GroupSpec, RingElt, RingMatrix};
use crate::manifolds::{KInvariant, ZPiComplex};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Positioned values and sub-grammar helpers.
// ---------------------------------------------------------------------------

/// One value with its file position, kept as characters so error columns
/// can be computed exactly.
#[derive(Debug, Clone)]
struct Val {
    chars: Vec<char>,
    line: usize,
    /// 1-based column of `chars[0]` in the source line.
    col0: usize,
}

impl Val {
    fn err(&self, idx: usize, msg: impl Into<String>) -> Error {
        Error::Parse { line: self.line, col: self.col0 + idx, msg: msg.into() }
    }

    fn slice(&self, a: usize, b: usize) -> String {
        self.chars[a..b].iter().collect()
    }

    fn trim(&self, mut a: usize, mut b: usize) -> (usize, usize) {
        while a < b && self.chars[a].is_whitespace() {
            a += 1;
        }
        while b > a && self.chars[b - 1].is_whitespace() {
            b -= 1;
        }
        (a, b)
    }

    /// The token starting at `idx`, quoted for an error message.
    fn token(&self, idx: usize) -> String {
        if idx >= self.chars.len() {
            return "end of value".into();
        }
        let c = self.chars[idx];
        if is_ident_char(c) {
            let end = idx + self.chars[idx..].iter().take_while(|c| is_ident_char(**c)).count();
            format!("{:?}", self.slice(idx, end))
        } else {
            format!("{:?}", c)
        }
    }

    /// Splits the bracketed span `[a, b)` into top-level comma-separated
    /// item spans. `open`/`close` delimit the list; both bracket families
    /// contribute to the nesting depth.
    fn items(&self, a: usize, b: usize, open: char, close: char) -> Result<Vec<(usize, usize)>> {
        let (a, b) = self.trim(a, b);
        if a >= b || self.chars[a] != open {
            return Err(self.err(a, format!("expected {:?}, got {}", open, self.token(a))));
        }
        if self.chars[b - 1] != close {
            return Err(self.err(b - 1, format!("expected {:?}, got {}", close, self.token(b - 1))));
        }
        let mut out = Vec::new();
        let mut depth = 0usize;
        let mut start = a + 1;
        for i in a..b {
            let c = self.chars[i];
            match c {
                '[' | '(' => depth += 1,
                ']' | ')' => {
                    if depth == 0 {
                        return Err(self.err(i, format!("unbalanced {:?}", c)));
                    }
                    depth -= 1;
                }
                ',' if depth == 1 => {
                    out.push(self.trim(start, i));
                    start = i + 1;
                }
                _ => {}
            }
        }
        if depth != 0 {
            return Err(self.err(b - 1, format!("unclosed {:?}", open)));
        }
        let last = self.trim(start, b - 1);
        if last.0 < last.1 || !out.is_empty() {
            out.push(last);
        }
        if out.iter().any(|(x, y)| x >= y) {
            return Err(self.err(a, "empty list item".to_string()));
        }
        Ok(out)
    }

    fn parse_int<T: std::str::FromStr>(&self, a: usize, b: usize, what: &str) -> Result<T> {
        let (a, b) = self.trim(a, b);
        self.slice(a, b)
            .parse()
            .map_err(|_| self.err(a, format!("expected {}, got {}", what, self.token(a))))
    }

    fn ident(&self, a: usize, b: usize, what: &str) -> Result<String> {
        let (a, b) = self.trim(a, b);
        let s = self.slice(a, b);
        if s.is_empty() || !s.chars().all(is_ident_char) {
            return Err(self.err(a, format!("expected {}, got {}", what, self.token(a))));
        }
        Ok(s)
    }

    /// Re-anchors a sub-parser error reported relative to the slice starting
    /// at `a` (single-line, 1-based) onto this value's file position.
    fn remap(&self, a: usize, e: Error) -> Error {
        match e {
            Error::Parse { line: 1, col, msg } => {
                Error::Parse { line: self.line, col: self.col0 + a + col - 1, msg }
            }
            other => other,
        }
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

fn parse_pair(v: &Val, a: usize, b: usize) -> Result<(u8, u8)> {
    let items = v.items(a, b, '(', ')')?;
    if items.len() != 2 {
        let (a, _) = v.trim(a, b);
        return Err(v.err(a, format!("expected a pair (i, j), got {} item(s)", items.len())));
    }
    Ok((
        v.parse_int(items[0].0, items[0].1, "a small integer")?,
        v.parse_int(items[1].0, items[1].1, "a small integer")?,
    ))
}

fn parse_matrix_rows(v: &Val, group: &Arc<GroupSpec>) -> Result<Vec<Vec<RingElt>>> {
    let rows = v.items(0, v.chars.len(), '[', ']')?;
    let mut out = Vec::with_capacity(rows.len());
    for (ra, rb) in rows {
        let entries = v.items(ra, rb, '[', ']')?;
        let mut row = Vec::with_capacity(entries.len());
        for (ea, eb) in entries {
            let text = v.slice(ea, eb);
            row.push(parse_ring_elt(&text, group).map_err(|e| v.remap(ea, e))?);
        }
        out.push(row);
    }
    Ok(out)
}

fn parse_differential(
    v: &Val,
    group: &Arc<GroupSpec>,
    k: usize,
    rows: usize,
    cols: usize,
) -> Result<RingMatrix> {
    let parsed = parse_matrix_rows(v, group)?;
    if rows == 0 || cols == 0 {
        if !parsed.is_empty() {
            return Err(v.err(0, format!("d{} must be [] since C{} or C{} has rank 0", k, k, k - 1)));
        }
        return Ok(RingMatrix::zero(group, rows, cols));
    }
    if parsed.len() != rows || parsed.iter().any(|r| r.len() != cols) {
        return Err(v.err(
            0,
            format!(
                "d{} is {}x{}, expected {}x{}",
                k,
                parsed.len(),
                parsed.first().map_or(0, Vec::len),
                rows,
                cols
            ),
        ));
    }
    RingMatrix::from_rows(group, parsed).map_err(|e| v.remap(0, e))
}

/// Canonical matrix rendering used in complex sections: row-major nested
/// lists, or `[]` when either dimension is zero.
pub fn render_matrix(m: &RingMatrix) -> String {
    if m.rows() == 0 || m.cols() == 0 {
        return "[]".into();
    }
    let rows: Vec<String> = (0..m.rows())
        .map(|i| {
            let entries: Vec<String> = (0..m.cols()).map(|j| m.get(i, j).to_string()).collect();
            format!("[{}]", entries.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

fn render_vectors(vs: &[Vec<RingElt>]) -> String {
    let rows: Vec<String> = vs
        .iter()
        .map(|v| {
            let entries: Vec<String> = v.iter().map(RingElt::to_string).collect();
            format!("[{}]", entries.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

// ---------------------------------------------------------------------------
// Documents.
// ---------------------------------------------------------------------------

/// One named section of a document.
#[derive(Debug, Clone)]
pub enum Item {
    Group { name: String, group: Arc<GroupSpec> },
    Complex { name: String, complex: ZPiComplex },
    Manifest(Manifest),
}

impl Item {
    pub fn name(&self) -> &str {
        match self {
            Item::Group { name, .. } => name,
            Item::Complex { name, .. } => name,
            Item::Manifest(m) => &m.name,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Item::Group { .. } => "group",
            Item::Complex { .. } => "complex",
            Item::Manifest(_) => "manifest",
        }
    }
}

/// A parsed document: an ordered list of named sections.
#[derive(Debug, Clone, Default)]
pub struct Document {
    items: Vec<Item>,
}

impl Document {
    pub fn new(items: Vec<Item>) -> Document {
        Document { items }
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn group(&self, name: &str) -> Option<&Arc<GroupSpec>> {
        self.items.iter().find_map(|i| match i {
            Item::Group { name: n, group } if n == name => Some(group),
            _ => None,
        })
    }

    pub fn complex(&self, name: &str) -> Option<&ZPiComplex> {
        self.items.iter().find_map(|i| match i {
            Item::Complex { name: n, complex } if n == name => Some(complex),
            _ => None,
        })
    }

    pub fn manifest(&self, name: &str) -> Option<&Manifest> {
        self.items.iter().find_map(|i| match i {
            Item::Manifest(m) if m.name == name => Some(m),
            _ => None,
        })
    }

    /// Parses a document; positions in errors are 1-based line and column.
    pub fn parse(text: &str) -> Result<Document> {
        let mut items: Vec<Item> = Vec::new();
        let mut section: Option<Section> = None;
        for (li, raw) in text.lines().enumerate() {
            let line_no = li + 1;
            let chars: Vec<char> = raw.chars().collect();
            let first = chars.iter().position(|c| !c.is_whitespace());
            let Some(first) = first else { continue };
            if chars[first] == '#' {
                continue;
            }
            if chars[first] == '[' {
                if let Some(s) = section.take() {
                    push_item(&mut items, s.build()?)?;
                }
                section = Some(parse_header(&chars, first, line_no)?);
                continue;
            }
            let entry = parse_entry(&chars, first, line_no)?;
            match &mut section {
                Some(s) => s.insert(entry)?,
                None => {
                    return Err(Error::Parse {
                        line: line_no,
                        col: first + 1,
                        msg: format!(
                            "key {:?} appears before any section header",
                            entry.0
                        ),
                    })
                }
            }
        }
        if let Some(s) = section.take() {
            push_item(&mut items, s.build()?)?;
        }
        Ok(Document { items })
    }

    /// Canonical rendering; `parse` of the output reproduces the document
    /// and rendering again reproduces the same bytes.
    pub fn render(&self) -> String {
        let sections: Vec<String> = self.items.iter().map(render_item).collect();
        sections.join("\n")
    }
}

fn push_item(items: &mut Vec<Item>, item: Item) -> Result<()> {
    if items.iter().any(|i| i.kind() == item.kind() && i.name() == item.name()) {
        return Err(Error::Parse {
            line: 0,
            col: 0,
            msg: format!("duplicate {} section {:?}", item.kind(), item.name()),
        });
    }
    items.push(item);
    Ok(())
}

/// A section under construction: header data plus its key/value entries.
struct Section {
    kind: String,
    name: String,
    line: usize,
    entries: Vec<(String, Val, usize)>,
}

impl Section {
    fn insert(&mut self, entry: (String, Val, usize)) -> Result<()> {
        if let Some((_, v, col)) = self.entries.iter().find(|(k, _, _)| *k == entry.0) {
            let _ = (v, col);
            return Err(Error::Parse {
                line: entry.1.line,
                col: entry.2,
                msg: format!("duplicate key {:?} in section {:?}", entry.0, self.name),
            });
        }
        self.entries.push(entry);
        Ok(())
    }

    fn take(&mut self, key: &str) -> Option<Val> {
        self.entries
            .iter()
            .position(|(k, _, _)| k == key)
            .map(|i| self.entries.remove(i).1)
    }

    fn require(&mut self, key: &str) -> Result<Val> {
        self.take(key).ok_or_else(|| Error::Parse {
            line: self.line,
            col: 1,
            msg: format!("{} section {:?} is missing key {:?}", self.kind, self.name, key),
        })
    }

    fn reject_leftovers(&self) -> Result<()> {
        if let Some((k, v, col)) = self.entries.first() {
            return Err(Error::Parse {
                line: v.line,
                col: *col,
                msg: format!("unknown key {:?} in {} section {:?}", k, self.kind, self.name),
            });
        }
        Ok(())
    }

    fn build(mut self) -> Result<Item> {
        match self.kind.as_str() {
            "group" => {
                let spec = self.require("spec")?;
                let group =
                    GroupSpec::parse(&spec.slice(0, spec.chars.len())).map_err(|e| spec.remap(0, e))?;
                self.reject_leftovers()?;
                Ok(Item::Group { name: self.name, group })
            }
            "complex" => self.build_complex(),
            "manifest" => self.build_manifest(),
            _ => unreachable!("header parser screens kinds"),
        }
    }

    fn build_complex(mut self) -> Result<Item> {
        let gv = self.require("group")?;
        let group = GroupSpec::parse(&gv.slice(0, gv.chars.len())).map_err(|e| gv.remap(0, e))?;
        let mut ranks = [0usize; 5];
        for (k, rank) in ranks.iter_mut().enumerate() {
            let v = self.require(&format!("C{}", k))?;
            *rank = v.parse_int(0, v.chars.len(), "a rank")?;
        }
        let mut diffs = Vec::with_capacity(4);
        for k in 1..=4 {
            let v = self.require(&format!("d{}", k))?;
            diffs.push(parse_differential(&v, &group, k, ranks[k - 1], ranks[k])?);
        }
        let form = match self.take("form") {
            None => None,
            Some(v) => {
                let parsed = parse_matrix_rows(&v, &group)?;
                if parsed.is_empty() {
                    Some(RingMatrix::zero(&group, 0, 0))
                } else {
                    if parsed.iter().any(|r| r.len() != parsed.len()) {
                        return Err(v.err(0, "form matrix is not square".to_string()));
                    }
                    Some(RingMatrix::from_rows(&group, parsed).map_err(|e| v.remap(0, e))?)
                }
            }
        };
        let basis = match self.take("basis") {
            None => None,
            Some(v) => {
                let vectors = parse_matrix_rows(&v, &group)?;
                if let Some(bad) = vectors.iter().position(|x| x.len() != ranks[2]) {
                    return Err(v.err(
                        0,
                        format!(
                            "basis vector {} has {} entries, expected C2 rank {}",
                            bad,
                            vectors[bad].len(),
                            ranks[2]
                        ),
                    ));
                }
                Some(vectors)
            }
        };
        self.reject_leftovers()?;
        let complex =
            ZPiComplex::new(&group, ranks, diffs, form, basis).map_err(|e| Error::Parse {
                line: self.line,
                col: 1,
                msg: format!("invalid complex {:?}: {}", self.name, unwrap_msg(e)),
            })?;
        Ok(Item::Complex { name: self.name, complex })
    }

    fn build_manifest(mut self) -> Result<Item> {
        let sigma_v = self.require("sigma")?;
        let sigma = sigma_v.parse_int(0, sigma_v.chars.len(), "an integer")?;
        let ks_v = self.require("ks")?;
        let ks = ks_v.parse_int(0, ks_v.chars.len(), "a small integer")?;
        let s_v = self.require("s")?;
        let (sa, sb) = s_v.trim(0, s_v.chars.len());
        let s = if s_v.slice(sa, sb) == "n/a" {
            None
        } else {
            Some(parse_pair(&s_v, 0, s_v.chars.len())?)
        };
        let w_v = self.require("w2type")?;
        let (wa, wb) = w_v.trim(0, w_v.chars.len());
        let w2type = W2Type::from_keyword(&w_v.slice(wa, wb)).ok_or_else(|| {
            w_v.err(wa, format!("unknown w2-type {} (expected inf, zero, x2, or x2y2)", w_v.token(wa)))
        })?;
        let form = parse_form_descriptor(&self.require("form")?)?;
        let kinv = match self.take("kinv") {
            None => None,
            Some(v) => {
                let pairs = v
                    .items(0, v.chars.len(), '(', ')')?
                    .into_iter()
                    .map(|(a, b)| parse_pair(&v, a, b))
                    .collect::<Result<Vec<_>>>()?;
                Some(KInvariant::new(pairs))
            }
        };
        self.reject_leftovers()?;
        Ok(Item::Manifest(Manifest { name: self.name, sigma, ks, w2type, s, form, kinv }))
    }
}

fn unwrap_msg(e: Error) -> String {
    match e {
        Error::Internal(m) | Error::Unsupported(m) => m,
        other => other.to_string(),
    }
}

fn parse_form_descriptor(v: &Val) -> Result<FormDescriptor> {
    let (a, b) = v.trim(0, v.chars.len());
    let head = a + v.chars[a..b].iter().take_while(|c| c.is_ascii_alphabetic()).count();
    let kind = v.slice(a, head);
    let items = v.items(head, b, '(', ')')?;
    match kind.as_str() {
        "restricted" => {
            if items.len() != 2 {
                return Err(v.err(a, format!("restricted(tag, rank) takes 2 items, got {}", items.len())));
            }
            Ok(FormDescriptor::Restricted {
                tag: v.ident(items[0].0, items[0].1, "a tag identifier")?,
                rank: v.parse_int(items[1].0, items[1].1, "a rank")?,
            })
        }
        "general" => {
            if items.len() != 1 {
                return Err(v.err(a, format!("general(tag) takes 1 item, got {}", items.len())));
            }
            Ok(FormDescriptor::General { tag: v.ident(items[0].0, items[0].1, "a tag identifier")? })
        }
        _ => Err(v.err(
            a,
            format!("unknown form kind {} (expected restricted(tag, rank) or general(tag))", v.token(a)),
        )),
    }
}

fn parse_header(chars: &[char], first: usize, line: usize) -> Result<Section> {
    let err = |col: usize, msg: String| Error::Parse { line, col: col + 1, msg };
    let mut i = first + 1;
    while i < chars.len() && chars[i].is_whitespace() {
        i += 1;
    }
    let kind_start = i;
    while i < chars.len() && chars[i].is_ascii_alphabetic() {
        i += 1;
    }
    let kind: String = chars[kind_start..i].iter().collect();
    if !matches!(kind.as_str(), "group" | "complex" | "manifest") {
        return Err(err(
            kind_start,
            format!("unknown section kind {:?} (expected group, complex, or manifest)", kind),
        ));
    }
    while i < chars.len() && chars[i].is_whitespace() {
        i += 1;
    }
    let name_start = i;
    while i < chars.len() && is_ident_char(chars[i]) {
        i += 1;
    }
    let name: String = chars[name_start..i].iter().collect();
    if name.is_empty() {
        return Err(err(name_start, format!("section header {:?} is missing a name", kind)));
    }
    while i < chars.len() && chars[i].is_whitespace() {
        i += 1;
    }
    if i >= chars.len() || chars[i] != ']' {
        return Err(err(i, "expected ']' closing the section header".to_string()));
    }
    i += 1;
    if let Some(extra) = chars[i..].iter().position(|c| !c.is_whitespace()) {
        return Err(err(i + extra, "unexpected text after section header".to_string()));
    }
    Ok(Section { kind, name, line, entries: Vec::new() })
}

fn parse_entry(chars: &[char], first: usize, line: usize) -> Result<(String, Val, usize)> {
    let eq = chars.iter().position(|c| *c == '=').ok_or_else(|| {
        let token: String =
            chars[first..].iter().take_while(|c| !c.is_whitespace()).collect();
        Error::Parse {
            line,
            col: first + 1,
            msg: format!("expected 'key = value', got {:?}", token),
        }
    })?;
    let key_end = chars[..eq]
        .iter()
        .rposition(|c| !c.is_whitespace())
        .map_or(first, |p| p + 1);
    let key: String = chars[first..key_end].iter().collect();
    if key.is_empty() || !key.chars().all(is_ident_char) || first >= eq {
        return Err(Error::Parse {
            line,
            col: first + 1,
            msg: format!("bad key {:?} before '='", key),
        });
    }
    let val_start = chars[eq + 1..]
        .iter()
        .position(|c| !c.is_whitespace())
        .map_or(chars.len(), |p| eq + 1 + p);
    let val_end = chars.iter().rposition(|c| !c.is_whitespace()).map_or(val_start, |p| p + 1);
    let val_chars = chars[val_start..val_end.max(val_start)].to_vec();
    Ok((key, Val { chars: val_chars, line, col0: val_start + 1 }, first + 1))
}

fn render_item(item: &Item) -> String {
    match item {
        Item::Group { name, group } => {
            format!("[group {}]\nspec = {}\n", name, group.describe())
        }
        Item::Complex { name, complex } => {
            let mut out = format!("[complex {}]\ngroup = {}\n", name, complex.group().describe());
            for (k, r) in complex.ranks().iter().enumerate() {
                out.push_str(&format!("C{} = {}\n", k, r));
            }
            for k in 1..=4 {
                let d = complex.diff(k).expect("degrees 1..=4 exist");
                out.push_str(&format!("d{} = {}\n", k, render_matrix(d)));
            }
            if let Some(form) = complex.form() {
                out.push_str(&format!("form = {}\n", render_matrix(form)));
            }
            if let Some(basis) = complex.h2_basis() {
                out.push_str(&format!("basis = {}\n", render_vectors(basis)));
            }
            out
        }
        Item::Manifest(m) => {
            let mut out = format!("[manifest {}]\nsigma = {}\nks = {}\n", m.name, m.sigma, m.ks);
            match m.s {
                None => out.push_str("s = n/a\n"),
                Some((i, j)) => out.push_str(&format!("s = ({}, {})\n", i, j)),
            }
            out.push_str(&format!("w2type = {}\n", m.w2type));
            out.push_str(&format!("form = {}\n", m.form));
            if let Some(k) = &m.kinv {
                let pairs: Vec<String> =
                    k.pairs().iter().map(|(a, b)| format!("({}, {})", a, b)).collect();
                out.push_str(&format!("kinv = ({})\n", pairs.join(", ")));
            }
            out
        }
    }
}

// ---------------------------------------------------------------------------
// Structured reports.
// ---------------------------------------------------------------------------

/// Version line that opens every structured report.
pub const REPORT_VERSION: &str = "qtype.report.v1";

/// A machine-readable report: a command name and ordered key/value fields.
/// Rendering is byte-stable and `parse` is its exact inverse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    command: String,
    fields: Vec<(String, String)>,
}

impl Report {
    pub fn new(command: impl Into<String>) -> Report {
        Report { command: command.into(), fields: Vec::new() }
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    /// Appends a field; values must not contain newlines.
    pub fn push(&mut self, key: impl Into<String>, value: impl fmt::Display) {
        let key = key.into();
        let value = value.to_string();
        debug_assert!(key.chars().all(is_ident_char), "report key {:?}", key);
        debug_assert!(!value.contains('\n'), "report value with newline under {:?}", key);
        self.fields.push((key, value));
    }

    pub fn fields(&self) -> &[(String, String)] {
        &self.fields
    }

    /// First value stored under `key`, if any.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut out = format!("{}\ncommand = {}\n", REPORT_VERSION, self.command);
        for (k, v) in &self.fields {
            out.push_str(&format!("{} = {}\n", k, v));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Report> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, first)) if first == REPORT_VERSION => {}
            other => {
                return Err(Error::Parse {
                    line: 1,
                    col: 1,
                    msg: format!(
                        "unsupported report version {:?} (expected {:?})",
                        other.map_or("", |(_, l)| l),
                        REPORT_VERSION
                    ),
                })
            }
        }
        let command = match lines.next() {
            Some((_, line)) if line.starts_with("command = ") => line["command = ".len()..].to_string(),
            other => {
                return Err(Error::Parse {
                    line: 2,
                    col: 1,
                    msg: format!("expected 'command = ...', got {:?}", other.map_or("", |(_, l)| l)),
                })
            }
        };
        let mut report = Report::new(command);
        for (li, line) in lines {
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once(" = ") else {
                return Err(Error::Parse {
                    line: li + 1,
                    col: 1,
                    msg: format!("expected 'key = value', got {:?}", line),
                });
            };
            report.fields.push((k.to_string(), v.to_string()));
        }
        Ok(report)
    }
}
