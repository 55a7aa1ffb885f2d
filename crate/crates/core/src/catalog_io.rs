//! Reading and writing service catalogs.
//!
//! Two equivalent formats are supported. The line-oriented `.svc` DSL:
//!
//! ```text
//! # comment
//! collection weather-ws
//! s1 : city -> longitude latitude
//! s2 : longitude latitude -> weather
//! ```
//!
//! and JSON:
//!
//! ```json
//! {"name": "weather-ws",
//!  "services": [{"name": "s1", "inputs": ["city"], "outputs": ["longitude", "latitude"]}]}
//! ```
//!
//! Both parsers report every problem they find, each with a 1-based line and
//! column.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::Deserialize;
use serde_json::value::RawValue;

use crate::error::{Error, Result};
use crate::types::{Catalog, Service, ServiceName, TypeName, TypeSet};

/// Catalog name used when the source has no `collection` header and no file
/// stem is available.
pub const DEFAULT_CATALOG_NAME: &str = "catalog";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParseErrorKind {
    MalformedLine,
    DuplicateService,
    EmptyInputs,
    EmptyOutputs,
    DuplicateTypeInList,
    BadToken,
}

impl ParseErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::MalformedLine => "malformed-line",
            Self::DuplicateService => "duplicate-service",
            Self::EmptyInputs => "empty-inputs",
            Self::EmptyOutputs => "empty-outputs",
            Self::DuplicateTypeInList => "duplicate-type-in-list",
            Self::BadToken => "bad-token",
        }
    }
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, column: usize, kind: ParseErrorKind, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            kind,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: {}: {}",
            self.line, self.column, self.kind, self.message
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Dsl,
    Json,
}

impl Format {
    /// `.json` selects JSON; anything else is treated as the DSL.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Dsl,
        }
    }
}

pub fn parse_catalog_text(source: &str) -> Result<Catalog> {
    parse_catalog_text_named(source, DEFAULT_CATALOG_NAME)
}

pub fn parse_catalog_json(source: &str) -> Result<Catalog> {
    parse_json(source).map_err(Error::Parse)
}

pub fn parse_catalog(source: &str, format: Format, default_name: &str) -> Result<Catalog> {
    match format {
        Format::Dsl => parse_catalog_text_named(source, default_name),
        Format::Json => parse_catalog_json(source),
    }
}

/// Like [`parse_catalog_text`], naming the catalog `default_name` when there
/// is no `collection` header.
pub fn parse_catalog_text_named(source: &str, default_name: &str) -> Result<Catalog> {
    parse_dsl(source, default_name).map_err(Error::Parse)
}

/// 1-based character column of `sub` inside `line`. `sub` must be a slice
/// of `line`.
fn column_of(line: &str, sub: &str) -> usize {
    let offset = sub.as_ptr() as usize - line.as_ptr() as usize;
    line[..offset].chars().count() + 1
}

fn token_error(err: Error) -> (ParseErrorKind, String) {
    match err {
        Error::InvalidToken { token, reason } => (
            ParseErrorKind::BadToken,
            format!("invalid token {token:?}: {reason}"),
        ),
        other => (ParseErrorKind::BadToken, other.to_string()),
    }
}

struct DslLine<'a> {
    name: &'a str,
    inputs: Vec<&'a str>,
    outputs: Vec<&'a str>,
    arrow: &'a str,
}

fn split_service_line(text: &str) -> std::result::Result<DslLine<'_>, &'static str> {
    let (name, rest) = text
        .split_once(':')
        .ok_or("expected `name : inputs -> outputs`")?;
    let (inputs, outputs) = rest
        .split_once("->")
        .ok_or("missing `->` between inputs and outputs")?;
    if outputs.contains("->") {
        return Err("more than one `->`");
    }
    let arrow_at = text.len() - outputs.len() - 2;
    Ok(DslLine {
        name: name.trim(),
        inputs: inputs.split_whitespace().collect(),
        outputs: outputs.split_whitespace().collect(),
        arrow: &text[arrow_at..arrow_at + 2],
    })
}

fn parse_dsl(source: &str, default_name: &str) -> std::result::Result<Catalog, Vec<ParseError>> {
    let mut errors = Vec::new();
    let mut services = Vec::new();
    let mut seen = BTreeSet::new();
    let mut catalog_name: Option<ServiceName> = None;
    let mut saw_statement = false;

    for (idx, raw_line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let text = match raw_line.find('#') {
            Some(i) => &raw_line[..i],
            None => raw_line,
        };
        let trimmed = text.trim();
        if trimmed.is_empty() {
            continue;
        }
        let col = |sub: &str| column_of(raw_line, sub);
        let first_statement = !saw_statement;
        saw_statement = true;

        if !trimmed.contains(':') {
            let words: Vec<&str> = trimmed.split_whitespace().collect();
            if words.first() == Some(&"collection") {
                if !first_statement {
                    errors.push(ParseError::new(
                        line_no,
                        col(trimmed),
                        ParseErrorKind::MalformedLine,
                        "`collection` header must be the first statement",
                    ));
                } else if words.len() != 2 {
                    errors.push(ParseError::new(
                        line_no,
                        col(trimmed),
                        ParseErrorKind::MalformedLine,
                        "expected `collection <name>`",
                    ));
                } else {
                    match ServiceName::new(words[1]) {
                        Ok(n) => catalog_name = Some(n),
                        Err(e) => {
                            let (kind, msg) = token_error(e);
                            errors.push(ParseError::new(line_no, col(words[1]), kind, msg));
                        }
                    }
                }
                continue;
            }
        }

        let parts = match split_service_line(text) {
            Ok(p) => p,
            Err(msg) => {
                errors.push(ParseError::new(
                    line_no,
                    col(trimmed),
                    ParseErrorKind::MalformedLine,
                    msg,
                ));
                continue;
            }
        };
        let mut line_ok = true;

        let name = if parts.name.is_empty() {
            errors.push(ParseError::new(
                line_no,
                col(trimmed),
                ParseErrorKind::MalformedLine,
                "missing service name before `:`",
            ));
            line_ok = false;
            None
        } else if parts.name.split_whitespace().nth(1).is_some() {
            errors.push(ParseError::new(
                line_no,
                col(parts.name),
                ParseErrorKind::BadToken,
                format!("service name {:?} must be a single token", parts.name),
            ));
            line_ok = false;
            None
        } else {
            match ServiceName::new(parts.name) {
                Ok(n) => Some(n),
                Err(e) => {
                    let (kind, msg) = token_error(e);
                    errors.push(ParseError::new(line_no, col(parts.name), kind, msg));
                    line_ok = false;
                    None
                }
            }
        };

        let mut type_list = |tokens: &[&str], which: &str, empty_kind: ParseErrorKind| {
            let mut set = BTreeSet::new();
            if tokens.is_empty() {
                errors.push(ParseError::new(
                    line_no,
                    col(parts.arrow),
                    empty_kind,
                    format!("service {:?} has no {which}", parts.name),
                ));
                line_ok = false;
            }
            for &tok in tokens {
                match TypeName::new(tok) {
                    Ok(t) => {
                        if !set.insert(t) {
                            errors.push(ParseError::new(
                                line_no,
                                col(tok),
                                ParseErrorKind::DuplicateTypeInList,
                                format!("type {tok:?} listed twice in {which}"),
                            ));
                            line_ok = false;
                        }
                    }
                    Err(e) => {
                        let (kind, msg) = token_error(e);
                        errors.push(ParseError::new(line_no, col(tok), kind, msg));
                        line_ok = false;
                    }
                }
            }
            set.into_iter().collect::<TypeSet>()
        };
        let inputs = type_list(&parts.inputs, "inputs", ParseErrorKind::EmptyInputs);
        let outputs = type_list(&parts.outputs, "outputs", ParseErrorKind::EmptyOutputs);

        let Some(name) = name else { continue };
        if !seen.insert(name.clone()) {
            errors.push(ParseError::new(
                line_no,
                col(parts.name),
                ParseErrorKind::DuplicateService,
                format!("service {:?} is already defined", parts.name),
            ));
            continue;
        }
        if line_ok {
            services.push(Service::new(name, inputs, outputs).expect("validated above"));
        }
    }

    if !errors.is_empty() {
        return Err(errors);
    }
    let name = match catalog_name {
        Some(n) => n,
        None => ServiceName::new(default_name).map_err(|e| {
            let (kind, msg) = token_error(e);
            vec![ParseError::new(
                1,
                1,
                kind,
                format!("default catalog name: {msg}"),
            )]
        })?,
    };
    Ok(Catalog::new(name, services).expect("names checked for duplicates"))
}

#[derive(Deserialize)]
struct RawCatalog<'a> {
    #[serde(borrow)]
    name: &'a RawValue,
    #[serde(borrow)]
    services: Vec<&'a RawValue>,
}

#[derive(Deserialize)]
struct RawService<'a> {
    #[serde(borrow)]
    name: &'a RawValue,
    #[serde(borrow)]
    inputs: Vec<&'a RawValue>,
    #[serde(borrow)]
    outputs: Vec<&'a RawValue>,
}

/// Maps byte offsets of borrowed raw values back to line/column pairs.
struct JsonLocator<'a> {
    source: &'a str,
}

impl<'a> JsonLocator<'a> {
    fn position(&self, raw: &RawValue) -> (usize, usize) {
        let offset = raw.get().as_ptr() as usize - self.source.as_ptr() as usize;
        let before = &self.source[..offset];
        let line = before.matches('\n').count() + 1;
        let line_start = before.rfind('\n').map_or(0, |i| i + 1);
        (line, before[line_start..].chars().count() + 1)
    }

    fn error(
        &self,
        raw: &RawValue,
        kind: ParseErrorKind,
        path: &str,
        msg: impl fmt::Display,
    ) -> ParseError {
        let (line, column) = self.position(raw);
        ParseError::new(line, column, kind, format!("{path}: {msg}"))
    }

    fn structure<T: Deserialize<'a>>(
        &self,
        raw: &'a RawValue,
        path: &str,
    ) -> std::result::Result<T, ParseError> {
        serde_json::from_str(raw.get())
            .map_err(|e| self.error(raw, ParseErrorKind::MalformedLine, path, strip_position(&e)))
    }

    fn string(&self, raw: &'a RawValue, path: &str) -> std::result::Result<String, ParseError> {
        serde_json::from_str::<String>(raw.get()).map_err(|_| {
            self.error(
                raw,
                ParseErrorKind::MalformedLine,
                path,
                "expected a string",
            )
        })
    }
}

fn strip_position(e: &serde_json::Error) -> String {
    let s = e.to_string();
    match s.rfind(" at line ") {
        Some(i) => s[..i].to_owned(),
        None => s,
    }
}

fn parse_json(source: &str) -> std::result::Result<Catalog, Vec<ParseError>> {
    let loc = JsonLocator { source };
    let root: &RawValue = serde_json::from_str(source).map_err(|e| {
        vec![ParseError::new(
            e.line().max(1),
            e.column().max(1),
            ParseErrorKind::MalformedLine,
            format!("invalid JSON: {}", strip_position(&e)),
        )]
    })?;
    let raw: RawCatalog = loc.structure(root, "").map_err(|e| vec![e])?;

    let mut errors = Vec::new();
    let name = loc.string(raw.name, "/name").and_then(|n| {
        ServiceName::new(&n).map_err(|e| {
            loc.error(
                raw.name,
                ParseErrorKind::BadToken,
                "/name",
                token_error(e).1,
            )
        })
    });
    let name = name.map_err(|e| errors.push(e)).ok();

    let mut services = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, raw_svc) in raw.services.iter().enumerate() {
        let path = format!("/services/{i}");
        let svc: RawService = match loc.structure(raw_svc, &path) {
            Ok(s) => s,
            Err(e) => {
                errors.push(e);
                continue;
            }
        };
        let before = errors.len();
        let svc_name = loc
            .string(svc.name, &format!("{path}/name"))
            .and_then(|n| {
                ServiceName::new(&n).map_err(|e| {
                    loc.error(
                        svc.name,
                        ParseErrorKind::BadToken,
                        &format!("{path}/name"),
                        token_error(e).1,
                    )
                })
            })
            .map_err(|e| errors.push(e))
            .ok();

        let mut type_list = |items: &[&'_ RawValue], field: &str, empty_kind: ParseErrorKind| {
            let mut set = BTreeSet::new();
            if items.is_empty() {
                errors.push(loc.error(
                    raw_svc,
                    empty_kind,
                    &format!("{path}/{field}"),
                    format!("service has no {field}"),
                ));
            }
            for (j, item) in items.iter().enumerate() {
                let item_path = format!("{path}/{field}/{j}");
                let tok = match loc.string(item, &item_path) {
                    Ok(t) => t,
                    Err(e) => {
                        errors.push(e);
                        continue;
                    }
                };
                match TypeName::new(&tok) {
                    Ok(t) => {
                        if !set.insert(t) {
                            errors.push(loc.error(
                                item,
                                ParseErrorKind::DuplicateTypeInList,
                                &item_path,
                                format!("type {tok:?} listed twice in {field}"),
                            ));
                        }
                    }
                    Err(e) => errors.push(loc.error(
                        item,
                        ParseErrorKind::BadToken,
                        &item_path,
                        token_error(e).1,
                    )),
                }
            }
            set.into_iter().collect::<TypeSet>()
        };
        let inputs = type_list(&svc.inputs, "inputs", ParseErrorKind::EmptyInputs);
        let outputs = type_list(&svc.outputs, "outputs", ParseErrorKind::EmptyOutputs);

        let Some(svc_name) = svc_name else { continue };
        if !seen.insert(svc_name.clone()) {
            errors.push(loc.error(
                svc.name,
                ParseErrorKind::DuplicateService,
                &format!("{path}/name"),
                format!("service {:?} is already defined", svc_name.as_str()),
            ));
            continue;
        }
        if errors.len() == before {
            services.push(Service::new(svc_name, inputs, outputs).expect("validated above"));
        }
    }

    match name {
        Some(name) if errors.is_empty() => {
            Ok(Catalog::new(name, services).expect("names checked for duplicates"))
        }
        _ => Err(errors),
    }
}

fn join(set: &TypeSet, sep: &str) -> String {
    set.iter()
        .map(TypeName::as_str)
        .collect::<Vec<_>>()
        .join(sep)
}

/// Canonical text for `catalog`: services sorted by name, type lists in
/// canonical order. Parsing the output yields an equal catalog.
pub fn serialize_catalog(catalog: &Catalog, format: Format) -> String {
    match format {
        Format::Dsl => {
            let mut out = format!("collection {}\n", catalog.name());
            for s in catalog.services() {
                out.push_str(&format!(
                    "{} : {} -> {}\n",
                    s.name(),
                    join(s.inputs(), " "),
                    join(s.outputs(), " ")
                ));
            }
            out
        }
        Format::Json => {
            let services: Vec<_> = catalog
                .services()
                .iter()
                .map(|s| {
                    serde_json::json!({
                        "name": s.name(),
                        "inputs": s.inputs(),
                        "outputs": s.outputs(),
                    })
                })
                .collect();
            let doc = serde_json::json!({ "name": catalog.name(), "services": services });
            let mut out = serde_json::to_string_pretty(&doc).expect("JSON values always serialize");
            out.push('\n');
            out
        }
    }
}
