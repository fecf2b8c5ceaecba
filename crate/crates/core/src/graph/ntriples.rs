//! Line-oriented N-Triples parser.
//!
//! Each non-blank, non-comment line holds exactly one statement. Blank nodes
//! are recognised but never produced: the typing pipeline only consumes IRIs,
//! so a blank node is an error in strict mode and a skipped line otherwise.

use std::io::BufRead;

use thiserror::Error;

use super::term::{is_forbidden_iri_char, Iri, Literal, Object, Triple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// Abort on the first malformed line.
    #[default]
    Strict,
    /// Skip malformed lines and record them.
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("missing terminal `.`")]
    MissingDot,
    #[error("unterminated IRI (unbalanced `<>`)")]
    UnterminatedIri,
    #[error("unterminated string literal (unbalanced quotes)")]
    UnterminatedLiteral,
    #[error("invalid IRI: {0}")]
    InvalidIri(String),
    #[error("invalid escape sequence")]
    InvalidEscape,
    #[error("invalid language tag")]
    InvalidLanguageTag,
    #[error("blank nodes are not supported")]
    BlankNode,
    #[error("expected {expected}, found {found}")]
    Unexpected {
        expected: &'static str,
        found: String,
    },
    #[error("trailing content after `.`")]
    TrailingContent,
    #[error("I/O error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParseOutcome {
    pub triples: Vec<Triple>,
    /// Lines skipped in lenient mode, in file order.
    pub skipped: Vec<ParseError>,
}

/// Parses a complete N-Triples stream.
///
/// In strict mode the first malformed line is returned as an error. In
/// lenient mode malformed lines (including blank-node statements) are
/// collected in [`ParseOutcome::skipped`].
pub fn parse_ntriples<R: BufRead>(input: R, mode: ParseMode) -> Result<ParseOutcome, ParseError> {
    let mut outcome = ParseOutcome::default();
    for item in NTriplesReader::new(input) {
        match item {
            Ok(triple) => outcome.triples.push(triple),
            Err(err) if matches!(err.kind, ParseErrorKind::Io(_)) => return Err(err),
            Err(err) => match mode {
                ParseMode::Strict => return Err(err),
                ParseMode::Lenient => {
                    log::debug!("skipping malformed statement: {err}");
                    outcome.skipped.push(err);
                }
            },
        }
    }
    Ok(outcome)
}

pub fn parse_str(input: &str, mode: ParseMode) -> Result<ParseOutcome, ParseError> {
    parse_ntriples(input.as_bytes(), mode)
}

/// Streaming iterator over the statements of an N-Triples source.
pub struct NTriplesReader<R> {
    input: R,
    buf: String,
    line: usize,
    done: bool,
}

impl<R: BufRead> NTriplesReader<R> {
    pub fn new(input: R) -> Self {
        NTriplesReader {
            input,
            buf: String::new(),
            line: 0,
            done: false,
        }
    }
}

impl<R: BufRead> Iterator for NTriplesReader<R> {
    type Item = Result<Triple, ParseError>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            self.buf.clear();
            self.line += 1;
            match self.input.read_line(&mut self.buf) {
                Ok(0) => self.done = true,
                Ok(_) => match parse_line(self.buf.trim_end_matches(['\n', '\r']), self.line) {
                    Ok(Some(triple)) => return Some(Ok(triple)),
                    Ok(None) => continue,
                    Err(err) => return Some(Err(err)),
                },
                Err(e) => {
                    self.done = true;
                    return Some(Err(ParseError {
                        line: self.line,
                        column: 0,
                        kind: ParseErrorKind::Io(e.to_string()),
                    }));
                }
            }
        }
        None
    }
}

/// Parses one line. Returns `Ok(None)` for blank and comment lines.
pub fn parse_line(line: &str, line_number: usize) -> Result<Option<Triple>, ParseError> {
    let mut cursor = Cursor {
        chars: line.char_indices().peekable(),
        line: line_number,
        column: 1,
    };
    cursor.skip_ws();
    match cursor.peek() {
        None | Some('#') => return Ok(None),
        _ => {}
    }

    let subject = match cursor.peek() {
        Some('<') => cursor.iri()?,
        Some('_') => return Err(cursor.error(ParseErrorKind::BlankNode)),
        _ => return Err(cursor.unexpected("subject IRI")),
    };
    cursor.skip_ws();
    let predicate = match cursor.peek() {
        Some('<') => cursor.iri()?,
        _ => return Err(cursor.unexpected("predicate IRI")),
    };
    cursor.skip_ws();
    let object = match cursor.peek() {
        Some('<') => Object::Iri(cursor.iri()?),
        Some('"') => Object::Literal(cursor.literal()?),
        Some('_') => return Err(cursor.error(ParseErrorKind::BlankNode)),
        _ => return Err(cursor.unexpected("object")),
    };
    cursor.skip_ws();
    match cursor.bump() {
        Some('.') => {}
        _ => return Err(cursor.error(ParseErrorKind::MissingDot)),
    }
    cursor.skip_ws();
    match cursor.peek() {
        None | Some('#') => Ok(Some(Triple::new(subject, predicate, object))),
        _ => Err(cursor.error(ParseErrorKind::TrailingContent)),
    }
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    line: usize,
    column: usize,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next().map(|(_, c)| c);
        if c.is_some() {
            self.column += 1;
        }
        c
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(' ' | '\t' | '\r' | '\n')) {
            self.bump();
        }
    }

    fn error(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            line: self.line,
            column: self.column,
            kind,
        }
    }

    fn unexpected(&mut self, expected: &'static str) -> ParseError {
        let found = match self.peek() {
            Some(c) => format!("`{c}`"),
            None => "end of line".to_string(),
        };
        self.error(ParseErrorKind::Unexpected { expected, found })
    }

    fn iri(&mut self) -> Result<Iri, ParseError> {
        let start = self.error(ParseErrorKind::UnterminatedIri);
        self.bump();
        let mut value = String::new();
        loop {
            match self.bump() {
                None | Some('\n') | Some('\r') => return Err(start),
                Some('>') => break,
                Some('\\') => match self.bump() {
                    Some('u') => value.push(self.hex_escape(4)?),
                    Some('U') => value.push(self.hex_escape(8)?),
                    _ => return Err(self.error(ParseErrorKind::InvalidEscape)),
                },
                Some('<' | ' ' | '\t') => return Err(start),
                Some(c) if is_forbidden_iri_char(c) => {
                    return Err(self.error(ParseErrorKind::InvalidIri(format!(
                        "forbidden character {c:?}"
                    ))))
                }
                Some(c) => value.push(c),
            }
        }
        Iri::new(value).map_err(|e| ParseError {
            kind: ParseErrorKind::InvalidIri(e.to_string()),
            ..start
        })
    }

    fn literal(&mut self) -> Result<Literal, ParseError> {
        let start = self.error(ParseErrorKind::UnterminatedLiteral);
        self.bump();
        let mut lexical = String::new();
        loop {
            match self.bump() {
                None | Some('\n') | Some('\r') => return Err(start),
                Some('"') => break,
                Some('\\') => {
                    let c = match self.bump() {
                        Some('t') => '\t',
                        Some('b') => '\u{8}',
                        Some('n') => '\n',
                        Some('r') => '\r',
                        Some('f') => '\u{c}',
                        Some('"') => '"',
                        Some('\'') => '\'',
                        Some('\\') => '\\',
                        Some('u') => self.hex_escape(4)?,
                        Some('U') => self.hex_escape(8)?,
                        _ => return Err(self.error(ParseErrorKind::InvalidEscape)),
                    };
                    lexical.push(c);
                }
                Some(c) => lexical.push(c),
            }
        }
        let mut literal = Literal::simple(lexical);
        match self.peek() {
            Some('@') => {
                self.bump();
                literal.language = Some(self.language_tag()?);
            }
            Some('^') => {
                self.bump();
                if self.bump() != Some('^') || self.peek() != Some('<') {
                    return Err(self.unexpected("`^^<datatype>`"));
                }
                literal.datatype = Some(self.iri()?);
            }
            _ => {}
        }
        Ok(literal)
    }

    fn language_tag(&mut self) -> Result<String, ParseError> {
        let mut tag = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '-' {
                tag.push(c);
                self.bump();
            } else {
                break;
            }
        }
        let mut parts = tag.split('-');
        let primary_ok = parts
            .next()
            .is_some_and(|p| !p.is_empty() && p.chars().all(|c| c.is_ascii_alphabetic()));
        if !primary_ok || parts.any(|p| p.is_empty()) {
            return Err(self.error(ParseErrorKind::InvalidLanguageTag));
        }
        Ok(tag)
    }

    fn hex_escape(&mut self, digits: usize) -> Result<char, ParseError> {
        let mut code = 0u32;
        for _ in 0..digits {
            let d = self
                .bump()
                .and_then(|c| c.to_digit(16))
                .ok_or_else(|| self.error(ParseErrorKind::InvalidEscape))?;
            code = code * 16 + d;
        }
        char::from_u32(code).ok_or_else(|| self.error(ParseErrorKind::InvalidEscape))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iri(s: &str) -> Iri {
        Iri::new(s).unwrap()
    }

    #[test]
    fn minimal_line() {
        let out = parse_str("<http://a> <http://b> <http://c> .\n", ParseMode::Strict).unwrap();
        assert_eq!(
            out.triples,
            vec![Triple::new(iri("http://a"), iri("http://b"), Object::Iri(iri("http://c")))]
        );
    }

    #[test]
    fn empty_input() {
        let out = parse_str("", ParseMode::Strict).unwrap();
        assert!(out.triples.is_empty());
        assert!(out.skipped.is_empty());
    }

    #[test]
    fn literal_object() {
        let out = parse_str(r#"<http://a> <http://b> "Ulm" ."#, ParseMode::Strict).unwrap();
        assert_eq!(out.triples[0].object, Object::Literal(Literal::simple("Ulm")));
    }

    #[test]
    fn missing_dot_reports_line() {
        let err = parse_str("<http://a> <http://b> <http://c>", ParseMode::Strict).unwrap_err();
        assert_eq!(err.line, 1);
        assert_eq!(err.kind, ParseErrorKind::MissingDot);
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let src = "# header\n\n   \n<http://a> <http://b> <http://c> . # trailing\n";
        let out = parse_str(src, ParseMode::Strict).unwrap();
        assert_eq!(out.triples.len(), 1);
    }

    #[test]
    fn language_and_datatype_are_retained() {
        let src = concat!(
            "<http://a> <http://b> \"Ulm\"@de-DE .\n",
            "<http://a> <http://b> \"5\"^^<http://www.w3.org/2001/XMLSchema#integer> .\n",
        );
        let out = parse_str(src, ParseMode::Strict).unwrap();
        let Object::Literal(l0) = &out.triples[0].object else { panic!() };
        assert_eq!(l0.language.as_deref(), Some("de-DE"));
        let Object::Literal(l1) = &out.triples[1].object else { panic!() };
        assert_eq!(
            l1.datatype.as_ref().map(Iri::as_str),
            Some("http://www.w3.org/2001/XMLSchema#integer")
        );
    }

    #[test]
    fn escapes_decode() {
        let src = r#"<http://a> <http://b> "x\"y\\zé\n" ."#;
        let out = parse_str(src, ParseMode::Strict).unwrap();
        assert_eq!(out.triples[0].object, Object::Literal(Literal::simple("x\"y\\z\u{e9}\n")));
        let src = r"<http://a/é> <http://b> <http://c> .";
        let out = parse_str(src, ParseMode::Strict).unwrap();
        assert_eq!(out.triples[0].subject.as_str(), "http://a/\u{e9}");
    }

    #[test]
    fn blank_nodes_strict_and_lenient() {
        let src = "_:b0 <http://b> <http://c> .\n<http://a> <http://b> _:x .\n<http://a> <http://b> <http://c> .\n";
        let err = parse_str(src, ParseMode::Strict).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::BlankNode);
        let out = parse_str(src, ParseMode::Lenient).unwrap();
        assert_eq!(out.triples.len(), 1);
        assert_eq!(out.skipped.len(), 2);
        assert_eq!(out.skipped[1].line, 2);
    }

    #[test]
    fn malformed_lines() {
        let cases = [
            ("<http://a <http://b> <http://c> .", ParseErrorKind::UnterminatedIri),
            ("<http://a> <http://b> \"open .", ParseErrorKind::UnterminatedLiteral),
            ("<http://a> <http://b> <http://c> . extra", ParseErrorKind::TrailingContent),
            ("<http://a> <http://b> \"x\\q\" .", ParseErrorKind::InvalidEscape),
            ("<http://a> <http://b> \"x\"@ .", ParseErrorKind::InvalidLanguageTag),
        ];
        for (line, kind) in cases {
            let err = parse_str(line, ParseMode::Strict).unwrap_err();
            assert_eq!(err.kind, kind, "{line}");
        }
        let err = parse_str("<rel> <http://b> <http://c> .", ParseMode::Strict).unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::InvalidIri(_)));
    }

    #[test]
    fn lenient_counts_and_continues() {
        let src = "<http://a> <http://b> <http://c> .\nbroken\n<http://a> <http://b> <http://d> .\n";
        let out = parse_str(src, ParseMode::Lenient).unwrap();
        assert_eq!(out.triples.len(), 2);
        assert_eq!(out.skipped.len(), 1);
        assert_eq!(out.skipped[0].line, 2);
    }
}
