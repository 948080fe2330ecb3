//! A Turtle subset.
//!
//! Supported: `@prefix` directives, prefixed names, absolute `<IRI>`s,
//! single-line string literals with language tags or `^^` datatypes, bare
//! integer and decimal literals, `a` for `rdf:type`, and the `;` / `,`
//! abbreviations. Blank nodes, collections, long strings and `@base` are
//! rejected with a positioned error.
//!
//! The writer is deterministic: prefixes sorted by name, triples sorted by
//! (subject, predicate, object) and grouped per subject.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use super::terms::{is_language_tag, is_local_name, is_prefix_name, vocab, Iri, Literal, PrefixMap, RdfTerm, Triple};
use super::PerspectiveGraph;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct TurtleError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TurtleDocument {
    pub prefixes: PrefixMap,
    pub triples: BTreeSet<Triple>,
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    AtWord(String),
    IriRef(String),
    PName { prefix: String, local: String },
    A,
    Str(String),
    Integer(String),
    Decimal(String),
    DoubleCaret,
    Dot,
    Semicolon,
    Comma,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::AtWord(w) => format!("`@{w}`"),
            Token::IriRef(i) => format!("`<{i}>`"),
            Token::PName { prefix, local } => format!("`{prefix}:{local}`"),
            Token::A => "`a`".into(),
            Token::Str(_) => "string literal".into(),
            Token::Integer(n) | Token::Decimal(n) => format!("number `{n}`"),
            Token::DoubleCaret => "`^^`".into(),
            Token::Dot => "`.`".into(),
            Token::Semicolon => "`;`".into(),
            Token::Comma => "`,`".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    token: Token,
    line: usize,
    column: usize,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            chars: text.chars().peekable(),
            line: 1,
            column: 1,
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error(&self, line: usize, column: usize, message: impl Into<String>) -> TurtleError {
        TurtleError {
            line,
            column,
            message: message.into(),
        }
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> String {
        let mut out = String::new();
        while let Some(c) = self.peek().filter(|&c| pred(c)) {
            out.push(c);
            self.bump();
        }
        out
    }

    fn tokenize(mut self) -> Result<Vec<Spanned>, TurtleError> {
        let mut tokens = Vec::new();
        loop {
            match self.peek() {
                None => return Ok(tokens),
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('#') => {
                    self.take_while(|c| c != '\n');
                }
                Some(_) => {
                    let (line, column) = (self.line, self.column);
                    let token = self.next_token(line, column)?;
                    tokens.push(Spanned { token, line, column });
                }
            }
        }
    }

    fn next_token(&mut self, line: usize, column: usize) -> Result<Token, TurtleError> {
        let c = self.peek().expect("caller checked for input");
        match c {
            '.' => {
                self.bump();
                if self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    let digits = self.take_while(|c| c.is_ascii_digit());
                    return Ok(Token::Decimal(format!(".{digits}")));
                }
                Ok(Token::Dot)
            }
            ';' => {
                self.bump();
                Ok(Token::Semicolon)
            }
            ',' => {
                self.bump();
                Ok(Token::Comma)
            }
            '^' => {
                self.bump();
                if self.bump() == Some('^') {
                    Ok(Token::DoubleCaret)
                } else {
                    Err(self.error(line, column, "expected `^^`"))
                }
            }
            '<' => {
                self.bump();
                let mut iri = String::new();
                loop {
                    match self.bump() {
                        Some('>') => return Ok(Token::IriRef(iri)),
                        Some('\n') | None => return Err(self.error(line, column, "unterminated IRI")),
                        Some(c) => iri.push(c),
                    }
                }
            }
            '"' => self.string(line, column),
            '\'' => Err(self.error(line, column, "single-quoted strings are not supported")),
            '@' => {
                self.bump();
                let word = self.take_while(|c| c.is_ascii_alphanumeric() || c == '-');
                if word.is_empty() {
                    return Err(self.error(line, column, "expected a directive or language tag after `@`"));
                }
                Ok(Token::AtWord(word))
            }
            '[' | ']' => Err(self.error(line, column, "blank nodes are not supported")),
            '(' | ')' => Err(self.error(line, column, "collections are not supported")),
            '_' if self.lookahead_is("_:") => Err(self.error(line, column, "blank nodes are not supported")),
            '+' | '-' | '0'..='9' => self.number(line, column),
            c if c.is_ascii_alphabetic() || c == ':' || c == '_' => self.name(line, column),
            other => Err(self.error(line, column, format!("unexpected character {other:?}"))),
        }
    }

    fn lookahead_is(&self, text: &str) -> bool {
        self.chars.clone().take(text.len()).eq(text.chars())
    }

    fn string(&mut self, line: usize, column: usize) -> Result<Token, TurtleError> {
        if self.lookahead_is("\"\"\"") {
            return Err(self.error(line, column, "long strings are not supported"));
        }
        self.bump();
        let mut value = String::new();
        loop {
            match self.bump() {
                Some('"') => return Ok(Token::Str(value)),
                Some('\\') => {
                    let escaped = match self.bump() {
                        Some('n') => '\n',
                        Some('r') => '\r',
                        Some('t') => '\t',
                        Some('"') => '"',
                        Some('\'') => '\'',
                        Some('\\') => '\\',
                        Some(other) => {
                            return Err(self.error(
                                self.line,
                                self.column.saturating_sub(1),
                                format!("unsupported escape `\\{other}`"),
                            ))
                        }
                        None => return Err(self.error(line, column, "unterminated string literal")),
                    };
                    value.push(escaped);
                }
                Some('\n') | None => return Err(self.error(line, column, "unterminated string literal")),
                Some(c) => value.push(c),
            }
        }
    }

    fn number(&mut self, line: usize, column: usize) -> Result<Token, TurtleError> {
        let mut text = String::new();
        if let Some(sign) = self.peek().filter(|c| matches!(c, '+' | '-')) {
            text.push(sign);
            self.bump();
        }
        text.push_str(&self.take_while(|c| c.is_ascii_digit()));
        let fraction_follows =
            self.peek() == Some('.') && self.chars.clone().nth(1).is_some_and(|c| c.is_ascii_digit());
        if fraction_follows {
            self.bump();
            text.push('.');
            text.push_str(&self.take_while(|c| c.is_ascii_digit()));
            return Ok(Token::Decimal(text));
        }
        if text.len() == 1 && matches!(text.as_str(), "+" | "-") {
            return Err(self.error(line, column, "expected digits after sign"));
        }
        if self.peek().is_some_and(|c| matches!(c, 'e' | 'E')) {
            return Err(self.error(line, column, "double literals are not supported"));
        }
        Ok(Token::Integer(text))
    }

    fn name(&mut self, line: usize, column: usize) -> Result<Token, TurtleError> {
        let prefix = self.take_while(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
        if self.peek() != Some(':') {
            return match prefix.as_str() {
                "a" => Ok(Token::A),
                "true" | "false" => Err(self.error(
                    line,
                    column,
                    "bare boolean literals are not supported; use \"true\"^^xsd:boolean",
                )),
                "PREFIX" | "BASE" | "prefix" | "base" => {
                    Err(self.error(line, column, format!("`{prefix}` directives are not supported")))
                }
                _ => Err(self.error(line, column, format!("unexpected bare word `{prefix}`"))),
            };
        }
        if !is_prefix_name(&prefix) {
            return Err(self.error(line, column, format!("invalid prefix `{prefix}`")));
        }
        self.bump();
        let local = self.take_while(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
        if !is_local_name(&local) {
            return Err(self.error(line, column, format!("invalid local name `{local}`")));
        }
        Ok(Token::PName { prefix, local })
    }
}

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
    prefixes: PrefixMap,
    triples: BTreeSet<Triple>,
    end: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Spanned> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Result<Spanned, TurtleError> {
        let token = self.tokens.get(self.pos).cloned().ok_or_else(|| TurtleError {
            line: self.end.0,
            column: self.end.1,
            message: "unexpected end of document".into(),
        })?;
        self.pos += 1;
        Ok(token)
    }

    fn error_at(spanned: &Spanned, message: impl Into<String>) -> TurtleError {
        TurtleError {
            line: spanned.line,
            column: spanned.column,
            message: message.into(),
        }
    }

    fn expect(&mut self, expected: Token) -> Result<(), TurtleError> {
        let got = self.next()?;
        if got.token == expected {
            Ok(())
        } else {
            Err(Self::error_at(
                &got,
                format!("expected {}, found {}", expected.describe(), got.token.describe()),
            ))
        }
    }

    fn document(mut self) -> Result<TurtleDocument, TurtleError> {
        while let Some(spanned) = self.peek().cloned() {
            match &spanned.token {
                Token::AtWord(word) if word == "prefix" => {
                    self.pos += 1;
                    self.prefix_directive()?;
                }
                Token::AtWord(word) => {
                    return Err(Self::error_at(&spanned, format!("unsupported directive `@{word}`")))
                }
                _ => self.statement()?,
            }
        }
        Ok(TurtleDocument {
            prefixes: self.prefixes,
            triples: self.triples,
        })
    }

    fn prefix_directive(&mut self) -> Result<(), TurtleError> {
        let name = self.next()?;
        let Token::PName { prefix, local } = &name.token else {
            return Err(Self::error_at(&name, "expected a prefix name like `ex:`"));
        };
        if !local.is_empty() {
            return Err(Self::error_at(&name, "prefix declaration must end with `:`"));
        }
        let iri = self.next()?;
        let Token::IriRef(namespace) = &iri.token else {
            return Err(Self::error_at(&iri, "expected `<namespace>`"));
        };
        self.prefixes
            .insert(prefix.clone(), namespace.clone())
            .map_err(|e| Self::error_at(&iri, e.to_string()))?;
        self.expect(Token::Dot)
    }

    fn iri(&self, spanned: &Spanned) -> Result<Iri, TurtleError> {
        match &spanned.token {
            Token::IriRef(value) => Iri::new(value.clone())
                .map_err(|_| Self::error_at(spanned, format!("relative or malformed IRI <{value}>"))),
            Token::PName { prefix, local } => {
                let ns = self
                    .prefixes
                    .get(prefix)
                    .ok_or_else(|| Self::error_at(spanned, format!("unknown prefix `{prefix}:`")))?;
                Iri::new(format!("{ns}{local}")).map_err(|e| Self::error_at(spanned, e.to_string()))
            }
            other => Err(Self::error_at(
                spanned,
                format!("expected an IRI, found {}", other.describe()),
            )),
        }
    }

    fn statement(&mut self) -> Result<(), TurtleError> {
        let subject_tok = self.next()?;
        let subject = self.iri(&subject_tok)?;
        loop {
            let verb_tok = self.next()?;
            let predicate = match verb_tok.token {
                Token::A => vocab::rdf_type(),
                _ => self.iri(&verb_tok)?,
            };
            loop {
                let object = self.object()?;
                self.triples
                    .insert(Triple::new(subject.clone(), predicate.clone(), object));
                if self.peek().map(|s| &s.token) == Some(&Token::Comma) {
                    self.pos += 1;
                } else {
                    break;
                }
            }
            let sep = self.next()?;
            match &sep.token {
                Token::Dot => return Ok(()),
                Token::Semicolon => {
                    // Trailing `;` before `.` is allowed.
                    while self.peek().map(|s| &s.token) == Some(&Token::Semicolon) {
                        self.pos += 1;
                    }
                    if self.peek().map(|s| &s.token) == Some(&Token::Dot) {
                        self.pos += 1;
                        return Ok(());
                    }
                }
                other => {
                    return Err(Self::error_at(
                        &sep,
                        format!("expected `.`, `;` or `,`, found {}", other.describe()),
                    ))
                }
            }
        }
    }

    fn object(&mut self) -> Result<RdfTerm, TurtleError> {
        let spanned = self.next()?;
        match &spanned.token {
            Token::IriRef(_) | Token::PName { .. } => Ok(RdfTerm::Iri(self.iri(&spanned)?)),
            Token::Integer(n) => Ok(Literal::typed(n.clone(), vocab::xsd_integer())
                .expect("xsd:integer is a plain datatype")
                .into()),
            Token::Decimal(n) => Ok(Literal::typed(n.clone(), vocab::xsd_decimal())
                .expect("xsd:decimal is a plain datatype")
                .into()),
            Token::Str(value) => {
                let value = value.clone();
                match self.peek().map(|s| s.token.clone()) {
                    Some(Token::AtWord(tag)) => {
                        let tag_tok = self.next()?;
                        if !is_language_tag(&tag) {
                            return Err(Self::error_at(&tag_tok, format!("invalid language tag `@{tag}`")));
                        }
                        Ok(Literal::lang(value, tag)
                            .map_err(|e| Self::error_at(&tag_tok, e.to_string()))?
                            .into())
                    }
                    Some(Token::DoubleCaret) => {
                        self.pos += 1;
                        let dt_tok = self.next()?;
                        let datatype = self.iri(&dt_tok)?;
                        Ok(Literal::typed(value, datatype)
                            .map_err(|e| Self::error_at(&dt_tok, e.to_string()))?
                            .into())
                    }
                    _ => Ok(Literal::string(value).into()),
                }
            }
            Token::A => Err(Self::error_at(&spanned, "`a` is only valid as a predicate")),
            other => Err(Self::error_at(
                &spanned,
                format!("expected an object, found {}", other.describe()),
            )),
        }
    }
}

pub fn parse_turtle(text: &str) -> Result<TurtleDocument, TurtleError> {
    parse_turtle_with(text, &PrefixMap::new())
}

/// Parses with `prefixes` pre-declared; in-document directives override them.
pub fn parse_turtle_with(text: &str, prefixes: &PrefixMap) -> Result<TurtleDocument, TurtleError> {
    let end = text
        .lines()
        .enumerate()
        .last()
        .map_or((1, 1), |(i, l)| (i + 1, l.chars().count() + 1));
    let tokens = Lexer::new(text).tokenize()?;
    Parser {
        tokens,
        pos: 0,
        prefixes: prefixes.clone(),
        triples: BTreeSet::new(),
        end,
    }
    .document()
}

/// The graph's ABox, with its prefix table as `@prefix` lines.
pub fn serialize_turtle(graph: &PerspectiveGraph) -> String {
    write_turtle(graph.prefixes(), graph.abox())
}

pub fn write_turtle<'a, I>(prefixes: &PrefixMap, triples: I) -> String
where
    I: IntoIterator<Item = &'a Triple>,
{
    let mut sorted: Vec<&Triple> = triples.into_iter().collect();
    sorted.sort();
    sorted.dedup();

    let mut out = String::new();
    for (prefix, ns) in prefixes.iter() {
        let _ = writeln!(out, "@prefix {prefix}: <{ns}> .");
    }

    let mut i = 0;
    while i < sorted.len() {
        let subject = &sorted[i].subject;
        let end = sorted[i..]
            .iter()
            .position(|t| &t.subject != subject)
            .map_or(sorted.len(), |n| i + n);
        out.push('\n');
        out.push_str(&iri_token(prefixes, subject));

        let group = &sorted[i..end];
        let mut j = 0;
        while j < group.len() {
            let predicate = &group[j].predicate;
            let pend = group[j..]
                .iter()
                .position(|t| &t.predicate != predicate)
                .map_or(group.len(), |n| j + n);
            if j > 0 {
                out.push_str(" ;\n   ");
            }
            out.push(' ');
            if *predicate == vocab::rdf_type() {
                out.push('a');
            } else {
                out.push_str(&iri_token(prefixes, predicate));
            }
            let objects: Vec<String> = group[j..pend].iter().map(|t| term_token(prefixes, &t.object)).collect();
            out.push(' ');
            out.push_str(&objects.join(" , "));
            j = pend;
        }
        out.push_str(" .\n");
        i = end;
    }
    out
}

fn iri_token(prefixes: &PrefixMap, iri: &Iri) -> String {
    prefixes.compact(iri).unwrap_or_else(|| format!("<{}>", iri.as_str()))
}

fn term_token(prefixes: &PrefixMap, term: &RdfTerm) -> String {
    match term {
        RdfTerm::Iri(iri) => iri_token(prefixes, iri),
        RdfTerm::Literal(lit) => literal_token(prefixes, lit),
    }
}

fn literal_token(prefixes: &PrefixMap, lit: &Literal) -> String {
    let lexical = lit.lexical();
    if let Some(tag) = lit.language() {
        return format!("{}@{tag}", quote(lexical));
    }
    let datatype = lit.datatype();
    if *datatype == vocab::xsd_string() {
        quote(lexical)
    } else if (*datatype == vocab::xsd_integer() && is_bare_integer(lexical))
        || (*datatype == vocab::xsd_decimal() && is_bare_decimal(lexical))
    {
        lexical.to_owned()
    } else {
        format!("{}^^{}", quote(lexical), iri_token(prefixes, datatype))
    }
}

fn is_bare_integer(s: &str) -> bool {
    let digits = s.strip_prefix(['+', '-']).unwrap_or(s);
    !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit())
}

fn is_bare_decimal(s: &str) -> bool {
    let body = s.strip_prefix(['+', '-']).unwrap_or(s);
    match body.split_once('.') {
        Some((int, frac)) => {
            int.chars().all(|c| c.is_ascii_digit()) && !frac.is_empty() && frac.chars().all(|c| c.is_ascii_digit())
        }
        None => false,
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}
