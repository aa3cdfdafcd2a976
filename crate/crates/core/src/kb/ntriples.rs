//! Line-level parser for the N-Triples subset found in Freebase and DBpedia
//! dumps: IRIs, prefixed names, blank nodes, and literals with an optional
//! language tag or datatype.

use super::types::Literal;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    /// IRI (angle brackets removed) or prefixed name, verbatim.
    Iri(String),
    Blank(String),
    Literal(Literal),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Statement {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
}

/// Parses one line. `Ok(None)` for blank lines and comments.
pub fn parse_line(line: &str) -> Result<Option<Statement>, String> {
    let mut cur = Cursor { s: line, pos: 0 };
    cur.skip_ws();
    if cur.at_end() || cur.peek() == Some('#') {
        return Ok(None);
    }
    let subject = cur.term(false)?;
    if matches!(subject, Term::Literal(_)) {
        return Err("literal in subject position".into());
    }
    cur.skip_ws();
    let predicate = cur.term(false)?;
    if !matches!(predicate, Term::Iri(_)) {
        return Err("predicate must be an IRI or prefixed name".into());
    }
    cur.skip_ws();
    let object = cur.term(true)?;
    cur.skip_ws();
    if cur.peek() != Some('.') {
        return Err(format!("expected '.' at column {}", cur.pos + 1));
    }
    cur.pos += 1;
    cur.skip_ws();
    if !cur.at_end() && cur.peek() != Some('#') {
        return Err(format!("trailing content at column {}", cur.pos + 1));
    }
    Ok(Some(Statement {
        subject,
        predicate,
        object,
    }))
}

/// Local name of a datatype IRI: `http://www.w3.org/2001/XMLSchema#date` and
/// `xsd:date` both give `date`.
pub fn datatype_local_name(iri: &str) -> &str {
    iri.rsplit(['#', '/', ':']).next().unwrap_or(iri)
}

struct Cursor<'a> {
    s: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn at_end(&self) -> bool {
        self.pos >= self.s.len()
    }

    fn peek(&self) -> Option<char> {
        self.s[self.pos..].chars().next()
    }

    fn rest(&self) -> &'a str {
        &self.s[self.pos..]
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c == ' ' || c == '\t' || c == '\r' || c == '\n' {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn term(&mut self, object_position: bool) -> Result<Term, String> {
        match self.peek() {
            Some('<') => self.iri().map(Term::Iri),
            Some('"') if object_position => self.literal().map(Term::Literal),
            Some('"') => Err("literal outside object position".into()),
            Some('_') if self.rest().starts_with("_:") => {
                let tok = self.bare_token(object_position);
                if tok.len() <= 2 {
                    return Err("empty blank node label".into());
                }
                Ok(Term::Blank(tok.to_string()))
            }
            Some(_) => {
                let tok = self.bare_token(object_position);
                if !tok.contains(':') {
                    return Err(format!("unrecognised term '{tok}'"));
                }
                Ok(Term::Iri(tok.to_string()))
            }
            None => Err("unexpected end of line".into()),
        }
    }

    /// Whitespace-delimited token. In object position a trailing `.` that
    /// ends the statement is left for the caller.
    fn bare_token(&mut self, object_position: bool) -> &'a str {
        let rest = self.rest();
        let len = rest.find(|c: char| c.is_whitespace()).unwrap_or(rest.len());
        let mut tok = &rest[..len];
        if object_position && tok.len() > 1 && tok.ends_with('.') {
            let after = rest[len..].trim_start();
            if after.is_empty() || after.starts_with('#') {
                tok = &tok[..tok.len() - 1];
            }
        }
        self.pos += tok.len();
        tok
    }

    fn iri(&mut self) -> Result<String, String> {
        self.pos += 1;
        let rest = self.rest();
        let end = rest.find('>').ok_or("unterminated IRI")?;
        let raw = &rest[..end];
        self.pos += end + 1;
        if raw.is_empty() {
            return Err("empty IRI".into());
        }
        if raw.contains(|c: char| c.is_whitespace() || c == '<' || c == '"') {
            return Err(format!("invalid character in IRI '{raw}'"));
        }
        if raw.contains('\\') {
            unescape(raw)
        } else {
            Ok(raw.to_string())
        }
    }

    fn literal(&mut self) -> Result<Literal, String> {
        self.pos += 1;
        let rest = self.rest();
        let mut end = None;
        let mut escaped = false;
        for (i, c) in rest.char_indices() {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                end = Some(i);
                break;
            }
        }
        let end = end.ok_or("unterminated literal")?;
        let text = unescape(&rest[..end])?;
        self.pos += end + 1;
        let mut lit = Literal::plain(text);
        if self.rest().starts_with('@') {
            self.pos += 1;
            let rest = self.rest();
            let len = rest
                .find(|c: char| !(c.is_ascii_alphanumeric() || c == '-'))
                .unwrap_or(rest.len());
            if len == 0 {
                return Err("empty language tag".into());
            }
            lit.lang = Some(rest[..len].to_string());
            self.pos += len;
        } else if self.rest().starts_with("^^") {
            self.pos += 2;
            let dt = match self.peek() {
                Some('<') => self.iri()?,
                _ => {
                    let tok = self.bare_token(true);
                    if !tok.contains(':') {
                        return Err(format!("bad datatype '{tok}'"));
                    }
                    tok.to_string()
                }
            };
            lit.datatype = Some(datatype_local_name(&dt).to_string());
        }
        Ok(lit)
    }
}

fn unescape(s: &str) -> Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('b') => out.push('\u{8}'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('f') => out.push('\u{c}'),
            Some('"') => out.push('"'),
            Some('\'') => out.push('\''),
            Some('\\') => out.push('\\'),
            Some(u @ ('u' | 'U')) => {
                let width = if u == 'u' { 4 } else { 8 };
                let hex: String = chars.by_ref().take(width).collect();
                if hex.len() != width {
                    return Err("truncated unicode escape".into());
                }
                let code = u32::from_str_radix(&hex, 16).map_err(|e| e.to_string())?;
                out.push(char::from_u32(code).ok_or("invalid code point")?);
            }
            other => return Err(format!("bad escape {other:?}")),
        }
    }
    Ok(out)
}
