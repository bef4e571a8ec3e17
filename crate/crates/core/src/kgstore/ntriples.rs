//! Line parser for the dump subset of N-Triples.

use super::vocab::XSD_STRING;

pub(crate) enum RawObject {
    Iri(String),
    Literal { lexical: String, datatype: String },
}

pub(crate) struct RawTriple {
    pub subject: String,
    pub predicate: String,
    pub object: RawObject,
}

struct Cursor<'a> {
    rest: &'a str,
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        self.rest = self.rest.trim_start();
    }

    fn iri(&mut self) -> Result<String, String> {
        self.skip_ws();
        let Some(body) = self.rest.strip_prefix('<') else {
            return Err(format!("expected '<' at '{}'", preview(self.rest)));
        };
        let end = body.find('>').ok_or("unterminated IRI")?;
        let iri = &body[..end];
        self.rest = &body[end + 1..];
        Ok(iri.to_string())
    }

    fn literal(&mut self) -> Result<RawObject, String> {
        let mut chars = self.rest[1..].char_indices();
        let mut lexical = String::new();
        let end = loop {
            match chars.next() {
                None => return Err("unterminated string literal".into()),
                Some((i, '"')) => break i + 1,
                Some((_, '\\')) => match chars.next() {
                    Some((_, 'n')) => lexical.push('\n'),
                    Some((_, 'r')) => lexical.push('\r'),
                    Some((_, 't')) => lexical.push('\t'),
                    Some((_, '"')) => lexical.push('"'),
                    Some((_, '\\')) => lexical.push('\\'),
                    other => return Err(format!("bad escape {:?}", other.map(|c| c.1))),
                },
                Some((_, c)) => lexical.push(c),
            }
        };
        self.rest = &self.rest[end + 1..];
        let datatype = if let Some(r) = self.rest.strip_prefix("^^") {
            self.rest = r;
            self.iri()?
        } else {
            XSD_STRING.to_string()
        };
        Ok(RawObject::Literal { lexical, datatype })
    }
}

fn preview(s: &str) -> String {
    s.chars().take(20).collect()
}

/// Parses one line; blank lines and `#` comments yield `None`.
pub(crate) fn parse_line(line: &str) -> Result<Option<RawTriple>, String> {
    let trimmed = line.trim();
    if trimmed.is_empty() || trimmed.starts_with('#') {
        return Ok(None);
    }
    let mut c = Cursor { rest: trimmed };
    let subject = c.iri()?;
    let predicate = c.iri()?;
    c.skip_ws();
    let object = if c.rest.starts_with('"') {
        c.literal()?
    } else {
        RawObject::Iri(c.iri()?)
    };
    c.skip_ws();
    if c.rest != "." {
        return Err(format!("expected '.' at end of triple, found '{}'", preview(c.rest)));
    }
    Ok(Some(RawTriple {
        subject,
        predicate,
        object,
    }))
}
