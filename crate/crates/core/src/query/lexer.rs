use super::QueryError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Var(String),
    Iri(String),
    PName(String, String),
    Name(String),
    Str(String),
    Int(i64),
    Dec(f64),
    Punct(&'static str),
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Var(v) => format!("?{v}"),
            Tok::Iri(i) => format!("<{i}>"),
            Tok::PName(p, l) => format!("{p}:{l}"),
            Tok::Name(n) => n.clone(),
            Tok::Str(s) => format!("{s:?}"),
            Tok::Int(i) => i.to_string(),
            Tok::Dec(d) => d.to_string(),
            Tok::Punct(p) => format!("'{p}'"),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

const PUNCT: [&str; 20] = [
    "&&", "||", "!=", "<=", ">=", "{", "}", "(", ")", ".", "*", ",", ";", "=", "<", ">", "+", "-", "/", "!",
];

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-'
}

pub(crate) fn lex(text: &str) -> Result<Vec<Spanned>, QueryError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let err = |line, col, message: String| QueryError::Syntax {
        line,
        col,
        found: message,
        expected: vec![],
    };
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            advance(1, &mut i, &mut col);
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let tok = if c == '?' || c == '$' {
            let n = chars[i + 1..].iter().take_while(|c| c.is_alphanumeric() || **c == '_').count();
            if n == 0 {
                return Err(err(line, col, format!("'{c}' without a variable name")));
            }
            let name: String = chars[i + 1..i + 1 + n].iter().collect();
            advance(n + 1, &mut i, &mut col);
            Tok::Var(name)
        } else if c == '<' && iri_end(&chars[i + 1..]).is_some() {
            let n = iri_end(&chars[i + 1..]).unwrap();
            let iri: String = chars[i + 1..i + 1 + n].iter().collect();
            advance(n + 2, &mut i, &mut col);
            Tok::Iri(iri)
        } else if c == '"' || c == '\'' {
            let mut s = String::new();
            let mut j = i + 1;
            loop {
                match chars.get(j) {
                    None | Some('\n') => return Err(err(line, col, "unterminated string".into())),
                    Some(&q) if q == c => break,
                    Some('\\') => {
                        let e = match chars.get(j + 1) {
                            Some('n') => '\n',
                            Some('t') => '\t',
                            Some('r') => '\r',
                            Some('"') => '"',
                            Some('\'') => '\'',
                            Some('\\') => '\\',
                            other => return Err(err(line, col + j - i, format!("bad escape {other:?}"))),
                        };
                        s.push(e);
                        j += 2;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        j += 1;
                    }
                }
            }
            advance(j + 1 - i, &mut i, &mut col);
            Tok::Str(s)
        } else if c.is_ascii_digit() {
            let int_len = chars[i..].iter().take_while(|c| c.is_ascii_digit()).count();
            let mut n = int_len;
            let frac = chars.get(i + n) == Some(&'.') && chars.get(i + n + 1).is_some_and(|c| c.is_ascii_digit());
            if frac {
                n += 1 + chars[i + n + 1..].iter().take_while(|c| c.is_ascii_digit()).count();
            }
            let s: String = chars[i..i + n].iter().collect();
            let tok = if frac {
                Tok::Dec(s.parse().map_err(|_| err(line, col, format!("bad number {s}")))?)
            } else {
                Tok::Int(s.parse().map_err(|_| err(line, col, format!("integer {s} out of range")))?)
            };
            advance(n, &mut i, &mut col);
            tok
        } else if c.is_alphabetic() || c == '_' {
            let n = chars[i..].iter().take_while(|c| is_name_char(**c)).count();
            let name: String = chars[i..i + n].iter().collect();
            if chars.get(i + n) == Some(&':') {
                let m = chars[i + n + 1..].iter().take_while(|c| is_name_char(**c)).count();
                let local: String = chars[i + n + 1..i + n + 1 + m].iter().collect();
                advance(n + 1 + m, &mut i, &mut col);
                Tok::PName(name, local)
            } else {
                advance(n, &mut i, &mut col);
                Tok::Name(name)
            }
        } else {
            let rest: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            let Some(p) = PUNCT.iter().find(|p| rest.starts_with(**p)) else {
                return Err(err(line, col, format!("unexpected character '{c}'")));
            };
            advance(p.len(), &mut i, &mut col);
            Tok::Punct(p)
        };
        out.push(Spanned {
            tok,
            line: start_line,
            col: start_col,
        });
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

/// Length of an IRI body if a `>` closes it before any character IRIs cannot hold.
fn iri_end(rest: &[char]) -> Option<usize> {
    if matches!(rest.first(), Some('?' | '$')) {
        return None;
    }
    let n = rest
        .iter()
        .take_while(|c| !c.is_whitespace() && !matches!(c, '>' | '<' | '"' | '{' | '}' | '\\'))
        .count();
    (n > 0 && rest.get(n) == Some(&'>')).then_some(n)
}
