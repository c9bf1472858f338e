//! A forgiving reader for the Python-literal fragments language models return:
//! dictionaries, lists and tuples of quoted strings, integers and bare tokens.
//!
//! Either quote style is accepted, trailing commas are ignored, and an
//! unescaped apostrophe inside a single-quoted string is kept when the quote
//! is not followed by a delimiter (`'Wizard's Tower'`).

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Str(String),
    Int(i64),
    Float(f64),
    /// An unquoted token such as `H` or `#`.
    Bare(String),
    List(Vec<Literal>),
    Dict(Vec<(Literal, Literal)>),
}

impl Literal {
    /// Text content of strings, bare tokens and numbers.
    pub fn as_text(&self) -> Option<String> {
        match self {
            Literal::Str(s) | Literal::Bare(s) => Some(s.clone()),
            Literal::Int(i) => Some(i.to_string()),
            Literal::Float(f) => Some(f.to_string()),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Literal::Int(i) => Some(*i),
            Literal::Float(f) if f.fract() == 0.0 => Some(*f as i64),
            Literal::Str(s) | Literal::Bare(s) => s.trim().parse().ok(),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Literal]> {
        match self {
            Literal::List(items) => Some(items),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiteralError {
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for LiteralError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at offset {}", self.message, self.offset)
    }
}

impl std::error::Error for LiteralError {}

/// Parses the first `{ … }` fragment in `text`. `None` when there is no `{`.
pub fn find_dict(text: &str) -> Option<Result<Vec<(Literal, Literal)>, LiteralError>> {
    let start = text.find('{')?;
    Some(parse_at(text, start).map(|lit| match lit {
        Literal::Dict(entries) => entries,
        _ => unreachable!("parse_at on '{{' always yields a dict"),
    }))
}

/// Parses the first `[ … ]` fragment in `text`. `None` when there is no `[`.
pub fn find_list(text: &str) -> Option<Result<Vec<Literal>, LiteralError>> {
    let start = text.find('[')?;
    Some(parse_at(text, start).map(|lit| match lit {
        Literal::List(items) => items,
        _ => unreachable!("parse_at on '[' always yields a list"),
    }))
}

fn parse_at(text: &str, start: usize) -> Result<Literal, LiteralError> {
    let mut parser = Parser {
        chars: text.char_indices().collect(),
        pos: 0,
    };
    parser.pos = parser
        .chars
        .iter()
        .position(|&(off, _)| off == start)
        .unwrap_or(parser.chars.len());
    parser.value()
}

/// Renders a string as a single-quoted literal, escaping as needed.
pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for ch in s.chars() {
        match ch {
            '\'' => out.push_str("\\'"),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(ch),
        }
    }
    out.push('\'');
    out
}

struct Parser {
    chars: Vec<(usize, char)>,
    pos: usize,
}

const DELIMS: &[char] = &[',', ':', '[', ']', '{', '}', '(', ')'];

impl Parser {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|&(_, c)| c)
    }

    fn offset(&self) -> usize {
        self.chars
            .get(self.pos)
            .map(|&(o, _)| o)
            .unwrap_or_else(|| self.chars.last().map(|&(o, c)| o + c.len_utf8()).unwrap_or(0))
    }

    fn err(&self, message: impl Into<String>) -> LiteralError {
        LiteralError {
            offset: self.offset(),
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn expect(&mut self, want: char) -> Result<(), LiteralError> {
        self.skip_ws();
        match self.peek() {
            Some(c) if c == want => {
                self.pos += 1;
                Ok(())
            }
            Some(c) => Err(self.err(format!("expected '{want}', found '{c}'"))),
            None => Err(self.err(format!("expected '{want}', found end of input"))),
        }
    }

    fn value(&mut self) -> Result<Literal, LiteralError> {
        self.skip_ws();
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some('{') => self.dict(),
            Some('[') => self.sequence('[', ']'),
            Some('(') => self.sequence('(', ')'),
            Some(q @ ('\'' | '"')) => self.string(q).map(Literal::Str),
            Some(c) if DELIMS.contains(&c) => Err(self.err(format!("unexpected '{c}'"))),
            Some(_) => Ok(self.bare()),
        }
    }

    fn dict(&mut self) -> Result<Literal, LiteralError> {
        self.expect('{')?;
        let mut entries = Vec::new();
        loop {
            self.skip_ws();
            match self.peek() {
                Some('}') => {
                    self.pos += 1;
                    return Ok(Literal::Dict(entries));
                }
                None => return Err(self.err("unterminated dictionary")),
                _ => {}
            }
            let key = self.value()?;
            self.expect(':')?;
            let value = self.value()?;
            entries.push((key, value));
            self.skip_ws();
            match self.peek() {
                Some(',') => self.pos += 1,
                Some('}') => {}
                Some(c) => return Err(self.err(format!("expected ',' or '}}', found '{c}'"))),
                None => return Err(self.err("unterminated dictionary")),
            }
        }
    }

    fn sequence(&mut self, open: char, close: char) -> Result<Literal, LiteralError> {
        self.expect(open)?;
        let mut items = Vec::new();
        loop {
            self.skip_ws();
            match self.peek() {
                Some(c) if c == close => {
                    self.pos += 1;
                    return Ok(Literal::List(items));
                }
                None => return Err(self.err("unterminated list")),
                _ => {}
            }
            items.push(self.value()?);
            self.skip_ws();
            match self.peek() {
                Some(',') => self.pos += 1,
                Some(c) if c == close => {}
                Some(c) => return Err(self.err(format!("expected ',' or '{close}', found '{c}'"))),
                None => return Err(self.err("unterminated list")),
            }
        }
    }

    fn string(&mut self, quote: char) -> Result<String, LiteralError> {
        let start = self.offset();
        self.pos += 1;
        let mut out = String::new();
        while let Some(c) = self.peek() {
            self.pos += 1;
            match c {
                '\\' => {
                    let Some(esc) = self.peek() else { break };
                    self.pos += 1;
                    out.push(match esc {
                        'n' => '\n',
                        't' => '\t',
                        other => other,
                    });
                }
                c if c == quote => {
                    if self.closes_here() {
                        return Ok(out);
                    }
                    out.push(c);
                }
                c => out.push(c),
            }
        }
        Err(LiteralError {
            offset: start,
            message: "unterminated string".into(),
        })
    }

    /// True when the quote just consumed is followed by a delimiter or the end.
    fn closes_here(&self) -> bool {
        let rest = self.chars[self.pos..].iter().map(|&(_, c)| c);
        for c in rest {
            if c.is_whitespace() {
                continue;
            }
            return DELIMS.contains(&c);
        }
        true
    }

    fn bare(&mut self) -> Literal {
        let begin = self.pos;
        while let Some(c) = self.peek() {
            if c.is_whitespace() || DELIMS.contains(&c) {
                break;
            }
            self.pos += 1;
        }
        let token: String = self.chars[begin..self.pos].iter().map(|&(_, c)| c).collect();
        if let Ok(i) = token.parse::<i64>() {
            Literal::Int(i)
        } else if let Ok(f) = token.parse::<f64>() {
            if token.chars().any(|c| c.is_ascii_digit()) {
                return Literal::Float(f);
            }
            Literal::Bare(token)
        } else {
            Literal::Bare(token)
        }
    }
}
