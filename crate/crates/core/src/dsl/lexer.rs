use chrono::NaiveDate;

use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Str(String),
    Int(i64),
    Date(NaiveDate),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Semi,
    Arrow,
    FatArrow,
    Op(&'static str),
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Str(s) => format!("string '{s}'"),
            Tok::Int(n) => format!("integer {n}"),
            Tok::Date(d) => format!("date @{d}"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::FatArrow => "`=>`".into(),
            Tok::Op(op) => format!("`{op}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl Cursor<'_> {
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

    fn error(&self, line: usize, column: usize, found: impl Into<String>) -> ParseError {
        ParseError {
            line,
            column,
            found: found.into(),
            expected: Vec::new(),
        }
    }
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut cur = Cursor {
        chars: src.chars().peekable(),
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();
    loop {
        while let Some(c) = cur.peek() {
            if c.is_whitespace() {
                cur.bump();
            } else if c == '#' {
                while let Some(c) = cur.peek() {
                    if c == '\n' {
                        break;
                    }
                    cur.bump();
                }
            } else {
                break;
            }
        }
        let (line, column) = (cur.line, cur.column);
        let Some(c) = cur.bump() else {
            out.push(Spanned {
                tok: Tok::Eof,
                line,
                column,
            });
            return Ok(out);
        };
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            ',' => Tok::Comma,
            ':' => Tok::Colon,
            ';' => Tok::Semi,
            '=' if cur.peek() == Some('>') => {
                cur.bump();
                Tok::FatArrow
            }
            '=' => Tok::Op("="),
            '!' if cur.peek() == Some('=') => {
                cur.bump();
                Tok::Op("!=")
            }
            '<' if cur.peek() == Some('=') => {
                cur.bump();
                Tok::Op("<=")
            }
            '<' => Tok::Op("<"),
            '>' if cur.peek() == Some('=') => {
                cur.bump();
                Tok::Op(">=")
            }
            '>' => Tok::Op(">"),
            '-' if cur.peek() == Some('>') => {
                cur.bump();
                Tok::Arrow
            }
            '-' if cur.peek().is_some_and(|c| c.is_ascii_digit()) => {
                let digits = take_while(&mut cur, |c| c.is_ascii_digit());
                let n: i64 = format!("-{digits}")
                    .parse()
                    .map_err(|_| cur.error(line, column, format!("-{digits}")))?;
                Tok::Int(n)
            }
            '\'' => {
                let mut s = String::new();
                loop {
                    match cur.bump() {
                        None => return Err(cur.error(line, column, "unterminated string")),
                        Some('\'') => break,
                        Some('\\') => match cur.bump() {
                            Some(e @ ('\'' | '\\')) => s.push(e),
                            _ => return Err(cur.error(line, column, "invalid escape")),
                        },
                        Some(c) => s.push(c),
                    }
                }
                Tok::Str(s)
            }
            '@' => {
                let text = take_while(&mut cur, |c| c.is_ascii_digit() || c == '-');
                let date = NaiveDate::parse_from_str(&text, "%Y-%m-%d")
                    .ok()
                    .filter(|_| text.len() == 10)
                    .ok_or_else(|| cur.error(line, column, format!("invalid date @{text}")))?;
                Tok::Date(date)
            }
            c if c.is_ascii_digit() => {
                let rest = take_while(&mut cur, |c| c.is_ascii_digit());
                let text = format!("{c}{rest}");
                let n: i64 = text
                    .parse()
                    .map_err(|_| cur.error(line, column, text.clone()))?;
                Tok::Int(n)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::from(c);
                loop {
                    match cur.peek() {
                        Some(c) if c.is_ascii_alphanumeric() || c == '_' => {
                            s.push(c);
                            cur.bump();
                        }
                        // hyphenated identifiers such as `V-EX`; `A01->x` still lexes an arrow
                        Some('-') => {
                            let mut look = cur.chars.clone();
                            look.next();
                            if look.next().is_some_and(|c| c.is_ascii_alphanumeric()) {
                                s.push('-');
                                cur.bump();
                            } else {
                                break;
                            }
                        }
                        _ => break,
                    }
                }
                Tok::Ident(s)
            }
            other => return Err(cur.error(line, column, format!("unexpected character `{other}`"))),
        };
        out.push(Spanned { tok, line, column });
    }
}

fn take_while(cur: &mut Cursor<'_>, pred: impl Fn(char) -> bool) -> String {
    let mut s = String::new();
    while let Some(c) = cur.peek() {
        if !pred(c) {
            break;
        }
        s.push(c);
        cur.bump();
    }
    s
}
