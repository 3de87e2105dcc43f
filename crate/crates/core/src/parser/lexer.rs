use crate::error::{ParseError, Pos};

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Number(f64, String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Implies,
    Iff,
    Caret,
    Bang,
    Dot,
    Star,
    Eq,
    Minus,
    Newline,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(_, s) => format!("number `{s}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Implies => "`=>`".into(),
            Tok::Iff => "`<=>`".into(),
            Tok::Caret => "`^`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Star => "`*`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Newline => "end of line".into(),
            Tok::Eof => "end of input".into(),
        }
    }

    /// Source spelling, used to rebuild rule text.
    pub fn text(&self) -> String {
        match self {
            Tok::Ident(s) | Tok::Number(_, s) => s.clone(),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
            Tok::LBrace => "{".into(),
            Tok::RBrace => "}".into(),
            Tok::Comma => ",".into(),
            Tok::Implies => "=>".into(),
            Tok::Iff => "<=>".into(),
            Tok::Caret => "^".into(),
            Tok::Bang => "!".into(),
            Tok::Dot => ".".into(),
            Tok::Star => "*".into(),
            Tok::Eq => "=".into(),
            Tok::Minus => "-".into(),
            Tok::Newline | Tok::Eof => String::new(),
        }
    }

    pub fn is_or(&self) -> bool {
        matches!(self, Tok::Ident(s) if s == "v")
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

pub fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let (mut line, mut col) = (1usize, 1usize);

    macro_rules! push {
        ($tok:expr, $pos:expr) => {
            out.push(Token { tok: $tok, pos: $pos })
        };
    }

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        match c {
            '\n' => {
                push!(Tok::Newline, pos);
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {}
            '/' if chars.get(i + 1) == Some(&'/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '(' => push!(Tok::LParen, pos),
            ')' => push!(Tok::RParen, pos),
            '{' => push!(Tok::LBrace, pos),
            '}' => push!(Tok::RBrace, pos),
            ',' => push!(Tok::Comma, pos),
            '^' => push!(Tok::Caret, pos),
            '!' => push!(Tok::Bang, pos),
            '.' => push!(Tok::Dot, pos),
            '*' => push!(Tok::Star, pos),
            '-' => push!(Tok::Minus, pos),
            '=' if chars.get(i + 1) == Some(&'>') => {
                push!(Tok::Implies, pos);
                i += 2;
                col += 2;
                continue;
            }
            '<' if chars.get(i + 1) == Some(&'=') && chars.get(i + 2) == Some(&'>') => {
                push!(Tok::Iff, pos);
                i += 3;
                col += 3;
                continue;
            }
            '=' => push!(Tok::Eq, pos),
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let mut numeric = true;
                if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        while j < chars.len() && chars[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                if i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    // digit-led identifier such as `3rd` or `12_A`
                    numeric = false;
                    i = start;
                    while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                        i += 1;
                    }
                }
                let s: String = chars[start..i].iter().collect();
                col += i - start;
                if numeric {
                    match s.parse::<f64>() {
                        Ok(v) => push!(Tok::Number(v, s), pos),
                        Err(_) => return Err(ParseError::new(pos, format!("malformed number `{s}`"))),
                    }
                } else {
                    push!(Tok::Ident(s), pos);
                }
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                col += i - start;
                push!(Tok::Ident(s), pos);
                continue;
            }
            other => {
                return Err(ParseError::new(pos, format!("unexpected character {other:?}")));
            }
        }
        i += 1;
        col += 1;
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: Pos { line, col },
    });
    Ok(out)
}

/// Drop newlines that do not end a statement: inside parentheses or braces,
/// after a binary operator, or before a line starting with one.
pub fn join_continuations(tokens: Vec<Token>) -> Vec<Token> {
    let mut out: Vec<Token> = Vec::with_capacity(tokens.len());
    let mut depth: i64 = 0;
    for (i, t) in tokens.iter().enumerate() {
        match t.tok {
            Tok::LParen | Tok::LBrace => depth += 1,
            Tok::RParen | Tok::RBrace => depth -= 1,
            _ => {}
        }
        if t.tok == Tok::Newline {
            let prev_op = out.last().is_some_and(|p| {
                matches!(p.tok, Tok::Implies | Tok::Iff | Tok::Caret | Tok::Bang | Tok::Comma | Tok::LParen) || p.tok.is_or()
            });
            let next = tokens[i + 1..].iter().find(|n| n.tok != Tok::Newline);
            let next_op = next.is_some_and(|n| {
                matches!(n.tok, Tok::Implies | Tok::Iff | Tok::Caret)
                    || (n.tok.is_or()
                        && !matches!(
                            tokens[i + 1..].iter().skip_while(|x| x.tok == Tok::Newline).nth(1),
                            Some(Token { tok: Tok::LParen, .. })
                        ))
            });
            if depth > 0 || prev_op || next_op {
                continue;
            }
            if out.last().is_some_and(|p| p.tok == Tok::Newline) {
                continue;
            }
        }
        out.push(t.clone());
    }
    out
}
