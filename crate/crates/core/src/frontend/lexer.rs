use super::ast::Span;
use super::FrontendError;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Var(String),
    /// Name or symbol atom; the flag is set when `(` follows with no space.
    Atom(String, bool),
    Int(i64),
    Float(String),
    Str(String),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Bar,
    Comma,
    Semi,
    Arrow,
    Neck,
    Query,
    Eq,
    End,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Var(v) => format!("variable `{v}`"),
            Tok::Atom(a, _) => format!("`{a}`"),
            Tok::Int(i) => format!("`{i}`"),
            Tok::Float(x) => format!("`{x}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrack => "`[`".into(),
            Tok::RBrack => "`]`".into(),
            Tok::Bar => "`|`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Neck => "`:-`".into(),
            Tok::Query => "`?-`".into(),
            Tok::Eq => "`=`".into(),
            Tok::End => "end of clause `.`".into(),
            Tok::Eof => "end of file".into(),
        }
    }
}

const SYMBOL_CHARS: &str = "+-*/\\^<>=~:.?@#&$";

pub fn tokenize(src: &str) -> Result<Vec<(Tok, Span)>, FrontendError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1u32;
    let mut col = 1u32;

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col };
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            bump!();
            bump!();
            loop {
                if i >= chars.len() {
                    return Err(FrontendError::Syntax {
                        span,
                        msg: "unterminated block comment".into(),
                    });
                }
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    bump!();
                    bump!();
                    break;
                }
                bump!();
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                bump!();
            }
            let word: String = chars[start..i].iter().collect();
            if c.is_ascii_uppercase() || c == '_' {
                out.push((Tok::Var(word), span));
            } else {
                let call = chars.get(i) == Some(&'(');
                out.push((Tok::Atom(word, call), span));
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                bump!();
            }
            let is_float =
                chars.get(i) == Some(&'.') && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit());
            if is_float {
                bump!();
                while i < chars.len() && chars[i].is_ascii_digit() {
                    bump!();
                }
                out.push((Tok::Float(chars[start..i].iter().collect()), span));
            } else {
                let text: String = chars[start..i].iter().collect();
                let v = text.parse::<i64>().map_err(|_| FrontendError::Syntax {
                    span,
                    msg: format!("integer literal {text} out of range"),
                })?;
                out.push((Tok::Int(v), span));
            }
            continue;
        }
        if c == '"' || c == '\'' {
            let quote = c;
            bump!();
            let mut text = String::new();
            loop {
                match chars.get(i) {
                    None | Some('\n') => {
                        return Err(FrontendError::Syntax {
                            span,
                            msg: "unterminated quoted text".into(),
                        })
                    }
                    Some(&q) if q == quote => {
                        bump!();
                        break;
                    }
                    Some('\\') if i + 1 < chars.len() => {
                        bump!();
                        let esc = match chars[i] {
                            'n' => '\n',
                            't' => '\t',
                            other => other,
                        };
                        text.push(esc);
                        bump!();
                    }
                    Some(&ch) => {
                        text.push(ch);
                        bump!();
                    }
                }
            }
            if quote == '"' {
                out.push((Tok::Str(text), span));
            } else {
                let call = chars.get(i) == Some(&'(');
                out.push((Tok::Atom(text, call), span));
            }
            continue;
        }
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBrack),
            ']' => Some(Tok::RBrack),
            '|' => Some(Tok::Bar),
            ',' => Some(Tok::Comma),
            ';' => Some(Tok::Semi),
            _ => None,
        };
        if let Some(t) = single {
            bump!();
            out.push((t, span));
            continue;
        }
        if SYMBOL_CHARS.contains(c) {
            let start = i;
            while i < chars.len() && SYMBOL_CHARS.contains(chars[i]) {
                bump!();
            }
            let mut run: String = chars[start..i].iter().collect();
            // A run ending in `.` before layout also ends the clause.
            let at_layout =
                |j: usize| j >= chars.len() || chars[j].is_whitespace() || chars[j] == '%';
            let mut end_after = false;
            if run.len() > 1 && run.ends_with('.') && at_layout(i) {
                run.pop();
                end_after = true;
            }
            let tok = match run.as_str() {
                "." if at_layout(i) => Tok::End,
                "->" => Tok::Arrow,
                ":-" => Tok::Neck,
                "?-" => Tok::Query,
                "=" => Tok::Eq,
                _ => Tok::Atom(run.clone(), chars.get(i) == Some(&'(') && !end_after),
            };
            out.push((tok, span));
            if end_after {
                out.push((Tok::End, Span { line, col: col - 1 }));
            }
            continue;
        }
        return Err(FrontendError::Syntax {
            span,
            msg: format!("unexpected character {c:?}"),
        });
    }
    out.push((Tok::Eof, Span { line, col }));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|(t, _)| t).collect()
    }

    #[test]
    fn clause_tokens() {
        let t = toks("p(X) :- X = [a|Y], N > 0. % c\n");
        assert_eq!(t[0], Tok::Atom("p".into(), true));
        assert!(t.contains(&Tok::Neck));
        assert!(t.contains(&Tok::Atom(">".into(), false)));
        assert_eq!(t[t.len() - 2], Tok::End);
    }

    #[test]
    fn symbols_and_numbers() {
        assert_eq!(
            toks("+(N1, 1, N) =< 2.5"),
            vec![
                Tok::Atom("+".into(), true),
                Tok::LParen,
                Tok::Var("N1".into()),
                Tok::Comma,
                Tok::Int(1),
                Tok::Comma,
                Tok::Var("N".into()),
                Tok::RParen,
                Tok::Atom("=<".into(), false),
                Tok::Float("2.5".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn spans_track_lines() {
        let t = tokenize("a.\n  b.").unwrap();
        assert_eq!(t[2].1, Span { line: 2, col: 3 });
    }

    #[test]
    fn block_comments() {
        assert_eq!(
            toks("/* x\n y */ a"),
            vec![Tok::Atom("a".into(), false), Tok::Eof]
        );
    }
}
