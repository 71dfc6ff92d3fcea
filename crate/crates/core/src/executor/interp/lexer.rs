#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Int(i64),
    Float(f64),
    Str(String),
    Name(String),
    Op(&'static str),
    Newline,
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
}

const OPS: &[&str] = &[
    "**=", "//=", "==", "!=", "<=", ">=", "**", "//", "+=", "-=", "*=", "/=", "%=", "+", "-", "*",
    "/", "%", "<", ">", "=", "(", ")", "[", "]", ",", ":", ";", ".",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, String> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    for (idx, raw_line) in src.lines().enumerate() {
        let line = idx + 1;
        let chars: Vec<char> = raw_line.chars().collect();
        let mut i = 0;
        let at_line_start = depth == 0;
        if at_line_start {
            let indent = chars.iter().take_while(|c| **c == ' ' || **c == '\t').count();
            let rest: String = chars[indent..].iter().collect();
            if indent > 0 && !rest.trim().is_empty() && !rest.trim_start().starts_with('#') {
                return Err(format!(
                    "IndentationError: indented blocks are not supported (line {line})"
                ));
            }
        }
        while i < chars.len() {
            let c = chars[i];
            if c == ' ' || c == '\t' || c == '\r' {
                i += 1;
            } else if c == '#' {
                break;
            } else if c == '\\' && i + 1 == chars.len() {
                // explicit line continuation
                depth += 1;
                i += 1;
                out.push(Token {
                    tok: Tok::Op("\\"),
                    line,
                });
            } else if c.is_ascii_digit() || c == '.' && chars.get(i + 1).is_some_and(char::is_ascii_digit)
            {
                let start = i;
                let mut is_float = false;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '_') {
                    i += 1;
                }
                if i < chars.len() && chars[i] == '.' {
                    is_float = true;
                    i += 1;
                    while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '_') {
                        i += 1;
                    }
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        is_float = true;
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                if i < chars.len() && (chars[i].is_ascii_alphabetic() || chars[i] == '_') {
                    return Err(format!("SyntaxError: invalid number literal (line {line})"));
                }
                let text: String = chars[start..i].iter().filter(|c| **c != '_').collect();
                let tok = if is_float {
                    Tok::Float(text.parse().map_err(|_| {
                        format!("SyntaxError: invalid number literal {text:?} (line {line})")
                    })?)
                } else {
                    match text.parse::<i64>() {
                        Ok(v) => Tok::Int(v),
                        Err(_) => {
                            return Err(format!(
                                "OverflowError: integer literal {text} exceeds 64 bits (line {line})"
                            ))
                        }
                    }
                };
                out.push(Token { tok, line });
            } else if c.is_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Token {
                    tok: Tok::Name(chars[start..i].iter().collect()),
                    line,
                });
            } else if c == '"' || c == '\'' {
                let quote = c;
                i += 1;
                let mut s = String::new();
                loop {
                    match chars.get(i) {
                        None => {
                            return Err(format!(
                                "SyntaxError: unterminated string literal (line {line})"
                            ))
                        }
                        Some(&ch) if ch == quote => {
                            i += 1;
                            break;
                        }
                        Some('\\') => {
                            let esc = chars.get(i + 1).copied();
                            s.push(match esc {
                                Some('n') => '\n',
                                Some('t') => '\t',
                                Some(other) => other,
                                None => '\\',
                            });
                            i += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                out.push(Token {
                    tok: Tok::Str(s),
                    line,
                });
            } else {
                let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
                let Some(op) = OPS.iter().find(|op| rest.starts_with(**op)) else {
                    return Err(format!("SyntaxError: unexpected character {c:?} (line {line})"));
                };
                match *op {
                    "(" | "[" => depth += 1,
                    ")" | "]" => depth = depth.saturating_sub(1),
                    _ => {}
                }
                i += op.chars().count();
                out.push(Token { tok: Tok::Op(op), line });
            }
        }
        // a trailing backslash continues onto the next line
        if let Some(Token {
            tok: Tok::Op("\\"), ..
        }) = out.last()
        {
            out.pop();
            depth -= 1;
            continue;
        }
        if depth == 0 && !matches!(out.last(), None | Some(Token { tok: Tok::Newline, .. })) {
            out.push(Token {
                tok: Tok::Newline,
                line,
            });
        }
    }
    if depth > 0 {
        return Err("SyntaxError: unexpected end of input inside brackets".into());
    }
    let line = src.lines().count().max(1);
    if !matches!(out.last(), None | Some(Token { tok: Tok::Newline, .. })) {
        out.push(Token {
            tok: Tok::Newline,
            line,
        });
    }
    out.push(Token { tok: Tok::Eof, line });
    Ok(out)
}
