use super::DslError;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Num(f64),
    /// Imaginary literal such as `2i`.
    Imag(f64),
    Sym(&'static str),
    /// End of a statement: newline or `;` outside brackets.
    End,
    Eof,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

const SYMBOLS: [&str; 29] = [
    ".*", "./", ".\\", ".^", ".'", "==", "~=", "<=", ">=", "+", "-", "*", "/", "\\", "^", "'",
    "<", ">", "&", "|", "~", "=", "(", ")", "[", "]", ",", ";", ":",
];

fn ends_operand(t: &Tok) -> bool {
    matches!(t, Tok::Ident(_) | Tok::Num(_) | Tok::Imag(_))
        || matches!(t, Tok::Sym(s) if [")", "]", "'", ".'"].contains(s))
}

pub fn lex(src: &str) -> Result<Vec<Token>, DslError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out: Vec<Token> = Vec::new();
    let mut stack: Vec<char> = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let mut spaced = false;
    while i < chars.len() {
        let c = chars[i];
        let in_brackets = stack.last() == Some(&'[');
        if c == '#' || c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c == '.' && i + 2 < chars.len() && chars[i + 1] == '.' && chars[i + 2] == '.' {
            // Continuation: skip to the next line.
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            i += 1;
            line += 1;
            col = 1;
            spaced = true;
            continue;
        }
        if c == '\n' {
            if stack.is_empty() {
                push_end(&mut out, line, col);
            } else if in_brackets {
                out.push(Token { tok: Tok::Sym(";"), line, col });
            }
            i += 1;
            line += 1;
            col = 1;
            spaced = true;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            spaced = true;
            continue;
        }
        if in_brackets && spaced && out.last().is_some_and(|t| ends_operand(&t.tok)) {
            let next = chars.get(i + 1).copied().unwrap_or(' ');
            let starts = c.is_alphabetic()
                || c == '_'
                || c.is_ascii_digit()
                || (c == '.' && next.is_ascii_digit())
                || c == '('
                || c == '['
                || (c == '~' && next != '=')
                || ((c == '-' || c == '+') && !next.is_whitespace() && next != '=');
            if starts {
                out.push(Token { tok: Tok::Sym(","), line, col });
            }
        }
        spaced = false;
        let (start_line, start_col) = (line, col);
        if c.is_alphabetic() || c == '_' {
            let s = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[s..i].iter().collect();
            col += i - s;
            out.push(Token { tok: Tok::Ident(word), line: start_line, col: start_col });
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let s = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len()
                && chars[i] == '.'
                && !chars.get(i + 1).is_some_and(|d| matches!(d, '*' | '/' | '\\' | '^' | '\''))
            {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut k = i + 1;
                if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                    k += 1;
                }
                if k < chars.len() && chars[k].is_ascii_digit() {
                    i = k;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[s..i].iter().collect();
            let value: f64 = text.parse().map_err(|_| {
                DslError::syntax(start_line, start_col, format!("bad number `{text}`"))
            })?;
            let imag = i < chars.len()
                && (chars[i] == 'i' || chars[i] == 'j')
                && !chars.get(i + 1).is_some_and(|d| d.is_alphanumeric() || *d == '_');
            if imag {
                i += 1;
            }
            col += i - s;
            let tok = if imag { Tok::Imag(value) } else { Tok::Num(value) };
            out.push(Token { tok, line: start_line, col: start_col });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        let Some(sym) = SYMBOLS.iter().find(|s| rest.starts_with(**s)) else {
            return Err(DslError::syntax(line, col, format!("unexpected character `{c}`")));
        };
        let len = sym.chars().count();
        match *sym {
            "(" | "[" => stack.push(c),
            ")" | "]" => {
                let open = if *sym == ")" { '(' } else { '[' };
                if stack.pop() != Some(open) {
                    return Err(DslError::syntax(line, col, format!("unbalanced `{sym}`")));
                }
            }
            _ => {}
        }
        i += len;
        col += len;
        if *sym == ";" && stack.is_empty() {
            push_end(&mut out, start_line, start_col);
            continue;
        }
        out.push(Token { tok: Tok::Sym(sym), line: start_line, col: start_col });
    }
    if let Some(open) = stack.last() {
        return Err(DslError::syntax(line, col, format!("unclosed `{open}`")));
    }
    push_end(&mut out, line, col);
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

fn push_end(out: &mut Vec<Token>, line: usize, col: usize) {
    if !matches!(out.last(), None | Some(Token { tok: Tok::End, .. })) {
        out.push(Token { tok: Tok::End, line, col });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn operators_and_numbers() {
        assert_eq!(
            toks("a.*2.5e1 .'"),
            vec![
                Tok::Ident("a".into()),
                Tok::Sym(".*"),
                Tok::Num(25.0),
                Tok::Sym(".'"),
                Tok::End,
                Tok::Eof
            ]
        );
        assert_eq!(toks("3i")[0], Tok::Imag(3.0));
        assert_eq!(toks("2.^x")[..2], [Tok::Num(2.0), Tok::Sym(".^")]);
    }

    #[test]
    fn implicit_commas_in_brackets() {
        let t = toks("[a -b; c - d]");
        assert_eq!(
            t,
            vec![
                Tok::Sym("["),
                Tok::Ident("a".into()),
                Tok::Sym(","),
                Tok::Sym("-"),
                Tok::Ident("b".into()),
                Tok::Sym(";"),
                Tok::Ident("c".into()),
                Tok::Sym("-"),
                Tok::Ident("d".into()),
                Tok::Sym("]"),
                Tok::End,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn statements_and_comments() {
        let t = toks("x = 1 # note\n\ny = 2; z");
        let ends = t.iter().filter(|x| **x == Tok::End).count();
        assert_eq!(ends, 3);
        assert!(lex("a(").is_err());
        let e = lex("a $ b").unwrap_err();
        assert_eq!((e.line, e.col), (1, 3));
    }
}
