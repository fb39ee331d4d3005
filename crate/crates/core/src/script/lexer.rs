//! Line splitting, indentation and tokenization for `.story` sources.

use crate::diagnostic::Diagnostic;

pub(crate) const INDENT_WIDTH: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Str(String),
    Word(String),
    Eq,
    Comma,
    Tilde,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub tok: Tok,
    /// 1-based character column.
    pub col: usize,
}

/// One non-blank source line with its nested children.
#[derive(Debug, Clone)]
pub(crate) struct Line {
    pub no: usize,
    pub tokens: Vec<Token>,
    pub children: Vec<Line>,
}

impl Line {
    pub fn first_col(&self) -> usize {
        self.tokens.first().map_or(1, |t| t.col)
    }
}

struct FlatLine {
    no: usize,
    level: usize,
    tokens: Vec<Token>,
}

fn is_word_char(c: char) -> bool {
    !(c.is_whitespace() || matches!(c, '"' | '=' | ',' | '#' | '~'))
}

/// Tokenizes the content of a line, starting at character column `start_col`.
fn tokenize(no: usize, chars: &[char], start: usize, diags: &mut Vec<Diagnostic>) -> Option<Vec<Token>> {
    let mut out = Vec::new();
    let mut i = start;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        match c {
            '#' => break,
            c if c.is_whitespace() => i += 1,
            '=' => {
                out.push(Token { tok: Tok::Eq, col });
                i += 1;
            }
            ',' => {
                out.push(Token { tok: Tok::Comma, col });
                i += 1;
            }
            '~' => {
                out.push(Token { tok: Tok::Tilde, col });
                i += 1;
            }
            '"' => {
                let mut s = String::new();
                i += 1;
                let mut closed = false;
                while i < chars.len() {
                    match chars[i] {
                        '"' => {
                            closed = true;
                            i += 1;
                            break;
                        }
                        '\\' => {
                            let esc_col = i + 1;
                            i += 1;
                            match chars.get(i) {
                                Some('"') => s.push('"'),
                                Some('\\') => s.push('\\'),
                                Some('n') => s.push('\n'),
                                Some('t') => s.push('\t'),
                                Some('r') => s.push('\r'),
                                Some('u') if chars.get(i + 1) == Some(&'{') => {
                                    let close = chars[i + 2..].iter().position(|&c| c == '}');
                                    let decoded = close.and_then(|len| {
                                        let hex: String = chars[i + 2..i + 2 + len].iter().collect();
                                        u32::from_str_radix(&hex, 16)
                                            .ok()
                                            .and_then(char::from_u32)
                                            .map(|c| (c, len))
                                    });
                                    match decoded {
                                        Some((ch, len)) => {
                                            s.push(ch);
                                            i += len + 2;
                                        }
                                        None => {
                                            diags.push(
                                                Diagnostic::error("E006", "malformed unicode escape").at(no, esc_col),
                                            );
                                            return None;
                                        }
                                    }
                                }
                                _ => {
                                    diags.push(
                                        Diagnostic::error("E006", "unknown escape sequence in string").at(no, esc_col),
                                    );
                                    return None;
                                }
                            }
                            i += 1;
                        }
                        ch => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                if !closed {
                    diags.push(Diagnostic::error("E006", "unterminated string").at(no, col));
                    return None;
                }
                out.push(Token { tok: Tok::Str(s), col });
            }
            _ => {
                let begin = i;
                while i < chars.len() && is_word_char(chars[i]) {
                    i += 1;
                }
                out.push(Token {
                    tok: Tok::Word(chars[begin..i].iter().collect()),
                    col,
                });
            }
        }
    }
    Some(out)
}

/// Normalizes line endings and strips a leading byte-order mark.
pub(crate) fn normalize(src: &str) -> String {
    let src = src.strip_prefix('\u{feff}').unwrap_or(src);
    src.replace("\r\n", "\n")
}

/// Splits the source into an indentation tree.
///
/// Lines with bad indentation are reported as `E001` and dropped together
/// with everything nested below them.
pub(crate) fn lines(src: &str, diags: &mut Vec<Diagnostic>) -> Vec<Line> {
    let mut flat = Vec::new();
    // Deepest level the next line may take.
    let mut max_level = 0usize;
    // While recovering from an indentation error, lines deeper than this are skipped.
    let mut skip_deeper_than: Option<usize> = None;

    for (idx, raw) in src.split('\n').enumerate() {
        let no = idx + 1;
        let chars: Vec<char> = raw.chars().collect();
        let lead = chars.iter().take_while(|c| **c == ' ' || **c == '\t').count();
        let rest_blank = chars[lead..].iter().all(|c| c.is_whitespace()) || chars.get(lead) == Some(&'#');
        if rest_blank {
            continue;
        }
        if let Some(tab) = chars[..lead].iter().position(|c| *c == '\t') {
            diags.push(Diagnostic::error("E001", "tab character in indentation").at(no, tab + 1));
            skip_deeper_than = Some(max_level);
            continue;
        }
        if lead % INDENT_WIDTH != 0 {
            diags.push(
                Diagnostic::error(
                    "E001",
                    format!("indentation must be a multiple of {INDENT_WIDTH} spaces"),
                )
                .at(no, 1),
            );
            skip_deeper_than = Some(max_level.min(lead / INDENT_WIDTH));
            continue;
        }
        let level = lead / INDENT_WIDTH;
        if let Some(d) = skip_deeper_than {
            if level > d {
                continue;
            }
            skip_deeper_than = None;
        }
        if level > max_level {
            diags.push(Diagnostic::error("E001", "unexpected indentation").at(no, 1));
            skip_deeper_than = Some(max_level);
            continue;
        }
        let Some(tokens) = tokenize(no, &chars, lead, diags) else {
            skip_deeper_than = Some(level);
            continue;
        };
        if tokens.is_empty() {
            continue;
        }
        max_level = level + 1;
        flat.push(FlatLine { no, level, tokens });
    }

    fn build(flat: &mut std::iter::Peekable<std::vec::IntoIter<FlatLine>>, level: usize) -> Vec<Line> {
        let mut out = Vec::new();
        while let Some(next) = flat.peek() {
            if next.level < level {
                break;
            }
            let fl = flat.next().expect("peeked");
            let children = build(flat, level + 1);
            out.push(Line {
                no: fl.no,
                tokens: fl.tokens,
                children,
            });
        }
        out
    }
    build(&mut flat.into_iter().peekable(), 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizes_strings_words_and_tuples() {
        let mut d = Vec::new();
        let chars: Vec<char> = r#"hotspot 0.1,0.2 text="a \"b\"" # c"#.chars().collect();
        let toks = tokenize(1, &chars, 0, &mut d).unwrap();
        let kinds: Vec<_> = toks.iter().map(|t| t.tok.clone()).collect();
        assert_eq!(
            kinds,
            vec![
                Tok::Word("hotspot".into()),
                Tok::Word("0.1".into()),
                Tok::Comma,
                Tok::Word("0.2".into()),
                Tok::Word("text".into()),
                Tok::Eq,
                Tok::Str("a \"b\"".into()),
            ]
        );
        assert_eq!(toks[4].col, 17);
        assert!(d.is_empty());
    }

    #[test]
    fn unicode_escape() {
        let mut d = Vec::new();
        let chars: Vec<char> = r#""\u{1}x""#.chars().collect();
        let toks = tokenize(1, &chars, 0, &mut d).unwrap();
        assert_eq!(toks[0].tok, Tok::Str("\u{1}x".into()));
    }

    #[test]
    fn unterminated_string() {
        let mut d = Vec::new();
        let chars: Vec<char> = r#"text "abc"#.chars().collect();
        assert!(tokenize(3, &chars, 0, &mut d).is_none());
        assert_eq!(d[0].code, "E006");
        assert_eq!((d[0].line, d[0].column), (Some(3), Some(6)));
    }

    #[test]
    fn builds_tree_and_reports_indentation() {
        let mut d = Vec::new();
        let tree = lines("a\n  b\n    c\n  d\n\n# note\ne\n", &mut d);
        assert!(d.is_empty());
        assert_eq!(tree.len(), 2);
        assert_eq!(tree[0].children.len(), 2);
        assert_eq!(tree[0].children[0].children.len(), 1);

        let mut d = Vec::new();
        let tree = lines("a\n      b\n        c\n  d\n", &mut d);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, "E001");
        assert_eq!(d[0].line, Some(2));
        assert_eq!(tree[0].children.len(), 1);

        let mut d = Vec::new();
        lines("a\n\tb\n   c\n", &mut d);
        assert_eq!(d.iter().filter(|x| x.code == "E001").count(), 2);
    }
}
