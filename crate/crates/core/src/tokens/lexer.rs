//! Incremental lexer.
//!
//! Bytes may arrive in arbitrary chunks. A token is yielded only once its
//! terminator has been seen, so no later byte can change it; lexing any
//! chunking of a text yields the same tokens as lexing it whole.

use thiserror::Error;

use super::{Special, Spanned, Token};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexError {
    #[error("unknown special token <|{name}|> at byte {offset}")]
    UnknownToken { offset: usize, name: String },
    #[error("unexpected text at byte {offset}")]
    UnexpectedText { offset: usize },
    #[error("malformed attribute at byte {offset}: {reason}")]
    MalformedAttribute { offset: usize, reason: &'static str },
    #[error("invalid escape sequence at byte {offset}")]
    InvalidEscape { offset: usize },
    #[error("unescaped `|>` at byte {offset}")]
    StrayDelimiter { offset: usize },
    #[error("invalid utf-8 in token at byte {offset}")]
    InvalidUtf8 { offset: usize },
    #[error("incomplete token at byte {offset}")]
    Incomplete { offset: usize },
}

impl LexError {
    pub fn offset(&self) -> usize {
        match *self {
            LexError::UnknownToken { offset, .. }
            | LexError::UnexpectedText { offset }
            | LexError::MalformedAttribute { offset, .. }
            | LexError::InvalidEscape { offset }
            | LexError::StrayDelimiter { offset }
            | LexError::InvalidUtf8 { offset }
            | LexError::Incomplete { offset } => offset,
        }
    }
}

/// Longest special-token name plus slack; longer runs cannot be reserved.
const MAX_SPECIAL_NAME: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SpanCtx {
    Text,
    Image,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// Specials and attributes separated by whitespace.
    Normal,
    /// Attributes of a span-bearing layer; the first non-attribute word
    /// starts its span.
    Attrs(SpanCtx),
    /// Right after `<|image_des|>`: one separator byte, then a span.
    SpanStart,
    Span,
}

/// Outcome of one lexing step.
enum Step {
    Token(Spanned),
    /// Mode changed without producing a token; run again.
    Continue,
    /// Needs more input.
    Wait,
}

/// Single-consumer streaming tokenizer.
#[derive(Debug)]
pub struct Tokenizer {
    buf: Vec<u8>,
    /// Absolute offset of `buf[0]`.
    base: usize,
    pos: usize,
    mode: Mode,
    error: Option<LexError>,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Self::new()
    }
}

fn is_ws(b: u8) -> bool {
    b.is_ascii_whitespace()
}

fn is_key_byte(b: u8) -> bool {
    b.is_ascii_lowercase() || b == b'_'
}

impl Tokenizer {
    pub fn new() -> Self {
        Self { buf: Vec::new(), base: 0, pos: 0, mode: Mode::Normal, error: None }
    }

    /// Total bytes fed so far.
    pub fn bytes_seen(&self) -> usize {
        self.base + self.buf.len()
    }

    /// Appends `chunk` and returns every token completed by it.
    pub fn feed(&mut self, chunk: impl AsRef<[u8]>) -> Result<Vec<Spanned>, LexError> {
        if let Some(e) = &self.error {
            return Err(e.clone());
        }
        self.buf.extend_from_slice(chunk.as_ref());
        self.drain(false)
    }

    /// Ends the input. Fails if a token was left incomplete.
    pub fn finish(&mut self) -> Result<Vec<Spanned>, LexError> {
        if let Some(e) = &self.error {
            return Err(e.clone());
        }
        let out = self.drain(true)?;
        if let Some(i) = self.buf[self.pos..].iter().position(|&b| !is_ws(b)) {
            return Err(self.fail(LexError::Incomplete { offset: self.base + self.pos + i }));
        }
        if self.mode == Mode::Span {
            return Err(self.fail(LexError::Incomplete { offset: self.base + self.pos }));
        }
        Ok(out)
    }

    fn fail(&mut self, e: LexError) -> LexError {
        self.error = Some(e.clone());
        e
    }

    fn drain(&mut self, eof: bool) -> Result<Vec<Spanned>, LexError> {
        let mut out = Vec::new();
        loop {
            match self.step(eof) {
                Ok(Step::Token(t)) => out.push(t),
                Ok(Step::Continue) => {}
                Ok(Step::Wait) => break,
                Err(e) => return Err(self.fail(e)),
            }
        }
        self.buf.drain(..self.pos);
        self.base += self.pos;
        self.pos = 0;
        Ok(out)
    }

    fn abs(&self, i: usize) -> usize {
        self.base + i
    }

    fn step(&mut self, eof: bool) -> Result<Step, LexError> {
        match self.mode {
            Mode::Normal => self.step_normal(eof),
            Mode::Attrs(ctx) => self.step_attrs(ctx, eof),
            Mode::SpanStart => {
                match self.buf.get(self.pos) {
                    None => return Ok(Step::Wait),
                    Some(&b) if is_ws(b) => self.pos += 1,
                    Some(_) => {}
                }
                self.mode = Mode::Span;
                Ok(Step::Continue)
            }
            Mode::Span => self.step_span(eof),
        }
    }

    fn step_normal(&mut self, eof: bool) -> Result<Step, LexError> {
        while self.pos < self.buf.len() && is_ws(self.buf[self.pos]) {
            self.pos += 1;
        }
        let start = self.pos;
        match self.buf.get(start) {
            None => Ok(Step::Wait),
            Some(b'<') => match self.buf.get(start + 1) {
                None if !eof => Ok(Step::Wait),
                Some(b'|') => self.lex_special(start, eof),
                _ => Err(LexError::UnexpectedText { offset: self.abs(start) }),
            },
            Some(_) => self.lex_attr(start, eof),
        }
    }

    /// Special token starting at `start` (which holds `<|`).
    fn read_special(&self, start: usize, eof: bool) -> Result<Option<(Special, usize)>, LexError> {
        let name_start = start + 2;
        let mut i = name_start;
        loop {
            match self.buf.get(i) {
                None if eof => return Err(LexError::Incomplete { offset: self.abs(start) }),
                None => return Ok(None),
                Some(b'|') => match self.buf.get(i + 1) {
                    None if eof => return Err(LexError::Incomplete { offset: self.abs(start) }),
                    None => return Ok(None),
                    Some(b'>') => break,
                    Some(_) => return Err(self.unknown(start, i)),
                },
                Some(&b) if is_key_byte(b) || b == b'/' => {}
                Some(_) => return Err(self.unknown(start, i + 1)),
            }
            i += 1;
            if i - name_start > MAX_SPECIAL_NAME {
                return Err(self.unknown(start, i));
            }
        }
        let name = std::str::from_utf8(&self.buf[name_start..i]).expect("ascii name");
        match Special::from_name(name) {
            Some(s) => Ok(Some((s, i + 2))),
            None => Err(LexError::UnknownToken { offset: self.abs(start), name: name.to_string() }),
        }
    }

    fn unknown(&self, start: usize, end: usize) -> LexError {
        let end = end.min(self.buf.len());
        LexError::UnknownToken {
            offset: self.abs(start),
            name: String::from_utf8_lossy(&self.buf[start + 2..end]).into_owned(),
        }
    }

    fn lex_special(&mut self, start: usize, eof: bool) -> Result<Step, LexError> {
        let Some((special, end)) = self.read_special(start, eof)? else {
            return Ok(Step::Wait);
        };
        self.pos = end;
        self.mode = match special {
            Special::Text => Mode::Attrs(SpanCtx::Text),
            Special::Image => Mode::Attrs(SpanCtx::Image),
            Special::ImageDes => Mode::SpanStart,
            _ => Mode::Normal,
        };
        Ok(Step::Token(Spanned { token: Token::Special(special), offset: self.abs(start) }))
    }

    /// Whether the byte at `i` ends a word: whitespace or the start of `<|`.
    /// `None` means the answer depends on bytes not yet fed.
    fn word_boundary(&self, i: usize, eof: bool) -> Option<bool> {
        match self.buf.get(i) {
            None => eof.then_some(false),
            Some(&b) if is_ws(b) => Some(true),
            Some(b'<') => match self.buf.get(i + 1) {
                None => eof.then_some(false),
                Some(&n) => Some(n == b'|'),
            },
            Some(_) => Some(false),
        }
    }

    fn lex_attr(&mut self, start: usize, eof: bool) -> Result<Step, LexError> {
        let incomplete = LexError::Incomplete { offset: self.abs(start) };
        let mut i = start;
        while i < self.buf.len() && is_key_byte(self.buf[i]) {
            i += 1;
        }
        if i == self.buf.len() {
            return if eof { Err(incomplete) } else { Ok(Step::Wait) };
        }
        if i == start || self.buf[i] != b'=' {
            return Err(LexError::UnexpectedText { offset: self.abs(start) });
        }
        let key = String::from_utf8(self.buf[start..i].to_vec()).expect("ascii key");
        let vstart = i + 1;
        let value = match self.buf.get(vstart) {
            None => return if eof { Err(incomplete) } else { Ok(Step::Wait) },
            Some(b'"') => self.read_quoted(vstart, eof),
            Some(_) => self.read_bare(vstart, eof),
        };
        let (value, end) = match value {
            Ok(Some(v)) => v,
            Ok(None) => return Ok(Step::Wait),
            Err(LexError::Incomplete { .. }) => return Err(incomplete),
            Err(e) => return Err(e),
        };
        match self.word_boundary(end, false) {
            Some(true) => {}
            Some(false) if self.buf.len() > end => {
                return Err(LexError::MalformedAttribute { offset: self.abs(end), reason: "junk after value" })
            }
            _ if eof => return Err(incomplete),
            _ => return Ok(Step::Wait),
        }
        self.pos = end;
        Ok(Step::Token(Spanned { token: Token::Attr { key, value }, offset: self.abs(start) }))
    }

    fn utf8(&self, bytes: Vec<u8>, offset: usize) -> Result<String, LexError> {
        String::from_utf8(bytes).map_err(|_| LexError::InvalidUtf8 { offset: self.abs(offset) })
    }

    /// Bare value: runs to whitespace or `<|`. Returns the value and the
    /// index just past it, or `None` while undetermined.
    fn read_bare(&self, vstart: usize, eof: bool) -> Result<Option<(String, usize)>, LexError> {
        let mut i = vstart;
        loop {
            match self.word_boundary(i, eof) {
                None => return Ok(None),
                Some(true) => break,
                Some(false) if i == self.buf.len() => {
                    return Err(LexError::Incomplete { offset: self.abs(vstart) });
                }
                Some(false) => {}
            }
            match self.buf[i] {
                b'"' | b'\\' => {
                    return Err(LexError::MalformedAttribute {
                        offset: self.abs(i),
                        reason: "quote or backslash in bare value",
                    })
                }
                b'|' => match self.buf.get(i + 1) {
                    Some(b'>') => return Err(LexError::StrayDelimiter { offset: self.abs(i) }),
                    None if !eof => return Ok(None),
                    _ => {}
                },
                _ => {}
            }
            i += 1;
        }
        if i == vstart {
            return Err(LexError::MalformedAttribute { offset: self.abs(vstart), reason: "empty value" });
        }
        Ok(Some((self.utf8(self.buf[vstart..i].to_vec(), vstart)?, i)))
    }

    /// Quoted value starting at the opening quote.
    fn read_quoted(&self, qstart: usize, eof: bool) -> Result<Option<(String, usize)>, LexError> {
        let mut out = Vec::new();
        let mut i = qstart + 1;
        let pending = |eof: bool| {
            if eof {
                Err(LexError::Incomplete { offset: self.abs(qstart) })
            } else {
                Ok(None)
            }
        };
        loop {
            let Some(&b) = self.buf.get(i) else { return pending(eof) };
            match b {
                b'"' => return Ok(Some((self.utf8(out, qstart)?, i + 1))),
                b'\\' => match self.read_escape(i, eof, b"\\\"")? {
                    Some((bytes, next)) => {
                        out.extend_from_slice(bytes);
                        i = next;
                    }
                    None => return Ok(None),
                },
                b'|' | b'<' => match self.buf.get(i + 1) {
                    None => return pending(eof),
                    Some(b'>') if b == b'|' => return Err(LexError::StrayDelimiter { offset: self.abs(i) }),
                    Some(b'|') if b == b'<' => {
                        return Err(LexError::MalformedAttribute { offset: self.abs(i), reason: "unescaped `<|`" })
                    }
                    Some(_) => {
                        out.push(b);
                        i += 1;
                    }
                },
                _ => {
                    out.push(b);
                    i += 1;
                }
            }
        }
    }

    /// Escape at `i` (a backslash). `singles` lists the bytes allowed as
    /// one-byte escapes; `\<|` and `\|>` are always allowed.
    fn read_escape(&self, i: usize, eof: bool, singles: &[u8]) -> Result<Option<(&'static [u8], usize)>, LexError> {
        let wait = |eof: bool| {
            if eof {
                Err(LexError::Incomplete { offset: self.abs(i) })
            } else {
                Ok(None)
            }
        };
        let Some(&n) = self.buf.get(i + 1) else { return wait(eof) };
        let two: &'static [u8] = match n {
            b'<' => b"<|",
            b'|' => b"|>",
            _ if singles.contains(&n) => {
                let single: &'static [u8] = match n {
                    b'\\' => b"\\",
                    b'"' => b"\"",
                    b'=' => b"=",
                    _ => unreachable!(),
                };
                return Ok(Some((single, i + 2)));
            }
            _ => return Err(LexError::InvalidEscape { offset: self.abs(i) }),
        };
        match self.buf.get(i + 2) {
            None => wait(eof),
            Some(&c) if c == two[1] => Ok(Some((two, i + 3))),
            Some(_) => Err(LexError::InvalidEscape { offset: self.abs(i) }),
        }
    }

    fn step_attrs(&mut self, ctx: SpanCtx, eof: bool) -> Result<Step, LexError> {
        let p = self.pos;
        let mut q = p;
        while q < self.buf.len() && is_ws(self.buf[q]) {
            q += 1;
        }
        if q == self.buf.len() {
            // Only whitespace so far: at end of input this is a missing span,
            // which the parser reports.
            return Ok(Step::Wait);
        }
        let span_start = if q > p { p + 1 } else { p };
        if self.buf[q] == b'<' {
            match self.buf.get(q + 1) {
                None if !eof => return Ok(Step::Wait),
                Some(b'|') if ctx == SpanCtx::Image => {
                    let Some((special, _)) = self.read_special(q, eof)? else {
                        return Ok(Step::Wait);
                    };
                    if special == Special::ImageGen {
                        self.pos = q;
                        self.mode = Mode::Normal;
                        return Ok(Step::Continue);
                    }
                }
                _ => {}
            }
        } else if is_key_byte(self.buf[q]) {
            let mut k = q;
            while k < self.buf.len() && is_key_byte(self.buf[k]) {
                k += 1;
            }
            if k == self.buf.len() && !eof {
                return Ok(Step::Wait);
            }
            if self.buf.get(k) == Some(&b'=') {
                return self.lex_attr(q, eof);
            }
        }
        self.pos = span_start;
        self.mode = Mode::Span;
        Ok(Step::Continue)
    }

    fn step_span(&mut self, eof: bool) -> Result<Step, LexError> {
        let start = self.pos;
        let mut out = Vec::new();
        let mut i = start;
        let wait = |eof: bool| {
            if eof {
                Err(LexError::Incomplete { offset: self.abs(start) })
            } else {
                Ok(Step::Wait)
            }
        };
        loop {
            let Some(&b) = self.buf.get(i) else { return wait(eof) };
            match b {
                b'\\' => match self.read_escape(i, eof, b"\\=")? {
                    Some((bytes, next)) => {
                        out.extend_from_slice(bytes);
                        i = next;
                    }
                    None => return wait(eof),
                },
                b'<' | b'|' => match self.buf.get(i + 1) {
                    None => return wait(eof),
                    Some(b'|') if b == b'<' => break,
                    Some(b'>') if b == b'|' => return Err(LexError::StrayDelimiter { offset: self.abs(i) }),
                    Some(_) => {
                        out.push(b);
                        i += 1;
                    }
                },
                _ => {
                    out.push(b);
                    i += 1;
                }
            }
        }
        // Drop the separator before the closing special; escapes never end
        // in a space, so a raw trailing space is always the decoded one.
        if i > start && self.buf[i - 1] == b' ' {
            out.pop();
        }
        let text = self.utf8(out, start)?;
        self.pos = i;
        self.mode = Mode::Normal;
        Ok(Step::Token(Spanned { token: Token::Span(text), offset: self.abs(start) }))
    }
}

/// Lexes a complete text.
pub fn tokenize(text: &str) -> Result<Vec<Spanned>, LexError> {
    let mut t = Tokenizer::new();
    let mut out = t.feed(text)?;
    out.extend(t.finish()?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "<|doc|> w=100 h=100 <|frame|> x=0 y=0 w=100 h=100 <|/frame|> <|/doc|>";

    fn toks(s: &str) -> Vec<Token> {
        tokenize(s).unwrap().into_iter().map(|s| s.token).collect()
    }

    #[test]
    fn minimal_document_lexes() {
        let t = toks(MINIMAL);
        assert_eq!(t.len(), 10);
        assert_eq!(t[0], Token::Special(Special::Doc));
        assert_eq!(t[1], Token::attr("w", "100"));
        assert_eq!(t[9], Token::Special(Special::DocEnd));
    }

    #[test]
    fn split_special_token_waits_for_completion() {
        let mut t = Tokenizer::new();
        assert!(t.feed("<|te").unwrap().is_empty());
        let got = t.feed("xt|>").unwrap();
        assert_eq!(got, vec![Spanned { token: Token::Special(Special::Text), offset: 0 }]);
    }

    #[test]
    fn one_byte_chunks_match_whole_string() {
        let whole = tokenize(MINIMAL).unwrap();
        let mut t = Tokenizer::new();
        let mut got = Vec::new();
        for b in MINIMAL.as_bytes() {
            got.extend(t.feed([*b]).unwrap());
        }
        got.extend(t.finish().unwrap());
        assert_eq!(got, whole);
    }

    #[test]
    fn attribute_waits_for_terminator() {
        let mut t = Tokenizer::new();
        assert_eq!(t.feed("<|doc|> w=10").unwrap().len(), 1);
        // `w=10` could still grow into `w=100`.
        assert_eq!(t.feed("0").unwrap().len(), 0);
        let got = t.feed(" ").unwrap();
        assert_eq!(got[0].token, Token::attr("w", "100"));
    }

    #[test]
    fn flush_mid_attribute_reports_incomplete() {
        let mut t = Tokenizer::new();
        let got = t.feed("<|doc|> w=10").unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(t.finish(), Err(LexError::Incomplete { offset: 8 }));
    }

    #[test]
    fn flush_mid_quoted_value_reports_incomplete() {
        let mut t = Tokenizer::new();
        t.feed("<|frame|> name=\"ab c").unwrap();
        assert!(matches!(t.finish(), Err(LexError::Incomplete { offset: 10 })));
    }

    #[test]
    fn text_span_with_escapes() {
        let s = r"<|text|> x=1 color=#000000ff a \<| b \|> c \\ d <|/text|>";
        let t = toks(s);
        assert_eq!(t[3], Token::Span(r"a <| b |> c \ d".into()));
        assert_eq!(t[4], Token::Special(Special::TextEnd));
    }

    #[test]
    fn span_whitespace_is_preserved() {
        let t = toks("<|text|> x=1   two  <|/text|>");
        assert_eq!(t[2], Token::Span("  two ".into()));
        let t = toks("<|text|> x=1  <|/text|>");
        assert_eq!(t[2], Token::Span(String::new()));
    }

    #[test]
    fn escaped_equals_keeps_attribute_lookalike_in_span() {
        let t = toks(r"<|text|> x=1 w\=3 <|/text|>");
        assert_eq!(t[2], Token::Span("w=3".into()));
    }

    #[test]
    fn image_gen_is_not_a_span() {
        let t = toks("<|image|> x=1 <|image_gen|> <|image_des|> a cat <|/image|>");
        assert_eq!(
            t,
            vec![
                Token::Special(Special::Image),
                Token::attr("x", "1"),
                Token::Special(Special::ImageGen),
                Token::Special(Special::ImageDes),
                Token::Span("a cat".into()),
                Token::Special(Special::ImageEnd),
            ]
        );
    }

    #[test]
    fn image_asset_id_is_a_span() {
        let t = toks("<|image|> x=1 img-01 <|image_des|>  <|/image|>");
        assert_eq!(t[2], Token::Span("img-01".into()));
        assert_eq!(t[4], Token::Span(String::new()));
    }

    #[test]
    fn quoted_values() {
        let t = toks(r#"<|frame|> name="a \"b\" \\ c" id=x <|/frame|>"#);
        assert_eq!(t[1], Token::attr("name", r#"a "b" \ c"#));
        assert_eq!(t[2], Token::attr("id", "x"));
    }

    #[test]
    fn unknown_special_is_an_error() {
        assert_eq!(
            tokenize("<|doc|> <|table|>"),
            Err(LexError::UnknownToken { offset: 8, name: "table".into() })
        );
    }

    #[test]
    fn stray_close_delimiter_in_span() {
        assert!(matches!(tokenize("<|text|> x=1 a|>b <|/text|>"), Err(LexError::StrayDelimiter { .. })));
    }

    #[test]
    fn bare_word_outside_span_is_unexpected() {
        assert_eq!(tokenize("<|doc|> hello there"), Err(LexError::UnexpectedText { offset: 8 }));
        // At end of input a bare word may still be a truncated key.
        assert_eq!(tokenize("<|doc|> hello"), Err(LexError::Incomplete { offset: 8 }));
    }

    #[test]
    fn bad_escape() {
        assert!(matches!(tokenize(r"<|text|> x=1 a\q <|/text|>"), Err(LexError::InvalidEscape { offset: 14 })));
    }

    #[test]
    fn errors_poison_the_tokenizer() {
        let mut t = Tokenizer::new();
        assert!(t.feed("<|nope|>").is_err());
        assert!(t.feed("<|doc|>").is_err());
    }
}
