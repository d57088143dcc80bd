//! The standardized token format for design documents.
//!
//! A document is written as a whitespace-separated sequence of reserved
//! special tokens (`<|frame|>`, `<|/frame|>`, ...), `key=value` attribute
//! pairs and free-text spans. See `FORMAT.md` for the grammar and the
//! escaping table.

mod lexer;
mod parse;
mod serialize;

use std::fmt;

pub use lexer::{tokenize, LexError, Tokenizer};
pub use parse::{parse, BuildEvent, DocBuilder, ParseError};
pub use serialize::{serialize, to_text};

/// The closed reserved vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Special {
    Doc,
    DocEnd,
    Frame,
    FrameEnd,
    Group,
    GroupEnd,
    Graphic,
    Text,
    TextEnd,
    Image,
    ImageGen,
    ImageDes,
    ImageEnd,
}

impl Special {
    pub const ALL: [Special; 13] = [
        Special::Doc,
        Special::DocEnd,
        Special::Frame,
        Special::FrameEnd,
        Special::Group,
        Special::GroupEnd,
        Special::Graphic,
        Special::Text,
        Special::TextEnd,
        Special::Image,
        Special::ImageGen,
        Special::ImageDes,
        Special::ImageEnd,
    ];

    /// Name between the `<|` and `|>` delimiters.
    pub fn name(self) -> &'static str {
        match self {
            Special::Doc => "doc",
            Special::DocEnd => "/doc",
            Special::Frame => "frame",
            Special::FrameEnd => "/frame",
            Special::Group => "group",
            Special::GroupEnd => "/group",
            Special::Graphic => "graphic",
            Special::Text => "text",
            Special::TextEnd => "/text",
            Special::Image => "image",
            Special::ImageGen => "image_gen",
            Special::ImageDes => "image_des",
            Special::ImageEnd => "/image",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }
}

impl fmt::Display for Special {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<|{}|>", self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    Special(Special),
    Attr { key: String, value: String },
    Span(String),
}

impl Token {
    pub fn attr(key: impl Into<String>, value: impl Into<String>) -> Self {
        Token::Attr { key: key.into(), value: value.into() }
    }
}

/// A token and the byte offset where it starts in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Spanned {
    pub token: Token,
    pub offset: usize,
}

/// Ordered token sequence.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenStream {
    pub tokens: Vec<Token>,
}

impl TokenStream {
    pub fn to_text(&self) -> String {
        to_text(&self.tokens)
    }
}
