//! Length-preserving text augmentation.
//!
//! Random mode rewrites every text layer character by character: CJK
//! ideographs become random ideographs, ASCII letters become random letters
//! of the same case, everything else stays. Semantic mode asks a
//! [`TextGenClient`] for replacements and only accepts answers with exactly
//! the original number of code points, falling back to random mode per layer.
//! Lengths are always counted in Unicode code points.

use std::cell::RefCell;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{DesignDocument, LayerKind};

/// Ideographs drawn for replacements.
pub const CJK_DRAW: std::ops::RangeInclusive<u32> = 0x4e00..=0x9fff;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentMode {
    Random,
    Semantic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentPolicy {
    pub mode: AugmentMode,
    pub seed: u64,
    /// Attempts per layer in semantic mode, at least 1.
    pub max_retries: u32,
}

impl AugmentPolicy {
    pub fn random(seed: u64) -> Self {
        Self { mode: AugmentMode::Random, seed, max_retries: 3 }
    }

    pub fn semantic(seed: u64, max_retries: u32) -> Self {
        Self { mode: AugmentMode::Semantic, seed, max_retries: max_retries.max(1) }
    }
}

/// Ideographs that get replaced in random mode.
pub fn is_cjk_ideograph(c: char) -> bool {
    matches!(c as u32, 0x3400..=0x4dbf | 0x4e00..=0x9fff | 0xf900..=0xfaff | 0x20000..=0x2ebef)
}

/// Random-mode rewrite of one string; output has the same code-point count.
pub fn randomize_text(s: &str, rng: &mut impl Rng) -> String {
    s.chars()
        .map(|c| {
            if is_cjk_ideograph(c) {
                char::from_u32(rng.random_range(CJK_DRAW)).expect("range holds valid scalars")
            } else if c.is_ascii_uppercase() {
                rng.random_range(b'A'..=b'Z') as char
            } else if c.is_ascii_lowercase() {
                rng.random_range(b'a'..=b'z') as char
            } else {
                c
            }
        })
        .collect()
}

fn layer_rng(seed: u64, layer: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(layer as u64);
    rng
}

/// Rewrites every text layer in random mode. Deterministic in `policy.seed`.
pub fn augment_random(doc: &DesignDocument, policy: &AugmentPolicy) -> DesignDocument {
    let mut out = doc.clone();
    let mut index = 0;
    out.for_each_layer_mut(|layer| {
        if let LayerKind::Text(t) = &mut layer.kind {
            t.content = randomize_text(&t.content, &mut layer_rng(policy.seed, index));
            index += 1;
        }
    });
    out
}

/// What a text-generation client is asked for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextGenRequest {
    pub original: String,
    /// The other texts of the document, plus the length rule on retries.
    pub context: String,
    /// Required code-point length of the answer.
    pub required_length: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClientError {
    #[error("text generation client unavailable: {0}")]
    Unavailable(String),
}

/// Source of replacement texts (a language model behind some transport).
pub trait TextGenClient {
    fn request(&self, req: &TextGenRequest) -> Result<String, ClientError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AugmentWarning {
    /// No answer of the right length; the layer was randomized instead.
    LengthFallback { layer_id: String, attempts: u32 },
    /// The client failed; the document was left unchanged.
    ClientUnavailable { layer_id: String, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentOutcome {
    pub document: DesignDocument,
    pub warnings: Vec<AugmentWarning>,
}

/// Rewrites every text layer through `client`.
///
/// Each layer gets up to `max_retries` attempts; after a wrong-length answer
/// the length rule is restated in the context. Exhausted layers fall back to
/// random mode. A client error leaves the whole document unchanged.
pub fn augment_semantic(doc: &DesignDocument, policy: &AugmentPolicy, client: &dyn TextGenClient) -> AugmentOutcome {
    let texts: Vec<String> = doc.text_layers().map(|t| t.content.clone()).collect();
    let mut out = doc.clone();
    let mut warnings = Vec::new();
    let mut failure: Option<AugmentWarning> = None;
    let mut index = 0;
    out.for_each_layer_mut(|layer| {
        let LayerKind::Text(t) = &mut layer.kind else { return };
        let i = index;
        index += 1;
        if failure.is_some() {
            return;
        }
        let required_length = t.content.chars().count();
        let others: Vec<&str> =
            texts.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, s)| s.as_str()).collect();
        let base_context = others.join(" | ");
        let mut context = base_context.clone();
        for attempt in 1..=policy.max_retries.max(1) {
            let req = TextGenRequest { original: t.content.clone(), context: context.clone(), required_length };
            match client.request(&req) {
                Ok(answer) if answer.chars().count() == required_length => {
                    t.content = answer;
                    return;
                }
                Ok(answer) => {
                    context = format!(
                        "{base_context}\nThe replacement must be exactly {required_length} characters long; the last answer had {}.",
                        answer.chars().count()
                    );
                }
                Err(ClientError::Unavailable(message)) if attempt == policy.max_retries.max(1) => {
                    failure = Some(AugmentWarning::ClientUnavailable { layer_id: layer.id.clone(), message });
                    return;
                }
                Err(_) => {}
            }
        }
        t.content = randomize_text(&t.content, &mut layer_rng(policy.seed, i));
        warnings.push(AugmentWarning::LengthFallback { layer_id: layer.id.clone(), attempts: policy.max_retries.max(1) });
    });
    match failure {
        Some(w) => AugmentOutcome { document: doc.clone(), warnings: vec![w] },
        None => AugmentOutcome { document: out, warnings },
    }
}

/// Dispatches on `policy.mode`; random mode never warns.
pub fn augment(doc: &DesignDocument, policy: &AugmentPolicy, client: &dyn TextGenClient) -> AugmentOutcome {
    match policy.mode {
        AugmentMode::Random => AugmentOutcome { document: augment_random(doc, policy), warnings: Vec::new() },
        AugmentMode::Semantic => augment_semantic(doc, policy, client),
    }
}

/// Deterministic stand-in that answers with a seeded reshuffle of the
/// original's words, keeping the whitespace in place (so lengths match).
#[derive(Debug)]
pub struct ShuffleClient {
    rng: RefCell<ChaCha8Rng>,
}

impl ShuffleClient {
    pub fn new(seed: u64) -> Self {
        Self { rng: RefCell::new(ChaCha8Rng::seed_from_u64(seed)) }
    }
}

impl TextGenClient for ShuffleClient {
    fn request(&self, req: &TextGenRequest) -> Result<String, ClientError> {
        let mut words: Vec<&str> = req.original.split(' ').collect();
        words.shuffle(&mut *self.rng.borrow_mut());
        Ok(words.join(" "))
    }
}

/// Hostile client: every answer has the wrong length.
#[derive(Debug, Clone, Copy, Default)]
pub struct WrongLengthClient;

impl TextGenClient for WrongLengthClient {
    fn request(&self, req: &TextGenRequest) -> Result<String, ClientError> {
        Ok(format!("{}!", req.original))
    }
}

/// Client whose transport always fails.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnavailableClient;

impl TextGenClient for UnavailableClient {
    fn request(&self, _: &TextGenRequest) -> Result<String, ClientError> {
        Err(ClientError::Unavailable("connection refused".into()))
    }
}

/// Client backed by a closure, for scripted behavior.
pub struct FnClient<F>(pub F);

impl<F: Fn(&TextGenRequest) -> Result<String, ClientError>> TextGenClient for FnClient<F> {
    fn request(&self, req: &TextGenRequest) -> Result<String, ClientError> {
        (self.0)(req)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BBox, Color, Layer};
    use std::cell::Cell;

    fn doc(texts: &[&str]) -> DesignDocument {
        DesignDocument::new(100, 100).with_children(
            texts
                .iter()
                .enumerate()
                .map(|(i, s)| Layer::text(format!("t{i}"), BBox::new(0.0, i as f64 * 10.0, 50.0, 10.0), *s, 8.0, Color::BLACK))
                .collect(),
        )
    }

    fn contents(d: &DesignDocument) -> Vec<String> {
        d.text_layers().map(|t| t.content.clone()).collect()
    }

    #[test]
    fn random_keeps_case_and_punctuation() {
        let out = augment_random(&doc(&["AB cd!"]), &AugmentPolicy::random(1));
        let s = &contents(&out)[0];
        let c: Vec<char> = s.chars().collect();
        assert_eq!(c.len(), 6);
        assert!(c[0].is_ascii_uppercase() && c[1].is_ascii_uppercase());
        assert_eq!(c[2], ' ');
        assert!(c[3].is_ascii_lowercase() && c[4].is_ascii_lowercase());
        assert_eq!(c[5], '!');
    }

    #[test]
    fn random_cjk() {
        let out = augment_random(&doc(&["你好"]), &AugmentPolicy::random(2));
        let s = &contents(&out)[0];
        assert_eq!(s.chars().count(), 2);
        assert!(s.chars().all(is_cjk_ideograph));
    }

    #[test]
    fn random_is_deterministic() {
        let d = doc(&["Grand Opening 2024", "大促销"]);
        assert_eq!(augment_random(&d, &AugmentPolicy::random(9)), augment_random(&d, &AugmentPolicy::random(9)));
        assert_ne!(augment_random(&d, &AugmentPolicy::random(9)), augment_random(&d, &AugmentPolicy::random(10)));
    }

    #[test]
    fn semantic_accepts_same_length() {
        let d = doc(&["big summer sale", "today only"]);
        let out = augment_semantic(&d, &AugmentPolicy::semantic(0, 3), &ShuffleClient::new(5));
        assert!(out.warnings.is_empty());
        for (a, b) in contents(&d).iter().zip(contents(&out.document)) {
            assert_eq!(a.chars().count(), b.chars().count());
        }
    }

    #[test]
    fn wrong_length_falls_back() {
        let d = doc(&["hello", "world wide"]);
        let out = augment_semantic(&d, &AugmentPolicy::semantic(3, 2), &WrongLengthClient);
        assert_eq!(out.warnings.len(), 2);
        assert_eq!(contents(&out.document)[0].chars().count(), 5);
        assert_eq!(contents(&out.document)[1].chars().count(), 10);
    }

    #[test]
    fn retry_restates_length() {
        let calls = Cell::new(0);
        let client = FnClient(|req: &TextGenRequest| {
            calls.set(calls.get() + 1);
            if req.context.contains("exactly 5 characters") {
                Ok("HELLO".to_string())
            } else {
                Ok("no".to_string())
            }
        });
        let out = augment_semantic(&doc(&["hello"]), &AugmentPolicy::semantic(0, 3), &client);
        assert_eq!(contents(&out.document), ["HELLO"]);
        assert_eq!(calls.get(), 2);
    }

    #[test]
    fn unavailable_client_leaves_document() {
        let d = doc(&["a", "b"]);
        let out = augment_semantic(&d, &AugmentPolicy::semantic(0, 2), &UnavailableClient);
        assert_eq!(out.document, d);
        assert!(matches!(out.warnings[..], [AugmentWarning::ClientUnavailable { .. }]));
    }

    #[test]
    fn no_text_is_noop() {
        let d = DesignDocument::new(10, 10);
        assert_eq!(augment_random(&d, &AugmentPolicy::random(1)), d);
        assert_eq!(augment_semantic(&d, &AugmentPolicy::semantic(1, 1), &WrongLengthClient).document, d);
    }
}
