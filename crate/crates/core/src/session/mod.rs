//! The pause-and-resume generation protocol.
//!
//! A [`Session`] pulls text chunks from a [`TokenSource`], lexes and builds
//! them incrementally, and pauses at every `<|image_gen|>`. Once the pending
//! image layer is closed (its description tag follows the marker), the
//! session asks an [`ImageProvider`] for a raster sized by the layer's
//! resolution bucket, stores it under a content-addressed id, swaps the
//! placeholder for that id, reports it back to the source and resumes.
//!
//! ```text
//!   Emitting --<|image_gen|>--> AwaitingImage --<|/image|> + provider--> Emitting
//!   Emitting --end of stream--> Done | Failed
//!   any error --> Failed (terminal)
//! ```

mod mocks;
mod template;
mod transcript;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::buckets::BucketTable;
use crate::model::{BBox, DesignDocument, ImageSource, LayerKind};
use crate::raster::{AssetStore, Raster};
use crate::tokens::{BuildEvent, DocBuilder, LexError, ParseError, Tokenizer};

pub use mocks::{CheckerProvider, FailingProvider, GradientProvider, ProviderKind, ScriptedSource, SolidProvider};
pub use template::{template_source, TemplateSource};
pub use transcript::{Transcript, TranscriptEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputMode {
    /// Instruction only; images are generated.
    SingleModal,
    /// The user supplies texts and/or images; nothing is generated.
    Multimodal,
}

impl InputMode {
    pub fn as_str(self) -> &'static str {
        match self {
            InputMode::SingleModal => "single_modal",
            InputMode::Multimodal => "multimodal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvidedAsset {
    pub asset_id: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionRequest {
    pub instruction: String,
    pub mode: InputMode,
    #[serde(default)]
    pub provided_texts: Vec<String>,
    #[serde(default)]
    pub provided_assets: Vec<ProvidedAsset>,
}

impl InstructionRequest {
    pub fn single_modal(instruction: impl Into<String>) -> Self {
        Self { instruction: instruction.into(), mode: InputMode::SingleModal, provided_texts: vec![], provided_assets: vec![] }
    }

    pub fn validate(&self) -> Result<(), SessionError> {
        if self.mode == InputMode::Multimodal && self.provided_texts.is_empty() && self.provided_assets.is_empty() {
            return Err(SessionError::InvalidRequest("multimodal mode needs provided texts or assets".into()));
        }
        Ok(())
    }
}

/// What the provider is asked to draw.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRequest {
    pub width: u32,
    pub height: u32,
    pub description_tag: String,
    /// Token text generated so far.
    pub style_context: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct ProviderError(pub String);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct SourceError(pub String);

/// Produces the design's token text in chunks.
pub trait TokenSource {
    /// Next chunk, or `None` at end of stream.
    fn next_chunk(&mut self) -> Result<Option<String>, SourceError>;

    /// Called after each generated image (single-modal mode).
    fn accept_image_feedback(&mut self, _asset_id: &str, _description: &str) {}
}

/// Produces rasters for image layers.
pub trait ImageProvider {
    fn generate(&mut self, req: &ImageRequest) -> Result<Raster, ProviderError>;
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SessionError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("stream ended inside an open layer at byte {offset}")]
    Truncated { offset: usize },
    #[error("token source failed: {0}")]
    Source(String),
    #[error("image provider failed for image {pause}: {message}")]
    Provider { pause: usize, message: String },
    #[error("provider returned {got_w}x{got_h} for a {want_w}x{want_h} request")]
    ProviderDimensions { got_w: u32, got_h: u32, want_w: u32, want_h: u32 },
    #[error("<|image_gen|> at byte {offset} in multimodal mode")]
    GenerationInMultimodal { offset: usize },
    #[error("override for image {index} registered after its pause")]
    OverrideTooLate { index: usize },
    #[error("override for image {index} never used: the stream has only {pauses} image(s) to generate")]
    UnusedOverride { index: usize, pauses: usize },
    #[error("document references unknown asset {0:?}")]
    UnresolvedAsset(String),
    #[error("session already failed: {0}")]
    AlreadyFailed(Box<SessionError>),
}

impl SessionError {
    pub fn kind(&self) -> &'static str {
        match self {
            SessionError::InvalidRequest(_) => "invalid_request",
            SessionError::Parse(e) => e.kind(),
            SessionError::Truncated { .. } => "truncated",
            SessionError::Source(_) => "source",
            SessionError::Provider { .. } => "provider",
            SessionError::ProviderDimensions { .. } => "provider_dimensions",
            SessionError::GenerationInMultimodal { .. } => "generation_in_multimodal",
            SessionError::OverrideTooLate { .. } => "override_too_late",
            SessionError::UnusedOverride { .. } => "unused_override",
            SessionError::UnresolvedAsset(_) => "unresolved_asset",
            SessionError::AlreadyFailed(_) => "already_failed",
        }
    }

    pub fn offset(&self) -> Option<usize> {
        match self {
            SessionError::Parse(e) => Some(e.offset()),
            SessionError::Truncated { offset } | SessionError::GenerationInMultimodal { offset } => Some(*offset),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SessionState {
    Emitting,
    AwaitingImage,
    Done,
    Failed(SessionError),
}

impl SessionState {
    pub fn name(&self) -> &'static str {
        match self {
            SessionState::Emitting => "emitting",
            SessionState::AwaitingImage => "awaiting_image",
            SessionState::Done => "done",
            SessionState::Failed(_) => "failed",
        }
    }
}

struct Pending {
    pause: usize,
    bbox: BBox,
}

/// One generation run.
pub struct Session {
    state: SessionState,
    mode: InputMode,
    table: BucketTable,
    tokenizer: Tokenizer,
    builder: Option<DocBuilder>,
    text: String,
    chunks: usize,
    pauses: usize,
    pending: Option<Pending>,
    overrides: BTreeMap<usize, String>,
    assets: AssetStore,
    document: Option<DesignDocument>,
    transcript: Transcript,
}

impl Session {
    pub fn new(req: &InstructionRequest, table: BucketTable, assets: AssetStore) -> Result<Self, SessionError> {
        req.validate()?;
        let mut transcript = Transcript::default();
        transcript.push(TranscriptEvent::Start { mode: req.mode, instruction: req.instruction.clone() });
        Ok(Self {
            state: SessionState::Emitting,
            mode: req.mode,
            table,
            tokenizer: Tokenizer::new(),
            builder: Some(DocBuilder::new()),
            text: String::new(),
            chunks: 0,
            pauses: 0,
            pending: None,
            overrides: BTreeMap::new(),
            assets,
            document: None,
            transcript,
        })
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn assets(&self) -> &AssetStore {
        &self.assets
    }

    /// Number of `<|image_gen|>` pauses reached so far.
    pub fn pauses(&self) -> usize {
        self.pauses
    }

    /// Replaces the description tag of the `index`-th generated image
    /// (counting `<|image_gen|>` markers from 0). Must precede its pause.
    pub fn override_tag(&mut self, index: usize, tag: impl Into<String>) -> Result<(), SessionError> {
        if index < self.pauses || matches!(self.state, SessionState::Done | SessionState::Failed(_)) {
            return Err(SessionError::OverrideTooLate { index });
        }
        let tag = tag.into();
        self.transcript.push(TranscriptEvent::Override { index, tag: tag.clone() });
        self.overrides.insert(index, tag);
        Ok(())
    }

    fn transition(&mut self, to: SessionState) {
        self.transition_at(to, self.text.len());
    }

    fn transition_at(&mut self, to: SessionState, offset: usize) {
        self.transcript.push(TranscriptEvent::State { from: self.state.name().into(), to: to.name().into(), offset });
        self.state = to;
    }

    fn fail(&mut self, e: SessionError) -> SessionError {
        self.transcript.push(TranscriptEvent::Failed { kind: e.kind().into(), offset: e.offset(), message: e.to_string() });
        self.transition(SessionState::Failed(e.clone()));
        e
    }

    /// Pulls and processes one chunk. Returns `Ok(true)` once done.
    pub fn step(&mut self, source: &mut dyn TokenSource, provider: &mut dyn ImageProvider) -> Result<bool, SessionError> {
        match &self.state {
            SessionState::Done => return Ok(true),
            SessionState::Failed(e) => return Err(SessionError::AlreadyFailed(Box::new(e.clone()))),
            _ => {}
        }
        let result = match source.next_chunk() {
            Err(e) => Err(SessionError::Source(e.0)),
            Ok(None) => self.finalize(),
            Ok(Some(chunk)) => self.consume(&chunk, source, provider).map(|_| false),
        };
        result.map_err(|e| self.fail(e))
    }

    fn consume(&mut self, chunk: &str, source: &mut dyn TokenSource, provider: &mut dyn ImageProvider) -> Result<(), SessionError> {
        self.transcript.push(TranscriptEvent::Chunk { index: self.chunks, offset: self.text.len(), bytes: chunk.len() });
        self.chunks += 1;
        self.text.push_str(chunk);
        let tokens = self.tokenizer.feed(chunk).map_err(ParseError::from)?;
        for t in tokens {
            self.handle_token(t, source, provider)?;
        }
        Ok(())
    }

    fn handle_token(
        &mut self,
        t: crate::tokens::Spanned,
        source: &mut dyn TokenSource,
        provider: &mut dyn ImageProvider,
    ) -> Result<(), SessionError> {
        // Offsets are token ends, so they do not depend on how the text was chunked.
        let end = match &t.token {
            crate::tokens::Token::Special(s) => t.offset + s.name().len() + 4,
            _ => t.offset,
        };
        let builder = self.builder.as_mut().expect("builder present while emitting");
        match builder.push(t)? {
            BuildEvent::None => {}
            BuildEvent::ImageGen { offset, bbox, .. } => {
                if self.mode == InputMode::Multimodal {
                    return Err(SessionError::GenerationInMultimodal { offset });
                }
                self.pending = Some(Pending { pause: self.pauses, bbox });
                self.pauses += 1;
                self.transition_at(SessionState::AwaitingImage, end);
            }
            BuildEvent::ImageClosed { placeholder: true, description_tag, .. } => {
                let pending = self.pending.take().expect("placeholder closes a pending image");
                self.generate(pending, description_tag, end, source, provider)?;
                self.transition_at(SessionState::Emitting, end);
            }
            BuildEvent::ImageClosed { .. } => {}
            BuildEvent::DocClosed => {
                self.transcript.push(TranscriptEvent::DocClosed { offset: end });
            }
        }
        Ok(())
    }

    fn generate(
        &mut self,
        pending: Pending,
        emitted_tag: String,
        context_end: usize,
        source: &mut dyn TokenSource,
        provider: &mut dyn ImageProvider,
    ) -> Result<(), SessionError> {
        let override_tag = self.overrides.remove(&pending.pause);
        let tag = override_tag.clone().unwrap_or(emitted_tag);
        let side = |v: f64| v.round().clamp(1.0, u32::MAX as f64) as u32;
        let bucket = self.table.assign(side(pending.bbox.w), side(pending.bbox.h)).clone();
        let req = ImageRequest {
            width: bucket.width,
            height: bucket.height,
            description_tag: tag.clone(),
            style_context: self.text[..context_end].to_string(),
        };
        self.transcript.push(TranscriptEvent::ProviderCall {
            pause: pending.pause,
            layer_w: pending.bbox.w,
            layer_h: pending.bbox.h,
            bucket: bucket.id.clone(),
            width: bucket.width,
            height: bucket.height,
            description_tag: tag.clone(),
            context_bytes: req.style_context.len(),
        });
        let raster = provider
            .generate(&req)
            .map_err(|e| SessionError::Provider { pause: pending.pause, message: e.0 })?;
        if (raster.width(), raster.height()) != (bucket.width, bucket.height) {
            return Err(SessionError::ProviderDimensions {
                got_w: raster.width(),
                got_h: raster.height(),
                want_w: bucket.width,
                want_h: bucket.height,
            });
        }
        let asset_id = self.assets.insert_content_addressed(raster);
        self.builder
            .as_mut()
            .expect("builder present")
            .patch_last_image(ImageSource::Asset(asset_id.clone()), override_tag);
        self.transcript.push(TranscriptEvent::Asset { pause: pending.pause, asset_id: asset_id.clone() });
        source.accept_image_feedback(&asset_id, &tag);
        Ok(())
    }

    fn finalize(&mut self) -> Result<bool, SessionError> {
        let tail = self.tokenizer.finish().map_err(|e| match e {
            LexError::Incomplete { offset } => SessionError::Truncated { offset },
            other => SessionError::Parse(other.into()),
        })?;
        // Tail tokens cannot trigger generation without a following close.
        for t in tail {
            let builder = self.builder.as_mut().expect("builder present");
            builder.push(t)?;
        }
        let builder = self.builder.take().expect("builder present");
        let doc = builder.finish(self.text.len()).map_err(|e| match e {
            ParseError::Truncated { offset } => SessionError::Truncated { offset },
            other => other.into(),
        })?;
        if let Some((&index, _)) = self.overrides.iter().next() {
            return Err(SessionError::UnusedOverride { index, pauses: self.pauses });
        }
        for layer in doc.layers() {
            if let LayerKind::Image(img) = &layer.kind {
                if let ImageSource::Asset(id) = &img.source {
                    if self.assets.get(id).is_none() {
                        return Err(SessionError::UnresolvedAsset(id.clone()));
                    }
                }
            }
        }
        self.transcript.push(TranscriptEvent::Done { layers: doc.layer_count(), assets: self.assets.len() });
        self.document = Some(doc);
        self.transition(SessionState::Done);
        Ok(true)
    }

    /// The finished document and asset store, once done.
    pub fn into_output(self) -> Option<(DesignDocument, AssetStore, Transcript)> {
        let doc = self.document?;
        Some((doc, self.assets, self.transcript))
    }
}

/// Result of [`run_session`]; the transcript is kept on failure too.
#[derive(Debug)]
pub struct SessionRun {
    pub result: Result<(DesignDocument, AssetStore), SessionError>,
    pub transcript: Transcript,
}

/// Drives a fresh session to completion.
///
/// `overrides` replace description tags by generation index and are
/// registered before the first chunk.
pub fn run_session(
    req: &InstructionRequest,
    source: &mut dyn TokenSource,
    provider: &mut dyn ImageProvider,
    table: &BucketTable,
    assets: AssetStore,
    overrides: &[(usize, String)],
) -> SessionRun {
    let mut session = match Session::new(req, table.clone(), assets) {
        Ok(s) => s,
        Err(e) => return SessionRun { result: Err(e), transcript: Transcript::default() },
    };
    for (index, tag) in overrides {
        if let Err(e) = session.override_tag(*index, tag.clone()) {
            return SessionRun { result: Err(e), transcript: session.transcript };
        }
    }
    loop {
        match session.step(source, provider) {
            Ok(true) => break,
            Ok(false) => {}
            Err(e) => return SessionRun { result: Err(e), transcript: session.transcript },
        }
    }
    let (doc, assets, transcript) = session.into_output().expect("done session has output");
    SessionRun { result: Ok((doc, assets)), transcript }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE_IMAGE: &str = "<|doc|> w=500 h=750 <|frame|> x=0 y=0 w=500 h=750 <|image|> x=0 y=0 w=500 h=750 <|image_gen|> <|image_des|> object <|/image|> <|/frame|> <|/doc|>";

    fn run(text: &str, chunk: usize, mode: InputMode, provider: &mut SolidProvider, overrides: &[(usize, String)]) -> SessionRun {
        let mut req = InstructionRequest::single_modal("poster");
        req.mode = mode;
        if mode == InputMode::Multimodal {
            req.provided_texts.push("x".into());
        }
        let mut src = ScriptedSource::chunked(text, chunk);
        run_session(&req, &mut src, provider, &BucketTable::default(), AssetStore::new(), overrides)
    }

    #[test]
    fn no_images_no_pause() {
        let mut p = SolidProvider::default();
        let minimal = "<|doc|> w=100 h=100 <|frame|> x=0 y=0 w=100 h=100 <|/frame|> <|/doc|>";
        let out = run(minimal, 7, InputMode::SingleModal, &mut p, &[]);
        let (doc, assets) = out.result.unwrap();
        assert_eq!(doc, DesignDocument::new(100, 100));
        assert!(assets.is_empty());
        assert!(p.calls.is_empty());
    }

    #[test]
    fn one_image_uses_bucket_dims() {
        let mut p = SolidProvider::default();
        let out = run(ONE_IMAGE, 5, InputMode::SingleModal, &mut p, &[]);
        let (doc, assets) = out.result.unwrap();
        assert_eq!(p.calls.len(), 1);
        assert_eq!((p.calls[0].width, p.calls[0].height), (512, 768));
        assert_eq!(assets.len(), 1);
        assert!(crate::render::render(&doc, &assets).is_ok());
    }

    #[test]
    fn override_changes_the_tag() {
        let mut p = SolidProvider::default();
        let (base, _) = run(ONE_IMAGE, 9, InputMode::SingleModal, &mut p, &[]).result.unwrap();
        let mut q = SolidProvider::default();
        let (doc, _) = run(ONE_IMAGE, 9, InputMode::SingleModal, &mut q, &[(0, "landscape".into())]).result.unwrap();
        assert_eq!(q.calls[0].description_tag, "landscape");
        assert_ne!(base, doc);
        let tags: Vec<_> = doc
            .layers()
            .into_iter()
            .filter_map(|l| match &l.kind {
                LayerKind::Image(i) => Some(i.description_tag.clone()),
                _ => None,
            })
            .collect();
        assert_eq!(tags, ["landscape"]);
    }

    #[test]
    fn override_past_the_end_fails_at_finalize() {
        let mut p = SolidProvider::default();
        let out = run(ONE_IMAGE, 64, InputMode::SingleModal, &mut p, &[(1, "x".into())]);
        assert!(matches!(out.result, Err(SessionError::UnusedOverride { index: 1, pauses: 1 })));
    }

    #[test]
    fn stray_close_fails_with_offset() {
        let mut p = SolidProvider::default();
        let out = run("<|doc|> w=10 h=10 <|/frame|>", 4, InputMode::SingleModal, &mut p, &[]);
        match out.result {
            Err(SessionError::Parse(e)) => assert_eq!(e.offset(), 18),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn multimodal_never_generates() {
        let mut p = SolidProvider::default();
        let out = run(ONE_IMAGE, 8, InputMode::Multimodal, &mut p, &[]);
        assert!(matches!(out.result, Err(SessionError::GenerationInMultimodal { .. })));
        assert!(p.calls.is_empty());
    }

    #[test]
    fn truncated_stream() {
        let mut p = SolidProvider::default();
        let out = run("<|doc|> w=10 h=10 <|frame|> x=0 y=0 w=10 h=10 ", 3, InputMode::SingleModal, &mut p, &[]);
        assert!(matches!(out.result, Err(SessionError::Truncated { .. })));
    }

    #[test]
    fn failed_sessions_stay_failed() {
        let req = InstructionRequest::single_modal("x");
        let mut s = Session::new(&req, BucketTable::default(), AssetStore::new()).unwrap();
        let mut src = ScriptedSource::chunked("<|/doc|>", 100);
        let mut p = SolidProvider::default();
        assert!(s.step(&mut src, &mut p).is_err());
        assert!(matches!(s.step(&mut src, &mut p), Err(SessionError::AlreadyFailed(_))));
        assert!(s.override_tag(0, "x").is_err());
    }

    #[test]
    fn override_after_pause_is_too_late() {
        let req = InstructionRequest::single_modal("x");
        let mut s = Session::new(&req, BucketTable::default(), AssetStore::new()).unwrap();
        let mut src = ScriptedSource::chunked(ONE_IMAGE, 400);
        let mut p = SolidProvider::default();
        s.step(&mut src, &mut p).unwrap();
        assert_eq!(s.override_tag(0, "late"), Err(SessionError::OverrideTooLate { index: 0 }));
    }

    #[test]
    fn multimodal_request_needs_content() {
        let mut req = InstructionRequest::single_modal("x");
        req.mode = InputMode::Multimodal;
        assert!(req.validate().is_err());
    }
}
