//! Optional LLM client for chapter-level component counting.
//!
//! Nothing here opens a connection unless an [`HttpTransport`] is built
//! from an explicit endpoint; [`MockTransport`] replays a JSONL script.

pub mod client;
pub mod resolver;
pub mod response;
pub mod template;
pub mod transport;

pub use client::{
    chunk_text, plan_chapter, run_chapter_counts, whitespace_tokens, ChapterCost, ChapterSkipped, ChapterText,
    ClientConfig, ClientError, CostTelemetry, CountRun, Granularity, PlannedRequest, CHUNK_TOKENS,
};
pub use resolver::LlmNameResolver;
pub use response::{extract_object, parse_count_response, ParsedCounts, ResponseError};
pub use template::{render_prompt, tag_description, TemplateError, TemplateName, Vars};
pub use transport::{
    ChatRequest, ChatResponse, EndpointConfig, HttpTransport, Message, MockTransport, ScriptEntry, Transport,
    TransportError,
};
