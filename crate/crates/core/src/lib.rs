//! Extraction of disability percentages and compensation amounts from
//! Argentine traffic-accident rulings, by regular expressions or by
//! retrieval-augmented prompting of a chat model.

pub mod corpus;
pub mod entity;
pub mod error;
pub mod eval;
pub mod extract_llm;
pub mod extract_regex;
pub mod http;
pub mod jsonl;
pub mod numeric;
pub mod retrieval;
pub mod segmenter;
pub mod stats;

pub use corpus::{Document, ManifestEntry};
pub use entity::{EntityKind, Extraction, Method, SegmentRef};
pub use error::{Error, Result};
pub use eval::{EvalReport, GoldRecord, LabeledSample, NegativeGroup, Tolerances};
pub use extract_llm::{HallucinationConfig, LlmConfig, PromptTemplate};
pub use extract_regex::KeywordConfig;
pub use retrieval::{BlockKey, EmbedderSpec, Query, VectorIndex};
pub use segmenter::{Origin, Segment, SegmenterConfig, TokenBlock};
pub use stats::{CpiSeries, PointValueRecord, PvInputs, YearMonth};
