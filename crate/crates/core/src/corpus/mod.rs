//! News and supplementary-context ingestion, and rule-based pre-pairing of
//! candidate news to forecast tasks.

mod news;
mod pairing;
mod supplementary;

pub use news::{ingest_news, ingest_news_detailed, NewsCorpus, NewsFormat, NewsIngest, NewsItem};
pub use pairing::{default_lookback, prepair, region_matches, CandidateSet, PairingRules, INTERNATIONAL};
pub use supplementary::{
    read_supplementary, render_supplementary, task_dates, vocabulary, Fact, FragmentSlot,
    SupplementaryFragment, SupplementaryKind, SupplementaryRecord,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CorpusError {
    #[error("line {line}: {reason}")]
    Ingest { line: usize, reason: String },
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, CorpusError>;
