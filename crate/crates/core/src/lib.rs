//! Multi-agent Brainwrite corpus generation and idea-diversity evaluation.
//!
//! The pipeline generates idea records under controlled conditions
//! ([`brainwrite`]), embeds them ([`embedding`]), clusters each group's pooled
//! vectors across a range of k ([`clustering`]) and scores every condition
//! cell by the Shannon entropy of its cluster occupancy ([`diversity`]).
//! [`sentiment`] scores interview text from next-token distributions and
//! [`survey`] scores SUS / Raw NASA-TLX questionnaires.

pub mod brainwrite;
pub mod clustering;
pub mod corpus;
pub mod diversity;
pub mod embedding;
mod par;
pub mod sentiment;
pub mod survey;

use thiserror::Error;

/// Umbrella error for operations spanning several modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Corpus(#[from] corpus::CorpusError),
    #[error(transparent)]
    Embedding(#[from] embedding::EmbeddingError),
    #[error(transparent)]
    Clustering(#[from] clustering::ClusteringError),
    #[error(transparent)]
    Diversity(#[from] diversity::DiversityError),
    #[error(transparent)]
    Brainwrite(#[from] brainwrite::BrainwriteError),
    #[error(transparent)]
    Sentiment(#[from] sentiment::SentimentError),
    #[error(transparent)]
    Survey(#[from] survey::SurveyError),
}
