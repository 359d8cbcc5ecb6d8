//! Corpus-to-clusters pipeline for folktale motif analysis.
//!
//! The crate detects narrative motifs in tale texts through a chat-completion
//! provider, assembles binary tale-by-motif matrices, reduces them with UMAP,
//! and groups tales into types with a family of clustering algorithms selected
//! by silhouette score. Fitted type models can classify new (cross-lingual)
//! tales, and an embedding-based similarity view is available as an alternate
//! route.
//!
//! Module map:
//!
//! * [`corpus`] — tale corpora, gold annotations, region bookkeeping
//! * [`catalog`] — built-in motif inventories and prompt list rendering
//! * [`providers`] — chat/embedding wire clients, mocks, response cache
//! * [`detect`] — zero-shot prompt construction, response parsing, runs
//! * [`matrix`] — binary motif matrices, frequencies, Hamming distances
//! * [`reduce`] — UMAP fit/transform and trustworthiness
//! * [`cluster`] — K-means, PAM, Ward, DBSCAN, HDBSCAN, silhouette
//! * [`pipeline`] — model selection, type models, new-tale mapping
//! * [`report`] — profile/geography tables, emission, replication scoreboard
//! * [`synth`] — synthetic two-profile fixtures for offline evaluation

#![allow(clippy::needless_range_loop)]

pub mod catalog;
pub mod cluster;
pub mod corpus;
pub mod detect;
pub mod matrix;
pub mod pipeline;
pub mod providers;
pub mod reduce;
pub mod report;
pub mod rng;
pub mod synth;
