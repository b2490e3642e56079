//! File formats and the glue between datasets, features and probes used by
//! the command-line tool.

mod embedding;
mod pipeline;
mod report;

pub use embedding::{EmbeddingFile, MAGIC};
pub use pipeline::{
    extract_concept, probe_embeddings, read_results, representation_name, write_results, ProbeMode, ProbeRun, ResultRow,
};
pub use report::ReportTable;
