//! Corpus records, cleaning, label normalisation, splitting and feature assembly.

mod clean;
mod features;
mod mask;
pub(crate) mod record;
mod split;
mod synth;

pub use clean::{clean_corpus, clean_corpus_with, RejectionTally, MAX_LYRICS_CHARS, MIN_LYRICS_CHARS};
pub use features::{assemble_features, assemble_features_with, BlockScaler, FeatureBundle, InputScalers, ScaleKind};
pub use mask::{Modality, ModalityMask};
pub use record::{
    normalize_popularity, Corpus, CorpusHeader, TrackRecord, DEFAULT_LANGUAGES, HL_DIM, LL_DIM, META_ARTIST_POPULARITY,
    META_DIM, SCHEMA_VERSION, STYLO_DIM,
};
pub(crate) use split::hex as hex_digest;
pub use split::{strat_bin, stratified_kfold, SplitPlan, TEST_FRACTION_DENOMINATOR};
pub use synth::{synth_dataset, PlantedSignal, SynthConfig};
