//! Dataset layout, phoneme alignments, speaker splits and a synthetic
//! stand-in corpus.

mod alignment;
mod manifest;
mod toy;

pub use alignment::{
    read_lab, read_phoneme_string, upsample_phonemes, PhonemeAlignment, PhonemeSegment, PhonemeVocab, SILENCE,
};
pub use manifest::{build_manifest, split_speakers, train_val_split, Manifest, SplitSpec, Style, UtteranceRecord};
pub use toy::{synth_toy_corpus, synth_toy_utterance, ToyCorpusConfig};
