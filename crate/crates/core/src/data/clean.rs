use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::record::{TrackRecord, DEFAULT_LANGUAGES};

/// Lyrics shorter than this are placeholders or fragments.
pub const MIN_LYRICS_CHARS: u32 = 100;
/// Lyrics longer than this are usually scraped page noise.
pub const MAX_LYRICS_CHARS: u32 = 7_000;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectionTally {
    pub kept: usize,
    pub too_short: usize,
    pub too_long: usize,
    pub language: usize,
}

impl RejectionTally {
    pub fn rejected(&self) -> usize {
        self.too_short + self.too_long + self.language
    }
}

/// Keeps tracks whose lyrics length is within `[100, 7000]` characters and
/// whose language is one of en, es, pt, fr, de.
pub fn clean_corpus(records: Vec<TrackRecord>) -> (Vec<TrackRecord>, RejectionTally) {
    clean_corpus_with(records, &DEFAULT_LANGUAGES)
}

/// [`clean_corpus`] with a caller-supplied language whitelist. A record failing
/// several rules is tallied under the first: length, then language.
pub fn clean_corpus_with<S: AsRef<str>>(
    records: Vec<TrackRecord>,
    languages: &[S],
) -> (Vec<TrackRecord>, RejectionTally) {
    let mut tally = RejectionTally::default();
    let allowed = |lang: &String| languages.iter().any(|l| l.as_ref().eq_ignore_ascii_case(lang));
    let kept: Vec<TrackRecord> = records
        .into_iter()
        .filter(|r| {
            if r.lyrics_char_count < MIN_LYRICS_CHARS {
                tally.too_short += 1;
                false
            } else if r.lyrics_char_count > MAX_LYRICS_CHARS {
                tally.too_long += 1;
                false
            } else if !allowed(&r.language) {
                tally.language += 1;
                false
            } else {
                true
            }
        })
        .collect();
    tally.kept = kept.len();
    (kept, tally)
}
