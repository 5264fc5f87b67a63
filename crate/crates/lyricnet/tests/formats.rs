use std::io::Cursor;

use lyricnet::corpus_io::{load_corpus, read_binary, read_jsonl, save_corpus, write_binary, write_jsonl, CorpusFormat};
use lyricnet::sidecar::{attach_embeddings, ltok_from_bytes, ltok_to_bytes, EmbeddingSidecar};
use lyricnet::Error;
use lyricnet_core::data::{synth_dataset, Corpus, SynthConfig};
use lyricnet_core::pooling::TokenEmbeddingMatrix;
use lyricnet_core::DenseMatrix;
use proptest::prelude::*;

fn corpus(n: usize, dim: usize) -> Corpus {
    let cfg = SynthConfig {
        with_stylometrics: true,
        ..SynthConfig::new(n, 21, dim)
    };
    let mut c = synth_dataset(&cfg);
    c.records[1].release_year = None;
    c
}

fn jsonl_bytes(c: &Corpus) -> Vec<u8> {
    let mut out = Vec::new();
    write_jsonl(&mut out, c).unwrap();
    out
}

fn binary_bytes(c: &Corpus) -> Vec<u8> {
    let mut out = Vec::new();
    write_binary(&mut out, c).unwrap();
    out
}

#[test]
fn jsonl_round_trip() {
    let c = corpus(40, 32);
    let back = read_jsonl(Cursor::new(jsonl_bytes(&c)), None, true).unwrap();
    assert!(back.issues.is_empty());
    assert_eq!(back.corpus, c);
}

#[test]
fn binary_round_trip_and_detection() {
    let c = corpus(40, 32);
    let back = read_binary(&binary_bytes(&c), None, true).unwrap();
    assert_eq!(back.corpus, c);

    let dir = tempfile::tempdir().unwrap();
    for (name, fmt) in [("a.jsonl", CorpusFormat::Jsonl), ("a.bin", CorpusFormat::Binary)] {
        let p = dir.path().join(name);
        save_corpus(&p, &c, fmt).unwrap();
        assert_eq!(CorpusFormat::detect(&p).unwrap(), fmt);
        assert_eq!(load_corpus(&p, None, true).unwrap().corpus, c);
    }
}

#[test]
fn binary_truncation_is_fatal_with_offset() {
    let bytes = binary_bytes(&corpus(5, 0));
    for cut in [3, 10, bytes.len() / 2, bytes.len() - 1] {
        let err = read_binary(&bytes[..cut], None, false).unwrap_err();
        assert!(err.to_string().contains("offset"), "{err}");
    }
    let mut extra = bytes.clone();
    extra.push(0);
    assert!(read_binary(&extra, None, false).is_err());
}

#[test]
fn short_ll_audio_names_field_and_line() {
    let mut c = corpus(4, 0);
    c.records[2].ll_audio.truncate(208);
    // Bypass the writer's validation by serialising the record by hand.
    let good = corpus(4, 0);
    let mut text = String::from_utf8(jsonl_bytes(&good)).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let bad_line = serde_json::to_string(&c.records[2]).unwrap();
    text = [lines[0], lines[1], lines[2], bad_line.as_str(), lines[4]].join("\n");

    let err = read_jsonl(Cursor::new(text.as_bytes()), None, true).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("ll_audio"), "{msg}");
    assert!(msg.contains("line 4"), "{msg}");
    assert!(msg.contains("208"), "{msg}");
    assert_eq!(err.exit_code(), 3);

    let lenient = read_jsonl(Cursor::new(text.as_bytes()), None, false).unwrap();
    assert_eq!(lenient.corpus.records.len(), 3);
    assert_eq!(lenient.issues.len(), 1);
    assert_eq!(lenient.issues[0].location, "line 4");
    assert_eq!(
        lenient.issues[0].track_id.as_deref(),
        Some(c.records[2].track_id.as_str())
    );
}

#[test]
fn header_only_file_is_an_empty_corpus() {
    let c = Corpus {
        header: corpus(2, 0).header,
        records: vec![],
    };
    let bytes = jsonl_bytes(&c);
    assert_eq!(bytes.iter().filter(|&&b| b == b'\n').count(), 1);
    let back = read_jsonl(Cursor::new(bytes), None, true).unwrap();
    assert!(back.corpus.records.is_empty());
    assert!(read_jsonl(Cursor::new(Vec::new()), None, true).is_err());
}

#[test]
fn duplicate_ids_rejected() {
    let c = corpus(3, 0);
    let mut text = String::from_utf8(jsonl_bytes(&c)).unwrap();
    let dup = text.lines().nth(1).unwrap().to_string();
    text.push_str(&dup);
    text.push('\n');
    assert!(read_jsonl(Cursor::new(text.as_bytes()), None, true).is_err());
    let lenient = read_jsonl(Cursor::new(text.as_bytes()), None, false).unwrap();
    assert_eq!(lenient.corpus.records.len(), 3);
    assert_eq!(lenient.issues.len(), 1);
}

#[test]
fn malformed_json_line_reports_line() {
    let c = corpus(2, 0);
    let mut text = String::from_utf8(jsonl_bytes(&c)).unwrap();
    text.push_str("{\"track_id\": \n");
    let err = read_jsonl(Cursor::new(text.as_bytes()), None, true).unwrap_err();
    assert!(err.to_string().contains("line 4"), "{err}");
}

#[test]
fn sidecar_round_trip_and_attach() {
    let full = corpus(12, 32);
    let side = EmbeddingSidecar::from_corpus(&full);
    assert_eq!(side.dim, 32);
    let back = EmbeddingSidecar::from_bytes(&side.to_bytes().unwrap(), None).unwrap();
    assert_eq!(back, side);

    let mut bare = full.clone();
    bare.header.embedding_dim = 0;
    bare.header.embedding_source.clear();
    for r in &mut bare.records {
        r.lyric_embedding = None;
    }
    attach_embeddings(&mut bare, &back, &full.header.embedding_source).unwrap();
    assert_eq!(bare, full);

    let mut partial = back.clone();
    partial.entries.pop();
    assert!(attach_embeddings(&mut bare, &partial, "x").is_err());
}

#[test]
fn sidecar_corruption_detected() {
    let side = EmbeddingSidecar::from_corpus(&corpus(3, 32));
    let bytes = side.to_bytes().unwrap();
    assert!(EmbeddingSidecar::from_bytes(&bytes[..bytes.len() - 2], None).is_err());
    let mut extra = bytes.clone();
    extra.extend_from_slice(&[0, 0, 0, 0]);
    assert!(EmbeddingSidecar::from_bytes(&extra, None).is_err());
    let mut magic = bytes.clone();
    magic[0] = b'X';
    assert!(matches!(
        EmbeddingSidecar::from_bytes(&magic, None),
        Err(Error::Data { .. })
    ));
    let mut dup = side.clone();
    dup.entries.push(dup.entries[0].clone());
    assert!(EmbeddingSidecar::from_bytes(&dup.to_bytes().unwrap(), None).is_err());
}

proptest! {
    #[test]
    fn ltok_round_trip(t in 1usize..6, d in 1usize..7, cls in proptest::option::of(0usize..6), seed in any::<u32>()) {
        let cls = cls.map(|c| c % t);
        let data: Vec<f32> = (0..t * d).map(|i| ((i as u32).wrapping_mul(2654435761) ^ seed) as f32 / 1e9).collect();
        let m = TokenEmbeddingMatrix::new(DenseMatrix::from_vec(t, d, data).unwrap(), cls).unwrap();
        let bytes = ltok_to_bytes(&m);
        let back = ltok_from_bytes(&bytes, None).unwrap();
        prop_assert_eq!(back.data().as_slice(), m.data().as_slice());
        prop_assert_eq!(back.cls_index(), cls);
        prop_assert!(ltok_from_bytes(&bytes[..bytes.len() - 1], None).is_err());
    }
}
