use std::io::Write;
use std::path::Path;

use iconsearch_core::corpus::{Corpus, CorpusError, CorpusStats, ImageRecord};
use iconsearch_core::testkit::random_unit_rows;
use iconsearch_core::vector::{write_icnx, EmbeddingMatrix};
use proptest::prelude::*;

const FIVE_IMAGES: &str = r#"{"id":"a","row":0,"notations":["25I141","31D14"],"uri":"https://images.example.org/a.jpg"}
{"id":"b","row":1,"notations":["25I141"]}
{"id":"c","row":2,"notations":["34B11","25I141","31D14","11H(PAUL)"]}
{"id":"d","row":3,"notations":["31D14"]}
{"id":"e","row":4,"notations":["41A"]}
"#;

fn write_inputs(dir: &Path, rows: usize, metadata: &str) -> (std::path::PathBuf, std::path::PathBuf) {
    let emb = dir.join("in.icnx");
    let meta = dir.join("in.jsonl");
    let m = EmbeddingMatrix::<f32>::from_rows(4, &random_unit_rows(rows, 4, 1)).unwrap();
    let labels: Vec<String> = (0..rows).map(|i| i.to_string()).collect();
    write_icnx(&emb, &m, &labels).unwrap();
    std::fs::File::create(&meta).unwrap().write_all(metadata.as_bytes()).unwrap();
    (emb, meta)
}

#[test]
fn five_image_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let (emb, meta) = write_inputs(dir.path(), 5, FIVE_IMAGES);
    let (corpus, report) = Corpus::<f32>::ingest(&emb, &meta).unwrap();
    // 2 + 1 + 4 + 1 + 1 assignments over {25I141, 31D14, 34B11, 11H(PAUL), 41A}.
    assert_eq!(
        corpus.stats(),
        CorpusStats {
            n_images: 5,
            n_assignments: 9,
            n_unique_notations: 5
        }
    );
    assert_eq!(report.unparsed_notations, 0);
    assert_eq!(corpus.images_for_notation("25I141"), ["a", "b", "c"]);
    assert_eq!(corpus.images_for_notation("31D14"), ["a", "c", "d"]);
    assert!(corpus.images_for_notation("99").is_empty());
    assert_eq!(corpus.get_image("c").unwrap().notations.len(), 4);
    assert_eq!(
        corpus.get_image("a").unwrap(),
        &ImageRecord {
            image_id: "a".into(),
            embedding_row: 0,
            notations: vec!["25I141".into(), "31D14".into()],
            source_uri: Some("https://images.example.org/a.jpg".into()),
        }
    );
    assert_eq!(corpus.row_ids(), ["a", "b", "c", "d", "e"]);
}

#[test]
fn code_on_every_image() {
    let meta = "{\"id\":\"x\",\"row\":1,\"notations\":[\"2\"]}\n{\"id\":\"y\",\"row\":0,\"notations\":[\"2\",\"3\"]}\n";
    let dir = tempfile::tempdir().unwrap();
    let (emb, meta) = write_inputs(dir.path(), 2, meta);
    let (corpus, _) = Corpus::<f32>::ingest(&emb, &meta).unwrap();
    assert_eq!(corpus.images_for_notation("2"), ["x", "y"]);
    assert_eq!(corpus.row_ids(), ["y", "x"]);
}

#[test]
fn ingest_errors() {
    let dir = tempfile::tempdir().unwrap();
    let (emb, meta) = write_inputs(dir.path(), 5, "{\"id\":\"a\",\"row\":7,\"notations\":[\"2\"]}\n");
    assert!(matches!(
        Corpus::<f32>::ingest(&emb, &meta),
        Err(CorpusError::UnknownRowReference { row: 7, rows: 5, .. })
    ));

    let (emb, meta) = write_inputs(dir.path(), 6, FIVE_IMAGES);
    assert!(matches!(
        Corpus::<f32>::ingest(&emb, &meta),
        Err(CorpusError::RowCountMismatch { records: 5, rows: 6 })
    ));

    let (emb, meta) = write_inputs(dir.path(), 2, "{\"id\":\"a\",\"row\":0,\"notations\":[\"2\"]}\nnot json\n");
    assert!(matches!(
        Corpus::<f32>::ingest(&emb, &meta),
        Err(CorpusError::MalformedLine { line: 2, .. })
    ));
}

#[test]
fn empty_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let (emb, meta) = write_inputs(dir.path(), 0, "");
    let (corpus, _) = Corpus::<f32>::ingest(&emb, &meta).unwrap();
    assert_eq!(corpus.stats(), CorpusStats::default());
}

#[test]
fn persist_then_load() {
    let dir = tempfile::tempdir().unwrap();
    let (emb, meta) = write_inputs(dir.path(), 5, FIVE_IMAGES);
    let (corpus, _) = Corpus::<f32>::ingest(&emb, &meta).unwrap();
    let out = dir.path().join("store");
    corpus.persist(&out).unwrap();
    let (loaded, _) = Corpus::<f32>::load(&out).unwrap();
    assert_eq!(loaded.stats(), corpus.stats());
    for code in corpus.notation_codes() {
        assert_eq!(loaded.images_for_notation(code), corpus.images_for_notation(code));
    }
    assert_eq!(loaded.matrix(), corpus.matrix());
    assert_eq!(loaded.row_ids(), corpus.row_ids());
}

fn records() -> impl Strategy<Value = Vec<Vec<String>>> {
    let code = prop::sample::select(vec!["2", "25", "25I141", "31D14", "34B11", "41A", "11H(PAUL)", "x?"]);
    prop::collection::vec(prop::collection::vec(code.prop_map(String::from), 1..5), 0..30)
}

proptest! {
    #[test]
    fn transpose_and_permutation_invariance(lists in records(), shuffle_seed in any::<u64>()) {
        let n = lists.len();
        let mut lines: Vec<ImageRecord> = lists
            .iter()
            .enumerate()
            .map(|(i, codes)| ImageRecord {
                image_id: format!("img{i:03}"),
                embedding_row: i,
                notations: codes.clone(),
                source_uri: None,
            })
            .collect();
        let matrix = EmbeddingMatrix::<f32>::new(3, vec![1.0; n * 3]).unwrap();
        let (corpus, _) = Corpus::from_records(matrix.clone(), lines.clone()).unwrap();

        for record in corpus.records() {
            for code in &record.notations {
                prop_assert!(corpus.images_for_notation(code).contains(&record.image_id));
            }
        }
        for code in corpus.notation_codes() {
            for id in corpus.images_for_notation(code) {
                prop_assert!(corpus.get_image(id).unwrap().notations.contains(&code.to_string()));
            }
        }

        // Deterministic Fisher-Yates driven by the seed.
        let mut state = shuffle_seed | 1;
        for i in (1..lines.len()).rev() {
            state ^= state << 13; state ^= state >> 7; state ^= state << 17;
            lines.swap(i, (state % (i as u64 + 1)) as usize);
        }
        let (shuffled, _) = Corpus::from_records(matrix, lines).unwrap();
        prop_assert_eq!(shuffled.stats(), corpus.stats());
        prop_assert!(corpus.stats().n_unique_notations <= corpus.stats().n_assignments);
        prop_assert!(corpus.stats().n_images <= corpus.stats().n_assignments);
    }
}
