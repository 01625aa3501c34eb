use cascade::snapshot::{self, Snapshot};
use cascade_core::eval::BenchmarkParams;
use cascade_core::*;

fn bench_index() -> Snapshot {
    let b = gen_benchmark(&BenchmarkParams {
        n_docs: 300,
        n_queries: 10,
        ..Default::default()
    })
    .unwrap();
    Snapshot {
        params: Bm25Params::new(1.2, 0.75).unwrap(),
        index: InvertedIndex::build(&b.corpus, &SimpleTokenizer).unwrap(),
    }
}

#[test]
fn round_trip_preserves_index_and_params() {
    let snap = bench_index();
    let bytes = snapshot::encode(&snap).unwrap();
    let back = snapshot::decode(&bytes).unwrap();
    assert_eq!(back, snap);
    let q = tokenize("t04000 t00001 t02500");
    assert_eq!(back.index.bm25_topk(&back.params, &q, 50), snap.index.bm25_topk(&snap.params, &q, 50));
}

#[test]
fn rebuild_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.idx"), dir.path().join("b.idx"));
    snapshot::save(&a, &bench_index()).unwrap();
    snapshot::save(&b, &bench_index()).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(snapshot::load(&a).unwrap(), bench_index());
}

#[test]
fn header_layout() {
    let corpus = Corpus::from_documents([Document::new("d1", "", "a a b")]).unwrap();
    let snap = Snapshot {
        params: Bm25Params::default(),
        index: InvertedIndex::build(&corpus, &SimpleTokenizer).unwrap(),
    };
    let bytes = snapshot::encode(&snap).unwrap();
    let mut want = Vec::new();
    want.extend_from_slice(b"CASCIDX\0");
    want.extend_from_slice(&1u32.to_le_bytes());
    want.extend_from_slice(&0.9f64.to_le_bytes());
    want.extend_from_slice(&0.4f64.to_le_bytes());
    want.extend_from_slice(&1u32.to_le_bytes());
    want.extend_from_slice(&3.0f64.to_le_bytes());
    want.extend_from_slice(&2u32.to_le_bytes());
    for chunk in [&2u32.to_le_bytes()[..], b"d1", &3u32.to_le_bytes()] {
        want.extend_from_slice(chunk);
    }
    for (term, tf) in [("a", 2u32), ("b", 1)] {
        want.extend_from_slice(&1u32.to_le_bytes());
        want.extend_from_slice(term.as_bytes());
        want.extend_from_slice(&1u32.to_le_bytes());
        want.extend_from_slice(&0u32.to_le_bytes());
        want.extend_from_slice(&tf.to_le_bytes());
    }
    assert_eq!(bytes, want);
}

#[test]
fn corruption_is_detected() {
    let good = snapshot::encode(&bench_index()).unwrap();
    let mut bad_magic = good.clone();
    bad_magic[0] = b'X';
    assert!(snapshot::decode(&bad_magic).unwrap_err().to_string().contains("magic"));

    let mut bad_version = good.clone();
    bad_version[8] = 9;
    assert!(snapshot::decode(&bad_version).unwrap_err().to_string().contains("version"));

    for cut in [10, 40, good.len() / 2, good.len() - 1] {
        assert!(snapshot::decode(&good[..cut]).is_err(), "truncated at {cut}");
    }
    let mut trailing = good.clone();
    trailing.push(0);
    assert!(snapshot::decode(&trailing).unwrap_err().to_string().contains("trailing"));

    // avg_doc_length lives right after magic, version, k1, b and doc_count.
    let mut bad_avg = good;
    bad_avg[32..40].copy_from_slice(&1234.5f64.to_le_bytes());
    assert!(snapshot::decode(&bad_avg).unwrap_err().to_string().contains("avg_doc_length"));
}
