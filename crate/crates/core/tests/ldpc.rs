use std::collections::HashSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twodos::ldpc::{
    generate_regular, near_square_dims, read_alist, write_alist, CodeMetadata, CodeParams, Encoder, PageMapping,
    ParityCheckMatrix,
};

/// Exhaustive row-pair intersection: the largest number of columns any two
/// rows share.
fn max_shared_columns(h: &ParityCheckMatrix) -> usize {
    let sets: Vec<HashSet<u32>> = h.rows().iter().map(|r| r.iter().copied().collect()).collect();
    let mut worst = 0;
    for a in 0..sets.len() {
        for b in a + 1..sets.len() {
            worst = worst.max(sets[a].intersection(&sets[b]).count());
        }
    }
    worst
}

#[test]
fn benchmark_code_is_regular_and_free_of_four_cycles() {
    let h = generate_regular(&CodeParams::new(3, 30, 10_000, 1).unwrap()).unwrap();
    assert_eq!((h.n(), h.m()), (10_000, 1000));
    assert_eq!(h.regular_degrees(), Some((3, 30)));
    assert!(max_shared_columns(&h) <= 1);
    let enc = Encoder::new(&h);
    assert!(enc.rate() >= 0.9 - 1e-12);
}

#[test]
fn encoded_messages_satisfy_every_check() {
    let h = generate_regular(&CodeParams::new(3, 6, 600, 5).unwrap()).unwrap();
    let enc = Encoder::new(&h);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let msg: Vec<u8> = (0..enc.k()).map(|_| rng.random::<bool>() as u8).collect();
        let cw = enc.encode(&msg).unwrap();
        assert!(h.is_codeword(&cw));
        assert!(h.syndrome(&cw).unwrap().iter().all(|&s| s == 0));
        assert_eq!(enc.extract(&cw).unwrap(), msg);
    }
    assert!(enc.encode(&vec![0; enc.k() + 1]).is_err());
}

#[test]
fn alist_files_round_trip_with_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let params = CodeParams::new(3, 12, 480, 8).unwrap();
    let h = generate_regular(&params).unwrap();
    let path = dir.path().join("code.alist");
    write_alist(&h, &path).unwrap();
    assert_eq!(read_alist(&path).unwrap(), h);

    let meta = CodeMetadata::new(&params, &Encoder::new(&h));
    let text = serde_json::to_string(&meta).unwrap();
    assert_eq!(serde_json::from_str::<CodeMetadata>(&text).unwrap(), meta);
    assert_eq!(meta.k, meta.n - meta.rank);

    std::fs::write(&path, "3 2\n").unwrap();
    assert!(read_alist(&path).is_err());
}

#[test]
fn construction_is_reproducible_by_seed() {
    let p = CodeParams::new(3, 6, 300, 77).unwrap();
    assert_eq!(generate_regular(&p).unwrap(), generate_regular(&p).unwrap());
    let q = CodeParams::new(3, 6, 300, 78).unwrap();
    assert_ne!(generate_regular(&p).unwrap(), generate_regular(&q).unwrap());
}

#[test]
fn impossible_parameters_are_rejected() {
    assert!(CodeParams::new(3, 6, 301, 1).is_err());
    assert!(CodeParams::new(0, 6, 300, 1).is_err());
    // too few checks to avoid 4-cycles
    assert!(generate_regular(&CodeParams::new(3, 30, 300, 1).unwrap()).is_err());
}

#[test]
fn codewords_survive_the_page_mapping() {
    let h = generate_regular(&CodeParams::new(3, 6, 400, 2).unwrap()).unwrap();
    let enc = Encoder::new(&h);
    let cw = enc.encode(&vec![1; enc.k()]).unwrap();
    let dims = near_square_dims(400);
    assert_eq!(dims.0 * dims.1, 400);
    let map = PageMapping::row_major(400, dims).unwrap();
    let page = map.to_page(&cw).unwrap();
    assert_eq!(page.bits(), &cw[..]);
    assert_eq!(map.from_page(&page).unwrap(), cw);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_codes_are_regular_and_four_cycle_free(
        dc in prop::sample::select(vec![4usize, 5, 6, 9]),
        blocks in 8usize..30,
        seed in any::<u64>(),
    ) {
        let n = dc * blocks * 2;
        let h = generate_regular(&CodeParams::new(3, dc, n, seed).unwrap()).unwrap();
        prop_assert_eq!(h.regular_degrees(), Some((3, dc)));
        prop_assert!(max_shared_columns(&h) <= 1);
    }
}
