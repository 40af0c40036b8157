use proptest::prelude::*;

use vaxledger_core::clock::Timestamp;
use vaxledger_core::crypto::{
    decrypt_challenge, encrypt_challenge, generate_secret_code, generate_vaccination_id, sha256, CanonicalRecord,
    ChallengeNumber, HexDigest, SecretCodeMode, StaticKey,
};
use vaxledger_core::ledger::{proof_from_leaves, root_of_leaves, verify_merkle_proof};

fn digest() -> impl Strategy<Value = HexDigest> {
    any::<[u8; 32]>().prop_map(|b| HexDigest::from_bytes(&b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn every_merkle_proof_verifies(seeds in prop::collection::vec(any::<u64>(), 1..48), pick in any::<prop::sample::Index>()) {
        let leaves: Vec<[u8; 32]> = seeds.iter().map(|s| sha256(&s.to_le_bytes())).collect();
        let root = HexDigest::from_bytes(&root_of_leaves(&leaves).unwrap());
        let i = pick.index(leaves.len());
        let proof = proof_from_leaves(&leaves, i).unwrap();
        prop_assert!(verify_merkle_proof(&leaves[i], &proof, &root));
        let depth = (leaves.len() as f64).log2().ceil() as usize;
        prop_assert_eq!(proof.len(), depth);
        let mut forged = leaves[i];
        forged[31] ^= 1;
        prop_assert!(!verify_merkle_proof(&forged, &proof, &root));
    }

    #[test]
    fn challenge_round_trip(key in digest(), n in 1_000_000_000u64..10_000_000_000, other in digest()) {
        let key = StaticKey(key);
        let n = ChallengeNumber::new(n).unwrap();
        let ct = encrypt_challenge(n, &key);
        prop_assert_eq!(ct.len(), 32);
        prop_assert_eq!(decrypt_challenge(&ct, &key).unwrap(), n);
        prop_assume!(other != key.0);
        prop_assert_ne!(decrypt_challenge(&ct, &StaticKey(other)).ok(), Some(n));
    }

    #[test]
    fn challenge_range_enforced(n in any::<u64>()) {
        let ok = (1_000_000_000..10_000_000_000).contains(&n);
        prop_assert_eq!(ChallengeNumber::new(n).is_ok(), ok);
    }

    #[test]
    fn secret_code_ranges(p in digest(), pin in 100_000u32..1_000_000, retry in 0u32..16) {
        let pin = pin.to_string();
        let f = generate_secret_code(&p, &pin, SecretCodeMode::Faithful, retry);
        prop_assert!(f.is_multiple_of(5) && f <= 1280);
        let u = generate_secret_code(&p, &pin, SecretCodeMode::Unique, retry);
        prop_assert!((1000..=9999).contains(&u));
    }

    #[test]
    fn canonical_bytes_ignore_insertion_order(fields in prop::collection::btree_map("[a-zA-Z]{1,8}", "[ -~]{0,12}", 1..10)) {
        let forward = fields.iter().fold(CanonicalRecord::new(), |r, (k, v)| r.field(k, v));
        let backward = fields.iter().rev().fold(CanonicalRecord::new(), |r, (k, v)| r.field(k, v));
        prop_assert_eq!(forward.to_bytes(), backward.to_bytes());
        let text = String::from_utf8(forward.to_bytes()).unwrap();
        let names: Vec<&str> = text.lines().map(|l| l.split_once('=').unwrap().0).collect();
        let mut sorted = names.clone();
        sorted.sort_unstable();
        prop_assert_eq!(names, sorted);
    }

    #[test]
    fn hex_digest_round_trip(bytes in any::<[u8; 32]>()) {
        let d = HexDigest::from_bytes(&bytes);
        prop_assert_eq!(d.to_bytes(), bytes);
        prop_assert_eq!(HexDigest::parse(d.as_str()).unwrap(), d.clone());
        let json = serde_json::to_string(&d).unwrap();
        prop_assert_eq!(serde_json::from_str::<HexDigest>(&json).unwrap(), d);
    }

    #[test]
    fn hex_digest_rejects_bad_input(s in "[0-9a-fA-Z]{0,70}") {
        let valid = s.len() == 64 && s.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b));
        prop_assert_eq!(HexDigest::parse(&s).is_ok(), valid);
    }

    #[test]
    fn timestamp_round_trip(secs in 0i64..4_102_444_800) {
        let t = Timestamp::from_unix(secs);
        prop_assert_eq!(Timestamp::parse(&t.to_string()).unwrap(), t);
        let json = serde_json::to_value(t).unwrap();
        prop_assert_eq!(serde_json::from_value::<Timestamp>(json).unwrap(), t);
    }

    #[test]
    fn vaccination_id_splits_back(p in digest(), dose in 1u32..10, code in "[A-Z]{2}", digits in 0u32..100_000_000) {
        let center = format!("{code}{digits:08}");
        let id = generate_vaccination_id(&p, dose, &center);
        prop_assert_eq!(&id[..64], p.as_str());
        prop_assert_eq!(&id[id.len() - 10..], center.as_str());
        prop_assert_eq!(id[64..id.len() - 10].parse::<u32>().unwrap(), dose);
    }
}
