use num_bigint::BigUint;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use vaxledger_core::clock::Timestamp;
use vaxledger_core::crypto::{
    decrypt_challenge, encrypt_challenge, generate_pseudo_uuid, generate_secret_code, sha256, sha256_hex, ChallengeNumber,
    HexDigest, RandomFactor, SecretCodeMode, StaticKey,
};
use vaxledger_core::ledger::{solve, BlockHeader};

/// ceil(log2 H) * 5 with H = 0 mapped to 0, via arbitrary precision.
fn faithful_oracle(pseudo: &HexDigest, pin: &str) -> u32 {
    let h = BigUint::from_bytes_be(&sha256(format!("{pseudo}{pin}").as_bytes()));
    if h == BigUint::ZERO {
        return 0;
    }
    (h - 1u32).bits() as u32 * 5
}

fn unique_oracle(pseudo: &HexDigest, pin: &str, retry: u32) -> u32 {
    let h = BigUint::from_bytes_be(&sha256(format!("{pseudo}{pin}{retry}").as_bytes()));
    1000 + u32::try_from(h % 9000u32).unwrap()
}

#[test]
fn faithful_code_distribution() {
    let mut rng = ChaCha20Rng::seed_from_u64(10_000);
    let n = 10_000;
    let (mut top, mut second) = (0, 0);
    for i in 0..n {
        let pseudo = generate_pseudo_uuid(&format!("citizen-{i}"), RandomFactor(rng.next_u64()));
        let pin = format!("{}", rng.gen_range(110_001..=855_126));
        let code = generate_secret_code(&pseudo, &pin, SecretCodeMode::Faithful, 0);
        assert_eq!(code, faithful_oracle(&pseudo, &pin));
        assert!(code.is_multiple_of(5) && code <= 1280);
        top += usize::from(code == 1280);
        second += usize::from(code == 1275);
    }
    let (f1280, f1275) = (top as f64 / n as f64, second as f64 / n as f64);
    assert!((0.45..=0.55).contains(&f1280), "{f1280}");
    assert!((0.20..=0.30).contains(&f1275), "{f1275}");
}

#[test]
fn unique_codes_match_oracle_and_range() {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    for i in 0..2000 {
        let pseudo = generate_pseudo_uuid(&format!("c{i}"), RandomFactor(rng.next_u64()));
        let retry = rng.gen_range(0..4);
        let code = generate_secret_code(&pseudo, "380001", SecretCodeMode::Unique, retry);
        assert_eq!(code, unique_oracle(&pseudo, "380001", retry));
        assert!((1000..=9999).contains(&code));
    }
}

fn random_key(rng: &mut ChaCha20Rng) -> StaticKey {
    let mut b = [0u8; 32];
    rng.fill_bytes(&mut b);
    StaticKey(sha256_hex(&b))
}

#[test]
fn correct_key_always_solves() {
    let mut rng = ChaCha20Rng::seed_from_u64(100);
    for _ in 0..100 {
        let key = random_key(&mut rng);
        let n = ChallengeNumber::random(&mut rng);
        assert_eq!(decrypt_challenge(&encrypt_challenge(n, &key), &key).unwrap(), n);
    }
}

#[test]
fn wrong_key_never_accepted() {
    let mut rng = ChaCha20Rng::seed_from_u64(1000);
    let mut accepted = 0;
    for _ in 0..1000 {
        let key = random_key(&mut rng);
        let wrong = random_key(&mut rng);
        let n = ChallengeNumber::random(&mut rng);
        if decrypt_challenge(&encrypt_challenge(n, &key), &wrong).ok() == Some(n) {
            accepted += 1;
        }
    }
    assert_eq!(accepted, 0);
}

#[test]
fn mining_work_is_geometric() {
    // Expected hashes per block are 2^d; the nonce is hashes - 1.
    let d = 8;
    let blocks = 300;
    let mut total = 0u64;
    for i in 0..blocks {
        let mut h = BlockHeader {
            height: i,
            previous_hash: HexDigest::zero(),
            merkle_root: sha256_hex(&i.to_be_bytes()),
            timestamp: Timestamp::from_unix(1_622_505_600),
            block_size: 1,
            block_address: HexDigest::zero(),
            nonce: 0,
            difficulty: d,
        };
        solve(&mut h);
        assert!(h.block_address.leading_zero_bits() >= d);
        assert_eq!(h.block_address, h.compute_address());
        total += h.nonce + 1;
    }
    let mean = total as f64 / blocks as f64;
    // sd of the mean is about 256 / sqrt(300) = 14.8; allow 4 sd
    assert!((256.0 - 60.0..=256.0 + 60.0).contains(&mean), "{mean}");
}
