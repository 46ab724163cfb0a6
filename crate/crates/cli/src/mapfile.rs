//! Encrypted identity-to-pseudonym map.
//!
//! File layout: 12-byte nonce followed by the ChaCha20-Poly1305 ciphertext of
//! a JSON object `{identity: pseudonym}`. The cipher key is
//! `SHA-256("privmine-map" || key)`; the nonce is the first 12 bytes of
//! `SHA-256(seed || plaintext)` so reruns produce identical files.

use std::collections::BTreeMap;

use chacha20poly1305::aead::{Aead, KeyInit};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce};
use sha2::{Digest, Sha256};

use privmine_core::PseudonymMap;

use crate::failure::{CliResult, Failure};

const NONCE_LEN: usize = 12;

fn cipher(key: &[u8]) -> ChaCha20Poly1305 {
    let digest = Sha256::new()
        .chain_update(b"privmine-map")
        .chain_update(key)
        .finalize();
    ChaCha20Poly1305::new(Key::from_slice(&digest))
}

pub fn seal(map: &PseudonymMap, key: &[u8], seed: u64) -> CliResult<Vec<u8>> {
    let pairs: BTreeMap<&str, &str> = map.iter().collect();
    let plaintext = serde_json::to_vec(&pairs).map_err(|e| Failure::internal(e.to_string()))?;
    let digest = Sha256::new()
        .chain_update(seed.to_le_bytes())
        .chain_update(&plaintext)
        .finalize();
    let nonce = Nonce::from_slice(&digest[..NONCE_LEN]);
    let ciphertext = cipher(key)
        .encrypt(nonce, plaintext.as_slice())
        .map_err(|_| Failure::internal("map encryption failed"))?;
    let mut out = nonce.to_vec();
    out.extend_from_slice(&ciphertext);
    Ok(out)
}

pub fn open(bytes: &[u8], key: &[u8]) -> CliResult<PseudonymMap> {
    if bytes.len() < NONCE_LEN {
        return Err(Failure::io("pseudonym map file is truncated"));
    }
    let (nonce, ciphertext) = bytes.split_at(NONCE_LEN);
    let plaintext = cipher(key)
        .decrypt(Nonce::from_slice(nonce), ciphertext)
        .map_err(|_| Failure::io("pseudonym map does not decrypt under this key"))?;
    let pairs: BTreeMap<String, String> =
        serde_json::from_slice(&plaintext).map_err(|e| Failure::io(e.to_string()))?;
    Ok(PseudonymMap::from_pairs(pairs)?)
}
