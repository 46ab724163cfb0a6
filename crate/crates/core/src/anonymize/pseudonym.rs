use std::collections::BTreeMap;

use hmac::{Hmac, Mac};
use serde::{Deserialize, Serialize};
use sha2::Sha256;

use crate::error::{Error, Result};
use crate::eventlog::{EventLog, UNKNOWN_RESOURCE};

/// Bytes of the HMAC output kept in a pseudonym (16 hex characters).
const PSEUDONYM_BYTES: usize = 8;

/// HMAC-SHA256 of the identity under `key`, truncated and hex encoded.
pub fn pseudonym(key: &[u8], identity: &str) -> String {
    let mut mac = Hmac::<Sha256>::new_from_slice(key).expect("HMAC accepts keys of any length");
    mac.update(identity.as_bytes());
    let digest = mac.finalize().into_bytes();
    hex::encode(&digest[..PSEUDONYM_BYTES])
}

/// Identity to pseudonym mapping. Never holds the key.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PseudonymMap {
    forward: BTreeMap<String, String>,
}

impl PseudonymMap {
    pub fn derive<I, S>(key: &[u8], identities: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        if key.is_empty() {
            return Err(Error::param("pseudonym key must not be empty"));
        }
        Self::from_pairs(
            identities
                .into_iter()
                .map(|id| (id.as_ref().to_string(), pseudonym(key, id.as_ref()))),
        )
    }

    /// Every identity maps to itself; stands in for the linkage when the
    /// protected log was never pseudonymized.
    pub fn identity<I, S>(identities: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        PseudonymMap {
            forward: identities
                .into_iter()
                .map(|id| (id.as_ref().to_string(), id.as_ref().to_string()))
                .collect(),
        }
    }

    /// Fails on two identities sharing a pseudonym.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        let forward: BTreeMap<String, String> = pairs.into_iter().collect();
        let mut seen: BTreeMap<&str, &str> = BTreeMap::new();
        for (id, p) in &forward {
            if let Some(other) = seen.insert(p.as_str(), id.as_str()) {
                return Err(Error::PseudonymCollision(other.to_string(), id.clone()));
            }
        }
        Ok(PseudonymMap { forward })
    }

    pub fn pseudonym_of(&self, identity: &str) -> Option<&str> {
        self.forward.get(identity).map(String::as_str)
    }

    pub fn identity_of(&self, pseudonym: &str) -> Option<&str> {
        self.forward
            .iter()
            .find(|(_, p)| p.as_str() == pseudonym)
            .map(|(id, _)| id.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.forward.iter().map(|(a, b)| (a.as_str(), b.as_str()))
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    /// Rewrites the resource of every event whose individual is mapped.
    pub fn apply(&self, log: &EventLog) -> Result<EventLog> {
        EventLog::from_events(log.events().cloned().map(|mut e| {
            if let Some(p) = self.forward.get(&e.resource) {
                e.resource = p.clone();
            }
            e
        }))
    }
}

/// Replaces each participating resource by its keyed pseudonym.
pub fn pseudonymize(
    log: &EventLog,
    key: &[u8],
    include_unknown: bool,
) -> Result<(EventLog, PseudonymMap)> {
    let map = PseudonymMap::derive(key, log.participants(include_unknown))?;
    Ok((map.apply(log)?, map))
}

pub(crate) fn is_participant(resource: &str, include_unknown: bool) -> bool {
    include_unknown || resource != UNKNOWN_RESOURCE
}
