//! Dense-id vocabularies for locations, objects, and r-th-order sequences.

use std::collections::HashMap;

use crate::{Error, Result};

/// Sentinel id for a sequence that is absent from a frozen vocabulary.
/// Units carrying it score with pure-prior probability downstream.
pub const UNKNOWN_SEQ: u32 = u32::MAX;

/// Sentinel id for an object absent from a frozen vocabulary.
pub const UNKNOWN_OBJ: u32 = u32::MAX;

/// An insertion-ordered bijection between raw string ids and dense integers.
#[derive(Debug, Clone, Default)]
pub struct StringVocab {
    by_name: HashMap<String, u32>,
    names: Vec<String>,
}

impl StringVocab {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Dense id for `name`, inserting it if unseen.
    pub fn encode(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.by_name.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.by_name.insert(name.to_owned(), id);
        self.names.push(name.to_owned());
        id
    }

    /// Dense id for `name` without inserting.
    pub fn get(&self, name: &str) -> Option<u32> {
        self.by_name.get(name).copied()
    }

    pub fn decode(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Bijection between sequence keys (tuples of dense location ids) and dense
/// sequence ids.
#[derive(Debug, Clone, Default)]
pub struct SequenceVocab {
    by_key: HashMap<Box<[u32]>, u32>,
    keys: Vec<Box<[u32]>>,
}

impl SequenceVocab {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn encode(&mut self, key: &[u32]) -> u32 {
        if let Some(&id) = self.by_key.get(key) {
            return id;
        }
        let id = self.keys.len() as u32;
        self.by_key.insert(key.into(), id);
        self.keys.push(key.into());
        id
    }

    pub fn get(&self, key: &[u32]) -> Option<u32> {
        self.by_key.get(key).copied()
    }

    /// The location-id tuple behind a sequence id.
    pub fn key(&self, id: u32) -> &[u32] {
        &self.keys[id as usize]
    }

    pub fn keys(&self) -> impl Iterator<Item = &[u32]> {
        self.keys.iter().map(|k| k.as_ref())
    }
}

/// The full vocabulary set for a corpus: locations, objects, and sequences of
/// exactly `order + 1` locations.
#[derive(Debug, Clone)]
pub struct Vocabularies {
    pub order: usize,
    pub locations: StringVocab,
    pub objects: StringVocab,
    pub sequences: SequenceVocab,
}

impl Vocabularies {
    pub fn new(order: usize) -> Result<Self> {
        if order < 1 {
            return Err(Error::Config(format!(
                "sequence order must be >= 1, got {order}"
            )));
        }
        Ok(Vocabularies {
            order,
            locations: StringVocab::new(),
            objects: StringVocab::new(),
            sequences: SequenceVocab::new(),
        })
    }

    pub fn num_sequences(&self) -> usize {
        self.sequences.len()
    }

    pub fn num_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn num_locations(&self) -> usize {
        self.locations.len()
    }

    /// Encode a window of raw location names, growing the vocabularies.
    pub fn encode_sequence(&mut self, window: &[&str]) -> u32 {
        debug_assert_eq!(window.len(), self.order + 1);
        let key: Vec<u32> = window.iter().map(|l| self.locations.encode(l)).collect();
        self.sequences.encode(&key)
    }

    /// Encode a window against a frozen vocabulary. Windows containing any
    /// unseen location, and seen-location windows that never occurred as a
    /// sequence, map to [`UNKNOWN_SEQ`].
    pub fn encode_sequence_frozen(&self, window: &[&str]) -> u32 {
        let mut key = Vec::with_capacity(window.len());
        for loc in window {
            match self.locations.get(loc) {
                Some(id) => key.push(id),
                None => return UNKNOWN_SEQ,
            }
        }
        self.sequences.get(&key).unwrap_or(UNKNOWN_SEQ)
    }

    /// Raw location names of a known sequence id.
    pub fn decode_sequence(&self, id: u32) -> Vec<&str> {
        self.sequences
            .key(id)
            .iter()
            .map(|&l| self.locations.decode(l))
            .collect()
    }
}
