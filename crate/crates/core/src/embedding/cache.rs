use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{EmbeddingError, EmbeddingProvider, EmbeddingSet, EmbeddingVector, ProviderError};
use crate::corpus::IdeaRecord;

/// One cache line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub id: String,
    pub dim: usize,
    pub vector: Vec<f64>,
    pub provider_id: String,
    pub model_id: String,
}

/// JSON-Lines vector cache. Rewritten whole through a temp file and rename,
/// so readers never see a partial line.
#[derive(Debug)]
pub struct EmbeddingCache {
    path: PathBuf,
    entries: BTreeMap<String, CacheEntry>,
}

impl EmbeddingCache {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, EmbeddingError> {
        let path = path.into();
        let mut entries = BTreeMap::new();
        if path.exists() {
            let reader = BufReader::new(fs::File::open(&path)?);
            let mut dim = None;
            for (idx, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let entry: CacheEntry =
                    serde_json::from_str(&line).map_err(|e| EmbeddingError::CacheFormat {
                        line: idx + 1,
                        message: e.to_string(),
                    })?;
                if entry.vector.len() != entry.dim {
                    return Err(EmbeddingError::CacheFormat {
                        line: idx + 1,
                        message: format!("dim {} but {} values", entry.dim, entry.vector.len()),
                    });
                }
                match dim {
                    None => dim = Some(entry.dim),
                    Some(d) if d != entry.dim => {
                        return Err(EmbeddingError::CacheFormat {
                            line: idx + 1,
                            message: format!("dim {} differs from earlier {d}", entry.dim),
                        })
                    }
                    Some(_) => {}
                }
                entries.insert(entry.id.clone(), entry);
            }
        }
        Ok(Self { path, entries })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn dim(&self) -> Option<usize> {
        self.entries.values().next().map(|e| e.dim)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&CacheEntry> {
        self.entries.get(id)
    }

    fn lookup(&self, id: &str, provider_id: &str, model_id: &str) -> Option<&CacheEntry> {
        self.entries
            .get(id)
            .filter(|e| e.provider_id == provider_id && e.model_id == model_id)
    }

    pub fn insert(&mut self, entry: CacheEntry) -> Result<(), EmbeddingError> {
        if let Some(dim) = self.dim() {
            if dim != entry.dim {
                return Err(EmbeddingError::DimensionDrift {
                    cached: dim,
                    provided: entry.dim,
                });
            }
        }
        self.entries.insert(entry.id.clone(), entry);
        Ok(())
    }

    pub fn persist(&self) -> Result<(), EmbeddingError> {
        if let Some(parent) = self.path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)?;
            }
        }
        let mut tmp_name = self.path.as_os_str().to_owned();
        tmp_name.push(".tmp");
        let tmp = PathBuf::from(tmp_name);
        {
            let mut out = std::io::BufWriter::new(fs::File::create(&tmp)?);
            for entry in self.entries.values() {
                let line = serde_json::to_string(entry).expect("cache entries serialize");
                writeln!(out, "{line}")?;
            }
            out.flush()?;
        }
        fs::rename(&tmp, &self.path)?;
        Ok(())
    }

    /// Builds an [`EmbeddingSet`] for `ids` from cached vectors.
    pub fn to_set(&self, ids: &[String]) -> Result<EmbeddingSet, EmbeddingError> {
        let first = ids
            .first()
            .and_then(|id| self.entries.get(id))
            .or_else(|| self.entries.values().next());
        let (dim, provider, model) = match first {
            Some(e) => (e.dim, e.provider_id.clone(), e.model_id.clone()),
            None => (0, String::new(), String::new()),
        };
        let mut set = EmbeddingSet::new(dim, provider, model);
        for id in ids {
            let entry = self
                .entries
                .get(id)
                .ok_or_else(|| EmbeddingError::MissingVector(id.clone()))?;
            set.insert(id.clone(), EmbeddingVector::ingest(entry.vector.clone())?)?;
        }
        Ok(set)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            base_delay: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    pub fn no_delay(max_attempts: u32) -> Self {
        Self {
            max_attempts,
            base_delay: Duration::ZERO,
        }
    }

    /// Runs `op` until it succeeds or attempts run out, doubling the delay each time.
    pub fn run<T, E>(&self, mut op: impl FnMut() -> Result<T, E>) -> Result<T, (E, u32)> {
        let attempts = self.max_attempts.max(1);
        let mut delay = self.base_delay;
        let mut attempt = 1;
        loop {
            match op() {
                Ok(v) => return Ok(v),
                Err(e) if attempt >= attempts => return Err((e, attempt)),
                Err(_) => {
                    if !delay.is_zero() {
                        std::thread::sleep(delay);
                    }
                    delay *= 2;
                    attempt += 1;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EmbedOptions {
    pub concurrency: usize,
    pub retry: RetryPolicy,
}

impl Default for EmbedOptions {
    fn default() -> Self {
        Self {
            concurrency: 4,
            retry: RetryPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EmbedStats {
    pub cache_hits: usize,
    pub embedded: usize,
}

/// Embeds every record, consulting and updating `cache`.
///
/// Successful vectors are persisted even when another record fails, so a rerun
/// only retries the failures.
pub fn embed_corpus(
    records: &[IdeaRecord],
    provider: &dyn EmbeddingProvider,
    cache: &mut EmbeddingCache,
    options: EmbedOptions,
) -> Result<(EmbeddingSet, EmbedStats), EmbeddingError> {
    let provider_id = provider.provider_id().to_string();
    let model_id = provider.model_id().to_string();
    let misses: Vec<&IdeaRecord> = records
        .iter()
        .filter(|r| cache.lookup(&r.id, &provider_id, &model_id).is_none())
        .collect();
    let stats = EmbedStats {
        cache_hits: records.len() - misses.len(),
        embedded: misses.len(),
    };

    let results = fetch_all(&misses, provider, options);

    let mut first_error = None;
    for (record, result) in misses.iter().zip(results) {
        let outcome = result
            .map_err(|(source, attempts)| EmbeddingError::Provider {
                id: record.id.clone(),
                attempts,
                source,
            })
            .and_then(|raw| {
                let v = EmbeddingVector::ingest(raw)?;
                cache.insert(CacheEntry {
                    id: record.id.clone(),
                    dim: v.dim(),
                    vector: v.into(),
                    provider_id: provider_id.clone(),
                    model_id: model_id.clone(),
                })
            });
        if let Err(e) = outcome {
            if first_error.is_none() {
                first_error = Some(e);
            }
        }
    }
    if stats.embedded > 0 {
        cache.persist()?;
    }
    if let Some(e) = first_error {
        return Err(e);
    }

    let ids: Vec<String> = records.iter().map(|r| r.id.clone()).collect();
    let mut set = cache.to_set(&ids)?;
    set.provider_id = provider_id;
    set.model_id = model_id;
    Ok((set, stats))
}

fn fetch_all(
    misses: &[&IdeaRecord],
    provider: &dyn EmbeddingProvider,
    options: EmbedOptions,
) -> Vec<Result<Vec<f64>, (ProviderError, u32)>> {
    crate::par::bounded_map(misses, options.concurrency, |record| {
        options.retry.run(|| provider.embed(&record.text))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ConditionKey, Domain, Group, IdeaClass};
    use crate::embedding::MockEmbeddingProvider;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn records(n: usize) -> Vec<IdeaRecord> {
        (0..n)
            .map(|i| IdeaRecord {
                id: format!("r{i}"),
                topic_id: "t".into(),
                domain: Domain::Finance,
                condition: ConditionKey::new(Group::G1, IdeaClass::Bk, "flash", 2),
                round: 1,
                agent: 0,
                lang: "en".into(),
                text: format!("text number {i}"),
            })
            .collect()
    }

    #[test]
    fn cold_then_warm_cache() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vectors.jsonl");
        let provider = MockEmbeddingProvider::new("m", 8);
        let recs = records(2);

        let mut cache = EmbeddingCache::open(&path).unwrap();
        let (set, stats) = embed_corpus(&recs, &provider, &mut cache, EmbedOptions::default()).unwrap();
        assert_eq!(provider.calls(), 2);
        assert_eq!(stats, EmbedStats { cache_hits: 0, embedded: 2 });
        assert_eq!(set.len(), 2);
        assert_eq!(set.dim, 8);

        let mut reopened = EmbeddingCache::open(&path).unwrap();
        assert_eq!(reopened.len(), 2);
        let (set2, stats2) =
            embed_corpus(&recs, &provider, &mut reopened, EmbedOptions::default()).unwrap();
        assert_eq!(provider.calls(), 2);
        assert_eq!(stats2.cache_hits, 2);
        assert_eq!(set, set2);
    }

    #[test]
    fn dimension_drift_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vectors.jsonl");
        let recs = records(3);
        let mut cache = EmbeddingCache::open(&path).unwrap();
        embed_corpus(&recs[..2], &MockEmbeddingProvider::new("m", 8), &mut cache, EmbedOptions::default())
            .unwrap();
        let err = embed_corpus(&recs, &MockEmbeddingProvider::new("m", 16), &mut cache, EmbedOptions::default())
            .unwrap_err();
        assert!(matches!(err, EmbeddingError::DimensionDrift { cached: 8, provided: 16 }));
    }

    struct Flaky {
        failures_left: AtomicUsize,
        inner: MockEmbeddingProvider,
    }

    impl EmbeddingProvider for Flaky {
        fn provider_id(&self) -> &str {
            "mock"
        }
        fn model_id(&self) -> &str {
            "m"
        }
        fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
            if self
                .failures_left
                .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1))
                .is_ok()
            {
                return Err(ProviderError::new("transient"));
            }
            self.inner.embed(text)
        }
    }

    #[test]
    fn transient_failures_are_retried() {
        let dir = tempfile::tempdir().unwrap();
        let mut cache = EmbeddingCache::open(dir.path().join("v.jsonl")).unwrap();
        let provider = Flaky {
            failures_left: AtomicUsize::new(2),
            inner: MockEmbeddingProvider::new("m", 4),
        };
        let options = EmbedOptions {
            concurrency: 1,
            retry: RetryPolicy::no_delay(3),
        };
        let (set, _) = embed_corpus(&records(1), &provider, &mut cache, options).unwrap();
        assert_eq!(set.len(), 1);
    }

    #[test]
    fn persistent_failure_surfaces_and_keeps_successes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.jsonl");
        let mut cache = EmbeddingCache::open(&path).unwrap();
        let provider = Flaky {
            failures_left: AtomicUsize::new(2),
            inner: MockEmbeddingProvider::new("m", 4),
        };
        let options = EmbedOptions {
            concurrency: 1,
            retry: RetryPolicy::no_delay(2),
        };
        let err = embed_corpus(&records(2), &provider, &mut cache, options).unwrap_err();
        assert!(matches!(err, EmbeddingError::Provider { attempts: 2, .. }));
        assert_eq!(EmbeddingCache::open(&path).unwrap().len(), 1);
    }

    #[test]
    fn concurrent_embedding_matches_sequential() {
        let dir = tempfile::tempdir().unwrap();
        let recs = records(17);
        let p = MockEmbeddingProvider::new("m", 8);
        let mut c1 = EmbeddingCache::open(dir.path().join("a.jsonl")).unwrap();
        let mut c2 = EmbeddingCache::open(dir.path().join("b.jsonl")).unwrap();
        let seq = EmbedOptions { concurrency: 1, ..Default::default() };
        let par = EmbedOptions { concurrency: 8, ..Default::default() };
        let (a, _) = embed_corpus(&recs, &p, &mut c1, seq).unwrap();
        let (b, _) = embed_corpus(&recs, &p, &mut c2, par).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            fs::read(dir.path().join("a.jsonl")).unwrap(),
            fs::read(dir.path().join("b.jsonl")).unwrap()
        );
    }
}
