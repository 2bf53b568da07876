//! Synonym and redundant-word supply for edit detours.
//!
//! The default handle is fully offline: a bundled filler list and a small
//! thesaurus. An HTTP synonym service can be layered in front of the offline
//! map; any remote failure silently falls through, so planning never depends
//! on the network.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};
use std::time::Duration;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed::{hash_str, rng_for, stream};

const BUNDLED_FILLERS: &str = include_str!("../data/fillers.txt");
const BUNDLED_SYNONYMS: &str = include_str!("../data/synonyms.json");

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("redundant-word library is empty")]
    EmptyLibrary,
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed synonym map {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("synonym service: {0}")]
    Remote(String),
}

/// Remote synonym lookup. Implementations report failures; the lexicon decides
/// what to do with them.
pub trait SynonymService: Send + Sync {
    fn synonyms(&self, word: &str) -> Result<Vec<String>, LexiconError>;
}

#[derive(Debug, Deserialize)]
struct SynonymResponse {
    #[allow(dead_code)]
    word: Option<String>,
    synonyms: Vec<String>,
}

/// `GET {endpoint}/words/{word}/synonyms` returning `{"word": .., "synonyms": [..]}`.
pub struct HttpSynonymService {
    endpoint: String,
    agent: ureq::Agent,
}

impl HttpSynonymService {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        HttpSynonymService {
            endpoint: endpoint.into().trim_end_matches('/').to_owned(),
            agent,
        }
    }
}

fn percent_encode(word: &str) -> String {
    let mut out = String::with_capacity(word.len());
    for b in word.bytes() {
        if b.is_ascii_alphanumeric() || matches!(b, b'-' | b'_' | b'.' | b'~') {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

impl SynonymService for HttpSynonymService {
    fn synonyms(&self, word: &str) -> Result<Vec<String>, LexiconError> {
        let url = format!("{}/words/{}/synonyms", self.endpoint, percent_encode(word));
        let mut response = self
            .agent
            .get(&url)
            .call()
            .map_err(|e| LexiconError::Remote(e.to_string()))?;
        let body: SynonymResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| LexiconError::Remote(e.to_string()))?;
        Ok(body.synonyms)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RemoteLexiconConfig {
    pub endpoint: String,
    #[serde(default = "default_remote_timeout")]
    pub timeout_ms: u64,
    /// Fall back to the offline map when the service misses or fails.
    #[serde(default = "default_true")]
    pub chain: bool,
}

fn default_remote_timeout() -> u64 {
    1500
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct LexiconConfig {
    /// Filler list, one word per line. Bundled list when absent.
    #[serde(default)]
    pub fillers_path: Option<PathBuf>,
    /// JSON object of word to synonym array. Bundled thesaurus when absent.
    #[serde(default)]
    pub synonyms_path: Option<PathBuf>,
    #[serde(default)]
    pub remote: Option<RemoteLexiconConfig>,
}

pub struct Lexicon {
    redundant: Vec<String>,
    offline: BTreeMap<String, Vec<String>>,
    remote: Option<Box<dyn SynonymService>>,
    use_offline: bool,
    cache: RwLock<HashMap<String, Arc<[String]>>>,
}

impl std::fmt::Debug for Lexicon {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Lexicon")
            .field("redundant", &self.redundant.len())
            .field("offline", &self.offline.len())
            .field("remote", &self.remote.is_some())
            .finish()
    }
}

fn parse_fillers(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_owned)
        .collect()
}

fn normalize_map(map: BTreeMap<String, Vec<String>>) -> BTreeMap<String, Vec<String>> {
    map.into_iter()
        .map(|(k, v)| (k.to_lowercase(), v))
        .collect()
}

fn is_single_word(candidate: &str) -> bool {
    !candidate.is_empty()
        && candidate.chars().any(char::is_alphabetic)
        && candidate
            .chars()
            .all(|c| c.is_alphanumeric() || c == '-' || c == '\'')
}

/// Copies the capitalisation pattern of `model` onto `word`.
fn match_case(model: &str, word: &str) -> String {
    let letters: Vec<char> = model.chars().filter(|c| c.is_alphabetic()).collect();
    if letters.len() > 1 && letters.iter().all(|c| c.is_uppercase()) {
        return word.to_uppercase();
    }
    if model.chars().next().is_some_and(char::is_uppercase) {
        let mut chars = word.chars();
        return match chars.next() {
            Some(first) => first.to_uppercase().chain(chars).collect(),
            None => String::new(),
        };
    }
    word.to_owned()
}

impl Lexicon {
    pub fn new(
        redundant: Vec<String>,
        synonyms: BTreeMap<String, Vec<String>>,
    ) -> Result<Self, LexiconError> {
        if redundant.is_empty() {
            return Err(LexiconError::EmptyLibrary);
        }
        Ok(Lexicon {
            redundant,
            offline: normalize_map(synonyms),
            remote: None,
            use_offline: true,
            cache: RwLock::new(HashMap::new()),
        })
    }

    /// Offline handle over the bundled filler list and thesaurus.
    pub fn bundled() -> Self {
        let synonyms: BTreeMap<String, Vec<String>> =
            serde_json::from_str(BUNDLED_SYNONYMS).expect("bundled synonym map is valid JSON");
        Lexicon::new(parse_fillers(BUNDLED_FILLERS), synonyms).expect("bundled filler list is non-empty")
    }

    /// Puts a remote service in front of the offline map. With `chain` false
    /// the offline map is no longer consulted.
    pub fn with_remote(mut self, service: Box<dyn SynonymService>, chain: bool) -> Self {
        self.remote = Some(service);
        self.use_offline = chain;
        self
    }

    pub fn load_fillers(path: &Path) -> Result<Vec<String>, LexiconError> {
        let text = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.to_owned(),
            source,
        })?;
        Ok(parse_fillers(&text))
    }

    pub fn load_synonyms(path: &Path) -> Result<BTreeMap<String, Vec<String>>, LexiconError> {
        let text = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.to_owned(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| LexiconError::Parse {
            path: path.to_owned(),
            source,
        })
    }

    pub fn from_config(config: &LexiconConfig) -> Result<Self, LexiconError> {
        let fillers = match &config.fillers_path {
            Some(p) => Self::load_fillers(p)?,
            None => parse_fillers(BUNDLED_FILLERS),
        };
        let synonyms = match &config.synonyms_path {
            Some(p) => Self::load_synonyms(p)?,
            None => serde_json::from_str(BUNDLED_SYNONYMS).expect("bundled synonym map is valid JSON"),
        };
        let lexicon = Lexicon::new(fillers, synonyms)?;
        Ok(match &config.remote {
            Some(remote) => {
                let service =
                    HttpSynonymService::new(&remote.endpoint, Duration::from_millis(remote.timeout_ms));
                lexicon.with_remote(Box::new(service), remote.chain)
            }
            None => lexicon,
        })
    }

    pub fn has_remote(&self) -> bool {
        self.remote.is_some()
    }

    pub fn redundant_words(&self) -> &[String] {
        &self.redundant
    }

    fn lookup(&self, key: &str) -> Vec<String> {
        if let Some(remote) = &self.remote {
            if let Ok(found) = remote.synonyms(key) {
                if !found.is_empty() {
                    return found;
                }
            }
        }
        if self.use_offline {
            if let Some(found) = self.offline.get(key) {
                return found.clone();
            }
        }
        Vec::new()
    }

    /// Filtered synonym candidates for `word`, cached for the life of the handle.
    pub fn candidates(&self, word: &str) -> Arc<[String]> {
        let key = word.to_lowercase();
        if let Some(hit) = self.cache.read().expect("lexicon cache poisoned").get(&key) {
            return Arc::clone(hit);
        }
        let mut seen = Vec::new();
        for c in self.lookup(&key) {
            let lower = c.trim().to_lowercase();
            if lower != key && is_single_word(&lower) && !seen.contains(&lower) {
                seen.push(lower);
            }
        }
        let entry: Arc<[String]> = seen.into();
        let mut cache = self.cache.write().expect("lexicon cache poisoned");
        // First writer wins so repeated lookups stay stable.
        Arc::clone(cache.entry(key).or_insert(entry))
    }

    /// A synonym of `word` (never `word` itself), or `None` when no source has one.
    pub fn synonym(&self, word: &str, seed: u64) -> Option<String> {
        if word.is_empty() {
            return None;
        }
        let candidates = self.candidates(word);
        if candidates.is_empty() {
            return None;
        }
        let mut order: Vec<&String> = candidates.iter().collect();
        let mut rng = rng_for(seed, stream::SYNONYM, hash_str(&word.to_lowercase()));
        order.shuffle(&mut rng);
        order.first().map(|c| match_case(word, c))
    }

    pub fn redundant_word<R: Rng + ?Sized>(&self, rng: &mut R) -> &str {
        self.redundant
            .choose(rng)
            .expect("library is non-empty by construction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn map(entries: &[(&str, &[&str])]) -> BTreeMap<String, Vec<String>> {
        entries
            .iter()
            .map(|(k, v)| (k.to_string(), v.iter().map(|s| s.to_string()).collect()))
            .collect()
    }

    struct Failing(AtomicUsize);

    impl SynonymService for Failing {
        fn synonyms(&self, _word: &str) -> Result<Vec<String>, LexiconError> {
            self.0.fetch_add(1, Ordering::SeqCst);
            Err(LexiconError::Remote("503 service unavailable".into()))
        }
    }

    struct Fixed(Vec<String>);

    impl SynonymService for Fixed {
        fn synonyms(&self, _word: &str) -> Result<Vec<String>, LexiconError> {
            Ok(self.0.clone())
        }
    }

    #[test]
    fn empty_library_rejected_at_load() {
        assert!(matches!(
            Lexicon::new(Vec::new(), BTreeMap::new()),
            Err(LexiconError::EmptyLibrary)
        ));
    }

    #[test]
    fn miss_returns_none() {
        let lex = Lexicon::new(vec!["well".into()], BTreeMap::new()).unwrap();
        assert_eq!(lex.synonym("zyzzyva", 1), None);
    }

    #[test]
    fn deterministic_selection() {
        let lex = Lexicon::new(vec!["well".into()], map(&[("happy", &["glad", "joyful"])])).unwrap();
        let first = lex.synonym("happy", 42).unwrap();
        assert!(first == "glad" || first == "joyful");
        for _ in 0..10 {
            assert_eq!(lex.synonym("happy", 42).unwrap(), first);
        }
        // Different seeds reach both candidates.
        let picks: std::collections::BTreeSet<String> =
            (0..64).filter_map(|s| lex.synonym("happy", s)).collect();
        assert_eq!(picks.len(), 2);
    }

    #[test]
    fn never_returns_the_word_itself() {
        let lex = Lexicon::new(
            vec!["well".into()],
            map(&[("fast", &["fast", "Fast", "quick"]), ("same", &["same"])]),
        )
        .unwrap();
        for seed in 0..50 {
            assert_eq!(lex.synonym("fast", seed).as_deref(), Some("quick"));
        }
        assert_eq!(lex.synonym("same", 0), None);
    }

    #[test]
    fn multi_word_candidates_rejected() {
        let lex = Lexicon::new(vec!["well".into()], map(&[("go", &["head out", "leave"])])).unwrap();
        for seed in 0..20 {
            assert_eq!(lex.synonym("go", seed).as_deref(), Some("leave"));
        }
    }

    #[test]
    fn case_follows_the_target() {
        let lex = Lexicon::new(vec!["well".into()], map(&[("happy", &["glad"])])).unwrap();
        assert_eq!(lex.synonym("Happy", 0).as_deref(), Some("Glad"));
        assert_eq!(lex.synonym("HAPPY", 0).as_deref(), Some("GLAD"));
    }

    #[test]
    fn remote_failure_falls_back_to_offline() {
        let calls = Arc::new(Failing(AtomicUsize::new(0)));
        struct Shared(Arc<Failing>);
        impl SynonymService for Shared {
            fn synonyms(&self, w: &str) -> Result<Vec<String>, LexiconError> {
                self.0.synonyms(w)
            }
        }
        let lex = Lexicon::new(vec!["well".into()], map(&[("happy", &["glad"])]))
            .unwrap()
            .with_remote(Box::new(Shared(Arc::clone(&calls))), true);
        assert_eq!(lex.synonym("happy", 3).as_deref(), Some("glad"));
        assert_eq!(lex.synonym("happy", 3).as_deref(), Some("glad"));
        // Cached after the first lookup.
        assert_eq!(calls.0.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn remote_only_mode_misses_cleanly() {
        let lex = Lexicon::new(vec!["well".into()], map(&[("happy", &["glad"])]))
            .unwrap()
            .with_remote(Box::new(Failing(AtomicUsize::new(0))), false);
        assert_eq!(lex.synonym("happy", 3), None);
    }

    #[test]
    fn remote_answer_preferred() {
        let lex = Lexicon::new(vec!["well".into()], map(&[("happy", &["glad"])]))
            .unwrap()
            .with_remote(Box::new(Fixed(vec!["content".into()])), true);
        assert_eq!(lex.synonym("happy", 3).as_deref(), Some("content"));
    }

    #[test]
    fn singleton_library() {
        let lex = Lexicon::new(vec!["really".into()], BTreeMap::new()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..5 {
            assert_eq!(lex.redundant_word(&mut rng), "really");
        }
    }

    #[test]
    fn redundant_draws_are_reproducible() {
        let lex = Lexicon::bundled();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..20).map(|_| lex.redundant_word(&mut rng).to_owned()).collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
        assert_ne!(draw(5), draw(6));
    }

    #[test]
    fn bundled_data_loads() {
        let lex = Lexicon::bundled();
        assert!(lex.redundant_words().len() >= 10);
        assert!(lex.synonym("happy", 0).is_some());
    }

    #[test]
    fn files_load_from_config() {
        let dir = tempfile::tempdir().unwrap();
        let fillers = dir.path().join("fillers.txt");
        let synonyms = dir.path().join("syn.json");
        std::fs::write(&fillers, "# comment\nlike\n\nreally\n").unwrap();
        std::fs::write(&synonyms, r#"{"Tennis": ["squash"]}"#).unwrap();
        let lex = Lexicon::from_config(&LexiconConfig {
            fillers_path: Some(fillers),
            synonyms_path: Some(synonyms),
            remote: None,
        })
        .unwrap();
        assert_eq!(lex.redundant_words(), ["like", "really"]);
        assert_eq!(lex.synonym("tennis", 0).as_deref(), Some("squash"));

        let empty = dir.path().join("empty.txt");
        std::fs::write(&empty, "\n").unwrap();
        let err = Lexicon::from_config(&LexiconConfig {
            fillers_path: Some(empty),
            ..Default::default()
        })
        .unwrap_err();
        assert!(matches!(err, LexiconError::EmptyLibrary));
    }
}
