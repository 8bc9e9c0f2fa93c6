use std::collections::{HashMap, VecDeque};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use pcorder_core::{Analysis, AnalysisConfig, Dataset, Execution, Session};
use serde::Serialize;
use serde_json::Value;

use crate::error::ApiError;

pub const DEFAULT_PORT: u16 = 8790;
pub const DEFAULT_MAX_SYNC_WORK: u64 = 50_000;
pub const DEFAULT_CACHE_BYTES: usize = 256 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub port: u16,
    /// Estimated detector invocations above which an uncached analysis runs
    /// as a background job.
    pub max_sync_work: u64,
    pub cache_bytes: usize,
    pub static_dir: Option<PathBuf>,
    /// Allowed CORS origin; any origin when unset.
    pub cors_origin: Option<String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            port: DEFAULT_PORT,
            max_sync_work: DEFAULT_MAX_SYNC_WORK,
            cache_bytes: DEFAULT_CACHE_BYTES,
            static_dir: None,
            cors_origin: None,
        }
    }
}

impl ServiceConfig {
    /// Defaults overridden by `PORT`, `MAX_SYNC_WORK`, `CACHE_BYTES`,
    /// `STATIC_DIR` and `CORS_ORIGIN` where set.
    pub fn from_env() -> Result<Self, String> {
        let mut c = Self::default();
        fn var<T: std::str::FromStr>(name: &str) -> Result<Option<T>, String> {
            match std::env::var(name) {
                Ok(v) => v
                    .trim()
                    .parse()
                    .map(Some)
                    .map_err(|_| format!("invalid {name} `{v}`")),
                Err(_) => Ok(None),
            }
        }
        if let Some(p) = var("PORT")? {
            c.port = p;
        }
        if let Some(w) = var("MAX_SYNC_WORK")? {
            c.max_sync_work = w;
        }
        if let Some(b) = var("CACHE_BYTES")? {
            c.cache_bytes = b;
        }
        c.static_dir = std::env::var_os("STATIC_DIR").map(PathBuf::from);
        c.cors_origin = std::env::var("CORS_ORIGIN").ok();
        Ok(c)
    }
}

pub struct StoredDataset {
    pub dataset: Dataset,
    pub dropped_rows: usize,
}

type CacheKey = (String, (u64, u64, u64, usize, usize));

/// Analyses keyed by dataset and config, evicted oldest-first once the byte
/// budget is exceeded.
#[derive(Default)]
struct AnalysisCache {
    entries: HashMap<CacheKey, Arc<Analysis>>,
    order: VecDeque<CacheKey>,
    bytes: usize,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum JobStatus {
    Pending,
    Done { result: Value },
    Failed { error: ApiError },
}

pub struct AppState {
    pub config: ServiceConfig,
    datasets: RwLock<HashMap<String, Arc<StoredDataset>>>,
    cache: RwLock<AnalysisCache>,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    jobs: RwLock<HashMap<String, JobStatus>>,
    counter: AtomicU64,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Self {
        Self {
            config,
            datasets: RwLock::default(),
            cache: RwLock::default(),
            sessions: RwLock::default(),
            jobs: RwLock::default(),
            counter: AtomicU64::new(1),
        }
    }

    fn next_id(&self, prefix: &str) -> String {
        format!("{prefix}{}", self.counter.fetch_add(1, Ordering::Relaxed))
    }

    pub fn add_dataset(&self, dataset: Dataset, dropped_rows: usize) -> String {
        let id = self.next_id("d");
        let stored = Arc::new(StoredDataset {
            dataset,
            dropped_rows,
        });
        self.datasets.write().unwrap().insert(id.clone(), stored);
        id
    }

    pub fn dataset(&self, id: &str) -> Result<Arc<StoredDataset>, ApiError> {
        self.datasets
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("dataset", id))
    }

    pub fn cached(&self, dataset_id: &str, config: &AnalysisConfig) -> Option<Arc<Analysis>> {
        let key = (dataset_id.to_string(), config.cache_key());
        self.cache.read().unwrap().entries.get(&key).cloned()
    }

    /// Cached analysis, computing and inserting it on a miss.
    pub fn analysis(
        &self,
        dataset_id: &str,
        config: &AnalysisConfig,
    ) -> Result<Arc<Analysis>, ApiError> {
        if let Some(a) = self.cached(dataset_id, config) {
            return Ok(a);
        }
        let stored = self.dataset(dataset_id)?;
        let analysis = Arc::new(Analysis::compute(
            &stored.dataset,
            config,
            Execution::default(),
        )?);
        let key = (dataset_id.to_string(), config.cache_key());
        let size = analysis.approx_bytes();
        let mut cache = self.cache.write().unwrap();
        if let Some(existing) = cache.entries.get(&key) {
            return Ok(existing.clone());
        }
        cache.entries.insert(key.clone(), analysis.clone());
        cache.order.push_back(key);
        cache.bytes += size;
        // always keep the newest entry, even if it alone exceeds the budget
        while cache.bytes > self.config.cache_bytes && cache.order.len() > 1 {
            let old = cache.order.pop_front().expect("nonempty");
            if let Some(a) = cache.entries.remove(&old) {
                cache.bytes -= a.approx_bytes();
            }
        }
        Ok(analysis)
    }

    pub fn cache_len(&self) -> usize {
        self.cache.read().unwrap().entries.len()
    }

    pub fn add_session(&self, session: Session) -> String {
        let id = session.id().to_string();
        self.sessions
            .write()
            .unwrap()
            .insert(id.clone(), Arc::new(Mutex::new(session)));
        id
    }

    pub fn new_session_id(&self) -> String {
        self.next_id("s")
    }

    pub fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("session", id))
    }

    pub fn new_job(&self) -> String {
        let id = self.next_id("j");
        self.jobs
            .write()
            .unwrap()
            .insert(id.clone(), JobStatus::Pending);
        id
    }

    pub fn finish_job(&self, id: &str, outcome: Result<Value, ApiError>) {
        let status = match outcome {
            Ok(result) => JobStatus::Done { result },
            Err(error) => JobStatus::Failed { error },
        };
        self.jobs.write().unwrap().insert(id.to_string(), status);
    }

    pub fn job(&self, id: &str) -> Result<JobStatus, ApiError> {
        self.jobs
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("job", id))
    }
}
