use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use log::warn;
use thiserror::Error;

use crate::audio::{load_wav, AudioError, FeatureVector, Frontend};
use crate::classifier::{ClassifierError, FeatureSource};

/// The 35 command words of Speech Commands v2.
pub const WORDS: [&str; 35] = [
    "bed", "cat", "down", "five", "forward", "go", "house", "left", "marvin", "no", "on", "seven",
    "six", "tree", "up", "visual", "yes", "backward", "bird", "dog", "eight", "follow", "four",
    "happy", "learn", "nine", "off", "one", "right", "sheila", "stop", "three", "two", "wow",
    "zero",
];

/// Ten-word subset used by the `--desk` preset.
pub const DESK_WORDS: [&str; 10] = ["yes", "no", "up", "down", "left", "right", "on", "off", "stop", "go"];

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("missing word directories: {0:?}")]
    MissingWords(Vec<String>),
    #[error("no WAV files for word {0}")]
    EmptyClass(String),
    #[error("unknown word {0:?}")]
    UnknownWord(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Word to sorted file list.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetIndex {
    root: PathBuf,
    classes: Vec<String>,
    files: Vec<Vec<PathBuf>>,
}

impl DatasetIndex {
    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn files(&self, class: usize) -> &[PathBuf] {
        &self.files[class]
    }

    pub fn total_files(&self) -> usize {
        self.files.iter().map(Vec::len).sum()
    }
}

fn is_wav(p: &Path) -> bool {
    p.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav"))
}

/// Indexes `root/<word>/*.wav`. With `classes = None` all 35 words are
/// required; otherwise only the listed ones. Other subdirectories are
/// skipped with a warning.
pub fn ingest_dataset(root: &Path, classes: Option<&[String]>) -> Result<DatasetIndex, DatasetError> {
    let wanted: Vec<String> = match classes {
        Some(c) => {
            if let Some(bad) = c.iter().find(|w| !WORDS.contains(&w.as_str())) {
                return Err(DatasetError::UnknownWord(bad.clone()));
            }
            c.to_vec()
        }
        None => WORDS.iter().map(|w| w.to_string()).collect(),
    };
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| DatasetError::Io { path, source }
    };

    let mut found: BTreeMap<String, PathBuf> = BTreeMap::new();
    let entries = match fs::read_dir(root) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(DatasetError::MissingWords(wanted));
        }
        Err(e) => return Err(io(root)(e)),
    };
    for entry in entries {
        let entry = entry.map_err(io(root))?;
        let path = entry.path();
        if !path.is_dir() {
            continue;
        }
        let name = entry.file_name().to_string_lossy().into_owned();
        if wanted.contains(&name) {
            found.insert(name, path);
        } else if !WORDS.contains(&name.as_str()) {
            warn!("skipping unknown directory {}", path.display());
        }
    }
    let missing: Vec<String> = wanted.iter().filter(|w| !found.contains_key(*w)).cloned().collect();
    if !missing.is_empty() {
        return Err(DatasetError::MissingWords(missing));
    }

    let mut files = Vec::with_capacity(wanted.len());
    for word in &wanted {
        let dir = &found[word];
        let mut list: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(io(dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && is_wav(p))
            .collect();
        if list.is_empty() {
            return Err(DatasetError::EmptyClass(word.clone()));
        }
        list.sort();
        files.push(list);
    }
    Ok(DatasetIndex {
        root: root.to_path_buf(),
        classes: wanted,
        files,
    })
}

/// A [`DatasetIndex`] whose features are computed on first use and cached.
pub struct FileDataset {
    index: DatasetIndex,
    frontend: Frontend,
    cache: Mutex<HashMap<(usize, usize), Arc<FeatureVector>>>,
}

impl FileDataset {
    pub fn new(index: DatasetIndex) -> Self {
        Self {
            index,
            frontend: Frontend::default(),
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn index(&self) -> &DatasetIndex {
        &self.index
    }

    pub fn load(&self, class: usize, item: usize) -> Result<crate::audio::PcmBuffer, AudioError> {
        load_wav(&self.index.files[class][item])
    }
}

impl FeatureSource for FileDataset {
    fn classes(&self) -> &[String] {
        &self.index.classes
    }

    fn len(&self, class: usize) -> usize {
        self.index.files[class].len()
    }

    fn features(&self, class: usize, item: usize) -> Result<Arc<FeatureVector>, ClassifierError> {
        if let Some(f) = self.cache.lock().expect("cache lock").get(&(class, item)) {
            return Ok(Arc::clone(f));
        }
        let path = self
            .index
            .files
            .get(class)
            .and_then(|c| c.get(item))
            .ok_or_else(|| ClassifierError::Source(format!("no item {item} in class {class}")))?;
        let pcm = load_wav(path).map_err(|e| ClassifierError::Source(e.to_string()))?;
        let f = Arc::new(self.frontend.features(pcm));
        self.cache
            .lock()
            .expect("cache lock")
            .insert((class, item), Arc::clone(&f));
        Ok(f)
    }
}
