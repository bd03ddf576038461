use crate::circuit::MAX_QUBITS;
use crate::error::{Error, Result};

const DEFAULT_CHUNK: usize = 10;
const DEFAULT_FUSION: usize = 5;
const DEFAULT_CACHE_LINE: usize = 2;
const DEFAULT_BUFFER: usize = 28;

/// Simulation and optimization parameters, all sizes as log2 counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    pub n_qubits: usize,
    pub rank_qubits: usize,
    pub buffer_qubits: usize,
    pub chunk_qubits: usize,
    pub fusion_qubits: usize,
    pub cache_line_qubits: usize,
    pub ims_enabled: bool,
    pub xrs_enabled: bool,
    pub fusion_enabled: bool,
    pub diagonal_fusion_enabled: bool,
}

impl Config {
    /// Single-rank config for `n` qubits with every default applied.
    pub fn new(n: usize) -> Config {
        Config::with_ranks(n, 0)
    }

    pub fn with_ranks(n: usize, rank_qubits: usize) -> Config {
        let local = n.saturating_sub(rank_qubits);
        let chunk = DEFAULT_CHUNK.min(local);
        Config {
            n_qubits: n,
            rank_qubits,
            buffer_qubits: local.min(DEFAULT_BUFFER),
            chunk_qubits: chunk,
            fusion_qubits: DEFAULT_FUSION.min(chunk),
            cache_line_qubits: DEFAULT_CACHE_LINE.min(chunk),
            ims_enabled: true,
            xrs_enabled: true,
            fusion_enabled: true,
            diagonal_fusion_enabled: true,
        }
    }

    /// Sets the chunk size, clamping fusion and cache-line widths to it.
    pub fn with_chunk_qubits(mut self, c: usize) -> Config {
        self.chunk_qubits = c;
        self.fusion_qubits = self.fusion_qubits.min(c);
        self.cache_line_qubits = self.cache_line_qubits.min(c);
        self
    }

    pub fn with_buffer_qubits(mut self, b: usize) -> Config {
        self.buffer_qubits = b;
        self
    }

    pub fn with_fusion(mut self, general: bool, diagonal: bool) -> Config {
        self.fusion_enabled = general;
        self.diagonal_fusion_enabled = diagonal;
        self
    }

    pub fn with_swaps(mut self, ims: bool, xrs: bool) -> Config {
        self.ims_enabled = ims;
        self.xrs_enabled = xrs;
        self
    }

    /// Qubits held by each rank.
    pub fn local_qubits(&self) -> usize {
        self.n_qubits - self.rank_qubits
    }

    pub fn num_ranks(&self) -> usize {
        1 << self.rank_qubits
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(m));
        if self.n_qubits == 0 || self.n_qubits > MAX_QUBITS {
            return err(format!("total_qbit must be in 1..={MAX_QUBITS}, got {}", self.n_qubits));
        }
        if self.rank_qubits >= self.n_qubits {
            return err(format!("rank_qbit {} leaves no rank-local qubits", self.rank_qubits));
        }
        let local = self.local_qubits();
        if self.chunk_qubits == 0 || self.chunk_qubits > local {
            return err(format!("chunk_qbit must be in 1..={local}, got {}", self.chunk_qubits));
        }
        if self.cache_line_qubits > self.chunk_qubits {
            return err(format!("cache_line_qbit {} exceeds chunk_qbit {}", self.cache_line_qubits, self.chunk_qubits));
        }
        if self.fusion_qubits > self.chunk_qubits {
            return err(format!("fusion_qbit {} exceeds chunk_qbit {}", self.fusion_qubits, self.chunk_qubits));
        }
        if self.buffer_qubits > local {
            return err(format!("buffer_qbit {} exceeds the {local} rank-local qubits", self.buffer_qubits));
        }
        if self.rank_qubits > 0 && self.buffer_qubits == 0 {
            return err("buffer_qbit must be at least 1 when ranks are used".into());
        }
        Ok(())
    }

    /// Renders the config in the INI form accepted by [`parse_config`].
    pub fn to_ini(&self) -> String {
        let flag = |b: bool| u8::from(b);
        format!(
            "[system]\ntotal_qbit={}\nrank_qbit={}\nbuffer_qbit={}\nchunk_qbit={}\nfusion_qbit={}\ncache_line_qbit={}\nims={}\nxrs={}\nfusion={}\ndiagonal_fusion={}\n",
            self.n_qubits,
            self.rank_qubits,
            self.buffer_qubits,
            self.chunk_qubits,
            self.fusion_qubits,
            self.cache_line_qubits,
            flag(self.ims_enabled),
            flag(self.xrs_enabled),
            flag(self.fusion_enabled),
            flag(self.diagonal_fusion_enabled),
        )
    }
}

fn strip_comment(line: &str) -> &str {
    let mut end = line.len();
    for marker in ["//", "#", ";"] {
        if let Some(i) = line.find(marker) {
            end = end.min(i);
        }
    }
    line[..end].trim()
}

fn parse_flag(value: &str, line: usize) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "1" | "true" | "on" | "yes" => Ok(true),
        "0" | "false" | "off" | "no" => Ok(false),
        _ => Err(Error::parse(line, format!("expected a boolean, got {value:?}"))),
    }
}

/// Parses an INI config with a `[system]` section.
///
/// Only `total_qbit` is required; omitted sizes take their defaults clamped to
/// the rank-local qubit count.
pub fn parse_config(text: &str) -> Result<Config> {
    let mut section = String::new();
    let mut ints: Vec<(&str, usize)> = Vec::new();
    let mut flags: Vec<(&str, bool)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = name.trim().to_ascii_lowercase();
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::parse(line_no, format!("expected key=value, got {line:?}")));
        };
        if section != "system" {
            log::warn!("line {line_no}: ignoring key outside [system]");
            continue;
        }
        let (key, value) = (key.trim(), value.trim());
        match key {
            "total_qbit" | "rank_qbit" | "buffer_qbit" | "chunk_qbit" | "fusion_qbit" | "cache_line_qbit" => {
                let v = value
                    .parse()
                    .map_err(|_| Error::parse(line_no, format!("{key} expects an integer, got {value:?}")))?;
                ints.push((static_key(key), v));
            }
            "ims" | "xrs" | "fusion" | "diagonal_fusion" => flags.push((static_key(key), parse_flag(value, line_no)?)),
            other => log::warn!("line {line_no}: unknown config key {other:?}"),
        }
    }
    let get = |k: &str| ints.iter().rev().find(|(key, _)| *key == k).map(|&(_, v)| v);
    let n = get("total_qbit").ok_or_else(|| Error::Config("missing total_qbit".into()))?;
    let r = get("rank_qbit").unwrap_or(0);
    let mut cfg = Config::with_ranks(n, r);
    if let Some(c) = get("chunk_qbit") {
        cfg = cfg.with_chunk_qubits(c);
    }
    if let Some(b) = get("buffer_qbit") {
        cfg.buffer_qubits = b;
    }
    if let Some(f) = get("fusion_qbit") {
        cfg.fusion_qubits = f;
    }
    if let Some(cl) = get("cache_line_qbit") {
        cfg.cache_line_qubits = cl;
    }
    for (key, v) in flags {
        match key {
            "ims" => cfg.ims_enabled = v,
            "xrs" => cfg.xrs_enabled = v,
            "fusion" => cfg.fusion_enabled = v,
            _ => cfg.diagonal_fusion_enabled = v,
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn static_key(key: &str) -> &'static str {
    const KEYS: [&str; 10] = [
        "total_qbit",
        "rank_qbit",
        "buffer_qbit",
        "chunk_qbit",
        "fusion_qbit",
        "cache_line_qbit",
        "ims",
        "xrs",
        "fusion",
        "diagonal_fusion",
    ];
    KEYS.into_iter().find(|k| *k == key).expect("known key")
}
