//! Text parameter file for a single network.
//!
//! ```text
//! uaboost-model 1
//! kind feedforward
//! layer_sizes 11 24 16
//! seq_len none
//! seed 42
//! params 689
//! <one parameter per line, declaration order>
//! ```
//!
//! Parameters are written with Rust's shortest round-trip float formatting,
//! so reading a file back reproduces every bit.

use std::fmt::Write as _;
use std::path::Path;

use super::network::{Network, NetworkConfig, NetworkKind};
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &str = "uaboost-model";
pub const MODEL_VERSION: u32 = 1;

impl Network {
    pub fn to_text(&self) -> String {
        let cfg = self.config();
        let mut out = String::new();
        let kind = match cfg.kind {
            NetworkKind::Feedforward => "feedforward",
            NetworkKind::Recurrent => "recurrent",
        };
        let sizes: Vec<String> = cfg.layer_sizes.iter().map(usize::to_string).collect();
        let _ = writeln!(out, "{MODEL_MAGIC} {MODEL_VERSION}");
        let _ = writeln!(out, "kind {kind}");
        let _ = writeln!(out, "layer_sizes {}", sizes.join(" "));
        match cfg.seq_len {
            Some(n) => {
                let _ = writeln!(out, "seq_len {n}");
            }
            None => out.push_str("seq_len none\n"),
        }
        let _ = writeln!(out, "seed {}", cfg.seed);
        let params = self.flat_params();
        let _ = writeln!(out, "params {}", params.len());
        for p in params {
            let _ = writeln!(out, "{p:e}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let mut next = |what: &str| -> Result<(usize, &str)> {
            lines.next().ok_or_else(|| Error::Parse {
                line: 0,
                message: format!("unexpected end of file, expected {what}"),
            })
        };
        let bad = |line: usize, message: String| Error::Parse { line, message };

        let (n, header) = next("header")?;
        let version = header
            .strip_prefix(MODEL_MAGIC)
            .map(str::trim)
            .ok_or_else(|| bad(n, format!("missing `{MODEL_MAGIC}` header")))?;
        if version != MODEL_VERSION.to_string() {
            return Err(bad(n, format!("unsupported model version `{version}`")));
        }

        let mut field = |name: &str| -> Result<(usize, String)> {
            let (n, line) = next(name)?;
            line.strip_prefix(name)
                .map(|v| (n, v.trim().to_string()))
                .ok_or_else(|| bad(n, format!("expected `{name}` line")))
        };

        let (n, kind) = field("kind")?;
        let kind = match kind.as_str() {
            "feedforward" => NetworkKind::Feedforward,
            "recurrent" => NetworkKind::Recurrent,
            other => return Err(bad(n, format!("unknown network kind `{other}`"))),
        };
        let (n, sizes) = field("layer_sizes")?;
        let layer_sizes = sizes
            .split_whitespace()
            .map(|s| s.parse::<usize>().map_err(|e| bad(n, format!("layer size `{s}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let (n, seq) = field("seq_len")?;
        let seq_len = match seq.as_str() {
            "none" => None,
            s => Some(s.parse::<usize>().map_err(|e| bad(n, format!("seq_len `{s}`: {e}")))?),
        };
        let (n, seed) = field("seed")?;
        let seed = seed.parse::<u64>().map_err(|e| bad(n, format!("seed: {e}")))?;
        let (n, count) = field("params")?;
        let count = count.parse::<usize>().map_err(|e| bad(n, format!("param count: {e}")))?;

        let config = NetworkConfig {
            kind,
            layer_sizes,
            seq_len,
            seed,
        };
        let mut net = Network::zeros(config)?;
        if net.param_count() != count {
            return Err(bad(
                n,
                format!("architecture has {} parameters, file declares {count}", net.param_count()),
            ));
        }
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            let (n, line) = next("parameter")?;
            values.push(line.parse::<f64>().map_err(|e| bad(n, format!("parameter `{line}`: {e}")))?);
        }
        if let Some((n, extra)) = lines.find(|(_, l)| !l.is_empty()) {
            return Err(bad(n, format!("trailing content `{extra}`")));
        }
        net.set_flat_params(&values)?;
        Ok(net)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text).map_err(|e| Error::format(path, e))
    }
}
