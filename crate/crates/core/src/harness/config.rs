//! Experiment configuration: plain `key = value` text, `#` starts a comment,
//! lists are comma-separated.
//!
//! ```text
//! n = 128
//! cp_len = 16
//! l_symbols = 17
//! delta_t = 8
//! n_p_list = 6, 10
//! pattern = rectangular
//! x1 = 8
//! y2 = 16
//! epsilon = 0.05
//! snr_db_list = 6, 13
//! trials = 2000
//! seed = 1
//! mode = pilot_only         # pilot_only | known_signal
//! estimator = regression # sum | regression | moose
//! channel = identity    # identity | static_taps | block_rayleigh
//! taps = 1, 0.3+0.2i
//! phn_sigma2 = 0
//! gamma = 0
//! rho = 0.9             # block_rayleigh symbol-to-symbol correlation
//! pilot_fill = null     # null | data
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::estimator::EstimationMode;
use crate::impairments::{ChannelKind, ChannelModel};
use crate::model::{validate, OfdmParams, PatternKind, PilotGeometry};
use crate::txrx::PilotFill;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorChoice {
    Sum,
    Regression,
    Moose,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub n: usize,
    pub cp_len: usize,
    pub l_symbols: usize,
    pub delta_t: usize,
    pub n_p_list: Vec<usize>,
    pub pattern: PatternKind,
    pub x1: usize,
    pub y2: usize,
    pub epsilon: f64,
    pub snr_db_list: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub mode: EstimationMode,
    pub estimator: EstimatorChoice,
    pub channel: ChannelKind,
    pub taps: Vec<Complex<f64>>,
    pub phn_sigma2: f64,
    pub gamma: f64,
    pub rho: f64,
    pub pilot_fill: PilotFill,
}

const REQUIRED: [&str; 12] = [
    "n",
    "cp_len",
    "l_symbols",
    "delta_t",
    "n_p_list",
    "pattern",
    "x1",
    "y2",
    "epsilon",
    "snr_db_list",
    "trials",
    "seed",
];

const OPTIONAL: [&str; 8] = [
    "mode",
    "estimator",
    "channel",
    "taps",
    "phn_sigma2",
    "gamma",
    "rho",
    "pilot_fill",
];

fn parse_one<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{}'", raw.trim())))
}

fn parse_list<T: FromStr>(key: &str, raw: &str) -> Result<Vec<T>> {
    raw.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_one(key, s))
        .collect()
}

impl McConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path.as_ref()).map_err(|e| {
            Error::Io(std::io::Error::new(
                e.kind(),
                format!("{}: {e}", path.as_ref().display()),
            ))
        })?;
        text.parse()
    }

    pub fn params(&self) -> OfdmParams {
        OfdmParams {
            n: self.n,
            cp_len: self.cp_len,
            l_symbols: self.l_symbols,
        }
    }

    pub fn geometry(&self, n_p: usize) -> PilotGeometry {
        PilotGeometry {
            delta_t: self.delta_t,
            n_p,
            pattern: self.pattern,
            x1: self.x1,
            y2: self.y2,
        }
    }

    pub fn channel_model(&self) -> ChannelModel<f64> {
        ChannelModel {
            kind: self.channel,
            taps: self.taps.clone(),
            rho: self.rho,
            ..ChannelModel::identity()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.trials < 1 {
            return cfg("trials >= 1 violated".into());
        }
        if self.n_p_list.is_empty() || self.snr_db_list.is_empty() {
            return cfg("n_p_list and snr_db_list must be non-empty".into());
        }
        if !self.epsilon.is_finite() {
            return cfg("epsilon must be finite".into());
        }
        if self
            .snr_db_list
            .iter()
            .any(|s| s.is_nan() || *s == f64::NEG_INFINITY)
        {
            return cfg("snr_db_list entries must be finite or +inf".into());
        }
        if [self.phn_sigma2, self.gamma]
            .iter()
            .any(|v| v.is_nan() || *v < 0.0)
        {
            return cfg("phn_sigma2 and gamma must be >= 0".into());
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return cfg("rho must lie in [0, 1]".into());
        }
        if self.channel == ChannelKind::StaticTaps && self.taps.is_empty() {
            return cfg("static_taps channel needs taps".into());
        }
        if self.channel != ChannelKind::Identity && self.taps.len() > self.cp_len.max(1) {
            return cfg(format!(
                "{} taps exceed cp_len {}",
                self.taps.len(),
                self.cp_len
            ));
        }
        if self.estimator == EstimatorChoice::Moose && self.l_symbols < 2 {
            return cfg("moose needs l_symbols >= 2 (repeated preamble)".into());
        }
        for &n_p in &self.n_p_list {
            validate(&self.params(), &self.geometry(n_p))
                .map_err(|e| Error::Config(e.to_string()))?;
            if self.estimator == EstimatorChoice::Regression && n_p < 2 {
                return cfg("regression needs n_p >= 2".into());
            }
        }
        Ok(())
    }
}

impl FromStr for McConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut kv: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            let k = k.trim().to_ascii_lowercase();
            if !REQUIRED.contains(&k.as_str()) && !OPTIONAL.contains(&k.as_str()) {
                return Err(Error::Config(format!(
                    "line {}: unknown key '{k}'",
                    lineno + 1
                )));
            }
            if kv.insert(k.clone(), v.trim().to_string()).is_some() {
                return Err(Error::Config(format!(
                    "line {}: duplicate key '{k}'",
                    lineno + 1
                )));
            }
        }
        for key in REQUIRED {
            if !kv.contains_key(key) {
                return Err(Error::Config(format!("missing key '{key}'")));
            }
        }
        let get = |k: &str| kv.get(k).map(String::as_str);
        let req = |k: &str| kv[k].as_str();

        let mode = match get("mode").unwrap_or("known_signal") {
            "pilot_only" => EstimationMode::PilotOnly,
            "known_signal" => EstimationMode::KnownSignal,
            other => return Err(Error::Config(format!("mode: unknown '{other}'"))),
        };
        let estimator = match get("estimator").unwrap_or("regression") {
            "sum" => EstimatorChoice::Sum,
            "regression" => EstimatorChoice::Regression,
            "moose" => EstimatorChoice::Moose,
            other => return Err(Error::Config(format!("estimator: unknown '{other}'"))),
        };
        let channel = match get("channel").unwrap_or("identity") {
            "identity" => ChannelKind::Identity,
            "static_taps" => ChannelKind::StaticTaps,
            "block_rayleigh" => ChannelKind::BlockRayleigh,
            other => return Err(Error::Config(format!("channel: unknown '{other}'"))),
        };
        let pilot_fill = match get("pilot_fill").unwrap_or("null") {
            "null" => PilotFill::Null,
            "data" => PilotFill::Data,
            other => return Err(Error::Config(format!("pilot_fill: unknown '{other}'"))),
        };
        let opt_f64 = |k: &str, default: f64| get(k).map_or(Ok(default), |v| parse_one(k, v));

        let cfg = McConfig {
            n: parse_one("n", req("n"))?,
            cp_len: parse_one("cp_len", req("cp_len"))?,
            l_symbols: parse_one("l_symbols", req("l_symbols"))?,
            delta_t: parse_one("delta_t", req("delta_t"))?,
            n_p_list: parse_list("n_p_list", req("n_p_list"))?,
            pattern: PatternKind::from_str(req("pattern"))
                .map_err(|e| Error::Config(e.to_string()))?,
            x1: parse_one("x1", req("x1"))?,
            y2: parse_one("y2", req("y2"))?,
            epsilon: parse_one("epsilon", req("epsilon"))?,
            snr_db_list: parse_list("snr_db_list", req("snr_db_list"))?,
            trials: parse_one("trials", req("trials"))?,
            seed: parse_one("seed", req("seed"))?,
            mode,
            estimator,
            channel,
            taps: get("taps").map_or(Ok(Vec::new()), |v| parse_list("taps", v))?,
            phn_sigma2: opt_f64("phn_sigma2", 0.0)?,
            gamma: opt_f64("gamma", 0.0)?,
            rho: opt_f64("rho", 0.9)?,
            pilot_fill,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) const SAMPLE: &str = "\
# sample
n = 64
cp_len = 16
l_symbols = 4
delta_t = 8
n_p_list = 4, 8
pattern = comb
x1 = 1
y2 = 8
epsilon = 0.05
snr_db_list = 10, inf
trials = 3
seed = 7
mode = known_signal   # trailing comment
estimator = regression
channel = static_taps
taps = 1, 0.3+0.2i
";

    #[test]
    fn parses_sample() {
        let c: McConfig = SAMPLE.parse().unwrap();
        assert_eq!(c.n_p_list, vec![4, 8]);
        assert_eq!(c.snr_db_list, vec![10.0, f64::INFINITY]);
        assert_eq!(c.taps, vec![Complex::new(1.0, 0.0), Complex::new(0.3, 0.2)]);
        assert_eq!(c.mode, EstimationMode::KnownSignal);
        assert_eq!(c.pilot_fill, PilotFill::Null);
        assert_eq!(c.rho, 0.9);
    }

    #[test]
    fn rejects_bad_input() {
        let bad = |s: String| matches!(s.parse::<McConfig>(), Err(Error::Config(_)));
        assert!(bad(SAMPLE.replace("trials = 3", "trials = 0")));
        assert!(bad(SAMPLE.replace("seed = 7", "")));
        assert!(bad(format!("{SAMPLE}colour = red\n")));
        assert!(bad(format!("{SAMPLE}n = 64\n")));
        assert!(bad(SAMPLE.replace("n_p_list = 4, 8", "n_p_list = 9")));
        assert!(bad(SAMPLE.replace("mode = known_signal", "mode = psychic")));
        assert!(bad(SAMPLE.replace("pattern = comb", "pattern = zigzag")));
        assert!(bad(SAMPLE.replace("n = 64", "n = sixty-four")));
        assert!(bad(format!("{SAMPLE}just words\n")));
    }

    #[test]
    fn missing_file_is_io() {
        let err = McConfig::from_file("/nonexistent/config.cfg").unwrap_err();
        assert!(err.is_io());
    }
}
