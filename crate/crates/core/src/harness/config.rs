//! Run configuration.
//!
//! A config is a TOML table. Compound settings use short string forms so the
//! same syntax works in the file and on the command line:
//!
//! ```toml
//! mode = "binary-changing-c"   # binary-fixed-c | binary-changing-c | adaptive | multiclass | littlestone
//! n = 16
//! t = 10000
//! seed = 7
//! eta = "tsybakov:0.5"         # tuned | adaptive | tsybakov:<alpha> | <number>
//! costs = "tsybakov:0.5:1"     # constant:<c> | tsybakov:<alpha>:<beta> | uniform:<lo>:<hi> | file:<path>
//! env = "iid"                  # iid | bernoulli:<p> | alternating | adversary | replay:<path>
//! expectation = "exact"        # exact | sampled:<runs>
//! ```

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    BinaryFixedC,
    BinaryChangingC,
    Adaptive,
    Multiclass,
    Littlestone,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "binary-fixed-c" => Mode::BinaryFixedC,
            "binary-changing-c" => Mode::BinaryChangingC,
            "adaptive" => Mode::Adaptive,
            "multiclass" => Mode::Multiclass,
            "littlestone" => Mode::Littlestone,
            _ => return Err(cfg("mode", format!("unknown mode `{s}`"))),
        })
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::BinaryFixedC => "binary-fixed-c",
            Mode::BinaryChangingC => "binary-changing-c",
            Mode::Adaptive => "adaptive",
            Mode::Multiclass => "multiclass",
            Mode::Littlestone => "littlestone",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum EtaPolicy {
    Explicit(f64),
    /// Fixed cost: `max(2(1-2c), sqrt(8 ln N / T))`. Changing costs: the
    /// hindsight minimizer of the fixed-rate bound.
    Tuned,
    Tsybakov(f64),
    Adaptive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum CostSpec {
    Constant(f64),
    Tsybakov { alpha: f64, beta: f64 },
    Uniform { lo: f64, hi: f64 },
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum EnvSpec {
    /// Labels `Bernoulli(bias)`, expert `i` flips them with probability `rates[i]`.
    Iid,
    /// Every expert loss is an independent `Bernoulli(p)` draw.
    Bernoulli(f64),
    /// Expert `i` always predicts `i mod 2`; labels alternate 0, 1, 0, ...
    Alternating,
    /// Reactive: opposite label on predictions, leader's label on abstentions.
    Adversary,
    Replay(PathBuf),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Expectation {
    Exact,
    Sampled(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ClassSpec {
    All(usize),
    Thresholds(usize),
    File(PathBuf),
}

macro_rules! string_forms {
    ($($ty:ty),*) => {$(
        impl TryFrom<String> for $ty {
            type Error = Error;
            fn try_from(s: String) -> Result<Self> {
                s.parse()
            }
        }
        impl From<$ty> for String {
            fn from(v: $ty) -> String {
                v.to_string()
            }
        }
    )*};
}
string_forms!(EtaPolicy, CostSpec, EnvSpec, Expectation, ClassSpec);

fn cfg(field: &'static str, msg: impl Into<String>) -> Error {
    Error::Config {
        field,
        msg: msg.into(),
    }
}

fn num<T: FromStr>(field: &'static str, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| cfg(field, format!("cannot parse `{s}` as a number")))
}

impl FromStr for EtaPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let policy = match s.split_once(':') {
            None if s == "tuned" => EtaPolicy::Tuned,
            None if s == "adaptive" => EtaPolicy::Adaptive,
            None => EtaPolicy::Explicit(num("eta", s)?),
            Some(("tsybakov", a)) => EtaPolicy::Tsybakov(num("eta", a)?),
            Some(_) => return Err(cfg("eta", format!("unknown policy `{s}`"))),
        };
        match policy {
            EtaPolicy::Explicit(e) if !(e > 0.0 && e.is_finite()) => {
                Err(cfg("eta", format!("rate must be positive, got {e}")))
            }
            EtaPolicy::Tsybakov(a) if !(0.0..1.0).contains(&a) => {
                Err(cfg("eta", format!("alpha must be in [0, 1), got {a}")))
            }
            p => Ok(p),
        }
    }
}

impl fmt::Display for EtaPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EtaPolicy::Explicit(e) => write!(f, "{e}"),
            EtaPolicy::Tuned => f.write_str("tuned"),
            EtaPolicy::Tsybakov(a) => write!(f, "tsybakov:{a}"),
            EtaPolicy::Adaptive => f.write_str("adaptive"),
        }
    }
}

impl FromStr for CostSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.splitn(3, ':').collect();
        Ok(match parts.as_slice() {
            ["constant", c] => CostSpec::Constant(num("costs", c)?),
            ["tsybakov", a, b] => CostSpec::Tsybakov {
                alpha: num("costs", a)?,
                beta: num("costs", b)?,
            },
            ["uniform", lo, hi] => CostSpec::Uniform {
                lo: num("costs", lo)?,
                hi: num("costs", hi)?,
            },
            ["file", ..] => CostSpec::File(PathBuf::from(&s["file:".len()..])),
            _ => return Err(cfg("costs", format!("unknown cost source `{s}`"))),
        })
    }
}

impl fmt::Display for CostSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostSpec::Constant(c) => write!(f, "constant:{c}"),
            CostSpec::Tsybakov { alpha, beta } => write!(f, "tsybakov:{alpha}:{beta}"),
            CostSpec::Uniform { lo, hi } => write!(f, "uniform:{lo}:{hi}"),
            CostSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl FromStr for EnvSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.split_once(':') {
            None if s == "iid" => EnvSpec::Iid,
            None if s == "alternating" => EnvSpec::Alternating,
            None if s == "adversary" => EnvSpec::Adversary,
            Some(("bernoulli", p)) => EnvSpec::Bernoulli(num("env", p)?),
            Some(("replay", path)) => EnvSpec::Replay(PathBuf::from(path)),
            _ => return Err(cfg("env", format!("unknown environment `{s}`"))),
        })
    }
}

impl fmt::Display for EnvSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvSpec::Iid => f.write_str("iid"),
            EnvSpec::Bernoulli(p) => write!(f, "bernoulli:{p}"),
            EnvSpec::Alternating => f.write_str("alternating"),
            EnvSpec::Adversary => f.write_str("adversary"),
            EnvSpec::Replay(p) => write!(f, "replay:{}", p.display()),
        }
    }
}

impl FromStr for Expectation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "exact" => Ok(Expectation::Exact),
            Some(("sampled", m)) => match num("expectation", m)? {
                0 => Err(cfg("expectation", "sampled mode needs at least one run")),
                m => Ok(Expectation::Sampled(m)),
            },
            _ => Err(cfg("expectation", format!("unknown mode `{s}`"))),
        }
    }
}

impl fmt::Display for Expectation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expectation::Exact => f.write_str("exact"),
            Expectation::Sampled(m) => write!(f, "sampled:{m}"),
        }
    }
}

impl FromStr for ClassSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.split_once(':') {
            Some(("all", m)) => ClassSpec::All(num("class", m)?),
            Some(("thresholds", m)) => ClassSpec::Thresholds(num("class", m)?),
            Some(("file", path)) => ClassSpec::File(PathBuf::from(path)),
            _ => return Err(cfg("class", format!("unknown class `{s}`"))),
        })
    }
}

impl fmt::Display for ClassSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassSpec::All(m) => write!(f, "all:{m}"),
            ClassSpec::Thresholds(m) => write!(f, "thresholds:{m}"),
            ClassSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

fn default_n() -> usize {
    2
}

fn default_k() -> usize {
    2
}

fn default_c() -> f64 {
    0.25
}

fn default_bias() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    #[serde(default = "default_n")]
    pub n: usize,
    pub t: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    /// Cost for the fixed-cost, multiclass and littlestone modes.
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub costs: Option<CostSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<EtaPolicy>,
    #[serde(default = "default_env")]
    pub env: EnvSpec,
    /// Per-expert error rates; defaults to evenly spaced rates in `[0, 1/2]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<Vec<f64>>,
    #[serde(default = "default_bias")]
    pub bias: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<ClassSpec>,
    /// Index of the labeling hypothesis in littlestone mode.
    #[serde(default)]
    pub target: usize,
    /// Label noise in littlestone mode.
    #[serde(default)]
    pub noise: f64,
    #[serde(with = "seed_format")]
    pub seed: u64,
    #[serde(default = "default_expectation")]
    pub expectation: Expectation,
}

/// TOML integers are signed 64-bit; seeds above `i64::MAX` are written as
/// decimal strings. Both forms are accepted on input.
pub(crate) mod seed_format {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(seed: &u64, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(*seed) {
            Ok(v) => s.serialize_i64(v),
            Err(_) => s.serialize_str(&seed.to_string()),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(v) => {
                u64::try_from(v).map_err(|_| de::Error::custom("seed must be nonnegative"))
            }
            Raw::Text(t) => t
                .parse()
                .map_err(|_| de::Error::custom(format!("bad seed `{t}`"))),
        }
    }
}

fn default_env() -> EnvSpec {
    EnvSpec::Iid
}

fn default_expectation() -> Expectation {
    Expectation::Exact
}

impl RunConfig {
    pub fn new(mode: Mode, n: usize, t: usize, seed: u64) -> Self {
        RunConfig {
            mode,
            n,
            t,
            k: default_k(),
            c: default_c(),
            costs: None,
            eta: None,
            env: EnvSpec::Iid,
            rates: None,
            bias: default_bias(),
            class: None,
            target: 0,
            noise: 0.0,
            seed,
            expectation: Expectation::Exact,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::Parse {
            line: e
                .span()
                .map(|s| text[..s.start].lines().count().max(1))
                .unwrap_or(0),
            msg: e.message().to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Learning-rate policy after defaults: adaptive mode implies the
    /// adaptive schedule, everything else defaults to `tuned`.
    pub fn eta_policy(&self) -> EtaPolicy {
        self.eta.unwrap_or(match self.mode {
            Mode::Adaptive => EtaPolicy::Adaptive,
            _ => EtaPolicy::Tuned,
        })
    }

    /// Cost source after defaults.
    pub fn cost_spec(&self) -> CostSpec {
        self.costs.clone().unwrap_or(CostSpec::Constant(self.c))
    }

    pub fn expert_rates(&self) -> Vec<f64> {
        self.rates.clone().unwrap_or_else(|| {
            if self.n == 1 {
                vec![0.0]
            } else {
                (0..self.n)
                    .map(|i| 0.5 * i as f64 / (self.n - 1) as f64)
                    .collect()
            }
        })
    }

    pub fn validate(&self) -> Result<()> {
        let replay = matches!(self.env, EnvSpec::Replay(_));
        if self.n == 0 && !replay && self.mode != Mode::Littlestone {
            return Err(cfg("n", "need at least one expert"));
        }
        if self.t == 0 && !replay {
            return Err(cfg("t", "horizon must be positive"));
        }
        if !(0.0..=0.5).contains(&self.c) {
            return Err(cfg("c", format!("cost {} outside [0, 1/2]", self.c)));
        }
        if !(0.0..=1.0).contains(&self.bias) {
            return Err(cfg("bias", format!("{} outside [0, 1]", self.bias)));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(cfg("noise", format!("{} outside [0, 1]", self.noise)));
        }
        if let Some(rates) = &self.rates {
            if !replay && rates.len() != self.n {
                return Err(cfg(
                    "rates",
                    format!("{} rates for {} experts", rates.len(), self.n),
                ));
            }
            if let Some(r) = rates.iter().find(|r| !(0.0..=1.0).contains(*r)) {
                return Err(cfg("rates", format!("rate {r} outside [0, 1]")));
            }
        }
        if let EnvSpec::Bernoulli(p) = self.env {
            if !(0.0..=1.0).contains(&p) {
                return Err(cfg("env", format!("loss probability {p} outside [0, 1]")));
            }
        }
        let eta = self.eta_policy();
        match (self.mode, eta) {
            (Mode::Adaptive, EtaPolicy::Adaptive) => {}
            (Mode::Adaptive, _) => return Err(cfg("eta", "adaptive mode sets its own rates")),
            (_, EtaPolicy::Adaptive) => {
                return Err(cfg(
                    "eta",
                    "the adaptive schedule needs mode = \"adaptive\"",
                ))
            }
            _ => {}
        }
        if self.mode == Mode::Adaptive && self.n < 2 && !replay {
            return Err(cfg("n", "adaptive rates need at least two experts"));
        }
        let changing = matches!(self.mode, Mode::BinaryChangingC | Mode::Adaptive);
        if self.costs.is_some() && !changing {
            return Err(cfg(
                "costs",
                format!("mode {} uses the fixed cost `c`", self.mode),
            ));
        }
        match self.cost_spec() {
            CostSpec::Constant(c) if !(0.0..=0.5).contains(&c) => {
                return Err(cfg("costs", format!("cost {c} outside [0, 1/2]")))
            }
            CostSpec::Uniform { lo, hi } if !(0.0 <= lo && lo <= hi && hi <= 0.5) => {
                return Err(cfg("costs", "need 0 <= lo <= hi <= 1/2"))
            }
            CostSpec::Tsybakov { alpha, beta } if !(0.0..1.0).contains(&alpha) || beta <= 0.0 => {
                return Err(cfg("costs", "need alpha in [0, 1) and beta > 0"))
            }
            CostSpec::File(_) if replay => {
                return Err(cfg("costs", "replayed episodes carry their own costs"))
            }
            _ => {}
        }
        match self.env {
            EnvSpec::Adversary => {
                if self.mode != Mode::BinaryFixedC {
                    return Err(cfg("env", "the adversary plays binary-fixed-c only"));
                }
                if self.expectation == Expectation::Exact {
                    return Err(cfg(
                        "expectation",
                        "reactive environments need sampled:<runs>",
                    ));
                }
                if self.n != 2 {
                    return Err(cfg("n", "the adversary has exactly two experts"));
                }
            }
            EnvSpec::Iid => {}
            _ if matches!(self.mode, Mode::Multiclass | Mode::Littlestone) => {
                return Err(cfg(
                    "env",
                    format!("mode {} generates its own rounds", self.mode),
                ))
            }
            _ => {}
        }
        if self.mode == Mode::Multiclass && self.k < 2 {
            return Err(cfg("k", "need at least two classes"));
        }
        if self.mode == Mode::Littlestone && self.class.is_none() {
            return Err(cfg("class", "littlestone mode needs a hypothesis class"));
        }
        Ok(())
    }
}
