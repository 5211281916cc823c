//! Simulation config and its sectioned `key = value` text format.
//!
//! ```text
//! [run]
//! mode = kfca_qp        # kfca_qp (sign alphabet) or kfca_d (L labels)
//! rounds = 10
//! clients = 11
//! peers = 10
//! tasks = 10000
//! labels = 2
//! seed = 7
//! persistence = 0.8
//!
//! [partition]
//! bonus = 0.5
//! penalty_1 = 0.25
//! penalty_2 = 0.25
//!
//! [noise]
//! alpha = 0.1           # or: alphas = 0.1, 0.2, ...  or: concentration = 0.5
//! effort = 1
//!
//! [attacks]
//! default = honest
//! 10 = sign_flip
//! 3-5 = sparse:50
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::attack::AttackSpec;
use crate::error::{Error, Result};
use crate::mechanism::PartitionFractions;
use crate::noniid::NoiseProfileParams;
use crate::reports::MIN_TASKS;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SimMode {
    /// Categorical predictions on shared tasks, `L` labels.
    #[serde(rename = "kfca_d")]
    Direct,
    /// Signs of parameter-update coordinates.
    #[serde(rename = "kfca_qp")]
    Quantized,
}

impl SimMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Direct => "kfca_d",
            Self::Quantized => "kfca_qp",
        }
    }
}

impl FromStr for SimMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "kfca_d" | "d" | "direct" => Ok(Self::Direct),
            "kfca_qp" | "qp" | "quantized" => Ok(Self::Quantized),
            other => Err(Error::Config(format!("unknown mode {other:?} (expected kfca_d or kfca_qp)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseSpec {
    /// Same symmetric noise rate for every client.
    Fixed(f64),
    PerClient(Vec<f64>),
    /// Rates derived from Dirichlet class skew.
    Dirichlet {
        concentration: f64,
        params: NoiseProfileParams,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub mode: SimMode,
    pub rounds: usize,
    pub clients: usize,
    pub peers: usize,
    pub tasks: usize,
    pub labels: usize,
    pub seed: u64,
    /// Probability that a task keeps last round's truth.
    pub persistence: f64,
    pub fractions: PartitionFractions,
    pub noise: NoiseSpec,
    pub effort: f64,
    /// One entry per client.
    pub attacks: Vec<AttackSpec>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            mode: SimMode::Quantized,
            rounds: 10,
            clients: 10,
            peers: 9,
            tasks: 10_000,
            labels: 2,
            seed: 0,
            persistence: 0.8,
            fractions: PartitionFractions::default(),
            noise: NoiseSpec::Fixed(0.1),
            effort: 1.0,
            attacks: vec![AttackSpec::Honest; 10],
        }
    }
}

impl SimConfig {
    /// `honest` honest clients followed by one client per listed attack,
    /// every client scored against all others.
    pub fn with_population(honest: usize, attacks: &[AttackSpec]) -> Self {
        let mut all = vec![AttackSpec::Honest; honest];
        all.extend_from_slice(attacks);
        let n = all.len();
        Self {
            clients: n,
            peers: n.saturating_sub(1),
            attacks: all,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::Config("rounds must be at least 1".into()));
        }
        if self.clients < 2 {
            return Err(Error::Config(format!("clients = {} but at least 2 are needed", self.clients)));
        }
        if self.tasks < MIN_TASKS {
            return Err(Error::TooFewTasks(self.tasks));
        }
        if self.peers == 0 || self.peers > self.clients - 1 {
            return Err(Error::NotEnoughPeers {
                requested: self.peers,
                available: self.clients - 1,
            });
        }
        if self.labels < 2 {
            return Err(Error::TooFewLabels(self.labels));
        }
        if self.mode == SimMode::Quantized && self.labels != 2 {
            return Err(Error::Config(format!("kfca_qp uses the sign alphabet, labels must be 2 (got {})", self.labels)));
        }
        if !(0.0..=1.0).contains(&self.persistence) {
            return Err(Error::Config(format!("persistence {} outside [0, 1]", self.persistence)));
        }
        if !(0.0..=1.0).contains(&self.effort) {
            return Err(Error::InvalidEffort(self.effort));
        }
        self.fractions.validate()?;
        if self.attacks.len() != self.clients {
            return Err(Error::DimensionMismatch {
                what: "attack list".into(),
                expected: self.clients,
                got: self.attacks.len(),
            });
        }
        for a in &self.attacks {
            a.validate()?;
        }
        match &self.noise {
            NoiseSpec::Fixed(a) => check_alpha(*a)?,
            NoiseSpec::PerClient(v) => {
                if v.len() != self.clients {
                    return Err(Error::DimensionMismatch {
                        what: "alphas".into(),
                        expected: self.clients,
                        got: v.len(),
                    });
                }
                v.iter().try_for_each(|&a| check_alpha(a))?;
            }
            NoiseSpec::Dirichlet { concentration, .. } => {
                if !(concentration.is_finite() && *concentration > 0.0) {
                    return Err(Error::InvalidConcentration(*concentration));
                }
            }
        }
        Ok(())
    }

    /// Canonical text form; parsing it gives back an equal config.
    pub fn to_ini(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[run]");
        let _ = writeln!(s, "mode = {}", self.mode.as_str());
        let _ = writeln!(s, "rounds = {}", self.rounds);
        let _ = writeln!(s, "clients = {}", self.clients);
        let _ = writeln!(s, "peers = {}", self.peers);
        let _ = writeln!(s, "tasks = {}", self.tasks);
        let _ = writeln!(s, "labels = {}", self.labels);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "persistence = {}", self.persistence);
        let _ = writeln!(s, "\n[partition]");
        let _ = writeln!(s, "bonus = {}", self.fractions.bonus);
        let _ = writeln!(s, "penalty_1 = {}", self.fractions.penalty_1);
        let _ = writeln!(s, "penalty_2 = {}", self.fractions.penalty_2);
        let _ = writeln!(s, "\n[noise]");
        match &self.noise {
            NoiseSpec::Fixed(a) => {
                let _ = writeln!(s, "alpha = {a}");
            }
            NoiseSpec::PerClient(v) => {
                let list: Vec<String> = v.iter().map(f64::to_string).collect();
                let _ = writeln!(s, "alphas = {}", list.join(", "));
            }
            NoiseSpec::Dirichlet { concentration, params } => {
                let _ = writeln!(s, "concentration = {concentration}");
                let _ = writeln!(s, "base_noise = {}", params.base_noise);
                let _ = writeln!(s, "skew_gain = {}", params.skew_gain);
                let _ = writeln!(s, "classes = {}", params.classes);
            }
        }
        let _ = writeln!(s, "effort = {}", self.effort);
        let _ = writeln!(s, "\n[attacks]");
        let _ = writeln!(s, "default = honest");
        for (i, a) in self.attacks.iter().enumerate() {
            if !a.is_honest() {
                let _ = writeln!(s, "{i} = {a}");
            }
        }
        s
    }

    pub fn from_ini(text: &str) -> Result<Self> {
        Self::from_ini_with_overrides(text, &[])
    }

    /// Parses `text`, then applies `section.key=value` overrides on top.
    pub fn from_ini_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut doc = parse_sections(text)?;
        for o in overrides {
            let (path, value) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override {o:?}: expected section.key=value")))?;
            let (section, key) = path
                .trim()
                .split_once('.')
                .ok_or_else(|| Error::Config(format!("override {o:?}: expected section.key=value")))?;
            let (section, key) = (section.trim().to_ascii_lowercase(), key.trim().to_ascii_lowercase());
            if !SECTIONS.contains(&section.as_str()) {
                return Err(Error::Config(format!("override {o:?}: unknown section [{section}]")));
            }
            doc.retain(|e| !(e.section == section && e.key == key));
            doc.push(Entry {
                origin: format!("override {section}.{key}"),
                line: 0,
                section,
                key,
                value: value.trim().to_string(),
            });
        }
        let mut cfg = Self::default();
        let mut attack_lines: Vec<(String, String, String)> = Vec::new();
        let mut peers_set = false;
        let mut noise_keys: BTreeMap<String, (String, String)> = BTreeMap::new();
        for entry in &doc {
            let at = |e: Error| Error::Config(format!("{}: {}", entry.origin, strip_config(e)));
            let v = entry.value.as_str();
            match (entry.section.as_str(), entry.key.as_str()) {
                ("run", "mode") => cfg.mode = v.parse().map_err(at)?,
                ("run", "rounds") => cfg.rounds = parse_num(v).map_err(at)?,
                ("run", "clients") => cfg.clients = parse_num(v).map_err(at)?,
                ("run", "peers") => {
                    cfg.peers = parse_num(v).map_err(at)?;
                    peers_set = true;
                }
                ("run", "tasks") => cfg.tasks = parse_num(v).map_err(at)?,
                ("run", "labels") => cfg.labels = parse_num(v).map_err(at)?,
                ("run", "seed") => cfg.seed = parse_num(v).map_err(at)?,
                ("run", "persistence") => cfg.persistence = parse_num(v).map_err(at)?,
                ("partition", "bonus") => cfg.fractions.bonus = parse_num(v).map_err(at)?,
                ("partition", "penalty_1") => cfg.fractions.penalty_1 = parse_num(v).map_err(at)?,
                ("partition", "penalty_2") => cfg.fractions.penalty_2 = parse_num(v).map_err(at)?,
                ("noise", "effort") => cfg.effort = parse_num(v).map_err(at)?,
                ("noise", k @ ("alpha" | "alphas" | "concentration" | "base_noise" | "skew_gain" | "classes")) => {
                    noise_keys.insert(k.to_string(), (entry.origin.clone(), v.to_string()));
                }
                ("attacks", _) => attack_lines.push((entry.origin.clone(), entry.key.clone(), v.to_string())),
                (section, key) => {
                    return Err(Error::Config(format!("{}: unknown key {key:?} in [{section}]", entry.origin)));
                }
            }
        }
        if !peers_set {
            cfg.peers = cfg.clients.saturating_sub(1);
        }
        cfg.noise = resolve_noise(&noise_keys)?;
        cfg.attacks = resolve_attacks(cfg.clients, &attack_lines)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn check_alpha(a: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::InvalidAlpha(a));
    }
    Ok(())
}

fn strip_config(e: Error) -> String {
    match e {
        Error::Config(m) => m,
        other => other.to_string(),
    }
}

fn parse_num<T: FromStr>(v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("cannot parse {v:?} as a {}", std::any::type_name::<T>())))
}

struct Entry {
    /// `line N`, or `override S.K` for command-line settings.
    origin: String,
    line: usize,
    section: String,
    key: String,
    value: String,
}

const SECTIONS: [&str; 4] = ["run", "partition", "noise", "attacks"];

fn parse_sections(text: &str) -> Result<Vec<Entry>> {
    let mut out: Vec<Entry> = Vec::new();
    let mut section: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split(['#', ';']).next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::Config(format!("line {line}: unterminated section header")))?
                .trim()
                .to_ascii_lowercase();
            if !SECTIONS.contains(&name.as_str()) {
                return Err(Error::Config(format!("line {line}: unknown section [{name}]")));
            }
            section = Some(name);
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {line}: expected key = value")))?;
        let key = key.trim().to_ascii_lowercase();
        if key.is_empty() {
            return Err(Error::Config(format!("line {line}: empty key")));
        }
        let section = section
            .clone()
            .ok_or_else(|| Error::Config(format!("line {line}: key {key:?} outside any section")))?;
        if let Some(prev) = out.iter().find(|e| e.section == section && e.key == key) {
            return Err(Error::Config(format!(
                "line {line}: key {key:?} in [{section}] already set on line {}",
                prev.line
            )));
        }
        out.push(Entry {
            origin: format!("line {line}"),
            line,
            section,
            key,
            value: value.trim().to_string(),
        });
    }
    Ok(out)
}

fn resolve_noise(keys: &BTreeMap<String, (String, String)>) -> Result<NoiseSpec> {
    let get = |k: &str| keys.get(k);
    let num = |k: &str| -> Result<Option<f64>> {
        get(k)
            .map(|(origin, v)| parse_num(v).map_err(|e| Error::Config(format!("{origin}: {}", strip_config(e)))))
            .transpose()
    };
    let chosen: Vec<&str> = ["alpha", "alphas", "concentration"]
        .into_iter()
        .filter(|k| keys.contains_key(*k))
        .collect();
    if chosen.len() > 1 {
        return Err(Error::Config(format!("[noise] sets {} together; pick one", chosen.join(" and "))));
    }
    let dirichlet_only = ["base_noise", "skew_gain", "classes"];
    if chosen.first() != Some(&"concentration") {
        if let Some(k) = dirichlet_only.iter().find(|k| keys.contains_key(**k)) {
            let (origin, _) = &keys[*k];
            return Err(Error::Config(format!("{origin}: {k} only applies with concentration")));
        }
    }
    Ok(match chosen.first() {
        None => NoiseSpec::Fixed(0.1),
        Some(&"alpha") => NoiseSpec::Fixed(num("alpha")?.expect("present")),
        Some(&"alphas") => {
            let (origin, v) = &keys["alphas"];
            let list = v
                .split(',')
                .map(|x| parse_num(x.trim()))
                .collect::<Result<Vec<f64>>>()
                .map_err(|e| Error::Config(format!("{origin}: {}", strip_config(e))))?;
            NoiseSpec::PerClient(list)
        }
        Some(_) => {
            let d = NoiseProfileParams::default();
            let classes = match get("classes") {
                Some((origin, v)) => parse_num(v).map_err(|e| Error::Config(format!("{origin}: {}", strip_config(e))))?,
                None => d.classes,
            };
            NoiseSpec::Dirichlet {
                concentration: num("concentration")?.expect("present"),
                params: NoiseProfileParams {
                    classes,
                    base_noise: num("base_noise")?.unwrap_or(d.base_noise),
                    skew_gain: num("skew_gain")?.unwrap_or(d.skew_gain),
                },
            }
        }
    })
}

fn resolve_attacks(clients: usize, lines: &[(String, String, String)]) -> Result<Vec<AttackSpec>> {
    let parse_attack = |origin: &str, v: &str| -> Result<AttackSpec> {
        v.parse::<AttackSpec>()
            .map_err(|e| Error::Config(format!("{origin}: {e}")))
    };
    let mut default = AttackSpec::Honest;
    if let Some((origin, _, v)) = lines.iter().find(|(_, k, _)| k == "default") {
        default = parse_attack(origin, v)?;
    }
    let mut out = vec![default; clients];
    let mut assigned: Vec<Option<&String>> = vec![None; clients];
    for (origin, key, v) in lines.iter().filter(|(_, k, _)| k != "default") {
        let range = |s: &str| -> Result<usize> {
            s.trim()
                .parse()
                .map_err(|_| Error::Config(format!("{origin}: attack key {key:?} is not a client index or range")))
        };
        let (lo, hi) = match key.split_once('-') {
            Some((a, b)) => (range(a)?, range(b)?),
            None => {
                let i = range(key)?;
                (i, i)
            }
        };
        if lo > hi || hi >= clients {
            return Err(Error::Config(format!(
                "{origin}: clients {lo}-{hi} outside 0-{}",
                clients.saturating_sub(1)
            )));
        }
        let spec = parse_attack(origin, v)?;
        for i in lo..=hi {
            if let Some(prev) = assigned[i].replace(origin) {
                return Err(Error::Config(format!("{origin}: client {i} already given an attack ({prev})")));
            }
            out[i] = spec;
        }
    }
    Ok(out)
}
