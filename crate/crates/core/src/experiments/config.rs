//! Flat `key = value` experiment configuration.
//!
//! Every experiment declares its full key set with defaults; files and
//! overrides may only change existing keys. Later assignments win, so the
//! precedence is defaults < file < inline overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::adversary::AdversaryStrategy;
use crate::error::{Error, Result};
use crate::protocol::Opinion;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
}

impl ConfigMap {
    pub fn with_defaults(defaults: &[(&str, &str)]) -> Self {
        Self {
            entries: defaults
                .iter()
                .map(|(k, v)| ((*k).to_owned(), (*v).to_owned()))
                .collect(),
        }
    }

    /// Replaces the value of an existing key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        match self.entries.get_mut(key) {
            Some(slot) => {
                *slot = value.trim().to_owned();
                Ok(())
            }
            None => Err(Error::Config(format!(
                "unknown key '{key}' (known: {})",
                self.entries.keys().cloned().collect::<Vec<_>>().join(", ")
            ))),
        }
    }

    /// Applies one `key=value` assignment.
    pub fn assign(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = split_assignment(assignment)
            .ok_or_else(|| Error::Config(format!("expected key=value, got '{assignment}'")))?;
        self.set(k, v)
    }

    /// Applies every assignment in a config file body. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn merge_text(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = split_assignment(line).ok_or_else(|| {
                Error::Config(format!("line {}: expected key=value, got '{line}'", lineno + 1))
            })?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        self.merge_text(&text)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn get_str(&self, key: &str) -> Result<&str> {
        self.entries
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Config(format!("missing key '{key}'")))
    }

    pub fn get<T>(&self, key: &str) -> Result<T>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        let raw = self.get_str(key)?;
        raw.parse()
            .map_err(|e| Error::Config(format!("key '{key}': cannot parse '{raw}': {e}")))
    }

    /// Comma-separated list; an empty value is an empty list.
    pub fn get_list<T>(&self, key: &str) -> Result<Vec<T>>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        let raw = self.get_str(key)?;
        raw.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|e| Error::Config(format!("key '{key}': cannot parse '{s}': {e}")))
            })
            .collect()
    }

    /// Sorted by key.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Renders the map as a config file that `merge_text` accepts.
    pub fn to_text(&self) -> String {
        self.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

fn split_assignment(s: &str) -> Option<(&str, &str)> {
    let (k, v) = s.split_once('=')?;
    let k = k.trim();
    (!k.is_empty()).then_some((k, v.trim()))
}

/// A parsed `k:alpha` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KAlpha {
    pub k: u32,
    pub alpha: u32,
}

impl fmt::Display for KAlpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.k, self.alpha)
    }
}

impl FromStr for KAlpha {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("expected k:alpha, got '{s}'"));
        let (k, a) = s.split_once(':').ok_or_else(bad)?;
        Ok(Self {
            k: k.trim().parse().map_err(|_| bad())?,
            alpha: a.trim().parse().map_err(|_| bad())?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Budget {
    Fixed(usize),
    /// `ceil(sqrt(n))`.
    Sqrt,
}

impl Budget {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            Budget::Fixed(f) => f,
            Budget::Sqrt => (n as f64).sqrt().ceil() as usize,
        }
    }
}

/// An adversary entry whose budget may depend on `n`, written like
/// `AdversaryStrategy` but also accepting `sqrt` as the budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdversarySpec {
    keyword: String,
    budget: Budget,
    target: Option<Opinion>,
}

impl AdversarySpec {
    pub fn resolve(&self, n: usize) -> Result<AdversaryStrategy> {
        AdversaryStrategy::from_parts(&self.keyword, self.budget.resolve(n), self.target)
    }
}

impl fmt::Display for AdversarySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.keyword)?;
        if self.keyword == "none" {
            return Ok(());
        }
        match self.budget {
            Budget::Fixed(b) => write!(f, ":{b}")?,
            Budget::Sqrt => f.write_str(":sqrt")?,
        }
        if let Some(t) = self.target {
            write!(f, ":{t}")?;
        }
        Ok(())
    }
}

impl FromStr for AdversarySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().splitn(3, ':');
        let keyword = parts.next().unwrap_or_default().trim().to_ascii_lowercase();
        let budget = match parts.next().map(str::trim) {
            None => Budget::Fixed(0),
            Some("sqrt") => Budget::Sqrt,
            Some(b) => Budget::Fixed(
                b.parse()
                    .map_err(|_| Error::Config(format!("bad adversary budget '{b}' in '{s}'")))?,
            ),
        };
        let target = parts.next().map(str::parse).transpose()?;
        let spec = Self { keyword, budget, target };
        // Reject unknown keywords early.
        spec.resolve(1 << 20)?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ConfigMap {
        ConfigMap::with_defaults(&[("n", "100"), ("ks", "2,5"), ("adversary", "none")])
    }

    #[test]
    fn overrides_win_and_unknown_keys_fail() {
        let mut c = base();
        c.merge_text("# comment\nn = 200\n\nks=3").unwrap();
        c.assign("n=300").unwrap();
        assert_eq!(c.get::<usize>("n").unwrap(), 300);
        assert_eq!(c.get_list::<u32>("ks").unwrap(), vec![3]);
        assert!(c.assign("bogus=1").is_err());
        assert!(c.merge_text("n 5").is_err());
    }

    #[test]
    fn text_round_trips() {
        let mut c = base();
        c.set("ks", "1,2,3").unwrap();
        let mut d = base();
        d.merge_text(&c.to_text()).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn adversary_specs() {
        let a: AdversarySpec = "flip-minority:sqrt".parse().unwrap();
        assert_eq!(
            a.resolve(1000).unwrap(),
            AdversaryStrategy::FlipToMinority { budget: 32 }
        );
        assert_eq!(a.to_string(), "flip-minority:sqrt");
        let p: AdversarySpec = "pin:4:1".parse().unwrap();
        assert_eq!(
            p.resolve(10).unwrap(),
            AdversaryStrategy::PinOpinion { budget: 4, target: Opinion::One }
        );
        assert_eq!("none".parse::<AdversarySpec>().unwrap().to_string(), "none");
        assert!("teleport:3".parse::<AdversarySpec>().is_err());
    }

    #[test]
    fn k_alpha_pairs() {
        let c = ConfigMap::with_defaults(&[("pairs", "3:2, 20:15")]);
        let v: Vec<KAlpha> = c.get_list("pairs").unwrap();
        assert_eq!(v[1], KAlpha { k: 20, alpha: 15 });
        assert!("3-2".parse::<KAlpha>().is_err());
    }
}
