//! Parameter resolution: flag, then config file, then built-in default. The
//! global seed has its own environment override between flag and file.

use std::path::PathBuf;
use std::str::FromStr;

use ini::Ini;

use crate::error::CliError;

pub const CONFIG_ENV: &str = "SLE_WEDGE_CONFIG";
pub const SEED_ENV: &str = "SLE_WEDGE_SEED";

pub struct Config {
    ini: Option<Ini>,
    path: Option<PathBuf>,
    env_seed: Option<u64>,
}

impl Config {
    pub fn from_env() -> Result<Self, CliError> {
        let path = std::env::var_os(CONFIG_ENV)
            .filter(|p| !p.is_empty())
            .map(PathBuf::from);
        let ini = match &path {
            Some(p) => Some(Ini::load_from_file(p).map_err(|e| {
                CliError::Usage(format!("cannot read config {}: {e}", p.display()))
            })?),
            None => None,
        };
        let env_seed = match std::env::var(SEED_ENV) {
            Ok(s) if !s.trim().is_empty() => Some(
                s.trim()
                    .parse()
                    .map_err(|_| CliError::Usage(format!("{SEED_ENV}={s} is not a seed")))?,
            ),
            _ => None,
        };
        Ok(Self {
            ini,
            path,
            env_seed,
        })
    }

    pub fn path(&self) -> Option<&PathBuf> {
        self.path.as_ref()
    }

    /// A key from the command's section, falling back to the top of the file.
    fn raw(&self, section: &str, key: &str) -> Option<&str> {
        let ini = self.ini.as_ref()?;
        ini.get_from(Some(section), key)
            .or_else(|| ini.get_from(None::<String>, key))
    }

    pub fn get<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>, CliError> {
        match self.raw(section, key) {
            None => Ok(None),
            Some(v) => v.trim().parse().map(Some).map_err(|_| {
                CliError::Usage(format!("config key {section}.{key} = {v:?} does not parse"))
            }),
        }
    }

    pub fn pick<T: FromStr>(
        &self,
        flag: Option<T>,
        section: &str,
        key: &str,
        default: T,
    ) -> Result<T, CliError> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get(section, key)?.unwrap_or(default)),
        }
    }

    pub fn seed(&self, flag: Option<u64>, section: &str, default: u64) -> Result<u64, CliError> {
        if let Some(s) = flag.or(self.env_seed) {
            return Ok(s);
        }
        Ok(self.get(section, "seed")?.unwrap_or(default))
    }
}

/// Reals written as decimals or as `p/q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl FromStr for Num {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let bad = || format!("{s:?} is not a number");
        match s.split_once('/') {
            Some((p, q)) => {
                let p: f64 = p.trim().parse().map_err(|_| bad())?;
                let q: f64 = q.trim().parse().map_err(|_| bad())?;
                Ok(Num(p / q))
            }
            None => s.parse().map(Num).map_err(|_| bad()),
        }
    }
}
