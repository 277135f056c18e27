//! Run configuration: a TOML file and/or command-line overrides, validated
//! into a [`RunConfig`] before anything is computed.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::grid::{GridMeta, Scheme};
use crate::study::{DeltaPolicy, LemmaId, DESK_ALPHAS};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Spectrum,
    Sweep,
    GapDecay,
    Coercivity,
    AppendixScan,
    FigureData,
    Semigroup,
    Selftest,
}

impl std::fmt::Display for Command {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let v = serde_json::to_value(self).map_err(|_| std::fmt::Error)?;
        write!(f, "{}", v.as_str().unwrap_or("?"))
    }
}

/// Everything optional, as read from a file or flags.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub command: Option<Command>,
    pub grid: Option<RawGrid>,
    pub k: Option<i64>,
    pub k_max: Option<i64>,
    pub k_list: Option<Vec<i64>>,
    pub alpha: Option<f64>,
    pub alpha_grid: Option<Vec<f64>>,
    pub delta: Option<f64>,
    pub delta_policy: Option<String>,
    pub n_regions: Option<i64>,
    pub n_eigs: Option<i64>,
    pub lemma: Option<String>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub tolerances: Option<RawTolerances>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGrid {
    pub n: Option<i64>,
    pub r_max: Option<f64>,
    pub scheme: Option<String>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawTolerances {
    pub robust: Option<f64>,
    pub ordering: Option<f64>,
    pub n_coarse: Option<i64>,
}

impl RawConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&s).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `other` win.
    pub fn merge(mut self, other: RawConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(command, k, k_max, k_list, alpha, alpha_grid, delta, delta_policy, n_regions, n_eigs, lemma, seed, out_dir);
        if let Some(g) = other.grid {
            let mut base = self.grid.unwrap_or_default();
            if g.n.is_some() {
                base.n = g.n;
            }
            if g.r_max.is_some() {
                base.r_max = g.r_max;
            }
            if g.scheme.is_some() {
                base.scheme = g.scheme;
            }
            self.grid = Some(base);
        }
        if let Some(t) = other.tolerances {
            let mut base = self.tolerances.unwrap_or_default();
            if t.robust.is_some() {
                base.robust = t.robust;
            }
            if t.ordering.is_some() {
                base.ordering = t.ordering;
            }
            if t.n_coarse.is_some() {
                base.n_coarse = t.n_coarse;
            }
            self.tolerances = Some(base);
        }
        self
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Tolerances {
    pub robust: f64,
    pub ordering: f64,
    pub n_coarse: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub grid: GridMeta,
    pub k: i32,
    pub k_max: i32,
    pub k_list: Vec<i32>,
    pub alpha: f64,
    pub alpha_grid: Vec<f64>,
    pub delta_policy: DeltaPolicy,
    pub n_regions: usize,
    pub n_eigs: usize,
    pub lemmas: Vec<LemmaId>,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub out_dir: PathBuf,
}

fn bad(field: &str, reason: impl Into<String>) -> Error {
    Error::param(field, reason)
}

fn to_i32(field: &str, v: i64) -> Result<i32> {
    i32::try_from(v).map_err(|_| bad(field, format!("{v} is out of range")))
}

fn finite(field: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad(field, "must be finite"))
    }
}

impl RunConfig {
    pub fn validate(raw: RawConfig) -> Result<Self> {
        let command = raw.command.ok_or_else(|| bad("command", "missing"))?;
        let g = raw.grid.unwrap_or_default();
        let n = g.n.unwrap_or(400);
        if n < 8 {
            return Err(bad("grid.n", format!("{n} is below the minimum of 8")));
        }
        let r_max = finite("grid.r_max", g.r_max.unwrap_or(12.0))?;
        if r_max < 4.0 {
            return Err(bad("grid.r_max", format!("{r_max} is below the minimum of 4")));
        }
        let scheme: Scheme = match g.scheme {
            Some(s) => s.parse().map_err(|_| bad("grid.scheme", format!("unknown scheme `{s}`")))?,
            None => Scheme::MappedChebyshev,
        };
        let grid = GridMeta { n: n as usize, r_max, scheme };

        let k = to_i32("k", raw.k.unwrap_or(1))?;
        if k == 0 {
            return Err(bad("k", "mode 0 carries no shear term; use k != 0"));
        }
        let k_max = to_i32("k_max", raw.k_max.unwrap_or(8))?;
        if k_max < 2 {
            return Err(bad("k_max", format!("{k_max} is below 2")));
        }
        let k_list = match raw.k_list {
            Some(v) => v.into_iter().map(|k| to_i32("k_list", k)).collect::<Result<Vec<_>>>()?,
            None => vec![1, 2, 3],
        };
        if k_list.is_empty() || k_list.iter().any(|k| *k < 1) {
            return Err(bad("k_list", "must be a non-empty list of positive modes"));
        }
        let alpha = finite("alpha", raw.alpha.unwrap_or(match command {
            Command::FigureData => 1e3,
            _ => 0.0,
        }))?;
        let alpha_grid = raw.alpha_grid.unwrap_or_else(|| DESK_ALPHAS.to_vec());
        if alpha_grid.iter().any(|a| !a.is_finite() || *a <= 0.0) {
            return Err(bad("alpha_grid", "values must be positive and finite"));
        }
        if alpha_grid.windows(2).any(|w| w[0] >= w[1]) || alpha_grid.len() < 2 {
            return Err(bad("alpha_grid", "must hold at least two strictly increasing values"));
        }
        let delta_policy = match (raw.delta_policy.as_deref(), raw.delta) {
            (None | Some("two-sqrt-d"), None) => DeltaPolicy::TwoSqrtD,
            (None | Some("fixed"), Some(d)) => {
                if !(d > 0.0 && d.is_finite()) {
                    return Err(bad("delta", "must be positive"));
                }
                DeltaPolicy::Fixed(d)
            }
            (Some("two-sqrt-d"), Some(_)) => return Err(bad("delta", "a fixed delta conflicts with delta_policy = two-sqrt-d")),
            (Some("fixed"), None) => return Err(bad("delta", "delta_policy = fixed needs a delta value")),
            (Some(p), _) => return Err(bad("delta_policy", format!("unknown policy `{p}` (two-sqrt-d, fixed)"))),
        };
        let n_regions = raw.n_regions.unwrap_or(3);
        if n_regions < 1 {
            return Err(bad("n_regions", "must be positive"));
        }
        let n_eigs = raw.n_eigs.unwrap_or(20);
        if n_eigs < 1 {
            return Err(bad("n_eigs", "must be positive"));
        }
        let lemmas = match raw.lemma.as_deref() {
            None | Some("all") => vec![LemmaId::A1F, LemmaId::A1Sigma, LemmaId::A2, LemmaId::A3],
            Some(s) => vec![s.parse().map_err(|e: Error| bad("lemma", e.to_string()))?],
        };
        let t = raw.tolerances.unwrap_or_default();
        let robust = finite("tolerances.robust", t.robust.unwrap_or(crate::spectral::ROBUST_TOL))?;
        let ordering = finite("tolerances.ordering", t.ordering.unwrap_or(1e-6))?;
        if robust <= 0.0 || ordering < 0.0 {
            return Err(bad("tolerances", "robust must be positive and ordering nonnegative"));
        }
        let n_coarse = t.n_coarse.unwrap_or(24);
        if n_coarse < 2 {
            return Err(bad("tolerances.n_coarse", "need at least two scan points"));
        }
        Ok(RunConfig {
            command,
            grid,
            k,
            k_max,
            k_list,
            alpha,
            alpha_grid,
            delta_policy,
            n_regions: n_regions as usize,
            n_eigs: n_eigs as usize,
            lemmas,
            tolerances: Tolerances { robust, ordering, n_coarse: n_coarse as usize },
            seed: raw.seed.unwrap_or(7),
            out_dir: raw.out_dir.unwrap_or_else(|| PathBuf::from("out")),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_of(e: Error) -> String {
        match e {
            Error::Param { field, .. } => field,
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn defaults() {
        let c = RunConfig::validate(RawConfig { command: Some(Command::Spectrum), ..Default::default() }).unwrap();
        assert_eq!(c.grid.n, 400);
        assert_eq!(c.k, 1);
        assert_eq!(c.delta_policy, DeltaPolicy::TwoSqrtD);
    }

    #[test]
    fn toml_round_trip_and_merge() {
        let raw = RawConfig::from_toml_str("command = \"sweep\"\nseed = 3\n[grid]\nn = 120\nr_max = 10.0\n").unwrap();
        let over = RawConfig { grid: Some(RawGrid { n: Some(200), ..Default::default() }), ..Default::default() };
        let c = RunConfig::validate(raw.merge(over)).unwrap();
        assert_eq!((c.grid.n, c.grid.r_max, c.seed), (200, 10.0, 3));
    }

    #[test]
    fn field_precise_rejections() {
        let base = || RawConfig { command: Some(Command::Spectrum), ..Default::default() };
        let neg = RawConfig { grid: Some(RawGrid { n: Some(-5), ..Default::default() }), ..base() };
        assert_eq!(field_of(RunConfig::validate(neg).unwrap_err()), "grid.n");
        assert_eq!(field_of(RunConfig::validate(RawConfig { k: Some(0), ..base() }).unwrap_err()), "k");
        let grid = RawConfig { alpha_grid: Some(vec![10.0, 5.0]), ..base() };
        assert_eq!(field_of(RunConfig::validate(grid).unwrap_err()), "alpha_grid");
        let pol = RawConfig { delta_policy: Some("bogus".into()), ..base() };
        assert_eq!(field_of(RunConfig::validate(pol).unwrap_err()), "delta_policy");
        assert!(RawConfig::from_toml_str("colour = 1").is_err());
    }
}
