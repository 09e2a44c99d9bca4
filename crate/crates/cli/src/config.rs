//! Flat `key=value` run configuration shared by the config file and the flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use blockgs::testbed::log_grid;
use blockgs::{IntraorthoKind, OrthoVariant, VariantTag, DEFAULT_SWITCH_CONST};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    QrSweep,
    Gmres,
    Matgen,
}

impl Command {
    pub fn keys(&self) -> &'static [&'static str] {
        match self {
            Self::QrSweep => &[
                "class", "m", "p", "s", "variants", "io_a", "io_1", "switch_const", "kappa", "seed",
                "output",
            ],
            Self::Gmres => &[
                "matrix", "n", "seed", "s", "variant", "io_a", "io_1", "switch_const", "tol",
                "max_iter", "basis", "shifts", "output",
            ],
            Self::Matgen => &["class", "m", "p", "s", "kappa", "seed", "output"],
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::QrSweep => "qr-sweep",
            Self::Gmres => "gmres",
            Self::Matgen => "matgen",
        })
    }
}

/// Validated options of one command.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    values: BTreeMap<String, String>,
}

/// Parse `key = value` lines. `#` starts a comment.
pub fn parse_config_text(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(CliError::Usage(format!("config line {}: empty key", i + 1)));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(CliError::Usage(format!("config line {}: duplicate key '{k}'", i + 1)));
        }
    }
    Ok(out)
}

impl RunConfig {
    /// Merge the config file (if any) with the flags; flags win.
    pub fn load(
        command: Command,
        file: Option<&Path>,
        flags: impl IntoIterator<Item = (&'static str, Option<String>)>,
    ) -> CliResult<Self> {
        let mut values = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                parse_config_text(&text)?
            }
            None => BTreeMap::new(),
        };
        for (k, v) in flags {
            if let Some(v) = v {
                values.insert(k.to_string(), v);
            }
        }
        Self::new(command, values)
    }

    pub fn new(command: Command, values: BTreeMap<String, String>) -> CliResult<Self> {
        if let Some(k) = values.keys().find(|k| !command.keys().contains(&k.as_str())) {
            return Err(CliError::Usage(format!("unknown key '{k}' for {command}")));
        }
        Ok(Self { command, values })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> CliResult<&str> {
        self.raw(key)
            .ok_or_else(|| CliError::Usage(format!("{} needs '{key}'", self.command)))
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> CliResult<T> {
        match self.raw(key) {
            Some(v) => parse_value(key, v),
            None => Ok(default),
        }
    }

    pub fn get_opt<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        self.raw(key).map(|v| parse_value(key, v)).transpose()
    }

    /// Build a variant from `tag` and the `io_a`, `io_1`, `switch_const` keys.
    pub fn variant(&self, tag: VariantTag) -> CliResult<OrthoVariant> {
        let io_a = self.get("io_a", IntraorthoKind::HouseQr)?;
        let io_1 = self.get("io_1", IntraorthoKind::HouseQr)?;
        let c = self.get("switch_const", DEFAULT_SWITCH_CONST)?;
        let v = OrthoVariant::from_tag(tag, io_a, io_1, c);
        v.validate()?;
        Ok(v)
    }
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> CliResult<T> {
    v.trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("bad value '{v}' for '{key}'")))
}

/// `all` or a comma separated list of variant names.
pub fn parse_variant_list(text: &str) -> CliResult<Vec<VariantTag>> {
    if text.trim().eq_ignore_ascii_case("all") {
        return Ok(VariantTag::ALL.to_vec());
    }
    let tags = text
        .split(',')
        .map(|t| t.parse::<VariantTag>().map_err(CliError::from))
        .collect::<CliResult<Vec<_>>>()?;
    if tags.is_empty() {
        return Err(CliError::Usage("empty variant list".into()));
    }
    Ok(tags)
}

/// `lo..hi:n` for `n` log-spaced points, or a comma separated list.
pub fn parse_kappa_grid(text: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::Usage(format!("bad kappa grid '{text}'"));
    let grid = if let Some((range, n)) = text.split_once(':') {
        let (lo, hi) = range.split_once("..").ok_or_else(bad)?;
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        let n: usize = n.trim().parse().map_err(|_| bad())?;
        if !(lo > 0.0 && hi >= lo) || n == 0 {
            return Err(bad());
        }
        log_grid(lo, hi, n)
    } else {
        text.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<CliResult<Vec<_>>>()?
    };
    if grid.iter().any(|&k| !(k >= 1.0 && k.is_finite())) {
        return Err(CliError::Usage(format!("kappa values must be finite and >= 1: '{text}'")));
    }
    Ok(grid)
}

/// Comma separated floats.
pub fn parse_float_list(key: &str, text: &str) -> CliResult<Vec<f64>> {
    text.split(',').map(|t| parse_value(key, t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_text() {
        let map = parse_config_text("# sweep\nclass = glued\n\nm=50 # rows\n").unwrap();
        assert_eq!(map.len(), 2);
        assert_eq!(map["class"], "glued");
        assert_eq!(map["m"], "50");
        assert!(parse_config_text("class glued").is_err());
        assert!(parse_config_text("m=1\nm=2").is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut values = BTreeMap::new();
        values.insert("tol".to_string(), "1e-8".to_string());
        assert!(RunConfig::new(Command::QrSweep, values.clone()).is_err());
        assert!(RunConfig::new(Command::Gmres, values).is_ok());
    }

    #[test]
    fn grids() {
        let g = parse_kappa_grid("1e1..1e15:8").unwrap();
        assert_eq!(g.len(), 8);
        assert_eq!(parse_kappa_grid("1e2, 1e4").unwrap(), vec![1e2, 1e4]);
        assert_eq!(parse_kappa_grid("1e2").unwrap(), vec![1e2]);
        for bad in ["1e1..1e3", "1e3..1e1:4", "x", "0.5", "1e1..1e3:0"] {
            assert!(parse_kappa_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn variant_lists() {
        assert_eq!(parse_variant_list("all").unwrap().len(), 6);
        assert_eq!(
            parse_variant_list("ip_1s,BCGS2").unwrap(),
            vec![VariantTag::OneSync, VariantTag::Bcgs2]
        );
        assert!(parse_variant_list("IP_3S").is_err());
    }

    #[test]
    fn variant_defaults() {
        let cfg = RunConfig::new(Command::QrSweep, BTreeMap::new()).unwrap();
        assert_eq!(cfg.variant(VariantTag::Adaptive).unwrap(), OrthoVariant::default_for(VariantTag::Adaptive));
        let mut values = BTreeMap::new();
        values.insert("io_1".to_string(), "CholQR".to_string());
        let cfg = RunConfig::new(Command::QrSweep, values).unwrap();
        assert!(cfg.variant(VariantTag::TwoSync).is_err());
        assert!(cfg.variant(VariantTag::Bcgs2).is_ok());
    }
}
