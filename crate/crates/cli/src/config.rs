//! Option types shared by flags and the TOML config file.
//!
//! Every subcommand has one options struct whose fields are all optional.
//! Values come from the command line first, then from the subcommand's table
//! in the config file, then from built-in defaults.

use std::fmt;
use std::str::FromStr;

use clap::Args;
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::CliError;

/// A sample count; accepts `1000000`, `1e6` or `1_000_000`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Count(pub u64);

impl FromStr for Count {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let t = s.trim().replace('_', "");
        if let Ok(v) = t.parse::<u64>() {
            return Ok(Count(v));
        }
        match t.parse::<f64>() {
            Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < 1.8e19 => Ok(Count(v as u64)),
            _ => Err(format!("'{s}' is not a nonnegative integer count")),
        }
    }
}

impl Serialize for Count {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        // TOML integers are signed 64-bit
        match i64::try_from(self.0) {
            Ok(v) => s.serialize_i64(v),
            Err(_) => s.serialize_str(&self.0.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Count {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Float(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(v) if v >= 0 => Ok(Count(v as u64)),
            Raw::Int(v) => Err(de::Error::custom(format!("count {v} is negative"))),
            Raw::Float(v) => Count::from_str(&v.to_string()).map_err(de::Error::custom),
            Raw::Text(s) => s.parse().map_err(de::Error::custom),
        }
    }
}

/// Bond density, or `auto` for the shell-ratio estimate of `p_c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PSpec {
    Auto,
    Value(f64),
}

impl FromStr for PSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "auto" | "auto-pc" => Ok(PSpec::Auto),
            t => t.parse().map(PSpec::Value).map_err(|_| format!("'{s}' is neither a number nor 'auto'")),
        }
    }
}

impl Serialize for PSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            PSpec::Auto => s.serialize_str("auto"),
            PSpec::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for PSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(PSpec::Value(v)),
            Raw::Text(s) => s.parse().map_err(de::Error::custom),
        }
    }
}

/// A list of reals, written `start:step:stop` (inclusive) or `a,b,c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    spec: String,
    values: Vec<f64>,
}

impl Grid {
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl FromStr for Grid {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let bad = |what: &str| format!("grid '{s}': {what}");
        let parse = |t: &str| t.trim().parse::<f64>().map_err(|_| bad(&format!("'{t}' is not a number")));
        let parts: Vec<&str> = s.split(':').collect();
        let values = match parts.as_slice() {
            [a, step, b] => {
                let (a, step, b) = (parse(a)?, parse(step)?, parse(b)?);
                if !(step > 0.0) || !(b >= a) {
                    return Err(bad("need step > 0 and stop >= start"));
                }
                let count = ((b - a) / step + 1e-9).floor() as usize + 1;
                if count > 1_000_000 {
                    return Err(bad("more than 10^6 points"));
                }
                (0..count).map(|i| a + step * i as f64).collect()
            }
            [_] => s.split(',').map(parse).collect::<Result<Vec<_>, _>>()?,
            _ => return Err(bad("expected start:step:stop or a comma list")),
        };
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(bad("values must be finite"));
        }
        Ok(Grid { spec: s.trim().to_string(), values })
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.spec)
    }
}

impl Serialize for Grid {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.spec)
    }
}

impl<'de> Deserialize<'de> for Grid {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(de::Error::custom)
    }
}

/// Looks up a resolved field, naming the flag when it is missing.
pub fn need<T: Clone>(v: &Option<T>, flag: &str) -> Result<T, CliError> {
    v.clone().ok_or_else(|| CliError::Config(format!("--{flag}: required (flag or config file)")))
}

/// Defines an options struct plus its merge and default logic. Defaults are
/// `Option` expressions; `None` marks a required field.
macro_rules! options {
    ($(#[$meta:meta])* $name:ident { $($(#[$fmeta:meta])* $field:ident : $ty:ty = $default:expr),* $(,)? }) => {
        $(#[$meta])*
        #[derive(Args, Serialize, Deserialize, Default, Clone, Debug, PartialEq)]
        #[serde(default, deny_unknown_fields)]
        pub struct $name {
            $($(#[$fmeta])* #[arg(long)] #[serde(skip_serializing_if = "Option::is_none")] pub $field: Option<$ty>,)*
        }

        impl $name {
            /// Flags in `self` win over `file`; gaps are filled with defaults.
            pub fn resolve(self, file: Self) -> Self {
                Self { $($field: self.$field.or(file.$field).or_else(|| $default),)* }
            }
        }
    };
}

options!(
    /// Cluster-size histogram and power-law fit.
    SizesOpts {
        d: usize = None,
        /// Bond density or `auto`.
        p: PSpec = Some(PSpec::Auto),
        samples: Count = Some(Count(100_000)),
        cap: Count = Some(Count(100_000)),
        /// Fit range lower end.
        n_min: usize = Some(32),
        n_max: usize = Some(2048),
    }
);

options!(
    /// Conditional two-point profile at lattice wavenumbers along an axis.
    QnOpts {
        d: usize = None,
        p: PSpec = Some(PSpec::Auto),
        n: usize = None,
        window: f64 = Some(0.1),
        /// Clusters grown before giving up on the target.
        max_attempts: Count = Some(Count(10_000_000_000)),
        /// Accepted clusters.
        samples: Count = Some(Count(2000)),
        /// Rescaled wavenumbers `k` (lattice `k n^{-1/4}`).
        k_grid: Grid = Some("0:0.25:6".parse().expect("static grid")),
        batches: usize = Some(32),
    }
);

options!(
    /// Conditional three-point profile on an axis-aligned grid.
    Q3Opts {
        d: usize = None,
        p: PSpec = Some(PSpec::Auto),
        n: usize = None,
        window: f64 = Some(0.1),
        /// Clusters grown before giving up on the target.
        max_attempts: Count = Some(Count(10_000_000_000)),
        samples: Count = Some(Count(2000)),
        /// Rescaled wavenumbers used for both `k` and `l`.
        k_grid: Grid = Some("0:0.5:3".parse().expect("static grid")),
    }
);

options!(
    /// ISE transforms and densities.
    IseOpts {
        /// Dimension for densities.
        d: usize = Some(1),
        /// Which quantity: a2, a3, a2-density.
        kind: String = Some("a2".into()),
        /// `k²` values (a2, a3) or radii (a2-density).
        k2_grid: Grid = Some("0:0.5:10".parse().expect("static grid")),
        tol: f64 = Some(1e-12),
    }
);

options!(
    /// Main-term coefficients by contour and recurrence.
    CoeffOpts {
        c: f64 = Some(1.0),
        /// Spatial constant `D` in the main term.
        scale: f64 = Some(1.0),
        /// `k²` inside the main term; with `--scaled` it is divided by `sqrt(n)`.
        k2: f64 = Some(0.0),
        n_list: Grid = Some("10,100,1000,10000".parse().expect("static grid")),
        scaled: bool = Some(false),
    }
);

options!(
    /// Randomized lemma harnesses.
    LemmasOpts {
        instances: Count = Some(Count(100_000)),
    }
);

options!(
    /// Diagram integrals.
    DiagramsOpts {
        /// triangle, irbound, square, or magnetization.
        kind: String = Some("square".into()),
        d: usize = Some(7),
        p: PSpec = Some(PSpec::Auto),
        /// Fraction of `p` used for the triangle (`p * factor`).
        factor: f64 = Some(1.0),
        samples: Count = Some(Count(100_000)),
        cap: Count = Some(Count(1_000_000)),
        /// Infrared-bound constant.
        c: f64 = Some(1.0),
        z_grid: Grid = Some("0.9375,0.96875,0.984375,0.9921875,0.99609375,0.998046875,0.9990234375".parse().expect("static grid")),
        /// Clusters for the magnetization histogram.
        clusters: Count = Some(Count(1_000_000)),
    }
);

options!(
    /// Critical point by shell ratio.
    PcOpts {
        d: usize = None,
        radius: u32 = Some(16),
        samples: Count = Some(Count(30_000)),
        tol: f64 = Some(1e-3),
    }
);

options!(
    /// Galton–Watson progeny oracle.
    TreeOpts {
        /// binomial or poisson.
        law: String = Some("binomial".into()),
        n_min: usize = Some(64),
        n_max: usize = Some(4096),
    }
);

options!(
    /// Two-point profile against the ISE transform with fitted `D`.
    CompareQnOpts {
        d: usize = None,
        p: PSpec = Some(PSpec::Auto),
        n: usize = None,
        window: f64 = Some(0.1),
        /// Clusters grown before giving up on the target.
        max_attempts: Count = Some(Count(10_000_000_000)),
        samples: Count = Some(Count(20_000)),
        k2_grid: Grid = Some("0:0.25:9".parse().expect("static grid")),
        batches: usize = Some(32),
        replicates: usize = Some(400),
    }
);

options!(
    /// Three-point profile against the ISE transform.
    CompareQ3Opts {
        d: usize = None,
        p: PSpec = Some(PSpec::Auto),
        n: usize = None,
        window: f64 = Some(0.1),
        /// Clusters grown before giving up on the target.
        max_attempts: Count = Some(Count(10_000_000_000)),
        samples: Count = Some(Count(20_000)),
        /// Fixed `D`; fitted from the same clusters when absent.
        scale: f64 = None,
        replicates: usize = Some(400),
    }
);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_accept_scientific_notation() {
        assert_eq!("1e6".parse::<Count>().unwrap(), Count(1_000_000));
        assert_eq!("2_000".parse::<Count>().unwrap(), Count(2000));
        assert!("1.5".parse::<Count>().is_err());
        assert!("-3".parse::<Count>().is_err());
    }

    #[test]
    fn grids() {
        let g: Grid = "0:0.1:1".parse().unwrap();
        assert_eq!(g.values().len(), 11);
        assert!((g.values()[10] - 1.0).abs() < 1e-12);
        assert_eq!("1,2.5".parse::<Grid>().unwrap().values(), &[1.0, 2.5]);
        assert!("1:0:2".parse::<Grid>().is_err());
        assert!("a,b".parse::<Grid>().is_err());
    }

    #[test]
    fn flags_win_over_file_and_defaults_fill_gaps() {
        let flags = SizesOpts { d: Some(5), ..Default::default() };
        let file = SizesOpts { d: Some(7), samples: Some(Count(10)), ..Default::default() };
        let r = flags.resolve(file);
        assert_eq!(r.d, Some(5));
        assert_eq!(r.samples, Some(Count(10)));
        assert_eq!(r.cap, Some(Count(100_000)));
        assert_eq!(r.p, Some(PSpec::Auto));
    }

    #[test]
    fn resolved_options_round_trip_through_toml() {
        let r = CompareQnOpts { d: Some(7), n: Some(1024), p: Some(PSpec::Value(0.0787)), ..Default::default() }
            .resolve(CompareQnOpts::default());
        let text = toml::to_string(&r).unwrap();
        let back: CompareQnOpts = toml::from_str(&text).unwrap();
        assert_eq!(back, r);
    }
}
