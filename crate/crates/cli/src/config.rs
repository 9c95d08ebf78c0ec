//! Run configuration files.
//!
//! ```text
//! [domain]
//! shape = unit-square        # or l-shape; alternatively `file = domain.poly`
//! [network]
//! file = mid.net
//! [params]
//! a = 1
//! b = 1
//! mu = 1
//! nu = 1
//! [mesh]
//! h = 0.0625
//! min_angle = 20
//! [eigen]
//! k = 6
//! tol = 1e-8
//! band = 1e-3
//! seed = 24301
//! max_iterations = 1000
//! [evolve]
//! dt = 1e-4                  # default 1e-3/λ₁
//! t_end = 1                  # default 20/λ₁
//! snapshot_every = 0
//! field = bump               # expression in x and y, or `bump`
//! road = 0
//! fit_window = 0.5
//! [output]
//! dir = out
//! vtk = true
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::fmt::Write;

use anyhow::{bail, Result};

use crate::doc::{Document, Entry, Schema};

pub const SCHEMA: Schema = Schema {
    sections: &[
        ("domain", &["shape", "file"]),
        ("network", &["file"]),
        ("params", &["a", "b", "mu", "nu"]),
        ("mesh", &["h", "min_angle"]),
        ("eigen", &["k", "tol", "band", "seed", "max_iterations"]),
        ("evolve", &["dt", "t_end", "snapshot_every", "field", "road", "fit_window"]),
        ("output", &["dir", "vtk"]),
    ],
    open_prefix: None,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    UnitSquare,
    LShape,
}

impl Shape {
    pub fn as_str(self) -> &'static str {
        match self {
            Shape::UnitSquare => "unit-square",
            Shape::LShape => "l-shape",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DomainSource {
    Shape(Shape),
    File(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    pub a: f64,
    pub b: f64,
    pub mu: f64,
    pub nu: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeshConfig {
    pub h: f64,
    pub min_angle: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenConfig {
    pub k: usize,
    pub tol: f64,
    pub band: f64,
    pub seed: u64,
    pub max_iterations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolveConfig {
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub snapshot_every: usize,
    pub field: String,
    pub road: String,
    pub fit_window: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputConfig {
    pub dir: String,
    pub vtk: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub domain: DomainSource,
    pub network: Option<String>,
    pub params: Params,
    pub mesh: MeshConfig,
    pub eigen: EigenConfig,
    pub evolve: EvolveConfig,
    pub output: OutputConfig,
}

pub const DEFAULT_K: usize = 6;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_BAND: f64 = 1e-3;
pub const DEFAULT_SEED: u64 = 24301;

/// Checks that `text` is an expression in `x` and `y`.
pub fn check_expression(text: &str) -> std::result::Result<(), String> {
    let expr: meval::Expr = text.parse().map_err(|e| format!("{e}"))?;
    let f = expr.bind2("x", "y").map_err(|e| format!("{e}"))?;
    let _ = f(0.5, 0.5);
    Ok(())
}

fn with<T>(doc: &Document, section: &str, key: &str, default: T, read: impl Fn(&Entry) -> Result<T>) -> Result<T> {
    doc.get(section, key).map_or(Ok(default), read)
}

fn count(e: &Entry, min: usize) -> Result<usize> {
    let n: usize = e.parse("a nonnegative integer")?;
    if n < min {
        return e.fail(format!("must be at least {min}, got {n}"));
    }
    Ok(n)
}

fn expression(e: &Entry, allow_bump: bool) -> Result<String> {
    if allow_bump && e.value == "bump" {
        return Ok(e.value.clone());
    }
    match check_expression(&e.value) {
        Ok(()) => Ok(e.value.clone()),
        Err(m) => e.fail(format!("invalid expression: {m}")),
    }
}

impl RunConfig {
    /// Parses `text`, then applies `section.key=value` overrides before validation.
    pub fn parse_with(text: &str, overrides: &[String]) -> Result<Self> {
        let mut doc = Document::parse(text, &SCHEMA)?;
        for o in overrides {
            doc.apply_override(o, &SCHEMA)?;
        }
        Self::from_document(&doc)
    }

    fn from_document(doc: &Document) -> Result<Self> {
        let domain = match (doc.get("domain", "shape"), doc.get("domain", "file")) {
            (Some(_), Some(f)) => return f.fail("give either domain.shape or domain.file, not both"),
            (Some(s), None) => DomainSource::Shape(match s.value.as_str() {
                "unit-square" => Shape::UnitSquare,
                "l-shape" => Shape::LShape,
                other => return s.fail(format!("unknown shape {other:?} (expected unit-square or l-shape)")),
            }),
            (None, Some(f)) => DomainSource::File(f.value.clone()),
            (None, None) => {
                doc.require("domain", "shape")?;
                unreachable!()
            }
        };
        let params = Params {
            a: doc.require("params", "a")?.positive()?,
            b: doc.require("params", "b")?.positive()?,
            mu: doc.require("params", "mu")?.positive()?,
            nu: doc.require("params", "nu")?.positive()?,
        };
        let min_angle = with(doc, "mesh", "min_angle", 20.0, |e| {
            let x = e.positive()?;
            if x > 30.0 {
                return e.fail(format!("must not exceed 30 degrees, got {x}"));
            }
            Ok(x)
        })?;
        let mesh = MeshConfig {
            h: doc.require("mesh", "h")?.positive()?,
            min_angle,
        };
        let eigen = EigenConfig {
            k: with(doc, "eigen", "k", DEFAULT_K, |e| count(e, 1))?,
            tol: with(doc, "eigen", "tol", DEFAULT_TOL, |e| {
                let x = e.positive()?;
                if x >= 1.0 {
                    return e.fail(format!("must be below 1, got {x}"));
                }
                Ok(x)
            })?,
            band: with(doc, "eigen", "band", DEFAULT_BAND, |e| {
                let x = e.f64()?;
                if x < 0.0 {
                    return e.fail(format!("must be nonnegative, got {x}"));
                }
                Ok(x)
            })?,
            seed: with(doc, "eigen", "seed", DEFAULT_SEED, |e| e.parse("an unsigned integer"))?,
            max_iterations: with(doc, "eigen", "max_iterations", 1000, |e| count(e, 1))?,
        };
        let evolve = EvolveConfig {
            dt: with(doc, "evolve", "dt", None, |e| e.positive().map(Some))?,
            t_end: with(doc, "evolve", "t_end", None, |e| e.positive().map(Some))?,
            snapshot_every: with(doc, "evolve", "snapshot_every", 0, |e| count(e, 0))?,
            field: with(doc, "evolve", "field", "bump".to_string(), |e| expression(e, true))?,
            road: with(doc, "evolve", "road", "0".to_string(), |e| expression(e, false))?,
            fit_window: with(doc, "evolve", "fit_window", 0.5, |e| {
                let x = e.positive()?;
                if x > 1.0 {
                    return e.fail(format!("must lie in (0, 1], got {x}"));
                }
                Ok(x)
            })?,
        };
        if let (Some(dt), Some(t)) = (evolve.dt, evolve.t_end) {
            if t < dt {
                let e = doc.get("evolve", "t_end").unwrap();
                return e.fail(format!("final time {t} is shorter than one step {dt}"));
            }
        }
        let output = OutputConfig {
            dir: with(doc, "output", "dir", "out".to_string(), |e| Ok(e.value.clone()))?,
            vtk: with(doc, "output", "vtk", true, Entry::bool)?,
        };
        Ok(RunConfig {
            domain,
            network: doc.get("network", "file").map(|e| e.value.clone()),
            params,
            mesh,
            eigen,
            evolve,
            output,
        })
    }

    /// Writes every field, including defaults, in a form [`RunConfig::parse_with`] accepts.
    pub fn to_text(&self) -> String {
        let mut out = String::from("[domain]\n");
        match &self.domain {
            DomainSource::Shape(s) => writeln!(out, "shape = {}", s.as_str()),
            DomainSource::File(f) => writeln!(out, "file = {f}"),
        }
        .unwrap();
        if let Some(n) = &self.network {
            writeln!(out, "\n[network]\nfile = {n}").unwrap();
        }
        let Params { a, b, mu, nu } = self.params;
        writeln!(out, "\n[params]\na = {a:?}\nb = {b:?}\nmu = {mu:?}\nnu = {nu:?}").unwrap();
        writeln!(out, "\n[mesh]\nh = {:?}\nmin_angle = {:?}", self.mesh.h, self.mesh.min_angle).unwrap();
        let e = &self.eigen;
        writeln!(
            out,
            "\n[eigen]\nk = {}\ntol = {:?}\nband = {:?}\nseed = {}\nmax_iterations = {}",
            e.k, e.tol, e.band, e.seed, e.max_iterations
        )
        .unwrap();
        out.push_str("\n[evolve]\n");
        if let Some(dt) = self.evolve.dt {
            writeln!(out, "dt = {dt:?}").unwrap();
        }
        if let Some(t) = self.evolve.t_end {
            writeln!(out, "t_end = {t:?}").unwrap();
        }
        writeln!(
            out,
            "snapshot_every = {}\nfield = {}\nroad = {}\nfit_window = {:?}",
            self.evolve.snapshot_every, self.evolve.field, self.evolve.road, self.evolve.fit_window
        )
        .unwrap();
        writeln!(out, "\n[output]\ndir = {}\nvtk = {}", self.output.dir, self.output.vtk).unwrap();
        out
    }
}

/// Rejects a config that lacks a network when the command needs one.
pub fn require_network(cfg: &RunConfig) -> Result<&str> {
    match &cfg.network {
        Some(n) => Ok(n),
        None => bail!("missing required key network.file"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    impl RunConfig {
        fn parse(text: &str) -> Result<Self> {
            Self::parse_with(text, &[])
        }
    }

    const MINIMAL: &str = "[domain]\nshape = unit-square\n[params]\na = 1\nb = 1\nmu = 1\nnu = 1\n[mesh]\nh = 0.125\n";

    #[test]
    fn defaults_are_filled() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.eigen.k, 6);
        assert_eq!(cfg.eigen.tol, 1e-8);
        assert_eq!(cfg.eigen.band, 1e-3);
        assert_eq!(cfg.mesh.min_angle, 20.0);
        assert_eq!(cfg.evolve.field, "bump");
        assert_eq!(cfg.network, None);
        assert_eq!(cfg.output.dir, "out");
    }

    #[test]
    fn negative_rate_names_key_and_line() {
        let text = MINIMAL.replace("mu = 1", "mu = -1");
        let err = RunConfig::parse(&text).unwrap_err().to_string();
        assert_eq!(err, "line 6: params.mu: must be positive, got -1");
    }

    #[test]
    fn problems_are_located() {
        let err = RunConfig::parse(&format!("{MINIMAL}colour = red\n")).unwrap_err();
        assert_eq!(err.to_string(), "line 10: unknown key mesh.colour");
        let err = RunConfig::parse(&MINIMAL.replace("h = 0.125\n", "")).unwrap_err();
        assert_eq!(err.to_string(), "line 8: missing required key mesh.h");
        let err = RunConfig::parse(&format!("{MINIMAL}[eigen]\nk = 0\n")).unwrap_err();
        assert_eq!(err.to_string(), "line 11: eigen.k: must be at least 1, got 0");
        let err = RunConfig::parse(&format!("{MINIMAL}[evolve]\nfield = sin(\n")).unwrap_err();
        assert!(err.to_string().starts_with("line 11: evolve.field: invalid expression"));
        let err = RunConfig::parse(&MINIMAL.replace("unit-square", "circle")).unwrap_err();
        assert!(err.to_string().starts_with("line 2: domain.shape: unknown shape"));
        let err = RunConfig::parse(&format!("{MINIMAL}[evolve]\ndt = 0.1\nt_end = 0.01\n")).unwrap_err();
        assert!(err.to_string().starts_with("line 12: evolve.t_end"));
    }

    #[test]
    fn overrides_win_and_are_checked() {
        let cfg = RunConfig::parse_with(MINIMAL, &["mesh.h=0.05".into(), "eigen.k = 3".into()]).unwrap();
        assert_eq!((cfg.mesh.h, cfg.eigen.k), (0.05, 3));
        let err = RunConfig::parse_with(MINIMAL, &["params.nu=0".into()]).unwrap_err();
        assert_eq!(err.to_string(), "command-line override: params.nu: must be positive, got 0");
    }

    fn positive() -> impl Strategy<Value = f64> {
        prop_oneof![1e-6..1e3f64, (1u32..1000).prop_map(f64::from)]
    }

    fn expr() -> impl Strategy<Value = String> {
        prop_oneof![
            Just("0".to_string()),
            Just("sin(pi*x)*y".to_string()),
            (1u32..9).prop_map(|n| format!("x^{n} - y")),
        ]
    }

    prop_compose! {
        fn config()(
            shape in prop_oneof![
                Just(DomainSource::Shape(Shape::UnitSquare)),
                Just(DomainSource::Shape(Shape::LShape)),
                "[a-z][a-z0-9_./-]{0,12}".prop_map(DomainSource::File),
            ],
            network in proptest::option::of("[a-z][a-z0-9_./-]{0,12}"),
            p in (positive(), positive(), positive(), positive()),
            h in positive(),
            min_angle in 1.0..30.0f64,
            k in 1usize..40,
            tol in 1e-14..0.5f64,
            band in 0.0..0.1f64,
            seed in any::<u64>(),
            iters in 1usize..5000,
            dt in proptest::option::of(1e-6..1e-2f64),
            extra in 1.0..100.0f64,
            with_t in any::<bool>(),
            snapshot_every in 0usize..100,
            field in prop_oneof![Just("bump".to_string()), expr()],
            road in expr(),
            fit_window in 0.01..=1.0f64,
            dir in "[a-z][a-z0-9_/-]{0,10}",
            vtk in any::<bool>(),
        ) -> RunConfig {
            RunConfig {
                domain: shape,
                network,
                params: Params { a: p.0, b: p.1, mu: p.2, nu: p.3 },
                mesh: MeshConfig { h, min_angle },
                eigen: EigenConfig { k, tol, band, seed, max_iterations: iters },
                evolve: EvolveConfig {
                    dt,
                    t_end: with_t.then(|| dt.unwrap_or(1e-2) * extra),
                    snapshot_every,
                    field,
                    road,
                    fit_window,
                },
                output: OutputConfig { dir, vtk },
            }
        }
    }

    proptest! {
        #[test]
        fn serialization_round_trips(cfg in config()) {
            let text = cfg.to_text();
            let back = RunConfig::parse(&text).unwrap();
            prop_assert_eq!(&back, &cfg);
            prop_assert_eq!(RunConfig::parse(&back.to_text()).unwrap(), back);
        }
    }
}
