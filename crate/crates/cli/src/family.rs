//! Search spec files for `roadfield optimize`.
//!
//! ```text
//! [family]
//! kind = segment-bundle      # segment-bundle | cross | tree | comb | user-list
//! budget = 1.2
//! resolution = 12            # default grid size per parameter
//! segments = 1
//! teeth = 3
//! boundary_anchored = false
//! required = 0.5 0.5, 0.25 0.75
//! roads = a.net, b.net       # user-list only
//! range.s1_start = 0 0.5 6   # lo hi steps
//! [search]
//! h = 0.04                   # default: mesh.h of the run config
//! local_iterations = 0
//! local_step = 0.05          # default: one grid step
//! convergence_tol = 5e-3
//! ```

use anyhow::{Context, Result};
use roadfield_core::meshing::DomainGeometry;
use roadfield_core::network::RoadNetwork;
use roadfield_core::optimize::{FamilyKind, LocalSearchOptions, ParamRange, RoadFamilySpec};
use roadfield_core::Point;

use crate::doc::{Document, Entry, Schema};

pub const SCHEMA: Schema = Schema {
    sections: &[
        (
            "family",
            &["kind", "budget", "resolution", "segments", "teeth", "boundary_anchored", "required", "roads"],
        ),
        ("search", &["h", "local_iterations", "local_step", "convergence_tol"]),
    ],
    open_prefix: Some(("family", "range.")),
};

#[derive(Clone, Debug)]
pub struct SearchSpec {
    pub family: RoadFamilySpec,
    pub h: Option<f64>,
    pub local: Option<LocalSearchOptions>,
    pub convergence_tol: f64,
}

fn count(e: &Entry, min: usize) -> Result<usize> {
    let n: usize = e.parse("a nonnegative integer")?;
    if n < min {
        return e.fail(format!("must be at least {min}, got {n}"));
    }
    Ok(n)
}

fn numbers(e: &Entry, text: &str) -> Result<Vec<f64>> {
    text.split_whitespace()
        .map(|t| match t.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => e.fail(format!("expected a number, found {t:?}")),
        })
        .collect()
}

impl SearchSpec {
    /// Parses a spec; `load_road` reads the networks named by `family.roads`.
    pub fn parse(
        text: &str,
        domain: &DomainGeometry,
        load_road: impl Fn(&str) -> Result<RoadNetwork>,
    ) -> Result<Self> {
        let doc = Document::parse(text, &SCHEMA)?;
        let kind_entry = doc.require("family", "kind")?;
        let kind: FamilyKind = match kind_entry.value.parse() {
            Ok(k) => k,
            Err(e) => return kind_entry.fail(e),
        };
        let budget = doc.require("family", "budget")?.positive()?;
        let resolution = doc.get("family", "resolution").map_or(Ok(8), |e| count(e, 2))?;
        let mut family = RoadFamilySpec::new(kind, budget, domain, resolution);
        if let Some(e) = doc.get("family", "segments") {
            family.segments = count(e, 1)?;
            family.ranges = vec![ParamRange::periodic(resolution); 2 * family.segments];
        }
        if let Some(e) = doc.get("family", "teeth") {
            family.teeth = count(e, 1)?;
        }
        if let Some(e) = doc.get("family", "boundary_anchored") {
            family.boundary_anchored = e.bool()?;
        }
        if let Some(e) = doc.get("family", "required") {
            for chunk in e.value.split(',') {
                match numbers(e, chunk)?.as_slice() {
                    &[x, y] => family.required_points.push(Point::new(x, y)),
                    _ => return e.fail(format!("expected `x y`, found {:?}", chunk.trim())),
                }
            }
        }
        if let Some(e) = doc.get("family", "roads") {
            for name in e.value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let net = load_road(name).with_context(|| format!("{}: {}", e.loc, e.name()))?;
                family.user_roads.push(net);
            }
        }
        let names = family.param_names();
        for e in doc.entries_in("family").filter(|e| e.key.starts_with("range.")) {
            let param = &e.key["range.".len()..];
            let Some(i) = names.iter().position(|n| n == param) else {
                return e.fail(format!("family {kind} has no parameter {param:?} (parameters: {})", names.join(", ")));
            };
            match numbers(e, &e.value)?.as_slice() {
                &[lo, hi, steps] if steps >= 1.0 && steps.fract() == 0.0 && hi >= lo => {
                    family.ranges[i] = ParamRange::new(lo, hi, steps as usize);
                }
                _ => return e.fail("expected `lo hi steps` with lo <= hi and a positive integer step count"),
            }
        }
        family.validate(domain)?;

        let h = doc.get("search", "h").map(Entry::positive).transpose()?;
        let iterations = doc.get("search", "local_iterations").map_or(Ok(0), |e| count(e, 0))?;
        let step = match doc.get("search", "local_step") {
            Some(e) => e.positive()?,
            None => {
                let grid = family.ranges.first().map_or(0.0, ParamRange::step);
                if kind == FamilyKind::SegmentBundle {
                    grid * domain.perimeter()
                } else {
                    grid
                }
            }
        };
        let local = (iterations > 0).then_some(LocalSearchOptions { step, iterations });
        if local.is_some() && !(step > 0.0) {
            anyhow::bail!("search.local_step is required when the grid has a single point");
        }
        let convergence_tol = doc.get("search", "convergence_tol").map_or(Ok(5e-3), Entry::positive)?;
        Ok(SearchSpec {
            family,
            h,
            local,
            convergence_tol,
        })
    }
}
