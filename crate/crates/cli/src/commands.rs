use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use roadfield_core::assembly::{build_system, CouplingParams, FemSystem};
use roadfield_core::evolution::{decay_rate_fit, default_bump, implicit_euler, State};
use roadfield_core::io;
use roadfield_core::meshing::{
    mesh_quality, parse_domain, triangulate, triangulate_domain, write_mesh, DomainGeometry, Mesh, MeshOptions,
};
use roadfield_core::network::{
    ahlfors_upper_constant, lower_ahlfors_check, parse_network, write_network, AhlforsSampling, RoadNetwork,
};
use roadfield_core::optimize::{
    grid_search, local_search, EvaluationSettings, Evaluator, SearchResult,
};
use roadfield_core::spectral::{smallest_eigenpairs_with, EigenOptions, Spectrum};
use roadfield_core::Point;

use crate::config::{require_network, DomainSource, RunConfig, Shape};
use crate::family::SearchSpec;

pub struct Run {
    pub cfg: RunConfig,
    base: PathBuf,
    out: PathBuf,
    written: Vec<PathBuf>,
}

fn read(path: &Path, what: &str) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {what} file {}", path.display()))
}

pub fn load_network(path: &Path) -> Result<RoadNetwork> {
    parse_network(&read(path, "network")?).with_context(|| format!("parsing network file {}", path.display()))
}

impl Run {
    pub fn load(config: &Path, overrides: &[String], out_dir: Option<PathBuf>) -> Result<Self> {
        let text = read(config, "config")?;
        let cfg = RunConfig::parse_with(&text, overrides).with_context(|| format!("config {}", config.display()))?;
        let base = config.parent().map(Path::to_path_buf).unwrap_or_default();
        let out = out_dir.unwrap_or_else(|| base.join(&cfg.output.dir));
        Ok(Run {
            cfg,
            base,
            out,
            written: Vec::new(),
        })
    }

    fn resolve(&self, p: &str) -> PathBuf {
        self.base.join(p)
    }

    fn domain(&self) -> Result<DomainGeometry> {
        Ok(match &self.cfg.domain {
            DomainSource::Shape(Shape::UnitSquare) => DomainGeometry::unit_square(),
            DomainSource::Shape(Shape::LShape) => DomainGeometry::l_shape(),
            DomainSource::File(f) => {
                let path = self.resolve(f);
                parse_domain(&read(&path, "domain")?).with_context(|| format!("parsing domain file {}", path.display()))?
            }
        })
    }

    /// The configured network and an identifier derived from its file name.
    fn network(&self) -> Result<(String, RoadNetwork)> {
        let path = self.resolve(require_network(&self.cfg)?);
        let net = load_network(&path)?;
        let id = path.file_stem().map_or_else(|| "road".into(), |s| s.to_string_lossy().into_owned());
        Ok((id, net))
    }

    fn params(&self) -> Result<CouplingParams> {
        let p = &self.cfg.params;
        Ok(CouplingParams::new(p.a, p.b, p.mu, p.nu)?)
    }

    fn mesh_options(&self) -> MeshOptions {
        MeshOptions {
            h: self.cfg.mesh.h,
            min_angle_deg: self.cfg.mesh.min_angle,
        }
    }

    fn eigen_options(&self, k: usize) -> EigenOptions {
        EigenOptions {
            k,
            tol: self.cfg.eigen.tol,
            max_iterations: self.cfg.eigen.max_iterations,
            seed: self.cfg.eigen.seed,
        }
    }

    fn road_mesh(&self, domain: &DomainGeometry, net: &RoadNetwork) -> Result<Mesh> {
        net.ensure_valid()?;
        triangulate(domain, net, &self.mesh_options()).context("meshing")
    }

    fn write(&mut self, name: impl AsRef<Path>, contents: &str) -> Result<()> {
        self.write_to(self.out.join(name), contents)
    }

    fn write_to(&mut self, path: PathBuf, contents: &str) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        }
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path);
        Ok(())
    }

    /// Records the effective configuration, with paths relative to the working directory.
    pub fn finish(&mut self) -> Result<()> {
        let mut cfg = self.cfg.clone();
        if let DomainSource::File(f) = &mut cfg.domain {
            *f = self.resolve(f).display().to_string();
        }
        if let Some(n) = &mut cfg.network {
            *n = self.resolve(n).display().to_string();
        }
        cfg.output.dir = self.out.display().to_string();
        self.write("run.cfg", &cfg.to_text())
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn system(&self) -> Result<(String, Mesh, FemSystem)> {
        let domain = self.domain()?;
        let (id, net) = self.network()?;
        let mesh = self.road_mesh(&domain, &net)?;
        let sys = build_system(&mesh, self.params()?).context("assembly")?;
        Ok((id, mesh, sys))
    }

    fn spectrum(&self, sys: &FemSystem, k: usize) -> Result<Spectrum> {
        let k = k.min(sys.dim());
        let spec = smallest_eigenpairs_with(sys, &self.eigen_options(k)).context("eigensolve")?;
        let values = spec.eigenvalues();
        ensure!(values.first().is_some_and(|&l| l > 0.0), "eigensolve: smallest eigenvalue is not positive");
        ensure!(values.windows(2).all(|w| w[0] <= w[1]), "eigensolve: eigenvalues are not sorted");
        Ok(spec)
    }

    pub fn net_stats(&mut self) -> Result<()> {
        let (_, net) = self.network()?;
        let upper = ahlfors_upper_constant(&net, &AhlforsSampling::default());
        let lower = lower_ahlfors_check(&net, 16);
        self.write("network_stats.csv", &io::network_stats_csv(&net, upper.lambda, lower.worst_ratio))
    }

    pub fn mesh(&mut self) -> Result<()> {
        let domain = self.domain()?;
        let mesh = match &self.cfg.network {
            Some(_) => self.road_mesh(&domain, &self.network()?.1)?,
            None => triangulate_domain(&domain, &self.mesh_options()).context("meshing")?,
        };
        self.write("mesh.txt", &write_mesh(&mesh))?;
        self.write("mesh_quality.csv", &io::quality_csv(&mesh_quality(&mesh)))?;
        if self.cfg.output.vtk {
            let zero = vec![0.0; mesh.vertex_count()];
            self.write("mesh.vtk", &io::vtk(&mesh, &zero, &zero))?;
        }
        Ok(())
    }

    pub fn eigs(&mut self) -> Result<()> {
        let (_, mesh, sys) = self.system()?;
        let spec = self.spectrum(&sys, self.cfg.eigen.k)?;
        self.write("spectrum.csv", &io::spectrum_csv(&spec))?;
        if self.cfg.output.vtk {
            let (v, u) = sys.to_nodal(&spec.eigenvectors()[0], mesh.vertex_count());
            self.write("mode1.vtk", &io::vtk(&mesh, &v, &u))?;
        }
        Ok(())
    }

    pub fn evolve(&mut self) -> Result<()> {
        let (_, mesh, sys) = self.system()?;
        let lambda1 = self.spectrum(&sys, 1)?.eigenvalues()[0];
        let ev = self.cfg.evolve.clone();
        let dt = ev.dt.unwrap_or(1e-3 / lambda1);
        let t_end = ev.t_end.unwrap_or(10.0 / lambda1);
        ensure!(t_end >= dt, "evolve: final time {t_end} is shorter than one step {dt}");

        let field: Box<dyn Fn(Point) -> f64> = if ev.field == "bump" {
            Box::new(default_bump(&mesh))
        } else {
            expression(&ev.field)?
        };
        let road = expression(&ev.road)?;
        let s0 = State::from_functions(&sys, &mesh, field, road);
        ensure!(sys.l_norm(&s0.values)? > 0.0, "evolve: initial data vanishes at every free vertex");

        let trace = implicit_euler(&sys, &s0, dt, t_end, ev.snapshot_every).context("time stepping")?;
        let worst = trace.l_norms.windows(2).find(|w| w[1] > w[0] * (1.0 + 1e-12));
        if let Some(w) = worst {
            bail!("evolve: L-norm increased from {} to {}", w[0], w[1]);
        }
        let fit = decay_rate_fit(&trace, ev.fit_window).context("decay fit")?;
        self.write("trace.csv", &io::trace_csv(&trace))?;
        let rows = [
            ("lambda1", io::fmt_f64(lambda1)),
            ("fitted_rate", io::fmt_f64(fit.rate)),
            ("relative_gap", io::fmt_f64((fit.rate - lambda1) / lambda1)),
            ("fit_residual", io::fmt_f64(fit.residual)),
            ("fit_samples", fit.samples.to_string()),
            ("dt", io::fmt_f64(dt)),
            ("t_end", io::fmt_f64(t_end)),
            ("steps", (trace.times.len() - 1).to_string()),
        ];
        let mut decay = String::from("quantity,value\n");
        for (k, v) in rows {
            decay.push_str(&format!("{k},{v}\n"));
        }
        self.write("decay.csv", &decay)?;
        if self.cfg.output.vtk {
            for (step, state) in &trace.snapshots {
                let (v, u) = sys.to_nodal(&state.values, mesh.vertex_count());
                self.write(format!("snapshot_{step:06}.vtk"), &io::vtk(&mesh, &v, &u))?;
            }
        }
        Ok(())
    }

    fn settings(&self, h: f64) -> Result<EvaluationSettings> {
        let mut s = EvaluationSettings::new(self.params()?, h);
        s.min_angle_deg = self.cfg.mesh.min_angle;
        s.tol = self.cfg.eigen.tol;
        s.band = self.cfg.eigen.band;
        Ok(s)
    }

    pub fn analyze(&mut self) -> Result<()> {
        let domain = self.domain()?;
        let (id, net) = self.network()?;
        net.ensure_valid()?;
        let evaluator = Evaluator::new(domain, self.settings(self.cfg.mesh.h)?);
        let report = evaluator.evaluate(&id, &net)?;
        self.write("report.csv", &io::reports_csv(&[report]))
    }

    pub fn optimize(&mut self, spec_path: &Path, output: Option<PathBuf>, emit_best: Option<PathBuf>) -> Result<()> {
        let domain = self.domain()?;
        let spec_dir = spec_path.parent().map(Path::to_path_buf).unwrap_or_default();
        let spec = SearchSpec::parse(&read(spec_path, "search spec")?, &domain, |name| {
            load_network(&spec_dir.join(name))
        })
        .with_context(|| format!("search spec {}", spec_path.display()))?;

        let mut settings = self.settings(spec.h.unwrap_or(self.cfg.mesh.h))?;
        settings.convergence_tol = spec.convergence_tol;
        let evaluator = Evaluator::new(domain, settings);
        let grid = grid_search(&evaluator, &spec.family)?;
        let output = output.unwrap_or_else(|| self.out.join("search.csv"));
        self.write_to(output.clone(), &io::search_csv(&grid))?;

        let mut best: &SearchResult = &grid;
        let local;
        if let Some(opts) = spec.local {
            local = local_search(&evaluator, &spec.family, grid.best().candidate.clone(), opts)?;
            let stem = output.file_stem().map_or_else(|| "search".into(), |s| s.to_string_lossy().into_owned());
            self.write_to(output.with_file_name(format!("{stem}_local.csv")), &io::search_csv(&local))?;
            if local.best().report.ratio > grid.best().report.ratio {
                best = &local;
            }
        }
        let top = best.best();
        println!(
            "best {} ratio={} {}",
            top.candidate.id,
            io::fmt_f64(top.report.ratio),
            top.report.classification
        );
        if let Some(path) = emit_best {
            let net = top.candidate.net.clone();
            self.write_to(path, &write_network(&net))?;
        }
        Ok(())
    }
}

fn expression(text: &str) -> Result<Box<dyn Fn(Point) -> f64>> {
    let expr: meval::Expr = text.parse().with_context(|| format!("expression {text:?}"))?;
    let f = expr.bind2("x", "y").with_context(|| format!("expression {text:?}"))?;
    Ok(Box::new(move |p: Point| f(p.x, p.y)))
}
