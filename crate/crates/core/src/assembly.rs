//! Piecewise-linear discretization of the coupled field/road operator.
//!
//! Field unknowns live on mesh vertices off the boundary; road unknowns live on mesh
//! vertices on the road that are not on the boundary. Free vectors store the field
//! block first, then the road block, each in ascending mesh-vertex order.

use thiserror::Error;

use crate::meshing::{Mesh, VertexMarker};
use crate::network::RoadNetwork;
use crate::sparse::{CsrMatrix, TripletBuilder};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error("parameter {name} must be positive and finite, got {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("triangle {0} has non-positive area")]
    DegenerateTriangle(usize),
    #[error("no free degrees of freedom after boundary elimination")]
    NoFreeDofs,
    #[error("vector has length {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Diffusivities `a` (field) and `b` (road), exit rate `mu`, entry rate `nu`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplingParams {
    pub a: f64,
    pub b: f64,
    pub mu: f64,
    pub nu: f64,
}

impl CouplingParams {
    pub fn new(a: f64, b: f64, mu: f64, nu: f64) -> Result<Self, AssemblyError> {
        let p = Self { a, b, mu, nu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), AssemblyError> {
        for (name, value) in [("a", self.a), ("b", self.b), ("mu", self.mu), ("nu", self.nu)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(AssemblyError::InvalidParameter { name, value });
            }
        }
        Ok(())
    }
}

/// P1 stiffness and mass matrices over all mesh vertices.
pub fn assemble_field(mesh: &Mesh) -> Result<(CsrMatrix, CsrMatrix), AssemblyError> {
    let n = mesh.vertex_count();
    let mut stiff = TripletBuilder::with_capacity(9 * mesh.triangle_count());
    let mut mass = TripletBuilder::with_capacity(9 * mesh.triangle_count());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = mesh.triangle_points(t);
        let area = mesh.triangle_area(t);
        if !(area > 0.0) {
            return Err(AssemblyError::DegenerateTriangle(t));
        }
        // Edge opposite each vertex.
        let e = [p[2] - p[1], p[0] - p[2], p[1] - p[0]];
        for i in 0..3 {
            for j in 0..3 {
                stiff.add(tri[i], tri[j], e[i].dot(e[j]) / (4.0 * area));
                let m = if i == j { area / 6.0 } else { area / 12.0 };
                mass.add(tri[i], tri[j], m);
            }
        }
    }
    Ok((stiff.build(n, n), mass.build(n, n)))
}

/// Position of each mesh vertex among the road vertices.
fn road_index(mesh: &Mesh) -> Vec<Option<usize>> {
    let mut idx = vec![None; mesh.vertex_count()];
    for (k, v) in mesh.road_vertices().into_iter().enumerate() {
        idx[v] = Some(k);
    }
    idx
}

/// 1D P1 stiffness and mass matrices over the road vertices (ordered as
/// [`Mesh::road_vertices`]).
pub fn assemble_road(mesh: &Mesh) -> (CsrMatrix, CsrMatrix) {
    let idx = road_index(mesh);
    let n = mesh.road_vertices().len();
    let mut stiff = TripletBuilder::with_capacity(4 * mesh.road_edges().len());
    let mut mass = TripletBuilder::with_capacity(4 * mesh.road_edges().len());
    for r in mesh.road_edges() {
        let l = r.length();
        let (i, j) = (idx[r.a].unwrap(), idx[r.b].unwrap());
        for (x, y, s) in [(i, i, 1.0), (j, j, 1.0), (i, j, -1.0), (j, i, -1.0)] {
            stiff.add(x, y, s / l);
        }
        for (x, y, m) in [(i, i, 2.0), (j, j, 2.0), (i, j, 1.0), (j, i, 1.0)] {
            mass.add(x, y, m * l / 6.0);
        }
    }
    (stiff.build(n, n), mass.build(n, n))
}

/// The three 1D mass-type blocks of the trace coupling.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceCoupling {
    /// Field × field, over all mesh vertices.
    pub t_ff: CsrMatrix,
    /// Field × road, mesh vertices by road vertices.
    pub t_fk: CsrMatrix,
    /// Road × road.
    pub t_kk: CsrMatrix,
}

pub fn assemble_trace_coupling(mesh: &Mesh) -> TraceCoupling {
    let idx = road_index(mesh);
    let (n, nk) = (mesh.vertex_count(), mesh.road_vertices().len());
    let mut ff = TripletBuilder::new();
    let mut fk = TripletBuilder::new();
    let mut kk = TripletBuilder::new();
    for r in mesh.road_edges() {
        let l = r.length();
        let verts = [r.a, r.b];
        for x in 0..2 {
            for y in 0..2 {
                let m = if x == y { l / 3.0 } else { l / 6.0 };
                let (kx, ky) = (idx[verts[x]].unwrap(), idx[verts[y]].unwrap());
                ff.add(verts[x], verts[y], m);
                fk.add(verts[x], ky, m);
                kk.add(kx, ky, m);
            }
        }
    }
    TraceCoupling {
        t_ff: ff.build(n, n),
        t_fk: fk.build(n, nk),
        t_kk: kk.build(nk, nk),
    }
}

/// The assembled operator pair over free degrees of freedom.
#[derive(Clone, Debug)]
pub struct FemSystem {
    params: CouplingParams,
    field_vertices: Vec<usize>,
    road_vertices: Vec<usize>,
    field_dof: Vec<Option<usize>>,
    road_dof: Vec<Option<usize>>,
    eliminated_field: Vec<usize>,
    eliminated_road: Vec<usize>,
    b: CsrMatrix,
    lmass: CsrMatrix,
    hnorm: CsrMatrix,
    /// Free-dof blocks kept for diagnostics.
    a_field: CsrMatrix,
    m_field: CsrMatrix,
    a_road: CsrMatrix,
    m_road: CsrMatrix,
    coupling: CsrMatrix,
    t_field: CsrMatrix,
    mesh_fingerprint: u64,
}

/// `B(x, x) = aν·field + bμ·road + coupling`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyParts {
    pub field: f64,
    pub road: f64,
    pub coupling: f64,
}

pub fn build_system(mesh: &Mesh, params: CouplingParams) -> Result<FemSystem, AssemblyError> {
    params.validate()?;
    let CouplingParams { a, b, mu, nu } = params;
    let (af, mf) = assemble_field(mesh)?;
    let (ak, mk) = assemble_road(mesh);
    let tc = assemble_trace_coupling(mesh);

    let markers = mesh.markers();
    let field_vertices: Vec<usize> = (0..mesh.vertex_count())
        .filter(|&v| !markers[v].on_boundary())
        .collect();
    let eliminated_field: Vec<usize> = (0..mesh.vertex_count())
        .filter(|&v| markers[v].on_boundary())
        .collect();
    let all_road = mesh.road_vertices();
    // Positions within the road-vertex ordering of the free and eliminated road vertices.
    let (free_k, fixed_k): (Vec<usize>, Vec<usize>) =
        (0..all_road.len()).partition(|&k| markers[all_road[k]] == VertexMarker::Road);
    let road_vertices: Vec<usize> = free_k.iter().map(|&k| all_road[k]).collect();
    let eliminated_road: Vec<usize> = fixed_k.iter().map(|&k| all_road[k]).collect();
    if field_vertices.is_empty() && road_vertices.is_empty() {
        return Err(AssemblyError::NoFreeDofs);
    }

    let mut field_dof = vec![None; mesh.vertex_count()];
    for (d, &v) in field_vertices.iter().enumerate() {
        field_dof[v] = Some(d);
    }
    let mut road_dof = vec![None; mesh.vertex_count()];
    for (d, &v) in road_vertices.iter().enumerate() {
        road_dof[v] = Some(d);
    }

    let a_field = af.restrict(&field_vertices, &field_vertices);
    let m_field = mf.restrict(&field_vertices, &field_vertices);
    let a_road = ak.restrict(&free_k, &free_k);
    let m_road = mk.restrict(&free_k, &free_k);
    let t_field = tc.t_ff.restrict(&field_vertices, &field_vertices);
    let t_fk = tc.t_fk.restrict(&field_vertices, &free_k);
    let t_kk = tc.t_kk.restrict(&free_k, &free_k);
    let t_kf = t_fk.transpose();

    let coupling = CsrMatrix::block2x2(
        &t_field.scaled(nu * nu),
        &t_fk.scaled(-nu * mu),
        &t_kf.scaled(-nu * mu),
        &t_kk.scaled(mu * mu),
    );
    let nf = field_vertices.len();
    let nk = road_vertices.len();
    let zero_fk = CsrMatrix::zeros(nf, nk);
    let zero_kf = CsrMatrix::zeros(nk, nf);
    let diag_blocks = CsrMatrix::block2x2(
        &a_field.scaled(a * nu),
        &zero_fk,
        &zero_kf,
        &a_road.scaled(b * mu),
    );
    let bmat = CsrMatrix::linear_combination(&[(1.0, &diag_blocks), (1.0, &coupling)]);
    let lmass = CsrMatrix::block2x2(&m_field.scaled(nu), &zero_fk, &zero_kf, &m_road.scaled(mu));
    let hnorm = CsrMatrix::block2x2(
        &CsrMatrix::linear_combination(&[(nu, &a_field), (nu, &m_field)]),
        &zero_fk,
        &zero_kf,
        &CsrMatrix::linear_combination(&[(mu, &a_road), (mu, &m_road)]),
    );

    Ok(FemSystem {
        params,
        field_vertices,
        road_vertices,
        field_dof,
        road_dof,
        eliminated_field,
        eliminated_road,
        b: bmat,
        lmass,
        hnorm,
        a_field,
        m_field,
        a_road,
        m_road,
        coupling,
        t_field,
        mesh_fingerprint: mesh.fingerprint(),
    })
}

impl FemSystem {
    pub fn params(&self) -> CouplingParams {
        self.params
    }

    pub fn dim(&self) -> usize {
        self.field_vertices.len() + self.road_vertices.len()
    }

    pub fn field_dim(&self) -> usize {
        self.field_vertices.len()
    }

    pub fn road_dim(&self) -> usize {
        self.road_vertices.len()
    }

    pub fn b(&self) -> &CsrMatrix {
        &self.b
    }

    pub fn lmass(&self) -> &CsrMatrix {
        &self.lmass
    }

    pub fn hnorm(&self) -> &CsrMatrix {
        &self.hnorm
    }

    /// Field stiffness over free field dofs.
    pub fn field_stiffness(&self) -> &CsrMatrix {
        &self.a_field
    }

    pub fn field_mass(&self) -> &CsrMatrix {
        &self.m_field
    }

    pub fn road_stiffness(&self) -> &CsrMatrix {
        &self.a_road
    }

    pub fn road_mass(&self) -> &CsrMatrix {
        &self.m_road
    }

    /// `∫_K v φ` over free field dofs.
    pub fn field_trace_mass(&self) -> &CsrMatrix {
        &self.t_field
    }

    /// Mesh vertex of each field dof.
    pub fn field_vertices(&self) -> &[usize] {
        &self.field_vertices
    }

    /// Mesh vertex of each road dof.
    pub fn road_vertices(&self) -> &[usize] {
        &self.road_vertices
    }

    pub fn field_dof(&self, vertex: usize) -> Option<usize> {
        self.field_dof[vertex]
    }

    /// Global index (after the field block) of the road dof at a mesh vertex.
    pub fn road_dof(&self, vertex: usize) -> Option<usize> {
        self.road_dof[vertex].map(|d| self.field_dim() + d)
    }

    /// Mesh vertices whose field value is fixed to zero.
    pub fn eliminated_field(&self) -> &[usize] {
        &self.eliminated_field
    }

    /// Road vertices whose road value is fixed to zero.
    pub fn eliminated_road(&self) -> &[usize] {
        &self.eliminated_road
    }

    pub fn mesh_fingerprint(&self) -> u64 {
        self.mesh_fingerprint
    }

    /// Global road dof of every network vertex, `None` where eliminated.
    pub fn network_vertex_dofs(
        &self,
        mesh: &Mesh,
        net: &RoadNetwork,
    ) -> Result<Vec<Option<usize>>, crate::meshing::MeshError> {
        Ok(mesh
            .network_vertex_map(net)?
            .into_iter()
            .map(|v| self.road_dof(v))
            .collect())
    }

    fn check(&self, x: &[f64]) -> Result<(), AssemblyError> {
        if x.len() != self.dim() {
            return Err(AssemblyError::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn apply_b(&self, x: &[f64]) -> Result<Vec<f64>, AssemblyError> {
        self.check(x)?;
        Ok(self.b.mul_vec(x))
    }

    pub fn apply_l(&self, x: &[f64]) -> Result<Vec<f64>, AssemblyError> {
        self.check(x)?;
        Ok(self.lmass.mul_vec(x))
    }

    pub fn inner_b(&self, x: &[f64], y: &[f64]) -> Result<f64, AssemblyError> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.b.bilinear(x, y))
    }

    pub fn inner_l(&self, x: &[f64], y: &[f64]) -> Result<f64, AssemblyError> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.lmass.bilinear(x, y))
    }

    pub fn inner_h(&self, x: &[f64], y: &[f64]) -> Result<f64, AssemblyError> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.hnorm.bilinear(x, y))
    }

    pub fn l_norm(&self, x: &[f64]) -> Result<f64, AssemblyError> {
        Ok(self.inner_l(x, x)?.max(0.0).sqrt())
    }

    /// Splits `B(x, x)` into its field, road and coupling parts.
    pub fn energy_parts(&self, x: &[f64]) -> Result<EnergyParts, AssemblyError> {
        self.check(x)?;
        let (xf, xk) = x.split_at(self.field_dim());
        Ok(EnergyParts {
            field: self.a_field.quad_form(xf),
            road: self.a_road.quad_form(xk),
            coupling: self.coupling.quad_form(x),
        })
    }

    /// Free vector from nodal field and road values over all mesh vertices.
    pub fn from_nodal(&self, v: &[f64], u: &[f64]) -> Vec<f64> {
        self.field_vertices
            .iter()
            .map(|&i| v[i])
            .chain(self.road_vertices.iter().map(|&i| u[i]))
            .collect()
    }

    /// Nodal field and road values over all mesh vertices, zero where eliminated
    /// or off the road.
    pub fn to_nodal(&self, x: &[f64], vertex_count: usize) -> (Vec<f64>, Vec<f64>) {
        let mut v = vec![0.0; vertex_count];
        let mut u = vec![0.0; vertex_count];
        let (xf, xk) = x.split_at(self.field_dim());
        for (&i, &val) in self.field_vertices.iter().zip(xf) {
            v[i] = val;
        }
        for (&i, &val) in self.road_vertices.iter().zip(xk) {
            u[i] = val;
        }
        (v, u)
    }
}
