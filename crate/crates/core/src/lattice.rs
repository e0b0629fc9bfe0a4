//! The projected FCC lattice.
//!
//! Columns of FCC atoms along `[1 -1 0]` project onto a centred rectangular
//! lattice in the `(1 -1 0)` plane. Planar positions are written in the
//! `⟨ν1, ν2⟩ = ν1·V1 + ν2·V2` frame with `V1 = a/2·(1,1,0)` and
//! `V2 = a·(0,0,1)`; all lattice bookkeeping is done in doubled integer
//! coordinates `(2ν1, 2ν2)` so that set membership is exact.

use std::collections::HashMap;
use std::f64::consts::SQRT_2;
use std::fmt;
use std::io::Write;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use crate::error::{QcError, Result};

/// A point of the projected lattice in doubled `⟨ν1, ν2⟩` coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticePoint {
    pub i: i32,
    pub j: i32,
}

impl LatticePoint {
    pub const fn new(i: i32, j: i32) -> Self {
        Self { i, j }
    }

    /// Builds the point `⟨ν1, ν2⟩`; both coordinates must be multiples of 1/2.
    pub fn from_nu(nu1: f64, nu2: f64) -> Self {
        Self::new((2.0 * nu1).round() as i32, (2.0 * nu2).round() as i32)
    }

    pub fn nu(self) -> [f64; 2] {
        [0.5 * self.i as f64, 0.5 * self.j as f64]
    }

    /// Integer sites `⟨k, l⟩` and centred sites `⟨k+½, l+½⟩` are the only
    /// lattice points.
    pub fn is_lattice_point(self) -> bool {
        (self.i - self.j).rem_euclid(2) == 0
    }

    pub fn is_zero(self) -> bool {
        self.i == 0 && self.j == 0
    }
}

impl Add for LatticePoint {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.i + o.i, self.j + o.j)
    }
}

impl Sub for LatticePoint {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.i - o.i, self.j - o.j)
    }
}

impl Neg for LatticePoint {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.i, -self.j)
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b] = self.nu();
        write!(f, "⟨{a}, {b}⟩")
    }
}

/// Planar basis of the projected lattice for cube side `a`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeGeometry {
    pub lattice_constant: f64,
}

impl LatticeGeometry {
    pub fn new(lattice_constant: f64) -> Result<Self> {
        if !(lattice_constant > 0.0 && lattice_constant.is_finite()) {
            return Err(QcError::InvalidParameter(format!(
                "lattice constant must be positive, got {lattice_constant}"
            )));
        }
        Ok(Self { lattice_constant })
    }

    /// `|V1| = a/√2`.
    pub fn v1_length(&self) -> f64 {
        self.lattice_constant / SQRT_2
    }

    /// `|V2| = a`.
    pub fn v2_length(&self) -> f64 {
        self.lattice_constant
    }

    /// `V1` and `V2` as 3D vectors in the cubic frame.
    pub fn basis_3d(&self) -> [[f64; 3]; 2] {
        let a = self.lattice_constant;
        [[0.5 * a, 0.5 * a, 0.0], [0.0, 0.0, a]]
    }

    /// Cartesian planar position in the orthonormal frame `(V1/|V1|, V2/|V2|)`.
    pub fn cartesian(&self, p: LatticePoint) -> [f64; 2] {
        [
            0.5 * p.i as f64 * self.v1_length(),
            0.5 * p.j as f64 * self.v2_length(),
        ]
    }

    /// Area per atom of the 2D lattice, `|V1||V2|/2 = a²/(2√2)`.
    pub fn cell_area(&self) -> f64 {
        0.5 * self.v1_length() * self.v2_length()
    }

    /// Burgers vector magnitude `a/√2`.
    pub fn burgers(&self) -> f64 {
        self.v1_length()
    }
}

/// One FCC neighbour vector `B = (a/2)·(i, j, k)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FccNeighbor {
    pub half_units: [i32; 3],
    /// 1 = nearest, …, 4 = fourth-nearest.
    pub shell: usize,
}

impl FccNeighbor {
    pub fn vector(&self, a: f64) -> [f64; 3] {
        let [i, j, k] = self.half_units;
        [0.5 * a * i as f64, 0.5 * a * j as f64, 0.5 * a * k as f64]
    }

    /// In-plane part of the bond in doubled `⟨ν1, ν2⟩` coordinates.
    pub fn planar(&self) -> LatticePoint {
        let [i, j, k] = self.half_units;
        LatticePoint::new(i + j, k)
    }

    /// Length of the out-of-plane component `|QB|`.
    pub fn column_offset(&self, a: f64) -> f64 {
        let [i, j, _] = self.half_units;
        (i - j).abs() as f64 * a / (2.0 * SQRT_2)
    }
}

/// Brute-force enumeration of the first four FCC neighbour shells.
pub fn fcc_neighbors() -> Vec<FccNeighbor> {
    let mut out = Vec::new();
    for i in -4..=4 {
        for j in -4..=4 {
            for k in -4..=4 {
                if (i + j + k) % 2 != 0 {
                    continue;
                }
                let n2 = i * i + j * j + k * k;
                if matches!(n2, 2 | 4 | 6 | 8) {
                    out.push(FccNeighbor {
                        half_units: [i, j, k],
                        shell: (n2 / 2) as usize,
                    });
                }
            }
        }
    }
    out
}

/// Orthogonal projection onto the plane with normal `(-1, 1, 0)`.
pub fn project_onto_plane(v: [f64; 3]) -> [f64; 3] {
    let n = [-1.0 / SQRT_2, 1.0 / SQRT_2, 0.0];
    let d = v[0] * n[0] + v[1] * n[1] + v[2] * n[2];
    [v[0] - d * n[0], v[1] - d * n[1], v[2] - d * n[2]]
}

/// How the continuum difference operator reconstructs the `⟨1,1⟩` bonds from
/// nearest-neighbour differences.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CbStencil {
    /// `⟨1,1⟩ ≈ 2·⟨½,½⟩`.
    #[default]
    Paired,
    /// `⟨1,1⟩ ≈ ⟨-½,½⟩ + ⟨3/2,½⟩`, the second term an exact difference.
    Literal,
    /// `⟨1,1⟩ ≈ ⟨-½,½⟩ + ⟨1,0⟩ + ⟨½,½⟩`.
    Chain,
}

impl FromStr for CbStencil {
    type Err = QcError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paired" => Ok(Self::Paired),
            "literal" => Ok(Self::Literal),
            "chain" => Ok(Self::Chain),
            other => Err(QcError::InvalidParameter(format!(
                "unknown cb stencil `{other}` (expected paired, literal or chain)"
            ))),
        }
    }
}

impl fmt::Display for CbStencil {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Paired => "paired",
            Self::Literal => "literal",
            Self::Chain => "chain",
        })
    }
}

/// All FCC bonds sharing one planar projection.
#[derive(Clone, Debug, PartialEq)]
pub struct BondClass {
    pub vector: LatticePoint,
    pub cartesian: [f64; 2],
    /// `|QB|` for every FCC bond projecting onto `vector`.
    pub offsets: Vec<f64>,
    /// Continuum reconstruction `D̃_b = Σ c·D_s` over nearest-neighbour
    /// (or, for [`CbStencil::Literal`], mixed) planar bonds `s`.
    pub stencil: Vec<(LatticePoint, f64)>,
}

/// The 18 signed planar bond classes plus the in-column shell.
#[derive(Clone, Debug, PartialEq)]
pub struct BondTable {
    pub classes: Vec<BondClass>,
    /// `|QB|` of the four neighbours in the same column; these bonds never
    /// change length under plane displacements.
    pub column_shell: Vec<f64>,
    pub stencil_rule: CbStencil,
}

fn canonical_stencil(v: LatticePoint, rule: CbStencil) -> Vec<(LatticePoint, f64)> {
    let p = LatticePoint::new;
    match (v.i, v.j) {
        (2, 0) | (1, 1) => vec![(v, 1.0)],
        (4, 0) => vec![(p(2, 0), 2.0)],
        (3, 1) => vec![(p(2, 0), 1.0), (p(1, 1), 1.0)],
        (0, 2) => vec![(p(-1, 1), 1.0), (p(1, 1), 1.0)],
        (2, 2) => match rule {
            CbStencil::Paired => vec![(p(1, 1), 2.0)],
            CbStencil::Literal => vec![(p(-1, 1), 1.0), (p(3, 1), 1.0)],
            CbStencil::Chain => vec![(p(-1, 1), 1.0), (p(2, 0), 1.0), (p(1, 1), 1.0)],
        },
        _ => unreachable!("no stencil for planar bond {v}"),
    }
}

impl BondTable {
    /// Enumerates the 54 first-to-fourth FCC neighbours, projects them and
    /// groups them by planar vector.
    pub fn build(a: f64, rule: CbStencil) -> Result<Self> {
        let geometry = LatticeGeometry::new(a)?;
        let mut groups: HashMap<LatticePoint, Vec<f64>> = HashMap::new();
        let mut column_shell = Vec::new();
        for n in fcc_neighbors() {
            let b = n.planar();
            let q = n.column_offset(a);
            if b.is_zero() {
                column_shell.push(q);
            } else {
                groups.entry(b).or_default().push(q);
            }
        }
        column_shell.sort_by(f64::total_cmp);

        let mut vectors: Vec<_> = groups.keys().copied().collect();
        vectors.sort();
        let classes = vectors
            .into_iter()
            .map(|v| {
                let mut offsets = groups.remove(&v).unwrap_or_default();
                offsets.sort_by(f64::total_cmp);
                let si = if v.i < 0 { -1 } else { 1 };
                let sj = if v.j < 0 { -1 } else { 1 };
                let canon = LatticePoint::new(v.i.abs(), v.j.abs());
                let stencil = canonical_stencil(canon, rule)
                    .into_iter()
                    .map(|(s, c)| (LatticePoint::new(si * s.i, sj * s.j), c))
                    .collect();
                BondClass {
                    vector: v,
                    cartesian: geometry.cartesian(v),
                    offsets,
                    stencil,
                }
            })
            .collect();
        Ok(Self {
            classes,
            column_shell,
            stencil_rule: rule,
        })
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn class_of(&self, v: LatticePoint) -> Option<usize> {
        self.classes.iter().position(|c| c.vector == v)
    }

    /// Number of FCC bonds carried by the planar classes (50 for a full stencil).
    pub fn offset_count(&self) -> usize {
        self.classes.iter().map(|c| c.offsets.len()).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryStyle {
    /// Clamp a layer on all four sides.
    FullPerimeter,
    /// Clamp the left and right sides only; top and bottom are free surfaces.
    LeftRight,
}

impl FromStr for BoundaryStyle {
    type Err = QcError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" | "full-perimeter" => Ok(Self::FullPerimeter),
            "left-right" => Ok(Self::LeftRight),
            other => Err(QcError::InvalidParameter(format!(
                "unknown boundary style `{other}`"
            ))),
        }
    }
}

impl fmt::Display for BoundaryStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::FullPerimeter => "full",
            Self::LeftRight => "left-right",
        })
    }
}

/// Which sites are treated atomistically. Coordinates are in `⟨ν1, ν2⟩`.
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    AllAtomistic,
    AllContinuum,
    /// Closed box `[nu1.0, nu1.1] × [nu2.0, nu2.1]`.
    Box { nu1: [f64; 2], nu2: [f64; 2] },
    /// Sites on or to the left of the directed line through `point`.
    HalfPlane { point: [f64; 2], direction: [f64; 2] },
    /// Closed polygon.
    Polygon(Vec<[f64; 2]>),
}

impl Region {
    /// Atomistic box `[32−k, 43+k] × [30−k, 30+k]` around the Lomer dipole.
    pub fn dipole_box(k: usize) -> Self {
        let k = k as f64;
        Region::Box {
            nu1: [32.0 - k, 43.0 + k],
            nu2: [30.0 - k, 30.0 + k],
        }
    }

    pub fn contains(&self, nu: [f64; 2]) -> bool {
        const EPS: f64 = 1e-9;
        match self {
            Region::AllAtomistic => true,
            Region::AllContinuum => false,
            Region::Box { nu1, nu2 } => {
                nu[0] >= nu1[0] - EPS
                    && nu[0] <= nu1[1] + EPS
                    && nu[1] >= nu2[0] - EPS
                    && nu[1] <= nu2[1] + EPS
            }
            Region::HalfPlane { point, direction } => {
                let dx = nu[0] - point[0];
                let dy = nu[1] - point[1];
                direction[0] * dy - direction[1] * dx >= -EPS
            }
            Region::Polygon(vertices) => point_in_polygon(vertices, nu),
        }
    }

    /// Atomistic half-plane `ν1 + ν2 ≥ 22.5` for the tension benchmark; the
    /// left end of the bar is continuum.
    pub fn tension_default() -> Self {
        Region::HalfPlane {
            point: [22.5, 0.0],
            direction: [0.5, -0.5],
        }
    }
}

/// Same grammar as [`FromStr`]: `atomistic`, `continuum`, `box a b c d`,
/// `half-plane px py dx dy`, `polygon x1 y1 x2 y2 ...`.
impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::AllAtomistic => f.write_str("atomistic"),
            Region::AllContinuum => f.write_str("continuum"),
            Region::Box { nu1, nu2 } => write!(f, "box {} {} {} {}", nu1[0], nu1[1], nu2[0], nu2[1]),
            Region::HalfPlane { point, direction } => write!(
                f,
                "half-plane {} {} {} {}",
                point[0], point[1], direction[0], direction[1]
            ),
            Region::Polygon(v) => {
                f.write_str("polygon")?;
                for p in v {
                    write!(f, " {} {}", p[0], p[1])?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for Region {
    type Err = QcError;
    /// Also accepts `dipole-box k`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || QcError::InvalidParameter(format!("cannot read region `{s}`"));
        let mut words = s.split_whitespace();
        let head = words.next().ok_or_else(bad)?;
        let rest: Vec<&str> = words.collect();
        let nums = || -> Result<Vec<f64>> {
            rest.iter().map(|w| w.parse::<f64>().map_err(|_| bad())).collect()
        };
        match (head, rest.len()) {
            ("atomistic", 0) => Ok(Region::AllAtomistic),
            ("continuum", 0) => Ok(Region::AllContinuum),
            ("dipole-box", 1) => Ok(Region::dipole_box(rest[0].parse().map_err(|_| bad())?)),
            ("box", 4) => {
                let v = nums()?;
                Ok(Region::Box {
                    nu1: [v[0], v[1]],
                    nu2: [v[2], v[3]],
                })
            }
            ("half-plane", 4) => {
                let v = nums()?;
                if v[2] == 0.0 && v[3] == 0.0 {
                    return Err(bad());
                }
                Ok(Region::HalfPlane {
                    point: [v[0], v[1]],
                    direction: [v[2], v[3]],
                })
            }
            ("polygon", n) if n >= 6 && n % 2 == 0 => {
                Ok(Region::Polygon(nums()?.chunks(2).map(|c| [c[0], c[1]]).collect()))
            }
            _ => Err(bad()),
        }
    }
}

fn point_in_polygon(vertices: &[[f64; 2]], p: [f64; 2]) -> bool {
    let n = vertices.len();
    if n < 3 {
        return false;
    }
    // on an edge counts as inside
    for k in 0..n {
        let a = vertices[k];
        let b = vertices[(k + 1) % n];
        let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        let within = (p[0] - a[0]) * (p[0] - b[0]) <= 1e-12 && (p[1] - a[1]) * (p[1] - b[1]) <= 1e-12;
        if cross.abs() < 1e-9 && within {
            return true;
        }
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (vi, vj) = (vertices[i], vertices[j]);
        if (vi[1] > p[1]) != (vj[1] > p[1])
            && p[0] < (vj[0] - vi[0]) * (p[1] - vi[1]) / (vj[1] - vi[1]) + vi[0]
        {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Description of a rectangular benchmark domain.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainSpec {
    /// Number of integer columns `K`; the domain has `2K` atom columns.
    pub columns: usize,
    /// Atoms per column `L`.
    pub rows: usize,
    pub boundary: BoundaryStyle,
    /// Integer layers clamped per constrained side (each adds a centred layer too).
    pub boundary_depth: usize,
    pub region: Region,
}

impl DomainSpec {
    /// 150 columns of 60 atoms, clamped on all sides.
    pub fn dipole(region: Region) -> Self {
        Self {
            columns: 75,
            rows: 60,
            boundary: BoundaryStyle::FullPerimeter,
            boundary_depth: 2,
            region,
        }
    }

    /// 120 columns of 15 atoms, clamped left and right.
    pub fn tension(region: Region) -> Self {
        Self {
            columns: 60,
            rows: 15,
            boundary: BoundaryStyle::LeftRight,
            boundary_depth: 2,
            region,
        }
    }
}

const NO_SITE: u32 = u32::MAX;

/// A finite set of lattice sites with its clamped layer and partition.
#[derive(Clone, Debug)]
pub struct Domain {
    spec: DomainSpec,
    geometry: LatticeGeometry,
    bonds: BondTable,
    sites: Vec<LatticePoint>,
    grid_width: usize,
    grid: Vec<u32>,
    clamped: Vec<bool>,
    atomistic: Vec<bool>,
    neighbors: Vec<u32>,
}

impl Domain {
    pub fn build(spec: DomainSpec, lattice_constant: f64, stencil: CbStencil) -> Result<Self> {
        let geometry = LatticeGeometry::new(lattice_constant)?;
        let bonds = BondTable::build(lattice_constant, stencil)?;
        let (k_max, l_max) = (spec.columns, spec.rows);
        if k_max == 0 || l_max == 0 {
            return Err(QcError::DomainTooSmall("empty site set".into()));
        }

        // column-major: ν1 first, then ν2; integer and centred sites interleave
        let mut sites = Vec::with_capacity(2 * k_max * l_max);
        for i in 0..(2 * k_max) as i32 {
            for l in 0..l_max as i32 {
                let j = 2 * l + (i & 1);
                sites.push(LatticePoint::new(i, j));
            }
        }
        let grid_width = 2 * l_max + 1;
        let mut grid = vec![NO_SITE; 2 * k_max * grid_width];
        for (idx, p) in sites.iter().enumerate() {
            grid[p.i as usize * grid_width + p.j as usize] = idx as u32;
        }

        let depth = spec.boundary_depth as f64;
        let clamped: Vec<bool> = sites
            .iter()
            .map(|p| {
                let [nu1, nu2] = p.nu();
                let sides = nu1 < depth || nu1 >= k_max as f64 - depth;
                let ends = nu2 < depth || nu2 >= l_max as f64 - depth;
                match spec.boundary {
                    BoundaryStyle::FullPerimeter => sides || ends,
                    BoundaryStyle::LeftRight => sides,
                }
            })
            .collect();
        let atomistic = sites.iter().map(|p| spec.region.contains(p.nu())).collect();

        let mut domain = Self {
            spec,
            geometry,
            bonds,
            sites,
            grid_width,
            grid,
            clamped,
            atomistic,
            neighbors: Vec::new(),
        };
        let nc = domain.bonds.len();
        let mut neighbors = vec![NO_SITE; domain.sites.len() * nc];
        for (idx, &p) in domain.sites.iter().enumerate() {
            for (c, class) in domain.bonds.classes.iter().enumerate() {
                if let Some(n) = domain.index_of(p + class.vector) {
                    neighbors[idx * nc + c] = n as u32;
                }
            }
        }
        domain.neighbors = neighbors;
        domain.validate()?;
        Ok(domain)
    }

    fn validate(&self) -> Result<()> {
        let nc = self.bonds.len();
        let mut full_interior = 0usize;
        for idx in 0..self.len() {
            if self.clamped[idx] {
                continue;
            }
            let complete = self.clipped_count(idx) == nc;
            if complete {
                full_interior += 1;
            } else if self.spec.boundary == BoundaryStyle::FullPerimeter {
                return Err(QcError::DomainTooSmall(format!(
                    "free site {} has an incomplete stencil; increase the boundary depth",
                    self.sites[idx]
                )));
            } else {
                // free ν2 edges may clip, ν1 neighbours must be present
                for (c, class) in self.bonds.classes.iter().enumerate() {
                    if class.vector.j == 0 && self.neighbor(idx, c).is_none() {
                        return Err(QcError::DomainTooSmall(format!(
                            "free site {} misses a ν1 neighbour",
                            self.sites[idx]
                        )));
                    }
                }
            }
        }
        if full_interior == 0 {
            return Err(QcError::DomainTooSmall(
                "no free site with a complete interaction stencil".into(),
            ));
        }
        Ok(())
    }

    /// Same sites and boundary with a different atomistic region.
    pub fn with_region(&self, region: Region) -> Self {
        let mut d = self.clone();
        d.atomistic = d.sites.iter().map(|p| region.contains(p.nu())).collect();
        d.spec.region = region;
        d
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    pub fn bonds(&self) -> &BondTable {
        &self.bonds
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[LatticePoint] {
        &self.sites
    }

    pub fn site(&self, idx: usize) -> LatticePoint {
        self.sites[idx]
    }

    pub fn index_of(&self, p: LatticePoint) -> Option<usize> {
        if p.i < 0 || p.j < 0 || p.j as usize >= self.grid_width {
            return None;
        }
        let k = p.i as usize * self.grid_width + p.j as usize;
        match self.grid.get(k) {
            Some(&n) if n != NO_SITE => Some(n as usize),
            _ => None,
        }
    }

    pub fn cartesian(&self, idx: usize) -> [f64; 2] {
        self.geometry.cartesian(self.sites[idx])
    }

    pub fn is_clamped(&self, idx: usize) -> bool {
        self.clamped[idx]
    }

    pub fn clamped(&self) -> &[bool] {
        &self.clamped
    }

    pub fn is_atomistic(&self, idx: usize) -> bool {
        self.atomistic[idx]
    }

    pub fn atomistic_count(&self) -> usize {
        self.atomistic.iter().filter(|&&a| a).count()
    }

    pub fn continuum_count(&self) -> usize {
        self.len() - self.atomistic_count()
    }

    /// Site reached from `idx` along bond class `class`, if it is in the domain.
    #[inline]
    pub fn neighbor(&self, idx: usize, class: usize) -> Option<usize> {
        let n = self.neighbors[idx * self.bonds.len() + class];
        (n != NO_SITE).then_some(n as usize)
    }

    /// `|M_x|`.
    pub fn clipped_count(&self, idx: usize) -> usize {
        (0..self.bonds.len())
            .filter(|&c| self.neighbor(idx, c).is_some())
            .count()
    }

    pub fn free_sites(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| !self.clamped[i])
    }
}

/// Triangulation of the reference lattice used by the preconditioner.
#[derive(Clone, Debug)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub clamped: Vec<bool>,
}

/// Triangulates the structured lattice with nodes = sites.
///
/// Interior triangles are those of the triangular lattice spanned by `⟨1,0⟩`
/// and `⟨½,½⟩`; the zig-zag left and right edges are closed with triangles
/// using the vertical `⟨0,1⟩` edge so that the mesh covers the convex hull.
pub fn canonical_triangulation(domain: &Domain) -> Mesh {
    let p = LatticePoint::new;
    let (e1, up, ul, vertical) = (p(2, 0), p(1, 1), p(-1, 1), p(0, 2));
    let mut triangles = Vec::new();
    for (idx, &x) in domain.sites().iter().enumerate() {
        let at = |d: LatticePoint| domain.index_of(x + d);
        if let (Some(b), Some(c)) = (at(e1), at(up)) {
            triangles.push([idx, b, c]);
        }
        if let (Some(b), Some(c)) = (at(up), at(ul)) {
            triangles.push([idx, b, c]);
        }
        match (at(ul), at(up), at(vertical)) {
            (None, Some(b), Some(c)) => triangles.push([idx, b, c]),
            (Some(c), None, Some(b)) => triangles.push([idx, b, c]),
            _ => {}
        }
    }
    Mesh {
        nodes: (0..domain.len()).map(|i| domain.cartesian(i)).collect(),
        triangles,
        clamped: domain.clamped().to_vec(),
    }
}

impl Mesh {
    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|k| self.nodes[k]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
    }

    /// Plain-text listing: `node index ν1 ν2 x y` lines, then
    /// `triangle a b c` lines.
    pub fn write_text<W: Write>(&self, domain: &Domain, mut out: W) -> std::io::Result<()> {
        for (k, node) in self.nodes.iter().enumerate() {
            let [nu1, nu2] = domain.site(k).nu();
            writeln!(
                out,
                "node {k} {nu1} {nu2} {:.16e} {:.16e}",
                node[0], node[1]
            )?;
        }
        for t in &self.triangles {
            writeln!(out, "triangle {} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}
