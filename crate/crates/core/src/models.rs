//! Atomistic, Cauchy–Born, QCE and QNL energies, their gradients, and the
//! force-based (QCF) operator.
//!
//! Displacement fields are flat `[u0x, u0y, u1x, u1y, …]` vectors in the
//! Cartesian planar frame, one pair per domain site.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{QcError, Result};
use crate::lattice::{BondTable, Domain, LatticeGeometry, LatticePoint};
use crate::potentials::{Morse, ProjectedPotential};

/// Deformed bonds shorter than this are rejected.
pub const MIN_BOND_LENGTH: f64 = 1e-12;

pub type Mat2 = [[f64; 2]; 2];

pub const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

#[inline]
pub fn mat_vec(f: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [
        f[0][0] * v[0] + f[0][1] * v[1],
        f[1][0] * v[0] + f[1][1] * v[1],
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Atomistic,
    CauchyBorn,
    Qce,
    Qnl,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Atomistic => "atomistic",
            Self::CauchyBorn => "cauchy-born",
            Self::Qce => "qce",
            Self::Qnl => "qnl",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = QcError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "atomistic" => Ok(Self::Atomistic),
            "cauchy-born" => Ok(Self::CauchyBorn),
            "qce" => Ok(Self::Qce),
            "qnl" => Ok(Self::Qnl),
            other => Err(QcError::InvalidParameter(format!("unknown model `{other}`"))),
        }
    }
}

/// Exact difference `D_b u(x)` or the continuum reconstruction `D̃_b u(x)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Difference {
    Exact,
    Extrapolated,
}

fn difference_for(kind: ModelKind, domain: &Domain, x: usize, y: usize) -> Difference {
    let continuum = match kind {
        ModelKind::Atomistic => false,
        ModelKind::CauchyBorn => true,
        ModelKind::Qce => !domain.is_atomistic(x),
        ModelKind::Qnl => !domain.is_atomistic(x) && !domain.is_atomistic(y),
    };
    if continuum {
        Difference::Extrapolated
    } else {
        Difference::Exact
    }
}

/// Linear form `Σ c_k u(p_k)` for one bond term of site `x` along `class`.
/// Falls back to the exact difference when a stencil point lies outside
/// the domain.
fn bond_form(domain: &Domain, x: usize, class: usize, diff: Difference) -> Option<Vec<(usize, i32)>> {
    let y = domain.neighbor(x, class)?;
    let exact = normalise(vec![(y, 1), (x, -1)]);
    if diff == Difference::Exact {
        return Some(exact);
    }
    let xp = domain.site(x);
    let mut form: Vec<(usize, i32)> = Vec::new();
    let mut total = 0;
    for &(s, c) in &domain.bonds().classes[class].stencil {
        let Some(p) = domain.index_of(xp + s) else {
            return Some(exact);
        };
        let c = c as i32;
        form.push((p, c));
        total += c;
    }
    form.push((x, -total));
    Some(normalise(form))
}

fn normalise(mut form: Vec<(usize, i32)>) -> Vec<(usize, i32)> {
    form.sort_unstable();
    let mut out: Vec<(usize, i32)> = Vec::with_capacity(form.len());
    for (p, c) in form {
        match out.last_mut() {
            Some(last) if last.0 == p => last.1 += c,
            _ => out.push((p, c)),
        }
    }
    out.retain(|&(_, c)| c != 0);
    out
}

#[derive(Clone, Copy, Debug)]
struct Term {
    site: u32,
    class: u16,
    len: u16,
    start: u32,
    weight: f64,
}

/// A compiled energy: a weighted sum of bond terms `w·φ_b(|b + Σ c_k u(p_k)|)`
/// plus the constant in-column shell.
#[derive(Clone, Debug)]
pub struct Model {
    kind: ModelKind,
    sites: usize,
    potentials: Vec<ProjectedPotential>,
    vectors: Vec<[f64; 2]>,
    terms: Vec<Term>,
    entries: Vec<(u32, f64)>,
    constant: f64,
}

impl Model {
    pub fn new(kind: ModelKind, domain: &Domain, morse: Morse) -> Result<Self> {
        let bonds = domain.bonds();
        let potentials: Vec<_> = bonds
            .classes
            .iter()
            .map(|c| ProjectedPotential::new(morse, &c.offsets))
            .collect();
        let vectors: Vec<_> = bonds.classes.iter().map(|c| c.cartesian).collect();
        let canonical: Vec<usize> = bonds
            .classes
            .iter()
            .map(|c| {
                let v = c.vector;
                if v.i < 0 || (v.i == 0 && v.j < 0) {
                    bonds.class_of(-v).expect("bond table is closed under negation")
                } else {
                    bonds.class_of(v).unwrap()
                }
            })
            .collect();

        // Terms describing the same bond length (e.g. x→x+b and x+b→x) merge.
        let mut index: HashMap<(usize, Vec<(usize, i32)>), usize> = HashMap::new();
        let mut merged: Vec<(usize, usize, Vec<(usize, i32)>, f64)> = Vec::new();
        for x in 0..domain.len() {
            for class in 0..bonds.len() {
                let Some(y) = domain.neighbor(x, class) else { continue };
                let diff = difference_for(kind, domain, x, y);
                let mut form = bond_form(domain, x, class, diff).unwrap();
                let canon = canonical[class];
                if canon != class {
                    form.iter_mut().for_each(|e| e.1 = -e.1);
                }
                let key = (canon, form);
                match index.get(&key) {
                    Some(&k) => merged[k].3 += 0.5,
                    None => {
                        index.insert(key.clone(), merged.len());
                        merged.push((x, key.0, key.1, 0.5));
                    }
                }
            }
        }

        let mut terms = Vec::with_capacity(merged.len());
        let mut entries = Vec::new();
        for (site, class, form, weight) in merged {
            terms.push(Term {
                site: site as u32,
                class: class as u16,
                len: form.len() as u16,
                start: entries.len() as u32,
                weight,
            });
            entries.extend(form.into_iter().map(|(p, c)| (p as u32, c as f64)));
        }

        let shell: f64 = bonds.column_shell.iter().map(|&q| morse.value(q)).sum();
        Ok(Self {
            kind,
            sites: domain.len(),
            potentials,
            vectors,
            terms,
            entries,
            constant: 0.5 * shell * domain.len() as f64,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Energy of the in-column neighbours, independent of `u`.
    pub fn constant_energy(&self) -> f64 {
        self.constant
    }

    fn check_len(&self, u: &[f64]) -> Result<()> {
        if u.len() != 2 * self.sites {
            return Err(QcError::FieldSize {
                expected: self.sites,
                found: u.len() / 2,
            });
        }
        Ok(())
    }

    #[inline]
    fn deformed(&self, t: &Term, u: &[f64]) -> [f64; 2] {
        let mut d = self.vectors[t.class as usize];
        for &(p, c) in self.term_entries(t) {
            let p = 2 * p as usize;
            d[0] += c * u[p];
            d[1] += c * u[p + 1];
        }
        d
    }

    #[inline]
    fn term_entries(&self, t: &Term) -> &[(u32, f64)] {
        &self.entries[t.start as usize..t.start as usize + t.len as usize]
    }

    #[inline]
    fn degenerate(t: &Term, r2: f64) -> Result<()> {
        if r2 <= MIN_BOND_LENGTH * MIN_BOND_LENGTH || !r2.is_finite() {
            return Err(QcError::DegenerateConfiguration {
                site: t.site as usize,
                length: r2.sqrt(),
            });
        }
        Ok(())
    }

    pub fn energy(&self, u: &[f64]) -> Result<f64> {
        self.check_len(u)?;
        let mut e = 0.0;
        for t in &self.terms {
            let d = self.deformed(t, u);
            let r2 = d[0] * d[0] + d[1] * d[1];
            Self::degenerate(t, r2)?;
            e += t.weight * self.potentials[t.class as usize].eval_sq(r2).0;
        }
        Ok(e + self.constant)
    }

    /// Total energy; `grad` is overwritten with its gradient.
    pub fn energy_gradient(&self, u: &[f64], grad: &mut [f64]) -> Result<f64> {
        self.check_len(u)?;
        grad.fill(0.0);
        let mut e = 0.0;
        for t in &self.terms {
            let d = self.deformed(t, u);
            let r2 = d[0] * d[0] + d[1] * d[1];
            Self::degenerate(t, r2)?;
            let (v, s) = self.potentials[t.class as usize].eval_sq(r2);
            e += t.weight * v;
            let f = [t.weight * s * d[0], t.weight * s * d[1]];
            for &(p, c) in self.term_entries(t) {
                let p = 2 * p as usize;
                grad[p] += c * f[0];
                grad[p + 1] += c * f[1];
            }
        }
        Ok(e + self.constant)
    }

    pub fn gradient(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut g = vec![0.0; u.len()];
        self.energy_gradient(u, &mut g)?;
        Ok(g)
    }

    /// `E(u + du) − E(u)` summed bond by bond without cancellation, and the
    /// gradient at `u + du` when `grad` is given.
    pub fn energy_change(&self, u: &[f64], du: &[f64], mut grad: Option<&mut [f64]>) -> Result<f64> {
        self.check_len(u)?;
        self.check_len(du)?;
        if let Some(g) = grad.as_deref_mut() {
            g.fill(0.0);
        }
        let mut de = 0.0;
        for t in &self.terms {
            let d = self.deformed(t, u);
            let mut delta = [0.0; 2];
            for &(p, c) in self.term_entries(t) {
                let p = 2 * p as usize;
                delta[0] += c * du[p];
                delta[1] += c * du[p + 1];
            }
            let r2 = d[0] * d[0] + d[1] * d[1];
            let dr2 = delta[0] * (2.0 * d[0] + delta[0]) + delta[1] * (2.0 * d[1] + delta[1]);
            let new = [d[0] + delta[0], d[1] + delta[1]];
            Self::degenerate(t, new[0] * new[0] + new[1] * new[1])?;
            let pot = &self.potentials[t.class as usize];
            match grad.as_deref_mut() {
                Some(g) => {
                    let (diff, s) = pot.difference_and_slope_sq(r2, dr2);
                    de += t.weight * diff;
                    let f = [t.weight * s * new[0], t.weight * s * new[1]];
                    for &(p, c) in self.term_entries(t) {
                        let p = 2 * p as usize;
                        g[p] += c * f[0];
                        g[p + 1] += c * f[1];
                    }
                }
                None => de += t.weight * pot.difference_sq(r2, dr2),
            }
        }
        Ok(de)
    }
}

/// Energy attributed to site `x`: `½Σ_b` over its clipped bonds plus half
/// the in-column shell.
pub fn site_energy(kind: ModelKind, domain: &Domain, morse: Morse, u: &[f64], x: usize) -> Result<f64> {
    if u.len() != 2 * domain.len() {
        return Err(QcError::FieldSize {
            expected: domain.len(),
            found: u.len() / 2,
        });
    }
    let bonds = domain.bonds();
    let mut e: f64 = 0.5 * bonds.column_shell.iter().map(|&q| morse.value(q)).sum::<f64>();
    for class in 0..bonds.len() {
        let Some(y) = domain.neighbor(x, class) else { continue };
        let form = bond_form(domain, x, class, difference_for(kind, domain, x, y)).unwrap();
        let mut d = bonds.classes[class].cartesian;
        for (p, c) in form {
            d[0] += c as f64 * u[2 * p];
            d[1] += c as f64 * u[2 * p + 1];
        }
        let r = (d[0] * d[0] + d[1] * d[1]).sqrt();
        if r <= MIN_BOND_LENGTH {
            return Err(QcError::DegenerateConfiguration { site: x, length: r });
        }
        e += 0.5 * ProjectedPotential::new(morse, &bonds.classes[class].offsets).value(r)?.0;
    }
    Ok(e)
}

/// The force-based coupling: atomistic forces on atomistic sites and
/// Cauchy–Born forces on continuum sites.
#[derive(Clone, Debug)]
pub struct QcfOperator {
    atomistic: Model,
    continuum: Model,
    atomistic_sites: Vec<bool>,
}

impl QcfOperator {
    pub fn new(domain: &Domain, morse: Morse) -> Result<Self> {
        Ok(Self {
            atomistic: Model::new(ModelKind::Atomistic, domain, morse)?,
            continuum: Model::new(ModelKind::CauchyBorn, domain, morse)?,
            atomistic_sites: (0..domain.len()).map(|x| domain.is_atomistic(x)).collect(),
        })
    }

    pub fn force(&self, u: &[f64]) -> Result<Vec<f64>> {
        let ga = self.atomistic.gradient(u)?;
        let mut f = if self.atomistic_sites.iter().all(|&a| a) {
            ga
        } else {
            let gc = self.continuum.gradient(u)?;
            let mut f = gc;
            for (x, &a) in self.atomistic_sites.iter().enumerate() {
                if a {
                    f[2 * x] = ga[2 * x];
                    f[2 * x + 1] = ga[2 * x + 1];
                }
            }
            f
        };
        f.iter_mut().for_each(|v| *v = -*v);
        Ok(f)
    }
}

/// `u(x) = (F − I)x`.
pub fn homogeneous_field(domain: &Domain, f: &Mat2) -> Vec<f64> {
    let mut u = Vec::with_capacity(2 * domain.len());
    for x in 0..domain.len() {
        let p = domain.cartesian(x);
        let q = mat_vec(f, p);
        u.push(q[0] - p[0]);
        u.push(q[1] - p[1]);
    }
    u
}

/// Largest `|φ_b'(|Fb|)|` over the planar bond classes.
pub fn bond_force_scale(bonds: &BondTable, morse: Morse, f: &Mat2) -> f64 {
    bonds
        .classes
        .iter()
        .map(|c| {
            let fb = mat_vec(f, c.cartesian);
            let r = (fb[0] * fb[0] + fb[1] * fb[1]).sqrt();
            let pot = ProjectedPotential::new(morse, &c.offsets);
            (pot.eval_sq(r * r).1 * r).abs()
        })
        .fold(0.0, f64::max)
}

/// Per-site gradient magnitude of `kind` under the homogeneous deformation
/// `F`; zero on clamped sites.
pub fn ghost_force_profile(kind: ModelKind, domain: &Domain, morse: Morse, f: &Mat2) -> Result<Vec<f64>> {
    let model = Model::new(kind, domain, morse)?;
    let g = model.gradient(&homogeneous_field(domain, f))?;
    Ok((0..domain.len())
        .map(|x| {
            if domain.is_clamped(x) {
                0.0
            } else {
                g[2 * x].hypot(g[2 * x + 1])
            }
        })
        .collect())
}

/// Cauchy–Born stored energy per unit area, in-column shell excluded.
pub fn cb_density(bonds: &BondTable, geometry: &LatticeGeometry, morse: Morse, f: &Mat2) -> Result<f64> {
    let det = f[0][0] * f[1][1] - f[0][1] * f[1][0];
    if det <= 0.0 {
        return Err(QcError::InvalidParameter(format!(
            "deformation gradient must have positive determinant, got {det}"
        )));
    }
    let mut w = 0.0;
    for c in &bonds.classes {
        let fb = mat_vec(f, c.cartesian);
        let r = (fb[0] * fb[0] + fb[1] * fb[1]).sqrt();
        if r <= MIN_BOND_LENGTH {
            return Err(QcError::DegenerateConfiguration { site: 0, length: r });
        }
        w += 0.5 * ProjectedPotential::new(morse, &c.offsets).value(r)?.0;
    }
    Ok(w / geometry.cell_area())
}

/// `∂²W/∂F_ij∂F_kl` at `F = I`.
pub fn cb_elasticity(bonds: &BondTable, geometry: &LatticeGeometry, morse: Morse) -> [[[[f64; 2]; 2]; 2]; 2] {
    let mut c = [[[[0.0; 2]; 2]; 2]; 2];
    let scale = 0.5 / geometry.cell_area();
    for class in &bonds.classes {
        let b = class.cartesian;
        let r = (b[0] * b[0] + b[1] * b[1]).sqrt();
        let n = [b[0] / r, b[1] / r];
        let pot = ProjectedPotential::new(morse, &class.offsets);
        let d1 = pot.eval_sq(r * r).1;
        let d2 = pot.second_derivative(r);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        let delta = if i == k { 1.0 } else { 0.0 };
                        c[i][j][k][l] +=
                            scale * ((d2 - d1) * n[i] * n[k] + d1 * delta) * b[j] * b[l];
                    }
                }
            }
        }
    }
    c
}

/// Lamé constants `(λ, μ)` of the least-squares isotropic fit to the planar
/// Cauchy–Born moduli, and the plane-strain Poisson ratio `λ/(2(λ+μ))`.
pub fn isotropic_fit(bonds: &BondTable, geometry: &LatticeGeometry, morse: Morse) -> (f64, f64, f64) {
    let c = cb_elasticity(bonds, geometry, morse);
    let (c11, c22, c12, c66) = (c[0][0][0][0], c[1][1][1][1], c[0][0][1][1], c[0][1][0][1]);
    let s1 = c11 + c22 + 2.0 * c12;
    let s2 = c11 + c22 + 2.0 * c66;
    let mu = (s2 - 0.5 * s1) / 4.0;
    let lambda = s1 / 4.0 - mu;
    (lambda, mu, lambda / (2.0 * (lambda + mu)))
}

/// Site nearest to the `⟨ν1, ν2⟩` point, if it is a lattice site of `domain`.
pub fn site_at(domain: &Domain, nu1: f64, nu2: f64) -> Option<usize> {
    domain.index_of(LatticePoint::from_nu(nu1, nu2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{BoundaryStyle, CbStencil, DomainSpec, Region};
    use crate::potentials::psi;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const A: f64 = 1.3338;

    fn small(region: Region) -> Domain {
        let spec = DomainSpec {
            columns: 12,
            rows: 8,
            boundary: BoundaryStyle::FullPerimeter,
            boundary_depth: 2,
            region,
        };
        Domain::build(spec, A, CbStencil::Paired).unwrap()
    }

    fn mixed() -> Domain {
        small(Region::Box {
            nu1: [4.0, 7.0],
            nu2: [3.0, 5.0],
        })
    }

    fn random_field(n: usize, amp: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..2 * n).map(|_| rng.gen_range(-amp..amp)).collect()
    }

    const KINDS: [ModelKind; 4] = [
        ModelKind::Atomistic,
        ModelKind::CauchyBorn,
        ModelKind::Qce,
        ModelKind::Qnl,
    ];

    #[test]
    fn reference_site_energy_is_half_psi() {
        let d = mixed();
        let m = Morse::default();
        let u = vec![0.0; 2 * d.len()];
        let x = site_at(&d, 6.0, 4.0).unwrap();
        for kind in KINDS {
            let e = site_energy(kind, &d, m, &u, x).unwrap();
            assert!((e - 0.5 * psi(&m, A)).abs() < 1e-12, "{kind}");
        }
    }

    #[test]
    fn merged_terms_reproduce_site_sums() {
        let d = mixed();
        let m = Morse::default();
        let u = random_field(d.len(), 0.01 * A, 3);
        for kind in KINDS {
            let model = Model::new(kind, &d, m).unwrap();
            let direct: f64 = (0..d.len())
                .map(|x| site_energy(kind, &d, m, &u, x).unwrap())
                .sum();
            let e = model.energy(&u).unwrap();
            assert!((e - direct).abs() < 1e-10 * direct.abs(), "{kind}");
        }
        let atomistic = Model::new(ModelKind::Atomistic, &d, m).unwrap();
        assert!(atomistic.term_count() * 2 <= d.len() * 18);
    }

    #[test]
    fn translation_invariance_and_zero_gradient() {
        let d = mixed();
        let m = Morse::default();
        let zero = vec![0.0; 2 * d.len()];
        let shift: Vec<f64> = (0..d.len()).flat_map(|_| [0.3, -0.2]).collect();
        for kind in KINDS {
            let model = Model::new(kind, &d, m).unwrap();
            let e0 = model.energy(&zero).unwrap();
            assert!((model.energy(&shift).unwrap() - e0).abs() < 1e-9);
            let g = model.gradient(&zero).unwrap();
            let largest = d
                .free_sites()
                .map(|x| g[2 * x].hypot(g[2 * x + 1]))
                .fold(0.0, f64::max);
            // individual shells carry force in the reference lattice, so the
            // energy-based coupling is not force-free there
            if kind == ModelKind::Qce {
                assert!(largest > 1e-3, "{largest}");
            } else {
                assert!(largest < 1e-12, "{kind}: {largest}");
            }
        }
    }

    #[test]
    fn gradient_matches_differences() {
        let d = mixed();
        let m = Morse::default();
        let u = random_field(d.len(), 0.01 * A, 11);
        for kind in KINDS {
            let model = Model::new(kind, &d, m).unwrap();
            let g = model.gradient(&u).unwrap();
            let scale = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let h = 1e-6;
            let mut up = u.clone();
            for k in 0..u.len() {
                up[k] = u[k] + h;
                let ep = model.energy_change(&u, &diff(&up, &u), None).unwrap();
                up[k] = u[k] - h;
                let em = model.energy_change(&u, &diff(&up, &u), None).unwrap();
                up[k] = u[k];
                let fd = (ep - em) / (2.0 * h);
                assert!((fd - g[k]).abs() <= 1e-6 * scale, "{kind} dof {k}: {fd} vs {}", g[k]);
            }
        }
    }

    fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x - y).collect()
    }

    #[test]
    fn energy_change_matches_direct_difference() {
        let d = mixed();
        let m = Morse::default();
        let u = random_field(d.len(), 0.01 * A, 5);
        let du = random_field(d.len(), 0.005 * A, 6);
        let v: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a + b).collect();
        for kind in KINDS {
            let model = Model::new(kind, &d, m).unwrap();
            let mut g = vec![0.0; u.len()];
            let de = model.energy_change(&u, &du, Some(&mut g)).unwrap();
            let direct = model.energy(&v).unwrap() - model.energy(&u).unwrap();
            assert!((de - direct).abs() < 1e-9);
            let gv = model.gradient(&v).unwrap();
            for k in 0..g.len() {
                assert!((g[k] - gv[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn model_collapse() {
        let d = small(Region::AllAtomistic);
        let m = Morse::default();
        let u = random_field(d.len(), 0.01 * A, 9);
        let ea = Model::new(ModelKind::Atomistic, &d, m).unwrap().energy(&u).unwrap();
        for kind in [ModelKind::Qce, ModelKind::Qnl] {
            let e = Model::new(kind, &d, m).unwrap().energy(&u).unwrap();
            assert!((e - ea).abs() < 1e-10 * ea.abs());
        }
        let qcf = QcfOperator::new(&d, m).unwrap().force(&u).unwrap();
        let ga = Model::new(ModelKind::Atomistic, &d, m).unwrap().gradient(&u).unwrap();
        for k in 0..qcf.len() {
            assert_eq!(qcf[k], -ga[k]);
        }

        let dc = small(Region::AllContinuum);
        let ec = Model::new(ModelKind::CauchyBorn, &dc, m).unwrap().energy(&u).unwrap();
        for kind in [ModelKind::Qce, ModelKind::Qnl] {
            let e = Model::new(kind, &dc, m).unwrap().energy(&u).unwrap();
            assert!((e - ec).abs() < 1e-10 * ec.abs());
        }
    }

    #[test]
    fn homogeneous_interior_energies_agree() {
        let d = mixed();
        let m = Morse::default();
        let f = [[1.004, 0.007], [-0.003, 0.995]];
        let u = homogeneous_field(&d, &f);
        let x = site_at(&d, 6.0, 4.0).unwrap();
        let ea = site_energy(ModelKind::Atomistic, &d, m, &u, x).unwrap();
        let ec = site_energy(ModelKind::CauchyBorn, &d, m, &u, x).unwrap();
        assert!((ea - ec).abs() < 1e-12);
        let w = cb_density(d.bonds(), d.geometry(), m, &f).unwrap();
        let shell: f64 = d.bonds().column_shell.iter().map(|&q| m.value(q)).sum();
        assert!((w * d.geometry().cell_area() + 0.5 * shell - ea).abs() < 1e-12);
    }

    #[test]
    fn locality() {
        let d = mixed();
        let m = Morse::default();
        let model = Model::new(ModelKind::Atomistic, &d, m).unwrap();
        let u = random_field(d.len(), 0.01 * A, 1);
        let x = site_at(&d, 6.0, 4.0).unwrap();
        let mut v = u.clone();
        v[2 * x] += 0.01;
        let far = site_at(&d, 8.5, 5.5).unwrap();
        let near = site_at(&d, 7.5, 4.5).unwrap();
        let kind = ModelKind::Atomistic;
        assert_eq!(
            site_energy(kind, &d, m, &u, far).unwrap(),
            site_energy(kind, &d, m, &v, far).unwrap()
        );
        assert_ne!(
            site_energy(kind, &d, m, &u, near).unwrap(),
            site_energy(kind, &d, m, &v, near).unwrap()
        );
        assert!(model.energy(&v).unwrap() != model.energy(&u).unwrap());
    }

    #[test]
    fn degenerate_bonds_are_rejected() {
        let d = mixed();
        let m = Morse::default();
        let model = Model::new(ModelKind::Atomistic, &d, m).unwrap();
        let x = site_at(&d, 6.0, 4.0).unwrap();
        let y = site_at(&d, 6.5, 4.5).unwrap();
        let mut u = vec![0.0; 2 * d.len()];
        let (px, py) = (d.cartesian(x), d.cartesian(y));
        u[2 * y] = px[0] - py[0];
        u[2 * y + 1] = px[1] - py[1];
        assert!(matches!(
            model.energy(&u),
            Err(QcError::DegenerateConfiguration { .. })
        ));
    }

    #[test]
    fn cb_density_properties() {
        let t = BondTable::build(A, CbStencil::Paired).unwrap();
        let g = LatticeGeometry::new(A).unwrap();
        let m = Morse::default();
        let w0 = cb_density(&t, &g, m, &IDENTITY).unwrap();
        let shell: f64 = t.column_shell.iter().map(|&q| m.value(q)).sum();
        assert!((w0 - (0.5 * psi(&m, A) - 0.5 * shell) / g.cell_area()).abs() < 1e-12);
        let f = [[1.01, 0.02], [0.005, 0.98]];
        let mirrored = [[f[0][0], -f[0][1]], [-f[1][0], f[1][1]]];
        let (a, b) = (
            cb_density(&t, &g, m, &f).unwrap(),
            cb_density(&t, &g, m, &mirrored).unwrap(),
        );
        assert!((a - b).abs() < 1e-12);
        assert!(cb_density(&t, &g, m, &[[1.0, 0.0], [0.0, -1.0]]).is_err());
    }

    #[test]
    fn elasticity_matches_density_differences() {
        let a = crate::potentials::equilibrium_lattice_constant(&Morse::default()).unwrap();
        let t = BondTable::build(a, CbStencil::Paired).unwrap();
        let g = LatticeGeometry::new(a).unwrap();
        let m = Morse::default();
        let c = cb_elasticity(&t, &g, m);
        let w = |f: &Mat2| cb_density(&t, &g, m, f).unwrap();
        let h = 1e-4;
        for (i, j, k, l) in [(0, 0, 0, 0), (1, 1, 1, 1), (0, 0, 1, 1), (0, 1, 0, 1), (0, 1, 1, 0)] {
            let at = |si: f64, sk: f64| {
                let mut f = IDENTITY;
                f[i][j] += si;
                f[k][l] += sk;
                w(&f)
            };
            let fd = (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h);
            assert!((fd - c[i][j][k][l]).abs() < 1e-4 * c[0][0][0][0].abs(), "{i}{j}{k}{l}: {fd}");
        }
        let (lambda, mu, nu) = isotropic_fit(&t, &g, m);
        assert!(lambda > 0.0 && mu > 0.0);
        assert!(nu > 0.0 && nu < 0.5);
    }

    fn patch_residuals(stencil: CbStencil, f: &Mat2) -> (f64, f64, f64, f64) {
        let spec = DomainSpec {
            columns: 16,
            rows: 10,
            boundary: BoundaryStyle::FullPerimeter,
            boundary_depth: 2,
            region: Region::Box {
                nu1: [5.0, 10.0],
                nu2: [3.0, 6.0],
            },
        };
        let d = Domain::build(spec, A, stencil).unwrap();
        let m = Morse::default();
        let scale = bond_force_scale(d.bonds(), m, f);
        let worst = |v: Vec<f64>| v.into_iter().fold(0.0, f64::max) / scale;
        let qnl = worst(ghost_force_profile(ModelKind::Qnl, &d, m, f).unwrap());
        let qce = worst(ghost_force_profile(ModelKind::Qce, &d, m, f).unwrap());
        let cb = worst(ghost_force_profile(ModelKind::CauchyBorn, &d, m, f).unwrap());
        let force = QcfOperator::new(&d, m)
            .unwrap()
            .force(&homogeneous_field(&d, f))
            .unwrap();
        let qcf = worst(
            d.free_sites()
                .map(|x| force[2 * x].hypot(force[2 * x + 1]))
                .collect(),
        );
        (qnl, qcf, qce, cb)
    }

    #[test]
    fn patch_test_by_stencil() {
        let f = [[1.006, 0.011], [-0.004, 0.993]];
        for stencil in [CbStencil::Paired, CbStencil::Literal] {
            let (qnl, qcf, qce, cb) = patch_residuals(stencil, &f);
            assert!(qnl < 1e-10, "{stencil}: qnl {qnl}");
            assert!(qcf < 1e-10, "{stencil}: qcf {qcf}");
            assert!(cb < 1e-10, "{stencil}: cb {cb}");
            assert!(qce > 1e-3, "{stencil}: qce {qce}");
        }
        // the three-term ⟨1,1⟩ chain is not symmetric about the bond midpoint
        let (qnl, _, _, _) = patch_residuals(CbStencil::Chain, &f);
        assert!(qnl > 1e-6, "chain: qnl {qnl}");
    }
}
