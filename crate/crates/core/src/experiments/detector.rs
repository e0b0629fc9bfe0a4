//! Instability detection by slip between neighbouring atoms.

use crate::lattice::{Domain, LatticePoint};

/// Monitors the relative displacement of chosen site pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct Detector {
    pairs: Vec<(usize, usize)>,
    /// Unit slip direction; `None` measures the full relative displacement.
    tangent: Option<[f64; 2]>,
    pub threshold: f64,
}

impl Detector {
    pub fn new(pairs: Vec<(usize, usize)>, tangent: Option<[f64; 2]>, threshold: f64) -> Self {
        Self {
            pairs,
            tangent,
            threshold,
        }
    }

    /// Nearest-neighbour pairs between the rows `ν2 = row` and `ν2 = row + ½`,
    /// measured along `V1`.
    pub fn dipole_separation(domain: &Domain, row: i32, threshold: f64) -> Self {
        let mut pairs = Vec::new();
        for (x, &p) in domain.sites().iter().enumerate() {
            if p.j != 2 * row {
                continue;
            }
            for di in [-1, 1] {
                if let Some(y) = domain.index_of(p + LatticePoint::new(di, 1)) {
                    pairs.push((x, y));
                }
            }
        }
        Self::new(pairs, Some([1.0, 0.0]), threshold)
    }

    /// Nearest-neighbour pairs on either side of the line through `point`
    /// with direction `direction` (both in `⟨ν1, ν2⟩`), measured along it.
    pub fn slip_line(domain: &Domain, point: [f64; 2], direction: [f64; 2], threshold: f64) -> Self {
        let g = domain.geometry();
        let side = |nu: [f64; 2]| direction[0] * (nu[1] - point[1]) - direction[1] * (nu[0] - point[0]);
        let nn = [LatticePoint::new(2, 0), LatticePoint::new(1, 1), LatticePoint::new(-1, 1)];
        let mut pairs = Vec::new();
        for (x, &p) in domain.sites().iter().enumerate() {
            for d in nn {
                if let Some(y) = domain.index_of(p + d) {
                    if side(p.nu()) * side(domain.site(y).nu()) < 0.0 {
                        pairs.push((x, y));
                    }
                }
            }
        }
        let t = [direction[0] * g.v1_length(), direction[1] * g.v2_length()];
        let len = t[0].hypot(t[1]);
        Self::new(pairs, Some([t[0] / len, t[1] / len]), threshold)
    }

    /// Every free nearest-neighbour bond, measured in full.
    pub fn all_bonds(domain: &Domain, threshold: f64) -> Self {
        let nn = [LatticePoint::new(2, 0), LatticePoint::new(1, 1), LatticePoint::new(-1, 1)];
        let mut pairs = Vec::new();
        for (x, &p) in domain.sites().iter().enumerate() {
            for d in nn {
                if let Some(y) = domain.index_of(p + d) {
                    if !(domain.is_clamped(x) && domain.is_clamped(y)) {
                        pairs.push((x, y));
                    }
                }
            }
        }
        Self::new(pairs, None, threshold)
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Largest change of relative displacement over the monitored pairs.
    pub fn measure(&self, before: &[f64], after: &[f64]) -> f64 {
        let rel = |u: &[f64], x: usize, y: usize| [u[2 * y] - u[2 * x], u[2 * y + 1] - u[2 * x + 1]];
        self.pairs
            .iter()
            .map(|&(x, y)| {
                let (a, b) = (rel(before, x, y), rel(after, x, y));
                let d = [b[0] - a[0], b[1] - a[1]];
                match self.tangent {
                    Some(t) => (d[0] * t[0] + d[1] * t[1]).abs(),
                    None => d[0].hypot(d[1]),
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn fires(&self, before: &[f64], after: &[f64]) -> bool {
        self.measure(before, after) > self.threshold
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{CbStencil, DomainSpec, Region};

    fn setup() -> (Domain, Detector) {
        let d = Domain::build(DomainSpec::dipole(Region::AllAtomistic), 1.3338, CbStencil::Paired)
            .unwrap();
        let b = d.geometry().burgers();
        let det = Detector::dipole_separation(&d, 30, 0.5 * b);
        (d, det)
    }

    #[test]
    fn identical_fields_do_not_fire() {
        let (d, det) = setup();
        let u: Vec<f64> = (0..2 * d.len()).map(|k| (k as f64).sin()).collect();
        assert!(!det.fires(&u, &u));
        assert_eq!(det.pairs().len(), 2 * 75 - 1);
    }

    #[test]
    fn rigid_slip_fires_and_translation_does_not() {
        let (d, det) = setup();
        let b = d.geometry().burgers();
        let u = vec![0.0; 2 * d.len()];
        let mut slipped = u.clone();
        let mut moved = u.clone();
        for (i, p) in d.sites().iter().enumerate() {
            if p.j > 60 {
                slipped[2 * i] = b;
            }
            moved[2 * i] = 0.3;
            moved[2 * i + 1] = -0.1;
        }
        assert!(det.fires(&u, &slipped));
        assert!(!det.fires(&u, &moved));
        let all = Detector::all_bonds(&d, 0.5 * b);
        let line = Detector::slip_line(&d, [0.0, 30.25], [1.0, 0.0], 0.5 * b);
        let mut a = line.pairs().to_vec();
        let mut c = det.pairs().to_vec();
        a.sort();
        c.sort();
        assert_eq!(a, c);
        assert!(line.fires(&u, &slipped));
        assert!(all.fires(&u, &slipped));
        assert!(!all.fires(&u, &moved));
    }
}
