//! Unit-diameter sticky spheres: pair contact constraints `|x_i - x_j|^2 - 1`
//! and optional hard-wall height constraints `x_{i,z}`.

use crate::constraint::ConstraintSystem;

#[derive(Clone, Debug)]
pub struct SphereSystem {
    dim: usize,
    n_particles: usize,
    pairs: Vec<(usize, usize)>,
    /// Particles with a wall-height function, appended after the pairs.
    walls: Vec<usize>,
}

impl SphereSystem {
    pub fn new(dim: usize, n_particles: usize, pairs: Vec<(usize, usize)>, walls: Vec<usize>) -> Self {
        assert!(pairs.iter().all(|&(i, j)| i < n_particles && j < n_particles && i != j));
        assert!(walls.iter().all(|&i| i < n_particles));
        SphereSystem { dim, n_particles, pairs, walls }
    }

    /// All pairs `i < j` in lexicographic order.
    pub fn all_pairs(n_particles: usize) -> Vec<(usize, usize)> {
        (0..n_particles).flat_map(|i| (i + 1..n_particles).map(move |j| (i, j))).collect()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn walls(&self) -> &[usize] {
        &self.walls
    }

    pub fn position<'x>(&self, x: &'x [f64], i: usize) -> &'x [f64] {
        &x[i * self.dim..(i + 1) * self.dim]
    }

    pub fn distance(&self, x: &[f64], i: usize, j: usize) -> f64 {
        self.position(x, i).iter().zip(self.position(x, j)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }
}

impl ConstraintSystem for SphereSystem {
    fn n_vars(&self) -> usize {
        self.dim * self.n_particles
    }

    fn n_fcns(&self) -> usize {
        self.pairs.len() + self.walls.len()
    }

    fn eval(&self, k: usize, x: &[f64]) -> f64 {
        if let Some(&(i, j)) = self.pairs.get(k) {
            let d = self.distance(x, i, j);
            d * d - 1.0
        } else {
            let p = self.walls[k - self.pairs.len()];
            x[p * self.dim + self.dim - 1]
        }
    }

    fn grad(&self, k: usize, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        if let Some(&(i, j)) = self.pairs.get(k) {
            for c in 0..d {
                let diff = 2.0 * (x[i * d + c] - x[j * d + c]);
                out[i * d + c] = diff;
                out[j * d + c] = -diff;
            }
        } else {
            let p = self.walls[k - self.pairs.len()];
            out[p * d + d - 1] = 1.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_gradient_matches_formula() {
        let s = SphereSystem::new(2, 3, vec![(0, 1), (1, 2), (0, 2)], vec![]);
        let x = [0.0, 0.0, 1.0, 0.0, 0.5, 0.8];
        let mut g = vec![0.0; 6];
        s.grad(0, &x, &mut g);
        assert_eq!(g, vec![-2.0, 0.0, 2.0, 0.0, 0.0, 0.0]);
        assert_eq!(s.eval(0, &x), 0.0);
    }

    #[test]
    fn wall_functions_follow_pairs() {
        let s = SphereSystem::new(3, 2, vec![(0, 1)], vec![0, 1]);
        let x = [0.0, 0.0, 0.25, 1.0, 0.0, 0.75];
        assert_eq!(s.n_fcns(), 3);
        assert_eq!(s.eval(1, &x), 0.25);
        assert_eq!(s.eval(2, &x), 0.75);
        let mut g = vec![0.0; 6];
        s.grad(2, &x, &mut g);
        assert_eq!(g, vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn all_pairs_order() {
        assert_eq!(SphereSystem::all_pairs(3), vec![(0, 1), (0, 2), (1, 2)]);
        assert_eq!(SphereSystem::all_pairs(6).len(), 15);
    }
}
