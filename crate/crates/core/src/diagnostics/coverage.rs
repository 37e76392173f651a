use std::collections::HashMap;

use rayon::prelude::*;

use crate::gaussian::sq_dist;

/// Dimensions up to which coverage queries use a cell hash.
const HASHED_MAX_DIM: usize = 3;

/// Fraction of `reference` points lying within Euclidean distance `h` of at
/// least one particle. Both buffers are row-major with `dim` columns.
///
/// This estimates the exploration rate `Z = ∫_Ω π` for `Ω` the union of
/// `h`-balls around the particles when `reference` holds exact draws from `π`.
pub fn estimate_z(particles: &[f64], reference: &[f64], dim: usize, h: f64) -> f64 {
    let k = reference.len() / dim;
    if k == 0 {
        return 0.0;
    }
    let covered: usize = if dim <= HASHED_MAX_DIM {
        let index = CellIndex::new(particles, dim, h);
        reference
            .par_chunks_exact(dim)
            .map(|w| usize::from(index.covers(w)))
            .sum()
    } else {
        let h2 = h * h;
        reference
            .par_chunks_exact(dim)
            .map(|w| usize::from(particles.chunks_exact(dim).any(|p| sq_dist(p, w) <= h2)))
            .sum()
    };
    covered as f64 / k as f64
}

/// Particles bucketed into cubic cells of side `h`; a ball of radius `h`
/// around a query touches only the `3^d` neighbouring cells.
struct CellIndex<'a> {
    particles: &'a [f64],
    dim: usize,
    h: f64,
    cells: HashMap<Vec<i64>, Vec<usize>>,
}

impl<'a> CellIndex<'a> {
    fn new(particles: &'a [f64], dim: usize, h: f64) -> Self {
        let mut cells: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for (i, p) in particles.chunks_exact(dim).enumerate() {
            cells.entry(cell_of(p, h)).or_default().push(i);
        }
        Self {
            particles,
            dim,
            h,
            cells,
        }
    }

    fn covers(&self, w: &[f64]) -> bool {
        let centre = cell_of(w, self.h);
        let h2 = self.h * self.h;
        let neighbours = 3usize.pow(self.dim as u32);
        let mut key = centre.clone();
        for code in 0..neighbours {
            let mut c = code;
            for (k, base) in key.iter_mut().zip(&centre) {
                *k = base + (c % 3) as i64 - 1;
                c /= 3;
            }
            if let Some(members) = self.cells.get(&key) {
                if members
                    .iter()
                    .any(|&i| sq_dist(&self.particles[i * self.dim..(i + 1) * self.dim], w) <= h2)
                {
                    return true;
                }
            }
        }
        false
    }
}

fn cell_of(p: &[f64], h: f64) -> Vec<i64> {
    p.iter().map(|v| (v / h).floor() as i64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn trivial_cases() {
        let pts = [0.0, 0.0, 1.0, 1.0];
        assert_eq!(estimate_z(&pts, &pts, 2, 0.05), 1.0);
        assert_eq!(estimate_z(&pts, &[5.0, 5.0, -5.0, 3.0], 2, 0.05), 0.0);
        assert_eq!(estimate_z(&pts, &[0.01, 0.0, 3.0, 3.0], 2, 0.05), 0.5);
    }

    #[test]
    fn hashed_and_brute_force_agree() {
        let mut rng = crate::rng::stream(3, crate::rng::StreamRole::Reference, 0);
        for dim in 1..=3 {
            let particles: Vec<f64> = (0..300 * dim)
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            let reference: Vec<f64> = (0..2000 * dim)
                .map(|_| rng.random_range(-1.2..1.2))
                .collect();
            let h = 0.1;
            let brute = reference
                .chunks_exact(dim)
                .filter(|w| particles.chunks_exact(dim).any(|p| sq_dist(p, w) <= h * h))
                .count() as f64
                / 2000.0;
            assert_eq!(estimate_z(&particles, &reference, dim, h), brute);
        }
    }

    #[test]
    fn adding_particles_never_decreases_coverage() {
        let mut rng = crate::rng::stream(8, crate::rng::StreamRole::Reference, 0);
        let reference: Vec<f64> = (0..4000).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mut particles = Vec::new();
        let mut last = 0.0;
        for _ in 0..50 {
            particles.push(rng.random_range(-2.0..2.0));
            particles.push(rng.random_range(-2.0..2.0));
            let z = estimate_z(&particles, &reference, 2, 0.2);
            assert!(z >= last);
            last = z;
        }
    }
}
