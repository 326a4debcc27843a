//! Seeded random fields for the Hölder audit.

use std::sync::Arc;

use hardywave_core::grid::{sample, RadialField, RadialGrid};
use hardywave_core::Result;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Sum of one to four shells with random radii and levels in `[-1, 1]`.
fn step_field(grid: &Arc<RadialGrid>, rng: &mut ChaCha8Rng) -> Result<RadialField> {
    let r_max = grid.r_max();
    let shells: Vec<(f64, f64, f64)> = (0..rng.gen_range(1..=4))
        .map(|_| {
            let (a, b) = (rng.gen_range(0.0..r_max), rng.gen_range(0.0..r_max));
            (a.min(b), a.max(b), rng.gen_range(-1.0..=1.0))
        })
        .collect();
    sample(grid, |r| {
        shells.iter().filter(|(a, b, _)| *a <= r && r < *b).map(|s| s.2).sum()
    })
}

/// `size` pairs `(f, g)` drawn from a generator seeded with `seed`.
pub fn holder_corpus(grid: &Arc<RadialGrid>, size: usize, seed: u64) -> Result<Vec<(RadialField, RadialField)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..size)
        .map(|_| Ok((step_field(grid, &mut rng)?, step_field(grid, &mut rng)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use hardywave_core::grid::make_grid;

    #[test]
    fn seeded_corpus_is_reproducible() {
        let grid = make_grid(5, 2.0, 64).unwrap();
        let a = holder_corpus(&grid, 5, 11).unwrap();
        let b = holder_corpus(&grid, 5, 11).unwrap();
        let c = holder_corpus(&grid, 5, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a
            .iter()
            .all(|(f, g)| f.values().iter().chain(g.values()).all(|v| v.abs() <= 4.0)));
    }
}
