use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::grid::{Field, Grid};
use crate::optimize::random_smooth_field;

/// Smooth random field with `max |u| = amplitude`.
pub fn smooth_field(g: &Grid, seed: u64, amplitude: f64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_smooth_field(g, &mut rng).scaled(amplitude)
}
