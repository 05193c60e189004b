//! Fixed instances shared by the benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rdars_core::array::{los_channels, ChannelSet};
use rdars_core::campaign::drop_ues;
use rdars_core::scenario::{Geometry, SystemConfig};
use rdars_core::validation::reference_scenario;

pub struct Fixture {
    pub geometry: Geometry,
    pub config: SystemConfig,
    pub channels: ChannelSet,
}

/// Reference layout with the given sizes and one seeded UE drop.
pub fn fixture(n_tx: usize, n: usize, a: usize, k: usize, seed: u64) -> Fixture {
    let sc = reference_scenario(n_tx, n, a, k);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ues = drop_ues(sc.ue_center, sc.ue_radius, k, &mut rng).expect("valid drop radius");
    let geometry = sc.geometry(&ues).expect("reference layout is valid");
    let channels = los_channels(&geometry, &sc.config);
    Fixture {
        geometry,
        config: sc.config,
        channels,
    }
}
