use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seeded stream type used throughout the simulator.
pub type SimRng = ChaCha8Rng;

/// Derives independent, reproducible RNG streams from a master seed and a label
/// such as `"mobility/node17"`. Drawing from one stream never perturbs another.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngRegistry {
    master_seed: u64,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngRegistry {
    pub fn new(master_seed: u64) -> Self {
        RngRegistry { master_seed }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream(&self, label: &str) -> SimRng {
        let mut state = self.master_seed ^ fnv1a(label.as_bytes()).rotate_left(17);
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }

    pub fn node_stream(&self, family: &str, node: usize) -> SimRng {
        self.stream(&format!("{family}/node{node}"))
    }
}
