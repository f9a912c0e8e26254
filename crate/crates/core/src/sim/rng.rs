use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Named random stream. Streams are keyed by `(root_seed, entity_label)` so
/// adding an entity never shifts another entity's draws.
#[derive(Debug, Clone)]
pub struct RngStream {
    root_seed: u64,
    label: String,
    draws: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Number of 32/64-bit words (or byte fills) drawn so far.
    pub fn draw_counter(&self) -> u64 {
        self.draws
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Child stream for a sub-component, e.g. `vehicle/3` → `vehicle/3/types`.
    pub fn child(&self, suffix: &str) -> RngStream {
        derive_stream(self.root_seed, &format!("{}/{}", self.label, suffix))
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.draws += 1;
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.draws += 1;
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.draws += 1;
        self.inner.fill_bytes(dst)
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325_u64;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic stream for `entity_label` under `root_seed`.
///
/// # Panics
/// If `entity_label` is empty.
pub fn derive_stream(root_seed: u64, entity_label: &str) -> RngStream {
    assert!(!entity_label.is_empty(), "entity label must be non-empty");
    let mut seed = [0u8; 32];
    let a = splitmix64(root_seed ^ fnv1a64(entity_label.as_bytes()));
    let b = splitmix64(a ^ root_seed.rotate_left(17));
    let c = splitmix64(b ^ 0x5851_f42d_4c95_7f2d);
    let d = splitmix64(c ^ fnv1a64(entity_label.as_bytes()).rotate_left(29));
    for (chunk, word) in seed.chunks_exact_mut(8).zip([a, b, c, d]) {
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    RngStream {
        root_seed,
        label: entity_label.to_string(),
        draws: 0,
        inner: ChaCha8Rng::from_seed(seed),
    }
}
