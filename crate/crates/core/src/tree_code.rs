//! Outer tree code: bit partitioning, random GF(2) parity generators, encoding
//! and per-stage parity checks.
//!
//! Sub-block `s` carries `b_s` information bits followed by `l_s` parity bits,
//! `b_s + l_s = J`. The parity bits of stage `s` are a GF(2) combination of
//! the information bits of all earlier stages. A sub-block maps to the
//! codeword index formed by reading its `J` bits most-significant-bit first,
//! so the information bits are the high `b_s` bits and the parity the low `l_s`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};

/// Widest sub-block supported; indices are stored as `u32`.
pub const MAX_BLOCK_BITS: usize = 30;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeCodeProfile {
    total_bits: usize,
    block_bits: usize,
    data: Vec<usize>,
    parity: Vec<usize>,
}

/// Validates a data profile and derives the parity profile.
pub fn make_profile(total_bits: usize, stages: usize, block_bits: usize, data: &[usize]) -> Result<TreeCodeProfile> {
    if block_bits == 0 || block_bits > MAX_BLOCK_BITS {
        return Err(config_err(format!(
            "sub-block length {block_bits} outside 1..={MAX_BLOCK_BITS}"
        )));
    }
    if stages == 0 || data.len() != stages {
        return Err(config_err(format!(
            "data profile has {} entries for {stages} stages",
            data.len()
        )));
    }
    if data[0] != block_bits {
        return Err(config_err(format!(
            "first sub-block must be all data ({} != {block_bits})",
            data[0]
        )));
    }
    if let Some(&bad) = data.iter().find(|&&b| b > block_bits) {
        return Err(config_err(format!("data entry {bad} exceeds J = {block_bits}")));
    }
    let sum: usize = data.iter().sum();
    if sum != total_bits {
        return Err(config_err(format!(
            "data profile sums to {sum}, expected B = {total_bits}"
        )));
    }
    Ok(TreeCodeProfile {
        total_bits,
        block_bits,
        data: data.to_vec(),
        parity: data.iter().map(|b| block_bits - b).collect(),
    })
}

impl TreeCodeProfile {
    /// Builds a profile from explicit data and parity lists, as written in a
    /// configuration file.
    pub fn from_lists(data: &[usize], parity: &[usize]) -> Result<Self> {
        if data.is_empty() || data.len() != parity.len() {
            return Err(config_err("data and parity profiles must have equal, nonzero length"));
        }
        let block_bits = data[0] + parity[0];
        if let Some(s) = (0..data.len()).find(|&s| data[s] + parity[s] != block_bits) {
            return Err(config_err(format!(
                "stage {} has b + l = {}, expected {block_bits}",
                s + 1,
                data[s] + parity[s]
            )));
        }
        make_profile(data.iter().sum(), data.len(), block_bits, data)
    }

    pub fn total_bits(&self) -> usize {
        self.total_bits
    }

    pub fn stages(&self) -> usize {
        self.data.len()
    }

    pub fn block_bits(&self) -> usize {
        self.block_bits
    }

    /// Codebook size `2^J`.
    pub fn codebook_size(&self) -> usize {
        1 << self.block_bits
    }

    pub fn data(&self) -> &[usize] {
        &self.data
    }

    pub fn parity(&self) -> &[usize] {
        &self.parity
    }

    pub fn data_bits(&self, stage: usize) -> usize {
        self.data[stage]
    }

    pub fn parity_bits(&self, stage: usize) -> usize {
        self.parity[stage]
    }

    pub fn rate(&self) -> f64 {
        self.total_bits as f64 / (self.block_bits * self.stages()) as f64
    }

    /// Info part of a codeword index at `stage`.
    pub fn info_of(&self, stage: usize, index: u32) -> u32 {
        index >> self.parity[stage]
    }

    /// Parity part of a codeword index at `stage`.
    pub fn parity_of(&self, stage: usize, index: u32) -> u32 {
        index & low_mask(self.parity[stage])
    }

    pub fn index_of(&self, stage: usize, info: u32, parity: u32) -> u32 {
        (info << self.parity[stage]) | parity
    }
}

fn low_mask(bits: usize) -> u32 {
    if bits == 0 {
        0
    } else {
        u32::MAX >> (32 - bits)
    }
}

/// An information message of `B` bits (each entry 0 or 1).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Message(pub Vec<u8>);

impl Message {
    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn random<R: Rng + ?Sized>(bits: usize, rng: &mut R) -> Self {
        Message((0..bits).map(|_| rng.random::<bool>() as u8).collect())
    }

    /// Splits the message into per-stage info values (MSB first).
    pub fn blocks(&self, profile: &TreeCodeProfile) -> Result<Vec<u32>> {
        if self.0.len() != profile.total_bits() {
            return Err(Error::Length {
                what: "message bits",
                expected: profile.total_bits(),
                got: self.0.len(),
            });
        }
        let mut out = Vec::with_capacity(profile.stages());
        let mut pos = 0;
        for &b in profile.data() {
            out.push(bits_to_u32(&self.0[pos..pos + b]));
            pos += b;
        }
        Ok(out)
    }

    pub fn from_blocks(profile: &TreeCodeProfile, blocks: &[u32]) -> Self {
        let mut bits = Vec::with_capacity(profile.total_bits());
        for (&v, &b) in blocks.iter().zip(profile.data()) {
            push_bits(&mut bits, v, b);
        }
        Message(bits)
    }

    /// Recovers the message from the codeword indices of a coded message.
    pub fn from_indices(profile: &TreeCodeProfile, indices: &[u32]) -> Self {
        let blocks: Vec<u32> = indices
            .iter()
            .enumerate()
            .map(|(s, &i)| profile.info_of(s, i))
            .collect();
        Self::from_blocks(profile, &blocks)
    }
}

fn bits_to_u32(bits: &[u8]) -> u32 {
    bits.iter().fold(0, |acc, &b| (acc << 1) | (b & 1) as u32)
}

fn push_bits(out: &mut Vec<u8>, value: u32, width: usize) {
    for k in (0..width).rev() {
        out.push(((value >> k) & 1) as u8);
    }
}

/// Random parity generators `G_{i,s-1}` for all `i < s`.
///
/// Row `r` of the generator feeding target stage `t` from source stage `i`
/// is stored as an `l_t`-bit integer whose MSB is the first parity bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityMatrices {
    seed: u64,
    // rows[target][source][row]
    rows: Vec<Vec<Vec<u32>>>,
}

/// Draws every generator entry i.i.d. Bernoulli(1/2) from `seed`.
pub fn draw_parity_matrices(profile: &TreeCodeProfile, seed: u64) -> ParityMatrices {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stages = profile.stages();
    let mut rows = Vec::with_capacity(stages);
    for target in 0..stages {
        let mask = low_mask(profile.parity_bits(target));
        let per_source = (0..target)
            .map(|source| {
                if mask == 0 {
                    return Vec::new();
                }
                (0..profile.data_bits(source))
                    .map(|_| rng.random::<u32>() & mask)
                    .collect()
            })
            .collect();
        rows.push(per_source);
    }
    ParityMatrices { seed, rows }
}

impl ParityMatrices {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// True when no generator has a nonzero dimension.
    pub fn is_empty(&self) -> bool {
        self.rows.iter().flatten().all(|m| m.is_empty())
    }

    /// Rows of `G` from `source` into `target` (0-based stages).
    pub fn rows(&self, source: usize, target: usize) -> &[u32] {
        &self.rows[target][source]
    }

    /// Single entry `(row, col)` of the generator, `col` counted from the first
    /// parity bit.
    pub fn entry(&self, profile: &TreeCodeProfile, source: usize, target: usize, row: usize, col: usize) -> u8 {
        let l = profile.parity_bits(target);
        ((self.rows[target][source][row] >> (l - 1 - col)) & 1) as u8
    }

    /// Parity that info value `info` of `source` contributes to `target`.
    pub fn contribution(&self, source: usize, target: usize, info: u32) -> u32 {
        let rows = &self.rows[target][source];
        let width = rows.len();
        let mut acc = 0;
        for (r, &row) in rows.iter().enumerate() {
            if (info >> (width - 1 - r)) & 1 == 1 {
                acc ^= row;
            }
        }
        acc
    }
}

/// Tree-encoded message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedMessage {
    /// `[b(1), l(1), ..., b(S), l(S)]`, length `J * S`.
    pub bits: Vec<u8>,
    /// Codeword index transmitted in each sub-slot.
    pub indices: Vec<u32>,
}

pub fn tree_encode(message: &Message, profile: &TreeCodeProfile, matrices: &ParityMatrices) -> Result<CodedMessage> {
    let blocks = message.blocks(profile)?;
    let mut indices = Vec::with_capacity(profile.stages());
    let mut bits = Vec::with_capacity(profile.stages() * profile.block_bits());
    for s in 0..profile.stages() {
        let parity = stage_parity(&blocks[..s], s, matrices);
        let index = profile.index_of(s, blocks[s], parity);
        push_bits(&mut bits, index, profile.block_bits());
        indices.push(index);
    }
    Ok(CodedMessage { bits, indices })
}

/// Parity bits that stage `stage` must carry given the info values of stages
/// `0..stage`.
pub fn stage_parity(prefix_info: &[u32], stage: usize, matrices: &ParityMatrices) -> u32 {
    prefix_info
        .iter()
        .enumerate()
        .take(stage)
        .fold(0, |acc, (i, &v)| acc ^ matrices.contribution(i, stage, v))
}

/// True when every sub-block of `indices` carries the parity implied by its
/// prefix.
pub fn is_parity_consistent(indices: &[u32], profile: &TreeCodeProfile, matrices: &ParityMatrices) -> bool {
    if indices.len() != profile.stages() {
        return false;
    }
    let info: Vec<u32> = indices
        .iter()
        .enumerate()
        .map(|(s, &i)| profile.info_of(s, i))
        .collect();
    (0..profile.stages()).all(|s| profile.parity_of(s, indices[s]) == stage_parity(&info[..s], s, matrices))
}

/// Running parity accumulators for a partial path: entry `t` holds the parity
/// stage `t` must carry given the stages absorbed so far.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PendingParity(Vec<u32>);

impl PendingParity {
    pub fn new(stages: usize) -> Self {
        PendingParity(vec![0; stages])
    }

    pub fn absorb(&mut self, stage: usize, info: u32, matrices: &ParityMatrices) {
        for target in stage + 1..self.0.len() {
            self.0[target] ^= matrices.contribution(stage, target, info);
        }
    }

    pub fn expected(&self, stage: usize) -> u32 {
        self.0[stage]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn paper_data(j: usize) -> Vec<usize> {
        let mut d = vec![j];
        d.extend(std::iter::repeat_n(3, 28));
        d.extend([0, 0, 0]);
        d
    }

    #[test]
    fn baseline_profile() {
        let p = make_profile(94, 32, 10, &paper_data(10)).unwrap();
        let mut expect = vec![0];
        expect.extend(std::iter::repeat_n(7, 28));
        expect.extend([10, 10, 10]);
        assert_eq!(p.parity(), &expect[..]);
        assert!((p.rate() - 94.0 / 320.0).abs() < 1e-15);
    }

    #[test]
    fn eleven_bit_profile() {
        let p = make_profile(95, 32, 11, &paper_data(11)).unwrap();
        let mut expect = vec![0];
        expect.extend(std::iter::repeat_n(8, 28));
        expect.extend([11, 11, 11]);
        assert_eq!(p.parity(), &expect[..]);
    }

    #[test]
    fn single_block_profile_is_uncoded() {
        let p = make_profile(6, 1, 6, &[6]).unwrap();
        assert_eq!(p.rate(), 1.0);
        assert_eq!(p.parity(), &[0]);
    }

    #[test]
    fn profile_errors() {
        assert!(matches!(
            make_profile(95, 32, 10, &paper_data(10)),
            Err(Error::Config(_))
        ));
        assert!(matches!(make_profile(12, 3, 4, &[3, 4, 5]), Err(Error::Config(_))));
        assert!(make_profile(8, 2, 4, &[4, 4]).is_ok());
        assert!(TreeCodeProfile::from_lists(&[4, 2], &[0, 1]).is_err());
        let p = TreeCodeProfile::from_lists(&[4, 2, 0], &[0, 2, 4]).unwrap();
        assert_eq!(p.total_bits(), 6);
    }

    #[test]
    fn parity_draw_is_deterministic() {
        let p = make_profile(94, 32, 10, &paper_data(10)).unwrap();
        assert_eq!(draw_parity_matrices(&p, 7), draw_parity_matrices(&p, 7));
    }

    #[test]
    fn parity_draw_depends_on_seed() {
        let p = make_profile(8, 3, 4, &[4, 2, 2]).unwrap();
        for seed in 0..100u64 {
            let a = draw_parity_matrices(&p, 2 * seed);
            let b = draw_parity_matrices(&p, 2 * seed + 1);
            assert_ne!(a.rows, b.rows, "seed pair {seed}");
        }
    }

    #[test]
    fn uncoded_profile_has_no_generators() {
        let p = make_profile(4, 1, 4, &[4]).unwrap();
        assert!(draw_parity_matrices(&p, 1).is_empty());
        let q = make_profile(12, 3, 4, &[4, 4, 4]).unwrap();
        assert!(draw_parity_matrices(&q, 1).is_empty());
    }

    #[test]
    fn generator_shapes_follow_profile() {
        let p = make_profile(10, 4, 4, &[4, 3, 2, 1]).unwrap();
        let g = draw_parity_matrices(&p, 3);
        for t in 0..4 {
            for i in 0..t {
                assert_eq!(g.rows(i, t).len(), p.data_bits(i));
                for &row in g.rows(i, t) {
                    assert_eq!(row & !low_mask(p.parity_bits(t)), 0);
                }
            }
        }
    }

    #[test]
    fn zero_message_encodes_to_zero() {
        let p = make_profile(94, 32, 10, &paper_data(10)).unwrap();
        let g = draw_parity_matrices(&p, 1);
        let c = tree_encode(&Message(vec![0; 94]), &p, &g).unwrap();
        assert!(c.bits.iter().all(|&b| b == 0));
        assert!(c.indices.iter().all(|&i| i == 0));
        assert_eq!(c.bits.len(), 320);
    }

    #[test]
    fn encode_rejects_wrong_length() {
        let p = make_profile(8, 2, 4, &[4, 4]).unwrap();
        let g = draw_parity_matrices(&p, 1);
        assert!(matches!(
            tree_encode(&Message(vec![0; 7]), &p, &g),
            Err(Error::Length { .. })
        ));
    }

    #[test]
    fn hand_evaluated_gf2_product() {
        // With B = 4 and S = 2, J = 2 leaves stage 2 without parity, so use
        // J = 3: b = [3, 1], l = [0, 2], all-ones generator.
        let p = make_profile(4, 2, 3, &[3, 1]).unwrap();
        let mut g = draw_parity_matrices(&p, 0);
        g.rows[1][0] = vec![0b11, 0b11, 0b11];
        let u = Message(vec![1, 1, 0, 1]);
        let c = tree_encode(&u, &p, &g).unwrap();
        // l(2) = [1 1 0] * ones(3x2) = [1+1+0, 1+1+0] = [0, 0]
        assert_eq!(c.bits, vec![1, 1, 0, 1, 0, 0]);
        let u = Message(vec![1, 0, 0, 1]);
        let c = tree_encode(&u, &p, &g).unwrap();
        // l(2) = [1 0 0] * ones = [1, 1]
        assert_eq!(c.bits, vec![1, 0, 0, 1, 1, 1]);
        assert_eq!(c.indices, vec![0b100, 0b111]);
    }

    #[test]
    fn stage_parity_matches_encoder() {
        let p = make_profile(94, 32, 10, &paper_data(10)).unwrap();
        let g = draw_parity_matrices(&p, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let u = Message::random(94, &mut rng);
            let blocks = u.blocks(&p).unwrap();
            let c = tree_encode(&u, &p, &g).unwrap();
            for s in 0..32 {
                assert_eq!(stage_parity(&blocks[..s], s, &g), p.parity_of(s, c.indices[s]));
            }
            assert!(is_parity_consistent(&c.indices, &p, &g));
        }
    }

    #[test]
    fn second_stage_parity_depends_only_on_root() {
        let p = make_profile(14, 3, 6, &[6, 4, 4]).unwrap();
        let g = draw_parity_matrices(&p, 2);
        let a = stage_parity(&[0b101010, 3], 1, &g);
        let b = stage_parity(&[0b101010, 9], 1, &g);
        assert_eq!(a, b);
        assert_eq!(stage_parity(&[0, 0], 2, &g), 0);
    }

    #[test]
    fn pending_parity_tracks_stage_parity() {
        let p = make_profile(94, 32, 10, &paper_data(10)).unwrap();
        let g = draw_parity_matrices(&p, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = Message::random(94, &mut rng);
        let blocks = u.blocks(&p).unwrap();
        let mut pending = PendingParity::new(32);
        for s in 0..32 {
            assert_eq!(pending.expected(s), stage_parity(&blocks[..s], s, &g));
            pending.absorb(s, blocks[s], &g);
        }
    }

    proptest! {
        #[test]
        fn encoding_is_gf2_linear(seed in any::<u64>(), a in any::<u64>(), b in any::<u64>()) {
            let p = make_profile(44, 16, 8, &[8, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 0, 0, 0]).unwrap();
            let g = draw_parity_matrices(&p, seed);
            let mut ra = ChaCha8Rng::seed_from_u64(a);
            let mut rb = ChaCha8Rng::seed_from_u64(b);
            let u1 = Message::random(44, &mut ra);
            let u2 = Message::random(44, &mut rb);
            let sum = Message(u1.0.iter().zip(&u2.0).map(|(x, y)| x ^ y).collect());
            let c1 = tree_encode(&u1, &p, &g).unwrap();
            let c2 = tree_encode(&u2, &p, &g).unwrap();
            let cs = tree_encode(&sum, &p, &g).unwrap();
            let xor: Vec<u8> = c1.bits.iter().zip(&c2.bits).map(|(x, y)| x ^ y).collect();
            prop_assert_eq!(cs.bits, xor);
        }

        #[test]
        fn systematic_round_trip(seed in any::<u64>(), m in any::<u64>()) {
            let p = make_profile(94, 32, 10, &paper_data(10)).unwrap();
            let g = draw_parity_matrices(&p, seed);
            let u = Message::random(94, &mut ChaCha8Rng::seed_from_u64(m));
            let c = tree_encode(&u, &p, &g).unwrap();
            prop_assert_eq!(&Message::from_indices(&p, &c.indices), &u);
            // info positions of the coded bits are the message verbatim
            let mut info = Vec::new();
            for s in 0..32 {
                let block = &c.bits[s * 10..(s + 1) * 10];
                info.extend_from_slice(&block[..p.data_bits(s)]);
            }
            prop_assert_eq!(info, u.0);
        }
    }
}
