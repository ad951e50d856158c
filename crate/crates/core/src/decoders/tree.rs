//! Parity-driven stitching: the plain tree decoder and its beam-pattern
//! constrained variant.

use std::collections::HashMap;

use super::{DecodedList, DecodedMessage};
use crate::cs::CsSlotOutput;
use crate::error::{Error, Result};
use crate::tree_code::{Message, ParityMatrices, PendingParity, TreeCodeProfile};

/// Default bound on the live paths grown from one root.
pub const DEFAULT_PATH_CAP: usize = 200_000;

/// Detected indices of a slot grouped by their parity part.
pub(crate) fn parity_buckets(slot: &CsSlotOutput, profile: &TreeCodeProfile, stage: usize) -> HashMap<u32, Vec<usize>> {
    let mut map: HashMap<u32, Vec<usize>> = HashMap::new();
    for (pos, &idx) in slot.indices().iter().enumerate() {
        map.entry(profile.parity_of(stage, idx)).or_default().push(pos);
    }
    map
}

pub(crate) fn check_slots(slots: &[CsSlotOutput], profile: &TreeCodeProfile) -> Result<()> {
    if slots.len() != profile.stages() {
        return Err(Error::Length {
            what: "slot lists",
            expected: profile.stages(),
            got: slots.len(),
        });
    }
    Ok(())
}

#[derive(Clone)]
struct Partial {
    indices: Vec<u32>,
    pending: PendingParity,
}

fn stitch(
    slots: &[CsSlotOutput],
    profile: &TreeCodeProfile,
    matrices: &ParityMatrices,
    use_patterns: bool,
    cap: usize,
) -> Result<DecodedList> {
    check_slots(slots, profile)?;
    let stages = profile.stages();
    let buckets: Vec<_> = (0..stages).map(|s| parity_buckets(&slots[s], profile, s)).collect();
    let mut out = DecodedList::default();
    for (root_pos, &root) in slots[0].indices().iter().enumerate() {
        let root_pattern = slots[0].pattern(root_pos);
        let mut pending = PendingParity::new(stages);
        pending.absorb(0, profile.info_of(0, root), matrices);
        let mut paths = vec![Partial {
            indices: vec![root],
            pending,
        }];
        let mut truncated = false;
        for s in 1..stages {
            let mut next = Vec::new();
            for path in &paths {
                let Some(children) = buckets[s].get(&path.pending.expected(s)) else {
                    continue;
                };
                for &pos in children {
                    if use_patterns && !root_pattern.overlaps(slots[s].pattern(pos)) {
                        continue;
                    }
                    let idx = slots[s].indices()[pos];
                    let mut child = path.clone();
                    child.indices.push(idx);
                    child.pending.absorb(s, profile.info_of(s, idx), matrices);
                    next.push(child);
                }
            }
            if next.len() > cap {
                next.truncate(cap);
                truncated = true;
            }
            paths = next;
            if paths.is_empty() {
                break;
            }
        }
        if truncated {
            out.truncated_roots += 1;
        }
        for p in paths {
            out.messages.push(DecodedMessage {
                message: Message::from_indices(profile, &p.indices),
                indices: p.indices,
                pm: None,
            });
        }
    }
    Ok(out)
}

/// Grows every root through all parity-consistent children.
pub fn tree_decode_traditional(
    slots: &[CsSlotOutput],
    profile: &TreeCodeProfile,
    matrices: &ParityMatrices,
    cap: usize,
) -> Result<DecodedList> {
    stitch(slots, profile, matrices, false, cap)
}

/// As the traditional decoder, but a child must also share an active beam
/// with its root.
pub fn beam_tree_decode_hard(
    slots: &[CsSlotOutput],
    profile: &TreeCodeProfile,
    matrices: &ParityMatrices,
    cap: usize,
) -> Result<DecodedList> {
    stitch(slots, profile, matrices, true, cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cs::BeamPattern;
    use crate::tree_code::{draw_parity_matrices, is_parity_consistent, make_profile, tree_encode};
    use ndarray::Array2;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn slot(indices: &[u32], patterns: Vec<BeamPattern>) -> CsSlotOutput {
        let mut uniq: Vec<(u32, BeamPattern)> = Vec::new();
        for (i, p) in indices.iter().zip(patterns) {
            if let Some(e) = uniq.iter_mut().find(|e| e.0 == *i) {
                for b in p.active_beams() {
                    e.1.set(b, true);
                }
            } else {
                uniq.push((*i, p));
            }
        }
        let n_rf = uniq.first().map_or(1, |e| e.1.len());
        CsSlotOutput::from_parts(
            uniq.iter().map(|e| e.0).collect(),
            Array2::from_elem((uniq.len(), n_rf), Complex64::new(1.0, 0.0)),
            uniq.into_iter().map(|e| e.1).collect(),
        )
        .unwrap()
    }

    fn lists(coded: &[Vec<u32>], pats: &[Vec<BeamPattern>], stages: usize) -> Vec<CsSlotOutput> {
        (0..stages)
            .map(|s| {
                slot(
                    &coded.iter().map(|c| c[s]).collect::<Vec<_>>(),
                    pats.iter().map(|p| p[s].clone()).collect(),
                )
            })
            .collect()
    }

    fn random_users(
        profile: &TreeCodeProfile,
        g: &ParityMatrices,
        k: usize,
        rng: &mut ChaCha8Rng,
    ) -> (Vec<Message>, Vec<Vec<u32>>) {
        let msgs: Vec<Message> = (0..k).map(|_| Message::random(profile.total_bits(), rng)).collect();
        let coded = msgs
            .iter()
            .map(|m| tree_encode(m, profile, g).unwrap().indices)
            .collect();
        (msgs, coded)
    }

    #[test]
    fn single_user_is_recovered() {
        let p = make_profile(14, 3, 6, &[6, 4, 4]).unwrap();
        let g = draw_parity_matrices(&p, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (msgs, coded) = random_users(&p, &g, 1, &mut rng);
        let pats = vec![vec![BeamPattern::full(4); 3]];
        let out = tree_decode_traditional(&lists(&coded, &pats, 3), &p, &g, DEFAULT_PATH_CAP).unwrap();
        assert_eq!(out.message_set(), msgs.into_iter().collect());
    }

    #[test]
    fn shared_root_yields_both_messages() {
        let p = make_profile(20, 4, 8, &[8, 4, 4, 4]).unwrap();
        let g = draw_parity_matrices(&p, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut a = Message::random(20, &mut rng);
        let mut b = Message::random(20, &mut rng);
        a.0[..8].copy_from_slice(&[1, 0, 1, 1, 0, 0, 1, 0]);
        b.0[..8].copy_from_slice(&[1, 0, 1, 1, 0, 0, 1, 0]);
        if a == b {
            b.0[19] ^= 1;
        }
        let coded: Vec<Vec<u32>> = [&a, &b]
            .iter()
            .map(|m| tree_encode(m, &p, &g).unwrap().indices)
            .collect();
        let pats = vec![vec![BeamPattern::full(4); 4]; 2];
        let out = tree_decode_traditional(&lists(&coded, &pats, 4), &p, &g, DEFAULT_PATH_CAP).unwrap();
        let set = out.message_set();
        assert!(set.contains(&a) && set.contains(&b));
    }

    fn brute_force(slots: &[CsSlotOutput], p: &TreeCodeProfile, g: &ParityMatrices) -> BTreeSet<Message> {
        let mut out = BTreeSet::new();
        let mut stack: Vec<Vec<u32>> = vec![vec![]];
        while let Some(prefix) = stack.pop() {
            if prefix.len() == p.stages() {
                if is_parity_consistent(&prefix, p, g) {
                    out.insert(Message::from_indices(p, &prefix));
                }
                continue;
            }
            for &i in slots[prefix.len()].indices() {
                let mut next = prefix.clone();
                next.push(i);
                stack.push(next);
            }
        }
        out
    }

    #[test]
    fn matches_brute_force_enumeration() {
        let p = make_profile(8, 3, 4, &[4, 2, 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..200 {
            let g = draw_parity_matrices(&p, trial);
            let (msgs, coded) = random_users(&p, &g, 3, &mut rng);
            let pats = vec![vec![BeamPattern::full(2); 3]; 3];
            let slots = lists(&coded, &pats, 3);
            let out = tree_decode_traditional(&slots, &p, &g, DEFAULT_PATH_CAP).unwrap();
            assert_eq!(out.message_set(), brute_force(&slots, &p, &g));
            assert!(msgs.iter().all(|m| out.message_set().contains(m)));
            assert!(out.is_sound(&p, &g));
        }
    }

    #[test]
    fn full_patterns_reduce_hard_to_traditional() {
        let p = make_profile(20, 5, 8, &[8, 3, 3, 3, 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for t in 0..50 {
            let g = draw_parity_matrices(&p, t);
            let (_, coded) = random_users(&p, &g, 20, &mut rng);
            let pats = vec![vec![BeamPattern::full(8); 5]; 20];
            let slots = lists(&coded, &pats, 5);
            let a = tree_decode_traditional(&slots, &p, &g, DEFAULT_PATH_CAP).unwrap();
            let b = beam_tree_decode_hard(&slots, &p, &g, DEFAULT_PATH_CAP).unwrap();
            assert_eq!(a.message_set(), b.message_set());
        }
    }

    #[test]
    fn disjoint_child_pattern_is_pruned() {
        let p = make_profile(12, 2, 8, &[8, 4]).unwrap();
        let g = draw_parity_matrices(&p, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (_, coded) = random_users(&p, &g, 1, &mut rng);
        let pats = vec![vec![BeamPattern::from_beams(4, &[0]), BeamPattern::from_beams(4, &[3])]];
        let slots = lists(&coded, &pats, 2);
        assert_eq!(
            tree_decode_traditional(&slots, &p, &g, DEFAULT_PATH_CAP).unwrap().len(),
            1
        );
        assert!(beam_tree_decode_hard(&slots, &p, &g, DEFAULT_PATH_CAP)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn hard_output_is_subset_of_traditional() {
        let p = make_profile(20, 5, 8, &[8, 3, 3, 3, 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for t in 0..100 {
            let g = draw_parity_matrices(&p, t);
            let (_, coded) = random_users(&p, &g, 25, &mut rng);
            let pats: Vec<Vec<BeamPattern>> = (0..25)
                .map(|_| {
                    (0..5)
                        .map(|_| BeamPattern::from_beams(8, &[rng.random_range(0..8), rng.random_range(0..8)]))
                        .collect()
                })
                .collect();
            let slots = lists(&coded, &pats, 5);
            let a = tree_decode_traditional(&slots, &p, &g, DEFAULT_PATH_CAP).unwrap();
            let b = beam_tree_decode_hard(&slots, &p, &g, DEFAULT_PATH_CAP).unwrap();
            assert!(b.message_set().is_subset(&a.message_set()));
            assert!(a.is_sound(&p, &g) && b.is_sound(&p, &g));
        }
    }

    #[test]
    fn cap_marks_truncated_roots() {
        // no parity at all: every combination survives
        let p = make_profile(16, 4, 4, &[4, 4, 4, 4]).unwrap();
        let g = draw_parity_matrices(&p, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (_, coded) = random_users(&p, &g, 6, &mut rng);
        let pats = vec![vec![BeamPattern::full(2); 4]; 6];
        let slots = lists(&coded, &pats, 4);
        let out = tree_decode_traditional(&slots, &p, &g, 10).unwrap();
        assert!(out.truncated_roots > 0);
        assert!(out.len() <= 10 * slots[0].len());
    }

    #[test]
    fn wrong_slot_count_is_an_error() {
        let p = make_profile(8, 2, 4, &[4, 4]).unwrap();
        let g = draw_parity_matrices(&p, 0);
        assert!(tree_decode_traditional(&[], &p, &g, 10).is_err());
    }
}
