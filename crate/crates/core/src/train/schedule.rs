/// Phase and blend weight after `images_seen` images.
///
/// Phase 0 trains for `images_per_phase` images. Every later phase first
/// fades in over `images_per_transition` images (alpha 0 → 1) and then
/// stabilizes for `images_per_phase`. The last phase runs indefinitely.
pub fn schedule_phase(images_seen: u64, images_per_phase: u64, images_per_transition: u64, max_phase: usize) -> (usize, f64) {
    if images_seen < images_per_phase || max_phase == 0 {
        return (0, 1.0);
    }
    let t = images_seen - images_per_phase;
    let cycle = images_per_transition + images_per_phase;
    let phase = t / cycle + 1;
    if phase > max_phase as u64 {
        return (max_phase, 1.0);
    }
    let into = t % cycle;
    let alpha = if into < images_per_transition { into as f64 / images_per_transition as f64 } else { 1.0 };
    (phase as usize, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn spec_points() {
        assert_eq!(schedule_phase(0, 1000, 1000, 3), (0, 1.0));
        assert_eq!(schedule_phase(1500, 1000, 1000, 3), (1, 0.5));
        assert_eq!(schedule_phase(1000, 1000, 1000, 3), (1, 0.0));
        assert_eq!(schedule_phase(2000, 1000, 1000, 3), (1, 1.0));
        assert_eq!(schedule_phase(3250, 1000, 1000, 3), (2, 0.25));
        assert_eq!(schedule_phase(10_000_000, 1000, 1000, 3), (3, 1.0));
        assert_eq!(schedule_phase(5_999, 1000, 1000, 2), (2, 1.0));
    }

    proptest! {
        #[test]
        fn monotone_phase(a in 0u64..50_000, b in 0u64..50_000, ipp in 1u64..5000, ipt in 1u64..5000) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let (pa, aa) = schedule_phase(lo, ipp, ipt, 3);
            let (pb, ab) = schedule_phase(hi, ipp, ipt, 3);
            prop_assert!(pa <= pb);
            if pa == pb {
                prop_assert!(aa <= ab);
            }
            prop_assert!((0.0..=1.0).contains(&aa));
        }

        #[test]
        fn alpha_continuous_across_windows(ipp in 1u64..2000, ipt in 2u64..2000, phase in 1u64..3) {
            let start = ipp + (phase - 1) * (ipp + ipt);
            prop_assert_eq!(schedule_phase(start, ipp, ipt, 3), (phase as usize, 0.0));
            let (_, before_end) = schedule_phase(start + ipt - 1, ipp, ipt, 3);
            prop_assert!((1.0 - before_end - 1.0 / ipt as f64).abs() < 1e-12);
            prop_assert_eq!(schedule_phase(start + ipt, ipp, ipt, 3), (phase as usize, 1.0));
        }
    }
}
