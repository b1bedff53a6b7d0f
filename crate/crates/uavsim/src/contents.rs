//! Region event dynamics, content generation by surveilling UAVs, and
//! content hand-off to towers.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{ContentSizeMap, EventClass, RegionId, RegionState, SystemState, TowerId, UavId};
use crate::Scalar;

/// One unit of surveillance data gathered over a region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Content {
    pub source_region: RegionId,
    pub size: Scalar,
    pub created_at: usize,
}

/// Resamples each region's event class independently with probability
/// `resample_prob` (uniform over the three classes), updating the content
/// size from the class map.
pub fn sample_region_events<R: Rng>(
    regions: &mut [RegionState],
    resample_prob: Scalar,
    size_map: &ContentSizeMap,
    rng: &mut R,
) {
    for region in regions.iter_mut() {
        if rng.gen::<Scalar>() < resample_prob {
            let class = EventClass::ALL[rng.gen_range(0..EventClass::ALL.len())];
            region.event_class = class;
            region.content_size = size_map.size_of(class);
        }
    }
}

/// One content generated by a dwelling, unscheduled UAV this step: the
/// current region's content size. Flying or scheduled UAVs generate
/// nothing.
pub fn generate_content(
    region: &RegionState,
    dwelling: bool,
    scheduled: bool,
    t: usize,
) -> Option<Content> {
    if dwelling && !scheduled {
        Some(Content {
            source_region: region.region_id,
            size: region.content_size,
            created_at: t,
        })
    } else {
        None
    }
}

/// Moves every content held by `uav` to `tower`, atomically within the
/// step; returns the data amount transferred.
pub fn transfer_contents(state: &mut SystemState, tower: TowerId, uav: UavId) -> Scalar {
    let moved: Scalar = state.uav_contents[uav.0].iter().map(|c| c.size).sum();
    state.tower_data[tower.0] += moved;
    state.uav_contents[uav.0].clear();
    moved
}

/// Total data currently in flight plus delivered: the conservation
/// quantity checked against cumulative generation.
pub fn total_data(state: &SystemState) -> Scalar {
    let delivered: Scalar = state.tower_data.iter().sum();
    let held: Scalar = state
        .uav_contents
        .iter()
        .flat_map(|cs| cs.iter().map(|c| c.size))
        .sum();
    delivered + held
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{default_scenario, SystemState};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn regions(n: usize) -> Vec<RegionState> {
        let map = ContentSizeMap::default();
        (0..n)
            .map(|i| RegionState {
                region_id: RegionId(i),
                event_class: EventClass::Default,
                content_size: map.size_of(EventClass::Default),
            })
            .collect()
    }

    #[test]
    fn zero_probability_changes_nothing() {
        let map = ContentSizeMap::default();
        let mut rs = regions(50);
        let before = rs.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        sample_region_events(&mut rs, 0.0, &map, &mut rng);
        assert_eq!(rs, before);
    }

    #[test]
    fn full_resample_is_seed_deterministic() {
        let map = ContentSizeMap::default();
        let mut a = regions(50);
        let mut b = regions(50);
        let mut rng_a = ChaCha8Rng::seed_from_u64(11);
        let mut rng_b = ChaCha8Rng::seed_from_u64(11);
        sample_region_events(&mut a, 1.0, &map, &mut rng_a);
        sample_region_events(&mut b, 1.0, &map, &mut rng_b);
        assert_eq!(a, b);
        assert!(a.iter().all(|r| r.content_size == map.size_of(r.event_class)));
    }

    #[test]
    fn resampled_classes_are_uniform() {
        let map = ContentSizeMap::default();
        let mut rs = regions(1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut counts = [0usize; 3];
        let steps = 10_000;
        for _ in 0..steps {
            sample_region_events(&mut rs, 1.0, &map, &mut rng);
            let idx = EventClass::ALL.iter().position(|&c| c == rs[0].event_class).unwrap();
            counts[idx] += 1;
        }
        for c in counts {
            let freq = c as f64 / steps as f64;
            assert!((freq - 1.0 / 3.0).abs() < 0.02, "freq = {freq}");
        }
    }

    #[test]
    fn generation_rules() {
        let map = ContentSizeMap::default();
        let fire = RegionState {
            region_id: RegionId(9),
            event_class: EventClass::Fire,
            content_size: map.size_of(EventClass::Fire),
        };
        let c = generate_content(&fire, true, false, 4).unwrap();
        assert_eq!(c.size, 4.0);
        assert_eq!(c.source_region, RegionId(9));
        assert_eq!(c.created_at, 4);
        // Scheduled this step: nothing.
        assert!(generate_content(&fire, true, true, 4).is_none());
        // Mid-segment the whole step: nothing.
        assert!(generate_content(&fire, false, false, 4).is_none());
    }

    #[test]
    fn transfer_moves_everything_once() {
        let s = default_scenario();
        let mut st = SystemState::initial(&s);
        st.tower_data[2] = 5.0;
        st.uav_contents[3] = vec![
            Content { source_region: RegionId(0), size: 2.0, created_at: 0 },
            Content { source_region: RegionId(1), size: 3.0, created_at: 1 },
        ];
        let before_total = total_data(&st);
        let moved = transfer_contents(&mut st, TowerId(2), UavId(3));
        assert_eq!(moved, 5.0);
        assert_eq!(st.tower_data[2], 10.0);
        assert!(st.uav_contents[3].is_empty());
        // Idempotent within the step.
        assert_eq!(transfer_contents(&mut st, TowerId(2), UavId(3)), 0.0);
        assert_eq!(st.tower_data[2], 10.0);
        assert_eq!(total_data(&st), before_total);
    }

    #[test]
    fn two_uavs_same_tower_accumulate() {
        let s = default_scenario();
        let mut st = SystemState::initial(&s);
        st.uav_contents[0] = vec![Content { source_region: RegionId(0), size: 1.0, created_at: 0 }];
        st.uav_contents[1] = vec![Content { source_region: RegionId(1), size: 4.0, created_at: 0 }];
        transfer_contents(&mut st, TowerId(0), UavId(0));
        transfer_contents(&mut st, TowerId(0), UavId(1));
        assert_eq!(st.tower_data[0], 5.0);
    }
}
