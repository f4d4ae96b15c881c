mod common;

use common::{event_log, oracle, random_log, simulated_log};
use fcsim::metrics::shortage_series;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #[test]
    fn sweep_matches_replay_on_simulated_logs(seed in any::<u64>()) {
        let (infos, records, horizon) = simulated_log(&mut ChaCha8Rng::seed_from_u64(seed));
        let s = shortage_series(&event_log(&infos, &records, horizon));
        let (power, wasted) = oracle(&infos, &records, horizon);
        prop_assert_eq!(s.outage_mwe, power);
        prop_assert_eq!(s.wasted_batches, wasted);
    }

    #[test]
    fn sweep_matches_replay_on_arbitrary_logs(seed in any::<u64>()) {
        let (infos, records, horizon) = random_log(&mut ChaCha8Rng::seed_from_u64(seed));
        let s = shortage_series(&event_log(&infos, &records, horizon));
        let (power, wasted) = oracle(&infos, &records, horizon);
        prop_assert_eq!(s.outage_mwe, power);
        prop_assert_eq!(s.wasted_batches, wasted);
    }

    #[test]
    fn cumulative_series_never_decrease(seed in any::<u64>(), dt in prop_oneof![Just(1u32), Just(3u32)]) {
        let (infos, records, horizon) = simulated_log(&mut ChaCha8Rng::seed_from_u64(seed));
        let s = shortage_series(&event_log(&infos, &records, horizon));
        let cum = fcsim::metrics::cumulative(&s.outage_mwe, dt);
        prop_assert!(cum.windows(2).all(|w| w[0] <= w[1]));
    }
}
