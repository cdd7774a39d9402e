//! Streaming records against a brute-force recomputation that keeps every
//! draw and evaluates each statistic from its definition.

mod support;

use perpetua::simulate::{run_trajectory_observed, DrawRecorder, RunConfig};
use perpetua::RngStream;
use support::{brute_force, check, random_law};

#[test]
fn streaming_records_match_brute_force_on_500_random_laws() {
    let mut rng = RngStream::new(99, 0);
    for case in 0..500 {
        let (law, z0) = random_law(&mut rng, case);
        let horizon = 1 + rng.index(20);
        let cfg = RunConfig::new(law, z0, horizon, 1, case as u64).unwrap();
        let mut rec = DrawRecorder::default();
        let records = run_trajectory_observed(&cfg, 0, &mut rec).unwrap();
        let brute = brute_force(rec.z0.as_ref().unwrap(), &rec.draws);
        assert_eq!(records.len(), horizon);
        if let Err(e) = check(&records, &brute) {
            panic!("case {case}: {e}");
        }
    }
}
