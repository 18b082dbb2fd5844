//! Shared input builders for the criterion benches.

use curbtrack::{degrade_stream, scenario_geometry, FrameObservation, SiteGeometry};

/// A degraded stream with `vehicles` cars parked for the whole run, plus
/// the geometry to filter it against.
pub fn saturated_stream(vehicles: u32, frames: u64) -> (SiteGeometry, Vec<FrameObservation>) {
    let (cfg, truth, clean) =
        curbtrack::saturated_scenario(vehicles, frames, 7).expect("bench scenario");
    let stream = degrade_stream(&truth, &clean, &cfg).expect("bench stream");
    let geom = scenario_geometry(&cfg).expect("bench geometry");
    (geom, stream)
}
