//! Replays a CSV stream (argument, or a generated one) through SSBF and HBNI
//! and prints the posterior trace, switching HBNI noise halfway through.

use hbni::bench::{run_replay, StreamOptions};
use hbni::filters::{Method, NoiseModel};
use hbni::genmodel::ObservationStream;
use hbni::rng::seeded;
use hbni::simplex::{ClassLabel, NoiseParams, ObservationSequence};

fn main() -> hbni::Result<()> {
    let data = match std::env::args().nth(1) {
        Some(path) => hbni::io::read_stream_csv(hbni::io::open_buffered(path)?)?,
        None => {
            // The first class emits pure noise here.
            let theta = NoiseParams::new(vec![0.0, 6.0, 20.0])?;
            let stream = ObservationStream::new(ClassLabel::from_zero_based(0), &theta, seeded(9));
            Some(ObservationSequence::new(3, stream.take(20).collect())?)
        }
    };
    let classes = data.as_ref().map_or(3, ObservationSequence::classes);
    let options = StreamOptions {
        noise: Some(NoiseModel::Point(NoiseParams::new(vec![0.5; classes])?)),
        noise_updates: vec![(
            11,
            NoiseParams::new((0..classes).map(|m| if m == 0 { 0.0 } else { 10.0 }).collect())?,
        )],
        ..Default::default()
    };
    let trace = run_replay(data.as_ref(), &[Method::Ssbf, Method::Hbni], &options)?;
    hbni::bench::write_trace_csv(std::io::stdout().lock(), classes, &trace, "example")?;
    Ok(())
}
