//! Runs the four filters side by side on one stream from the noisiest class.

use hbni::filters::{FilterState, Method, NoiseModel};
use hbni::genmodel::ObservationStream;
use hbni::rng::seeded;
use hbni::simplex::{ClassLabel, ClassPrior, NoiseParams};

fn main() -> hbni::Result<()> {
    let theta = NoiseParams::new(vec![1.0, 6.0, 20.0])?;
    let prior = ClassPrior::uniform(3)?;
    let mut filters = Method::ALL
        .iter()
        .map(|&m| FilterState::new(m, prior.clone(), Some(NoiseModel::Point(theta.clone()))))
        .collect::<hbni::Result<Vec<_>>>()?;
    let stream = ObservationStream::new(ClassLabel::from_zero_based(0), &theta, seeded(5));
    println!("{:>3}  {:>22}  decisions", "N", "observation");
    for (i, o) in stream.take(12).enumerate() {
        for f in filters.iter_mut() {
            f.update(&o)?;
        }
        let decisions: Vec<String> = filters.iter().map(|f| format!("{}={}", f.method(), f.decision())).collect();
        println!("{:>3}  {:.3?}  {}", i + 1, o.probs(), decisions.join(" "));
    }
    Ok(())
}
