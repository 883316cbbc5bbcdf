//! Builds the macro-observation tables a planner would sample from and draws
//! a few macro-observations.

use hbni::genmodel::GenerativeConfig;
use hbni::macroobs::{estimate_model, sample_macro_observation, MacroModelOptions};
use hbni::rng::seeded;
use hbni::simplex::ClassLabel;

fn main() -> hbni::Result<()> {
    let config = GenerativeConfig::three_class_reference(11);
    let noise = config.realized_theta()?;
    let model = estimate_model(&config, &noise, &MacroModelOptions::default())?;
    for c in ClassLabel::all(model.classes) {
        println!(
            "class {c}: confusion {:.3?}  tau mean {:.2} sd {:.2}  timeouts {}",
            model.confusion[c.zero_based()],
            model.mean_tau(c),
            model.std_tau(c),
            model.timeouts[c.zero_based()]
        );
    }
    let mut rng = seeded(1);
    for _ in 0..5 {
        let (label, tau) = sample_macro_observation(&model, ClassLabel::from_zero_based(0), &mut rng)?;
        println!("true class 1 -> reported {label} after {tau} observations");
    }
    Ok(())
}
