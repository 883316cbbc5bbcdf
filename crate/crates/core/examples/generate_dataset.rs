//! Samples the three-class reference problem and prints per-class means.

use hbni::genmodel::{generate_dataset, GenerativeConfig};

fn main() -> hbni::Result<()> {
    let config = GenerativeConfig::three_class_reference(7);
    let data = generate_dataset(&config, 3000, Some(1000))?;
    let labels = data.labels().expect("generated data is labeled");
    for c in 0..config.classes() {
        let rows: Vec<_> = data.iter().zip(labels).filter(|(_, l)| l.zero_based() == c).collect();
        let means: Vec<f64> = (0..config.classes())
            .map(|m| rows.iter().map(|(o, _)| o.probs()[m]).sum::<f64>() / rows.len() as f64)
            .collect();
        println!("class {}: mean output {:.3?}", c + 1, means);
    }
    hbni::io::write_dataset_csv(std::io::stdout().lock(), &data.prefix(5), &hbni::io::config_hash(&config))?;
    Ok(())
}
