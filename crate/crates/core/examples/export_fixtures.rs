//! Writes the synthetic fixture data sets and the 5-fold partitions used by
//! the oracle scripts. Usage: `cargo run --example export_fixtures -- <dir>`.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use linkselect::synth::write_csv;
use linkselect::{make_partitions, CvScheme, LinkSpec, SyntheticModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures/synthetic".into()));
    std::fs::create_dir_all(&dir)?;

    let sets = [
        ("cauchit_n50", SyntheticModel::new(50, vec![0.4, 1.1, -0.9], LinkSpec::Cauchit, 20_250_611)),
        ("logit_n60", SyntheticModel::new(60, vec![-0.3, 1.0, 0.8], LinkSpec::Logit, 31_415)),
    ];
    for (name, model) in sets {
        let data = model.generate()?;
        write_csv(&data, BufWriter::new(File::create(dir.join(format!("{name}.csv")))?))?;
    }

    let folds = make_partitions(CvScheme::KFold { k: 5 }, 60, 0)?;
    let json = serde_json::to_string_pretty(&folds)?;
    std::fs::write(dir.join("logit_n60.kfold5.seed0.json"), json + "\n")?;
    Ok(())
}
