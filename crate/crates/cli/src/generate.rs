use disclift::datasets::{generate_shape, generate_waveform, save_csv, CsvSchema, ShapeSpec, WaveformSpec};
use serde_json::json;

use crate::args::{GenerateArgs, Generator};
use crate::failure::Failure;
use crate::manifest::{beside, RunManifest};

pub fn run(a: &GenerateArgs) -> Result<(), Failure> {
    let mut manifest = RunManifest::start("generate");
    let data = match a.generator {
        Generator::Waveform => generate_waveform(&WaveformSpec {
            per_class_count: a.per_class,
            seed: a.seed,
        })?,
        Generator::ShapeCbf => generate_shape(&ShapeSpec {
            per_class_count: a.per_class,
            seed: a.seed,
        })?,
    };
    save_csv(&data, &a.out, CsvSchema::default())?;
    manifest.config(json!({ "generator": a.generator, "per_class": a.per_class }))?;
    manifest.seeds.insert("generator".into(), a.seed);
    manifest.output(&a.out);
    manifest.write(&beside(&a.out))?;
    println!(
        "wrote {} signals of length {} to {}",
        data.len(),
        data.signal_length(),
        a.out.display()
    );
    Ok(())
}
