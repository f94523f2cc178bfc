use disclift::datasets::write_table;
use disclift::model::load_model;
use serde_json::json;

use crate::args::BasisArgs;
use crate::failure::Failure;
use crate::inputs::ensure_dir;
use crate::manifest::RunManifest;

const BIORTHOGONALITY_TOL: f64 = 1e-8;

pub fn run(a: &BasisArgs) -> Result<(), Failure> {
    let mut manifest = RunManifest::start("basis");
    let transform = load_model(&a.model)?;
    let base = transform.base_vectors()?;
    ensure_dir(&a.out)?;

    let samples: Vec<String> = (1..=transform.signal_length).map(|i| format!("s{i}")).collect();
    let names: Vec<String> = base.layout.iter().map(|c| c.name()).collect();

    // one row per coefficient in both files
    let analysis = a.out.join("analysis.csv");
    write_table(&analysis, Some(&samples), &base.analysis, None)?;
    let synthesis = a.out.join("synthesis.csv");
    write_table(&synthesis, Some(&samples), &base.synthesis.transpose(), None)?;

    let supports = a.out.join("supports.csv");
    let mut csv = String::from(
        "coefficient,level,k,kind,first,last,count,synthesis_first,synthesis_last,synthesis_count,gamma\n",
    );
    for (i, id) in base.layout.iter().enumerate() {
        let an = base.analysis_supports[i];
        let syn = base.synthesis_supports[i];
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            names[i],
            id.level,
            id.k,
            if id.coarse { "coarse" } else { "detail" },
            an.first,
            an.last,
            an.count,
            syn.first,
            syn.last,
            syn.count,
            base.affine_offsets[i]
        ));
    }
    std::fs::write(&supports, csv)?;

    let residual = base.biorthogonality_residual();
    println!("biorthogonality residual max |analysis * synthesis - I| = {residual:.3e}");
    for m in 1..=transform.effective_levels() {
        let widest = base
            .layout
            .iter()
            .zip(&base.analysis_supports)
            .filter(|(id, _)| id.level == m && !id.coarse)
            .map(|(_, s)| s.span())
            .max()
            .unwrap_or(0);
        println!("level {m}: widest analysis support {widest} samples");
    }

    manifest.config(&transform.config)?;
    manifest.input("model", &a.model);
    for p in [&analysis, &synthesis, &supports] {
        manifest.output(p);
    }
    manifest.detail("biorthogonality_residual", residual)?;
    manifest.detail("layout", json!(names))?;
    manifest.write(&a.out.join("manifest.json"))?;

    if residual >= BIORTHOGONALITY_TOL {
        return Err(disclift::Error::Numerical {
            context: format!("analysis and synthesis bases are not biorthogonal (residual {residual:.3e})"),
            condition: f64::NAN,
        }
        .into());
    }
    Ok(())
}
