use std::path::Path;

use disclift::datasets::{load_csv, load_signals_csv, write_table, CsvSchema};
use disclift::{CoefficientTable, FittedTransform, Matrix, MulticlassDataset, SignalDataset};

use crate::failure::Failure;

pub fn labelled(path: &Path) -> Result<MulticlassDataset, Failure> {
    Ok(load_csv(path, CsvSchema::default())?)
}

/// Signals with class ids when the file has them.
pub fn signals(path: &Path) -> Result<(Matrix, Option<Vec<u32>>), Failure> {
    match load_signals_csv(path, CsvSchema::default()) {
        Ok(m) => Ok((m, None)),
        Err(unlabelled) => match labelled(path) {
            Ok(data) => Ok((data.signals().clone(), Some(data.class_ids().to_vec()))),
            Err(_) => Err(unlabelled.into()),
        },
    }
}

/// The classes to compare: `requested`, or the only two present.
pub fn class_pair(data: &MulticlassDataset, requested: Option<&[u32]>) -> Result<(u32, u32), Failure> {
    match requested {
        Some([a, b]) if a == b => Err(Failure::usage("--classes needs two different classes")),
        Some([a, b]) => Ok(((*a).min(*b), (*a).max(*b))),
        Some(_) => Err(Failure::usage("--classes takes exactly two class ids")),
        None => match data.classes().as_slice() {
            [a, b] => Ok((*a, *b)),
            [] | [_] => Err(disclift::Error::Data("the dataset needs at least two classes".into()).into()),
            classes => Err(Failure::usage(format!(
                "found {} classes; choose two with --classes",
                classes.len()
            ))),
        },
    }
}

pub fn binary(data: &MulticlassDataset, pair: (u32, u32)) -> Result<SignalDataset, Failure> {
    Ok(data.pair(pair.0, pair.1)?)
}

/// Merged coefficients with the layout as header and optional class ids.
pub fn write_features(
    path: &Path,
    transform: &FittedTransform,
    table: &CoefficientTable,
    ids: Option<&[u32]>,
) -> Result<(), Failure> {
    let header: Vec<String> = transform.layout().iter().map(|c| c.name()).collect();
    write_table(path, Some(&header), &table.merged(), ids.map(|ids| ("class", ids)))?;
    Ok(())
}

pub fn ensure_dir(path: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(path)?;
    Ok(())
}
