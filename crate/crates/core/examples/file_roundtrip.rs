//! The on-disk formats: writes a system and a pole list, assigns, stores
//! the result file and reads it back.

use std::env;
use std::fs;

use nalgebra::dmatrix;
use refined_schur::driver::{assign, AssignConfig, SystemPair};
use refined_schur::io::{read_json, to_json_string, write_text, ResultFile, SystemFile};
use refined_schur::metrics::{robustness_report, MetricsConfig};
use refined_schur::poles::{PoleFile, PoleOrder};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = env::temp_dir().join(format!("refined-schur-example-{}", std::process::id()));
    fs::create_dir_all(&dir)?;

    let sys = SystemPair::new(
        dmatrix![0.0, 1.0, 0.0, 0.0; 0.0, 0.0, 1.0, 0.0; 0.0, 0.0, 0.0, 1.0; 1.0, -2.0, 0.5, 0.0],
        dmatrix![0.0, 0.0; 1.0, 0.0; 0.0, 0.0; 0.0, 1.0],
    )?;
    write_text(
        &dir.join("system.json"),
        &to_json_string(&SystemFile::from_system(&sys)),
    )?;
    write_text(
        &dir.join("poles.json"),
        r#"{"conjugate_pairs": true, "poles": [{"re": -1.0, "im": 1.5, "mult": 2}]}"#,
    )?;

    let sys = read_json::<SystemFile>(&dir.join("system.json"))?.to_system()?;
    let spec =
        read_json::<PoleFile>(&dir.join("poles.json"))?.into_spec(0.0, PoleOrder::Ascending)?;
    let result = assign(&sys, &spec, &AssignConfig::default())?;
    let report = robustness_report(
        sys.a(),
        sys.b(),
        &result.f,
        &spec,
        Some((&result.x, &result.t)),
        &MetricsConfig::default(),
    );
    let path = dir.join("result.json");
    write_text(&path, &to_json_string(&ResultFile::new(&result, report)))?;

    let back: ResultFile = read_json(&path)?;
    assert_eq!(back.f.to_mat("F")?, result.f);
    println!("{}", fs::read_to_string(&path)?);
    fs::remove_dir_all(&dir)?;
    Ok(())
}
