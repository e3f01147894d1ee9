//! Runs the full pipeline on the bundled fixture into a temporary directory
//! and prints the manifest.
//!
//! The same run from the shell:
//! `travel-tweets --config fixtures/run.toml pipeline --output-dir /tmp/run`

use std::path::Path;

use travel_tweets::cli::pipeline::run_pipeline;
use travel_tweets::cli::RunConfig;

fn main() -> anyhow::Result<()> {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/run.toml");
    let mut cfg = RunConfig::load(&fixture)?;
    let out = std::env::temp_dir().join("travel-tweets-pipeline-example");
    cfg.paths.output_dir = Some(out.clone());
    let manifest = run_pipeline(&cfg)?;
    for stage in &manifest.stages {
        println!("{:<10} {:?}", stage.name, stage.status);
        for f in &stage.outputs {
            println!("    {} {}", &f.sha256[..12], f.path);
        }
    }
    println!("{}", std::fs::read_to_string(out.join("eval_report.json"))?.lines().take(8).collect::<Vec<_>>().join("\n"));
    Ok(())
}
