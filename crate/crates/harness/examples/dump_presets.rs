//! Writes every scenario preset to configs/<scenario>.toml.
use hyperflow_harness::{ExperimentConfig, Scenario};

fn main() -> std::io::Result<()> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    std::fs::create_dir_all(&dir)?;
    for s in Scenario::ALL {
        let mut c = ExperimentConfig::preset(s);
        c.output_dir = Some(format!("runs/{}", s.name()).into());
        std::fs::write(dir.join(format!("{}.toml", s.name())), c.to_toml())?;
    }
    Ok(())
}
