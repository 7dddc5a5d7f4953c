//! Parses a model from TOML text, relabels it, writes the derived file and
//! reloads it, checking that the reloaded evaluators agree.
//!
//! cargo run --example model_files

use std::sync::Arc;

use seqscreen::model::{eval_kernel, parse_model_file, Environment};
use seqscreen::transforms::{derived_model_file, instantiate, relabel, RelabelingKind};

const MODEL: &str = r#"
[signal]
family = "beta"
params = [2.0, 3.0]
support = [0.0, 1.0]

[kernel]
family = "exp_tilt"

[grid]
v_points = 33
V_points = 33
"#;

fn main() -> seqscreen::Result<()> {
    let loaded = parse_model_file(MODEL)?;
    let base: Arc<dyn Environment> = Arc::new(loaded.model.clone());
    let tm = relabel(base, RelabelingKind::IntegratedHazard, &[], &loaded.settings)?;
    let text = derived_model_file(&loaded, &tm)?;
    println!("{}", text.lines().take(14).collect::<Vec<_>>().join("\n"));
    println!("...");

    let reloaded = instantiate(&parse_model_file(&text)?)?;
    let mut worst: f64 = 0.0;
    for w in tm.signal_lattice(&loaded.settings.grid)?.into_iter().step_by(4) {
        for x in [0.1, 0.5, 0.9] {
            let (a, b) = (eval_kernel(&tm, w, x)?, eval_kernel(reloaded.as_ref(), w, x)?);
            worst = worst.max((a.cdf - b.cdf).abs()).max((a.type_derivative - b.type_derivative).abs());
        }
    }
    println!("max evaluator difference after reload: {worst:e}");
    Ok(())
}
