//! Configurations shipped with the binary.

use anyhow::{anyhow, Result};

use crate::config::RunConfig;

/// `(name, JSON)` for every bundled configuration.
pub const EXAMPLES: &[(&str, &str)] = &[
    (
        "simulate-smoke",
        include_str!("../configs/simulate-smoke.json"),
    ),
    (
        "simulate-zero",
        include_str!("../configs/simulate-zero.json"),
    ),
    ("linear", include_str!("../configs/linear.json")),
    ("conservation", include_str!("../configs/conservation.json")),
    ("scaling", include_str!("../configs/scaling.json")),
    ("resonance", include_str!("../configs/resonance.json")),
    ("xfail-basic", include_str!("../configs/xfail-basic.json")),
    (
        "xfail-refined",
        include_str!("../configs/xfail-refined.json"),
    ),
    ("cutoffs", include_str!("../configs/cutoffs.json")),
    ("picard", include_str!("../configs/picard.json")),
    ("norms", include_str!("../configs/norms.json")),
];

pub fn get(name: &str) -> Result<RunConfig> {
    let (_, text) = EXAMPLES
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| anyhow!("no bundled example named {name:?}; see --list-examples"))?;
    RunConfig::from_json(text).map_err(|e| e.context(format!("bundled example {name}")))
}

/// One line per example: name, verb and description.
pub fn listing() -> Result<String> {
    let mut out = String::new();
    for (name, _) in EXAMPLES {
        let cfg = get(name)?;
        out.push_str(&format!(
            "{name:<16} {:<10} {}\n",
            cfg.experiment.verb().as_str(),
            cfg.description
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_example_parses_and_round_trips() {
        for (name, _) in EXAMPLES {
            let cfg = get(name).unwrap();
            assert_eq!(cfg.name, *name);
            let again = RunConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
            assert_eq!(again, cfg);
        }
        assert!(get("nope").is_err());
        assert_eq!(listing().unwrap().lines().count(), EXAMPLES.len());
    }
}
