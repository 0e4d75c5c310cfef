//! The experiment catalog printed by `glt list`.

use std::fmt::Write;

/// One optional parameter: key under `[params]`, default, and a sample TOML value.
#[derive(Debug, Clone, Copy)]
pub struct Param {
    pub key: &'static str,
    pub default: &'static str,
    pub example: &'static str,
}

#[derive(Debug, Clone, Copy)]
pub struct Experiment {
    pub kind: &'static str,
    pub summary: &'static str,
    /// Model kinds accepted under `[model]`.
    pub models: &'static [&'static str],
    /// Required keys under `[params]`, with a sample TOML value.
    pub required: &'static [(&'static str, &'static str)],
    pub optional: &'static [Param],
    pub outputs: &'static [&'static str],
}

const fn p(key: &'static str, default: &'static str, example: &'static str) -> Param {
    Param { key, default, example }
}

const LATTICE_MODELS: &[&str] = &["majumdar-ghosh", "heisenberg", "transverse-ising", "xxz-torus"];
const CHAIN_U1_MODELS: &[&str] = &["majumdar-ghosh", "heisenberg"];
const FLUX_MODELS: &[&str] = &["two-level", "xxz-torus"];

pub const EXPERIMENTS: &[Experiment] = &[
    Experiment {
        kind: "lr-bound",
        summary: "exact commutator norms against the series and exponential Lieb-Robinson bounds",
        models: LATTICE_MODELS,
        required: &[],
        optional: &[
            p("times", "[0.25, 0.5, ..., 2.0]", "[0.5, 1.0]"),
            p("distances", "[2, 3, 4, 5]", "[2, 3]"),
            p("mu_grid", "[0.5, 1.0, 1.5, 2.0]", "[1.0]"),
            p("k_max", "auto", "20"),
            p("site", "0", "0"),
        ],
        outputs: &["lightcone.csv"],
    },
    Experiment {
        kind: "corr-decay",
        summary: "connected versus step-filtered correlations and an exponential decay fit",
        models: LATTICE_MODELS,
        required: &[],
        optional: &[
            p("operators", "[\"z\"]", "[\"x\", \"z\"]"),
            p("alpha_fractions", "[0.25, 0.125, 0.0625]", "[0.25]"),
            p("max_distance", "L/2", "4"),
            p("fit_max_distance", "L/2 - 1 on a ring, else max_distance", "3"),
            p("site", "0", "0"),
        ],
        outputs: &["correlations.csv", "decay_fit.json"],
    },
    Experiment {
        kind: "lsm",
        summary: "Lieb-Schultz-Mattis twist: variational energy, orthogonality and the commutator bound",
        models: CHAIN_U1_MODELS,
        required: &[],
        optional: &[p("sizes", "[model.l]", "[8, 10]"), p("sector", "half filling", "4")],
        outputs: &["lsm_report.json", "lsm_sweep.csv"],
    },
    Experiment {
        kind: "spectral-flow",
        summary: "low-lying levels under flux insertion at one cut and at two opposite cuts",
        models: CHAIN_U1_MODELS,
        required: &[],
        optional: &[
            p("grid_points", "64", "16"),
            p("levels", "4", "3"),
            p("sector", "half filling", "4"),
        ],
        outputs: &["spectral_flow.csv", "spectral_flow.json"],
    },
    Experiment {
        kind: "berry",
        summary: "Berry curvature on the flux torus and the Chern number",
        models: FLUX_MODELS,
        required: &[],
        optional: &[p("n", "20", "8"), p("sector", "half filling", "4")],
        outputs: &["berry_grid.csv", "berry_summary.json"],
    },
    Experiment {
        kind: "hall",
        summary: "Hall conductance from quasi-adiabatic loop transport with an integer certificate",
        models: FLUX_MODELS,
        required: &[],
        optional: &[
            p("n", "16", "8"),
            p("radius", "2π/n", "0.3"),
            p("steps", "200", "100"),
            p("delta_fraction", "0.25", "0.25"),
            p("tiling_steps", "none", "20"),
            p("sector", "half filling", "4"),
        ],
        outputs: &["hall.json", "berry_grid.csv"],
    },
    Experiment {
        kind: "transport",
        summary: "quasi-adiabatic transport along the straight path from [model] to [params.target]",
        models: LATTICE_MODELS,
        required: &[("target", "{ kind = \"transverse-ising\", l = 6, h = 3.0 }")],
        optional: &[
            p("steps", "[16, 32, 64]", "[16, 32]"),
            p("delta_fraction", "0.5", "0.25"),
            p("sector", "full space", "0"),
        ],
        outputs: &["transport.json"],
    },
];

pub fn find(kind: &str) -> Option<&'static Experiment> {
    EXPERIMENTS.iter().find(|e| e.kind == kind)
}

/// The catalog kind closest to `kind` by edit distance.
pub fn nearest(kind: &str) -> &'static str {
    EXPERIMENTS
        .iter()
        .map(|e| (strsim::levenshtein(kind, e.kind), e.kind))
        .min()
        .map(|(_, k)| k)
        .expect("catalog is nonempty")
}

/// The text printed by `glt list`.
pub fn render() -> String {
    let mut s = String::new();
    writeln!(s, "experiments ({}):", EXPERIMENTS.len()).unwrap();
    writeln!(s, "common keys: experiment (required), [model] (required), seed = 0, output_dir = \"out\"").unwrap();
    writeln!(s, "every run also writes manifest.json and run.log").unwrap();
    for e in EXPERIMENTS {
        writeln!(s).unwrap();
        writeln!(s, "{}", e.kind).unwrap();
        writeln!(s, "  {}", e.summary).unwrap();
        writeln!(s, "  models: {}", e.models.join(", ")).unwrap();
        let req: Vec<String> = e.required.iter().map(|(k, _)| format!("params.{k}")).collect();
        writeln!(s, "  required: {}", if req.is_empty() { "-".to_string() } else { req.join(", ") }).unwrap();
        for o in e.optional {
            writeln!(s, "  params.{} = {}", o.key, o.default).unwrap();
        }
        writeln!(s, "  outputs: {}", e.outputs.join(", ")).unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seven_kinds() {
        assert_eq!(EXPERIMENTS.len(), 7);
        assert!(render().starts_with("experiments (7):"));
    }

    #[test]
    fn nearest_kind() {
        assert_eq!(nearest("lr-bonud"), "lr-bound");
        assert_eq!(nearest("hal"), "hall");
        assert_eq!(nearest("spectralflow"), "spectral-flow");
    }
}
