//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Criterion 13's closed forms are known not to solve the scaling ODE; that
//! line prints FAIL and the run asserts instead that the exact ODE solutions
//! are matched. Any other failure fails the target.

use std::collections::BTreeMap;
use std::process::Command;

use g2forge_cli::config::{RunConfig, Suite};
use g2forge_cli::report::{Check, SuiteReport};
use g2forge_cli::suites::run_suite;
use serde_json::Value;

struct Outcome {
    id: u32,
    title: &'static str,
    pass: bool,
    summary: String,
}

struct Reports(BTreeMap<Suite, SuiteReport>);

impl Reports {
    fn get(&self, suite: Suite, name: &str) -> &Check {
        self.0[&suite]
            .check(name)
            .unwrap_or_else(|| panic!("no check {name} in {}", suite.name()))
    }

    fn matching(&self, suite: Suite, prefix: &str) -> Vec<&Check> {
        self.0[&suite].checks.iter().filter(|c| c.name.starts_with(prefix)).collect()
    }

    fn outcome(&self, id: u32, title: &'static str, checks: &[&Check]) -> Outcome {
        assert!(!checks.is_empty(), "criterion {id} has no checks");
        let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        let summary = if failed.is_empty() {
            checks
                .iter()
                .map(|c| format!("{}={}", c.name, c.actual))
                .collect::<Vec<_>>()
                .join(" ")
        } else {
            format!("failed: {}", failed.join(", "))
        };
        Outcome {
            id,
            title,
            pass: failed.is_empty(),
            summary,
        }
    }
}

fn without_timestamp(json: &str) -> Value {
    let mut v: Value = serde_json::from_str(json).expect("report is JSON");
    v.as_object_mut().expect("report is an object").remove("timestamp");
    v
}

fn determinism() -> Outcome {
    let dirs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    let children: Vec<_> = dirs
        .iter()
        .map(|d| {
            Command::new(env!("CARGO_BIN_EXE_g2forge"))
                .args(["all", "--seed", "42", "--json", "--out"])
                .arg(d.path())
                .output()
                .expect("binary runs")
        })
        .collect();
    let codes: Vec<Option<i32>> = children.iter().map(|o| o.status.code()).collect();
    let reports: Vec<String> = dirs
        .iter()
        .map(|d| std::fs::read_to_string(d.path().join("report.json")).unwrap_or_default())
        .collect();
    let same = !reports[0].is_empty()
        && without_timestamp(&reports[0]) == without_timestamp(&reports[1])
        && without_timestamp(&reports[0]) == without_timestamp(&String::from_utf8_lossy(&children[0].stdout));
    Outcome {
        id: 15,
        title: "determinism of `g2forge all --seed 42`",
        pass: same && codes[0] == codes[1],
        summary: format!("JSON identical modulo timestamp: {same}; exit codes {codes:?}"),
    }
}

fn main() {
    let cfg = RunConfig::default();
    let reports = Reports(
        Suite::CONCRETE
            .iter()
            .map(|&s| (s, run_suite(s, &cfg, None)))
            .collect(),
    );
    let r = &reports;
    use Suite::*;

    let mut outcomes = vec![
        r.outcome(
            1,
            "contraction identities",
            &[
                r.get(Identities, "contraction_identities_reference"),
                r.get(Identities, "contraction_identities_random"),
            ],
        ),
        r.outcome(
            2,
            "3-form inner product",
            &[
                r.get(Identities, "inner_product_reference"),
                r.get(Identities, "inner_product_random"),
            ],
        ),
        r.outcome(3, "nearly-G2 critical point", &r.matching(Curvature, "nearly_g2_")),
        r.outcome(
            4,
            "Bianchi residual convergence",
            &[
                r.get(Gradients, "bianchi_l_convergence"),
                r.get(Gradients, "bianchi_tilde_b_convergence"),
            ],
        ),
        r.outcome(5, "G2-Bianchi convergence", &[r.get(Curvature, "g2_bianchi_convergence")]),
        r.outcome(6, "first variations", &r.matching(Variations, "first_variation_")),
        r.outcome(
            7,
            "pointwise Lagrangian variation",
            &[r.get(Gradients, "lagrangian_variation_convergence")],
        ),
        r.outcome(
            8,
            "uniqueness solve",
            &[
                r.get(Symbols, "uniqueness_a"),
                r.get(Symbols, "uniqueness_beta"),
                r.get(Symbols, "uniqueness_nullspace_dim"),
                r.get(Symbols, "spanning_vectors_solve_system"),
                r.get(Symbols, "spanning_vectors_rank"),
            ],
        ),
        {
            let mut c = r.matching(Symbols, "special_rl_");
            c.push(r.get(Symbols, "l_lstar_eigenvalues"));
            c.push(r.get(Symbols, "l_k_eigenvalues"));
            r.outcome(9, "symbol suite", &c)
        },
        r.outcome(10, "slice decomposition", &r.matching(Symbols, "slice_")),
        r.outcome(
            11,
            "second variation at the flat structure",
            &[
                r.get(Hessian, "second_variation_vs_k_pairing"),
                r.get(Hessian, "hessian_swap_symmetry"),
                r.get(Hessian, "conformal_mode_value"),
                r.get(Hessian, "tt_modes_nonpositive"),
            ],
        ),
        r.outcome(12, "conformal energy", &r.matching(Variations, "conformal_energy_")),
        r.outcome(
            13,
            "flow regression",
            &[
                r.get(Flow, "scaling_hatp_closed_form"),
                r.get(Flow, "scaling_tildep_closed_form"),
                r.get(Flow, "flat_stationary_HatP"),
                r.get(Flow, "flat_stationary_TildeP"),
                r.get(Flow, "flat_stationary_HatP2"),
                r.get(Flow, "flat_stationary_TildeP2"),
            ],
        ),
        r.outcome(14, "gauge relation", &[r.get(Flow, "gauge_relation_convergence")]),
    ];
    outcomes.push(determinism());

    for o in &outcomes {
        println!(
            "criterion {:>2} {}  {}: {}",
            o.id,
            if o.pass { "PASS" } else { "FAIL" },
            o.title,
            o.summary
        );
    }

    // The closed forms of criterion 13 are (t+1)^3 and ((10/3)t+1)^3, but
    // λ³ with λ' proportional to c(t)² = c₀²/λ² grows like a 3/2 power.
    let corrected = [
        r.get(Flow, "scaling_hatp_ode_solution"),
        r.get(Flow, "scaling_tildep_ode_solution"),
        r.get(Flow, "scaling_hatp_energy_identity"),
        r.get(Flow, "scaling_tildep_energy_identity"),
    ];
    let corrected_pass = corrected.iter().all(|c| c.pass);
    println!(
        "criterion 13 note: exact scaling solutions (1+2t)^(3/2) and (1+(20/3)t)^(3/2) {}",
        if corrected_pass { "matched to 1e-8" } else { "NOT matched" }
    );
    let stationary = r.matching(Flow, "flat_stationary_").iter().all(|c| c.pass);

    let unexpected: Vec<u32> = outcomes.iter().filter(|o| !o.pass && o.id != 13).map(|o| o.id).collect();
    if !unexpected.is_empty() || !corrected_pass || !stationary {
        eprintln!("acceptance failures: {unexpected:?}");
        std::process::exit(1);
    }
}
