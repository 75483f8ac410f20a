use dnls_cli::acceptance::{self, is_known_unattainable, CriterionRun, KNOWN_UNATTAINABLE};

fn report(run: &CriterionRun) {
    let verdict = if run.checks.iter().all(|c| c.pass) {
        "PASS"
    } else if run.pass() {
        "FAIL (known unattainable checks only)"
    } else {
        "FAIL"
    };
    println!(
        "criterion {:>2}: {verdict} ({:.1} s)",
        run.id, run.elapsed_s
    );
    for c in &run.checks {
        let mark = match (c.pass, is_known_unattainable(c)) {
            (true, _) => "ok",
            (false, true) => "FAIL (known unattainable)",
            (false, false) => "FAIL",
        };
        println!(
            "    {:<44} value {:>12.5e} target {:>12.5e} tol {:>9.2e} {:?} {mark}",
            c.label, c.value, c.target, c.tolerance, c.relation
        );
    }
}

#[test]
fn acceptance_criteria() {
    let mut runs = Vec::new();
    for id in acceptance::CRITERIA {
        let run = acceptance::run(id).unwrap_or_else(|e| panic!("criterion {id}: {e:#}"));
        report(&run);
        runs.push(run);
    }
    let determinism = acceptance::determinism(&runs).expect("rerun");
    report(&determinism);
    runs.push(determinism);

    println!("known unattainable: {}", KNOWN_UNATTAINABLE.join(", "));
    let failed: Vec<String> = runs
        .iter()
        .flat_map(|r| r.checks.iter())
        .filter(|c| !c.pass && !is_known_unattainable(c))
        .map(|c| format!("{}:{}", c.criterion_id, c.label))
        .collect();
    assert!(failed.is_empty(), "failed checks: {failed:?}");
}
