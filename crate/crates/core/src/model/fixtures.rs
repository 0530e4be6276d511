//! Canonical small instances, shared by tests, docs, and the bundled
//! fixture files under `fixtures/` at the workspace root.

use super::MpvcProblem;

/// Biactive corner with `g: x1 - x2 <= 0`, `H = x1`, `G = x2`, objective 0.
pub fn ex21() -> MpvcProblem {
    MpvcProblem::from_str(include_str!("../../../../fixtures/ex21.mpvc"))
        .expect("bundled fixture parses")
}

/// `min x1^2 + x2^2` with `g: x1 <= 0`, `H = x2`, `G = -x1`.
pub fn ex22() -> MpvcProblem {
    MpvcProblem::from_str(include_str!("../../../../fixtures/ex22.mpvc"))
        .expect("bundled fixture parses")
}

/// `ex22` with the inequality dropped, for the classical l1 penalty.
pub fn ex22_no_g() -> MpvcProblem {
    let base = ex22();
    MpvcProblem::new(
        "ex22-no-g",
        base.vars().clone(),
        base.objective().clone(),
        Vec::new(),
        Vec::new(),
        base.vc().to_vec(),
    )
    .expect("fixture is valid")
}

/// `min |x1| + |x2|` with `g: x1 + x2 <= 0`, `H = x1`, `G = x1^2 - x2^2`.
pub fn ex41() -> MpvcProblem {
    MpvcProblem::from_str(include_str!("../../../../fixtures/ex41.mpvc"))
        .expect("bundled fixture parses")
}
