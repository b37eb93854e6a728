//! Runs every acceptance criterion at full size and prints one line each.
//!
//! Criteria listed in `KNOWN_FAILURES` are still executed and reported as
//! failing; only an unexpected failure (or an unexpected pass) makes this
//! target exit non-zero.

use std::process::ExitCode;

use epzero_core::checks::*;

const SEED: u64 = 20240611;

/// The dispersive constant drifts with the dyadic index beyond the allowed
/// factor: the bound grows like `2^k`, the measured sup like `2^{k/2}`.
const KNOWN_FAILURES: &[u32] = &[10];

fn main() -> ExitCode {
    let mut outcomes = Vec::new();
    let mut report = |c: CheckOutcome| {
        println!("{}", c.line());
        outcomes.push(c);
    };
    report(partition_of_unity(SEED));
    report(almost_orthogonality(SEED));
    report(leray_projection(SEED));
    report(kawashima_identity(SEED));
    report(semigroup_exactness());
    for c in solver_checks(&LinearRegimeSettings::default()) {
        report(c);
    }
    report(uniform_decay(&DecaySettings::default()));
    report(energy_equivalence(SEED));
    report(dispersive_bound_check(&DispersiveSettings::default()));
    report(strichartz_scaling(&StrichartzSettings::default()));
    report(zero_mass_limit(&LimitSettings::default()));
    report(degenerate_coupling(SEED));

    let passed = outcomes.iter().filter(|c| c.passed).count();
    println!("acceptance: {passed}/{} criteria pass", outcomes.len());
    let mut ok = outcomes.len() == 13;
    for c in &outcomes {
        let known = KNOWN_FAILURES.contains(&c.id);
        if !c.passed && !known {
            println!("unexpected failure: criterion {}", c.id);
            ok = false;
        }
        if c.passed && known {
            println!("criterion {} now passes; remove it from KNOWN_FAILURES", c.id);
            ok = false;
        }
        if !c.passed && known {
            println!("known failure: criterion {}", c.id);
        }
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
