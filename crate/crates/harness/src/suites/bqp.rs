//! BQP reduction: `Tr(ρ^k O) = λ^k p_x` on random circuits.

use anyhow::Result;
use powertrace_core::bounds::{bqp_instance, first_qubit_accept};
use powertrace_core::instances::random_unitary;
use powertrace_core::rng::{derive_seed, stream};

use super::{erase, execute, Check, Erased, Outcome};
use crate::config::ResolvedConfig;
use crate::instance::{record_seed, InstanceSpec};

const IDENTITY_TOL: f64 = 1e-10;

pub(crate) const HEADER: &[&str] = &[
    "seed",
    "qubits",
    "q",
    "k",
    "lambda",
    "p_x",
    "trace_value",
    "identity_defect",
    "threshold_a",
    "threshold_b",
    "bernoulli_holds",
    "pass",
];

pub(super) fn run(cfg: &ResolvedConfig, jobs: usize) -> Result<Erased> {
    let mut tasks = Vec::new();
    for &k in &cfg.k {
        for _ in 0..cfg.runs {
            let seed = record_seed(cfg.seed, tasks.len());
            tasks.push((InstanceSpec::from_config(cfg, seed, k, cfg.eps[0]), ()));
        }
    }
    let collected = execute(jobs, tasks, |spec, _| {
        let u = random_unitary(1 << spec.qubits, &mut stream(derive_seed(spec.seed, 0), 0));
        let inst = bqp_instance(&u, &first_qubit_accept(spec.qubits)?, cfg.q, spec.k)?;
        let pass = inst.identity_defect <= IDENTITY_TOL && inst.bernoulli_holds;
        let cells = vec![
            spec.seed.into(),
            spec.qubits.into(),
            inst.q.into(),
            inst.k.into(),
            inst.lambda.into(),
            inst.p_x.into(),
            inst.trace_value.into(),
            inst.identity_defect.into(),
            inst.thresholds.0.into(),
            inst.thresholds.1.into(),
            inst.bernoulli_holds.into(),
            pass.into(),
        ];
        let defect = inst.identity_defect;
        Outcome::new(&inst, Some(pass), vec![cells], defect)
    })?;
    let worst = collected.data().map(|(_, &d)| d).fold(0.0, f64::max);
    let checks = vec![Check::at_most("max_identity_defect", worst, IDENTITY_TOL)];
    Ok(erase(HEADER, collected, checks))
}
