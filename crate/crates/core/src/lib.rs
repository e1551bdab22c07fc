//! Numerical verification of precision bounds for quantum parameter
//! estimation: the expectation-value bound ΔX ≥ κ/[ν(⟨H⟩−E0)], the companion
//! Cramér-Rao bound 1/(√ν·ΔH), the quantum-speed-limit machinery behind
//! them, a brute-force verifier for the Tchebychev/fidelity lemma chain, and
//! Monte Carlo estimation experiments that test bound compliance.

pub mod bounds;
pub mod estimation;
pub mod kappa;
pub mod lemma;
pub mod linalg;
pub mod montecarlo;
pub mod qstate;
pub mod rng;
pub mod scenario;
pub mod speed_limit;
