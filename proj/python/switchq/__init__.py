"""Constant step-size tabular Q-learning as a stochastic affine switching system.

Thin wrapper around the C++ core: co-simulation of the iterate with its lower
and upper comparison systems, Lyapunov certificates, finite-time error bounds
and the Monte Carlo verification checklist.
"""

from ._core import (
    CertificateFailure,
    InvariantViolation,
    Mdp,
    ParseFailure,
    ValidationError,
    __version__,
    builtin_mdp,
    co_simulate,
    decay_rate,
    greedy_policy,
    load_mdp,
    lyapunov_certificate,
    noise_bounds,
    random_mdp,
    run_ensemble,
    sample_complexity,
    solve_qstar,
    theorem1_bound,
    theorem2_bound,
    verify_all,
    write_paper_example_datasets,
)

__all__ = [
    "CertificateFailure",
    "InvariantViolation",
    "Mdp",
    "ParseFailure",
    "ValidationError",
    "__version__",
    "builtin_mdp",
    "co_simulate",
    "decay_rate",
    "greedy_policy",
    "load_mdp",
    "lyapunov_certificate",
    "noise_bounds",
    "random_mdp",
    "run_ensemble",
    "sample_complexity",
    "solve_qstar",
    "theorem1_bound",
    "theorem2_bound",
    "verify_all",
    "write_paper_example_datasets",
]
