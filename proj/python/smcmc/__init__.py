"""Sequential MCMC filters with Langevin and Hamiltonian kernels.

Configurations are passed as the same ``section.key = value`` text the command
line tool reads; :func:`config` builds that text from keyword dictionaries.
"""

from ._core import (
    build_fingerprint,
    chain_ess,
    generate_dataset,
    kalman_filter,
    list_algorithms,
    log_mse_ratio,
    log_relative_mse,
    normalize_config,
    plan_table,
    run_experiment,
    run_filter,
    run_seed,
    weight_ess,
)


def config(**sections):
    """config(model={"d": 16}, algorithm={"name": "smhmc"}) -> key = value text."""
    lines = []
    for section, entries in sections.items():
        for key, value in entries.items():
            if isinstance(value, bool):
                value = "true" if value else "false"
            lines.append(f"{section}.{key} = {value}")
    return "\n".join(lines) + "\n"


__all__ = [
    "build_fingerprint",
    "chain_ess",
    "config",
    "generate_dataset",
    "kalman_filter",
    "list_algorithms",
    "log_mse_ratio",
    "log_relative_mse",
    "normalize_config",
    "plan_table",
    "run_experiment",
    "run_filter",
    "run_seed",
    "weight_ess",
]
