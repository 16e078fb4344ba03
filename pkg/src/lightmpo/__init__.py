"""Fisher-information tools for temporally multimode light emitted by a
monitored quantum system: time-bin matrix product operators, a variational
quantum Fisher information solver, fidelity-based lower bounds, and
stochastic-trajectory classical Fisher information."""

from .emitter import (
    EmitterModel,
    GaussianPulse,
    build_pulsed_model,
    build_rabi_model,
    kraus_set,
)
from .mpo import TimeBinMPO, build_deriv_mpo, build_light_mpo, hs_inner, mpo_trace
from .qfi import QfiOptions, QfiResult, compute_qfi
from .subqfi import SubQfiResult, sub_qfi, super_fidelity
from .tsme import TsmeQfiResult, solve_master, tsme_fidelity, tsme_qfi
from .trajectories import (
    CfiEstimate,
    TrajectoryRecord,
    enumerate_pd_cfi,
    estimate_cfi,
    simulate_batch,
)

__version__ = "0.1.0"

__all__ = [
    "EmitterModel",
    "GaussianPulse",
    "build_pulsed_model",
    "build_rabi_model",
    "kraus_set",
    "TimeBinMPO",
    "build_deriv_mpo",
    "build_light_mpo",
    "hs_inner",
    "mpo_trace",
    "QfiOptions",
    "QfiResult",
    "compute_qfi",
    "SubQfiResult",
    "sub_qfi",
    "super_fidelity",
    "TsmeQfiResult",
    "solve_master",
    "tsme_fidelity",
    "tsme_qfi",
    "CfiEstimate",
    "TrajectoryRecord",
    "enumerate_pd_cfi",
    "estimate_cfi",
    "simulate_batch",
    "__version__",
]
