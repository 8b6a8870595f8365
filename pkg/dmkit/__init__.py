"""
dmkit - classical, disk-based and multi-loop robustness margins for
linear time-invariant feedback loops.

    from dmkit import LtiModel, TransferFunction, disk_margin
    L = LtiModel(TransferFunction.of([25], [1, 10, 10, 10]))
    disk_margin(L, sigma=0).alpha      # ~0.46
"""
from dmkit.config import TOOL_VERSION as __version__
from dmkit.exceptions import DmkitError
from dmkit.lti import FeedbackSign, LtiModel, StateSpace, TransferFunction
from dmkit.specnorm import FrequencyGrid, hinf_norm
from dmkit.margins import (DiskSpec, classical_margins, disk_geometry, disk_margin,
                           freq_margin_trace, gain_phase_tradeoff, nyquist_exclusion,
                           verify_destabilizing, worst_perturbation_lti)
from dmkit.multiloop import (Points, build_m, loop_at_a_time, mu_diag, multiloop_margin,
                             verify_multiloop_destabilizing)

__all__ = [
    "__version__", "DmkitError",
    "FeedbackSign", "LtiModel", "StateSpace", "TransferFunction",
    "FrequencyGrid", "hinf_norm",
    "DiskSpec", "classical_margins", "disk_geometry", "disk_margin", "freq_margin_trace",
    "gain_phase_tradeoff", "nyquist_exclusion", "verify_destabilizing", "worst_perturbation_lti",
    "Points", "build_m", "loop_at_a_time", "mu_diag", "multiloop_margin",
    "verify_multiloop_destabilizing",
]
