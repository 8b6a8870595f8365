# multiloop package
from dmkit.multiloop.mu import MuResult, mu_diag, mu_lower, mu_quick, mu_upper
from dmkit.multiloop.loops import (ChannelList, Points, as_points, broken_loop, loop_at_a_time,
                                   loop_at_points)
from dmkit.multiloop.margin import (MDeltaSystem, MultiLoopResult, MultiLoopVerification, build_m,
                                    multiloop_margin, verify_multiloop_destabilizing)

__all__ = [
    "MuResult", "mu_diag", "mu_lower", "mu_quick", "mu_upper",
    "ChannelList", "Points", "as_points", "broken_loop", "loop_at_a_time", "loop_at_points",
    "MDeltaSystem", "MultiLoopResult", "MultiLoopVerification", "build_m", "multiloop_margin",
    "verify_multiloop_destabilizing",
]
