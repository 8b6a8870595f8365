# lti package
from dmkit.lti.polynomial import Polynomial, poly_roots
from dmkit.lti.systems import StateSpace, TransferFunction, append, feedback, parallel, series
from dmkit.lti.realization import minimal_realization, ss_to_tf, tf_to_ss, tfm_to_ss
from dmkit.lti.model import FeedbackSign, LtiModel, as_model
from dmkit.lti.analysis import (closed_loop, eval_freq, eval_siso, freq_response, is_stable,
                                poles, realize_complex_gain, require_nominal_stability,
                                scalar_close, sensitivity_pair)

__all__ = [
    "Polynomial", "poly_roots",
    "StateSpace", "TransferFunction", "append", "feedback", "parallel", "series",
    "minimal_realization", "ss_to_tf", "tf_to_ss", "tfm_to_ss",
    "FeedbackSign", "LtiModel", "as_model",
    "closed_loop", "eval_freq", "eval_siso", "freq_response", "is_stable", "poles",
    "realize_complex_gain", "require_nominal_stability", "scalar_close", "sensitivity_pair",
]
