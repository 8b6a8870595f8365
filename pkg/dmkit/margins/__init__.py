# margins package
from dmkit.margins.classical import (ClassicalMargins, GainMargins, PhaseMargin, classical_margins,
                                     gain_crossovers, gain_margins, phase_crossovers, phase_margin,
                                     rotated_loop_poles)
from dmkit.margins.disk import (DiskGeometry, DiskKind, DiskMarginResult, DiskSpec, ExclusionDisk,
                                MarginTrace, TradeoffRange, disk_from_phase, disk_from_variation, disk_geometry,
                                disk_map, disk_margin, geometry_margins,
                                freq_margin_trace, gain_phase_tradeoff, guaranteed_gm_pm,
                                nyquist_exclusion, safe_region_curve, skewed_sensitivity, tolerates_variation)
from dmkit.margins.perturbation import (PerturbationLti, Verdict, VerificationReport, check_closure,
                                        verify_destabilizing, worst_perturbation_lti)

__all__ = [
    "ClassicalMargins", "GainMargins", "PhaseMargin", "classical_margins", "gain_crossovers",
    "gain_margins", "phase_crossovers", "phase_margin", "rotated_loop_poles",
    "DiskGeometry", "DiskKind", "DiskMarginResult", "DiskSpec", "ExclusionDisk", "MarginTrace", "disk_map",
    "disk_from_phase", "disk_from_variation", "geometry_margins", "tolerates_variation",
    "TradeoffRange", "disk_geometry", "disk_margin", "freq_margin_trace", "gain_phase_tradeoff",
    "guaranteed_gm_pm", "nyquist_exclusion", "safe_region_curve", "skewed_sensitivity",
    "PerturbationLti", "Verdict", "VerificationReport", "check_closure", "verify_destabilizing",
    "worst_perturbation_lti",
]
