from databricks.labs.rcn.selfdual.profiles import (
    QaProfile,
    QaShape,
    build_qa,
    dirichlet_trace,
    knee,
    knee_energy,
    knee_phase_shift,
    qa_values,
    selfdual_residual,
    smooth_step,
    theta3,
    theta3_lattice,
)
from databricks.labs.rcn.selfdual.solver import (
    PositivityError,
    ProbeParams,
    ProbeRecord,
    SelfDualSolution,
    blend_test_function,
    blend_weight,
    blended_w,
    default_blend_radius,
    default_height,
    far_field_weight,
    knee_test_function,
    solve_dirichlet_selfdual,
    upper_bound_probe,
    zipper_seed,
)

__all__ = [
    "PositivityError",
    "ProbeParams",
    "ProbeRecord",
    "QaProfile",
    "QaShape",
    "SelfDualSolution",
    "blend_test_function",
    "blend_weight",
    "blended_w",
    "build_qa",
    "default_blend_radius",
    "default_height",
    "dirichlet_trace",
    "far_field_weight",
    "knee",
    "knee_energy",
    "knee_phase_shift",
    "knee_test_function",
    "qa_values",
    "selfdual_residual",
    "smooth_step",
    "solve_dirichlet_selfdual",
    "theta3",
    "theta3_lattice",
    "upper_bound_probe",
    "zipper_seed",
]
