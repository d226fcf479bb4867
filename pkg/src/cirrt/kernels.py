"""Backend selection for the numeric kernels.

The compiled extension is used when importable; setting the environment
variable ``CIRRT_PURE_PYTHON=1`` forces the pure-Python fallback.
"""

from __future__ import annotations

import os

if os.environ.get("CIRRT_PURE_PYTHON", "") not in ("", "0"):
    from . import _pykernels as backend
else:
    try:
        from . import _ckernels as backend
    except ImportError:  # extension not built
        from . import _pykernels as backend

BACKEND = "compiled" if backend.__name__.endswith("_ckernels") else "python"

OK, INFEASIBLE, COLLIDING = 0, 1, 2

solve_coeffs = backend.solve_coeffs
jerk_cost = backend.jerk_cost
evaluate = backend.evaluate
state_at = backend.state_at
input_feasible = backend.input_feasible
min_on_interval = backend.min_on_interval
first_hit = backend.first_hit
check_edge = backend.check_edge
costs_to_target = backend.costs_to_target
costs_from_source = backend.costs_from_source
batch_costs = backend.batch_costs
real_roots = backend.real_roots
screen = backend.screen
