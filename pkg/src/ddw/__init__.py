"""Dynamical discrete web toolkit.

Simulation and numerical analysis of coalescing nearest-neighbour walks on
the even planar lattice whose arrow field resamples under independent
Poisson clocks in a second (dynamical) time direction.  Submodules:

- ``field``       the resampling arrow field and switch-event export
- ``web``         forward/dual paths, coalescence and recurrence checks
- ``dynamics``    path evolution in dynamical time, coupled pair readings
- ``sticky``      sticky-pair reference construction and exact endpoint law
- ``exceptional`` nested box events and exceptional-time interval scans
- ``analysis``    tail exponents, dimension bounds, Brownian comparisons
- ``stats``       small statistical helpers (intervals, distances, tests)
"""

from ddw import analysis, dynamics, exceptional, field, stats, sticky, web

__all__ = [
    "analysis",
    "dynamics",
    "exceptional",
    "field",
    "stats",
    "sticky",
    "web",
]

__version__ = "0.1.0"
