"""Numerical laboratory for a two-medium viscoelastic transmission wave system.

Subpackages cover the spatial setup (`geometry`), Prony relaxation kernels and
the boundary memory operator (`kernel`), bicharacteristic tracing (`rays`),
the geometric observability construction (`gcc`), the time-domain field solver
(`solver`), decay/observability estimation (`observability`), and the scenario
runner (`cli`).
"""

__version__ = "0.1.0"
