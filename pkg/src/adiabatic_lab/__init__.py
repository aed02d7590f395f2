"""Adiabatic dynamics toolkit for closed and open quantum systems.

Subpackages cover operator algebra and superoperator vectorization,
deterministic integrators, tracked eigensystems, adiabaticity condition
estimators in multiple frames, open-system adiabatic propagation,
thermodynamic bookkeeping, transitionless driving with energy accounting,
and quantum-battery charge/discharge scenarios.
"""

__version__ = "0.1.0"
