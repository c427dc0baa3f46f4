"""Bosonized RPA momentum distribution of a lattice Fermi gas.

Modules: ``lattice`` (momenta and model parameters), ``patches`` (Fermi
surface patch decomposition), ``kernel`` (Bogoliubov kernel per k),
``occupation`` (n_q by several routes), ``thermo`` (continuum limits),
``quadrature`` (adaptive Gauss-Kronrod) and ``cli``.
"""

from .config import ConfigError, PotentialSpec, RunConfig
from .kernel import KernelBundle, KernelError, build_kernel
from .lattice import FermiGeometry, InteractionFourier, ModelParams, closed_shell_params, enumerate_fermi_ball
from .occupation import OccupationEngine, quasiparticle_weight
from .patches import PatchConstructionError, PatchSet, build_patchset
from .quadrature import QuadratureError, QuadratureSpec, integrate_interval, integrate_semi_infinite
from .thermo import ThermoParams, dv_nq, thermo_nq

__version__ = "0.1.0"
