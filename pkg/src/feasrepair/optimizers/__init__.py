"""Population-based optimizers sharing one repair interface."""
from .de import DeConfig, run_de
from .pso import PsoConfig, run_pso
from .rga import RgaConfig, polynomial_mutation, run_rga, sbx_crossover

__all__ = ["DeConfig", "PsoConfig", "RgaConfig", "polynomial_mutation", "run_de", "run_pso",
           "run_rga", "sbx_crossover"]
