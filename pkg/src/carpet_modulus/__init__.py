"""Discrete transboundary and carpet modulus on planar and cylindrical scenes."""
from .carpets import Boundary, CylinderDomain, Scene, carpet_to_scene, cylinder_from_height, standard_carpet
from .config import Config
from .grid import FamilySpec, discretize, fill_residual
from .modulus import carpet_modulus, classical_modulus, modulus, transboundary_modulus
from .uniformizer import Layout, uniformize

__version__ = "0.1.0"
