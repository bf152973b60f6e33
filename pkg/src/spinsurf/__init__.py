"""Spinor representations of surfaces in three-dimensional Lorentzian spaces.

Submodules: clifford (algebras and spin groups), lie (metric Lie groups and
the space catalog), chart (sampled surfaces and their geometry), spinor
(Killing-type equations and solvers), immersion (reconstruction), correspondence
(Dirac, Lawson-type and Calabi-type correspondences), pipelines and cli.
"""

__version__ = "0.1.0"
