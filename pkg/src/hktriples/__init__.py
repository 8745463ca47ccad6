"""Hyperkahler triples on cohomogeneity-one 4-manifolds.

Subpackages:

- ``forms``     exact exterior calculus on the invariant coframe
- ``triples``   the constraint system on triples of 2-forms
- ``profiles``  the two invariant ODE reductions and their closed-form catalog
- ``flow``      boundary framings and the framing evolution
- ``su2``       representation-theoretic building blocks
- ``spectrum``  curl / boundary Dirac spectra and frequency classification
- ``collar``    collar form of the Dirac operator and Green's identity
- ``asd``       closed anti-self-dual 2-forms on the flat 4-ball
- ``cli``       command-line front end
"""

from . import forms, triples, profiles, flow, su2, spectrum, collar, asd  # noqa: F401

__version__ = "0.1.0"
