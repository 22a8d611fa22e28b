"""
Numerical toolkit for orthogonal polynomials on the unit circle with
Coulomb-type Verblunsky coefficients.

Engines: Szego recursion (opuc.szego), Pruefer variables (opuc.pruefer),
Bernstein-Szego approximation (opuc.bernstein_szego), resonant angles
(opuc.resonance), singular-part diagnostics (opuc.singular_scan) and
coefficient families (opuc.generators). opuc.runner is the CLI.
"""

__version__ = "0.1.0"
