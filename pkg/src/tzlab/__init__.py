"""tzlab: independence polynomials of tori, exactly and spectrally.

Subpackages cover the combinatorial substrate (lattice), exact polynomial
oracles (exactpoly), numeric transfer-matrix spectra and zero hunting
(transfer), exact eigenvalue power series (qseries), the contour machinery
(contour), abstract polymer models and the interpolation evaluator
(clusterexp), recursive-family dynamics and rasters (dynamics), and a CLI
front end (cli).
"""

__version__ = "0.1.0"
