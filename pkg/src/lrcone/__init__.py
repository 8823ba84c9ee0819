"""Walk-counting and light-cone tools for a link/plaquette lattice model.

Subpackages:
    lattice    decorated bipartite graph of links and plaquettes
    pathcount  exact walk counts (dynamic programming + closed form + bounds)
    lrbound    commutator-growth bound series with certified truncation
    velocity   cone-velocity extraction: threshold arrivals and envelope fits
    cosmo      dimension-dependent velocity and shrinking-dimension horizon
    cli        command-line front end
"""

__version__ = "0.1.0"
