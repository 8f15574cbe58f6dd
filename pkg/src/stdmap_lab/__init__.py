"""stdmap-lab: a numerical laboratory for the large-parameter standard map.

Modules:
  core_maps      map families on the torus and the slow-fast cylinder
  geometry       critical strips, cone fields, tangent-map checks
  standard_pairs curve/density transport, cuts, iterated decomposition
  statistics     ensemble experiments (CLT, correlations, diffusion)
  cli            command-line entry point (`stdmap-lab`)
  acceptance     executable verification suite behind `stdmap-lab acceptance`
"""

__version__ = "0.1.0"
