"""SU(2) Polarimetry - Source Package

Simulation and extraction of the relative phase and visibility of mixed
spin-1/2 beams measured with a flipper-sandwich polarimeter.

Modules:
- spinops: 2x2 spin algebra, SU(2) parametrisation, density operators
- theory: closed-form phases, visibilities and geodesic-path geometry
- polarimeter: operator-level setup simulation, sweeps, counting noise
- extraction: inversion of measured extrema into phase, visibility and r
- trace_io: CSV traces, path files and JSON reports
- cli: simulate / extract / theory / fullrun commands
- config, errors: settings file (and the package version) and exception types
"""
