"""
Numerical services: geometry, series, modes, indicial roots, Frobenius branches,
L² classification, radial solver, identity verification and the CLI pipeline
"""
