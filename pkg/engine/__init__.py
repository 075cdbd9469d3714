"""
__init__.py for engine package
Numerical core: linear algebra, random streams, Lasso / OPT-Lasso solvers,
sequential-estimation and bandit experiments, and theory fixtures.
"""
