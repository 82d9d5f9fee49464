"""Numerical building blocks: quadrature, analytic tails, series analysis, brute-force oracle."""
