"""Numerical laboratory for metric perturbations of compact operators."""
