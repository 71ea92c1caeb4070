"""Computational core."""
