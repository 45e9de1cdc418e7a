"""Meshes, cone metrics, discrete operators and model geometries."""
