"""Lattice MRF tissue model: neighborhoods, conditionals, Gibbs sampling, presets."""
