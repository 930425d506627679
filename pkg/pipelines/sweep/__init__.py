"""Seeded parameter sweeps over network realizations and schemes."""
