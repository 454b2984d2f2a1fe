"""Whole-image evaluation of learned and conventional intra modes."""
