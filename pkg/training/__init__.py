"""Patch datasets and gradient-descent training of the learned predictors."""
