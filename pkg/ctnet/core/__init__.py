"""Numerical core: tensors, convolutions, excitation and autograd."""
