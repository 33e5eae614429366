"""Command-line entry point: analyze, verify, probe-rf, train-toy."""

from .main import build_parser, main

__all__ = ["build_parser", "main"]
