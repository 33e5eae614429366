"""
ctnet test suite.

Unit tests per package under tests/unit, CLI round trips under
tests/integration.
"""
