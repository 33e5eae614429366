"""
Runtime configuration for ctnet.
"""

import os
from dataclasses import dataclass

from dotenv import load_dotenv

# Pick up a project-local .env before reading CTNET_* variables
load_dotenv()

_TRUE_VALUES = ("1", "true", "yes", "on")


@dataclass
class CTNetConfig:
    """Library and CLI configuration settings."""

    # Randomness
    seed: int = 42

    # Logging
    log_level: str = "INFO"

    # Debug-mode finiteness assertions after every library op
    debug: bool = False

    # Storage precision for saved tensors: float64 | float32
    dtype: str = "float64"

    # Where CLI commands write reports when --out is relative
    output_dir: str = "."

    def __post_init__(self):
        """Load from environment variables."""
        self.seed = int(os.getenv("CTNET_SEED", self.seed))
        self.log_level = os.getenv("CTNET_LOG_LEVEL", self.log_level).upper()
        self.debug = os.getenv("CTNET_DEBUG", str(self.debug)).lower() in _TRUE_VALUES
        self.dtype = os.getenv("CTNET_DTYPE", self.dtype)
        self.output_dir = os.getenv("CTNET_OUTPUT_DIR", self.output_dir)

        if self.dtype not in ("float64", "float32"):
            raise ValueError(f"CTNET_DTYPE must be float64 or float32, got {self.dtype!r}")

    def resolve_output(self, path: str) -> str:
        """Resolve an output path against output_dir."""
        if os.path.isabs(path):
            return path
        return os.path.join(self.output_dir, path)


# Global config instance
config = CTNetConfig()
