"""Trust-region search over Gaussian source-noise spaces."""

__version__ = "0.1.0"
