"""Benjamin-Ono hierarchy laboratory: zero-dispersion limits, explicit
resolvent formulas, solitons and small-dispersion simulation."""

__version__ = "0.1.0"
