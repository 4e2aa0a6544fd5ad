"""NV-13C dynamic nuclear polarization: NOVEL and ISE transfer, bath build-up, angle sweeps."""

__version__ = "0.1.0"
