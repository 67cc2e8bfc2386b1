"""Camera forensics toolkit: PRNU removal, PCE verification, and learned
device fingerprints from PRNU-free image patches."""

__version__ = "0.1.0"
