"""fedspike: federated classification of spike protein sequence variants."""

__version__ = "0.1.0"
