"""action-synth - human action video synthesis from small seed datasets."""
__version__ = "0.1.0"
