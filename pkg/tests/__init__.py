"""Test suite for action-synth."""
