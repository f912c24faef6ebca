# harness/__init__.py
"""Orchestration layer: experiment config, fits, CSV output, manifests, comparisons."""
