# physics/__init__.py
"""Domain library: special functions, renewal statistics, quantum and classical maps, theory."""
