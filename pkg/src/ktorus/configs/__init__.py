"""Bundled metric config fixtures (JSON data files)."""
