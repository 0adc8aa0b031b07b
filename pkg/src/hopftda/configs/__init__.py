"""Bundled experiment configurations."""
