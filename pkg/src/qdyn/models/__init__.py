"""Bundled example model files (JSON documents, one per physical setup)."""
