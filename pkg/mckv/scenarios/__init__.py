"""Bundled scenario files, loadable by name."""
