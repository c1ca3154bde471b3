"""Benchmark CLI: seeded desk-scale experiment drivers with CSV + SVG output."""
