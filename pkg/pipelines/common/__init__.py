"""Shared helpers for the experiment pipelines: checksum-guarded writes."""
