"""Core plumbing: settings, errors, random streams and result output."""
