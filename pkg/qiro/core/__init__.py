"""Core utilities, configuration and constants."""
