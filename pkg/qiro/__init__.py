"""QIRO quantum-classical compiler toolkit."""

__version__ = "0.1.0"
__author__ = "QIRO Contributors"
