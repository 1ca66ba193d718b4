"""Isogeometric boundary element analysis of 3-D elastic bodies with thin inclusions."""
__version__ = "0.1.0"
