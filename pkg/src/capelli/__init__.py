"""Exact checks of Capelli-type norm identities over Weyl algebras."""
__version__ = "0.1.0"
