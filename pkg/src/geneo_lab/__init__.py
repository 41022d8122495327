"""Group-equivariant operators, observers and interpretable surrogates."""

__version__ = "0.1.0"
