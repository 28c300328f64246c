"""Performance-augmented diverse GANs for multi-objective design synthesis, in numpy."""

__version__ = "0.1.0"
