"""Random Lipschitz worm graphs, density experiments, and discrete p-modulus."""

__version__ = "0.1.0"
