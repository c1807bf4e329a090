from .lower import JointDensity, atom_for, lower
from .nodes import (ONE, Atom, Cond, Density, Guarded, Integral, IndexedProduct,
                    Product, Recip, atoms, free_vars, node_count, render)

__all__ = ["JointDensity", "lower", "atom_for", "ONE", "Atom", "Cond", "Density", "Guarded",
           "Integral", "IndexedProduct", "Product", "Recip", "atoms", "free_vars",
           "node_count", "render"]
