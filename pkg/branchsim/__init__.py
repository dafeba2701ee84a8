"""
Exact state-vector simulation of observer branching, memory erasure and
reversible measurement under Many-Worlds and collapse semantics.
"""

__version__ = "0.1.0"
