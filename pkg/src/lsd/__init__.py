"""Executable visual design language: graph rewriting over logic programs
whose answers are exact-rational solid models.

Public surface:

- :mod:`lsd.text` — textual front end (parse, compile, canonical print)
- :mod:`lsd.core` — program/graph IR and validation
- :mod:`lsd.engine` — the rewriting engine (run, enumerate, trace, replay)
- :mod:`lsd.solids` — 2D exact-rational solid modeler
- :mod:`lsd.anim` — bond animation planning and SVG rendering
- :mod:`lsd.masterkey` — standalone master-keying oracle and solver
- :mod:`lsd.cli` — the ``lsd`` command-line tool
"""

__all__ = [
    "core",
    "text",
    "engine",
    "solids",
    "params",
    "anim",
    "masterkey",
    "cli",
]

__version__ = "1.0.0"
