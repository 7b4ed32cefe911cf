"""Exception hierarchy shared by the library and the command line.

Every error carries the process exit code the CLI reports for it.
"""

from __future__ import annotations

from collections.abc import Sequence


class TvzError(Exception):
    exit_code: int = 1


class DomainError(TvzError):
    """The input is well formed but mathematically unsupported or invalid."""

    exit_code = 1


class TruncationError(DomainError):
    pass


class DocumentError(TvzError):
    """Reading, decoding or schema-checking an input document failed."""

    exit_code = 2


class DiscrepancyError(TvzError):
    """A structural property the construction guarantees did not hold."""

    exit_code = 3


class LatticeError(DiscrepancyError):
    pass


def create_document_error_message(
    path: str,
    problem: str,
    locations: Sequence[str] = (),
) -> str:
    """Create a detailed error message for an unreadable cover document."""
    shown = "\n  ".join(list(locations)[:20])
    if len(locations) > 20:
        shown += f"\n  ... and {len(locations) - 20} more"

    return f"""
CoverDocument Error: Cannot load '{path}'

Problem: {problem}
{f"Locations:{chr(10)}  {shown}" if locations else ""}

How to fix this issue:

1. Check that the file is JSON with the sections "vertices", "edges",
   "target" and optionally "legs" and "options"
2. Ensure every id is unique and every referenced id exists
3. Write rationals as strings of the form "p/q"

Example of a minimal document:
   ```json
   {{"vertices": [{{"id": "C", "genus": 2, "weight": 3, "target": "Ct"}}],
    "target": {{"vertices": [{{"id": "Ct", "branch_legs": 6}}], "edges": []}},
    "edges": [], "legs": []}}
   ```
"""


def create_truncation_error_message(operation: str, order: int) -> str:
    return f"""
LocalAlgebra Error: {operation} is not stable at truncation order {order}

How to fix this issue:

1. Increase the truncation order, e.g. `tvz algebra --truncation {order + 4} ...`
2. Or override `tvz_truncation_order` in your __pinjected__.py:
   ```python
   from pinjected import design
   from tropical_vz import load_env_design

   __design__ = load_env_design + design(tvz_truncation_order={order + 4})
   ```
"""
