from pinjected import DesignSpec, SimpleBindSpec


def positive_int(value):
    if not isinstance(value, int) or value < 1:
        return f"Expected a positive int, got {value!r}"


__design_spec__ = DesignSpec.new(
    tvz_threads=SimpleBindSpec(
        validator=positive_int,
        documentation="""Number of worker threads used to label the cones of a fan. Read from TVZ_THREADS.""",
    ),
    tvz_truncation_order=SimpleBindSpec(
        validator=positive_int,
        documentation="""Truncation order N of the power-series rings in the local-algebra oracle.""",
    ),
    tvz_logger=SimpleBindSpec(
        validator=lambda v: None if hasattr(v, "info") else f"Expected a logger, got {type(v)}",
        documentation="""The loguru logger every component logs through.""",
    ),
)
