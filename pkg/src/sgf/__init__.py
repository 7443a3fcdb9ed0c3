"""Finitely generated subgroups of free groups: Stallings graphs, finite
quotients, profinite measure bounds and certified constructions."""

from __future__ import annotations

from .constructions import (
    BaseRecord,
    OlshanskiiCertificate,
    ProductWitness,
    bounded_base,
    find_small_product_quotient,
    kernel_ball_check,
    lemma_weak_ol,
    olshanskii,
    product_witness,
    verify_olshanskii,
)
from .errors import (
    AlphabetError,
    AlreadySmaller,
    AvoidInSubgroup,
    CapExceeded,
    InfiniteIndexError,
    InvalidInput,
    LiftNotFound,
    SearchFailed,
    SGFError,
)
from .graph import (
    INFINITE,
    StallingsGraph,
    complete,
    conjugate,
    contains,
    from_generators,
    index,
    intersect,
    join,
    rank,
    relative_index,
)
from .quotient import (
    Caps,
    FiniteQuotient,
    MeasureBound,
    coset_action,
    eval_word,
    image_product_size,
    image_subgroup,
    measure_product_bound,
    measure_subgroup,
    normal_core_data,
)
from .words import FreeGroupContext, Word, reduce

__all__ = [name for name in dir() if not name.startswith("_") and name != "annotations"]
