"""Verifiable auditing of hidden reasoning-token counts.

The compiled extension carries the full pipeline: tokenization, the
embedding-provider contract, fingerprint Merkle commitments with inclusion
proofs, matching-head scoring, rule and DeepSets verifiers, inflation
adversaries, and the multi-round audit protocol.
"""

from coin_audit._core import *  # noqa: F401,F403
from coin_audit._core import __doc__ as _core_doc

__all__ = [name for name in dir() if not name.startswith("_")]
__doc__ = _core_doc
