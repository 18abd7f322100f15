"""Question-side score providers for building ranking datasets from feedback."""

from __future__ import annotations

from .textproc import fnv1a64


def hashed_score_provider():
    """Label-independent synthetic confidences, a pure function of the triple key.

    Used by harness runs that study ranking behavior without a trained
    classifier in the loop.
    """

    def provider(job, triple):
        h = fnv1a64(f"{job.id}|{triple.template.name}|{triple.parameter or ''}")
        u1 = (h % 10_000) / 10_000.0
        u2 = ((h >> 16) % 10_000) / 10_000.0
        tc_score = 0.55 + 0.44 * u1
        linker = 1.0 if triple.parameter is None else 0.6 + 0.39 * u2
        return tc_score, 1, linker

    return provider
