"""Persistence for sample batches.

Binary format (extension-agnostic, magic-identified):

* magic bytes ``CHAO1\\n``;
* a UTF-8 header of ``key=value`` lines (``model``, ``p``, ``seed``,
  ``meta``, ``count``, ``has_gamma``), terminated by one blank line;
* the sample payload: ``count`` little-endian float64 values of ``F``,
  then, when ``has_gamma`` is ``1``, another ``count`` values of ``Gamma``.

CSV interchange writes ``f,gamma`` (or just ``f``) columns with full-precision
``repr`` floats, so identical batches serialize to identical bytes.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractError
from .simulate import SampleBatch

__all__ = ["save_batch", "load_batch", "batch_to_csv"]

_MAGIC = b"CHAO1\n"


def save_batch(batch: SampleBatch, path) -> None:
    """Write the binary batch file."""
    header = [
        "model=%s" % batch.model,
        "p=%d" % batch.p,
        "seed=%d" % batch.seed,
        "meta=%s" % batch.meta,
        "count=%d" % batch.n_samples,
        "has_gamma=%d" % (1 if batch.has_gamma else 0),
    ]
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(("\n".join(header) + "\n\n").encode("utf-8"))
        fh.write(np.asarray(batch.f_samples, dtype="<f8").tobytes())
        if batch.has_gamma:
            fh.write(np.asarray(batch.gamma_samples, dtype="<f8").tobytes())


def load_batch(path) -> SampleBatch:
    """Read a binary batch file written by :func:`save_batch`."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if not blob.startswith(_MAGIC):
        raise ContractError("not a batch file: missing CHAO1 magic bytes")
    try:
        head_end = blob.index(b"\n\n", len(_MAGIC))
    except ValueError:
        raise ContractError("batch file has no header terminator") from None
    fields: dict[str, str] = {}
    for line in blob[len(_MAGIC):head_end].decode("utf-8").splitlines():
        key, sep, value = line.partition("=")
        if not sep:
            raise ContractError("malformed header line %r" % line)
        fields[key] = value
    try:
        count = int(fields["count"])
        has_gamma = fields["has_gamma"] == "1"
        p = int(fields["p"])
        seed = int(fields["seed"])
        model = fields["model"]
        meta = fields["meta"]
    except KeyError as exc:
        raise ContractError("batch header is missing key %s" % exc) from None
    payload = blob[head_end + 2:]
    expected = count * 8 * (2 if has_gamma else 1)
    if len(payload) != expected:
        raise ContractError("batch payload has %d bytes, expected %d"
                            % (len(payload), expected))
    f = np.frombuffer(payload[:count * 8], dtype="<f8").copy()
    gamma = (np.frombuffer(payload[count * 8:], dtype="<f8").copy()
             if has_gamma else None)
    return SampleBatch(model=model, p=p, seed=seed, f_samples=f,
                       gamma_samples=gamma, meta=meta)


def batch_to_csv(batch: SampleBatch, path) -> None:
    """Write samples as CSV (``f,gamma`` columns, repr-exact floats)."""
    with open(path, "w", encoding="utf-8") as fh:
        if batch.has_gamma:
            fh.write("f,gamma\n")
            for fv, gv in zip(batch.f_samples, batch.gamma_samples):
                fh.write("%s,%s\n" % (repr(float(fv)), repr(float(gv))))
        else:
            fh.write("f\n")
            for fv in batch.f_samples:
                fh.write("%s\n" % repr(float(fv)))
