"""Smoke test for the `amq` extension module against the shipped fixtures.

    maturin develop --release   # or: maturin build && pip install target/wheels/*.whl
    python python/smoke_test.py
"""

import json
import sys
import tempfile
from pathlib import Path

import amq

ROOT = Path(__file__).resolve().parent.parent
FIX = ROOT / "fixtures"


def main() -> int:
    d = amq.Dictionary.load(FIX / "dictionary.tsv")
    store = amq.EmbeddingStore.load(FIX / "embeddings.amqe", d)
    probes = amq.ProbeTable.load(FIX / "probes.tsv")
    print(f"{d!r}, dim {store.dim}, {len(probes)} probes")

    code = d.codes()[0]
    name, _group = d.get(code)
    r = amq.run_query([name], d, store, probes)
    assert r.terms()[0][1] == code, "exact preferred term must rank first"
    print(f"{name!r}: {r!r}")

    loose = r.apply_threshold(0.5)
    assert set(r.retained()) <= set(loose.retained())
    json.loads(loose.to_json())

    gold = FIX / "gold.json"
    with tempfile.TemporaryDirectory() as out:
        report = amq.evaluate(gold, d, store, probes, grid="0.5:0.9:0.1", narrow_only=True, out_dir=out)
        files = sorted(Path(p).name for p in report["artifacts"])
    assert report["narrow"] is not None and len(files) == 8, files
    print(f"evaluation wrote {len(files)} files")

    try:
        amq.run_query(["qwzzkx"], d, store)
    except amq.AmqError as e:
        print(f"expected failure: {e}")
    else:
        raise AssertionError("unmatched input should raise AmqError")

    print("smoke test OK")
    return 0


if __name__ == "__main__":
    sys.exit(main())
