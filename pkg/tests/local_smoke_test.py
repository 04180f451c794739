"""
Local end-to-end smoke test
===========================

1. Synthesize the desk dataset and write it as PNG frames + manifest.
2. Run the custom protocol on it for a few epochs.
3. Print the resulting files and the URL the results API would serve.

    python tests/local_smoke_test.py [epochs]
"""

# ---- path shim: make parent folder importable ---------------------------
import pathlib, sys
TEST_DIR = pathlib.Path(__file__).resolve().parent
PROJECT_ROOT = TEST_DIR.parent
sys.path.insert(0, str(PROJECT_ROOT))
# -------------------------------------------------------------------------

import logging

from openfer.ingest import load_manifest, synthesize_dataset, synthetic_spec, write_dataset
from openfer.runners import run_protocol
from openfer.utils.paths import load_config, run_dir, with_values


def main(argv: list[str]) -> None:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    epochs = int(argv[1]) if len(argv) > 1 else 3
    conf = load_config()
    conf = with_values(conf, run={"name": "smoke"}, optim={"epochs": epochs},
                       protocol={"repeats": 1}).validate()

    # Step 1 – synthesize and round-trip through a manifest
    manifest = write_dataset(synthesize_dataset(synthetic_spec(conf.data.synthetic)),
                             run_dir(conf, "synthetic"))
    dataset = load_manifest(manifest)

    # Step 2 – protocol
    run_protocol(conf, dataset)

    # Step 3 – list artefacts
    root = run_dir(conf)
    print("\n── ARTEFACTS ──")
    for f in sorted(p for p in root.rglob("*") if p.is_file() and "synthetic" not in p.parts):
        print("   •", f.relative_to(root))

    print(f"\nServe → uvicorn openfer.api.results_api:app --port {conf.api.port}")
    print(f"Open  → http://localhost:{conf.api.port}/runs/{conf.run.name}/report")


if __name__ == "__main__":
    main(sys.argv)
