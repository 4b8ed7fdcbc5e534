"""Generate a ready-to-open demo project from one of the synthetic scenes.

Usage:
    python3 scripts/make_demo_project.py --out demo --scene estuary --run

The output directory ends up holding historical.png, modern.png (+ world
file), and project.json with eight exact GCPs, i.e. everything the CLI and
the HTTP workbench expect. With --run the full pipeline also writes the
artifacts/ directory so the report is browsable immediately.
"""

import argparse
from pathlib import Path

from lostwater.changes import ChangeClass
from lostwater.pipeline import run_pipeline
from lostwater.synth import build_estuary_fixture, build_meander_fixture, fixture_project

SCENES = {
    "estuary": build_estuary_fixture,
    "meander": build_meander_fixture,
}


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=Path("demo-project"))
    parser.add_argument("--scene", choices=sorted(SCENES), default="estuary")
    parser.add_argument(
        "--run", action="store_true", help="also run the pipeline and write artifacts"
    )
    args = parser.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    fixture = SCENES[args.scene](args.out)
    fixture_project(fixture)
    print(f"wrote {args.out}/project.json ({fixture.name}, {len(fixture.gcps)} GCPs)")

    if args.run:
        result = run_pipeline(args.out)
        counts = result.change_map.counts()
        print(
            f"LOST {counts[ChangeClass.LOST]}  "
            f"PERSISTENT {counts[ChangeClass.PERSISTENT]}  "
            f"NEW {counts[ChangeClass.NEW]}"
        )
        for name, path in sorted(result.artifacts.items()):
            print(f"wrote {path}")


if __name__ == "__main__":
    main()
