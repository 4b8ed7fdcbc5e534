"""Empirical fit quality across GCP count and noise level.

For each (n, sigma) cell: sample a mild random homography, n spread GCPs,
add per-coordinate Gaussian noise to the targets, fit, and record the
per-coordinate RMSE. The table shows mean RMSE over the trials next to the
theoretical least-squares floor sigma * sqrt(1 - 8/(2n)) — a healthy fitter
should track the floor closely at every cell.

    python3 scripts/transform_recovery_experiment.py --trials 100
"""

import argparse
import math

import numpy as np

from lostwater.transforms import ControlPointPair, ProjectiveTransform, fit_projective, residual_report


def random_homography(rng) -> ProjectiveTransform:
    angle = rng.uniform(-0.5, 0.5)
    scale = rng.uniform(0.7, 1.4)
    cos, sin = math.cos(angle), math.sin(angle)
    return ProjectiveTransform.from_matrix(
        np.array(
            [
                [scale * cos, -scale * sin, rng.uniform(-200, 200)],
                [scale * sin, scale * cos, rng.uniform(-200, 200)],
                [rng.uniform(-1e-5, 1e-5), rng.uniform(-1e-5, 1e-5), 1.0],
            ]
        )
    )


def spread_points(rng, n: int, extent: float = 1000.0) -> np.ndarray:
    side = int(math.ceil(math.sqrt(n)))
    cells = rng.choice(side * side, size=n, replace=False)
    cw = extent / side
    cols = (cells % side) + rng.uniform(0.15, 0.85, n)
    rows = (cells // side) + rng.uniform(0.15, 0.85, n)
    return np.column_stack((cols * cw, rows * cw))


def cell_rmse(rng, n: int, sigma: float, trials: int) -> float:
    total = 0.0
    for _ in range(trials):
        truth = random_homography(rng)
        gcps = [
            ControlPointPair(
                id=f"p{i}",
                src=(x, y),
                dst=tuple(np.add(truth.apply((x, y)), rng.normal(0.0, sigma, 2))),
            )
            for i, (x, y) in enumerate(spread_points(rng, n))
        ]
        report = residual_report(fit_projective(gcps), gcps)
        total += math.sqrt(sum(r * r for _, r in report.entries) / (2 * n))
    return total / trials


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--trials", type=int, default=100)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    sigmas = (0.0, 0.5, 2.0, 5.0)
    counts = (5, 10, 20, 50)

    header = "  n | " + " | ".join(f"s={s:<4g} (floor)" for s in sigmas)
    print(header)
    print("-" * len(header))
    for n in counts:
        cells = []
        for sigma in sigmas:
            rmse = cell_rmse(rng, n, sigma, args.trials)
            floor = sigma * math.sqrt(max(1.0 - 8.0 / (2 * n), 0.0))
            cells.append(f"{rmse:6.3f} ({floor:5.3f})")
        print(f"{n:3d} | " + " | ".join(cells))


if __name__ == "__main__":
    main()
