"""Generate the synthetic penguins-like fixture used by the test suites.

Three species clusters over six numeric measurements, 2,000 rows, with a
sprinkling of missing ("NA") cells so row-dropping paths are exercised.
"""
import csv
import sys

import numpy as np

SPECIES = {
    # bill_length, bill_depth, flipper_length, body_mass, delta_15n, delta_13c
    "Adelie": ([38.8, 18.3, 190.0, 3700.0, 8.86, -25.8], [2.6, 1.2, 6.5, 450.0, 0.42, 0.59]),
    "Chinstrap": ([48.8, 18.4, 195.8, 3733.0, 9.36, -24.6], [3.3, 1.1, 7.1, 380.0, 0.37, 0.24]),
    "Gentoo": ([47.5, 15.0, 217.2, 5076.0, 8.25, -26.2], [3.1, 1.0, 6.5, 500.0, 0.26, 0.54]),
}
COLUMNS = [
    "bill_length_mm",
    "bill_depth_mm",
    "flipper_length_mm",
    "body_mass_g",
    "delta_15n",
    "delta_13c",
]


def main(path: str, rows: int = 2000, seed: int = 20201) -> None:
    rng = np.random.default_rng(seed)
    names = list(SPECIES)
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["species"] + COLUMNS)
        for _ in range(rows):
            sp = names[rng.integers(len(names))]
            mean, sd = (np.array(v) for v in SPECIES[sp])
            # size factor couples bill length, flipper length and mass
            size = rng.normal()
            vals = mean + sd * (0.6 * size * np.array([1, 0.3, 1, 1, 0, 0]) + 0.8 * rng.normal(size=6))
            cells = [f"{v:.2f}" for v in vals]
            if rng.random() < 0.02:
                cells[rng.integers(6)] = "NA"
            out.writerow([sp] + cells)


if __name__ == "__main__":
    main(sys.argv[1])
