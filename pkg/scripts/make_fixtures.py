"""Regenerate the bundled metric config fixtures.

The Liouville fixture is a Fourier fit of mu = 0.5 * log(lam) for
lam = 1.2 + 0.2 cos(2 pi x) + 0.3 cos(2 pi y); the log has geometrically
decaying coefficients, so truncation at degree 16 leaves a relative error
far below 1e-12 and e^{2 mu} separates to the same accuracy.  Run from the
repository root:

    python3 scripts/make_fixtures.py
"""

import json
import pathlib

import numpy as np

OUT = pathlib.Path(__file__).resolve().parents[1] / "src/ktorus/configs"


def mode(k1, k2, re, im=0.0):
    entry = {"k": [k1, k2], "re": re}
    if im:
        entry["im"] = im
    return entry


def liouville_modes(degree=16, n=64, drop=1e-16):
    x = np.arange(n) / n
    X, Y = np.meshgrid(x, x, indexing="ij")
    lam = 1.2 + 0.2 * np.cos(2 * np.pi * X) + 0.3 * np.cos(2 * np.pi * Y)
    C = np.fft.fft2(0.5 * np.log(lam)) / n ** 2
    k = (np.fft.fftfreq(n) * n).astype(int)
    modes = []
    for i in range(n):
        for j in range(n):
            k1, k2 = int(k[i]), int(k[j])
            if max(abs(k1), abs(k2)) > degree or abs(C[i, j]) <= drop:
                continue
            # keep one representative per Hermitian pair
            if (k1, k2) < (-k1, -k2):
                continue
            c = complex(C[i, j])
            modes.append(mode(k1, k2, float(c.real), float(c.imag)))
    modes.sort(key=lambda e: (e["k"][0], e["k"][1]))
    return modes


CONFIGS = {
    "flat.json": {"mu_fourier": []},
    "rotation.json": {"mu_fourier": [mode(0, 1, 0.05)]},
    "liouville.json": {"mu_fourier": liouville_modes(), "grid_n": 96},
    "generic.json": {"mu_fourier": [mode(1, 0, 0.1), mode(1, 2, 0.075)]},
    "generic_asym.json": {"mu_fourier": [
        mode(1, 0, 0.1 * np.cos(0.3), 0.1 * np.sin(0.3)),
        mode(1, 2, 0.0, 0.075),
        mode(0, 1, 0.05 * np.cos(0.9), 0.05 * np.sin(0.9)),
    ]},
}


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, cfg in CONFIGS.items():
        path = OUT / name
        with open(path, "w") as fh:
            json.dump(cfg, fh, indent=2)
            fh.write("\n")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
