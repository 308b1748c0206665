# Wigner functions of approximate GKP states, written out as PGM images.
# Run from the repository root: python demos/wigner_states.py
from pathlib import Path

import numpy as np

from gkptheta.cli import field_pgm
from gkptheta.gkp_states import NoiseSpec, approx_state_wigner, bloch_from_wigner
from gkptheta.phase_plane import grid_window, integrate, sample_field, trace_product

out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)

noise = NoiseSpec.symmetric(0.04)
window = grid_window(12 * np.sqrt(np.pi))  # about 6 envelope widths
states = {
    "zero": (0, 0, 1),
    "plus": (1, 0, 0),
    "plus_i": (0, 1, 0),
    "magic_T": tuple(np.ones(3) / np.sqrt(3)),
}

for name, vec in states.items():
    f = sample_field(approx_state_wigner(vec, noise), window, 384)
    data, _ = field_pgm(f)
    (out / f"wigner_{name}.pgm").write_bytes(data)
    b = bloch_from_wigner(f, noise)
    print(f"{name:8s} integral {integrate(f):.9f}  purity {trace_product(f, f):.4f}  bloch {np.round(b.vector, 6)}")
