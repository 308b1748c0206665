# Error correcting the vacuum gives the H-type magic state.
import warnings

import numpy as np

from gkptheta.gkp_ec import AncillaSpec, CoverageWarning, ec_ideal, teleport_ec, teleport_probability
from gkptheta.gkp_states import vacuum_wigner
from gkptheta.phase_plane import grid_window, sample_field

sqrt_pi = np.sqrt(np.pi)
f = sample_field(vacuum_wigner(), grid_window(8 * sqrt_pi), 256)

b, _ = ec_ideal(f, (0.0, 0.0))
print("ideal ancillas, no shift:", np.round(b.vector, 6))

# other outcomes read the vacuum at shifted points; near the decision boundary
# (m_q close to sqrt(pi)/2) the Z information washes out
for m in [(sqrt_pi / 2 - 0.01, 0.0), (0.3, 0.3), (0.0, -0.6)]:
    b, _ = ec_ideal(f, m)
    print(f"syndrome {np.round(m, 3)} ->", np.round(b.vector, 6))

# teleportation with approximate ancillas: the output keeps some noise
warnings.simplefilter("ignore", CoverageWarning)
wide = sample_field(vacuum_wigner(), grid_window(10 * sqrt_pi), 384)
for beta in (0.04, 0.02):
    anc = AncillaSpec.approximate(beta)
    b, _ = teleport_ec(wide, (0.0, 0.0), anc)
    p = teleport_probability(wide, (0.0, 0.0), anc)
    print(f"teleport, ancilla beta={beta}: bloch {np.round(b.vector, 4)}, outcome density {p:.4f}")
