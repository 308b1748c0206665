# One round of GKP error correction with approximate ancillas.
# Fitted spike variances follow the Gaussian precision rule.
import numpy as np

from gkptheta.gkp_ec import AncillaSpec, ec_map, fitted_spike_variances, predicted_ec_variances
from gkptheta.gkp_states import NoiseSpec, approx_state_wigner, bloch_from_wigner, displacement_channel
from gkptheta.phase_plane import Field2D, evaluate_real, grid_window

sqrt_pi = np.sqrt(np.pi)

# noisy input: a good |0> smeared by a random displacement channel
state = displacement_channel(approx_state_wigner((0, 0, 1), NoiseSpec.symmetric(0.01)), 0.04 * np.eye(2))
anc = AncillaSpec.approximate(0.01)
grid = Field2D(grid_window(6 * sqrt_pi), np.zeros((384, 384)))
W = grid.with_values(evaluate_real(state, grid.points()))

s_in = fitted_spike_variances(W)
print("input spike variances", np.round(s_in, 5), " ancilla", round(anc.spike_variance, 5))
for order in ("q-then-p", "p-then-q"):
    out, prob = ec_map(W, anc, (0.0, 0.0), order=order)
    print(f"{order}: fitted {np.round(fitted_spike_variances(out), 5)}  predicted {np.round(predicted_ec_variances(s_in, anc.spike_variance, order), 5)}  density {prob:.4f}")

# a shifted input with the matching syndrome comes back to |0>; the window has to hold
# the whole envelope, which the ancillas widen in one quadrature
d = (0.35, -0.2)
wide = Field2D(grid_window(14 * sqrt_pi), np.zeros((448, 448)))
shifted = wide.with_values(evaluate_real(approx_state_wigner((0, 0, 1), NoiseSpec.symmetric(0.04)), wide.points() - d))
out, _ = ec_map(shifted, AncillaSpec.approximate(0.04), d)
print("after correcting a shift of", d, "->", np.round(bloch_from_wigner(out).vector, 6))
