# Envelope physics: minimum, wider (mixed) and narrower (unphysical) Gaussian envelopes.
from gkptheta.gaussian import Gaussian2D
from gkptheta.gkp_states import NoiseSpec, approx_state_wigner, check_envelope_physical, min_envelope, with_envelope
from gkptheta.phase_plane import grid_window, integrate, sample_field, trace_product

noise = NoiseSpec.symmetric(0.04)
emin = min_envelope(noise.sigma_spike)
print("minimum envelope covariance:\n", emin)

state = approx_state_wigner((0, 0, 1), noise)
window = grid_window(60.0)
for c in (0.5, 1.0, 2.0, 4.0):
    verdict = check_envelope_physical(Gaussian2D.centered(c * emin), emin)
    f = sample_field(with_envelope(state, c * emin), window, 1024)
    # purity above one flags the unphysical case
    print(f"c = {c:3.1f}: {verdict.value:17s} integral {integrate(f):.6f}  Tr[rho^2] {trace_product(f, f):.4f}")
