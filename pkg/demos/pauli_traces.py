# Traces of the approximate Pauli operators against noise strength.
# At small noise only the identity survives; larger noise lets X and Z leak in.
from gkptheta.gkp_states import NoiseSpec, pauli_trace, wigner_normalization, Bloch4

print(" beta      Tr[I]       Tr[X]       Tr[Y]       Tr[Z]     N*sqrt(pi) for |0>")
for beta in (0.01, 0.02, 0.04, 0.08, 0.16, 0.32):
    n = NoiseSpec.symmetric(beta)
    tr = [pauli_trace(mu, n).real for mu in range(4)]
    N = wigner_normalization(Bloch4.from_vector((0, 0, 1)), n.sigma_env, n.sigma_spike)
    print(f"{beta:5.2f}  " + "  ".join(f"{t:10.3e}" for t in tr) + f"  {N * 1.7724538509055159:.6f}")

# asymmetric noise makes the Y trace nonzero as well
n = NoiseSpec(0.3, 0.1, 0.4)
print("Delta2=0.3, kappa2=0.1, phi=0.4:", [f"{pauli_trace(mu, n).real:.3e}" for mu in range(4)])
