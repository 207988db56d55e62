"""Spectral probe for the multiplication-similarity regime.

With J = I and a PSD square factor beta, the triangular model operator
acts like multiplication by x: its spectrum should be (close to) the
real interval.  The probe measures how real and how localised the
discretised spectrum is, for the plain operator and for the conjugated
dressing w0* beta w0 (with J = I the factor w0 is unitary).
"""

import numpy as np

from cansys import (
    CanonicalSystem,
    HamiltonianSpec,
    evolve,
    sample_params,
    similarity_probe,
    TriangularModel,
)

interval = (0.0, 1.0)

# constant identity factor: the discrete spectrum hugs the interval and
# the imaginary parts shrink like 1/N
model = TriangularModel.from_constant_beta(np.eye(2), interval, np.eye(2))
for num in (64, 128, 256):
    report = similarity_probe(model, num)
    print(f"N = {num:4d}: max |Im eig| = {report.max_imag:.3e}, "
          f"inside fraction = {report.inside_fraction:.3f}")

# a varying PSD factor plus dressing: the conjugated model stays
# spectrally comparable
x = np.linspace(*interval, 65)
beta = np.stack([(1.0 + 0.5 * xx) * np.eye(2) for xx in x]).astype(complex)
system = CanonicalSystem(
    J=np.eye(2), interval=interval,
    hamiltonian=HamiltonianSpec.from_beta_grid(x, beta),
)
traj = evolve(sample_params(42, system, n=2), system, tol=1e-10)
varying = TriangularModel(interval=interval, J=np.eye(2), x=x, beta=beta)
for num in (64, 128):
    report = similarity_probe(varying, num, traj=traj)
    print(f"N = {num:4d}: plain max |Im| = {report.max_imag:.3e}, "
          f"dressed max |Im| = {report.transformed_max_imag:.3e}")
