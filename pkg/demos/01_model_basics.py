"""Loss, gradient and overlap primitives on a small teacher-student pair.

A student with m quadratic neurons computes u(x) = Tr(x x^T W W^T); only the
Gram matrix Z = W W^T matters.  Against a teacher Gram matrix Z* the
population loss under Gaussian inputs is
L = 1/2 ||Z - Z*||_F^2 + 1/4 [Tr(Z - Z*)]^2.
"""

import numpy as np

from quadflow import (GramState, WeightMatrix, loss_gradient, overlap,
                      population_loss, predict, sample_gaussian_weights)

rng = np.random.default_rng(0)
d, m, mstar = 6, 4, 2

student = sample_gaussian_weights(d, m, rng)
teacher = sample_gaussian_weights(d, mstar, rng)
Zstar = GramState.from_weights(teacher)

x = rng.standard_normal(d)
print(f"student prediction at one input: {predict(student, x):.6f}")
print(f"teacher prediction at the same input: {predict(teacher, x):.6f}")

print(f"\npopulation loss L(W): {population_loss(student, Zstar):.6f}")
print(f"gradient norm ||dL/dW||: {np.linalg.norm(loss_gradient(student, Zstar)):.6f}")

# the loss is exactly the Gaussian expectation 1/4 E[Tr(x x^T (Z - Z*))^2]
D = student.gram() - Zstar.matrix
xs = rng.standard_normal((200_000, d))
mc = 0.25 * np.mean(np.einsum("ni,ij,nj->n", xs, D, xs) ** 2)
print(f"Monte Carlo check of the loss: {mc:.6f}")

# overlap: normalized trace inner product between the two Gram matrices
chi = overlap(GramState.from_weights(student), Zstar)
print(f"\noverlap chi(Z, Z*) = {chi:.4f} (1 would mean proportional matrices)")

# at the optimum the loss and gradient vanish
print(f"\nloss at W = W*: {population_loss(teacher, Zstar):.2e}")
print(f"gradient at W = W*: {np.linalg.norm(loss_gradient(teacher, Zstar)):.2e}")
