"""A tour of the covariance functions.

Builds every kernel family on the same 1-D inputs and prints a few
properties: the diagonal (prior variance), the correlation between two
nearby points at either end of the interval, and the smallest eigenvalue
of the Gram matrix. Stationary kernels have a constant diagonal; the
parametric and hybrid kernels let the prior variance drift along x, so
the function is allowed to wiggle more on one side than the other.
"""
import numpy as np

from nsgp.kernels import (
    FAMILIES, KernelSpec, default_hypers, hyper_count, kernel_matrix, preset_kernel,
)

x = np.linspace(0.0, 1.0, 41)[:, None]
left = np.array([[0.05], [0.10]])
right = np.array([[0.90], [0.95]])

print(f"{'family':<14}{'hypers':>7}{'k(x,x) range':>22}{'corr left':>11}{'corr right':>12}{'min eig':>11}")
for family in FAMILIES:
    if family in ("parametric", "deep", "hybrid"):
        spec = preset_kernel(family, 1)
    else:
        spec = KernelSpec(family, 1)
    hypers = default_hypers(spec)
    if family in ("parametric", "hybrid"):
        # make the basis coefficients vary so the amplitude drifts along x
        coeffs = np.linspace(0.05, 0.6, spec.basis_centers.shape[0] * spec.num_g)
        hypers = hypers.set("g_coefficients", coeffs)

    k = kernel_matrix(x, x, spec, hypers)
    diag = np.diag(k)

    def corr(pair):
        kk = kernel_matrix(pair, pair, spec, hypers)
        return kk[0, 1] / np.sqrt(kk[0, 0] * kk[1, 1])

    print(f"{family:<14}{hyper_count(spec):>7}{diag.min():>11.4f} .. {diag.max():<7.4f}"
          f"{corr(left):>11.4f}{corr(right):>12.4f}{np.linalg.eigvalsh(k).min():>11.1e}")

# The deep kernel starts from the identity warp, so before training it is
# exactly the Matern 3/2 kernel.
deep = preset_kernel("deep", 1)
mat = KernelSpec("matern32", 1)
hd = default_hypers(deep)
hm = default_hypers(mat).set("sigma", hd["sigma"]).set("length_scale", hd["length_scale"])
print("\nidentity-warped deep kernel equals Matern 3/2:",
      np.allclose(kernel_matrix(x, x, deep, hd), kernel_matrix(x, x, mat, hm)))
