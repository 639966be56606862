#!/usr/bin/env python3
"""Benchmark the jitted kernels against the pure-numpy fallbacks.

Runs each hot kernel on solver-scale inputs (161^2 planar grid, 41^3 box)
in both lanes, checks agreement, and prints a timing table.  The same
selection happens at import time via the MULTIWELL_NO_NUMBA environment
flag; this script calls both implementations directly.
"""

import time

import numpy as np

from multiwell import kernels


def timeit(fn, *args, repeat=50):
    fn(*args)  # warm-up / JIT compile
    t0 = time.perf_counter()
    for _ in range(repeat):
        out = fn(*args)
    return (time.perf_counter() - t0) / repeat, out


def row(name, np_fn, nb_fn, args, repeat=50):
    t_np, ref = timeit(np_fn, *args, repeat=repeat)
    if nb_fn is None:
        print(f"{name:26s} numpy {t_np * 1e3:8.3f} ms      (numba unavailable)")
        return
    t_nb, out = timeit(nb_fn, *args, repeat=repeat)
    ok = np.allclose(np.asarray(out, dtype=float), np.asarray(ref, dtype=float), atol=1e-10)
    print(
        f"{name:26s} numpy {t_np * 1e3:8.3f} ms   numba {t_nb * 1e3:8.3f} ms"
        f"   speedup {t_np / t_nb:6.1f}x   agree={ok}"
    )


def main():
    rng = np.random.default_rng(0)
    print(f"numba available: {kernels.HAVE_NUMBA}; active lane: "
          f"{'numba' if kernels.USE_NUMBA else 'numpy'}\n")

    u2 = np.ascontiguousarray(rng.normal(size=(161, 161, 2)))
    u3 = np.ascontiguousarray(rng.normal(size=(41, 41, 41, 3)))
    pts2 = np.ascontiguousarray(u2.reshape(-1, 2))
    wells = np.ascontiguousarray(
        np.array([[1.0, 0.0], [-0.5, np.sqrt(3) / 2], [-0.5, -np.sqrt(3) / 2]])
    )
    pts3 = np.ascontiguousarray(rng.normal(size=(68921, 3)))
    q2 = np.ascontiguousarray(rng.uniform(-1, 1, size=(161 * 161, 2)))
    q3 = np.ascontiguousarray(rng.uniform(-1, 1, size=(68921, 3)))

    have = kernels.HAVE_NUMBA
    row("laplacian 161^2 x2", kernels._laplacian_2d_np,
        kernels._laplacian_2d_nb if have else None, (u2, 0.1))
    row("laplacian 41^3 x3", kernels._laplacian_3d_np,
        kernels._laplacian_3d_nb if have else None, (u3, 0.1), repeat=20)
    row("prodwell grad 26k pts", kernels._prodwell_grad_np,
        kernels._prodwell_grad_nb if have else None, (pts2, wells, 1.0))
    row("tetra grad 69k pts", kernels._tetra_grad_np,
        kernels._tetra_grad_nb if have else None, (pts3,))
    row("bilinear interp 26k", kernels._interp2_np,
        kernels._interp2_nb if have else None, (u2, q2, -1.0, 0.0125))
    row("trilinear interp 69k", kernels._interp3_np,
        kernels._interp3_nb if have else None, (u3, q3, -1.0, 0.05), repeat=20)
    row("link energy 161^2", kernels._link_energy_2d_np,
        kernels._link_energy_2d_nb if have else None, (u2, 0.1))
    row("link energy 41^3", kernels._link_energy_3d_np,
        kernels._link_energy_3d_nb if have else None, (u3, 0.1), repeat=20)


if __name__ == "__main__":
    main()
