"""Time the numba kernels against the pure-numpy fallback.

Inputs are taken from a real assembly (uniform mesh, given degree) so the
array shapes match what the solver sees.  Usage:

    python benchmarks/bench_kernels.py [--n 32] [--degree 2] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from sldg.assembly import DgParams, geometry
from sldg.dgspace import make_space
from sldg.kernels import _numba, _numpy
from sldg.mesh import build_uniform


def best_of(fn, repeat):
    fn()  # warm-up, includes jit compile for numba
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def cases(n, degree):
    sp = make_space(build_uniform(n), degree)
    geo = geometry(sp, DgParams())
    rng = np.random.default_rng(0)
    ne, nb = geo.dof_map.shape
    coeff = np.ascontiguousarray(geo.wdet)
    coef = rng.normal(size=(ne, nb))
    side = geo.plus
    w = np.ascontiguousarray(geo.w_face[geo.interior])
    phi = np.ascontiguousarray(side["phi"])
    dn = np.ascontiguousarray(side["dn"])

    # 1-D Laplacian for the CG kernels
    m = sp.total_dofs
    indptr = np.concatenate([[0], np.cumsum(np.r_[2, np.full(m - 2, 3), 2])]).astype(np.int64)
    cols = []
    for i in range(m):
        cols.extend(j for j in (i - 1, i, i + 1) if 0 <= j < m)
    indices = np.array(cols, dtype=np.int64)
    data = np.where(indices == np.repeat(np.arange(m), np.diff(indptr)), 2.5, -1.0)
    b = rng.normal(size=m)
    dinv = np.full(m, 1 / 2.5)

    return {
        "stiffness": lambda k: k.stiffness(geo.dref, geo.metric, coeff),
        "physical_grad": lambda k: k.physical_grad(coef, geo.dref, geo.inv_jt),
        "pair_products": lambda k: k.pair_products(phi, dn, w),
        "csr_matvec": lambda k: k.csr_matvec(indptr, indices, data, b, np.empty(m)),
        "pcg": lambda k: k.pcg(indptr, indices, data, b, np.zeros(m), dinv, 1e-10, 10 * m),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=32)
    ap.add_argument("--degree", type=int, default=2)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    print(f"mesh {args.n}x{args.n}, degree {args.degree}, best of {args.repeat}")
    print(f"{'kernel':<15}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for name, call in cases(args.n, args.degree).items():
        t_np = best_of(lambda: call(_numpy), args.repeat)
        t_nb = best_of(lambda: call(_numba), args.repeat)
        print(f"{name:<15}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}{t_np / t_nb:>10.2f}")


if __name__ == "__main__":
    main()
