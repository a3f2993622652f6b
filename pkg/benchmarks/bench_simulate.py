"""Time the compiled stepping kernel against its plain-Python twin.

Runs the same deep trajectories through both implementations and reports
steps/second and the speedup.  Invoke from the repository root:

    python benchmarks/bench_simulate.py

Setting SPEPI_DISABLE_NUMBA=1 changes which twin the library itself uses,
but this script always times both directly.
"""

from __future__ import annotations

import time

import numpy as np

import spepi._kernels as kernels
from spepi import EpidemicState, ExponentialIncidence, StageParams
from spepi.model import StoppingRule, _simulate_kernel


CASES = {
    # near-threshold decay: long geometric tails, the kernel-bound regime
    "slow-decay (R0 = 0.97)": dict(
        gamma=[0.6, 0.7, 0.3], beta=[0.2038, 0.2038, 0.1019], eps=1e-240
    ),
    "fig2-left deep": dict(
        gamma=[0.6, 0.7, 0.3], beta=[0.2, 0.2, 0.1], eps=1e-240
    ),
    "supercritical (R0 = 2.5)": dict(
        gamma=[0.5, 0.8, 0.4], beta=[0.5, 0.2, 0.3528], eps=1e-240
    ),
}


def run_case(name, spec_case, impl, repeats=5):
    params = StageParams(gamma=spec_case["gamma"], N=1.0)
    inc = ExponentialIncidence(spec_case["beta"], N=1.0)
    initial = EpidemicState(S=0.99, I=[0.01, 0.0, 0.0], R=0.0)
    stopping = StoppingRule(eps_z=spec_case["eps"], eps_s=spec_case["eps"])
    saved = kernels.run_chunk
    kernels.run_chunk = impl
    try:
        # warm-up (jit compilation, allocator)
        traj = _simulate_kernel(initial, params.gamma, inc.kernel_spec(),
                                stopping.max_steps, spec_case["eps"], spec_case["eps"])
        steps = len(traj[0]) - 1
        best = np.inf
        for _ in range(repeats):
            t0 = time.perf_counter()
            _simulate_kernel(initial, params.gamma, inc.kernel_spec(),
                             stopping.max_steps, spec_case["eps"], spec_case["eps"])
            best = min(best, time.perf_counter() - t0)
    finally:
        kernels.run_chunk = saved
    return steps, best


def main():
    print(f"numba available: {kernels.run_chunk_jit is not None}; "
          f"library currently using numba: {kernels.using_numba}")
    print(f"{'case':28s} {'steps':>8s} {'python':>12s} {'numba':>12s} {'speedup':>8s}")
    for name, case in CASES.items():
        steps, t_py = run_case(name, case, kernels.run_chunk_py)
        if kernels.run_chunk_jit is not None:
            _, t_jit = run_case(name, case, kernels.run_chunk_jit)
            speedup = t_py / t_jit
            print(f"{name:28s} {steps:8d} {steps / t_py:11.0f}/s {steps / t_jit:11.0f}/s "
                  f"{speedup:7.1f}x")
        else:
            print(f"{name:28s} {steps:8d} {steps / t_py:11.0f}/s {'n/a':>12s} {'n/a':>8s}")


if __name__ == "__main__":
    main()
