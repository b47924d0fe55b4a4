"""Time the numba kernels against the plain-Python fallback.

Each backend runs in its own interpreter because the switch is read at
import time. Usage: ``python3 benchmarks/bench_kernels.py [--repeat N]``.
"""
import argparse
import json
import os
import subprocess
import sys
import textwrap

WORKLOAD = textwrap.dedent("""
    import json, time
    import numpy as np
    import ptdtc
    from ptdtc import meanfield as mf, stability as s

    def best(fn, repeat):
        fn()  # warm-up (includes compilation for numba)
        times = []
        for _ in range(repeat):
            t0 = time.perf_counter()
            fn()
            times.append(time.perf_counter() - t0)
        return min(times)

    repeat = {repeat}
    model = mf.make_model("ddm", g=2.0, omega=1.0, kappa=1.7)
    q0 = np.array([0.6, 0.8, 0.0])
    res = {{
        "backend": ptdtc.backend_name(),
        "integrate_t100": best(lambda: mf.integrate(model, q0, 100.0), repeat),
        "fixed_points": best(lambda: s.find_fixed_points(model), repeat),
        "phase_boundaries": best(lambda: s.find_phase_boundaries(model, "kappa", 0.0, 3.0), repeat),
    }}
    print(json.dumps(res))
""")


def run(disable, repeat):
    env = dict(os.environ)
    env.pop("PTDTC_DISABLE_NUMBA", None)
    if disable:
        env["PTDTC_DISABLE_NUMBA"] = "1"
    proc = subprocess.run([sys.executable, "-c", WORKLOAD.format(repeat=repeat)],
                          capture_output=True, text=True, env=env, check=True)
    return json.loads(proc.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    fast, slow = run(False, args.repeat), run(True, args.repeat)
    print(f"{'task':<18}{'numba [s]':>12}{'fallback [s]':>14}{'speed-up':>10}")
    for key in fast:
        if key == "backend":
            continue
        print(f"{key:<18}{fast[key]:>12.4f}{slow[key]:>14.4f}{slow[key] / fast[key]:>10.1f}")


if __name__ == "__main__":
    main()
