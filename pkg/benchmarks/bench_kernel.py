"""Compare the compiled and pure-Python activation kernels.

Instances are compiled and schedules drawn before timing starts, so the
numbers cover only ``kernel.run``.  Both kernels must return the same result
on every workload; the script stops if they do not.

    python3 benchmarks/bench_kernel.py --instances 40 --nodes 10 --repeat 3
"""

import argparse
import itertools
import statistics
import time

from nsbgp_lab._kernel import available_backends
from nsbgp_lab.engine import CompiledInstance, fair_random_sequence
from nsbgp_lab.model import Mode
from nsbgp_lab.scenarios import RandomConfig, bad_gadget, random_instance


def workloads(n_instances, n_nodes, steps):
    """``(label, compiled, feed, period, max_steps)`` tuples."""
    out = []
    gadget = CompiledInstance(bad_gadget())
    out.append(("bad-gadget cycle", gadget, [gadget.index[u] for u in "1312312"], 7, steps))
    for seed in range(n_instances):
        for mode in Mode:
            inst = random_instance(seed, n_nodes, mode, RandomConfig(safe=False, paths_min=8, paths_max=16))
            ck = CompiledInstance(inst)
            movers = [u for u in inst.nodes if u != inst.destination]
            feed = [ck.index[u] for u in itertools.islice(fair_random_sequence(movers, seed, 2 * len(inst.nodes)), steps)]
            out.append((f"{mode.value} random", ck, feed, 0, steps))
            out.append((f"{mode.value} round-robin", ck, [ck.index[u] for u in movers], len(movers), steps))
    return out


def time_backend(kernel, jobs, repeat):
    best = []
    results = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        results = [kernel.run(ck, ck.initial_code(), feed, period, max_steps) for _, ck, feed, period, max_steps in jobs]
        best.append(time.perf_counter() - t0)
    return min(best), statistics.median(best), results


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--instances", type=int, default=40)
    p.add_argument("--nodes", type=int, default=10)
    p.add_argument("--steps", type=int, default=5000, help="step budget per run")
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)

    backends = available_backends()
    if "cython" not in backends:
        print("compiled kernel not built; run `pip install -e . --no-build-isolation` first")
    jobs = workloads(args.instances, args.nodes, args.steps)
    total_steps = None
    rows = []
    reference = None
    for name, kernel in sorted(backends.items()):
        best, median, results = time_backend(kernel, jobs, args.repeat)
        if reference is None:
            reference = results
        elif [r[:3] for r in results] != [r[:3] for r in reference]:
            raise SystemExit(f"{name} kernel disagrees with the reference kernel")
        total_steps = sum(r[1] for r in results)
        rows.append((name, best, median))

    print(f"{len(jobs)} runs, {total_steps} activations, best of {args.repeat}")
    base = dict((n, b) for n, b, _ in rows).get("python")
    for name, best, median in rows:
        speedup = f"{base / best:5.2f}x" if base else "-"
        rate = total_steps / best / 1e3
        print(f"  {name:<8} best {best * 1e3:8.1f} ms  median {median * 1e3:8.1f} ms  {rate:8.1f} k steps/s  {speedup}")


if __name__ == "__main__":
    main()
