"""Seeded verification suites.

Each suite draws a deterministic ensemble, checks the advertised
two-sided bounds or identities at their stated tolerances, and returns a
JSON-ready report: per-trial ratios, the worst case with its witness,
and a pass flag.  Reports contain no timestamps, so identical inputs
produce identical bytes.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

from .condexp import (
    Partition,
    condexp_condition_sup,
    condexp_decompose,
    coordinate_partitions,
    flatten_kernel,
)
from .instances import Instance, gen_random
from .interp import closed_form_norm, k_envelope_sup
from .kernelop import endpoint_opnorm_identities, kernel_opnorm
from .kfun import (
    duality_certificate,
    k_bracket_general_q,
    k_decompose_gauge,
    k_exact,
    k_exact_full_oracle,
    k_exact_sweep,
    k_multi,
)
from .lorentz import (
    ScalarFunction,
    bracket_norm,
    conjugate,
    level_set_decomposition,
    lorentz_p1_norm,
)
from .measure import FiniteMeasureSpace, ProductSpace, mask_indices
from .rectangle import (
    ExponentConfig,
    GaugeFunction,
    KernelMatrix,
    gauge_rect_sup,
    rect_sup,
)

__all__ = ["SUITE_NAMES", "verify_suite"]

INF = math.inf
TOL = 1e-9
P_CHOICES = (1.5, 2.0, 4.0, INF)


def _run_trials(trials: int, jobs: int, fn: Callable[[int], dict]) -> list[dict]:
    if jobs > 1 and trials > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, range(trials)))
    return [fn(i) for i in range(trials)]


def _draw_kernel(
    seed: Sequence[int],
    rng: np.random.Generator,
    max_side: int = 6,
    naxes: int = 2,
    min_side: int = 1,
    fixed_side: int | None = None,
) -> tuple[Instance, KernelMatrix]:
    if fixed_side is not None:
        shape = (fixed_side,) * naxes
    else:
        shape = tuple(int(rng.integers(min_side, max_side + 1)) for _ in range(naxes))
    wkind = "counting" if rng.random() < 0.5 else "dirichlet"
    inst = gen_random(list(seed), shape, "uniform01", wkind)
    return inst, inst.kernel()


def _draw_p(rng: np.random.Generator, q: float = 1.0) -> float:
    valid = [p for p in P_CHOICES if p > q]
    return float(rng.choice(valid))


def _masks_to_lists(masks: Sequence[int]) -> list[list[int]]:
    return [list(mask_indices(m)) for m in masks]


def _finalize(
    name: str,
    seed: int,
    trials: int,
    config: dict,
    results: list[dict],
    extra_checks: dict | None = None,
    extra_pass: bool = True,
) -> dict:
    ok = all(r["ok"] for r in results) and extra_pass
    ratios = [r["ratio"] for r in results if r.get("ratio") is not None]
    worst = None
    if ratios:
        worst_idx = int(np.argmax(np.asarray(ratios)))
        ranked = [r for r in results if r.get("ratio") is not None]
        worst = ranked[worst_idx]
    report = {
        "suite": name,
        "seed": int(seed),
        "trials": int(trials),
        "config": config,
        "pass": bool(ok),
        "vacuous": trials == 0,
        "checked": len(results),
        "failures": [r["trial"] for r in results if not r["ok"]],
        "worst_ratio": max(ratios) if ratios else None,
        "worst": worst,
        "ratios": ratios,
    }
    if extra_checks:
        report["extra"] = extra_checks
    return report


def _suite_varopoulos(trials: int, seed: int, jobs: int) -> dict:
    def trial(i: int) -> dict:
        rng = np.random.default_rng([seed, i])
        inst, f = _draw_kernel([seed, i, 1], rng)
        lower_res = rect_sup(f, 1.0, (1.0, 1.0), (1.0, 1.0))
        value = k_exact(f, 1.0, INF, INF).value
        lower = lower_res.value
        ok = lower <= value + TOL and value <= 2.0 * lower + TOL
        return {
            "trial": i,
            "ok": bool(ok),
            "ratio": value / lower if lower > 0.0 else None,
            "lower": lower,
            "value": value,
            "shape": list(f.product.shape),
            "argmax": _masks_to_lists(lower_res.masks),
            "instance_sha256": inst.sha256(),
        }

    results = _run_trials(trials, jobs, trial)
    ident = KernelMatrix(
        ProductSpace((FiniteMeasureSpace(np.ones(2)),) * 2), np.eye(2)
    )
    ident_ratio = (
        k_exact(ident, 1.0, INF, INF).value
        / rect_sup(ident, 1.0, (1.0, 1.0), (1.0, 1.0)).value
    )
    tight = abs(ident_ratio - 2.0) <= TOL
    return _finalize(
        "varopoulos",
        seed,
        trials,
        {"p": ["inf", "inf"], "q": 1.0, "t": 1.0, "max_side": 6, "tol": TOL},
        results,
        extra_checks={"identity_2x2_ratio": float(ident_ratio), "attains_factor_2": tight},
        extra_pass=tight,
    )


def _suite_sandwich(trials: int, seed: int, jobs: int) -> dict:
    ts = tuple(2.0**k for k in range(-5, 6))

    def trial(i: int) -> dict:
        rng = np.random.default_rng([seed, i])
        inst, f = _draw_kernel([seed, i, 1], rng)
        p1, p2 = _draw_p(rng), _draw_p(rng)
        config = ExponentConfig(1.0, (p1, p2))
        ok = True
        worst_ratio = None
        worst_t = None
        for t, res in zip(ts, k_exact_sweep(f, ts, p1, p2)):
            lower = rect_sup(f, 1.0, config.alphas, (1.0, t)).value
            if not (lower <= res.value + TOL and res.value <= 2.0 * lower + TOL):
                ok = False
            if lower > 0.0:
                ratio = res.value / lower
                if worst_ratio is None or ratio > worst_ratio:
                    worst_ratio, worst_t = ratio, t
        return {
            "trial": i,
            "ok": bool(ok),
            "ratio": worst_ratio,
            "worst_t": worst_t,
            "p": [None if math.isinf(x) else x for x in (p1, p2)],
            "shape": list(f.product.shape),
            "instance_sha256": inst.sha256(),
        }

    results = _run_trials(trials, jobs, trial)
    return _finalize(
        "sandwich",
        seed,
        trials,
        {"p_choices": [1.5, 2.0, 4.0, "inf"], "t_grid": "pow2:-5..5", "tol": TOL},
        results,
    )


def _suite_general_q(trials: int, seed: int, jobs: int) -> dict:
    qs = (0.5, 2.0)

    def trial(i: int) -> dict:
        q = qs[i % 2]
        rng = np.random.default_rng([seed, i])
        inst, f = _draw_kernel([seed, i, 1], rng)
        p1, p2 = _draw_p(rng, q), _draw_p(rng, q)
        t = float(2.0 ** rng.integers(-3, 4))
        res = k_bracket_general_q(f, t, q, p1, p2)
        ok = res.lower <= res.upper + TOL and math.isfinite(res.upper)
        return {
            "trial": i,
            "ok": bool(ok),
            "q": q,
            "ratio": res.upper / res.lower if res.lower > 0.0 else None,
            "lower": res.lower,
            "upper": res.upper,
            "t": t,
            "instance_sha256": inst.sha256(),
        }

    results = _run_trials(trials, jobs, trial)
    stability = {}
    stable_all = True
    for q in qs:
        ratios = [r["ratio"] for r in results if r["q"] == q and r["ratio"] is not None]
        if len(ratios) >= 20:
            head = max(ratios[:20])
            full = max(ratios)
            stable = full <= 2.0 * head
        else:
            head = max(ratios) if ratios else None
            full = head
            stable = True
        stable_all = stable_all and stable
        stability[str(q)] = {
            "max_ratio_first20": head,
            "max_ratio": full,
            "stable": bool(stable),
        }
    return _finalize(
        "general-q",
        seed,
        trials,
        {"q": list(qs), "tol": TOL},
        results,
        extra_checks={"empirical_constants": stability},
        extra_pass=stable_all,
    )


def _suite_envelope(trials: int, seed: int, jobs: int) -> dict:
    thetas = (0.25, 0.5, 0.75)

    def trial(i: int) -> dict:
        rng = np.random.default_rng([seed, i])
        inst, f = _draw_kernel([seed, i, 1], rng, fixed_side=5)
        q = float(rng.choice([0.5, 1.0, 2.0]))
        p1, p2 = _draw_p(rng, q), _draw_p(rng, q)
        worst = 0.0
        for theta in thetas:
            factor = theta**theta * (1.0 - theta) ** (1.0 - theta)
            envelope = k_envelope_sup(f, q, theta, p1, p2)
            closed = closed_form_norm(f, q, theta, p1, p2)
            worst = max(worst, abs(envelope - factor * closed))
        return {
            "trial": i,
            "ok": bool(worst <= TOL),
            "ratio": worst,
            "q": q,
            "instance_sha256": inst.sha256(),
        }

    results = _run_trials(trials, jobs, trial)
    return _finalize(
        "envelope",
        seed,
        trials,
        {"thetas": list(thetas), "side": 5, "tol": TOL},
        results,
    )


def _suite_opnorm(trials: int, seed: int, jobs: int) -> dict:
    def trial(i: int) -> dict:
        rng = np.random.default_rng([seed, i])
        inst, f = _draw_kernel([seed, i, 1], rng, max_side=5)
        signed = KernelMatrix(
            f.product, f.entries * rng.choice([-1.0, 1.0], size=f.product.shape)
        )
        p1, p2 = _draw_p(rng), _draw_p(rng)
        report = endpoint_opnorm_identities(signed, p1, p2)
        theta = float(rng.uniform(0.15, 0.85))
        r = conjugate(p2) / theta
        s_conj = conjugate(p1) / (1.0 - theta)
        s = s_conj / (s_conj - 1.0)
        op = kernel_opnorm(signed, r, s)
        closed = closed_form_norm(signed, 1.0, theta, p1, p2)
        disc = max(report.max_discrepancy, abs(op - closed))
        return {
            "trial": i,
            "ok": bool(disc <= TOL),
            "ratio": disc,
            "theta": theta,
            "instance_sha256": inst.sha256(),
        }

    results = _run_trials(trials, jobs, trial)
    ones = KernelMatrix(
        ProductSpace((FiniteMeasureSpace(np.ones(2)),) * 2), np.ones((2, 2))
    )
    fixture = endpoint_opnorm_identities(ones, 2.0, 4.0)
    falsified = fixture.literal_discrepancy > 1e-6
    extra = {
        "falsification_fixture": {
            "kernel": "2x2 all-ones, counting measure",
            "p": [2.0, 4.0],
            "literal_value": fixture.literal_lorentz_source_opnorm,
            "corrected_value": fixture.lorentz_source_opnorm,
            "literal_discrepancy": fixture.literal_discrepancy,
            "literal_fails": bool(falsified),
        }
    }
    return _finalize(
        "opnorm",
        seed,
        trials,
        {"tol": TOL, "max_side": 5},
        results,
        extra_checks=extra,
        extra_pass=falsified,
    )


def _suite_multivar(trials: int, seed: int, jobs: int) -> dict:
    def trial(i: int) -> dict:
        rng = np.random.default_rng([seed, i])
        inst, f = _draw_kernel([seed, i, 1], rng, max_side=4, naxes=3, min_side=2)
        t = tuple(float(2.0 ** rng.integers(-2, 3)) for _ in range(3))
        p = tuple(_draw_p(rng) for _ in range(3))
        config = ExponentConfig(1.0, p)
        lower = rect_sup(f, 1.0, config.alphas, t).value
        value = k_multi(f, t, p).value
        ok = lower <= value + TOL and value <= 3.0 * lower + TOL
        return {
            "trial": i,
            "ok": bool(ok),
            "ratio": value / lower if lower > 0.0 else None,
            "shape": list(f.product.shape),
            "t": list(t),
            "instance_sha256": inst.sha256(),
        }

    results = _run_trials(trials, jobs, trial)
    return _finalize(
        "multivar",
        seed,
        trials,
        {"naxes": 3, "max_side": 4, "constant": 3.0, "tol": TOL},
        results,
    )


def _random_partition(
    rng: np.random.Generator, space: FiniteMeasureSpace, max_blocks: int
) -> Partition:
    n = space.natoms
    nblocks = int(rng.integers(2, min(max_blocks, n) + 1)) if n > 1 else 1
    assignment = np.concatenate(
        [np.arange(nblocks), rng.integers(0, nblocks, n - nblocks)]
    )
    rng.shuffle(assignment)
    return Partition(
        space,
        tuple(
            int(sum(1 << i for i in np.nonzero(assignment == k)[0]))
            for k in range(nblocks)
        ),
    )


def _probability_space(rng: np.random.Generator, n: int) -> FiniteMeasureSpace:
    if rng.random() < 0.5:
        return FiniteMeasureSpace(np.full(n, 1.0 / n))
    return FiniteMeasureSpace(rng.dirichlet(np.full(n, 2.0)))


def _suite_condexp(trials: int, seed: int, jobs: int) -> dict:
    def trial(i: int) -> dict:
        rng = np.random.default_rng([seed, i])
        # pair sandwich, constant 2
        n = int(rng.integers(2, 13))
        space = _probability_space(rng, n)
        parts = tuple(_random_partition(rng, space, 4) for _ in range(2))
        x = ScalarFunction(space, rng.normal(size=n))
        condition, _ = condexp_condition_sup(x, parts)
        value = condexp_decompose(x, parts).value
        ok_pair = condition <= value + TOL and value <= 2.0 * condition + TOL
        ratio_pair = value / condition if condition > 0.0 else None
        # triple sandwich, constant 3
        n3 = int(rng.integers(3, 10))
        space3 = _probability_space(rng, n3)
        parts3 = tuple(_random_partition(rng, space3, 3) for _ in range(3))
        x3 = ScalarFunction(space3, rng.normal(size=n3))
        condition3, _ = condexp_condition_sup(x3, parts3)
        value3 = condexp_decompose(x3, parts3).value
        ok_triple = condition3 <= value3 + TOL and value3 <= 3.0 * condition3 + TOL
        # product-space consistency against the two-axis K-functional
        n1, n2 = int(rng.integers(2, 5)), int(rng.integers(2, 5))
        s1 = FiniteMeasureSpace(rng.dirichlet(np.full(n1, 2.0)))
        s2 = FiniteMeasureSpace(rng.dirichlet(np.full(n2, 2.0)))
        product = ProductSpace((s1, s2))
        entries = rng.uniform(0.0, 1.0, size=(n1, n2))
        kernel = KernelMatrix(product, entries)
        flat = flatten_kernel(entries, product)
        coords = coordinate_partitions(product)
        kval = k_exact(kernel, 1.0, INF, INF).value
        dval = condexp_decompose(flat, coords).value
        ok_product = abs(kval - dval) <= TOL
        return {
            "trial": i,
            "ok": bool(ok_pair and ok_triple and ok_product),
            "ratio": ratio_pair,
            "pair": {"condition": condition, "value": value},
            "triple": {"condition": condition3, "value": value3},
            "product_gap": abs(kval - dval),
        }

    results = _run_trials(trials, jobs, trial)
    return _finalize(
        "condexp",
        seed,
        trials,
        {"max_atoms": 12, "constants": [2.0, 3.0], "tol": TOL},
        results,
    )


def _random_concave_gauge(rng: np.random.Generator) -> GaugeFunction:
    nseg = int(rng.integers(1, 4))
    slopes = np.sort(rng.uniform(0.1, 2.0, nseg))[::-1]
    widths = rng.uniform(0.2, 1.0, nseg)
    points = []
    x = y = 0.0
    for slope, width in zip(slopes, widths):
        x += float(width)
        y += float(slope * width)
        points.append((x, y))
    tail = float(rng.uniform(0.0, slopes[-1]))
    return GaugeFunction.piecewise_linear(points, tail_slope=tail)


def _suite_gauge(trials: int, seed: int, jobs: int) -> dict:
    def trial(i: int) -> dict:
        rng = np.random.default_rng([seed, i])
        inst, f = _draw_kernel([seed, i, 1], rng, max_side=4)
        # power gauges reproduce the plain rectangle functional exactly
        alphas = tuple(float(a) for a in rng.uniform(0.2, 1.0, 2))
        scales = tuple(float(s) for s in rng.uniform(0.5, 2.0, 2))
        power = tuple(GaugeFunction.power(a) for a in alphas)
        plain = rect_sup(f, 1.0, alphas, scales).value
        gauged = gauge_rect_sup(f, 1.0, power, scales).value
        ok_power = abs(plain - gauged) <= 1e-12
        # concave piecewise-linear gauges: decomposition sandwich, constant 2
        gauges = (_random_concave_gauge(rng), _random_concave_gauge(rng))
        lower = gauge_rect_sup(f, 1.0, gauges, (1.0, 1.0)).value
        value = k_decompose_gauge(f, gauges, 1.0).value
        ok_sandwich = lower <= value + TOL and value <= 2.0 * lower + TOL
        return {
            "trial": i,
            "ok": bool(ok_power and ok_sandwich),
            "ratio": value / lower if lower > 0.0 else None,
            "power_gap": abs(plain - gauged),
            "instance_sha256": inst.sha256(),
        }

    results = _run_trials(trials, jobs, trial)
    return _finalize(
        "gauge",
        seed,
        trials,
        {"max_side": 4, "constant": 2.0, "tol": TOL},
        results,
    )


def _suite_duality(trials: int, seed: int, jobs: int) -> dict:
    def trial(i: int) -> dict:
        rng = np.random.default_rng([seed, i])
        inst, f = _draw_kernel([seed, i, 1], rng)
        signed_f = KernelMatrix(
            f.product, f.entries * rng.choice([-1.0, 1.0], size=f.product.shape)
        )
        g = KernelMatrix(f.product, rng.normal(size=f.product.shape))
        p1, p2 = _draw_p(rng), _draw_p(rng)
        report = duality_certificate(signed_f, g, p1, p2)
        # superlevel-set reconstruction of a scalar function
        n = int(rng.integers(1, 9))
        h = ScalarFunction(
            FiniteMeasureSpace(rng.uniform(0.2, 2.0, n)), rng.normal(size=n)
        )
        p = float(rng.choice([1.5, 2.0, 4.0]))
        pieces = level_set_decomposition(h, p)
        recon = np.zeros(n)
        for coeff, block in pieces:
            recon += coeff * block.values
        scalar_err = float(np.max(np.abs(recon - np.abs(h.values)))) if n else 0.0
        coeff_gap = abs(sum(c for c, _ in pieces) - lorentz_p1_norm(h, p))
        ok = (
            report.passed
            and report.reconstruction_error <= 1e-12
            and scalar_err <= 1e-12
            and coeff_gap <= 1e-9
        )
        return {
            "trial": i,
            "ok": bool(ok),
            "ratio": report.chain_bound / report.pairing
            if report.pairing > 0.0
            else None,
            "reconstruction_error": report.reconstruction_error,
            "scalar_reconstruction_error": scalar_err,
            "instance_sha256": inst.sha256(),
        }

    results = _run_trials(trials, jobs, trial)
    return _finalize(
        "duality",
        seed,
        trials,
        {"tol": TOL, "reconstruction_tol": 1e-12},
        results,
    )


def _suite_oracles(trials: int, seed: int, jobs: int) -> dict:
    ORACLE_TOL = 1e-7

    def trial(i: int) -> dict:
        rng = np.random.default_rng([seed, i])
        # sorted top-k bracket norm vs full enumeration (equal weights)
        n = int(rng.integers(1, 11))
        space = FiniteMeasureSpace(np.full(n, float(rng.uniform(0.2, 2.0))))
        h = ScalarFunction(space, rng.normal(size=n))
        p = float(rng.choice([1.5, 2.0, 4.0, INF]))
        gap_bracket = abs(
            bracket_norm(h, p, method="topk") - bracket_norm(h, p, method="enumerate")
        )
        # two-axis rectangle fast path vs full enumeration
        n1, n2 = int(rng.integers(1, 7)), int(rng.integers(1, 7))
        f = KernelMatrix(
            ProductSpace(
                (
                    FiniteMeasureSpace(np.full(n1, float(rng.uniform(0.3, 2.0)))),
                    FiniteMeasureSpace(rng.uniform(0.2, 2.0, n2)),
                )
            ),
            rng.normal(size=(n1, n2)),
        )
        q = float(rng.choice([0.5, 1.0, 2.0]))
        alphas = tuple(float(a) for a in rng.uniform(0.2, 1.5, 2))
        scales = tuple(float(s) for s in rng.uniform(0.5, 2.0, 2))
        gap_rect = abs(
            rect_sup(f, q, alphas, scales, method="fast").value
            - rect_sup(f, q, alphas, scales, method="enumerate").value
        )
        # cutting-plane LP vs the LP with all subset constraints
        _, g = _draw_kernel([seed, i, 2], rng, max_side=6)
        t = float(2.0 ** rng.integers(-3, 4))
        p1, p2 = _draw_p(rng), _draw_p(rng)
        lazy = k_exact(g, t, p1, p2).lp_value
        full = k_exact_full_oracle(g, t, p1, p2)
        gap_lp = abs(lazy - full)
        worst = max(gap_bracket, gap_rect, gap_lp)
        return {
            "trial": i,
            "ok": bool(worst <= ORACLE_TOL),
            "ratio": worst,
            "gap_bracket": gap_bracket,
            "gap_rect": gap_rect,
            "gap_lp": gap_lp,
        }

    results = _run_trials(trials, jobs, trial)
    return _finalize(
        "oracles",
        seed,
        trials,
        {"tol": 1e-7, "max_side": 6},
        results,
    )


SUITES = {
    "varopoulos": _suite_varopoulos,
    "sandwich": _suite_sandwich,
    "general-q": _suite_general_q,
    "envelope": _suite_envelope,
    "opnorm": _suite_opnorm,
    "multivar": _suite_multivar,
    "condexp": _suite_condexp,
    "gauge": _suite_gauge,
    "duality": _suite_duality,
    "oracles": _suite_oracles,
}

SUITE_NAMES = tuple(SUITES)


def verify_suite(name: str, trials: int, seed: int, jobs: int = 1) -> dict:
    """Run one named suite; unknown names raise ValueError."""
    if name not in SUITES:
        raise ValueError(
            f"unknown suite {name!r}; available: {', '.join(SUITE_NAMES)}"
        )
    if trials < 0:
        raise ValueError("trials must be nonnegative")
    return SUITES[name](int(trials), int(seed), max(1, int(jobs)))
