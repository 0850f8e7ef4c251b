"""Command-line front end for reproducible chaos--Edgeworth runs.

Subcommands
-----------
simulate
    Draw a sample batch and write it to disk (CSV, or the binary batch
    format when the output path ends in ``.chao``).
moments
    Estimate the Hermite moments ``E[H_k(F)]`` with standard errors.
expand
    Build the order-``m`` correcting measure (quality gate applied) and
    write the Hermite coefficients of its polynomial factor.
compare
    Write the ten-column density comparison grid plus a metadata sidecar.
ratecheck
    Convergence-rate study over a family of model sizes; writes the rate
    table and the fitted slope.
lindeberg
    Invariance discrepancies ``|E h(Q(X)) - E h(Q(G))|`` for complete-graph
    homogeneous sums over a family of variable counts, ``h = cos``.
selftest
    Fast internal invariant battery; nonzero exit on any failure.

Every artifact ``<out>`` is paired with a ``<out>.meta`` sidecar of
``key=value`` lines echoing the full effective configuration (defaults
included), the seed (auto-generated and recorded when omitted), the
stream generator id, and a ``rerun`` line that reproduces the command.
CSV artifacts are byte-identical for identical configuration and seed,
across runs and across worker counts (``CHAOS_EDGEWORTH_THREADS`` only
changes wall time); timestamps appear only in sidecars.

Exit codes: 0 ok; 2 usage error; 3 domain/model error; 4 numerical-
quality refusal; 5 internal invariant failure.
"""

from __future__ import annotations

import argparse
import math
import os
import secrets
import shlex
import sys
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .errors import (ChaosEdgeworthError, ContractError, DomainError,
                     InvariantError, QualityError)
from .hermite import gauss_hermite_rule, hermite_eval_all, HermiteSeries
from .ou import (default_stein_grid, resolvent_apply,
                 resolvent_integral_check, s_operator, s_operator_mehler,
                 semigroup_apply_mehler, semigroup_apply_spectral,
                 stein_solve)
from .simulate import (FbmHermiteModel, GENERATOR_ID, GoeTraceModel,
                       HomogeneousSum, SampleBatch, complete_graph_sum,
                       lindeberg_discrepancy, sample_fbm_hermite,
                       sample_goe_trace, sample_homogeneous,
                       total_influence)
from .batch_io import batch_to_csv, save_batch
from .edgeworth import (build_measure, estimate_moments, inequality_report,
                        kurtosis_estimate, measure_expectation,
                        moments_to_csv, synthetic_measure, var_gamma)
from .diagnostics import (RatePoint, density_grid, grid_to_csv,
                          rate_regression, rate_report_to_csv,
                          stein_discrepancy_check, tv_signed)
from .hermite import series_to_csv


COMMANDS = ("simulate", "moments", "expand", "compare", "ratecheck",
            "lindeberg", "selftest")
MODELS = ("fbm", "goe", "hsum")

_SELFTEST_SEED = 20240901


class UsageError(Exception):
    """Bad invocation: unknown flag, missing model, malformed value."""


class _Parser(argparse.ArgumentParser):
    """Argument parser that raises instead of exiting the process."""

    def error(self, message):
        raise UsageError(message)


# --------------------------------------------------------------------------
# Configuration
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run description; every field serializable.

    All fields except ``command`` and ``model`` carry defaults, and the
    effective values (defaults included) are echoed into the metadata
    sidecar.  ``seed`` is always concrete: auto-generated when the
    invocation omitted it, then recorded so the run can be replayed.
    ``n`` is a tuple of sizes — a single entry for the one-model commands,
    a family for ``ratecheck`` and ``lindeberg``.
    """

    command: str
    model: str | None
    hurst: float = 0.5
    p: int = 2
    n: tuple = (64,)
    m: int = 1
    n_samples: int = 100000
    seed: int = 0
    out: str = "run.csv"
    grid: tuple = (-8.0, 8.0, 4001)
    bandwidth: object = "auto"
    sampler: str = "cholesky"

    def as_items(self):
        """Ordered ``(key, value-string)`` pairs for the sidecar echo."""
        return [
            ("command", self.command),
            ("model", "" if self.model is None else self.model),
            ("hurst", repr(float(self.hurst))),
            ("p", str(self.p)),
            ("n", ",".join(str(v) for v in self.n)),
            ("m", str(self.m)),
            ("samples", str(self.n_samples)),
            ("seed", str(self.seed)),
            ("out", self.out),
            ("grid", "%s:%s:%d" % (repr(self.grid[0]), repr(self.grid[1]),
                                   self.grid[2])),
            ("bandwidth", self.bandwidth if self.bandwidth == "auto"
             else repr(float(self.bandwidth))),
            ("sampler", self.sampler),
        ]

    def rerun_command(self) -> str:
        """A shell line that reproduces this run's artifacts exactly.

        Flags use the ``--key=value`` form so values with a leading dash
        (negative grid bounds) survive re-parsing.
        """
        parts = ["chaos-edgeworth", self.command]
        for key, value in self.as_items()[1:]:
            if key == "model" and not value:
                continue
            parts.append("--%s=%s" % (key, value))
        return " ".join(shlex.quote(p) for p in parts)


def _as_int(name: str, raw, minimum=None) -> int:
    try:
        value = int(str(raw), 10)
    except ValueError:
        raise UsageError("%s: expected an integer, got %r" % (name, raw))
    if minimum is not None and value < minimum:
        raise UsageError("%s: must be >= %d, got %r" % (name, minimum, raw))
    return value


def _as_float(name: str, raw) -> float:
    try:
        return float(str(raw))
    except ValueError:
        raise UsageError("%s: expected a real number, got %r" % (name, raw))


def _as_sizes(name: str, raw) -> tuple:
    parts = [p for p in str(raw).split(",") if p != ""]
    if not parts:
        raise UsageError("%s: expected one or more sizes, got %r" % (name, raw))
    return tuple(_as_int(name, p, minimum=1) for p in parts)


def _as_grid(raw) -> tuple:
    parts = str(raw).split(":")
    if len(parts) != 3:
        raise UsageError("--grid: expected a:b:points, got %r" % (raw,))
    a = _as_float("--grid", parts[0])
    b = _as_float("--grid", parts[1])
    points = _as_int("--grid", parts[2], minimum=2)
    return (a, b, points)


def _as_bandwidth(raw):
    if str(raw) == "auto":
        return "auto"
    return _as_float("--bandwidth", raw)


def _read_config_file(path: str) -> dict:
    """Plain ``key=value`` lines; ``#`` comments and blanks ignored."""
    allowed = {"model", "hurst", "p", "n", "m", "samples", "seed", "out",
               "grid", "bandwidth", "sampler"}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError("--config: cannot read %r (%s)" % (path, exc))
    values = {}
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, value = stripped.partition("=")
        key = key.strip()
        if not sep or key not in allowed:
            raise UsageError("--config: %s:%d: expected key=value with key "
                             "in %s, got %r"
                             % (path, lineno, sorted(allowed), stripped))
        values[key] = value.strip()
    return values


def parse_args(argv) -> RunConfig:
    """Resolve flags, config file, and defaults into a :class:`RunConfig`.

    Precedence: explicit flag > config-file entry > built-in default.
    ``--seed`` is auto-generated (and recorded) when absent everywhere.

    Raises
    ------
    UsageError
        Unknown flag, missing model, or a malformed / out-of-range value.
    """
    parser = _Parser(
        prog="chaos-edgeworth",
        description="Edgeworth correcting measures on Wiener chaos: "
                    "simulation, moment estimation, signed-density "
                    "expansion, and convergence diagnostics.")
    parser.add_argument("command", choices=COMMANDS)
    for flag in ("--model", "--hurst", "--p", "--n", "--m", "--samples",
                 "--seed", "--out", "--grid", "--bandwidth", "--sampler",
                 "--config"):
        parser.add_argument(flag, default=None)
    ns = parser.parse_args(list(argv))

    file_values = _read_config_file(ns.config) if ns.config else {}

    def raw(key, default=None):
        flag = getattr(ns, key)
        if flag is not None:
            return flag
        if key in file_values:
            return file_values[key]
        return default

    command = ns.command
    m_order = _as_int("--m", raw("m", 1), minimum=1)
    model = raw("model")
    if model is None and command != "selftest":
        raise UsageError("--model is required for %r (fbm, goe, or hsum)"
                         % command)
    if model is not None and model not in MODELS:
        raise UsageError("--model: expected one of %s, got %r"
                         % (", ".join(MODELS), model))
    if command == "lindeberg" and model != "hsum":
        raise UsageError("--model: lindeberg compares homogeneous-sum "
                         "input laws and needs hsum, got %r" % model)

    default_n = {"ratecheck": "32,64,128,256",
                 "lindeberg": "8,16,32,64"}.get(command, "64")
    sizes = _as_sizes("--n", raw("n", default_n))
    if command == "ratecheck" and len(sizes) < 3:
        raise UsageError("--n: ratecheck needs at least 3 sizes, got %r"
                         % (raw("n", default_n),))
    if command == "lindeberg" and len(sizes) < 2:
        raise UsageError("--n: lindeberg needs at least 2 variable counts, "
                         "got %r" % (raw("n", default_n),))
    if command in ("simulate", "moments", "expand", "compare") \
            and len(sizes) != 1:
        raise UsageError("--n: %s takes a single size, got %r"
                         % (command, raw("n", default_n)))

    seed_raw = raw("seed")
    seed = secrets.randbits(63) if seed_raw is None else _as_int("--seed",
                                                                 seed_raw)
    return RunConfig(
        command=command,
        model=model,
        hurst=_as_float("--hurst", raw("hurst", 0.5)),
        p=_as_int("--p", raw("p", 2)),
        n=sizes,
        m=m_order,
        n_samples=_as_int("--samples", raw("samples", 100000), minimum=1),
        seed=seed,
        out=str(raw("out", command + ".csv")),
        grid=_as_grid(raw("grid", "-8:8:4001")),
        bandwidth=_as_bandwidth(raw("bandwidth", "auto")),
        sampler=str(raw("sampler", "cholesky")),
    )


# --------------------------------------------------------------------------
# Artifact plumbing
# --------------------------------------------------------------------------

def _write_sidecar(config: RunConfig, extras) -> str:
    """Write ``<out>.meta``; returns its path.  Timestamps live here only."""
    path = config.out + ".meta"
    lines = config.as_items()
    lines.append(("generator", GENERATOR_ID))
    lines.append(("version", __version__))
    lines.append(("created_utc",
                  datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")))
    lines.append(("rerun", config.rerun_command()))
    lines.extend(extras)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key, value in lines:
            fh.write("%s=%s\n" % (key, value))
    return path


def _sample_single(config: RunConfig, size: int, seed: int) -> SampleBatch:
    """One batch of the configured model at the given size and seed."""
    if config.model == "fbm":
        model = FbmHermiteModel(hurst=config.hurst, p=config.p, n=size,
                                sampler=config.sampler)
        return sample_fbm_hermite(model, config.n_samples, seed)
    if config.model == "goe":
        model = GoeTraceModel(n=size)
        return sample_goe_trace(model, config.n_samples, seed)
    q = complete_graph_sum(size, law="gaussian")
    return sample_homogeneous(q, config.n_samples, seed)


def _moment_extras(meas) -> list:
    extras = []
    for k, value, se in meas.moments.items():
        extras.append(("moment_h%d" % k, repr(value)))
        extras.append(("se_h%d" % k, repr(se)))
    return extras


def _batch_extras(batch: SampleBatch) -> list:
    extras = [("model_descriptor", batch.model)]
    if batch.has_gamma:
        vg = var_gamma(batch)
        k4 = kurtosis_estimate(batch)
        extras.extend([("var_gamma", repr(vg.value)),
                       ("var_gamma_se", repr(vg.std_error)),
                       ("kappa4", repr(k4.value)),
                       ("kappa4_se", repr(k4.std_error))])
    return extras


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------

def _run_simulate(config: RunConfig) -> int:
    batch = _sample_single(config, config.n[0], config.seed)
    if config.out.endswith(".chao"):
        save_batch(batch, config.out)
    else:
        batch_to_csv(batch, config.out)
    meta = _write_sidecar(config, [("model_descriptor", batch.model),
                                   ("has_gamma", str(batch.has_gamma).lower())])
    print("wrote %s and %s" % (config.out, meta))
    return 0


def _run_moments(config: RunConfig) -> int:
    batch = _sample_single(config, config.n[0], config.seed)
    moments = estimate_moments(batch, 4 * config.m - 1)
    moments_to_csv(moments, config.out)
    meta = _write_sidecar(config, _batch_extras(batch))
    print("wrote %s and %s" % (config.out, meta))
    return 0


def _run_expand(config: RunConfig) -> int:
    batch = _sample_single(config, config.n[0], config.seed)
    meas = build_measure(batch, config.m)
    series_to_csv(meas.polynomial_factor(), config.out)
    meta = _write_sidecar(config, _batch_extras(batch) + _moment_extras(meas))
    print("wrote %s and %s" % (config.out, meta))
    return 0


def _run_compare(config: RunConfig) -> int:
    batch = _sample_single(config, config.n[0], config.seed)
    meas = build_measure(batch, config.m)
    a, b, points = config.grid
    grid = density_grid(batch, meas, grid_bounds=(a, b), grid_points=points,
                        bandwidth=config.bandwidth)
    grid_to_csv(grid, config.out)
    extras = _batch_extras(batch) + _moment_extras(meas)
    extras.append(("bandwidth_used", repr(grid.bandwidth)))
    meta = _write_sidecar(config, extras)
    print("wrote %s and %s" % (config.out, meta))
    return 0


def _run_ratecheck(config: RunConfig) -> int:
    a, b, points = config.grid
    rate_points = []
    extras = []
    for index, size in enumerate(config.n):
        seed = config.seed + index
        batch = _sample_single(config, size, seed)
        meas = build_measure(batch, config.m)
        tv = tv_signed(batch, meas, (a, b), points,
                       bandwidth=config.bandwidth)
        vg = var_gamma(batch)
        rate_points.append(RatePoint(var_gamma=vg.value, d_tv=tv.value,
                                     n=size, descriptor=batch.model))
        extras.append(("seed_n%d" % size, str(seed)))
    report = rate_regression(rate_points, m=config.m)
    rate_report_to_csv(report, config.out)
    extras.extend([
        ("slope", repr(report.slope)),
        ("intercept", repr(report.intercept)),
        ("ci_low", repr(report.ci_low)),
        ("ci_high", repr(report.ci_high)),
        ("target", repr(report.target)),
        ("passed", str(report.passed).lower()),
    ])
    meta = _write_sidecar(config, extras)
    print("wrote %s and %s (slope %.4f, target %.2f)"
          % (config.out, meta, report.slope, report.target))
    return 0


def _run_lindeberg(config: RunConfig) -> int:
    rows = []
    extras = [("h", "cos")]
    for index, m_vars in enumerate(config.n):
        seed = config.seed + index
        q = complete_graph_sum(m_vars, law="rademacher")
        disc, se = lindeberg_discrepancy(q, np.cos, config.n_samples, seed,
                                         return_se=True)
        rows.append((m_vars, total_influence(q), disc, se))
        extras.append(("seed_M%d" % m_vars, str(seed)))
    with open(config.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("m_vars,influence,discrepancy,std_error\n")
        for m_vars, tau, disc, se in rows:
            fh.write("%d,%s,%s,%s\n" % (m_vars, repr(tau), repr(disc),
                                        repr(se)))
    if all(r[2] > 0.0 for r in rows):
        log_tau = np.log([r[1] for r in rows])
        log_disc = np.log([r[2] for r in rows])
        slope = float(np.polyfit(log_tau, log_disc, 1)[0])
        extras.append(("slope_vs_influence", repr(slope)))
    meta = _write_sidecar(config, extras)
    print("wrote %s and %s" % (config.out, meta))
    return 0


# --------------------------------------------------------------------------
# Self-test battery
# --------------------------------------------------------------------------

def _require(condition: bool, message: str) -> None:
    if not condition:
        raise InvariantError(message)


def _check_hermite_orthonormality() -> None:
    rule = gauss_hermite_rule(64)
    table = hermite_eval_all(8, rule.nodes)
    gram = (table * rule.weights) @ table.T
    for j in range(9):
        for k in range(9):
            want = math.factorial(k) if j == k else 0.0
            scale = math.sqrt(math.factorial(j) * math.factorial(k))
            _require(abs(gram[j, k] - want) <= 1e-8 * scale,
                     "E[H_%d H_%d] = %.6g, want %.6g"
                     % (j, k, gram[j, k], want))


def _check_quadrature_exactness() -> None:
    got = gauss_hermite_rule(64).expectation(lambda t: t ** 10)
    _require(abs(got - 945.0) <= 1e-9 * 945.0,
             "E[N^10] = %.12g, want 945" % got)


_SELFTEST_SERIES = HermiteSeries(coeffs=(0.3, -0.2, 0.5, 0.1, -0.4, 0.25))


def _check_semigroup_routes() -> None:
    series = _SELFTEST_SERIES
    for x in (-1.3, 0.0, 2.1):
        spectral = semigroup_apply_spectral(series, 0.7).evaluate(x)
        mehler = semigroup_apply_mehler(series.evaluate, 0.7, x)
        _require(abs(spectral - mehler) <= 1e-8,
                 "semigroup routes differ at x=%g: %.12g vs %.12g"
                 % (x, spectral, mehler))


def _check_resolvent_routes() -> None:
    series = _SELFTEST_SERIES
    for x in (-1.3, 0.0, 2.1):
        spectral = resolvent_apply(series, 1.5).evaluate(x)
        integral = resolvent_integral_check(series.evaluate, 1.5, x,
                                            t_max=30.0)
        _require(abs(spectral - integral) <= 1e-6,
                 "resolvent routes differ at x=%g: %.12g vs %.12g"
                 % (x, spectral, integral))


def _check_s_operator_routes() -> None:
    series = _SELFTEST_SERIES
    for x in (-1.3, 0.0, 2.1):
        spectral = s_operator(series).evaluate(x)
        mehler = s_operator_mehler(series.evaluate, x)
        _require(abs(spectral - mehler) <= 1e-6,
                 "S-operator routes differ at x=%g: %.12g vs %.12g"
                 % (x, spectral, mehler))


def _check_stein_bounds() -> None:
    sol = stein_solve(np.cos, grid=default_stein_grid())
    centered = float(np.max(np.abs(np.cos(sol.grid) - sol.h_mean)))
    _require(float(np.max(np.abs(sol.phi)))
             <= math.sqrt(math.pi / 2.0) * centered + 1e-12,
             "Stein solution breaks the sqrt(pi/2) sup bound")
    _require(float(np.max(np.abs(sol.phi_prime))) <= 2.0 * centered + 1e-12,
             "Stein derivative breaks the factor-2 sup bound")


def _selftest_batch() -> SampleBatch:
    model = FbmHermiteModel(hurst=0.5, p=2, n=16)
    return sample_fbm_hermite(model, 70000, _SELFTEST_SEED)


def _check_simulate_determinism() -> None:
    first = _selftest_batch()
    again = _selftest_batch()
    _require(first.f_samples.tobytes() == again.f_samples.tobytes()
             and first.gamma_samples.tobytes() == again.gamma_samples.tobytes(),
             "identical seed produced different draws")
    saved = os.environ.get("CHAOS_EDGEWORTH_THREADS")
    os.environ["CHAOS_EDGEWORTH_THREADS"] = "3"
    try:
        other = _selftest_batch()
    finally:
        if saved is None:
            os.environ.pop("CHAOS_EDGEWORTH_THREADS", None)
        else:
            os.environ["CHAOS_EDGEWORTH_THREADS"] = saved
    _require(first.f_samples.tobytes() == other.f_samples.tobytes(),
             "worker count changed the output stream")


def _check_moment_routes() -> None:
    batch = _selftest_batch()
    estimated = estimate_moments(batch, 4).value(4)
    f = batch.f_samples
    direct = float(np.mean(f ** 4) - 6.0 * np.mean(f ** 2) + 3.0)
    _require(abs(estimated - direct) <= 1e-10,
             "E[H_4] routes differ: %.12g vs %.12g" % (estimated, direct))


def _check_measure_mass() -> None:
    meas = synthetic_measure(2, moments={3: 0.2, 4: 0.1, 5: 0.05,
                                         6: 0.02, 7: 0.01})
    mass = measure_expectation(meas, lambda t: np.ones_like(t))
    _require(abs(mass - 1.0) <= 1e-10,
             "measure mass %.12g, want 1" % mass)
    h2 = measure_expectation(meas, lambda t: t * t - 1.0)
    _require(abs(h2) <= 1e-8,
             "measure must kill H_2, got %.3g" % h2)


def _check_density_grid() -> None:
    batch = _selftest_batch()
    meas = build_measure(batch, 1)
    grid = density_grid(batch, meas, grid_bounds=(-8.0, 8.0),
                        grid_points=1201, bandwidth="auto")
    _require(grid.n_points == 1201, "grid dropped points")


def _check_inequalities() -> None:
    report = inequality_report(_selftest_batch())
    _require(report.all_hold,
             "fourth-moment inequality suite failed: %s"
             % "; ".join("%s margin %.3g" % (c.name, c.margin)
                         for c in report.checks if not c.holds))


def _check_stein_identity() -> None:
    q = HomogeneousSum(degree=1, m_vars=1, entries=(((1,), 1.0),),
                       law="gaussian")
    batch = sample_homogeneous(q, 30000, _SELFTEST_SEED)
    check = stein_discrepancy_check(batch, np.cos)
    _require(check.rhs.value == 0.0,
             "first-chaos Gamma defect must vanish exactly, got %.3g"
             % check.rhs.value)
    _require(abs(check.lhs.value) <= 5.0 * check.lhs.std_error,
             "Gaussian batch drifted from E[cos N] by %.3g (se %.3g)"
             % (check.lhs.value, check.lhs.std_error))


_SELFTEST_CHECKS = (
    ("hermite-orthonormality", _check_hermite_orthonormality),
    ("quadrature-exactness", _check_quadrature_exactness),
    ("semigroup-routes", _check_semigroup_routes),
    ("resolvent-routes", _check_resolvent_routes),
    ("s-operator-routes", _check_s_operator_routes),
    ("stein-sup-bounds", _check_stein_bounds),
    ("simulate-determinism", _check_simulate_determinism),
    ("moment-routes", _check_moment_routes),
    ("measure-mass", _check_measure_mass),
    ("density-grid", _check_density_grid),
    ("inequality-suite", _check_inequalities),
    ("stein-identity", _check_stein_identity),
)


def _run_selftest(config: RunConfig) -> int:
    failures = 0
    for name, check in _SELFTEST_CHECKS:
        try:
            check()
        except Exception as exc:  # noqa: BLE001 — report and keep going
            failures += 1
            print("FAIL %-24s %s" % (name, exc))
        else:
            print("ok   %s" % name)
    total = len(_SELFTEST_CHECKS)
    print("selftest: %d/%d checks passed" % (total - failures, total))
    return 5 if failures else 0


# --------------------------------------------------------------------------
# Entry point
# --------------------------------------------------------------------------

def run(config: RunConfig) -> int:
    """Execute one resolved configuration; returns the exit status."""
    runner = {
        "simulate": _run_simulate,
        "moments": _run_moments,
        "expand": _run_expand,
        "compare": _run_compare,
        "ratecheck": _run_ratecheck,
        "lindeberg": _run_lindeberg,
        "selftest": _run_selftest,
    }[config.command]
    return runner(config)


def main(argv=None) -> int:
    """CLI entry point; maps errors to documented exit codes."""
    try:
        config = parse_args(sys.argv[1:] if argv is None else list(argv))
        return run(config)
    except UsageError as exc:
        print("usage error: %s" % exc, file=sys.stderr)
        return 2
    except QualityError as exc:
        print("quality refusal: %s" % exc, file=sys.stderr)
        return 4
    except (DomainError, ContractError) as exc:
        print("domain error: %s" % exc, file=sys.stderr)
        return 3
    except InvariantError as exc:
        print("invariant failure: %s" % exc, file=sys.stderr)
        return 5
    except ChaosEdgeworthError as exc:
        print("internal error: %s" % exc, file=sys.stderr)
        return 5
    except Exception as exc:  # noqa: BLE001 — CLI boundary, one-line report
        print("internal error: %s: %s" % (type(exc).__name__, exc),
              file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
