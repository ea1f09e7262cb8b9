"""Acceptance criteria 1-15, each at its stated tolerance.

Every test appends one ``criterion N: PASS|FAIL ...`` line; conftest prints them in the
terminal summary.  Run this file directly to print the lines without pytest.
"""

import time
from fractions import Fraction

import numpy as np
import pytest

from bicomplex.checks import report_text, run_battery
from bicomplex.cli import main
from bicomplex.dsl import parse
from bicomplex.integrators.consistency import convergence_ratios, nonuniform_d_h_consistency
from bicomplex.integrators.euler_b import EulerB
from bicomplex.integrators.run import build_mesh, load_config, run_config
from bicomplex.integrators.schemes import wave_lagrangian, zakharov_lagrangian
from bicomplex.multisymplectic import (
    el_system,
    multimomentum,
    structural_identity,
    structure,
    verify_theorem,
)
from bicomplex.operators import VectorField, contract, d_h
from bicomplex.problem import fixture_path, form_from_terms, load_problem
from bicomplex.randomforms import make_rng, random_form
from bicomplex.signature import Signature
from bicomplex.variational import (
    NotSymmetryError,
    divergence_form,
    euler_lagrange,
    lagrangian,
    noether,
    source_components,
)

BATTERY_SIZES = 100
FIXTURES = ("laplace", "three_component", "scalar_z3", "mechanics")


def verdict(log, n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}"
    log.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def battery():
    t0 = time.perf_counter()
    rep = run_battery(seed=0, sizes=BATTERY_SIZES)
    rep["_seconds"] = time.perf_counter() - t0
    return rep


def _crit(rep, n):
    return [i for i in rep["identities"] if i["criterion"] == n]


def _summary(items):
    return "; ".join(f"{i['name']} {i['cases'] - i['failures']}/{i['cases']}" for i in items)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 6])
def test_exact_identities(battery, acceptance_log, n):
    items = _crit(battery, n)
    ok = bool(items) and all(i["passed"] and i["cases"] > 0 for i in items)
    verdict(acceptance_log, n, ok, _summary(items))


def test_horizontal_homotopy(battery, acceptance_log):
    items = _crit(battery, 5)
    top = battery["horizontal_homotopy_top_degree"]
    ok = len(items) == 2 and all(i["passed"] and i["cases"] > 0 for i in items)
    detail = (f"{_summary(items)}; at k = p the identity that holds is '{top['identity_used']}'; "
              f"the unqualified h d_h + d_h h = id held on {top['unqualified_identity_holds']} and failed on "
              f"{top['unqualified_identity_fails']} random top-degree forms")
    verdict(acceptance_log, 5, ok, detail)


def _exprs(sig, values):
    return [parse(str(v), sig) for v in values]


def test_fixture_displays(acceptance_log):
    results = {}
    for name in FIXTURES:
        prob = load_problem(fixture_path(name + ".toml"))
        sig, lag, want = prob.sig, prob.degenerate, prob.expected
        st = structure(lag)
        if "el" in want:
            results[f"{name}.el"] = el_system(lag) == _exprs(sig, want["el"])
            if prob.lagrangian is not None:
                scalar_el = source_components(euler_lagrange(lagrangian(sig, prob.lagrangian)))
                results[f"{name}.el(scalar L)"] = scalar_el == _exprs(sig, want["el"])
        if "omega" in want:
            results[f"{name}.omega"] = st.omega == form_from_terms(sig, want["omega"])
        if "eta" in want:
            results[f"{name}.eta"] = st.eta == form_from_terms(sig, want["eta"])
        if "kappa" in want:
            results[f"{name}.kappa"] = st.kappa == [form_from_terms(sig, t) for t in want["kappa"]]
        if "lambda_components" in want:
            cand = multimomentum(lag, prob.characteristic)
            results[f"{name}.lambda"] = cand.components == _exprs(sig, want["lambda_components"])
            results[f"{name}.conservation"] = cand.is_conservation_law and verify_theorem(cand, lag)
    bad = [k for k, v in results.items() if not v]
    verdict(acceptance_log, 7, not bad and len(results) >= 12,
            f"{len(results) - len(bad)}/{len(results)} golden values match" + (f"; mismatched {bad}" if bad else ""))


def test_structural_identity(battery, acceptance_log):
    lags = {n: load_problem(fixture_path(n + ".toml")).degenerate for n in FIXTURES}
    lags["wave"] = wave_lagrangian()
    lags["zakharov"] = zakharov_lagrangian()
    fixtures_ok = {n: structural_identity(l).holds for n, l in lags.items()}
    rnd = _crit(battery, 8)[0]
    ok = all(fixtures_ok.values()) and rnd["passed"] and rnd["cases"] >= 50
    verdict(acceptance_log, 8, ok, f"fixtures {sum(fixtures_ok.values())}/{len(lags)}; random {_summary([rnd])}")


def test_inverse_round_trip(battery, acceptance_log):
    items = {i["name"]: i for i in _crit(battery, 9)}
    helm = items["Helmholtz: delta_v E(L) = 0"]
    inv = items["E(h_v(E(L))) = E(L)"]
    ok = all(i["passed"] for i in items.values()) and helm["cases"] >= 50 and inv["cases"] >= 50
    verdict(acceptance_log, 9, ok, _summary(items.values()))


def test_noether(acceptance_log):
    found = {}
    lap = load_problem(fixture_path("laplace.toml"))
    sig = lap.sig
    lag = lagrangian(sig, lap.density)
    v = VectorField(sig, lap.characteristic)
    law = noether(lag, v)
    found["laplace: d_h lambda = v -| E"] = d_h(law.lam) == contract(v, euler_lagrange(lag))
    printed = d_h(divergence_form(sig, _exprs(sig, lap.expected["lambda_components"])))
    found["laplace: d_h lambda = divergence of printed lambda"] = d_h(law.lam) == printed

    tc = load_problem(fixture_path("three_component.toml"))
    lag_tc = lagrangian(tc.sig, tc.density)
    v_tc = VectorField(tc.sig, _exprs(tc.sig, ["1", "0", "-1"]))
    law_tc = noether(lag_tc, v_tc)
    found["three-component, Q=(1,0,-1)"] = d_h(law_tc.lam) == contract(v_tc, euler_lagrange(lag_tc))
    try:
        noether(lag_tc, VectorField(tc.sig, tc.characteristic))
        found["three-component, Q=(1,0,0) rejected"] = False
    except NotSymmetryError:
        found["three-component, Q=(1,0,0) rejected"] = True
    bad = [k for k, v in found.items() if not v]
    verdict(acceptance_log, 10, not bad, "; ".join(f"{k} {'ok' if v else 'FAILED'}" for k, v in found.items()))


def test_euler_b(acceptance_log):
    integ = EulerB("h*(q^2 + p^2)/2", {"h": 0.1})
    t0 = time.perf_counter()
    run = integ.run(1.0, 0.0, 10_000, seeds=((0.3, -1.2), (0.7, 0.4)))
    secs = time.perf_counter() - t0
    det_dev = float(np.max(np.abs(run.det - 1.0)))
    drift = float(np.max(run.omega_drift))
    t1 = time.perf_counter()
    cli = run_config(load_config(fixture_path("euler_b.toml")))
    cli_secs = time.perf_counter() - t1
    ok = det_dev <= 1e-12 and drift <= 1e-10 and secs < 1.0 and cli.passed and cli_secs < 1.0
    verdict(acceptance_log, 11, ok,
            f"max|det-1| {det_dev:.1e}, omega drift {drift:.1e}, {secs:.2f} s (config run {cli_secs:.2f} s)")


def _lattice(name):
    cfg = load_config(fixture_path(name))
    t0 = time.perf_counter()
    res = run_config(cfg)
    return cfg, res, time.perf_counter() - t0


def test_wave(acceptance_log):
    parts, ok = [], True
    for name in ("wave.toml", "wave_nonuniform.toml"):
        cfg, res, secs = _lattice(name)
        s = res.manifest["summary"]
        ratio = build_mesh(cfg["mesh"], cfg["seed"]).step_ratio()[1]
        good = (s["max_scheme_residual"] <= 1e-12 and s["ms_residual_max"] <= 1e-9 and ratio <= 2.0
                and secs < 30 and res.manifest["mesh"]["nx"] == 64 and res.manifest["mesh"]["nt"] == 512)
        ok &= good
        parts.append(f"{name}: residual {s['max_scheme_residual']:.1e}, ms {s['ms_residual_max']:.1e}, "
                     f"t-ratio {ratio:.2f}, {secs:.1f} s")
    verdict(acceptance_log, 12, ok, "; ".join(parts))


def test_zakharov(acceptance_log):
    cfg, res, secs = _lattice("zakharov.toml")
    s = res.manifest["summary"]
    ok = (s["max_scheme_residual"] <= 1e-12 and s["ms_residual_max"] <= 1e-9 and secs < 60
          and res.manifest["mesh"]["nx"] == 64 and res.manifest["mesh"]["nt"] == 512)
    verdict(acceptance_log, 13, ok,
            f"residual {s['max_scheme_residual']:.1e}, ms {s['ms_residual_max']:.1e}, {secs:.1f} s")


def test_nonuniform_consistency(acceptance_log):
    rng = make_rng(14)
    checked = failures = 0
    steps = [[Fraction(1, 3), Fraction(7, 5), Fraction(2)], [Fraction(1, 2), Fraction(5, 4)],
             [Fraction(3), Fraction(2, 7)]]
    for p in (1, 2, 3):
        for q in (1, 2):
            sig = Signature(p, q)
            for k in range(p):
                for l in (0, 1, 2):
                    for _ in range(3):
                        s = random_form(rng, sig, k, l, terms=2)
                        rep = nonuniform_d_h_consistency(s, steps[:p], samples=3, seed=checked)
                        checked += 1
                        failures += not (rep["symbolic_equal"] and rep["sampled_equal"])
    gen = np.random.default_rng(14)
    nodes = np.concatenate([[0.0], np.cumsum(0.05 * (1 + gen.random(20)))])
    ratios = []
    for f, df in ((np.sin, np.cos), (np.exp, np.exp), (lambda x: x ** 3 - x, lambda x: 3 * x ** 2 - 1)):
        ratios += convergence_ratios(f, df, nodes, levels=4)[0]
    ok = failures == 0 and checked > 0 and all(abs(r - 2) <= 0.1 for r in ratios)
    verdict(acceptance_log, 14, ok,
            f"mesh d_h equals uniform d_h on {checked - failures}/{checked} forms; "
            f"convergence ratios in [{min(ratios):.3f}, {max(ratios):.3f}]")


def _cli(args, capsys):
    code = main(args)
    return code, capsys.readouterr().out


def test_determinism(acceptance_log, tmp_path, capsys):
    outs = []
    for _ in range(2):
        outs.append(_cli(["check", "--seed", "5", "--sizes", "2"], capsys))
    same_check = outs[0] == outs[1] and outs[0][0] == 0
    files = []
    for k in range(2):
        csv, man = tmp_path / f"w{k}.csv", tmp_path / f"w{k}.json"
        code, _ = _cli(["integrate", "--config", str(fixture_path("wave.toml")), "--csv", str(csv),
                        "--json", str(man)], capsys)
        files.append((code, csv.read_bytes(), man.read_bytes()))
    same_run = files[0] == files[1] and files[0][0] == 0
    same_battery = report_text(run_battery(seed=5, sizes=2)) == report_text(run_battery(seed=5, sizes=2))
    ok = same_check and same_run and same_battery
    verdict(acceptance_log, 15, ok,
            f"check output identical: {same_check}; integrate csv+manifest identical: {same_run}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
