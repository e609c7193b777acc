import json
from fractions import Fraction

import pytest

from fedosov import io as fio
from fedosov.poly import XPoly
from fedosov.quantize import FedosovData
from fedosov.verify import builtin_curved_data, builtin_flat_data
from fedosov.weyl import FormWeyl, WeylElement


def test_frac_str():
    assert fio.frac_str(Fraction(3, 4)) == "3/4"
    assert fio.frac_str(Fraction(-5)) == "-5"


def test_xpoly_roundtrip_and_canonical_order():
    p = XPoly(2, {(2, 0): Fraction(1, 3), (0, 1): Fraction(-2)})
    blob = fio.xpoly_to_json(p)
    assert blob == [{"coeff": "-2", "exps": [0, 1]},
                    {"coeff": "1/3", "exps": [2, 0]}]
    assert fio.xpoly_from_json(blob, 2) == p


def test_weyl_roundtrip():
    w = WeylElement(2, 6, {(1, (1, 0)): XPoly.variable(2, 2),
                           (-1, (0, 2)): XPoly.const(2, Fraction(1, 2))})
    assert fio.weyl_from_json(fio.weyl_to_json(w)) == w


def test_form_roundtrip():
    w = FormWeyl(2, 6, {(1, 2): WeylElement.const(2, 6, 3),
                        (1,): WeylElement.y_variable(2, 6, 2)})
    assert fio.form_from_json(fio.form_to_json(w)) == w


def test_fedosov_data_roundtrip():
    for data in (builtin_flat_data(2, 6), builtin_curved_data(6),
                 FedosovData(builtin_flat_data(2, 6).chart,
                             {1: {(1, 2): XPoly.const(2, 1)}}, 6)):
        blob = fio.fedosov_data_to_json(data)
        back = fio.fedosov_data_from_json(json.loads(json.dumps(blob)))
        back.validate()
        assert back.order == data.order
        assert back.chart.omega_upper == data.chart.omega_upper
        assert back.chart.christoffel == data.chart.christoffel
        assert back.omega_series == data.omega_series


def test_schema_errors():
    with pytest.raises(fio.SchemaError):
        fio.fedosov_data_from_json({"dim": 2})
    bad = fio.fedosov_data_to_json(builtin_flat_data(2, 6))
    bad["Omega"] = [{"hbar_power": 1,
                     "form": [{"indices": [2, 1], "poly": []}]}]
    with pytest.raises(fio.SchemaError, match="i < j"):
        fio.fedosov_data_from_json(bad)


def test_weyl_text():
    w = WeylElement(2, 6, {(0, (0, 0)): XPoly.monomial(2, (1, 1), 1),
                           (1, (0, 0)): XPoly.const(2, Fraction(1, 2))})
    assert fio.weyl_text(w) == "x1 x2 + 1/2 hbar"
    assert fio.weyl_text(WeylElement.zero(2, 6)) == "0"


def test_parse_poly_basics():
    got = fio.parse_poly("x1*x2 + 1/2 hbar", 2, 6)
    want = WeylElement(2, 6, {(0, (0, 0)): XPoly.monomial(2, (1, 1), 1),
                              (1, (0, 0)): XPoly.const(2, Fraction(1, 2))})
    assert got == want
    assert fio.parse_poly("-3 x1^2 + hbar^-1", 2, 6) == WeylElement(
        2, 6, {(0, (0, 0)): XPoly.monomial(2, (2, 0), -3),
               (-1, (0, 0)): XPoly.const(2, 1)})
    assert fio.parse_poly("1", 2, 6) == WeylElement.const(2, 6, 1)
    assert fio.parse_poly("x2 - x2", 2, 6).is_zero()


def test_parse_poly_errors():
    with pytest.raises(fio.ParseError):
        fio.parse_poly("x3", 2, 6)
    with pytest.raises(fio.ParseError):
        fio.parse_poly("x1 +", 2, 6)
    with pytest.raises(fio.ParseError):
        fio.parse_poly("foo", 2, 6)


def test_parse_round_trips_text():
    w = WeylElement(2, 6, {(0, (0, 0)): XPoly.monomial(2, (2, 1), Fraction(-7, 3)),
                           (2, (0, 0)): XPoly.const(2, 5)})
    assert fio.parse_poly(fio.weyl_text(w), 2, 6) == w


def test_dumps_canonical_is_deterministic():
    blob = fio.fedosov_data_to_json(builtin_curved_data(6))
    assert fio.dumps_canonical(blob) == fio.dumps_canonical(
        json.loads(json.dumps(blob)))


def test_fiberwise_cochain_roundtrip():
    import random

    from fedosov.verify import rand_cochain

    rng = random.Random(21)
    P = rand_cochain(rng, 2, 6, 2, nterms=4)
    assert fio.cochain_from_json(fio.cochain_to_json(P)) == P


def test_weylhh_types_roundtrip():
    import random

    from fedosov.verify import rand_bar, rand_koszul, rand_psi, rand_wcochain
    from fedosov.weylhh import WeylContext

    ctx = WeylContext.standard(2, 6)
    rng = random.Random(22)
    a = rand_wcochain(rng, ctx, 1, nterms=4)
    assert fio.wcochain_from_json(fio.wcochain_to_json(a)) == a
    b = rand_bar(rng, ctx, 2, nterms=4)
    assert fio.barchain_from_json(fio.barchain_to_json(b)) == b
    k = rand_koszul(rng, ctx, 1, nterms=4)
    assert fio.koszulchain_from_json(fio.koszulchain_to_json(k)) == k
    p = rand_psi(rng, ctx)
    assert fio.psi_from_json(fio.psi_to_json(p)) == p


def test_wcochain_compact_text():
    from fractions import Fraction as F

    from fedosov.weylhh import WeylCochain

    a = WeylCochain(2, 1, {(-1, (2, 0), ((0, 1),)): F(1)})
    assert fio.wcochain_text(a) == "hbar^-1 y1^2 d2"
    assert fio.wcochain_text(WeylCochain(2, 0, {})) == "0"


def test_star_golden_bytes(tmp_path):
    import json as _json

    from fedosov.cli import main
    from fedosov.verify import builtin_flat_data

    path = tmp_path / "flat.json"
    path.write_text(_json.dumps(fio.fedosov_data_to_json(builtin_flat_data(2, 6))))
    import io as _stdio
    import contextlib

    buf = _stdio.StringIO()
    with contextlib.redirect_stdout(buf):
        assert main(["--json", "star", str(path), "x1", "x2"]) == 0
    golden = ('{"star":{"dim":2,"order":6,"terms":[{"hbar":0,"poly":'
              '[{"coeff":"1","exps":[1,1]}],"ydeg":[0,0]},{"hbar":1,"poly":'
              '[{"coeff":"1/2","exps":[0,0]}],"ydeg":[0,0]}]}}')
    assert buf.getvalue().strip() == golden
