import numpy as np
import pytest

from dptestbed.hydrodb import synthetic_st_database
from dptestbed.kinematics import BodyVel6, Pose6
from dptestbed.waves import EnvironmentSpec, realize_spectrum, wave_force
from dptestbed.windcurrent import (
    HullWindage,
    default_coefficient_table,
    load_coefficient_table,
    parse_coefficient_table,
    wind_current_force,
)

REST = BodyVel6()


def test_no_flow_no_force():
    env = EnvironmentSpec()
    f = wind_current_force(env, Pose6(), REST)
    assert np.array_equal(f, np.zeros(6))


def test_wind_force_quadratic_in_speed():
    lo = wind_current_force(
        EnvironmentSpec(wind_speed=5.0, wind_dir=1.0), Pose6(), REST
    )
    hi = wind_current_force(
        EnvironmentSpec(wind_speed=10.0, wind_dir=1.0), Pose6(), REST
    )
    assert np.allclose(hi, 4.0 * lo, rtol=1e-12)


def test_beam_current_matches_hand_formula():
    env = EnvironmentSpec(current_speed=0.5, current_dir=np.pi / 2)
    f = wind_current_force(env, Pose6(), REST)
    # 1/2 * 1025 * Cy(90 deg) * (L*T) * V^2, Cy(90) = -0.9 from the default table
    lateral_area = 137.0 * 8.655
    expected_kn = 0.5 * 1025.0 * (-0.9) * lateral_area * 0.5**2 / 1e3
    assert f[1] == pytest.approx(expected_kn, rel=1e-9)
    assert f[0] == pytest.approx(0.0, abs=1e-9)
    assert f[2:5] == pytest.approx(np.zeros(3))


def test_head_current_pushes_astern():
    env = EnvironmentSpec(current_speed=0.5, current_dir=0.0)
    f = wind_current_force(env, Pose6(), REST)
    assert f[0] < 0.0
    assert abs(f[1]) < 1e-9 and abs(f[5]) < 1e-9


def test_relative_velocity_cancellation():
    # vessel drifting with the current feels no hydrodynamic drag
    env = EnvironmentSpec(current_speed=0.5, current_dir=np.pi)
    moving = BodyVel6(u=0.5)  # current from astern pushes north; ship already moving north
    f = wind_current_force(
        EnvironmentSpec(current_speed=0.5, current_dir=np.pi), Pose6(), moving,
        windage=HullWindage(frontal_wind=0.0, lateral_wind=0.0),
    )
    assert np.allclose(f, np.zeros(6), atol=1e-12)


def test_oblique_yaw_moment_peaks_at_45():
    vals = []
    for deg in (0.0, 45.0, 90.0):
        env = EnvironmentSpec(current_speed=0.5, current_dir=np.radians(deg))
        vals.append(abs(wind_current_force(env, Pose6(), REST)[5]))
    assert vals[1] > vals[0] and vals[1] > vals[2]


def test_heading_invariance_of_relative_problem():
    # same relative geometry, rotated world: body-frame force unchanged
    a = wind_current_force(
        EnvironmentSpec(wind_speed=8.0, wind_dir=0.9), Pose6(psi=0.0), REST
    )
    b = wind_current_force(
        EnvironmentSpec(wind_speed=8.0, wind_dir=0.9 + 1.1), Pose6(psi=1.1), REST
    )
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


def test_directional_mirror_symmetry():
    db = synthetic_st_database()
    env = EnvironmentSpec(hs=1.2, tp=8.0, wave_dir=0.8, wind_speed=6.0,
                          wind_dir=0.5, current_speed=0.4, current_dir=1.1, seed=3)
    mirror = EnvironmentSpec(hs=1.2, tp=8.0, wave_dir=-0.8, wind_speed=6.0,
                             wind_dir=-0.5, current_speed=0.4, current_dir=-1.1, seed=3)
    f1 = wind_current_force(env, Pose6(), REST)
    f2 = wind_current_force(mirror, Pose6(), REST)
    scale = np.abs(f1).max()
    assert f2[0] == pytest.approx(f1[0], rel=1e-9)
    assert f2[1] == pytest.approx(-f1[1], rel=1e-9)
    assert f2[5] == pytest.approx(-f1[5], rel=1e-9)

    w1 = wave_force(realize_spectrum(env, 60), db, Pose6(), 7.0)
    w2 = wave_force(realize_spectrum(mirror, 60), db, Pose6(), 7.0)
    wscale = np.abs(w1).max()
    for i, sign in enumerate([1, -1, 1, -1, 1, -1]):
        assert w2[i] == pytest.approx(sign * w1[i], abs=1e-9 * wscale)


def test_coefficient_table_io(tmp_path):
    table = default_coefficient_table()
    lines = ["# dir cx cy cn"]
    for i, d in enumerate(table.directions_deg):
        lines.append(
            f"{float(d)!r} {float(table.cx[i])!r} "
            f"{float(table.cy[i])!r} {float(table.cn[i])!r}"
        )
    path = tmp_path / "coef.txt"
    path.write_text("\n".join(lines))
    back = load_coefficient_table(path)
    assert np.array_equal(back.cx, table.cx)
    assert back.coefficients(np.radians(35.0)) == pytest.approx(
        table.coefficients(np.radians(35.0))
    )


def test_coefficient_interpolation_wraps():
    table = default_coefficient_table()
    assert table.coefficients(np.radians(355.0))[1] == pytest.approx(
        np.interp(355.0, [350.0, 360.0], [table.cy[-1], table.cy[0]]), rel=1e-12
    )


def test_bad_coefficient_rows_rejected():
    with pytest.raises(ValueError):
        parse_coefficient_table("0 1 2\n")
