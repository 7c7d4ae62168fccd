import numpy as np
import pytest

from eulerlab.errors import DomainError
from eulerlab.grid import PeriodicGrid
from eulerlab.riemann import exact_riemann, periodic_double_riemann, solve_star
from eulerlab.solver import (
    SolverConfig,
    Trajectory,
    make_initial_state,
    project_snapshot,
    run,
    scenario_riemann_states,
    snapshot_primitive,
)
from eulerlab.thermo import GasParams, entropy


def _config(n=128, t_end=0.1, init=None, system="complete", stride=None, gamma=1.4,
            dims=1, cfl=0.4):
    return SolverConfig(
        grid=PeriodicGrid(dims, n),
        params=GasParams(gamma),
        t_end=t_end,
        system=system,
        cfl=cfl,
        init=init or {"name": "constant"},
        snapshot_stride=stride,
    )


def _totals(snap, vol):
    mass = float(np.sum(snap.rho)) * vol
    energy = float(np.sum(snap.energy)) * vol if snap.energy is not None else None
    return mass, energy


class TestBasics:
    def test_constant_state_is_exact_fixed_point(self):
        traj = run(_config(n=64, t_end=0.25, init={"name": "constant", "rho": 1.3,
                                                   "u": 0.4, "theta": 0.9}))
        first, last = traj.snapshots[0], traj.snapshots[-1]
        assert np.array_equal(first.rho, last.rho)
        assert np.array_equal(first.mom, last.mom)
        assert np.array_equal(first.energy, last.energy)

    def test_conservation_on_shock_tube(self):
        traj = run(_config(n=256, t_end=0.15, init={"name": "sod"}))
        vol = traj.grid.cell_volume
        m0, e0 = _totals(traj.snapshots[0], vol)
        m1, e1 = _totals(traj.snapshots[-1], vol)
        assert abs(m1 - m0) / m0 < 1e-10
        assert abs(e1 - e0) / e0 < 1e-10

    def test_determinism_bit_identical(self):
        cfg = _config(n=128, t_end=0.05, init={"name": "sod"})
        a, b = run(cfg), run(cfg)
        assert np.array_equal(a.snapshots[-1].rho, b.snapshots[-1].rho)
        assert np.array_equal(a.snapshots[-1].energy, b.snapshots[-1].energy)

    def test_positivity_maintained_on_scenarios(self):
        for name in ("sod", "double_rarefaction", "smooth", "advection"):
            traj = run(_config(n=128, t_end=0.1, init={"name": name}))
            rho, _, theta = snapshot_primitive(traj.snapshots[-1], traj.params)
            assert np.min(rho) > 0.0 and np.min(theta) > 0.0

    def test_vacuum_and_pressure_guards(self):
        # the local-dissipation flux at half Courant keeps states positive, so
        # the mid-run guard is exercised directly on manufactured bad states
        from eulerlab.solver import _check_physical

        bad_rho = np.array([[1.0, -0.1], [0.0, 0.0], [1.0, 1.0]])
        with pytest.raises(DomainError, match="vacuum"):
            _check_physical(bad_rho, 1.4, "complete", t=0.1)
        bad_p = np.array([[1.0, 1.0], [2.0, 0.0], [1.0, 0.5]])
        with pytest.raises(DomainError, match="pressure"):
            _check_physical(bad_p, 1.4, "complete", t=0.1)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            _config(cfl=0.9)
        with pytest.raises(ValueError):
            run(_config(init={"name": "nope"}))

    def test_snapshot_stride_lands_exactly(self):
        traj = run(_config(n=64, t_end=0.2, init={"name": "smooth"}, stride=0.05))
        assert traj.times == pytest.approx([0.0, 0.05, 0.1, 0.15, 0.2], abs=1e-12)


class TestAccuracy:
    def test_sod_density_error_small_domain(self):
        cfg = _config(n=512, t_end=0.2, init={"name": "sod"})
        traj = run(cfg)
        left, right = scenario_riemann_states(cfg.init, cfg.params)
        sampler = periodic_double_riemann(left, right, cfg.params)
        x = cfg.grid.axis_centers()
        rho_ex, _, _ = sampler(x, 0.2)
        err = float(np.sum(np.abs(traj.snapshots[-1].rho - rho_ex))) * cfg.grid.cell_width
        assert err < 0.05

    def test_advection_contact_transport(self):
        # exact solution: density profile advects at the uniform speed
        cfg = _config(n=512, t_end=0.25, init={"name": "advection", "u": 0.5})
        traj = run(cfg)
        x = cfg.grid.axis_centers()
        exact = 1.0 + 0.2 * np.sin(np.pi * (x - 0.5 * 0.25))
        err = float(np.max(np.abs(traj.snapshots[-1].rho - exact)))
        assert err < 0.02

    @pytest.mark.slow
    def test_rarefaction_interior_max_norm_rate(self):
        # smooth fan interior (20% in from the corners); corner neighborhoods
        # of a first-order monotone scheme converge much slower
        errs = {}
        for n in (1024, 2048, 4096):
            cfg = _config(n=n, t_end=0.25,
                          init={"name": "single_rarefaction", "rho_right": 0.4})
            traj = run(cfg)
            left, right = scenario_riemann_states(cfg.init, cfg.params)
            sol = exact_riemann(left, right, cfg.params)
            g = cfg.params.gamma
            head = left.u - left.sound_speed(g)
            c_star = np.sqrt(g * sol.p_star / sol.star_density("left"))
            tail = sol.u_star - c_star
            x = cfg.grid.axis_centers()
            a, b = head * 0.25, tail * 0.25
            mask = (x > a + 0.2 * (b - a)) & (x < b - 0.2 * (b - a))
            rho_ex, _, _ = sol.sample(x[mask] / 0.25)
            errs[n] = float(np.max(np.abs(traj.snapshots[-1].rho[mask] - rho_ex)))
        slope = np.polyfit(
            np.log([1024, 2048, 4096]), np.log([errs[n] for n in (1024, 2048, 4096)]), 1
        )[0]
        assert -slope >= 0.7

    def test_entropy_stays_uniform_on_smooth_isentropic_data(self):
        errs = {}
        for n in (128, 256):
            cfg = _config(n=n, t_end=0.1,
                          init={"name": "isentropic_smooth", "u_amp": 0.1})
            traj = run(cfg)
            rho1, _, th1 = snapshot_primitive(traj.snapshots[-1], cfg.params)
            s1 = entropy(rho1, th1, cfg.params)
            errs[n] = float(np.max(s1) - np.min(s1))
        assert errs[256] < errs[128]
        assert errs[256] < 0.05


class TestIsentropic:
    def test_conservation_and_positivity(self):
        cfg = _config(n=128, t_end=0.1, system="isentropic",
                      init={"name": "smooth", "amp": 0.2})
        traj = run(cfg)
        vol = traj.grid.cell_volume
        m0, _ = _totals(traj.snapshots[0], vol)
        m1, _ = _totals(traj.snapshots[-1], vol)
        assert abs(m1 - m0) / m0 < 1e-10
        assert traj.snapshots[-1].energy is None
        assert np.min(traj.snapshots[-1].rho) > 0.0

    def test_matches_complete_system_on_isentropic_data(self):
        # theta = rho**(gamma-1) makes the complete system start isentropic;
        # both systems then evolve the same (rho, m) up to discretization
        init = {"name": "isentropic_smooth", "amp": 0.1, "u_amp": 0.05}
        out_i = run(_config(n=256, t_end=0.1, system="isentropic", init=init))
        out_c = run(_config(n=256, t_end=0.1, system="complete", init=init))
        diff = np.max(np.abs(out_i.snapshots[-1].rho - out_c.snapshots[-1].rho))
        assert diff < 5e-3


class TestTwoDimensional:
    def test_1d_data_extends_invariantly(self):
        cfg2 = _config(n=32, t_end=0.02, init={"name": "sod"}, dims=2)
        traj2 = run(cfg2)
        cfg1 = _config(n=32, t_end=0.02, init={"name": "sod"}, dims=1)
        traj1 = run(cfg1)
        rho2 = traj2.snapshots[-1].rho
        # invariance along y: every column identical
        assert np.max(np.abs(rho2 - rho2[:, :1])) == 0.0
        # and the x-profile matches the 1D run closely (time stepping differs
        # by the 2D Courant split)
        assert np.max(np.abs(rho2[:, 0] - traj1.snapshots[-1].rho)) < 0.05

    def test_transverse_perturbation_option(self):
        cfg = _config(n=32, t_end=0.01, dims=2,
                      init={"name": "sod", "transverse": 0.01})
        traj = run(cfg)
        rho = traj.snapshots[-1].rho
        assert np.max(np.abs(rho - rho[:, :1])) > 0.0


class TestPersistence:
    def test_save_load_roundtrip(self, tmp_path):
        traj = run(_config(n=64, t_end=0.05, init={"name": "sod"}, stride=0.025))
        traj.save(tmp_path / "traj")
        back = Trajectory.load(tmp_path / "traj")
        assert back.times == pytest.approx(traj.times, abs=1e-15)
        for a, b in zip(traj.snapshots, back.snapshots):
            assert np.array_equal(a.rho, b.rho)
            assert np.array_equal(a.mom, b.mom)
            assert np.array_equal(a.energy, b.energy)
        assert back.meta["config_hash"] == traj.meta["config_hash"]

    def test_projection_preserves_means(self):
        traj = run(_config(n=128, t_end=0.05, init={"name": "sod"}))
        coarse = PeriodicGrid(1, 64)
        snap = project_snapshot(traj.snapshots[-1], 2, coarse)
        assert np.mean(snap.rho) == pytest.approx(np.mean(traj.snapshots[-1].rho),
                                                  rel=1e-14)

    def test_make_initial_state_rejects_nonpositive(self):
        grid = PeriodicGrid(1, 64)
        with pytest.raises(DomainError):
            make_initial_state(grid, GasParams(1.4),
                               {"name": "advection", "amp": 1.5})
