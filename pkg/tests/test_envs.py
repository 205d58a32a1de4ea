import numpy as np
import pytest

from impsim import envs as E
from impsim.envs import Action


def struct_cfg(**kw):
    base = dict(family="struct_uc", n_comp=3, k_comp=2)
    base.update(kw)
    return E.EnvConfig(**base)


@pytest.fixture
def struct_env(struct_models_fast):
    return E.ImpEnv(struct_cfg(), struct_models_fast)


@pytest.fixture
def owf_env(owf_models_fast):
    return E.ImpEnv(E.EnvConfig(family="owf", n_comp=1), owf_models_fast)


@pytest.fixture
def corr_env(struct_models_fast):
    return E.ImpEnv(E.EnvConfig(family="struct_c", n_comp=3, k_comp=2),
                    struct_models_fast)


class TestConfig:
    def test_defaults(self):
        cfg = struct_cfg()
        assert cfg.horizon == 30
        assert cfg.discount == 0.95
        assert not cfg.campaign_cost
        assert cfg.rewards.c_f == -10_000.0
        owf = E.EnvConfig(family="owf", n_comp=2)
        assert owf.horizon == 20
        assert owf.rewards.c_f == -1000.0

    def test_rejects_unknown_family(self):
        with pytest.raises(ValueError):
            E.EnvConfig(family="bridge", n_comp=2, k_comp=1)

    def test_struct_requires_k(self):
        with pytest.raises(ValueError):
            E.EnvConfig(family="struct_uc", n_comp=3)
        with pytest.raises(ValueError):
            E.EnvConfig(family="struct_uc", n_comp=3, k_comp=4)
        with pytest.raises(ValueError):
            E.EnvConfig(family="struct_uc", n_comp=3, k_comp=0)

    def test_owf_rejects_k(self):
        with pytest.raises(ValueError):
            E.EnvConfig(family="owf", n_comp=2, k_comp=1)

    def test_discount_range(self):
        with pytest.raises(ValueError):
            struct_cfg(discount=1.5)
        assert struct_cfg(discount=0.0).discount == 0.0

    def test_risk_mode_values(self):
        assert struct_cfg(risk_mode="level").risk_mode == "level"
        with pytest.raises(ValueError):
            struct_cfg(risk_mode="delta")

    def test_from_dict_rejects_unknown_keys(self):
        with pytest.raises(ValueError):
            E.EnvConfig.from_dict({"family": "struct_uc", "n_comp": 3,
                                   "k_comp": 2, "bogus": 1})
        with pytest.raises(ValueError):
            E.EnvConfig.from_dict({"n_comp": 3})

    def test_dict_roundtrip(self):
        cfg = struct_cfg(campaign_cost=True, discount=0.9)
        again = E.EnvConfig.from_dict(cfg.to_dict())
        assert again == cfg
        owf = E.EnvConfig(family="owf", n_comp=3)
        assert E.EnvConfig.from_dict(owf.to_dict()) == owf

    def test_campaign_cost_switches_reward_table(self):
        plain = struct_cfg()
        camp = struct_cfg(campaign_cost=True)
        assert plain.rewards.classes["component"].inspect == -1.0
        assert camp.rewards.classes["component"].inspect == -0.2
        assert camp.rewards.campaign == -5.0


class TestShapes:
    def test_struct_dims(self, struct_env):
        res = struct_env.reset(seed=0)
        assert len(res.observations) == 3
        assert all(o.shape == (31,) for o in res.observations)
        assert res.state.shape == (94,)

    def test_corr_dims(self, corr_env):
        res = corr_env.reset(seed=0)
        assert len(res.observations) == 3
        assert all(o.shape == (111,) for o in res.observations)
        assert res.state.shape == (174,)

    def test_corr_obs_without_alpha(self, struct_models_fast):
        env = E.ImpEnv(E.EnvConfig(family="struct_c", n_comp=3, k_comp=2,
                                   obs_alpha=False), struct_models_fast)
        res = env.reset(seed=0)
        assert all(o.shape == (31,) for o in res.observations)

    def test_owf_dims(self, owf_env):
        res = owf_env.reset(seed=0)
        assert owf_env.n_agents == 2
        assert owf_env.n_components == 3
        assert all(o.shape == (61,) for o in res.observations)
        assert res.state.shape == (181,)

    def test_owf_two_turbines(self, owf_models_fast):
        env = E.ImpEnv(E.EnvConfig(family="owf", n_comp=2), owf_models_fast)
        assert env.n_agents == 4
        assert env.n_components == 6
        # agents control upper and middle members; mudline is untouched
        assert env.agent_components == [0, 1, 3, 4]


class TestReset:
    def test_initial_time_and_beliefs(self, struct_env, struct_models_fast):
        res = struct_env.reset(seed=0)
        assert struct_env.t == 0
        assert res.state[-1] == 0.0
        assert res.reward == 0.0
        assert not res.done
        ib = struct_models_fast["struct"].initial_belief
        for o in res.observations:
            assert np.array_equal(o[:30], ib)
        assert res.info["risk"] == 0.0
        assert res.info["detections"] == [False, False, False]

    def test_corr_alpha_uniform(self, corr_env):
        res = corr_env.reset(seed=0)
        alpha = res.observations[0][30:110]
        assert np.allclose(alpha, 1.0 / 80, atol=1e-15)
        assert abs(res.observations[0][:30].sum() - 1.0) <= 1e-9

    def test_step_before_reset_raises(self, struct_models_fast):
        env = E.ImpEnv(struct_cfg(), struct_models_fast)
        with pytest.raises(RuntimeError):
            env.step([0, 0, 0])


class TestStep:
    def test_episode_length_and_done(self, struct_env):
        struct_env.reset(seed=1)
        for t in range(30):
            res = struct_env.step([0, 0, 0])
            assert res.done == (t == 29)
        with pytest.raises(RuntimeError):
            struct_env.step([0, 0, 0])

    def test_action_count_checked(self, struct_env):
        struct_env.reset(seed=1)
        with pytest.raises(ValueError):
            struct_env.step([0, 0])
        with pytest.raises(ValueError):
            struct_env.step([0, 0, 3])

    def test_time_fraction_advances(self, struct_env):
        struct_env.reset(seed=1)
        res = struct_env.step([0, 0, 0])
        assert res.state[-1] == pytest.approx(1 / 30)
        assert res.observations[0][-1] == pytest.approx(1 / 30)

    def test_reward_equals_component_sum(self, struct_env):
        rng = np.random.default_rng(5)
        struct_env.reset(seed=2)
        for _ in range(30):
            acts = rng.integers(0, 3, size=3)
            res = struct_env.step(acts)
            parts = (res.info["risk"] + res.info["inspection"]
                     + res.info["repair"] + res.info["campaign"])
            assert res.reward == pytest.approx(parts, abs=1e-9)

    def test_single_inspect_and_repair_costs(self, struct_env):
        struct_env.reset(seed=3)
        res = struct_env.step([Action.INSPECT, Action.REPAIR,
                               Action.DO_NOTHING])
        assert res.info["inspection"] == -1.0
        assert res.info["repair"] == -20.0
        assert res.info["campaign"] == 0.0
        assert res.reward == pytest.approx(-21.0 + res.info["risk"], abs=1e-12)

    def test_repair_resets_to_fresh_component(self, struct_env,
                                              struct_models_fast):
        model = struct_models_fast["struct"]
        struct_env.reset(seed=4)
        for _ in range(10):
            struct_env.step([0, 0, 0])
        struct_env.step([Action.REPAIR, 0, 0])
        fresh = model.initial_belief @ model.tables[0]
        fresh = fresh / fresh.sum()
        assert np.array_equal(struct_env.beliefs[0], fresh)
        assert struct_env.tau[0] == 1
        assert struct_env.tau[1] == 11

    def test_do_nothing_is_deterministic_across_seeds(self, struct_env):
        def rollout(seed):
            struct_env.reset(seed=seed)
            return [struct_env.step([0, 0, 0]).reward for _ in range(30)]

        assert rollout(11) == rollout(999)

    def test_same_seed_same_trajectory(self, struct_env):
        def rollout(seed):
            struct_env.reset(seed=seed)
            rewards = []
            for t in range(30):
                acts = [Action.INSPECT if t % 3 == 0 else 0 for _ in range(3)]
                res = struct_env.step(acts)
                rewards.append(res.reward)
            return rewards, struct_env.get_state()

        r1, s1 = rollout(42)
        r2, s2 = rollout(42)
        assert r1 == r2
        assert np.array_equal(s1, s2)

    def test_detection_updates_belief(self, struct_env):
        struct_env.reset(seed=7)
        for _ in range(5):
            struct_env.step([0, 0, 0])
        before = struct_env.beliefs[0].copy()
        res = struct_env.step([Action.INSPECT, 0, 0])
        after = struct_env.beliefs[0]
        assert not np.array_equal(before, after)
        assert res.info["detections"][0] in (True, False)
        assert struct_env.last_detections() == res.info["detections"]

    def test_risk_is_nonpositive_increment(self, struct_env):
        struct_env.reset(seed=8)
        for _ in range(30):
            res = struct_env.step([0, 0, 0])
            assert res.info["risk"] <= 0.0

    def test_repair_step_charges_only_new_level(self, struct_models_fast):
        env = E.ImpEnv(struct_cfg(), struct_models_fast)
        env.reset(seed=9)
        for _ in range(20):
            env.step([0, 0, 0])
        res = env.step([Action.REPAIR, Action.REPAIR, Action.REPAIR])
        # risk falls after repairing everything, so the charge is the
        # (small) post-repair level rather than a negative increment
        p_after = res.info["p_sys"]
        assert res.info["risk"] == pytest.approx(-10_000.0 * p_after, abs=1e-12)
        assert res.info["risk"] > -1.0

    def test_level_mode_charges_absolute_probability(self, struct_models_fast):
        env = E.ImpEnv(struct_cfg(risk_mode="level"), struct_models_fast)
        env.reset(seed=10)
        for _ in range(5):
            res = env.step([0, 0, 0])
            assert res.info["risk"] == pytest.approx(
                -10_000.0 * res.info["p_sys"], abs=1e-12)

    def test_level_mode_charges_more_than_increment(self, struct_models_fast):
        def total(mode):
            env = E.ImpEnv(struct_cfg(risk_mode=mode), struct_models_fast)
            env.reset(seed=11)
            return sum(env.step([0, 0, 0]).info["risk"] for _ in range(30))

        assert total("level") < total("increment")


class TestCampaign:
    @pytest.fixture
    def camp_env(self, struct_models_fast):
        return E.ImpEnv(struct_cfg(campaign_cost=True), struct_models_fast)

    def test_no_actions_no_campaign(self, camp_env):
        camp_env.reset(seed=0)
        res = camp_env.step([0, 0, 0])
        assert res.info["campaign"] == 0.0

    def test_single_inspection_triggers_campaign(self, camp_env):
        camp_env.reset(seed=0)
        res = camp_env.step([Action.INSPECT, 0, 0])
        assert res.info["campaign"] == -5.0
        assert res.info["inspection"] == pytest.approx(-0.2)

    def test_repair_only_triggers_campaign(self, camp_env):
        camp_env.reset(seed=0)
        res = camp_env.step([0, Action.REPAIR, 0])
        assert res.info["campaign"] == -5.0
        assert res.info["repair"] == -20.0

    def test_campaign_charged_once_for_many_actions(self, camp_env):
        camp_env.reset(seed=0)
        res = camp_env.step([Action.INSPECT, Action.INSPECT, Action.REPAIR])
        assert res.info["campaign"] == -5.0
        assert res.info["inspection"] == pytest.approx(-0.4)

    def test_no_campaign_when_disabled(self, struct_env):
        struct_env.reset(seed=0)
        res = struct_env.step([Action.INSPECT, Action.INSPECT, Action.REPAIR])
        assert res.info["campaign"] == 0.0


class TestWindFarm:
    def test_agent_component_map(self, owf_env):
        assert owf_env.agent_components == [0, 1]

    def test_inspection_costs_by_class(self, owf_env):
        owf_env.reset(seed=0)
        res = owf_env.step([Action.INSPECT, Action.DO_NOTHING])
        assert res.info["inspection"] == -1.0
        res = owf_env.step([Action.DO_NOTHING, Action.INSPECT])
        assert res.info["inspection"] == -4.0

    def test_repair_costs_by_class(self, owf_env):
        owf_env.reset(seed=0)
        res = owf_env.step([Action.REPAIR, Action.DO_NOTHING])
        assert res.info["repair"] == -10.0
        res = owf_env.step([Action.DO_NOTHING, Action.REPAIR])
        assert res.info["repair"] == -30.0

    def test_per_turbine_probabilities(self, owf_models_fast):
        env = E.ImpEnv(E.EnvConfig(family="owf", n_comp=2), owf_models_fast)
        res = env.reset(seed=0)
        assert isinstance(res.info["p_sys"], list)
        assert len(res.info["p_sys"]) == 2

    def test_mudline_deteriorates_without_actions(self, owf_env):
        owf_env.reset(seed=0)
        start = owf_env.beliefs[2][-1]
        for _ in range(20):
            owf_env.step([0, 0])
        assert owf_env.beliefs[2][-1] > start

    def test_episode_horizon(self, owf_env):
        owf_env.reset(seed=0)
        for t in range(20):
            res = owf_env.step([0, 0])
        assert res.done


class TestCorrelatedEnv:
    def test_repair_restores_initial_marginal(self, corr_env,
                                              struct_models_fast):
        model = struct_models_fast["struct"]
        corr_env.reset(seed=0)
        for _ in range(10):
            corr_env.step([0, 0, 0])
        alpha_before = corr_env.alpha.copy()
        corr_env.step([Action.REPAIR, 0, 0])
        fresh = model.initial_belief @ model.tables[0]
        fresh = fresh / fresh.sum()
        marg = corr_env._marginals()[0]
        assert np.all(np.abs(marg - fresh) <= 1e-12)
        # repair does not touch the shared deterioration-rate posterior
        assert np.array_equal(corr_env.alpha, alpha_before)

    def test_inspection_moves_alpha(self, corr_env):
        corr_env.reset(seed=1)
        for _ in range(5):
            corr_env.step([0, 0, 0])
        before = corr_env.alpha.copy()
        corr_env.step([Action.INSPECT, 0, 0])
        assert not np.array_equal(corr_env.alpha, before)
        assert corr_env.alpha.sum() == pytest.approx(1.0, abs=1e-12)

    def test_do_nothing_matches_uncorrelated_risk(self, struct_models_fast):
        # with no inspections the marginals evolve exactly like the
        # independent chain, so do-nothing rewards agree
        uc = E.ImpEnv(struct_cfg(), struct_models_fast)
        cc = E.ImpEnv(E.EnvConfig(family="struct_c", n_comp=3, k_comp=2),
                      struct_models_fast)
        uc.reset(seed=0)
        cc.reset(seed=0)
        tu = tc = 0.0
        for _ in range(30):
            ru = uc.step([0, 0, 0]).reward
            rc = cc.step([0, 0, 0]).reward
            # the latent-factor discretization leaves a small tail error
            assert rc == pytest.approx(ru, abs=1e-4)
            tu += ru
            tc += rc
        assert tc == pytest.approx(tu, rel=1e-5)

    def test_exact_risk_flag_changes_value(self, struct_models_fast):
        base = E.EnvConfig(family="struct_c", n_comp=3, k_comp=2)
        exact = E.EnvConfig(family="struct_c", n_comp=3, k_comp=2,
                            correlated_risk_exact=True)
        e1 = E.ImpEnv(base, struct_models_fast)
        e2 = E.ImpEnv(exact, struct_models_fast)
        e1.reset(seed=0)
        e2.reset(seed=0)
        r1 = sum(e1.step([0, 0, 0]).info["risk"] for _ in range(30))
        r2 = sum(e2.step([0, 0, 0]).info["risk"] for _ in range(30))
        # the mixture couples failures, shifting the system probability
        assert r1 != pytest.approx(r2, abs=1e-6)


class TestValidation:
    def test_horizon_beyond_model_rejected(self, struct_models_fast):
        with pytest.raises(ValueError):
            E.ImpEnv(struct_cfg(horizon=31), struct_models_fast)

    def test_bare_model_accepted(self, struct_models_fast):
        env = E.ImpEnv(struct_cfg(), struct_models_fast["struct"])
        res = env.reset(seed=0)
        assert len(res.observations) == 3

    def test_owf_requires_all_members(self, owf_models_fast):
        partial = {k: v for k, v in owf_models_fast.items()
                   if k != "owf_mudline"}
        with pytest.raises((KeyError, ValueError)):
            E.ImpEnv(E.EnvConfig(family="owf", n_comp=1), partial)

    def test_topology_helper(self):
        topo = E.make_topology_config(struct_cfg())
        assert topo.kind == "k-out-of-n"
        assert topo.n == 3 and topo.k == 2
        owf = E.make_topology_config(E.EnvConfig(family="owf", n_comp=2))
        assert owf.kind == "wind-farm"
        assert owf.turbines == ((0, 1, 2), (3, 4, 5))
