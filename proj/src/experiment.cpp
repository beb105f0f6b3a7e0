#include "varsel/experiment.hpp"

#include <cmath>
#include <numeric>

namespace varsel {

double FsmTrialResult::phase_mean_duration(int phase) const {
    auto d = phase_durations(phase);
    if (d.empty()) return 0.0;
    return std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
}

std::vector<int> FsmTrialResult::phase_durations(int phase) const {
    std::vector<int> out;
    for (const auto& e : episodes)
        if (e.phase == phase) out.push_back(e.duration);
    return out;
}

FsmTrialResult run_fsm_trial(const FsmRunConfig& cfg, uint64_t seed, bool random_agent,
                             const FsmStepHook& hook) {
    if (cfg.phases.empty()) throw std::invalid_argument("schedule has no phases");

    Model m;
    std::vector<int32_t> obs_ids;
    for (const auto& name : FsmEnv::observation_names()) obs_ids.push_back(m.add_bsv(name));
    std::vector<int32_t> act_ids;
    for (int a = 0; a < FsmEnv::kNumActions; ++a)
        act_ids.push_back(m.add_bsv(FsmEnv::action_name(a), /*is_action=*/true));
    const int32_t goal_bsv = m.find_bsv("1G");

    Learner lrn(cfg.learner);
    FsmEnv env(cfg.phases[0].subtype, cfg.random_variant, seed * 0x9E3779B97F4A7C15ull + 1);
    std::mt19937_64 agent_rng(seed * 0xBF58476D1CE4E5B9ull + 2);

    FsmTrialResult result;
    int phase = 0;
    int64_t steps_in_phase = 0;
    int64_t global_step = 0;

    ActionNetwork cached_an;
    bool an_valid = false;

    while (phase < static_cast<int>(cfg.phases.size())) {
        const PhaseSpec& ph = cfg.phases[phase];

        auto obs = env.observe();
        std::vector<std::pair<int32_t, SvState>> obs_pairs;
        obs_pairs.reserve(obs_ids.size());
        for (size_t i = 0; i < obs_ids.size(); ++i)
            obs_pairs.push_back({obs_ids[i], obs[i] ? SvState::Active : SvState::Inactive});

        lrn.begin_step(m, obs_pairs);

        int action;
        if (random_agent) {
            std::uniform_int_distribution<int> d(0, FsmEnv::kNumActions - 1);
            action = d(agent_rng);
        } else {
            if (!cfg.reuse_action_network || !an_valid) {
                PlanningModel pm = build_gsvs(m);
                cached_an = generate_action_network(pm, m, {goal_bsv, TargetMode::Active},
                                                    cfg.planner);
                an_valid = true;
            }
            int32_t bsv = choose_action(cached_an, m, act_ids, agent_rng, cfg.epsilon);
            action = static_cast<int>(bsv - act_ids.front());
        }

        std::vector<std::pair<int32_t, SvState>> act_pairs;
        act_pairs.reserve(act_ids.size());
        for (size_t j = 0; j < act_ids.size(); ++j)
            act_pairs.push_back({act_ids[j], static_cast<int>(j) == action ? SvState::Active
                                                                           : SvState::Inactive});
        lrn.set_actions(m, act_pairs);

        StepRecord rec;
        if (ph.learning) {
            rec = lrn.finish_step(m);
        } else {
            lrn.finish_frozen(m);
        }
        result.csv_count_per_step.push_back(m.alive_csv_count());
        if (hook.on_step) hook.on_step(m, lrn, rec, global_step);

        // Episode bookkeeping: the goal state has now been observed (and
        // learned from), so the episode can close before the action applies.
        bool episode_closed = false;
        if (env.at_goal() && env.episode_steps() > 0) {
            result.episodes.push_back({phase, global_step, env.episode_steps(), true});
            env.reset_episode();
            episode_closed = true;
        } else if (env.episode_steps() >= cfg.episode_cap) {
            result.episodes.push_back({phase, global_step, env.episode_steps(), false});
            env.reset_episode();
            episode_closed = true;
        }
        if (episode_closed) {
            an_valid = false;
            if (steps_in_phase >= ph.duration_steps) {
                ++phase;
                steps_in_phase = 0;
                if (phase < static_cast<int>(cfg.phases.size()))
                    env.set_subtype(cfg.phases[phase].subtype);
                ++global_step;
                continue;  // fresh observation for the new episode/phase
            }
        }

        env.step(action);
        ++steps_in_phase;
        ++global_step;
    }

    result.model = std::move(m);
    return result;
}

FsmRunConfig table1_schedule(bool random_variant, int phase_steps) {
    FsmRunConfig cfg;
    cfg.random_variant = random_variant;
    cfg.phases = {{Subtype::RS, phase_steps, true},   {Subtype::SGS, phase_steps, true},
                  {Subtype::NEG, phase_steps, true},  {Subtype::RS, phase_steps, false},
                  {Subtype::SGS, phase_steps, false}};
    if (random_variant) {
        cfg.learner.nce_filtering = true;
        cfg.learner.nce_cutoff = 0.25;
    }
    return cfg;
}

FsmRunConfig readaptation_schedule(bool random_variant, int phase_steps) {
    FsmRunConfig cfg;
    cfg.random_variant = random_variant;
    cfg.phases = {{Subtype::RS, phase_steps, true},
                  {Subtype::SGS, phase_steps, true},
                  {Subtype::NEG, phase_steps, true},
                  {Subtype::RS, phase_steps, true},
                  {Subtype::SGS, phase_steps, true}};
    if (random_variant) {
        cfg.learner.nce_filtering = true;
        cfg.learner.nce_cutoff = 0.25;
    }
    return cfg;
}

}  // namespace varsel
