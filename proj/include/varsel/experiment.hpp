#pragma once
// Continual-learning experiment runner for the FSM environment: a planning
// agent (or random baseline) driven through a phase schedule, with episode
// metrics and per-step hooks for the test harness.

#include <cstdint>
#include <functional>
#include <vector>

#include "varsel/fsm_env.hpp"
#include "varsel/learner.hpp"
#include "varsel/planner.hpp"
#include "varsel/sv_core.hpp"

namespace varsel {

struct PhaseSpec {
    Subtype subtype;
    int duration_steps;
    bool learning;
};

struct FsmRunConfig {
    std::vector<PhaseSpec> phases;
    bool random_variant = false;
    double epsilon = 0.1;
    int episode_cap = 2000;
    PlannerConfig planner;
    // The action network is regenerated every step; set to reuse one network
    // per episode instead.
    bool reuse_action_network = false;
    LearnerConfig learner;
};

struct EpisodeRecord {
    int phase;
    int64_t end_step;  // global step at which the episode closed
    int duration;
    bool reached_goal;
};

struct FsmStepHook {
    // Called after every model step (learning or frozen).
    std::function<void(const Model&, const Learner&, const StepRecord&, int64_t step)> on_step;
};

struct FsmTrialResult {
    std::vector<EpisodeRecord> episodes;
    std::vector<int> csv_count_per_step;  // alive CSV count after each step
    Model model;

    double phase_mean_duration(int phase) const;
    std::vector<int> phase_durations(int phase) const;
};

FsmTrialResult run_fsm_trial(const FsmRunConfig& cfg, uint64_t seed, bool random_agent,
                             const FsmStepHook& hook = {});

// Table-1-style schedule: RS/SGS/NEG with learning, then RS/SGS without.
FsmRunConfig table1_schedule(bool random_variant, int phase_steps = 1000);
// Readaptation schedule: the same subtype sequence with learning throughout.
FsmRunConfig readaptation_schedule(bool random_variant, int phase_steps = 500);

}  // namespace varsel
