#include <random>

#include "doctest.h"

#include "varsel/learner.hpp"
#include "varsel/sv_core.hpp"

using namespace varsel;

namespace {

// Drives one observation step directly through the model (no learner).
void observe(Model& m, const std::vector<std::pair<int32_t, SvState>>& obs) {
    m.roll_states();
    m.assign_bsv_states(obs);
    m.deduce_dsv_states();
}

}  // namespace

TEST_CASE("BSVs create their two DSVs; action BSVs create none") {
    Model m;
    int32_t x = m.add_bsv("X");
    int32_t a = m.add_bsv("a0", /*is_action=*/true);
    CHECK(m.bsv(x).activation_dsv >= 0);
    CHECK(m.bsv(x).deactivation_dsv >= 0);
    CHECK(m.bsv(a).activation_dsv == -1);
    CHECK(m.bsv(a).deactivation_dsv == -1);
    CHECK(m.dsv(m.bsv(x).activation_dsv).name == "X_A");
    CHECK(m.dsv(m.bsv(x).deactivation_dsv).name == "X_D");
}

TEST_CASE("DSV deduction matches the six-row table exactly") {
    // Enumerate all (prev, curr) pairs over two steps; the first observation
    // only sets the baseline.
    struct Row {
        SvState prev, curr, adsv, ddsv;
    };
    const Row rows[] = {
        {SvState::Inactive, SvState::Active, SvState::Active, SvState::Unobserved},
        {SvState::Inactive, SvState::Inactive, SvState::Inactive, SvState::Unobserved},
        {SvState::Active, SvState::Active, SvState::Unobserved, SvState::Inactive},
        {SvState::Active, SvState::Inactive, SvState::Unobserved, SvState::Active},
    };
    for (const Row& r : rows) {
        Model m;
        int32_t x = m.add_bsv("X");
        int32_t flip = m.add_bsv("F");  // guarantees a BSV event each step
        observe(m, {{x, r.prev}, {flip, SvState::Inactive}});
        observe(m, {{x, r.curr}, {flip, SvState::Active}});
        CHECK(m.dsv(m.bsv(x).activation_dsv).state == r.adsv);
        CHECK(m.dsv(m.bsv(x).deactivation_dsv).state == r.ddsv);
    }
}

TEST_CASE("DSV states persist when no observation BSV changes") {
    Model m;
    int32_t x = m.add_bsv("X");
    int32_t y = m.add_bsv("Y");
    observe(m, {{x, SvState::Inactive}, {y, SvState::Inactive}});
    observe(m, {{x, SvState::Active}, {y, SvState::Inactive}});
    CHECK(m.dsv(m.bsv(x).activation_dsv).state == SvState::Active);
    // Quiescent step: the activation event stays visible.
    observe(m, {{x, SvState::Active}, {y, SvState::Inactive}});
    CHECK(m.dsv(m.bsv(x).activation_dsv).state == SvState::Active);
    // A new event anywhere reapplies the table.
    observe(m, {{x, SvState::Active}, {y, SvState::Active}});
    CHECK(m.dsv(m.bsv(x).activation_dsv).state == SvState::Unobserved);
}

TEST_CASE("first observation sets the baseline without events") {
    Model m;
    int32_t x = m.add_bsv("X");
    observe(m, {{x, SvState::Active}});
    CHECK(m.dsv(m.bsv(x).activation_dsv).state == SvState::Unobserved);
    CHECK(m.dsv(m.bsv(x).deactivation_dsv).state == SvState::Unobserved);
}

TEST_CASE("observation errors: unknown id and action BSV") {
    Model m;
    m.add_bsv("X");
    int32_t a = m.add_bsv("a0", true);
    CHECK_THROWS_AS(m.assign_bsv_states({{99, SvState::Active}}), std::out_of_range);
    CHECK_THROWS_AS(m.assign_bsv_states({{a, SvState::Active}}), std::invalid_argument);
    CHECK_THROWS_AS(m.assign_action_states({{0, SvState::Active}}), std::invalid_argument);
}

TEST_CASE("sources_satisfied evaluates previous-step states") {
    Model m;
    int32_t x0 = m.add_bsv("X0");
    int32_t x1 = m.add_bsv("X1");
    int32_t x2 = m.add_bsv("X2");
    observe(m, {{x0, SvState::Active}, {x1, SvState::Inactive}, {x2, SvState::Inactive}});
    observe(m, {{x0, SvState::Inactive}, {x1, SvState::Inactive}, {x2, SvState::Active}});
    // Previous-step states: X0 active, X1 inactive, X2 inactive.

    Csv c;
    c.pos_sources = {bsv_ref(x0)};
    CHECK(sources_satisfied(m, c));

    c.pos_sources = {bsv_ref(x0), bsv_ref(x1)};
    CHECK_FALSE(sources_satisfied(m, c));

    c.pos_sources = {bsv_ref(x0)};
    c.neg_sources = {bsv_ref(x2)};
    CHECK(sources_satisfied(m, c));  // X2 was inactive in the previous step

    observe(m, {{x0, SvState::Active}, {x1, SvState::Inactive}, {x2, SvState::Inactive}});
    CHECK_FALSE(sources_satisfied(m, c));  // now the previous step has X2 active

    c.pos_sources = {bsv_ref(99)};
    CHECK_THROWS_AS(sources_satisfied(m, c), std::out_of_range);
}

TEST_CASE("computation levels: empty, chain, and shared target") {
    Model m;
    int32_t x = m.add_bsv("X");
    m.add_computation_levels();
    CHECK(m.computation_levels().empty());  // DSV-only model: zero CSV levels

    int32_t adsv = m.bsv(x).activation_dsv;
    Csv c0;
    c0.pos_sources = {bsv_ref(x)};
    c0.targets = {dsv_ref(adsv)};
    int32_t i0 = m.add_csv(c0);

    Csv c1;
    c1.pos_sources = {bsv_ref(x)};
    c1.targets = {csv_ref(i0)};
    int32_t i1 = m.add_csv(c1);

    m.add_computation_levels();
    REQUIRE(m.computation_levels().size() == 2);
    CHECK(m.computation_levels()[0] == std::vector<int32_t>{i0});
    CHECK(m.computation_levels()[1] == std::vector<int32_t>{i1});

    Csv c2;
    c2.pos_sources = {bsv_ref(x)};
    c2.targets = {csv_ref(i0)};
    int32_t i2 = m.add_csv(c2);
    m.add_computation_levels();
    // Both conditioners sit strictly above their shared target.
    CHECK(m.csv(i0).level < m.csv(i1).level);
    CHECK(m.csv(i0).level < m.csv(i2).level);
}

TEST_CASE("computation levels agree with a brute-force longest-path layering") {
    // Random DAGs: every CSV targets either DSVs or lower-id CSVs, mirroring
    // how the learner only ever conditions already-existing units.
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        Model m;
        int32_t x = m.add_bsv("X");
        int32_t adsv = m.bsv(x).activation_dsv;
        std::uniform_int_distribution<int> n_csv(1, 12);
        int n = n_csv(rng);
        std::vector<int32_t> ids;
        for (int i = 0; i < n; ++i) {
            Csv c;
            c.pos_sources = {bsv_ref(x)};
            c.targets = {dsv_ref(adsv)};
            if (!ids.empty()) {
                std::uniform_int_distribution<size_t> pick(0, ids.size() - 1);
                std::uniform_int_distribution<int> coin(0, 1);
                if (coin(rng)) c.targets = {csv_ref(ids[pick(rng)])};
                if (coin(rng)) insert(c.targets, csv_ref(ids[pick(rng)]));
            }
            ids.push_back(m.add_csv(c));
        }
        m.add_computation_levels();

        // Oracle: longest path to a DSV-only unit via repeated relaxation.
        std::vector<int> level(n, 0);
        for (int pass = 0; pass < n + 1; ++pass)
            for (int i = 0; i < n; ++i)
                for (SvRef t : m.csv(ids[i]).targets)
                    if (t.kind == SvKind::Csv)
                        level[i] = std::max(level[i], level[t.idx] + 1);
        for (int i = 0; i < n; ++i) CHECK(m.csv(ids[i]).level == level[i]);
    }
}

TEST_CASE("conditioning cycles are a structural error") {
    Model m;
    int32_t x = m.add_bsv("X");
    int32_t adsv = m.bsv(x).activation_dsv;
    Csv c0;
    c0.pos_sources = {bsv_ref(x)};
    c0.targets = {dsv_ref(adsv)};
    int32_t i0 = m.add_csv(c0);
    Csv c1;
    c1.pos_sources = {bsv_ref(x)};
    c1.targets = {csv_ref(i0)};
    int32_t i1 = m.add_csv(c1);
    // Force a cycle by hand (the learner can never do this).
    insert(m.csv(i0).targets, csv_ref(i1));
    m.csv(i1).conditioners.push_back(i0);
    CHECK_THROWS_AS(m.add_computation_levels(), std::logic_error);
}

TEST_CASE("CSV targets may not contain BSVs") {
    Model m;
    int32_t x = m.add_bsv("X");
    Csv c;
    c.pos_sources = {bsv_ref(x)};
    c.targets = {bsv_ref(x)};
    CHECK_THROWS_AS(m.add_csv(c), std::invalid_argument);
}
