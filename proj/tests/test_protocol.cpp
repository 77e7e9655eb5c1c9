#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "mnac/protocol.hpp"
#include "mnac/theory.hpp"

using namespace mnac;
using namespace mnac::protocol;

namespace {

StagePlan noiseless_plan(double q, long n_joint, int n_val) {
    StagePlan p;
    p.n_joint = n_joint;
    p.n_val = n_val;
    p.q = q;
    p.gamma_joint = 1e-3;  // quasi-noiseless: noise_var tiny in the cfg below
    p.gamma_val = 1e-3;
    return p;
}

const ChannelConfig kQuiet{1.0, 1.0, 1e-9};
const ChannelConfig kSnr10{10.0, 1.0, 1.0};

}  // namespace

TEST_CASE("majority_validate rule") {
    CHECK(majority_validate({1, 1, 1, 1}));
    CHECK_FALSE(majority_validate({0, 0, 0, 0}));
    CHECK_FALSE(majority_validate({1, 1, 0, 0}));  // exact tie: inactive
    CHECK(majority_validate({1, 1, 1, 0}));
    CHECK(majority_validate({}) == false);
    CHECK_THROWS_AS(majority_validate({1, 0, 1}), std::invalid_argument);
}

TEST_CASE("check_partial_recovery thresholds") {
    std::vector<std::size_t> truth{1, 2, 3, 4, 5};
    std::vector<std::size_t> est{1, 2, 3, 4, 5};
    CHECK(check_partial_recovery(truth, est, 100.0, 5));
    est = {1, 2, 3, 4, 9};
    CHECK_FALSE(check_partial_recovery(truth, est, 100.0, 5));

    // k_j = 20, eta = 75: 5 misdetections pass, 6 fail
    std::vector<std::size_t> a20(20), e20(20);
    for (std::size_t i = 0; i < 20; ++i) a20[i] = i;
    for (std::size_t i = 0; i < 20; ++i) e20[i] = i < 15 ? i : 100 + i;
    CHECK(check_partial_recovery(a20, e20, 75.0, 20));
    e20[14] = 200;
    CHECK_FALSE(check_partial_recovery(a20, e20, 75.0, 20));

    CHECK_THROWS_AS(check_partial_recovery(a20, {1, 2}, 75.0, 20), std::invalid_argument);
}

TEST_CASE("plan validation") {
    StagePlan p;
    p.eta = 80.0;
    CHECK_THROWS_AS(p.validate(true), std::invalid_argument);  // final stage must be 100
    p.eta = 100.0;
    p.n_val = 3;
    CHECK_THROWS_AS(p.validate(true), std::invalid_argument);  // odd n_val
    p.n_val = 4;
    p.q = 1.5;
    CHECK_THROWS_AS(p.validate(true), std::invalid_argument);
    p.q = 0.3;
    CHECK_NOTHROW(p.validate(true));
}

TEST_CASE("single-stage run reduces to joint decoding, no validation charge") {
    ProtocolOptions opts;
    const auto trace = run_protocol({noiseless_plan(0.3, 80, 0)}, 20, 3, kQuiet, 5, opts);
    REQUIRE(trace.stages.size() == 1);
    CHECK(trace.stages[0].cost.validation_uses == 0.0);
    CHECK(trace.stages[0].cost.joint_uses == 80.0);
    CHECK(trace.stages[0].cost.feedback_uses == 0.0);  // nothing follows stage m
    CHECK(trace.final_estimate.size() == 3);
}

TEST_CASE("quasi-noiseless exact recovery and clean validation") {
    ProtocolOptions opts;
    auto s1 = noiseless_plan(0.2, 120, 0);
    s1.eta = 100.0;
    auto s2 = noiseless_plan(0.2, 120, 8);
    int wins = 0;
    std::size_t fa = 0, fr = 0;
    for (int seed = 0; seed < 100; ++seed) {
        const auto trace = run_protocol({s1, s2}, 50, 3, kQuiet, seed, opts);
        wins += trace.exact_success;
        fa += trace.false_accepts();
        fr += trace.false_rejects();
    }
    CHECK(wins >= 98);
    CHECK(fa == 0);
    CHECK(fr == 0);
}

TEST_CASE("ledger conservation and monotone costs") {
    ProtocolOptions opts;
    opts.c_fb = theory::gaussian_fb_capacity(kSnr10.snr());
    StagePlan s1;
    s1.eta = 75.0;
    s1.n_joint = 150;
    s1.q = 0.05;
    s1.gamma_joint = 3.5;
    s1.gamma_val = 1.86;
    StagePlan s2 = s1;
    s2.eta = 100.0;
    s2.n_joint = 60;
    s2.n_val = 10;
    const auto trace = run_protocol({s1, s2}, 100, 8, kSnr10, 77, opts);
    REQUIRE(trace.stages.size() == 2);

    // stage 1: no previous estimate, so no validation; stage 2 validates 8 blocks
    CHECK(trace.stages[0].cost.validation_uses == 0.0);
    CHECK(trace.stages[1].cost.validation_uses == 8.0 * 10.0);
    CHECK(trace.stages[1].cost.feedback_uses == 0.0);
    CHECK(trace.stages[0].cost.feedback_uses > 0.0);

    const auto total = trace.total();
    double j = 0.0, v = 0.0, f = 0.0;
    for (const auto& s : trace.stages) {
        j += s.cost.joint_uses;
        v += s.cost.validation_uses;
        f += s.cost.feedback_uses;
    }
    CHECK(total.joint_uses == j);
    CHECK(total.validation_uses == v);
    CHECK(total.feedback_uses == f);
    CHECK(total.total() == j + v + f);

    // misdetections equal false positives when sizes match (checked via sizes)
    CHECK(trace.stages[0].estimate_size == trace.stages[0].k_before);
}

TEST_CASE("determinism: identical seed, identical trace") {
    ProtocolOptions opts;
    StagePlan s1;
    s1.eta = 75.0;
    s1.n_joint = 100;
    s1.q = 0.05;
    s1.gamma_joint = 3.5;
    s1.gamma_val = 1.86;
    StagePlan s2 = s1;
    s2.eta = 100.0;
    s2.n_val = 6;
    const auto a = run_protocol({s1, s2}, 60, 5, kSnr10, 1234, opts);
    const auto b = run_protocol({s1, s2}, 60, 5, kSnr10, 1234, opts);
    CHECK(a.exact_success == b.exact_success);
    CHECK(a.final_estimate == b.final_estimate);
    REQUIRE(a.stages.size() == b.stages.size());
    for (std::size_t i = 0; i < a.stages.size(); ++i) {
        CHECK(a.stages[i].misdetections == b.stages[i].misdetections);
        CHECK(a.stages[i].accepted == b.stages[i].accepted);
    }
    const auto c = run_protocol({s1, s2}, 60, 5, kSnr10, 1235, opts);
    CHECK((a.final_estimate != c.final_estimate || a.exact_success != c.exact_success ||
           a.stages[0].misdetections != c.stages[0].misdetections ||
           true));  // different seed may coincide; only determinism is asserted above
}

TEST_CASE("k = 0 trivially succeeds with an empty estimate") {
    ProtocolOptions opts;
    const auto trace = run_protocol({noiseless_plan(0.3, 40, 0)}, 10, 0, kQuiet, 3, opts);
    CHECK(trace.exact_success);
    CHECK(trace.final_estimate.empty());
}

TEST_CASE("rejected devices stay out; validate-final validates the last estimate") {
    ProtocolOptions opts;
    opts.validate_final = true;
    auto s1 = noiseless_plan(0.2, 120, 0);
    const auto trace = run_protocol({s1}, 30, 4, kQuiet, 11, opts);
    REQUIRE(trace.stages.size() == 1);
    // with validate-final, the single stage charges the extra validation round
    CHECK(trace.stages[0].cost.validation_uses == 0.0);  // n_val = 0 in this plan
    auto s1v = s1;
    s1v.n_val = 6;
    const auto t2 = run_protocol({s1v}, 30, 4, kQuiet, 11, opts);
    CHECK(t2.stages[0].cost.validation_uses == 4.0 * 6.0);
    CHECK(t2.stages[0].accepted + t2.stages[0].rejected == 4);
    CHECK(t2.exact_success);
}

TEST_CASE("run_stage on a constructed state with exhausted actives") {
    // all actives already validated: the estimate can only hold false positives
    ActivityState st;
    st.ell = 12;
    st.k = 2;
    st.truth.assign(12, 0);
    st.truth[3] = st.truth[8] = 1;
    st.status.assign(12, DeviceStatus::Unclassified);
    st.status[3] = st.status[8] = DeviceStatus::Validated;
    st.validated_count = 2;

    StagePlan plan = noiseless_plan(0.3, 50, 0);
    plan.eta = 100.0;
    ProtocolOptions opts;
    Rng rng(4);
    const auto trace = run_stage(st, plan, kQuiet, rng, opts);
    CHECK(trace.k_before == 0);
    CHECK(trace.estimate_size == 0);  // operational k_j is zero, nothing to pick
    CHECK(trace.misdetections == 0);
    CHECK(trace.partial_success);
}

TEST_CASE("inconsistent state is rejected") {
    ActivityState st;
    st.ell = 4;
    st.k = 1;
    st.truth.assign(4, 0);  // no active device although k = 1
    st.status.assign(4, DeviceStatus::Unclassified);
    StagePlan plan = noiseless_plan(0.5, 10, 0);
    ProtocolOptions opts;
    Rng rng(1);
    CHECK_THROWS_AS(run_stage(st, plan, kQuiet, rng, opts), std::invalid_argument);
}
