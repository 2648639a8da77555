#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "doctest.h"
#include "planlab/model/features.h"
#include "planlab/model/vocab.h"
#include "planlab/search/collect.h"
#include "planlab/taskgen/generate.h"
#include "planlab/train/losses.h"
#include "planlab/train/pipeline.h"

using namespace planlab;

namespace {

struct Fixture {
    model::Vocabulary vocab;
    train::TrainData data;
};

// One oracle-guided collection pass over a tiny generated corpus; every case
// that needs realistic steps and pairs shares this snapshot.
auto collected_fixture() -> const Fixture& {
    static const Fixture fx = [] {
        Fixture out;
        const auto catalog = taskgen::default_catalog();
        out.vocab = model::build_vocabulary(catalog);
        const auto policy = model::init_params(out.vocab);
        const auto tasks = taskgen::generate_tasks(catalog, taskgen::default_layouts(), 1, 101);
        for (const auto& task : tasks) {
            search::SearchConfig config;
            config.seed = 5;
            auto res = search::collect(task, policy, config);
            for (auto& traj : res.trajectories) {
                out.data.sft_steps.insert(out.data.sft_steps.end(), traj.begin(), traj.end());
            }
            out.data.action_pairs.insert(out.data.action_pairs.end(), res.action_pairs.begin(),
                                         res.action_pairs.end());
            out.data.state_pairs.insert(out.data.state_pairs.end(), res.state_pairs.begin(),
                                        res.state_pairs.end());
        }
        return out;
    }();
    return fx;
}

void fill_random(std::vector<double>& w, Rng& rng, double scale) {
    for (auto& v : w) { v = (rng.uniform_double() * 2.0 - 1.0) * scale; }
}

auto random_params(const model::Vocabulary& vocab, std::uint64_t seed, int dim = 512,
                   double scale = 0.3) -> model::ModelParams {
    auto p = model::init_params(vocab, dim);
    Rng rng(seed);
    fill_random(p.action_w, rng, scale);
    fill_random(p.state_w, rng, scale);
    return p;
}

auto bits_equal(const std::vector<double>& a, const std::vector<double>& b) -> bool {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

auto rel_err(double got, double want) -> double {
    return std::abs(got - want) / std::max({std::abs(got), std::abs(want), 1e-6});
}

// Central difference of `loss` along one entry of `w`, which must alias into
// the params the callable reads.
template <typename LossFn>
auto central_diff(std::vector<double>& w, std::size_t i, const LossFn& loss) -> double {
    const double orig = w[i];
    const double h = 1e-5;
    w[i] = orig + h;
    const double up = loss();
    w[i] = orig - h;
    const double down = loss();
    w[i] = orig;
    return (up - down) / (2.0 * h);
}

template <typename LossFn>
void check_gradient(std::vector<double>& w, const std::vector<double>& grad, const LossFn& loss,
                    int min_checked) {
    std::vector<std::size_t> nonzero;
    std::vector<std::size_t> zero;
    for (std::size_t i = 0; i < grad.size(); ++i) {
        (grad[i] != 0.0 ? nonzero : zero).push_back(i);
    }
    REQUIRE(static_cast<int>(nonzero.size()) >= min_checked);
    const std::size_t stride = std::max<std::size_t>(1, nonzero.size() / 300);
    int checked = 0;
    for (std::size_t k = 0; k < nonzero.size(); k += stride) {
        const auto i = nonzero[k];
        const double fd = central_diff(w, i, loss);
        CHECK(rel_err(grad[i], fd) < 1e-5);
        ++checked;
    }
    CHECK(checked >= std::min<int>(min_checked, 300));
    for (std::size_t k = 0; k < std::min<std::size_t>(zero.size(), 10); ++k) {
        const auto i = zero[k * std::max<std::size_t>(1, zero.size() / 10)];
        CHECK(std::abs(central_diff(w, i, loss)) < 1e-7);
    }
}

auto tag_column(const model::ModelParams& params, const std::string& tag) -> int {
    const auto it = std::find(params.vocab.tags.begin(), params.vocab.tags.end(), tag);
    REQUIRE(it != params.vocab.tags.end());
    return static_cast<int>(it - params.vocab.tags.begin());
}

}  // namespace

TEST_SUITE("train") {

TEST_CASE("a policy equal to its reference scores every term at ln 2") {
    const auto& fx = collected_fixture();
    const double ln2 = std::log(2.0);

    SUBCASE("zero weights") {
        const auto zero = model::init_params(fx.vocab, 512);
        const auto action = train::dpo_action_loss(zero, zero, fx.data.action_pairs, 0.1);
        CHECK(std::abs(action.loss - ln2) < 1e-9);
        for (const double m : action.margins) { CHECK(std::abs(m) < 1e-12); }

        const auto state = train::dpo_state_loss(zero, zero, fx.data.state_pairs, 0.1,
                                                 model::WorldModelMode::kActionConditioned);
        CHECK(std::abs(state.loss - ln2) < 1e-9);
        for (const double m : state.margins) { CHECK(std::abs(m) < 1e-12); }
    }

    SUBCASE("arbitrary shared weights") {
        const auto ref = random_params(fx.vocab, 17);
        const auto action = train::dpo_action_loss(ref, ref, fx.data.action_pairs, 0.37);
        CHECK(std::abs(action.loss - ln2) < 1e-9);
        const auto state = train::dpo_state_loss(ref, ref, fx.data.state_pairs, 0.37,
                                                 model::WorldModelMode::kActionConditioned);
        CHECK(std::abs(state.loss - ln2) < 1e-9);
    }
}

TEST_CASE("the gradient at the reference is the half-beta log-prob gap") {
    const auto& fx = collected_fixture();
    const double beta = 0.1;
    const auto ref = random_params(fx.vocab, 23);

    auto pair = fx.data.action_pairs.front();
    REQUIRE_FALSE(pair.rejected.empty());
    pair.rejected.resize(1);

    const auto res = train::dpo_action_loss(ref, ref, {pair}, beta);
    std::vector<double> manual(ref.action_w.size(), 0.0);
    model::grad_logprob_action(ref, pair.context, pair.rejected[0], beta / 2.0, manual);
    model::grad_logprob_action(ref, pair.context, pair.chosen, -beta / 2.0, manual);
    for (std::size_t i = 0; i < manual.size(); ++i) {
        CHECK(std::abs(res.grad[i] - manual[i]) < 1e-12);
    }

    auto spair = fx.data.state_pairs.front();
    REQUIRE_FALSE(spair.rejected_next.empty());
    spair.rejected_next.resize(1);

    const auto sres = train::dpo_state_loss(ref, ref, {spair}, beta,
                                            model::WorldModelMode::kActionConditioned);
    const auto chosen = model::assemble_state_target(spair.anchor, spair.chosen_next);
    const auto rejected = model::assemble_state_target(spair.anchor, spair.rejected_next[0]);
    std::vector<double> smanual(ref.state_w.size(), 0.0);
    model::grad_logprob_state(ref, spair.conditioning, rejected, beta / 2.0, smanual);
    model::grad_logprob_state(ref, spair.conditioning, chosen, -beta / 2.0, smanual);
    for (std::size_t i = 0; i < smanual.size(); ++i) {
        CHECK(std::abs(sres.grad[i] - smanual[i]) < 1e-12);
    }
}

TEST_CASE("a two-point log-prob gap yields the textbook loss value") {
    const auto& fx = collected_fixture();
    const auto& base_pair = fx.data.action_pairs.front();

    search::ActionPrefPair pair;
    pair.context = base_pair.context;
    pair.chosen = base_pair.chosen;
    auto rejected = base_pair.chosen;
    for (const auto& tag : fx.vocab.tags) {
        if (tag != pair.chosen.tag) {
            rejected.tag = tag;
            break;
        }
    }
    pair.rejected = {rejected};

    const auto ref = model::init_params(fx.vocab, 512);
    const auto feats = model::action_context_features(fx.vocab, pair.context, ref.feature_dim);
    REQUIRE_FALSE(feats.empty());
    const int f = feats.front();
    const auto multiplicity = std::count(feats.begin(), feats.end(), f);
    const int cols = ref.action_cols();
    const int won = tag_column(ref, pair.chosen.tag);
    const int lost = tag_column(ref, rejected.tag);

    // Only the tag differs, so verb and object conditionals cancel inside each
    // policy-versus-reference gap and the margin is exactly the logit bump.
    auto theta = ref;
    theta.action_w[static_cast<std::size_t>(f) * cols + won] +=
        2.0 / static_cast<double>(multiplicity);

    const auto res = train::dpo_action_loss(theta, ref, {pair}, 0.1);
    CHECK(std::abs(res.margins[0] - 0.2) < 1e-9);
    CHECK(std::abs(res.loss - std::log1p(std::exp(-0.2))) < 1e-9);
    CHECK(std::abs(res.loss - 0.5981389) < 1e-6);

    // Bumping both tags by the same amount shifts all four log-probs together
    // and the loss falls back to ln 2.
    auto shifted = theta;
    shifted.action_w[static_cast<std::size_t>(f) * cols + lost] +=
        2.0 / static_cast<double>(multiplicity);
    const auto both = train::dpo_action_loss(shifted, ref, {pair}, 0.1);
    CHECK(std::abs(both.margins[0]) < 1e-9);
    CHECK(std::abs(both.loss - std::log(2.0)) < 1e-9);

    // Raising the winner and lowering the loser are the same margin, hence the
    // same loss: the objective reads the policy only through that gap.
    auto lowered = ref;
    lowered.action_w[static_cast<std::size_t>(f) * cols + lost] -=
        2.0 / static_cast<double>(multiplicity);
    const auto mirror = train::dpo_action_loss(lowered, ref, {pair}, 0.1);
    CHECK(std::abs(mirror.loss - res.loss) < 1e-12);
    CHECK(std::abs(mirror.margins[0] - res.margins[0]) < 1e-12);
}

TEST_CASE("finite differences confirm every loss gradient") {
    const auto& fx = collected_fixture();
    auto theta = random_params(fx.vocab, 31);
    const auto ref = random_params(fx.vocab, 47);

    SUBCASE("supervised loss") {
        const std::vector<search::SftStep> batch(fx.data.sft_steps.begin(),
                                                 fx.data.sft_steps.begin() + 8);
        const auto res = train::sft_loss_and_grad(theta, batch);
        check_gradient(theta.action_w, res.grad,
                       [&] { return train::sft_loss_and_grad(theta, batch).loss; }, 100);
    }

    SUBCASE("action preference loss") {
        const std::vector<search::ActionPrefPair> batch(fx.data.action_pairs.begin(),
                                                        fx.data.action_pairs.begin() + 6);
        const auto res = train::dpo_action_loss(theta, ref, batch, 0.1);
        check_gradient(theta.action_w, res.grad,
                       [&] { return train::dpo_action_loss(theta, ref, batch, 0.1).loss; }, 100);
    }

    SUBCASE("state preference loss") {
        const std::vector<search::StatePrefPair> batch(fx.data.state_pairs.begin(),
                                                       fx.data.state_pairs.begin() + 6);
        const auto mode = model::WorldModelMode::kActionConditioned;
        const auto res = train::dpo_state_loss(theta, ref, batch, 0.1, mode);
        check_gradient(theta.state_w, res.grad,
                       [&] { return train::dpo_state_loss(theta, ref, batch, 0.1, mode).loss; },
                       100);
    }
}

TEST_CASE("uniform heads start supervised training at the closed-form loss") {
    const auto& fx = collected_fixture();
    const auto zero = model::init_params(fx.vocab, 512);
    const auto res = train::sft_loss_and_grad(zero, fx.data.sft_steps);
    const double expect = std::log(static_cast<double>(fx.vocab.tags.size())) +
                          std::log(static_cast<double>(fx.vocab.verbs.size())) +
                          std::log(static_cast<double>(fx.vocab.objects.size()));
    CHECK(std::abs(res.loss - expect) < 1e-9);
}

TEST_CASE("full-batch gradient descent drives the supervised loss down monotonically") {
    const auto& fx = collected_fixture();
    REQUIRE(fx.data.sft_steps.size() >= 10);
    const std::vector<search::SftStep> batch(fx.data.sft_steps.begin(),
                                             fx.data.sft_steps.begin() + 10);
    auto params = model::init_params(fx.vocab, 512);
    double prev = train::sft_loss_and_grad(params, batch).loss;
    for (int step = 0; step < 50; ++step) {
        const auto res = train::sft_loss_and_grad(params, batch);
        for (std::size_t i = 0; i < params.action_w.size(); ++i) {
            params.action_w[i] -= 0.1 * res.grad[i];
        }
        const double next = train::sft_loss_and_grad(params, batch).loss;
        CHECK(next < prev);
        prev = next;
    }
}

TEST_CASE("multi-rejected pairs expand into uniformly weighted terms") {
    const auto& fx = collected_fixture();
    const auto theta = random_params(fx.vocab, 59);
    const auto ref = random_params(fx.vocab, 61);

    auto pair = fx.data.action_pairs.front();
    pair.rejected.clear();
    auto variant = pair.chosen;
    for (const auto& tag : fx.vocab.tags) {
        if (tag == pair.chosen.tag) { continue; }
        variant.tag = tag;
        pair.rejected.push_back(variant);
        if (pair.rejected.size() == 3) { break; }
    }
    REQUIRE(pair.rejected.size() == 3);

    auto single = pair;
    single.rejected.resize(1);

    const auto res = train::dpo_action_loss(theta, ref, {pair, single}, 0.1);
    REQUIRE(res.margins.size() == 4);

    const auto gap = [&](const model::ActionResponse& r) {
        return model::logprob_action(theta, pair.context, r) -
               model::logprob_action(ref, pair.context, r);
    };
    double manual = 0.0;
    std::vector<model::ActionResponse> terms = {pair.rejected[0], pair.rejected[1],
                                                pair.rejected[2], single.rejected[0]};
    for (std::size_t j = 0; j < terms.size(); ++j) {
        const double margin = 0.1 * (gap(pair.chosen) - gap(terms[j]));
        CHECK(std::abs(res.margins[j] - margin) < 1e-12);
        manual += (std::max(0.0, -margin) + std::log1p(std::exp(-std::abs(margin)))) / 4.0;
    }
    CHECK(std::abs(res.loss - manual) < 1e-12);
}

TEST_CASE("empty batches raise errors instead of zeros") {
    const auto& fx = collected_fixture();
    const auto params = model::init_params(fx.vocab, 512);
    const train::TrainConfig config;

    CHECK_THROWS_AS(train::sft_loss_and_grad(params, {}), train::EmptyBatch);
    CHECK_THROWS_AS(train::dpo_action_loss(params, params, {}, 0.1), train::EmptyBatch);
    CHECK_THROWS_AS(train::dpo_state_loss(params, params, {}, 0.1, config.mode),
                    train::EmptyBatch);

    auto stripped = fx.data.action_pairs.front();
    stripped.rejected.clear();
    CHECK_THROWS_AS(train::dpo_action_loss(params, params, {stripped}, 0.1), train::EmptyBatch);

    CHECK_THROWS_AS(train::d2po_step(params, params, {}, fx.data.state_pairs, config),
                    train::EmptyBatch);
    CHECK_THROWS_AS(train::d2po_step(params, params, fx.data.action_pairs, {}, config),
                    train::EmptyBatch);

    auto action_only = config;
    action_only.lambda = 0.0;
    CHECK_NOTHROW(train::d2po_step(params, params, fx.data.action_pairs, {}, action_only));

    auto no_sft = config;
    no_sft.sft_epochs = 1;
    CHECK_THROWS_AS(train::run_pipeline(fx.vocab, train::TrainData{}, no_sft), train::EmptyBatch);

    train::TrainData stateless;
    stateless.sft_steps = fx.data.sft_steps;
    stateless.action_pairs = fx.data.action_pairs;
    CHECK_THROWS_AS(train::run_pipeline(fx.vocab, stateless, config), train::EmptyBatch);
}

TEST_CASE("the total loss decomposes exactly at every lambda") {
    const auto& fx = collected_fixture();
    const auto theta = random_params(fx.vocab, 71);
    const auto ref = random_params(fx.vocab, 73);

    for (const double lambda : {0.0, 0.5, 1.0}) {
        CAPTURE(lambda);
        train::TrainConfig config;
        config.lambda = lambda;
        const auto report = train::evaluate_losses(theta, ref, fx.data.action_pairs,
                                                   fx.data.state_pairs, config);
        CHECK(std::abs(report.loss_total - (report.loss_action + lambda * report.loss_state)) <=
              1e-12);
        CHECK(report.pair_accuracy_action >= 0.0);
        CHECK(report.pair_accuracy_action <= 1.0);
        CHECK(report.action_margins.p10 <= report.action_margins.p25);
        CHECK(report.action_margins.p25 <= report.action_margins.p50);
        CHECK(report.action_margins.p50 <= report.action_margins.p75);
        CHECK(report.action_margins.p75 <= report.action_margins.p90);

        const auto [next, step_report] =
            train::d2po_step(theta, ref, fx.data.action_pairs, fx.data.state_pairs, config);
        CHECK(std::abs(step_report.loss_total -
                       (step_report.loss_action + lambda * step_report.loss_state)) <= 1e-12);
        CHECK(step_report.loss_action == report.loss_action);
    }
}

TEST_CASE("a zero-lambda step is bit-identical to the action-only update") {
    const auto& fx = collected_fixture();
    const auto theta = random_params(fx.vocab, 83);
    const auto ref = random_params(fx.vocab, 89);
    train::TrainConfig config;

    config.lambda = 0.0;
    const auto [plain, plain_report] =
        train::d2po_step(theta, ref, fx.data.action_pairs, fx.data.state_pairs, config);

    const auto action = train::dpo_action_loss(theta, ref, fx.data.action_pairs, config.beta);
    auto manual = theta;
    for (std::size_t i = 0; i < manual.action_w.size(); ++i) {
        manual.action_w[i] -= config.lr_dpo * action.grad[i];
    }
    CHECK(bits_equal(plain.action_w, manual.action_w));
    CHECK(bits_equal(plain.state_w, theta.state_w));
    CHECK(plain_report.loss_state == 0.0);

    config.lambda = 1.0;
    const auto [joint, joint_report] =
        train::d2po_step(theta, ref, fx.data.action_pairs, fx.data.state_pairs, config);
    CHECK(bits_equal(joint.action_w, plain.action_w));
    CHECK_FALSE(bits_equal(joint.state_w, theta.state_w));
    CHECK(joint_report.loss_state > 0.0);
}

TEST_CASE("state preference training raises the pair margin") {
    const auto& fx = collected_fixture();
    // Some collected pairs have matching descriptors on both sides (a failed
    // sibling leaves the state unchanged); pick one with a real gap.
    const auto it = std::find_if(fx.data.state_pairs.begin(), fx.data.state_pairs.end(),
                                 [](const search::StatePrefPair& p) {
                                     return !p.rejected_next.empty() &&
                                            p.rejected_next[0] != p.chosen_next;
                                 });
    REQUIRE(it != fx.data.state_pairs.end());
    auto pair = *it;
    pair.rejected_next.resize(1);

    const auto ref = random_params(fx.vocab, 97);
    auto theta = ref;
    const auto mode = model::WorldModelMode::kActionConditioned;
    double prev_margin = 0.0;
    double prev_loss = std::log(2.0);
    for (int step = 0; step < 100; ++step) {
        const auto res = train::dpo_state_loss(theta, ref, {pair}, 0.1, mode);
        if (step > 0) {
            CHECK(res.margins[0] > prev_margin);
            CHECK(res.loss < prev_loss);
        }
        prev_margin = res.margins[0];
        prev_loss = res.loss;
        for (std::size_t i = 0; i < theta.state_w.size(); ++i) {
            theta.state_w[i] -= 0.5 * res.grad[i];
        }
    }
    CHECK(prev_margin > 0.0);
}

TEST_CASE("mode mismatches are rejected in state training") {
    const auto& fx = collected_fixture();
    const auto params = model::init_params(fx.vocab, 512);

    CHECK_THROWS_AS(train::dpo_state_loss(params, params, fx.data.state_pairs, 0.1,
                                          model::WorldModelMode::kGoalDirected),
                    model::ModeMismatch);

    train::TrainConfig config;
    config.mode = model::WorldModelMode::kGoalDirected;
    CHECK_THROWS_AS(
        train::d2po_step(params, params, fx.data.action_pairs, fx.data.state_pairs, config),
        model::ModeMismatch);
}

TEST_CASE("margin statistics interpolate between order statistics") {
    const auto stats = train::margin_stats({5.0, 1.0, 4.0, 2.0, 3.0});
    CHECK(stats.mean == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(stats.p10 == doctest::Approx(1.4).epsilon(1e-12));
    CHECK(stats.p25 == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(stats.p50 == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(stats.p75 == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(stats.p90 == doctest::Approx(4.6).epsilon(1e-12));

    const auto one = train::margin_stats({7.0});
    CHECK(one.mean == 7.0);
    CHECK(one.p10 == 7.0);
    CHECK(one.p90 == 7.0);

    const auto none = train::margin_stats({});
    CHECK(none.mean == 0.0);
    CHECK(none.p50 == 0.0);
}

TEST_CASE("the pipeline is deterministic and freezes its reference") {
    const auto& fx = collected_fixture();
    train::TrainConfig config;
    config.sft_epochs = 2;
    config.dpo_epochs = 1;
    config.batch_size = 16;
    config.seed = 7;

    const auto first = train::run_pipeline(fx.vocab, fx.data, config);
    const auto second = train::run_pipeline(fx.vocab, fx.data, config);

    CHECK(bits_equal(first.sft_params.action_w, second.sft_params.action_w));
    CHECK(bits_equal(first.dpo_params.action_w, second.dpo_params.action_w));
    CHECK(bits_equal(first.d2po_params.action_w, second.d2po_params.action_w));
    CHECK(bits_equal(first.d2po_params.state_w, second.d2po_params.state_w));

    CHECK(bits_equal(first.ref_params.action_w, first.sft_params.action_w));
    CHECK(bits_equal(first.ref_params.state_w, first.sft_params.state_w));

    // The state head is zero through SFT, so the frozen reference scores next
    // states uniformly.
    const auto zeros = std::vector<double>(first.ref_params.state_w.size(), 0.0);
    CHECK(bits_equal(first.ref_params.state_w, zeros));

    // Disjoint heads walking identical schedules: the branches share the
    // action trace and differ only where the state loss writes.
    CHECK(bits_equal(first.dpo_params.action_w, first.d2po_params.action_w));
    CHECK(bits_equal(first.dpo_params.state_w, first.ref_params.state_w));
    CHECK_FALSE(bits_equal(first.d2po_params.state_w, first.ref_params.state_w));

    CHECK(first.sft_epoch_losses.size() == 2);
    CHECK(first.sft_epoch_losses.back() < first.sft_epoch_losses.front());
    CHECK(first.dpo_epoch_reports.size() == 1);
    CHECK(first.d2po_epoch_reports.size() == 1);

    // Preference updates moved the policy off the reference, so the training
    // loss dropped below the ln 2 starting point.
    CHECK(first.d2po_epoch_reports.back().loss_action < std::log(2.0));
    CHECK(first.d2po_epoch_reports.back().loss_state < std::log(2.0));
}

TEST_CASE("a zero-lambda pipeline collapses the two branches") {
    const auto& fx = collected_fixture();
    train::TrainConfig config;
    config.sft_epochs = 1;
    config.lambda = 0.0;
    config.seed = 11;

    const auto result = train::run_pipeline(fx.vocab, fx.data, config);
    CHECK(bits_equal(result.dpo_params.action_w, result.d2po_params.action_w));
    CHECK(bits_equal(result.dpo_params.state_w, result.d2po_params.state_w));
    REQUIRE_FALSE(result.d2po_epoch_reports.empty());
    CHECK(result.d2po_epoch_reports.back().loss_total ==
          result.d2po_epoch_reports.back().loss_action);
}

TEST_CASE("one preference epoch pushes most action margins positive") {
    const auto& fx = collected_fixture();
    const train::TrainConfig config;  // spec defaults: three SFT epochs, one DPO epoch

    const auto result = train::run_pipeline(fx.vocab, fx.data, config);
    const auto& report = result.d2po_epoch_reports.back();
    CHECK(report.pair_accuracy_action >= 0.9);
    CHECK(report.action_margins.p50 > 0.0);
    CHECK(report.pair_accuracy_state > 0.5);
}

}  // TEST_SUITE
