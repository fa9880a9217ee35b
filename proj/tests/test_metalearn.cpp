#include <gtest/gtest.h>

#include <cmath>

#include "autodiff/ops.hpp"
#include "common/error.hpp"
#include "metalearn/adam.hpp"
#include "metalearn/inner_loop.hpp"
#include "metalearn/meta_params.hpp"
#include "metalearn/meta_step.hpp"
#include "test_util.hpp"

using namespace pamela;
using pamela::testing_util::max_abs_diff;
using pamela::testing_util::rel_err;

namespace {

ParamSet single(double v) {
  ParamSet p;
  p.add("w", ad::Tensor({1}, {v}), 0);
  return p;
}

ParamSet scalar_set(double v) {
  ParamSet p;
  p.add("w", ad::Tensor::scalar(v), 0);
  return p;
}

std::vector<Task> sine_tasks(std::uint64_t seed, int count, std::size_t k = 10) {
  std::vector<Task> tasks;
  for (int i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(i)}));
    tasks.push_back(sample_sine_task(rng, k).as_task());
  }
  return tasks;
}

// Q ~ alpha * U(0.5, 1.5) and P ~ U(-0.5, 0.5) so identities are not checked at
// the symmetric starting point.
MetaParams randomized(MetaParams phi, Rng& rng) {
  for (auto& q : phi.q)
    q = q.transform([&](const ParamSet::Entry& e) {
      std::vector<double> v(e.tensor.values().begin(), e.tensor.values().end());
      for (auto& x : v) x *= rng.uniform(0.5, 1.5);
      return ad::Tensor(e.tensor.shape(), std::move(v));
    });
  for (auto& [j, p] : phi.p)
    p = p.transform([&](const ParamSet::Entry&) { return ad::Tensor::scalar(rng.uniform(-0.5, 0.5)); });
  return phi;
}

}  // namespace

TEST(SkipSteps, KeyRule) {
  EXPECT_EQ(skip_steps(5, 2), (std::vector<int>{2, 4}));
  EXPECT_TRUE(skip_steps(5, 7).empty());
  EXPECT_EQ(skip_steps(5, 1), (std::vector<int>{1, 2, 3, 4}));
  EXPECT_FALSE(is_skip_step(0, 1));
  EXPECT_FALSE(is_skip_step(3, kNoSkip));
}

TEST(InnerUpdate, PlainStep) {
  const ParamSet next = inner_update_step(0, 2, single(1.0), single(0.5), single(0.1), std::nullopt);
  EXPECT_DOUBLE_EQ(next.tensor(0)[0], 0.95);
}

TEST(InnerUpdate, SkipStep) {
  const ParamSet p = scalar_set(0.25);
  const ParamSet back = single(1.0);
  const ParamSet next = inner_update_step(2, 2, single(0.8), single(0.5), single(0.1), SkipInput{p, back});
  EXPECT_DOUBLE_EQ(next.tensor(0)[0], 0.75 * 0.75 + 0.25 * 1.0);
}

TEST(InnerUpdate, ZeroCouplingEqualsPlainStepExactly) {
  Rng rng(1);
  const ParamSet theta = init_params(MlpSpec{1, {5}, 1}, 2);
  const ParamSet g = init_params(MlpSpec{1, {5}, 1}, 3);
  const ParamSet q = init_params(MlpSpec{1, {5}, 1}, 4);
  const ParamSet back = init_params(MlpSpec{1, {5}, 1}, 5);
  const ParamSet zero = theta.transform([](const ParamSet::Entry&) { return ad::Tensor::scalar(0.0); });
  const ParamSet one = theta.transform([](const ParamSet::Entry&) { return ad::Tensor::scalar(1.0); });
  const ParamSet plain = inner_update_step(1, kNoSkip, theta, g, q, std::nullopt);
  EXPECT_TRUE(inner_update_step(2, 2, theta, g, q, SkipInput{zero, back}).bit_equal(plain));
  EXPECT_TRUE(inner_update_step(2, 2, theta, g, q, SkipInput{one, back}).bit_equal(back));
}

TEST(InnerUpdate, PerTensorQ) {
  const ParamSet next = inner_update_step(0, kNoSkip, single(1.0), single(0.5), scalar_set(0.1), std::nullopt);
  EXPECT_DOUBLE_EQ(next.tensor(0)[0], 0.95);
}

TEST(InnerUpdate, SkipPresenceMustMatchStep) {
  const ParamSet p = scalar_set(0.1);
  const ParamSet back = single(1.0);
  EXPECT_THROW(inner_update_step(1, 2, single(1), single(1), single(1), SkipInput{p, back}), ValueError);
  EXPECT_THROW(inner_update_step(2, 2, single(1), single(1), single(1), std::nullopt), ValueError);
}

TEST(InnerUpdate, ShapeMismatch) {
  ParamSet wide;
  wide.add("w", ad::Tensor({2}, {1, 2}), 0);
  EXPECT_THROW(inner_update_step(0, 2, single(1), wide, single(1), std::nullopt), ShapeError);
}

TEST(Adapt, TwoHandSteps) {
  // f(x) = x w + b at x = 0 with target 2, so the loss is (b - 2)^2.
  const MlpSpec spec{1, {}, 1};
  ParamSet theta;
  theta.add("layer0.weight", ad::Tensor({1, 1}, {0.0}), 0);
  theta.add("layer0.bias", ad::Tensor({1, 1}, {0.0}), 0);
  MetaParams phi = build_meta_params(spec, 2, 5, Algorithm::MamlQ, 0.25);
  Dataset d{ad::Tensor({1, 1}, {0.0}), ad::Tensor({1, 1}, {2.0}), {}};
  const AdaptResult r = adapt(spec, theta, phi, d, 2, {});
  EXPECT_DOUBLE_EQ(r.trajectory[1].tensor(1)[0], 1.0);
  EXPECT_DOUBLE_EQ(r.trajectory[2].tensor(1)[0], 1.5);
  EXPECT_EQ(r.inner_losses, (std::vector<double>{4.0, 1.0, 0.25}));
}

TEST(Adapt, ScalarPreconditionerIsPlainGradientDescent) {
  const MlpSpec spec{1, {40, 40}, 1};
  const ParamSet theta = init_params(spec, 5);
  const MetaParams phi = build_meta_params(spec, 5, 2, Algorithm::Pamela, 0.01);
  const Task task = sine_tasks(3, 1).front();
  const AdaptResult r = adapt(spec, theta, phi, task.train, 5, {});
  ParamSet manual = theta;
  for (int j = 0; j < 5; ++j) {
    ad::Graph g;
    const ParamSet leaves = manual.bind(g);
    const auto grads = ad::grad(task_loss(spec, leaves, task.train, LossKind::Mse), leaves.tensors());
    std::vector<ad::Tensor> next;
    for (std::size_t i = 0; i < manual.size(); ++i) next.push_back(ad::sub(manual.tensor(i), ad::scale(grads[i], 0.01)));
    manual = manual.with_tensors(next);
    EXPECT_LT(max_abs_diff(manual, r.trajectory[static_cast<std::size_t>(j) + 1]), 1e-12) << "step " << j;
  }
}

TEST(Adapt, TelescopingIdentityOnRandomInstances) {
  Rng rng(31337);
  const MlpSpec spec{1, {8, 8}, 1};
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int w = 1 + static_cast<int>(rng.below(3));
    const int n = w + 1 + static_cast<int>(rng.below(4));
    const auto skips = skip_steps(n, w);
    const int j = skips[rng.below(skips.size())];
    const ParamSet theta = init_params(spec, rng.next());
    MetaParams phi = randomized(build_meta_params(spec, n, w, Algorithm::Pamela, 0.01), rng);
    // The closed form starts from theta_{j-w}, so step j-w itself must be plain.
    if (is_skip_step(j - w, w))
      phi.p.at(j - w) = phi.p.at(j - w).transform([](const ParamSet::Entry&) { return ad::Tensor::scalar(0.0); });
    const Task task = sine_tasks(rng.next(), 1).front();
    AdaptOptions options;
    options.record_gradients = true;
    const AdaptResult r = adapt(spec, theta, phi, task.train, n, options);

    const ParamSet& base = r.trajectory[static_cast<std::size_t>(j - w)];
    const ParamSet& actual = r.trajectory[static_cast<std::size_t>(j + 1)];
    const ParamSet& p = *phi.p_at(j);
    for (std::size_t t = 0; t < theta.size(); ++t) {
      const double keep = 1.0 - p.tensor(t).item();
      for (std::size_t i = 0; i < theta.tensor(t).numel(); ++i) {
        double acc = 0.0;
        for (int s = 0; s <= w; ++s) {
          const auto step = static_cast<std::size_t>(j - s);
          acc += phi.q_at(j - s).tensor(t)[i] * r.gradients[step].tensor(t)[i];
        }
        const double closed = base.tensor(t)[i] - keep * acc;
        ASSERT_LT(rel_err(closed, actual.tensor(t)[i], 1e-6), 1e-9) << "trial " << trial << " n=" << n << " w=" << w;
      }
    }
    ++checked;
  }
  EXPECT_EQ(checked, 100);
}

TEST(Adapt, SpecExampleFiveStepsIntervalTwo) {
  // theta_5 - theta_2 = -(1 - P_4) (Q_4 g_4 + Q_3 g_3 + Q_2 g_2) when step 2 is plain.
  Rng rng(8);
  const MlpSpec spec{1, {40, 40}, 1};
  const ParamSet theta = init_params(spec, 4);
  MetaParams phi = randomized(build_meta_params(spec, 5, 2, Algorithm::Pamela, 0.01), rng);
  phi.p.at(2) = phi.p.at(2).transform([](const ParamSet::Entry&) { return ad::Tensor::scalar(0.0); });
  AdaptOptions options;
  options.record_gradients = true;
  const AdaptResult r = adapt(spec, theta, phi, sine_tasks(2, 1).front().train, 5, options);
  for (std::size_t t = 0; t < theta.size(); ++t) {
    const double keep = 1.0 - phi.p.at(4).tensor(t).item();
    for (std::size_t i = 0; i < theta.tensor(t).numel(); ++i) {
      double acc = 0.0;
      for (int s = 2; s <= 4; ++s) acc += phi.q_at(s).tensor(t)[i] * r.gradients[static_cast<std::size_t>(s)].tensor(t)[i];
      const double closed = r.trajectory[2].tensor(t)[i] - keep * acc;
      EXPECT_LT(rel_err(r.trajectory[5].tensor(t)[i], closed, 1e-6), 1e-9);
    }
  }
}

TEST(Adapt, RequiresMatchingStepCount) {
  const MlpSpec spec{1, {4}, 1};
  const MetaParams phi = build_meta_params(spec, 3, 2, Algorithm::Pamela, 0.01);
  EXPECT_THROW(adapt(spec, init_params(spec, 0), phi, sine_tasks(1, 1).front().train, 2, {}), ValueError);
}

TEST(Adapt, NonFiniteLossNamesTheStep) {
  const MlpSpec spec{1, {4}, 1};
  MetaParams phi = build_meta_params(spec, 4, 2, Algorithm::MamlQ, 1e150);
  try {
    adapt(spec, init_params(spec, 0), phi, sine_tasks(1, 1).front().train, 4, {});
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("step"), std::string::npos);
  }
}

TEST(MetaLoss, NoAdaptationIsSumOfValidationLosses) {
  const MlpSpec spec{1, {6}, 1};
  const ParamSet theta = init_params(spec, 1);
  MetaParams phi = build_meta_params(spec, 1, 1, Algorithm::Maml, 0.01);
  phi.steps = 0;
  phi.q.clear();
  const auto tasks = sine_tasks(4, 3);
  ad::Graph g;
  const double total = meta_loss(spec, theta, phi, tasks, LossKind::Mse, g).item();
  double expected = 0.0;
  for (const auto& t : tasks) expected += task_loss(spec, theta, t.val, LossKind::Mse).item();
  EXPECT_DOUBLE_EQ(total, expected);
}

TEST(MetaLoss, SingleTaskIsItsValidationLoss) {
  const MlpSpec spec{1, {6}, 1};
  const ParamSet theta = init_params(spec, 1);
  const MetaParams phi = build_meta_params(spec, 2, 1, Algorithm::Pamela, 0.01);
  const auto tasks = sine_tasks(5, 1);
  ad::Graph g;
  const double total = meta_loss(spec, theta, phi, tasks, LossKind::Mse, g).item();
  const AdaptResult r = adapt(spec, theta, phi, tasks[0].train, 2, {});
  EXPECT_DOUBLE_EQ(total, task_loss(spec, r.theta_n, tasks[0].val, LossKind::Mse).item());
}

TEST(MetaGradient, MatchesFiniteDifferences) {
  Rng rng(12);
  const MlpSpec spec{1, {4}, 1};
  const ParamSet theta = init_params(spec, 3);
  const MetaParams phi = randomized(build_meta_params(spec, 3, 2, Algorithm::Pamela, 0.01), rng);
  const auto tasks = sine_tasks(6, 2);
  const MetaGradient g = compute_meta_gradient(spec, theta, phi, tasks, {});

  auto loss = [&](const ParamSet& th, const MetaParams& ph) {
    ad::Graph graph;
    return meta_loss(spec, th, ph, tasks, LossKind::Mse, graph).item();
  };
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t t = 0; t < theta.size(); ++t)
    for (std::size_t i = 0; i < theta.tensor(t).numel(); ++i) {
      auto shifted = [&](double d) {
        auto ts = theta.tensors();
        std::vector<double> v(ts[t].values().begin(), ts[t].values().end());
        v[i] += d;
        ts[t] = ad::Tensor(ts[t].shape(), v);
        return loss(theta.with_tensors(ts), phi);
      };
      worst = std::max(worst, rel_err(g.theta_grad.tensor(t)[i], (shifted(h) - shifted(-h)) / (2 * h), 1e-6));
    }
  const ParamSet flat = phi.trainable();
  for (std::size_t t = 0; t < flat.size(); ++t)
    for (std::size_t i = 0; i < flat.tensor(t).numel(); ++i) {
      auto shifted = [&](double d) {
        auto ts = flat.tensors();
        std::vector<double> v(ts[t].values().begin(), ts[t].values().end());
        v[i] += d;
        ts[t] = ad::Tensor(ts[t].shape(), v);
        return loss(theta, phi.with_trainable(flat.with_tensors(ts)));
      };
      worst = std::max(worst, rel_err(g.phi_grad.tensor(t)[i], (shifted(h) - shifted(-h)) / (2 * h), 1e-6));
    }
  EXPECT_LT(worst, 1e-5);
}

TEST(MetaGradient, IndependentOfThreadCount) {
  const MlpSpec spec{1, {10, 10}, 1};
  const ParamSet theta = init_params(spec, 3);
  const MetaParams phi = build_meta_params(spec, 5, 2, Algorithm::Pamela, 0.01);
  const auto tasks = sine_tasks(7, 4);
  MetaGradientOptions one, three;
  three.threads = 3;
  const MetaGradient a = compute_meta_gradient(spec, theta, phi, tasks, one);
  const MetaGradient b = compute_meta_gradient(spec, theta, phi, tasks, three);
  EXPECT_TRUE(a.theta_grad.bit_equal(b.theta_grad));
  EXPECT_TRUE(a.phi_grad.bit_equal(b.phi_grad));
  EXPECT_EQ(a.meta_loss, b.meta_loss);
}

TEST(MetaGradient, FirstOrderAveragesFinalGradients) {
  const MlpSpec spec{1, {6}, 1};
  const ParamSet theta = init_params(spec, 3);
  const MetaParams phi = build_meta_params(spec, 3, 2, Algorithm::FoMaml, 0.01);
  const auto tasks = sine_tasks(9, 3);
  MetaGradientOptions o;
  o.style = MetaGradientStyle::FirstOrder;
  const MetaGradient g = compute_meta_gradient(spec, theta, phi, tasks, o);
  std::vector<double> expected(theta.tensor(0).numel(), 0.0);
  for (const auto& t : tasks) {
    const AdaptResult r = adapt(spec, theta, phi, t.train, 3, {});
    ad::Graph graph;
    const ParamSet leaves = r.theta_n.bind(graph);
    const auto gs = ad::grad(task_loss(spec, leaves, t.val, LossKind::Mse), leaves.tensors());
    for (std::size_t i = 0; i < expected.size(); ++i) expected[i] += gs[0][i] / 3.0;
  }
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(g.theta_grad.tensor(0)[i], expected[i], 1e-14);
}

TEST(BuildMetaParams, PamelaLayout) {
  const MlpSpec spec{1, {40, 40}, 1};
  const MetaParams phi = build_meta_params(spec, 5, 2, Algorithm::Pamela, 0.01);
  ASSERT_EQ(phi.q.size(), 5u);
  for (const auto& q : phi.q) {
    EXPECT_EQ(q.total_count(), 1761u);
    for (const auto& e : q)
      for (double v : e.tensor.values()) EXPECT_EQ(v, 0.01);
  }
  ASSERT_EQ(phi.p.size(), 2u);
  EXPECT_EQ(phi.p.begin()->first, 2);
  EXPECT_EQ(phi.p.rbegin()->first, 4);
  for (const auto& [j, p] : phi.p) {
    EXPECT_EQ(p.size(), 6u);
    for (const auto& e : p) EXPECT_EQ(e.tensor.item(), 0.0);
  }
  EXPECT_TRUE(phi.q_trainable);
  EXPECT_TRUE(phi.p_trainable);
}

TEST(BuildMetaParams, LargeIntervalHasNoSkips) {
  EXPECT_TRUE(build_meta_params(MlpSpec{1, {4}, 1}, 5, 7, Algorithm::Pamela, 0.01).p.empty());
}

TEST(BuildMetaParams, VariantStructure) {
  const MlpSpec spec{1, {4}, 1};
  const MetaParams maml = build_meta_params(spec, 5, 2, Algorithm::Maml, 0.01);
  EXPECT_FALSE(maml.q_trainable);
  EXPECT_TRUE(maml.p.empty());
  EXPECT_TRUE(maml.trainable().empty());
  const MetaParams sgd = build_meta_params(spec, 5, 2, Algorithm::MetaSgd, 0.01);
  EXPECT_EQ(sgd.steps, 1);
  EXPECT_TRUE(sgd.q_trainable);
  const MetaParams shared = build_meta_params(spec, 5, 2, Algorithm::MamlQSharedMulti, 0.01);
  EXPECT_EQ(shared.q.size(), 1u);
  EXPECT_EQ(&shared.q_at(0), &shared.q_at(4));
  const MetaParams p_only = build_meta_params(spec, 5, 2, Algorithm::MamlP, 0.01);
  EXPECT_FALSE(p_only.q_trainable);
  EXPECT_TRUE(p_only.p_trainable);
  EXPECT_EQ(p_only.p.size(), 2u);
  const MetaParams per_tensor = build_meta_params(spec, 3, 2, Algorithm::MamlQ, 0.01, QGranularity::PerTensor);
  EXPECT_EQ(per_tensor.q[0].tensor(0).rank(), 0u);
}

TEST(BuildMetaParams, RejectsBadArguments) {
  EXPECT_THROW(build_meta_params(MlpSpec{1, {4}, 1}, 0, 2, Algorithm::Pamela, 0.01), ValueError);
  EXPECT_THROW(build_meta_params(MlpSpec{1, {4}, 1}, 3, 0, Algorithm::Pamela, 0.01), ValueError);
}

TEST(MetaParamsJson, RoundTripIsBitExact) {
  Rng rng(2);
  const MlpSpec spec{1, {7}, 1};
  for (auto a : all_algorithms()) {
    const MetaParams phi = randomized(build_meta_params(spec, 5, 2, a, 0.01), rng);
    const MetaParams back = meta_params_from_json(Json::parse(to_json(phi).dump()));
    EXPECT_TRUE(back.bit_equal(phi)) << to_string(a);
  }
}

TEST(Variants, NamesRoundTrip) {
  for (auto a : all_algorithms()) EXPECT_EQ(parse_algorithm(to_string(a)), a);
  EXPECT_EQ(parse_algorithm("Meta-SGD"), Algorithm::MetaSgd);
  EXPECT_EQ(parse_algorithm("PAMELA"), Algorithm::Pamela);
  EXPECT_THROW(parse_algorithm("imaml"), ValueError);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  ParamSet p = single(0.0);
  AdamState s = AdamState::zeros_like(p);
  const ParamSet next = adam_update(p, single(1.0), s, 0.001);
  EXPECT_NEAR(next.tensor(0)[0], -0.001 / (1.0 + 1e-8), 1e-18);
  EXPECT_EQ(s.t, 1);
  EXPECT_GE(s.v.tensor(0)[0], 0.0);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  const ParamSet p = init_params(MlpSpec{1, {4}, 1}, 1);
  AdamState s = AdamState::zeros_like(p);
  const ParamSet zero = p.transform([](const ParamSet::Entry& e) { return ad::Tensor::zeros(e.tensor.shape()); });
  EXPECT_TRUE(adam_update(p, zero, s, 0.001).bit_equal(p));
}

TEST(Adam, StateJsonRoundTrip) {
  ParamSet p = init_params(MlpSpec{1, {4}, 1}, 1);
  AdamState s = AdamState::zeros_like(p);
  p = adam_update(p, p, s, 0.01);
  const AdamState back = adam_state_from_json(Json::parse(to_json(s).dump()));
  EXPECT_TRUE(back.m.bit_equal(s.m));
  EXPECT_TRUE(back.v.bit_equal(s.v));
  EXPECT_EQ(back.t, 1);
}

TEST(MetaStep, ZeroRateLeavesEverythingUnchanged) {
  const MlpSpec spec{1, {6}, 1};
  const ParamSet theta = init_params(spec, 1);
  const MetaParams phi = build_meta_params(spec, 3, 2, Algorithm::Pamela, 0.01);
  AdamState at = AdamState::zeros_like(theta), ap = AdamState::zeros_like(phi.trainable());
  const MetaStepResult r = meta_step(spec, theta, phi, sine_tasks(1, 2), at, ap, 0.0, {});
  EXPECT_TRUE(r.theta.bit_equal(theta));
  EXPECT_TRUE(r.phi.bit_equal(phi));
}

TEST(MetaStep, FrozenPamelaEqualsMaml) {
  const MlpSpec spec{1, {40, 40}, 1};
  ParamSet theta_a = init_params(spec, 21), theta_b = theta_a;
  MetaParams frozen = build_meta_params(spec, 5, 2, Algorithm::Pamela, 0.01);
  frozen.q_trainable = false;
  frozen.p_trainable = false;
  MetaParams maml = build_meta_params(spec, 5, 2, Algorithm::Maml, 0.01);
  AdamState aa = AdamState::zeros_like(theta_a), ab = aa, pa, pb;
  for (int it = 0; it < 5; ++it) {
    const auto tasks = sine_tasks(100 + static_cast<std::uint64_t>(it), 4);
    auto ra = meta_step(spec, theta_a, frozen, tasks, aa, pa, 0.001, {});
    auto rb = meta_step(spec, theta_b, maml, tasks, ab, pb, 0.001, {});
    theta_a = ra.theta;
    theta_b = rb.theta;
    ASSERT_LE(max_abs_diff(theta_a, theta_b), 1e-12) << "iteration " << it;
    EXPECT_TRUE(ra.phi.bit_equal(frozen));
  }
}

TEST(MetaStep, SingleStepSharedPamelaEqualsMetaSgd) {
  const MlpSpec spec{1, {40, 40}, 1};
  ParamSet theta_a = init_params(spec, 22), theta_b = theta_a;
  MetaParams pamela = build_meta_params(spec, 1, 1, Algorithm::Pamela, 0.01);
  pamela.shared_q = true;
  pamela.p_trainable = false;
  MetaParams sgd = build_meta_params(spec, 1, 1, Algorithm::MetaSgd, 0.01);
  AdamState ta = AdamState::zeros_like(theta_a), tb = ta;
  AdamState pa = AdamState::zeros_like(pamela.trainable()), pb = AdamState::zeros_like(sgd.trainable());
  for (int it = 0; it < 5; ++it) {
    const auto tasks = sine_tasks(200 + static_cast<std::uint64_t>(it), 4);
    auto ra = meta_step(spec, theta_a, pamela, tasks, ta, pa, 0.001, {});
    auto rb = meta_step(spec, theta_b, sgd, tasks, tb, pb, 0.001, {});
    theta_a = ra.theta;
    theta_b = rb.theta;
    pamela = ra.phi;
    sgd = rb.phi;
    ASSERT_LE(max_abs_diff(theta_a, theta_b), 1e-12);
    ASSERT_LE(max_abs_diff(pamela.q_at(0), sgd.q_at(0)), 1e-12);
  }
}

TEST(MetaStep, ReptileMovesTowardAdaptedWeights) {
  const MlpSpec spec{1, {6}, 1};
  const ParamSet theta = init_params(spec, 3);
  const MetaParams phi = build_meta_params(spec, 3, 2, Algorithm::Reptile, 0.01);
  const auto tasks = sine_tasks(11, 2);
  AdamState at = AdamState::zeros_like(theta), ap;
  MetaGradientOptions o;
  o.style = MetaGradientStyle::Reptile;
  const double beta = 0.5;
  const MetaStepResult r = meta_step(spec, theta, phi, tasks, at, ap, beta, o);
  const AdaptResult a0 = adapt(spec, theta, phi, tasks[0].train, 3, {});
  const AdaptResult a1 = adapt(spec, theta, phi, tasks[1].train, 3, {});
  for (std::size_t t = 0; t < theta.size(); ++t)
    for (std::size_t i = 0; i < theta.tensor(t).numel(); ++i) {
      const double avg = 0.5 * ((a0.theta_n.tensor(t)[i] - theta.tensor(t)[i]) + (a1.theta_n.tensor(t)[i] - theta.tensor(t)[i]));
      EXPECT_NEAR(r.theta.tensor(t)[i], theta.tensor(t)[i] + beta * avg, 1e-15);
    }
  EXPECT_EQ(at.t, 0);
}

TEST(MetaStep, NonFiniteGradientLeavesAdamUntouched) {
  const MlpSpec spec{1, {6}, 1};
  const ParamSet theta = init_params(spec, 3);
  const MetaParams phi = build_meta_params(spec, 3, 2, Algorithm::MamlQ, 1e200);
  AdamState at = AdamState::zeros_like(theta), ap = AdamState::zeros_like(phi.trainable());
  EXPECT_THROW(meta_step(spec, theta, phi, sine_tasks(1, 2), at, ap, 0.001, {}), NumericalError);
  EXPECT_EQ(at.t, 0);
  EXPECT_EQ(ap.t, 0);
}
