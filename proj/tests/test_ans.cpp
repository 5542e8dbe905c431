#include "doctest.h"
#include "support.hpp"

using namespace ansrec;
using namespace ansrec::testing;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) v(k++) = x;
  return v;
}

double naive_sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Vector random_vec(Rng& rng, Eigen::Index d, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Vector v(d);
  for (Eigen::Index k = 0; k < d; ++k) v(k) = n(rng);
  return v;
}

}  // namespace

TEST_CASE("compute_gate examples") {
  const Matrix eye = Matrix::Identity(2, 2);
  const Vector g = compute_gate(vec({1, 1}), vec({1, 1}), eye, eye);
  CHECK(g(0) == doctest::Approx(0.7310585786).epsilon(1e-9));
  CHECK(g(1) == doctest::Approx(0.7310585786).epsilon(1e-9));

  const Matrix zero = Matrix::Zero(3, 3);
  const Vector h = compute_gate(vec({1, 2, 3}), vec({4, 5, 6}), zero, zero);
  CHECK(h == Vector::Constant(3, 0.5));
}

TEST_CASE("compute_gate matches a dense loop") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const ParamStore p = init_params(2, 2, 1 + seed % 8, seed);
    const Vector u = p.user_emb.row(0).transpose(), n = p.item_emb.row(1).transpose();
    const Vector g = compute_gate(u, n, p);
    for (Eigen::Index i = 0; i < p.dim(); ++i) {
      double a = 0, b = 0;
      for (Eigen::Index k = 0; k < p.dim(); ++k) {
        a += p.w_item(i, k) * n(k);
        b += p.w_user(i, k) * u(k);
      }
      CHECK(g(i) == doctest::Approx(naive_sigmoid(a * b)).epsilon(1e-14));
      CHECK(g(i) > 0.0);
      CHECK(g(i) < 1.0);
    }
  }
}

TEST_CASE("disentangle and positive_factors") {
  const FactorPair f = disentangle(vec({2, 4}), vec({0.5, 0.5}));
  CHECK(f.hard == vec({1, 2}));
  CHECK(f.easy == vec({1, 2}));
  const PositiveFactors pf = positive_factors(vec({2, 4}), vec({0.5, 0.5}));
  CHECK(pf.prime == vec({1, 2}));
  CHECK(pf.dprime == vec({1, 2}));

  const Vector n = vec({3, -7, 0.25});
  const FactorPair g = disentangle(n, Vector::Constant(3, 0.99));
  const PositiveFactors pg = positive_factors(n, Vector::Constant(3, 0.99));
  for (Eigen::Index k = 0; k < 3; ++k) {
    CHECK(g.easy(k) == doctest::Approx(0.01 * n(k)).epsilon(1e-12));
    CHECK(pg.dprime(k) == doctest::Approx(0.01 * n(k)).epsilon(1e-12));
  }

  Rng rng = derive_rng(5, "t");
  std::uniform_real_distribution<double> unit(1e-6, 1 - 1e-6);
  for (int trial = 0; trial < 200; ++trial) {
    const Vector v = random_vec(rng, 6, 3.0);
    Vector gate(6);
    for (auto& x : gate) x = unit(rng);
    const FactorPair fp = disentangle(v, gate);
    CHECK(((fp.hard + fp.easy) - v).cwiseAbs().maxCoeff() <= 1e-12);
    const PositiveFactors pp = positive_factors(v, gate);
    CHECK(((pp.prime + pp.dprime) - v).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("contrastive and disentanglement losses") {
  std::vector<FactorPair> same{{vec({.5, .5}), vec({1, 2}), vec({1, 2}), vec({2, 4})}};
  CHECK(contrastive_loss(vec({0.3, -1}), same) == 0.0);

  std::vector<FactorPair> one{{vec({.5, .5}), vec({1, 0}), vec({0, 1}), vec({1, 1})}};
  CHECK(contrastive_loss(vec({1, 0}), one) == -1.0);

  std::vector<PositiveFactors> match{{vec({1, 0}), vec({1, 0})}};
  CHECK(disentanglement_loss(match, one) == 0.0);
  std::vector<PositiveFactors> off{{vec({2, 1}), vec({1, 0})}};
  CHECK(disentanglement_loss(off, one) == 2.0);

  std::vector<FactorPair> none;
  CHECK_THROWS(contrastive_loss(vec({1, 0}), none));

  Rng rng = derive_rng(6, "t");
  for (int trial = 0; trial < 100; ++trial) {
    const Vector u = random_vec(rng, 5), p = random_vec(rng, 5);
    std::vector<FactorPair> fs;
    std::vector<PositiveFactors> ps;
    const int m = 1 + trial % 4;
    for (int j = 0; j < m; ++j) {
      const Vector gate = (random_vec(rng, 5).array().tanh() * 0.49 + 0.5).matrix();
      fs.push_back(disentangle(random_vec(rng, 5), gate));
      ps.push_back(positive_factors(p, gate));
    }
    double c = 0, d = 0;
    for (int j = 0; j < m; ++j) {
      for (int k = 0; k < 5; ++k) {
        c += u(k) * fs[j].easy(k) - u(k) * fs[j].hard(k);
        const double diff = ps[j].prime(k) - fs[j].hard(k);
        d += diff * diff + ps[j].dprime(k) * fs[j].easy(k);
      }
    }
    CHECK(contrastive_loss(u, fs) == doctest::Approx(c / m).epsilon(1e-12));
    CHECK(disentanglement_loss(ps, fs) == doctest::Approx(d / m).epsilon(1e-12));
  }
}

TEST_CASE("augment_direction") {
  CHECK(augment_direction(vec({0.5, -0.2, 0}), Vector::Zero(3)) == vec({1, -1, 0}));
  CHECK(augment_direction(vec({0.7, 3}), vec({0.7, 3})) == Vector::Zero(2));
  Rng rng = derive_rng(7, "t");
  for (int trial = 0; trial < 50; ++trial) {
    Vector x = random_vec(rng, 6);
    x(trial % 6) = 0.0;
    const Vector s = augment_direction(x, Vector::Zero(6));
    CHECK(augment_direction(s, Vector::Zero(6)) == s);
    for (double v : s) CHECK((v == -1.0 || v == 0.0 || v == 1.0));
  }
  CHECK_THROWS(augment_direction(vec({1}), vec({1, 2})));
}

TEST_CASE("augment_magnitude margin") {
  Rng rng = derive_rng(8, "t");
  RowVector w(2);
  w << 1, 1;
  const Magnitude m = augment_magnitude(vec({1, 0}), vec({1, 0}), w, {}, rng);
  CHECK(m.margin == doctest::Approx(0.7310585786).epsilon(1e-9));
  CHECK_FALSE(m.denominator.clamped);

  const Magnitude c = augment_magnitude(vec({1e-10, 0}), vec({1e-10, 0}), w, {}, rng);
  CHECK(c.denominator.clamped);
  CHECK(c.denominator.value == 1e-8);
  CHECK(c.margin == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(c.margin < 1.0);

  const Magnitude neg = augment_magnitude(vec({-1e-10, 0}), vec({1e-10, 0}), w, {}, rng);
  CHECK(neg.margin > 0.0);
  CHECK(neg.delta.norm() <= neg.margin);

  // Large noise gets shrunk onto the ball.
  const Magnitude big = augment_magnitude(vec({1, 0}), vec({1, 0}), w, {5.0, 1e-8}, rng);
  CHECK(big.rescaled);
  CHECK(big.delta.norm() == doctest::Approx(big.margin).epsilon(1e-12));
  CHECK(big.delta.norm() <= big.margin * (1 + 1e-15));
}

TEST_CASE("noise is uniform on [0, 0.1] (Kolmogorov-Smirnov, alpha 0.01)") {
  // margin sigmoid(1) = 0.73 >= 0.1 * sqrt(4), so nothing is rescaled.
  RowVector w = RowVector::Ones(4);
  const Vector hard = vec({1, 0, 0, 0});
  Rng rng = derive_rng(9, "t");
  std::vector<double> xs;
  for (int draw = 0; draw < 10000; ++draw) {
    const Magnitude m = augment_magnitude(hard, hard, w, {}, rng);
    REQUIRE_FALSE(m.rescaled);
    xs.push_back(m.delta(draw % 4));
  }
  std::sort(xs.begin(), xs.end());
  double d = 0;
  const double n = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double cdf = std::clamp(xs[i] / 0.1, 0.0, 1.0);
    d = std::max({d, (i + 1) / n - cdf, cdf - i / n});
  }
  CHECK(d < 1.628 / std::sqrt(n));
  CHECK(xs.front() >= 0.0);
  CHECK(xs.back() <= 0.1);
}

TEST_CASE("augment") {
  const FactorPair f = disentangle(vec({1, -2, 3}), vec({0.2, 0.5, 0.9}));
  CHECK(augment(f, Vector::Zero(3), vec({1, -1, 0})) == f.source);
  CHECK(augment(f, vec({0.1, 0.2, 0.3}), Vector::Zero(3)) == f.source);
  Rng rng = derive_rng(10, "t");
  for (int trial = 0; trial < 100; ++trial) {
    const Vector n = random_vec(rng, 5);
    const Vector gate = (random_vec(rng, 5).array().tanh() * 0.49 + 0.5).matrix();
    const FactorPair fp = disentangle(n, gate);
    const Vector delta = random_vec(rng, 5).cwiseAbs() * 0.05;
    const Vector dir = augment_direction(random_vec(rng, 5), Vector::Zero(5));
    const Vector a = augment(fp, delta, dir);
    for (Eigen::Index k = 0; k < 5; ++k)
      CHECK(std::abs(a(k) - ((fp.easy(k) + delta(k) * dir(k)) + fp.hard(k))) <= 1e-12);
  }
}

TEST_CASE("augmentation moves easy coordinates toward p''") {
  Rng rng = derive_rng(11, "t");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const Vector pdd = random_vec(rng, 6), easy = random_vec(rng, 6);
    const Vector dir = augment_direction(pdd, easy);
    for (Eigen::Index k = 0; k < 6; ++k) {
      if (dir(k) == 0.0) continue;
      const double gap = std::abs(pdd(k) - easy(k));
      const double delta = unit(rng) * gap;
      CHECK(std::abs(pdd(k) - (easy(k) + delta * dir(k))) <= gap);
    }
  }
}

TEST_CASE("select_final") {
  std::vector<AugmentedNegative> a(2);
  a[0].base_item = 3;
  a[0].score_after = 0.5;
  a[0].gain = 0.4;
  a[1].base_item = 8;
  a[1].score_after = 0.9;
  a[1].gain = 0.0;
  CHECK(select_final(a, 0.5) == 1);
  CHECK(select_final(a, 1.0) == 0);
  std::swap(a[0], a[1]);
  CHECK(select_final(a, 1.0) == 1);
  CHECK_THROWS(select_final(a, 1.5));
  CHECK_THROWS(select_final({}, 0.5));
}

TEST_CASE("epsilon 0 selection is DNS over augmented vectors") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    ParamStore p = init_params(3, 12, 4, seed);
    p.w_mag *= 5.0;
    Rng rng = derive_rng(seed, "t");
    const InteractionSet s = random_interactions(3, 12, 2, rng);
    const CandidateSet cs = draw_candidates(1, s.user_items[1][0], s, 1 + seed % 6, rng);
    const AnsSample out = ans_sample(cs, p, {0.0, {0.3, 1e-8}}, rng);
    const Vector u = p.user_emb.row(1).transpose();
    std::size_t best = 0;
    for (std::size_t j = 1; j < out.augmented.size(); ++j) {
      const double sj = score(u, out.augmented[j].aug_vec), sb = score(u, out.augmented[best].aug_vec);
      if (sj > sb || (sj == sb && out.augmented[j].base_item < out.augmented[best].base_item)) best = j;
    }
    CHECK(out.output.final_item == out.augmented[best].base_item);
    CHECK(out.output.final_vec == out.augmented[best].aug_vec);
  }
}

TEST_CASE("ans_sample singleton and DNS reduction") {
  const ParamStore p = init_params(2, 10, 4, 1);
  Rng rng = derive_rng(12, "t");
  const AnsSample one = ans_sample({0, 0, {6}}, p, {}, rng);
  CHECK(one.output.final_item == 6);
  CHECK(one.output.final_vec == one.augmented[0].aug_vec);
  CHECK(one.output.provenance == SamplerKind::ans);

  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const ParamStore q = init_params(2, 10, 4, seed);
    const CandidateSet cs{1, 0, {1, 2, 3, 4, 5, 6, 7, 8, 9}};
    Rng r = derive_rng(seed, "t");
    const AnsSample s = ans_sample(cs, q, {0.5, {0.0, 1e-8}}, r);
    const SamplerOutput d = dns_select(q.user_emb.row(1).transpose(), cs, q);
    CHECK(s.output.final_item == d.final_item);
    CHECK(s.output.final_vec == Vector(q.item_emb.row(d.final_item).transpose()));
  }
}

TEST_CASE("ans_sample agrees with a straight-line reference") {
  // 2 users, 3 items, d = 4; user 0 likes item 0, candidates are items 1 and 2.
  ParamStore p = init_params(2, 3, 4, 21);
  p.w_item *= 3.0;
  p.w_user *= 3.0;
  p.w_mag *= 4.0;
  const double noise_high = 0.4;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng r1 = derive_rng(seed, "t");
    const AnsSample got = ans_sample({0, 0, {1, 2}}, p, {0.5, {noise_high, 1e-8}}, r1);

    Rng r2 = derive_rng(seed, "t");
    std::uniform_real_distribution<double> noise(0.0, noise_high);
    double u[4], pv[4], best_val = 0, lc = 0, ld = 0;
    double best_vec[4] = {};
    int best_item = -1;
    for (int k = 0; k < 4; ++k) u[k] = p.user_emb(0, k), pv[k] = p.item_emb(0, k);
    for (int item : {1, 2}) {
      double n[4], gate[4], hard[4], easy[4], pp[4], pd[4], dir[4], delta[4], aug[4];
      for (int k = 0; k < 4; ++k) n[k] = p.item_emb(item, k);
      for (int i = 0; i < 4; ++i) {
        double a = 0, b = 0;
        for (int k = 0; k < 4; ++k) a += p.w_item(i, k) * n[k], b += p.w_user(i, k) * u[k];
        gate[i] = naive_sigmoid(a * b);
        hard[i] = n[i] * gate[i];
        easy[i] = n[i] - hard[i];
        pp[i] = pv[i] * gate[i];
        pd[i] = pv[i] - pp[i];
        const double diff = pd[i] - easy[i];
        dir[i] = diff > 0 ? 1 : diff < 0 ? -1 : 0;
        lc += (u[i] * easy[i] - u[i] * hard[i]) / 2;
        ld += ((pp[i] - hard[i]) * (pp[i] - hard[i]) + pd[i] * easy[i]) / 2;
      }
      double t = 0, norm = 0;
      for (int k = 0; k < 4; ++k) t += p.w_mag(k) * hard[k] * pp[k];
      if (std::abs(t) < 1e-8) t = t < 0 ? -1e-8 : 1e-8;
      const double margin = naive_sigmoid(1.0 / t);
      for (int k = 0; k < 4; ++k) delta[k] = noise(r2), norm += delta[k] * delta[k];
      norm = std::sqrt(norm);
      double before = 0, after = 0;
      for (int k = 0; k < 4; ++k) {
        if (norm > margin) delta[k] *= margin / norm;
        aug[k] = (easy[k] + delta[k] * dir[k]) + hard[k];
        before += u[k] * n[k];
        after += u[k] * aug[k];
      }
      const double val = after + 0.5 * (after - before);
      if (best_item < 0 || val > best_val) {
        best_item = item, best_val = val;
        std::copy(aug, aug + 4, best_vec);
      }
    }
    CHECK(got.output.final_item == best_item);
    for (int k = 0; k < 4; ++k) CHECK(got.output.final_vec(k) == doctest::Approx(best_vec[k]).epsilon(1e-12));
    CHECK(got.output.aux_contrastive == doctest::Approx(lc).epsilon(1e-12));
    CHECK(got.output.aux_disentangle == doctest::Approx(ld).epsilon(1e-12));
  }
}

TEST_CASE("ans_sample invariants") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Instance inst = make_instance(seed, SamplerKind::dns, 1, 20, 6, 1, 0, 0, 0);
    ParamStore p = inst.params;
    p.w_mag *= static_cast<double>(seed % 7);
    Rng rng = derive_rng(seed, "t");
    const CandidateSet cs = draw_candidates(0, inst.batch.pairs[0].second, inst.train, 6, rng);
    const AnsSample s = ans_sample(cs, p, {0.5, {0.5, 1e-8}}, rng);
    for (std::size_t j = 0; j < cs.size(); ++j) {
      const auto& f = s.factors[j];
      const auto& a = s.augmented[j];
      CHECK(((f.hard + f.easy) - f.source).cwiseAbs().maxCoeff() <= 1e-12);
      // Gate entries are sigmoids of unbounded products and may round to 0 or 1.
      CHECK(f.gate.minCoeff() >= 0.0);
      CHECK(f.gate.maxCoeff() <= 1.0);
      CHECK(a.delta.norm() <= a.margin);
      CHECK(a.margin > 0.0);
      CHECK(a.margin < 1.0);
      CHECK(a.delta.minCoeff() >= 0.0);
      CHECK(std::abs(a.gain - (a.score_after - a.score_before)) <= 1e-10);
      for (double v : a.direction) CHECK((v == -1.0 || v == 0.0 || v == 1.0));
      CHECK(((a.aug_vec - ((f.easy + a.delta.cwiseProduct(a.direction)) + f.hard)).cwiseAbs().maxCoeff()) <= 1e-12);
    }
  }
}

TEST_CASE("hns_transform") {
  ParamStore p = ParamStore::zeros(1, 1, 2);
  const Vector n = vec({1.5, -3});
  const Vector u = vec({1, 1});
  CHECK(hns_transform(n, u, p) == 0.5 * n);
  p.w_item = Matrix::Identity(2, 2) * 100.0;
  p.w_user = Matrix::Identity(2, 2) * 100.0;
  const Vector big = hns_transform(vec({1, 1}), u, p);
  CHECK(big(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(big(1) == doctest::Approx(1.0).epsilon(1e-12));

  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const ParamStore q = init_params(1, 1, 5, seed);
    const Vector uu = q.user_emb.row(0).transpose(), nn = q.item_emb.row(0).transpose();
    CHECK(hns_transform(nn, uu, q) == disentangle(nn, compute_gate(uu, nn, q)).hard);
  }
}
